//! Simulated homodyne detection and the unit-circle phase signals built from it.

mod budget;
mod grid;
mod signal;

pub use budget::{
    omega_eta0_bound, omega_eta1_bound, omega_m_lower_bound, omega_margin, omega_shots, validate_omega,
    validate_xi, xi_constants, xi_eta0_bound, xi_eta1_bound, xi_m_lower_bound, xi_shots, OmegaBudget, XiBudget,
};
pub use grid::{
    hermite_functions, HermiteTable, Quadrature, QuadratureDistribution, QuadratureSampler, TruncatedSum,
    DEFAULT_DX, SUPPORT_LIMIT,
};
pub use signal::{
    closed_form_b, estimate_b_from_ensemble, estimate_truncated_b, signal_for_omega, signal_for_xi, PhaseSignal, SignalMeta,
    TruncatedEstimate, XiSignal,
};
