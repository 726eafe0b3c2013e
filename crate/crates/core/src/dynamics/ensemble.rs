use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FockVector;

pub fn pure_density(state: &FockVector) -> DMatrix<Complex64> {
    let v = nalgebra::DVector::from_column_slice(state.amplitudes());
    &v * v.adjoint()
}

/// Uniform average of the trajectory projectors.
pub fn density_matrix(states: &[FockVector]) -> Result<DMatrix<Complex64>> {
    let first = states.first().ok_or_else(|| Error::Protocol("empty ensemble".into()))?;
    let dim = first.basis().dim();
    let mut rho = DMatrix::zeros(dim, dim);
    for s in states {
        first.check_same_basis(s)?;
        let v = nalgebra::DVector::from_column_slice(s.amplitudes());
        rho += &v * v.adjoint();
    }
    Ok(rho / Complex64::new(states.len() as f64, 0.0))
}

/// `½ ||a - b||_1` for Hermitian `a`, `b`.
pub fn trace_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let d = a - b;
    let d = (&d + d.adjoint()) * Complex64::new(0.5, 0.0);
    0.5 * d.symmetric_eigen().eigenvalues.iter().map(|x| x.abs()).sum::<f64>()
}

pub fn trace_distance_to_pure(rho: &DMatrix<Complex64>, state: &FockVector) -> f64 {
    trace_distance(rho, &pure_density(state))
}
