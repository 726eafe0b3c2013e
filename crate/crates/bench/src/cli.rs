//! Command-line surface. Flags override the matching config fields; the
//! `BOSONIC_BENCH_OUT` environment variable overrides only the output
//! directory, and `--out` beats it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::bounds::verify_bounds;
use crate::config::{ExperimentConfig, Preset, ValidationError};
use crate::output::{self, pretty};
use crate::sweep::sweep;
use crate::trials::run_trials;

pub const OUT_ENV: &str = "BOSONIC_BENCH_OUT";

pub const EXIT_OK: u8 = 0;
/// `verify-bounds` ran and at least one suite failed.
pub const EXIT_SUITE_FAILED: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "bosonic-bench", version, about = "Learning campaigns, accuracy sweeps and bound checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run independent learning trials at one target ε.
    Learn {
        config: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        common: Overrides,
    },
    /// Run trials over a list of ε and fit the evolution-time scaling.
    Sweep {
        config: PathBuf,
        /// Comma separated, e.g. `0.1,0.05,0.02`.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Skip the fixed-time repeated-sampling control.
        #[arg(long)]
        no_baseline: bool,
        #[command(flatten)]
        common: Overrides,
    },
    /// Run the truncation, r-slope, Hoeffding and selection-rule suites.
    VerifyBounds {
        config: PathBuf,
        #[command(flatten)]
        common: Overrides,
    },
    /// Print a starter config.
    GenConfig {
        #[arg(long, value_enum, default_value = "single")]
        preset: Preset,
        /// Write here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// SPAM strength.
    #[arg(long)]
    pub spam: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = self.trials {
            cfg.campaign.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.campaign.seed = v;
        }
        if let Some(v) = self.cutoff {
            cfg.protocol.cutoff = v;
        }
        if let Some(v) = self.spam {
            cfg.protocol.spam_strength = v;
        }
        if let Some(v) = self.threads {
            cfg.campaign.threads = v;
        }
        let env = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty());
        if let Some(dir) = self.out.clone().or(env.map(PathBuf::from)) {
            cfg.output.dir = dir.to_string_lossy().into_owned();
        }
    }
}

fn load(path: &Path, o: &Overrides, edit: impl FnOnce(&mut ExperimentConfig)) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    o.apply(&mut cfg);
    edit(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &ExperimentConfig, files: Vec<(&str, String)>) -> anyhow::Result<()> {
    let files: Vec<_> = files
        .into_iter()
        .filter(|(name, _)| if name.ends_with(".json") { cfg.output.json } else { cfg.output.csv })
        .collect();
    for p in output::write_files(Path::new(&cfg.output.dir), &files)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.3e}"))
}

pub fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Learn { config, epsilon, common } => {
            let cfg = load(&config, &common, |c| {
                if let Some(e) = epsilon {
                    c.protocol.epsilon = e;
                }
            })?;
            let start = Instant::now();
            let set = run_trials(&cfg, cfg.protocol.epsilon)?;
            let wall = start.elapsed().as_secs_f64();
            let r = set.class_rmse();
            println!(
                "epsilon {:.3e}  trials {}  rmse omega {} xi {} re_h {} im_h {}  mean T {:.4e}",
                set.epsilon,
                set.records.len(),
                fmt_opt(r.omega),
                fmt_opt(r.xi),
                fmt_opt(r.re_h),
                fmt_opt(r.im_h),
                set.mean_evolution_time()
            );
            let json = pretty(&output::learn_json(&cfg, &set, wall));
            let csv = output::trials_csv(&cfg, std::slice::from_ref(&set))?;
            emit(&cfg, vec![("report.json", json), ("trials.csv", csv)])?;
            Ok(EXIT_OK)
        }
        Command::Sweep { config, epsilons, no_baseline, common } => {
            let cfg = load(&config, &common, |c| {
                if let Some(e) = epsilons {
                    c.sweep.epsilons = e;
                }
                if no_baseline {
                    c.sweep.baseline = false;
                }
            })?;
            let start = Instant::now();
            let res = sweep(&cfg, &cfg.sweep.epsilons, cfg.sweep.baseline)?;
            let wall = start.elapsed().as_secs_f64();
            for p in &res.points {
                let base = p.baseline.as_ref().map_or("-".into(), |b| b.samples.to_string());
                println!(
                    "epsilon {:.3e}  rmse max {:.3e}  mean T {:.4e}  baseline samples {base}",
                    p.epsilon, p.rmse_max, p.mean_evolution_time
                );
            }
            let show = |name: &str, f: Option<bosonic_learn::stats::LinearFit>| match f {
                Some(f) => println!("{name} slope {:.3} ± {:.3}", f.slope, f.slope_ci95),
                None => println!("{name} slope unavailable"),
            };
            show("time", res.time_fit);
            if cfg.sweep.baseline {
                show("baseline", res.baseline_fit);
            }
            let json = pretty(&output::sweep_json(&cfg, &res, wall));
            let scaling = output::scaling_csv(&cfg, &res, cfg.sweep.baseline)?;
            let trials = output::trials_csv(&cfg, &res.trial_sets)?;
            emit(&cfg, vec![("report.json", json), ("scaling.csv", scaling), ("trials.csv", trials)])?;
            Ok(EXIT_OK)
        }
        Command::VerifyBounds { config, common } => {
            let cfg = load(&config, &common, |_| {})?;
            let start = Instant::now();
            let rep = verify_bounds(&cfg)?;
            let wall = start.elapsed().as_secs_f64();
            for s in &rep.suites {
                let failed = s.checks.iter().filter(|c| !c.passed).count();
                let verdict = if s.passed { "PASS" } else { "FAIL" };
                println!("{:<16} {verdict}  ({} checks, {failed} failed)", s.suite, s.checks.len());
            }
            let json = pretty(&output::bounds_json(&cfg, &rep, wall));
            let csv = output::bounds_csv(&cfg, &rep)?;
            emit(&cfg, vec![("bounds.json", json), ("bounds.csv", csv)])?;
            Ok(if rep.passed() { EXIT_OK } else { EXIT_SUITE_FAILED })
        }
        Command::GenConfig { preset, output } => {
            let text = ExperimentConfig::preset(preset).to_toml();
            match output {
                Some(p) => std::fs::write(&p, text)?,
                None => print!("{text}"),
            }
            Ok(EXIT_OK)
        }
    }
}

/// Exit code for an error returned by [`run`].
pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ValidationError>().is_some() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}
