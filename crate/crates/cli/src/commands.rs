//! Subcommand bodies. Each returns the process exit code.

use crate::config::{ConfigError, RunConfig};
use hjmm_core::norms::integral_embedding_slack;
use hjmm_core::quadrature::trapezoid;
use hjmm_core::{
    classify_growth, default_checkpoints, drift_identity_check, field_b, martingale_test, path_seed,
    strong_residual, uniqueness_contraction_check, weighted_norms, DriftResidual, GrowthClassification,
    JumpPath, LevyExponent, MarketError, MartingaleReport, ModelConfig, ModelError, ResidualError, SolverReport,
    SolverStatus, StrongResidual, TabulatedExponent, UniquenessError, UniquenessSettings, Verdict,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_EXPLOSION: u8 = 2;
pub const EXIT_INDETERMINATE: u8 = 3;
pub const EXIT_DIVERGED: u8 = 4;
pub const EXIT_VERIFY_FAILED: u8 = 5;
pub const EXIT_MC_FAILED: u8 = 6;

/// Largest admissible `|z|` in the martingale check.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Residual(#[from] ResidualError),
    #[error(transparent)]
    Uniqueness(#[from] UniquenessError),
    #[error("classifier verdict is {0:?}; rerun with --allow-explosive to solve anyway")]
    Refused(Verdict),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub allow_explosive: bool,
}

struct Run {
    config: RunConfig,
    model: ModelConfig,
    out: PathBuf,
    seed: u64,
}

impl Run {
    fn new(config: RunConfig, overrides: &Overrides) -> Self {
        let model = config.model();
        let out = overrides.out.clone().unwrap_or_else(|| config.outputs.dir.clone());
        let seed = overrides.seed.unwrap_or(config.mc.master_seed);
        Self {
            config,
            model,
            out,
            seed,
        }
    }

    fn classification(&self) -> GrowthClassification {
        classify_growth(&self.model.levy, self.model.volatility.lambda_bar(), self.model.grid.t_star)
    }

    /// Tabulated exponent when it can be built, direct quadrature otherwise.
    fn exponent(&self) -> Box<dyn LevyExponent> {
        match TabulatedExponent::new(&self.model.levy) {
            Ok(table) => Box::new(table),
            Err(e) => {
                log::warn!("exponent table unavailable ({e}); using direct quadrature");
                Box::new(self.model.levy.clone())
            }
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let err = |path: &Path, source| CliError::Write {
            path: path.to_path_buf(),
            source,
        };
        std::fs::create_dir_all(&self.out).map_err(|e| err(&self.out, e))?;
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| err(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
        text.push('\n');
        self.write(name, &text)
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<Run, CliError> {
    Ok(Run::new(RunConfig::load(path)?, overrides))
}

pub fn classify(path: &Path, overrides: &Overrides) -> Result<u8, CliError> {
    let run = load(path, overrides)?;
    let c = run.classification();
    run.write_json("classification.json", &c)?;
    println!("{}", serde_json::to_string(&c).expect("classification serializes"));
    Ok(match c.verdict {
        Verdict::ExistenceLogGrowth => EXIT_OK,
        Verdict::ExplosionCubicLog => EXIT_EXPLOSION,
        Verdict::Indeterminate => EXIT_INDETERMINATE,
    })
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    classification: &'a GrowthClassification,
    master_seed: u64,
    path_seed: u64,
    n_jumps: usize,
    report: &'a SolverReport,
}

pub fn solve(path: &Path, overrides: &Overrides) -> Result<u8, CliError> {
    let run = load(path, overrides)?;
    let classification = run.classification();
    if classification.verdict != Verdict::ExistenceLogGrowth && !overrides.allow_explosive {
        return Err(CliError::Refused(classification.verdict));
    }
    let exponent = run.exponent();
    let seed = path_seed(run.seed, 0);
    let path = run.model.simulate(seed)?;
    let report = run.model.solve_on(&path, exponent.as_ref(), None)?;
    log::info!("solver {:?} after {} iterations", report.status, report.iterations);
    run.write_json(
        "report.json",
        &SolveOutput {
            classification: &classification,
            master_seed: run.seed,
            path_seed: seed,
            n_jumps: path.times.len(),
            report: &report,
        },
    )?;
    if run.config.outputs.field_csv {
        run.write("field_standard.csv", &report.final_field.to_standard_csv("f"))?;
        run.write("field_musiela.csv", &report.final_field.to_musiela_csv("r"))?;
    }
    if run.config.outputs.path_json {
        run.write_json("path.json", &path)?;
    }
    Ok(match report.status {
        SolverStatus::Converged => EXIT_OK,
        SolverStatus::Exploded | SolverStatus::MaxIterations => EXIT_DIVERGED,
    })
}

#[derive(Serialize)]
struct Suite {
    name: &'static str,
    pass: bool,
    detail: Value,
}

pub fn verify(path: &Path, overrides: &Overrides) -> Result<u8, CliError> {
    let run = load(path, overrides)?;
    let model = &run.model;
    let grid = model.grid;
    let exponent = run.exponent();
    let jump_path = model.simulate(path_seed(run.seed, 0))?;
    let report = model.solve_on(&jump_path, exponent.as_ref(), None)?;
    let converged = report.status == SolverStatus::Converged;
    let mut suites = Vec::new();

    suites.push(Suite {
        name: "monotone_iterates",
        pass: converged && report.is_monotone(1e-12),
        detail: json!({
            "status": report.status,
            "iterations": report.iterations,
            "min_increment": report.min_increment_trace.iter().copied().fold(f64::INFINITY, f64::min),
        }),
    });

    suites.push(embedding_suite(&report)?);
    suites.push(exponent_suite(model)?);

    let b = field_b(&model.volatility, &jump_path, &grid).map_err(ModelError::from)?;
    let mut b_min = f64::INFINITY;
    for i in 0..=grid.n_t() {
        for j in i..=grid.n_maturity() {
            b_min = b_min.min(b.at(i, j));
        }
    }
    suites.push(Suite {
        name: "b_positivity",
        pass: b_min > 0.0,
        detail: json!({ "min": b_min }),
    });

    // both suites need a solution
    let unsolved = |name| Suite {
        name,
        pass: false,
        detail: json!({ "reason": "solver did not converge from zero" }),
    };
    if model.volatility.time_only {
        suites.push(if converged {
            residual_suite(model, exponent.as_ref(), &jump_path, &report)?
        } else {
            unsolved("strong_residual")
        });
    }
    suites.push(if converged {
        uniqueness_suite(model, exponent.as_ref(), &jump_path, &report, &b)?
    } else {
        unsolved("uniqueness_two_start")
    });

    let pass = suites.iter().all(|s| s.pass);
    for s in &suites {
        log::info!("suite {}: {}", s.name, if s.pass { "pass" } else { "FAIL" });
    }
    run.write_json("verify.json", &json!({ "pass": pass, "suites": suites }))?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// `sup r ≤ r(0) + ‖r‖_{H¹γ}/√γ` and `∫ r ≤ ‖r‖_{L²γ}/√γ` on every slice.
fn embedding_suite(report: &SolverReport) -> Result<Suite, CliError> {
    let f = &report.final_field;
    let grid = f.grid;
    let root = grid.gamma.sqrt();
    let mut sup_gap = f64::NEG_INFINITY;
    let mut integral_gap = f64::NEG_INFINITY;
    for i in 0..=grid.n_t() {
        let r = f.musiela_slice(i);
        let n = weighted_norms(f, grid.time(i)).map_err(|e| ModelError::Assumption {
            label: "grid",
            detail: e.to_string(),
        })?;
        let slack = integral_embedding_slack(n.l2_gamma, r.len() - 1, grid.delta, grid.gamma);
        sup_gap = sup_gap.max(n.sup - r[0] - n.h1_gamma / root);
        integral_gap = integral_gap.max(trapezoid(&r, grid.delta) - n.l2_gamma / root - slack);
    }
    let scale = f.sup().abs().max(1.0);
    Ok(Suite {
        name: "norm_embeddings",
        pass: sup_gap <= 1e-12 * scale && integral_gap <= 1e-12 * scale,
        detail: json!({ "max_sup_gap": sup_gap, "max_integral_gap": integral_gap }),
    })
}

/// `J'` nondecreasing on log-spaced arguments in `[0, 1e4]`.
fn exponent_suite(model: &ModelConfig) -> Result<Suite, CliError> {
    let spec = &model.levy;
    let mut prev = spec.first(0.0).map_err(ModelError::from)?;
    let mut worst: f64 = 0.0;
    for k in 1..=200 {
        let z = (k as f64 * (1e4f64).ln_1p() / 200.0).exp_m1();
        let d = spec.first(z).map_err(ModelError::from)?;
        worst = worst.max((prev - d) / prev.abs().max(1.0));
        prev = d;
    }
    Ok(Suite {
        name: "exponent_derivative_monotone",
        pass: worst <= 1e-10,
        detail: json!({ "max_relative_decrease": worst }),
    })
}

/// Strong form on the config grid and on the halved grid, same path.
fn residual_suite(
    model: &ModelConfig,
    exponent: &dyn LevyExponent,
    path: &JumpPath,
    report: &SolverReport,
) -> Result<Suite, CliError> {
    let coarse = strong_residual(&report.final_field, &model.volatility, exponent, &model.initial_curve, path)?;
    let fine_model = ModelConfig {
        grid: model.grid.refined(),
        ..model.clone()
    };
    let fine_report = fine_model.solve_on(path, exponent, None)?;
    let fine = strong_residual(&fine_report.final_field, &model.volatility, exponent, &model.initial_curve, path)?;
    let time = refinement(coarse.time_mean, fine.time_mean, coarse.cells_used.min(fine.cells_used) > 0);
    let derivative = refinement(coarse.derivative_mean, fine.derivative_mean, true);
    let pass = fine_report.status == SolverStatus::Converged
        && coarse.jump_max <= 1e-10
        && fine.jump_max <= 1e-10
        && time.pass
        && derivative.pass;
    #[derive(Serialize)]
    struct Detail {
        coarse: StrongResidual,
        fine: StrongResidual,
        time_refinement: Refinement,
        derivative_refinement: Refinement,
    }
    Ok(Suite {
        name: "strong_residual",
        pass,
        detail: serde_json::to_value(Detail {
            coarse,
            fine,
            time_refinement: time,
            derivative_refinement: derivative,
        })
        .expect("residual serializes"),
    })
}

#[derive(Serialize)]
struct Refinement {
    /// False when every cell of a grid holds a jump.
    measurable: bool,
    ratio: Option<f64>,
    pass: bool,
}

/// Residual shrinks by at least 1.5 per halving, or is at roundoff on both grids.
fn refinement(coarse: f64, fine: f64, measurable: bool) -> Refinement {
    let ratio = coarse / fine;
    Refinement {
        measurable,
        ratio: (measurable && ratio.is_finite()).then_some(ratio),
        pass: !measurable || (coarse <= 1e-12 && fine <= 1e-12) || ratio >= 1.5,
    }
}

/// Solves again from an initial field above the first solution.
fn uniqueness_suite(
    model: &ModelConfig,
    exponent: &dyn LevyExponent,
    path: &JumpPath,
    report: &SolverReport,
    b: &hjmm_core::Field,
) -> Result<Suite, CliError> {
    let high = report.final_field.map(|v| 2.0 * v + 0.1);
    let other = model.solve_on(path, exponent, Some(&high))?;
    let settings = UniquenessSettings::default();
    let name = "uniqueness_two_start";
    if other.status != SolverStatus::Converged {
        return Ok(Suite {
            name,
            pass: false,
            detail: json!({ "reason": "second start did not converge", "status": other.status }),
        });
    }
    match uniqueness_contraction_check(
        &report.final_field,
        &other.final_field,
        exponent,
        &model.volatility,
        &model.initial_curve,
        b,
        &settings,
    ) {
        Ok(u) => Ok(Suite {
            name,
            pass: u.pass,
            detail: serde_json::to_value(&u).expect("uniqueness report serializes"),
        }),
        Err(UniquenessError::SecondMomentInfinite) => {
            let distance = report.final_field.sup_distance(&other.final_field);
            Ok(Suite {
                name,
                pass: distance < settings.tol,
                detail: json!({
                    "sup_distance": distance,
                    "note": "infinite second moment: no contraction constant",
                }),
            })
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct DriftCheck {
    t: f64,
    maturity: f64,
    #[serde(flatten)]
    residual: DriftResidual,
    pass: bool,
}

#[derive(Serialize)]
struct McSummary<'a> {
    master_seed: u64,
    z_limit: f64,
    max_excluded_fraction: f64,
    pass: bool,
    report: &'a MartingaleReport,
    drift_identity: Vec<DriftCheck>,
}

pub fn mc(path: &Path, overrides: &Overrides) -> Result<u8, CliError> {
    let run = load(path, overrides)?;
    let model = &run.model;
    let exponent = run.exponent();
    let checkpoints = default_checkpoints(&model.grid);
    let report = martingale_test(model, exponent.as_ref(), run.config.mc.n_paths, run.seed, &checkpoints)?;
    run.write("zscores.csv", &report.to_csv())?;

    // integrated drift condition on the first path, base time t
    let first = model.run_path(exponent.as_ref(), path_seed(run.seed, 0))?;
    let delta = model.grid.delta;
    let mut drift_identity = Vec::new();
    for &(t, maturity) in &checkpoints {
        let residual = drift_identity_check(exponent.as_ref(), &model.volatility, &first.report.final_field, t, t, maturity)?;
        drift_identity.push(DriftCheck {
            t,
            maturity,
            pass: residual.residual <= 10.0 * delta * delta * residual.left.abs() + 1e-14,
            residual,
        });
    }
    let pass = report.passes(Z_LIMIT);
    run.write_json(
        "mc_summary.json",
        &McSummary {
            master_seed: run.seed,
            z_limit: Z_LIMIT,
            max_excluded_fraction: hjmm_core::market::MAX_EXCLUDED_FRACTION,
            pass,
            report: &report,
            drift_identity,
        },
    )?;
    if report.degenerate {
        log::warn!("degenerate run: {} usable paths", report.n_used);
    }
    Ok(if pass { EXIT_OK } else { EXIT_MC_FAILED })
}
