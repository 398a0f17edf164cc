//! Bond prices from solved forward-rate fields and the no-arbitrage checks.

use crate::grid::{Field, GridSpec};
use crate::levy::{LevyError, LevyExponent};
use crate::path::{path_seed, JumpPath};
use crate::pipeline::{ModelConfig, ModelError};
use crate::quadrature;
use crate::solver::SolverStatus;
use crate::volatility::VolatilitySpec;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("checkpoint ({t}, {maturity}) is not a grid node with 0 <= t <= T* and t <= T <= T_max")]
    BadCheckpoint { t: f64, maturity: f64 },
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("n_paths must be positive")]
    NoPaths,
}

/// `P(t_i, T_j)`, `P̂(t_i, T_j)` and `r(t_i)` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BondSurface {
    pub grid: GridSpec,
    /// `P(t_i, T_j) = exp(−∫_{t_i}^{T_j} f(t_i, u) du)`; `NaN` for `T_j < t_i`.
    pub prices: Array2<f64>,
    /// `P̂(t_i, T_j) = exp(−∫₀^{T_j} f(t_i, u) du)` with the flat extension.
    pub discounted: Array2<f64>,
    /// `r(t_i) = f(t_i, t_i)`.
    pub short_rate: Vec<f64>,
}

impl BondSurface {
    pub fn price(&self, i: usize, j: usize) -> Option<f64> {
        (j >= i).then(|| self.prices[[i, j]])
    }

    /// `exp(−∫₀^{t_i} r(s) ds) · P(t_i, T_j)`, the product form of `P̂`.
    pub fn discounted_product_form(&self, i: usize, j: usize) -> f64 {
        let discount = quadrature::trapezoid(&self.short_rate[..=i], self.grid.delta);
        (-discount).exp() * self.prices[[i, j]]
    }
}

/// Integrates the field in the maturity variable by the trapezoid rule.
pub fn bond_surface(field: &Field) -> BondSurface {
    let grid = field.grid;
    let (nt, nm) = grid.shape();
    let mut prices = Array2::from_elem((nt, nm), f64::NAN);
    let mut discounted = Array2::zeros((nt, nm));
    let half = 0.5 * grid.delta;
    for i in 0..nt {
        let mut acc = 0.0;
        discounted[[i, 0]] = 1.0;
        for j in 1..nm {
            acc += half * (field.values[[i, j - 1]] + field.values[[i, j]]);
            discounted[[i, j]] = (-acc).exp();
        }
        let mut acc = 0.0;
        prices[[i, i]] = 1.0;
        for j in i + 1..nm {
            acc += half * (field.values[[i, j - 1]] + field.values[[i, j]]);
            prices[[i, j]] = (-acc).exp();
        }
    }
    BondSurface {
        grid,
        prices,
        discounted,
        short_rate: (0..nt).map(|i| field.values[[i, i]]).collect(),
    }
}

/// Both sides of the integrated drift condition at a base time `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftResidual {
    /// `∫ₜᵀ J'(∫ₛᵘ σ(s,v) dv) σ(s,u) du`
    pub left: f64,
    /// `J(∫ₛᵀ σ dv) − J(∫ₛᵗ σ dv)`
    pub right: f64,
    pub residual: f64,
}

/// Checks `∫ₜᵀ α(s,u) du = J(∫ₛᵀσ) − J(∫ₛᵗσ)` with `α = J'(∫ₛᵘσ) σ` and
/// `σ(s, u) = λ(s, u) f(s, u)` taken from the field row at time `s`.
pub fn drift_identity_check<E: LevyExponent + ?Sized>(
    exponent: &E,
    vol: &VolatilitySpec,
    field: &Field,
    s: f64,
    t: f64,
    maturity: f64,
) -> Result<DriftResidual, MarketError> {
    let grid = field.grid;
    let bad = MarketError::BadCheckpoint { t, maturity };
    let i = grid.index_of(s).map_err(|_| bad.clone())?;
    let k = grid.index_of(t).map_err(|_| bad.clone())?;
    let j = grid.index_of(maturity).map_err(|_| bad.clone())?;
    if i > grid.n_t() || k < i || j < k {
        return Err(bad);
    }
    let sigma: Vec<f64> = (i..=j)
        .map(|m| vol.standard(s, grid.maturity(m)) * field.values[[i, m]])
        .collect();
    let inner = quadrature::cumulative_trapezoid(&sigma, grid.delta);
    let alpha: Vec<f64> = inner
        .iter()
        .zip(&sigma)
        .map(|(z, sg)| Ok(exponent.first(*z)? * sg))
        .collect::<Result<_, LevyError>>()?;
    let left = quadrature::trapezoid(&alpha[k - i..], grid.delta);
    let right = exponent.value(inner[j - i])? - exponent.value(inner[k - i])?;
    Ok(DriftResidual {
        left,
        right,
        residual: (left - right).abs(),
    })
}

/// Standard errors below this are treated as a deterministic `P̂`.
pub const STD_ERROR_FLOOR: f64 = 1e-12;

/// Largest share of excluded paths for which a run still counts.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

/// `{0.25, 0.5, 0.75}·T* × {0.5, 0.75, 1}·T_max`, snapped to grid nodes.
pub fn default_checkpoints(grid: &GridSpec) -> Vec<(f64, f64)> {
    let snap = |v: f64| (v / grid.delta).round() * grid.delta;
    let mut out = Vec::new();
    for ft in [0.25, 0.5, 0.75] {
        for fm in [0.5, 0.75, 1.0] {
            let t = snap(ft * grid.t_star);
            out.push((t, snap(fm * grid.t_max).max(t)));
        }
    }
    out
}

/// Statistics of `P̂(t, T)` across paths at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStat {
    pub t: f64,
    pub maturity: f64,
    /// `P(0, T)` of the grid initial curve.
    pub initial_price: f64,
    pub mean: f64,
    /// `mean − P(0, T)`.
    pub deviation: f64,
    pub std_error: Option<f64>,
    /// `deviation / std_error`, with the standard error floored at [`STD_ERROR_FLOOR`].
    pub z: Option<f64>,
    /// Mean of `P̂(t, T) − P(0, T)·M(t, T)` where `M` is the discrete
    /// stochastic exponential with `E[M] = 1`: same expectation as
    /// `deviation`, smaller variance.
    pub adjusted_deviation: f64,
    pub adjusted_std_error: Option<f64>,
    pub adjusted_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub n_paths: u64,
    pub n_used: u64,
    /// Paths whose solve failed or did not converge.
    pub n_excluded: u64,
    pub excluded_fraction: f64,
    /// Fewer than two usable paths: no standard errors.
    pub degenerate: bool,
    /// Exclusions within [`MAX_EXCLUDED_FRACTION`] and at least one usable path.
    pub valid: bool,
    pub max_abs_z: Option<f64>,
    pub mean_abs_deviation: f64,
    pub mean_abs_adjusted_deviation: f64,
    pub checkpoints: Vec<CheckpointStat>,
}

impl MartingaleReport {
    pub fn passes(&self, z_limit: f64) -> bool {
        self.valid && !self.degenerate && self.max_abs_z.is_some_and(|z| z <= z_limit)
    }

    /// `t,T,P0,mean,deviation,std_error,z,adjusted_deviation,adjusted_std_error,adjusted_z`
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
        let mut out = String::from("t,T,P0,mean,deviation,std_error,z,adjusted_deviation,adjusted_std_error,adjusted_z\n");
        for c in &self.checkpoints {
            out.push_str(&format!(
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{},{},{:.10e},{},{}\n",
                c.t,
                c.maturity,
                c.initial_price,
                c.mean,
                c.deviation,
                opt(c.std_error),
                opt(c.z),
                c.adjusted_deviation,
                opt(c.adjusted_std_error),
                opt(c.adjusted_z),
            ));
        }
        out
    }
}

/// Pieces of `∫ H dL + ∫ J(H) ds` on one cell: the integrand `H(·, T_j)` is
/// frozen at the cell start and refreshed after every jump inside the cell,
/// so it stays predictable and `E[exp(−∫H dL − ∫J(H) ds)] = 1`.
struct Segment {
    length: f64,
    jump: f64,
    /// `H(·, T_j)` for `j ≥ k`, indexed by `j − k`.
    sigma: Vec<f64>,
}

fn cell_segments(vol: &VolatilitySpec, path: &JumpPath, field: &Field, k: usize, last_col: usize) -> Vec<Segment> {
    let grid = field.grid;
    let (t0, t1) = (grid.time(k), grid.time(k + 1));
    let mut row: Vec<f64> = (k..=last_col).map(|j| field.values[[k, j]]).collect();
    let weights: Vec<f64> = (k..=last_col).map(|j| vol.standard(t0, grid.maturity(j))).collect();
    let sigma_of = |row: &[f64]| {
        let w: Vec<f64> = row.iter().zip(&weights).map(|(f, l)| f * l).collect();
        quadrature::cumulative_trapezoid(&w, grid.delta)
    };
    let mut out = Vec::new();
    let mut sigma = sigma_of(&row);
    let mut last = t0;
    for (s, y) in path.jumps().filter(|&(s, _)| s > t0 && s <= t1) {
        out.push(Segment {
            length: s - last,
            jump: y,
            sigma: sigma.clone(),
        });
        for (m, v) in row.iter_mut().enumerate() {
            *v *= 1.0 + vol.standard(s, grid.maturity(k + m)) * y;
        }
        sigma = sigma_of(&row);
        last = s;
    }
    out.push(Segment {
        length: t1 - last,
        jump: 0.0,
        sigma,
    });
    out
}

/// `M(t_i, T_j) = exp(−∫₀^{t_i} H dL − ∫₀^{t_i} J(H) ds)` for each `(i, j)`.
fn martingale_weights<E: LevyExponent + ?Sized>(
    vol: &VolatilitySpec,
    exponent: &E,
    path: &JumpPath,
    field: &Field,
    nodes: &[(usize, usize)],
) -> Result<Vec<f64>, LevyError> {
    let last_row = nodes.iter().map(|n| n.0).max().unwrap_or(0);
    let last_col = nodes.iter().map(|n| n.1).max().unwrap_or(0);
    let mut log_m = vec![0.0; nodes.len()];
    for k in 0..last_row {
        for seg in cell_segments(vol, path, field, k, last_col) {
            for (c, &(i, j)) in nodes.iter().enumerate() {
                if k < i {
                    let h = seg.sigma[j - k];
                    log_m[c] -= h * (path.drift_rate * seg.length + seg.jump) + seg.length * exponent.value(h)?;
                }
            }
        }
    }
    Ok(log_m.into_iter().map(f64::exp).collect())
}

fn mean_and_error(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, Option<f64>) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    if n < 2 {
        return (mean, None);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    (mean, Some((var / nf).sqrt()))
}

/// Monte Carlo check of `E[P̂(t, T)] = P(0, T)`.
///
/// Paths are seeded by `path_seed(master_seed, index)` and reduced in index
/// order, so the report does not depend on the number of worker threads.
pub fn martingale_test<E: LevyExponent + ?Sized>(
    config: &ModelConfig,
    exponent: &E,
    n_paths: u64,
    master_seed: u64,
    checkpoints: &[(f64, f64)],
) -> Result<MartingaleReport, MarketError> {
    if n_paths == 0 {
        return Err(MarketError::NoPaths);
    }
    let grid = config.grid;
    let nodes = checkpoints
        .iter()
        .map(|&(t, maturity)| {
            let bad = MarketError::BadCheckpoint { t, maturity };
            let i = grid.index_of(t).map_err(|_| bad.clone())?;
            let j = grid.index_of(maturity).map_err(|_| bad.clone())?;
            if i > grid.n_t() || j < i {
                return Err(bad);
            }
            Ok((i, j))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let r0: Vec<f64> = (0..=grid.n_maturity())
        .map(|j| config.initial_curve.value(grid.maturity(j)))
        .collect();
    let initial: Vec<f64> = nodes
        .iter()
        .map(|&(_, j)| (-quadrature::trapezoid(&r0[..=j], grid.delta)).exp())
        .collect();

    let samples: Vec<Option<Vec<(f64, f64)>>> = (0..n_paths)
        .into_par_iter()
        .map(|index| -> Result<_, MarketError> {
            let path = config.simulate(path_seed(master_seed, index))?;
            let report = match config.solve_on(&path, exponent, None) {
                Ok(r) if r.status == SolverStatus::Converged => r,
                Ok(r) => {
                    log::debug!("path {index}: {:?} after {} iterations", r.status, r.iterations);
                    return Ok(None);
                }
                Err(e) => {
                    log::debug!("path {index}: {e}");
                    return Ok(None);
                }
            };
            let surface = bond_surface(&report.final_field);
            let weights = match martingale_weights(&config.volatility, exponent, &path, &report.final_field, &nodes) {
                Ok(w) => w,
                Err(e) => {
                    log::debug!("path {index}: {e}");
                    return Ok(None);
                }
            };
            Ok(Some(
                nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&(i, j), &m)| (surface.discounted[[i, j]], m))
                    .collect(),
            ))
        })
        .collect::<Result<_, _>>()?;

    let used: Vec<&Vec<(f64, f64)>> = samples.iter().flatten().collect();
    let n_used = used.len();
    let n_excluded = n_paths - n_used as u64;
    let excluded_fraction = n_excluded as f64 / n_paths as f64;
    let z_of = |dev: f64, se: Option<f64>| se.map(|s| dev / s.max(STD_ERROR_FLOOR));
    let stats: Vec<CheckpointStat> = if n_used == 0 {
        Vec::new()
    } else {
        nodes
            .iter()
            .enumerate()
            .map(|(c, _)| {
                let p0 = initial[c];
                let (mean, std_error) = mean_and_error(used.iter().map(|v| v[c].0), n_used);
                let (adj, adjusted_std_error) = mean_and_error(used.iter().map(|v| v[c].0 - p0 * v[c].1), n_used);
                CheckpointStat {
                    t: checkpoints[c].0,
                    maturity: checkpoints[c].1,
                    initial_price: p0,
                    mean,
                    deviation: mean - p0,
                    std_error,
                    z: z_of(mean - p0, std_error),
                    adjusted_deviation: adj,
                    adjusted_std_error,
                    adjusted_z: z_of(adj, adjusted_std_error),
                }
            })
            .collect()
    };
    let avg = |f: &dyn Fn(&CheckpointStat) -> f64| {
        if stats.is_empty() {
            f64::NAN
        } else {
            stats.iter().map(f).sum::<f64>() / stats.len() as f64
        }
    };
    let degenerate = n_used < 2;
    Ok(MartingaleReport {
        n_paths,
        n_used: n_used as u64,
        n_excluded,
        excluded_fraction,
        degenerate,
        valid: n_used > 0 && excluded_fraction <= MAX_EXCLUDED_FRACTION,
        max_abs_z: if degenerate {
            None
        } else {
            stats.iter().filter_map(|c| c.z).map(f64::abs).reduce(f64::max)
        },
        mean_abs_deviation: avg(&|c| c.deviation.abs()),
        mean_abs_adjusted_deviation: avg(&|c| c.adjusted_deviation.abs()),
        checkpoints: stats,
    })
}
