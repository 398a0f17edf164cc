//! Monotone fixed-point iteration `h_{n+1} = 𝒦 h_n` in standard coordinates.
//!
//! `𝒦h(t, T) = a(t, T) · exp(∫₀ᵗ J'(∫ₛᵀ λ(s,u) h(s,u) du) λ(s, T) ds)`
//! with both integrals by the trapezoid rule on the grid.

use crate::grid::{Field, GridSpec};
use crate::levy::{LevyError, LevyExponent};
use crate::norms::{discrete_inv_sqrt_gamma, slice_norms, timeline_norms};
use crate::volatility::VolatilitySpec;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub explosion_threshold: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            explosion_threshold: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStatus {
    Converged,
    Exploded,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub status: SolverStatus,
    pub iterations: usize,
    /// Per iterate `h_1, h_2, …`: largest grid value.
    pub sup_norm_trace: Vec<f64>,
    /// Per iterate: `sup_t ‖h_n(t, ·)‖_{L²γ}`.
    pub l2_gamma_trace: Vec<f64>,
    /// Per iterate: `sup_t ‖h_n(t, ·)‖_{H¹γ}`.
    pub h1_gamma_trace: Vec<f64>,
    /// Per iterate: `min (h_n − h_{n−1})` over the grid.
    pub min_increment_trace: Vec<f64>,
    /// `sup |h_n − h_{n−1}|` at the last iterate.
    pub final_difference: f64,
    pub c1_bound: Option<f64>,
    #[serde(skip)]
    pub final_field: Field,
}

impl SolverReport {
    /// Every iterate dominates its predecessor up to `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.min_increment_trace.iter().all(|&d| d >= -slack)
    }
}

/// Inputs of one solve with the volatility sampled once on the grid.
pub struct FixedPointProblem<'a, E: LevyExponent + ?Sized> {
    grid: GridSpec,
    a_field: &'a Field,
    exponent: &'a E,
    /// `λ(t_k, T_j)` for `j ≥ k`.
    lambda: Array2<f64>,
    lambda_bar: f64,
}

impl<'a, E: LevyExponent + ?Sized> FixedPointProblem<'a, E> {
    pub fn new(a_field: &'a Field, vol: &VolatilitySpec, exponent: &'a E) -> Self {
        let grid = a_field.grid;
        let (nt, nm) = grid.shape();
        let mut lambda = Array2::zeros((nt, nm));
        for k in 0..nt {
            for j in k..nm {
                lambda[[k, j]] = vol.standard(grid.time(k), grid.maturity(j));
            }
        }
        Self {
            grid,
            a_field,
            exponent,
            lambda,
            lambda_bar: vol.lambda_bar(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Rows `G[k][j] = J'(I[k][j]) λ(t_k, T_j)` with
    /// `I[k][j] = ∫_{t_k}^{T_j} λ(t_k, u) h(t_k, u) du`.
    fn drift_rows(&self, h: &Field) -> Result<Vec<Vec<f64>>, LevyError> {
        let (nt, nm) = self.grid.shape();
        let half = 0.5 * self.grid.delta;
        (0..nt)
            .into_par_iter()
            .map(|k| {
                let mut row = vec![0.0; nm];
                let mut inner = 0.0;
                let mut prev = self.lambda[[k, k]] * h.values[[k, k]];
                for (j, slot) in row.iter_mut().enumerate().skip(k) {
                    let cur = self.lambda[[k, j]] * h.values[[k, j]];
                    if j > k {
                        inner += half * (prev + cur);
                    }
                    prev = cur;
                    *slot = self.exponent.first(inner)? * self.lambda[[k, j]];
                }
                Ok(row)
            })
            .collect()
    }

    /// One application of `𝒦`.
    pub fn apply(&self, h: &Field) -> Result<Field, LevyError> {
        let (nt, nm) = self.grid.shape();
        let half = 0.5 * self.grid.delta;
        let g = self.drift_rows(h)?;
        let mut out = Field::zeros(self.grid);
        let mut outer = vec![0.0; nm];
        for i in 0..nt {
            for j in i..nm {
                if i > 0 {
                    outer[j] += half * (g[i - 1][j] + g[i][j]);
                }
                out.values[[i, j]] = self.a_field.values[[i, j]] * outer[j].exp();
            }
        }
        out.apply_flat_extension();
        Ok(out)
    }

    /// Iterates from `h₀ ≡ 0`.
    pub fn solve(&self, settings: &SolverSettings) -> Result<SolverReport, LevyError> {
        self.solve_from(&Field::zeros(self.grid), settings)
    }

    /// Iterates from an arbitrary nonnegative start.
    pub fn solve_from(&self, initial: &Field, settings: &SolverSettings) -> Result<SolverReport, LevyError> {
        let mut report = SolverReport {
            status: SolverStatus::MaxIterations,
            iterations: 0,
            sup_norm_trace: Vec::new(),
            l2_gamma_trace: Vec::new(),
            h1_gamma_trace: Vec::new(),
            min_increment_trace: Vec::new(),
            final_difference: f64::INFINITY,
            c1_bound: self.a_priori_bound(),
            final_field: initial.clone(),
        };
        let mut current = initial.clone();
        for n in 1..=settings.max_iter {
            let next = self.apply(&current)?;
            let norms = timeline_norms(&next);
            let diff = next.sup_distance(&current);
            let min_increment = min_increment(&next, &current);
            report.iterations = n;
            report.sup_norm_trace.push(norms.sup);
            report.l2_gamma_trace.push(norms.l2_gamma);
            report.h1_gamma_trace.push(norms.h1_gamma);
            report.min_increment_trace.push(min_increment);
            report.final_difference = diff;
            current = next;
            if !norms.l2_gamma.is_finite() || norms.l2_gamma > settings.explosion_threshold {
                log::debug!("iterate {n}: L2γ norm {} beyond threshold", norms.l2_gamma);
                report.status = SolverStatus::Exploded;
                break;
            }
            log::trace!("iterate {n}: sup diff {diff:e}, L2γ {}", norms.l2_gamma);
            if diff < settings.tol {
                report.status = SolverStatus::Converged;
                break;
            }
        }
        report.final_field = current;
        Ok(report)
    }

    /// Smallest `c₁ ≥ A` with `ln A ≤ ln c₁ − λ̄ T* J'(λ̄ c₁ κ)` where
    /// `A = sup_t ‖a(t, ·)‖_{L²γ}` (the realized value of `b̄ ‖r₀‖`) and `κ`
    /// is the grid version of `1/√γ`. Every iterate started at zero then
    /// stays in the `L²γ` ball of radius `c₁`.
    pub fn a_priori_bound(&self) -> Option<f64> {
        let grid = self.grid;
        let base = (0..=grid.n_t())
            .map(|i| slice_norms(&self.a_field.musiela_slice(i), grid.delta, grid.gamma).l2_gamma)
            .fold(0.0, f64::max);
        let kappa = discrete_inv_sqrt_gamma(grid.n_maturity(), grid.delta, grid.gamma);
        find_c1(self.exponent, base, self.lambda_bar, grid.t_star, kappa)
    }
}

fn min_increment(next: &Field, prev: &Field) -> f64 {
    let (nt, nm) = next.grid.shape();
    let mut m = f64::INFINITY;
    for i in 0..nt {
        for j in i..nm {
            m = m.min(next.values[[i, j]] - prev.values[[i, j]]);
        }
    }
    m
}

/// Smallest `c ∈ [base, 1e12]` with `ln base ≤ ln c − λ̄ T* J'(λ̄ c κ)`,
/// found by a logarithmic scan refined by bisection.
pub fn find_c1<E: LevyExponent + ?Sized>(
    exponent: &E,
    base: f64,
    lambda_bar: f64,
    t_star: f64,
    kappa: f64,
) -> Option<f64> {
    const UPPER: f64 = 1e12;
    if !(base > 0.0) || base > UPPER {
        return None;
    }
    let g = |c: f64| -> Option<f64> {
        let d = exponent.first(lambda_bar * c * kappa).ok()?;
        Some(c.ln() - lambda_bar * t_star * d - base.ln())
    };
    if g(base)? >= 0.0 {
        return Some(base);
    }
    let steps = 400;
    let ratio = (UPPER / base).ln() / steps as f64;
    let mut lo = base;
    for k in 1..=steps {
        let c = base * (ratio * k as f64).exp();
        if g(c)? >= 0.0 {
            let mut hi = c;
            for _ in 0..100 {
                let mid = (lo * hi).sqrt();
                if mid <= lo || mid >= hi {
                    break;
                }
                if g(mid)? >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        lo = c;
    }
    None
}

/// One application of `𝒦` to `field`.
pub fn apply_k<E: LevyExponent + ?Sized>(
    field: &Field,
    a_field: &Field,
    vol: &VolatilitySpec,
    exponent: &E,
) -> Result<Field, LevyError> {
    FixedPointProblem::new(a_field, vol, exponent).apply(field)
}

/// Iterates `h_{n+1} = 𝒦 h_n` from `h₀ ≡ 0`.
pub fn solve_fixed_point<E: LevyExponent + ?Sized>(
    a_field: &Field,
    vol: &VolatilitySpec,
    exponent: &E,
    settings: &SolverSettings,
) -> Result<SolverReport, LevyError> {
    FixedPointProblem::new(a_field, vol, exponent).solve(settings)
}
