//! Exponentially weighted norms of Musiela slices.
//!
//! `‖h‖²_{L²γ} = ∫ h² e^{γx} dx` is the trapezoid sum on the grid. The
//! derivative part of `‖h‖²_{H¹γ}` treats `h` as its piecewise-linear
//! interpolant: each cell contributes `slope² ∫_cell e^{γx} dx` exactly. With
//! that choice the embedding `sup h ≤ h(0) + ‖h‖_{H¹γ}/√γ` holds for the
//! grid function itself, not only in the limit `Δ → 0`.

use crate::grid::Field;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("time {t} is not a grid node in [0, {t_star}]")]
    DomainError { t: f64, t_star: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SliceNorms {
    pub l2_gamma: f64,
    pub h1_gamma: f64,
    pub sup: f64,
    /// Bound `e^{−γX/2} ‖h‖_{L²γ}/√γ` for the mass beyond the window `[0, X]`.
    pub l2_tail_bound: f64,
    pub h1_tail_bound: f64,
}

/// `sqrt(trapezoid of e^{−γx})` on `n` cells of width `delta`: the discrete
/// counterpart of `1/√γ` in the Cauchy–Schwarz bound `∫h ≤ ‖h‖_{L²γ}/√γ`.
pub fn discrete_inv_sqrt_gamma(cells: usize, delta: f64, gamma: f64) -> f64 {
    let w: Vec<f64> = (0..=cells).map(|m| (-gamma * m as f64 * delta).exp()).collect();
    crate::quadrature::trapezoid(&w, delta).sqrt()
}

/// Norms of the samples `h(m·delta)`, `m = 0..values.len()`.
pub fn slice_norms(values: &[f64], delta: f64, gamma: f64) -> SliceNorms {
    if values.is_empty() {
        return SliceNorms::default();
    }
    let weights: Vec<f64> = (0..values.len()).map(|m| (gamma * m as f64 * delta).exp()).collect();
    let squared: Vec<f64> = values.iter().zip(&weights).map(|(h, w)| h * h * w).collect();
    let l2_sq = crate::quadrature::trapezoid(&squared, delta);
    let mut deriv_sq = 0.0;
    for m in 1..values.len() {
        let slope = (values[m] - values[m - 1]) / delta;
        deriv_sq += slope * slope * (weights[m] - weights[m - 1]) / gamma;
    }
    let l2 = l2_sq.sqrt();
    let h1 = (l2_sq + deriv_sq).sqrt();
    let window = (values.len() - 1) as f64 * delta;
    let tail = (-0.5 * gamma * window).exp() / gamma.sqrt();
    SliceNorms {
        l2_gamma: l2,
        h1_gamma: h1,
        sup: values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
        l2_tail_bound: tail * l2,
        h1_tail_bound: tail * h1,
    }
}

/// Norms of the Musiela slice `r(t, ·) = f(t, t + ·)` on `[0, T_max − t]`.
pub fn weighted_norms(field: &Field, t: f64) -> Result<SliceNorms, NormError> {
    let grid = field.grid;
    let err = NormError::DomainError { t, t_star: grid.t_star };
    let i = grid.index_of(t).map_err(|_| err.clone())?;
    if i > grid.n_t() {
        return Err(err);
    }
    Ok(slice_norms(&field.musiela_slice(i), grid.delta, grid.gamma))
}

/// Timeline norms `sup_t ‖r(t, ·)‖` over all grid times.
pub fn timeline_norms(field: &Field) -> SliceNorms {
    let grid = field.grid;
    let mut out = SliceNorms {
        sup: f64::NEG_INFINITY,
        ..SliceNorms::default()
    };
    for i in 0..=grid.n_t() {
        let s = slice_norms(&field.musiela_slice(i), grid.delta, grid.gamma);
        if s.l2_gamma.is_nan() || s.h1_gamma.is_nan() {
            return SliceNorms {
                l2_gamma: f64::NAN,
                h1_gamma: f64::NAN,
                sup: f64::NAN,
                l2_tail_bound: f64::NAN,
                h1_tail_bound: f64::NAN,
            };
        }
        out.l2_gamma = out.l2_gamma.max(s.l2_gamma);
        out.h1_gamma = out.h1_gamma.max(s.h1_gamma);
        out.sup = out.sup.max(s.sup);
        out.l2_tail_bound = out.l2_tail_bound.max(s.l2_tail_bound);
        out.h1_tail_bound = out.h1_tail_bound.max(s.h1_tail_bound);
    }
    out
}

/// Quadrature slack in `trapezoid(h) ≤ ‖h‖_{L²γ}/√γ + slack` on a window of
/// `cells` cells: the excess of the discrete `1/√γ` over the continuous one.
pub fn integral_embedding_slack(l2_gamma: f64, cells: usize, delta: f64, gamma: f64) -> f64 {
    l2_gamma * (discrete_inv_sqrt_gamma(cells, delta, gamma) - 1.0 / gamma.sqrt()).max(0.0)
}
