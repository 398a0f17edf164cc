//! Pointwise checks that a solved field is a strong solution when the
//! volatility depends on time only.
//!
//! Between jumps the Musiela field satisfies
//! `∂ₜr = ∂ₓr + J'(λ(t)∫₀ˣ r(t,v) dv) λ(t) r + λ(t) c r`, where `c` is the
//! drift of the simulated path; at a jump of size `y` at time `s` it is
//! multiplied by `1 + λ(s) y`; and in `x` it obeys
//! `∂ₓr = r [r₀'/r₀ + ∫₀ᵗ J''(I(s, t+x)) λ(s)² f(s, t+x) ds]` with
//! `I(s, T) = ∫ₛᵀ λ(s) f(s, u) du`.

use crate::grid::Field;
use crate::levy::{LevyError, LevyExponent};
use crate::path::{b_value, JumpPath, PathError};
use crate::quadrature;
use crate::volatility::{InitialCurve, VolatilitySpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidualError {
    #[error("the strong form needs a volatility that depends on time only")]
    NotTimeOnly,
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongResidual {
    /// `|forward time difference − right-hand side|` over cells without jumps.
    pub time_max: f64,
    pub time_mean: f64,
    pub cells_used: usize,
    pub cells_skipped: usize,
    /// `|r(s)/r(s−) − (1 + λ(s) y)|` over jumps and grid maturities.
    pub jump_max: f64,
    pub jumps_checked: usize,
    /// `|∂ₓr − r[r₀'/r₀ + ∫ J'' λ² f ds]|` at interior nodes.
    pub derivative_max: f64,
    pub derivative_mean: f64,
}

/// Second-order first derivative of equally spaced samples.
fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => vec![(values[1] - values[0]) / h; 2],
        _ => (0..n)
            .map(|m| {
                if m == 0 {
                    (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
                } else if m == n - 1 {
                    (3.0 * values[m] - 4.0 * values[m - 1] + values[m - 2]) / (2.0 * h)
                } else {
                    (values[m + 1] - values[m - 1]) / (2.0 * h)
                }
            })
            .collect(),
    }
}

pub fn strong_residual<E: LevyExponent + ?Sized>(
    field: &Field,
    vol: &VolatilitySpec,
    exponent: &E,
    r0: &InitialCurve,
    path: &JumpPath,
) -> Result<StrongResidual, ResidualError> {
    if !vol.time_only {
        return Err(ResidualError::NotTimeOnly);
    }
    let grid = field.grid;
    let delta = grid.delta;
    let lambda = |t: f64| vol.standard(t, t);
    let mut out = StrongResidual {
        time_max: 0.0,
        time_mean: 0.0,
        cells_used: 0,
        cells_skipped: 0,
        jump_max: 0.0,
        jumps_checked: 0,
        derivative_max: 0.0,
        derivative_mean: 0.0,
    };

    let mut time_sum = 0.0;
    let mut time_count = 0usize;
    for i in 0..grid.n_t() {
        let (t0, t1) = (grid.time(i), grid.time(i + 1));
        if path.jumps().any(|(s, _)| s > t0 && s <= t1) {
            out.cells_skipped += 1;
            continue;
        }
        out.cells_used += 1;
        let r = field.musiela_slice(i);
        let next = field.musiela_slice(i + 1);
        let dx = derivative(&r, delta);
        let l = lambda(t0);
        let inner = quadrature::cumulative_trapezoid(&r, delta);
        for m in 0..next.len() {
            let lhs = (next[m] - r[m]) / delta;
            let rhs = dx[m] + exponent.first(l * inner[m])? * l * r[m] + l * path.drift_rate * r[m];
            let e = (lhs - rhs).abs();
            out.time_max = out.time_max.max(e);
            time_sum += e;
            time_count += 1;
        }
    }
    out.time_mean = if time_count > 0 { time_sum / time_count as f64 } else { 0.0 };

    for (s, y) in path.jumps() {
        let expected = 1.0 + lambda(s) * y;
        for j in 0..=grid.n_maturity() {
            let maturity = grid.maturity(j);
            if maturity < s {
                continue;
            }
            let after = b_value(vol, path, s, maturity, delta, false)?;
            let before = b_value(vol, path, s, maturity, delta, true)?;
            out.jump_max = out.jump_max.max((after / before - expected).abs());
        }
        out.jumps_checked += 1;
    }

    // I(s_k, T_j) for every row, then the x-identity on each row i.
    let (nt, nm) = grid.shape();
    let mut inner = vec![vec![0.0; nm]; nt];
    for (k, row) in inner.iter_mut().enumerate() {
        let l = lambda(grid.time(k));
        let values: Vec<f64> = (k..nm).map(|j| l * field.values[[k, j]]).collect();
        row[k..].copy_from_slice(&quadrature::cumulative_trapezoid(&values, delta));
    }
    let mut deriv_sum = 0.0;
    let mut deriv_count = 0usize;
    for i in 0..nt {
        let r = field.musiela_slice(i);
        let dx = derivative(&r, delta);
        for (m, (&rv, &d)) in r.iter().zip(&dx).enumerate() {
            let j = i + m;
            let maturity = grid.maturity(j);
            let mut integrand = Vec::with_capacity(i + 1);
            for (k, row) in inner.iter().enumerate().take(i + 1) {
                let l = lambda(grid.time(k));
                integrand.push(exponent.second(row[j])? * l * l * field.values[[k, j]]);
            }
            let rhs = rv * (r0.derivative(maturity) / r0.value(maturity) + quadrature::trapezoid(&integrand, delta));
            let e = (d - rhs).abs();
            out.derivative_max = out.derivative_max.max(e);
            deriv_sum += e;
            deriv_count += 1;
        }
    }
    out.derivative_mean = if deriv_count > 0 { deriv_sum / deriv_count as f64 } else { 0.0 };
    Ok(out)
}
