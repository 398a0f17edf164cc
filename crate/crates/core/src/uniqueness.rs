//! Distance between two fixed points and the Gronwall iteration that forces
//! it to zero.
//!
//! In standard coordinates the estimate reads
//! `d(t, T) ≤ K ∫₀ᵗ ∫ₛᵀ d(s, u) du ds`. Iterating the right-hand side from a
//! bound `d ≤ M` gives at most `M Kⁿ (tT)ⁿ / (n!)²`, which tends to zero.

use crate::grid::Field;
use crate::levy::{LevyError, LevyExponent};
use crate::norms::{discrete_inv_sqrt_gamma, timeline_norms};
use crate::quadrature;
use crate::volatility::{InitialCurve, VolatilitySpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UniquenessError {
    #[error("J''(0) = ∫y²ν(dy) is not finite; the contraction constant does not exist")]
    SecondMomentInfinite,
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Levy(#[from] LevyError),
}

/// Integration region of the Gronwall operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GronwallDomain {
    /// `∫₀ᵗ ∫ₛᵀ`, the estimate itself (nodes with `T ≥ t`).
    Triangle,
    /// `∫₀ᵗ ∫₀ᵀ`, the majorant whose iterates are exactly `M Kⁿ (tT)ⁿ / (n!)²`.
    Rectangle,
}

/// `D ↦ K ∫₀ᵗ ∫ D` by the trapezoid rule, `n` times. Returns `D_1, …, D_n`.
pub fn gronwall_iterates(d: &Field, k: f64, n: usize, domain: GronwallDomain) -> Vec<Field> {
    let grid = d.grid;
    let (nt, nm) = grid.shape();
    let mut out = Vec::with_capacity(n);
    let mut current = d.clone();
    for _ in 0..n {
        let mut next = Field::zeros(grid);
        let mut outer = vec![0.0; nm];
        let mut prev_inner = vec![0.0; nm];
        for i in 0..nt {
            let start = match domain {
                GronwallDomain::Triangle => i,
                GronwallDomain::Rectangle => 0,
            };
            let row: Vec<f64> = (start..nm).map(|j| current.values[[i, j]]).collect();
            let cum = quadrature::cumulative_trapezoid(&row, grid.delta);
            let mut inner = vec![0.0; nm];
            inner[start..].copy_from_slice(&cum);
            for j in start..nm {
                if i > 0 {
                    outer[j] += 0.5 * grid.delta * (prev_inner[j] + inner[j]);
                }
                next.values[[i, j]] = k * outer[j];
            }
            prev_inner = inner;
        }
        out.push(next.clone());
        current = next;
    }
    out
}

/// `M Kⁿ (uw)ⁿ / (n!)²`.
pub fn gronwall_bound(m: f64, k: f64, u: f64, w: f64, n: usize) -> f64 {
    let mut v = m;
    for i in 1..=n {
        v *= k * u * w / (i * i) as f64;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessSettings {
    pub iterations: usize,
    pub tol: f64,
}

impl Default for UniquenessSettings {
    fn default() -> Self {
        Self {
            iterations: 5,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// `M = sup |field1 − field2|` over nodes with `T ≥ t`.
    pub sup_distance: f64,
    /// `K = r₀*·B·e^{λ̄T*·max|J'|}·J''(0)·λ̄²`.
    pub k_constant: f64,
    pub second_moment: f64,
    pub max_abs_first_derivative: f64,
    /// Sup of the `n`-th Gronwall iterate of `d`, `n = 1..`.
    pub iterated_sup: Vec<f64>,
    /// `M Kⁿ (T* T_max)ⁿ / (n!)²`.
    pub closed_form_bound: Vec<f64>,
    pub pass: bool,
}

/// Compares two fixed points on one path.
///
/// `b` is the pathwise field `b̃` (its sup is `B`). `max|J'|` is taken over
/// the arguments `{0, λ̄κ‖r₁‖, λ̄κ‖r₂‖}` that the inner integrals can reach,
/// with `κ` the grid version of `1/√γ`; `J'` is monotone, so the endpoints
/// suffice.
pub fn uniqueness_contraction_check<E: LevyExponent + ?Sized>(
    field1: &Field,
    field2: &Field,
    exponent: &E,
    vol: &VolatilitySpec,
    r0: &InitialCurve,
    b: &Field,
    settings: &UniquenessSettings,
) -> Result<UniquenessReport, UniquenessError> {
    let grid = field1.grid;
    if field2.grid != grid || b.grid != grid {
        return Err(UniquenessError::GridMismatch);
    }
    let second_moment = exponent
        .second(0.0)
        .map_err(|_| UniquenessError::SecondMomentInfinite)?;
    if !second_moment.is_finite() {
        return Err(UniquenessError::SecondMomentInfinite);
    }
    let lambda_bar = vol.lambda_bar();
    let kappa = discrete_inv_sqrt_gamma(grid.n_maturity(), grid.delta, grid.gamma);
    let reach = lambda_bar * kappa * timeline_norms(field1).l2_gamma.max(timeline_norms(field2).l2_gamma);
    let max_abs_first_derivative = exponent.first(0.0)?.abs().max(exponent.first(reach)?.abs());
    let k_constant = r0.sup_on(&grid)
        * b.sup()
        * (lambda_bar * grid.t_star * max_abs_first_derivative).exp()
        * second_moment
        * lambda_bar
        * lambda_bar;

    let mut d = Field::zeros(grid);
    let mut sup_distance: f64 = 0.0;
    for i in 0..=grid.n_t() {
        for j in i..=grid.n_maturity() {
            let v = (field1.values[[i, j]] - field2.values[[i, j]]).abs();
            d.values[[i, j]] = v;
            sup_distance = sup_distance.max(v);
        }
    }
    let iterated_sup = gronwall_iterates(&d, k_constant, settings.iterations, GronwallDomain::Triangle)
        .iter()
        .map(upper_sup)
        .collect();
    let closed_form_bound = (1..=settings.iterations)
        .map(|n| gronwall_bound(sup_distance, k_constant, grid.t_star, grid.t_max, n))
        .collect();
    Ok(UniquenessReport {
        sup_distance,
        k_constant,
        second_moment,
        max_abs_first_derivative,
        iterated_sup,
        closed_form_bound,
        pass: sup_distance < settings.tol,
    })
}

/// Sup over nodes with `T ≥ t`.
fn upper_sup(f: &Field) -> f64 {
    let grid = f.grid;
    let mut m: f64 = 0.0;
    for i in 0..=grid.n_t() {
        for j in i..=grid.n_maturity() {
            m = m.max(f.values[[i, j]]);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::levy::LevyModelSpec;

    #[test]
    fn constant_distance_follows_closed_form() {
        let grid = GridSpec::new(1.0 / 64.0, 1.0, 1.0, 1.0).unwrap();
        let d = Field::from_fn(grid, |_, _| 2.0);
        let rect = gronwall_iterates(&d, 1.0, 5, GronwallDomain::Rectangle);
        let tri = gronwall_iterates(&d, 1.0, 5, GronwallDomain::Triangle);
        for n in 1..=5 {
            let exact = gronwall_bound(2.0, 1.0, 1.0, 1.0, n);
            let got = rect[n - 1].values[[grid.n_t(), grid.n_maturity()]];
            // trapezoid error on the degree-(n−1) polynomial pieces
            let tol = (n * n) as f64 * grid.delta * grid.delta;
            assert!((got - exact).abs() < tol * exact, "n={n}: {got} vs {exact}");
            assert!(upper_sup(&tri[n - 1]) <= exact);
        }
        assert!((gronwall_bound(1.0, 1.0, 1.0, 1.0, 5) - 1.0 / 14400.0).abs() < 1e-18);
    }

    #[test]
    fn identical_fields_pass() {
        let grid = GridSpec::new(0.125, 1.0, 2.0, 1.0).unwrap();
        let f = Field::from_fn(grid, |_, j| 0.1 + 0.01 * j as f64);
        let b = Field::from_fn(grid, |_, _| 1.0);
        let spec = LevyModelSpec::gamma_subordinator(1.0, 1.0);
        let r = uniqueness_contraction_check(
            &f,
            &f,
            &spec,
            &VolatilitySpec::constant(0.5),
            &InitialCurve::Constant { level: 0.1 },
            &b,
            &UniquenessSettings::default(),
        )
        .unwrap();
        assert!(r.pass && r.sup_distance == 0.0);
        assert!(r.iterated_sup.iter().all(|&v| v == 0.0));
        // Gamma(1, 1): J''(0) = ∫ y² e^{-y}/y dy = 1
        assert!((r.second_moment - 1.0).abs() < 1e-9);
        assert!(r.k_constant > 0.0);
    }
}
