//! Lévy noise described by its characteristic triplet `(a, q, ν)`.
//!
//! The Laplace exponent `J(z) = -az + qz²/2 + J₁(z) + J₂(z) + J₃(z)` is
//! evaluated piecewise: `J₁` collects negative jumps, `J₂` jumps in `(0, 1)`
//! and `J₃` jumps in `[1, ∞)`. Density families are integrated with adaptive
//! Gauss–Kronrod panels; point masses are summed exactly.

mod classify;
mod table;

pub use classify::{classify_growth, log_growth_diagnostic, GrowthClassification, Rule, Verdict};
pub use table::TabulatedExponent;

use crate::quadrature::{self, QuadError, Tolerance};
use crate::volatility::VolatilitySpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LevyError {
    #[error("exponent argument must be nonnegative, got {0}")]
    DomainError(f64),
    #[error("{what} is not integrable against the Lévy measure: {source}")]
    NonIntegrable {
        what: &'static str,
        #[source]
        source: QuadError,
    },
    #[error("invalid Lévy model: {0}")]
    InvalidSpec(String),
}

/// One atom `weight · δ_location` of the Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub location: f64,
    pub weight: f64,
}

/// Slowly varying factor `M(x) = coefficient · (ln 1/x)^power` near zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlowlyVarying {
    LogPower { coefficient: f64, power: f64 },
}

impl SlowlyVarying {
    /// `M(x) → 0` as `x → 0`.
    pub fn vanishes_at_zero(&self) -> bool {
        match *self {
            SlowlyVarying::LogPower { coefficient, power } => coefficient == 0.0 || power < 0.0,
        }
    }

    /// `∫₀¹ M(x)/x dx = ∫₀^∞ coefficient·u^power du` diverges.
    pub fn log_integral_diverges(&self) -> bool {
        match *self {
            SlowlyVarying::LogPower { coefficient, power } => coefficient != 0.0 && power >= -1.0,
        }
    }
}

/// Integrability statements a user attaches to a tabulated density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Certificates {
    /// `∫₀¹ y² ν(dy) < ∞`
    pub small_jump_second_moment: bool,
    /// `∫₁^∞ y ν(dy) < ∞`
    pub tail_first_moment: bool,
    #[serde(default)]
    pub slowly_varying: Option<SlowlyVarying>,
}

/// Density on `(0, ∞)` given by log-log linear interpolation of a table.
///
/// Below the first node the first segment's power law is continued down to
/// zero; above the last node the density is zero unless `tail_exponent`
/// continues it as `v_last (y / y_last)^tail_exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDensity {
    pub table: Vec<(f64, f64)>,
    #[serde(default)]
    pub tail_exponent: Option<f64>,
    #[serde(default)]
    pub certificates: Option<Certificates>,
}

impl UserDensity {
    fn validate(&self) -> Result<(), LevyError> {
        if self.table.len() < 2 {
            return Err(LevyError::InvalidSpec("user density table needs at least two nodes".into()));
        }
        if self.table.iter().any(|&(y, v)| !(y > 0.0 && v > 0.0 && y.is_finite() && v.is_finite())) {
            return Err(LevyError::InvalidSpec(
                "user density nodes must have positive locations and values".into(),
            ));
        }
        if self.table.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(LevyError::InvalidSpec("user density locations must increase".into()));
        }
        Ok(())
    }

    /// Log-log slope of segment `k` (`k = 0` is also used below the table).
    pub fn slope(&self, k: usize) -> f64 {
        let (y0, v0) = self.table[k];
        let (y1, v1) = self.table[k + 1];
        (v1 / v0).ln() / (y1 / y0).ln()
    }

    pub fn density(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let n = self.table.len();
        let (y_last, v_last) = self.table[n - 1];
        if y > y_last {
            return match self.tail_exponent {
                Some(k) => v_last * (y / y_last).powf(k),
                None => 0.0,
            };
        }
        let seg = self.table.partition_point(|p| p.0 <= y).saturating_sub(1).min(n - 2);
        let (ys, vs) = self.table[seg];
        vs * (y / ys).powf(self.slope(seg))
    }

    /// Upper end of the support.
    pub fn support_max(&self) -> f64 {
        match self.tail_exponent {
            Some(_) => f64::INFINITY,
            None => self.table[self.table.len() - 1].0,
        }
    }

    /// Mass of the piecewise power law on `[a, b]` inside the segment whose
    /// left node is `(ys, vs)` and slope is `k`.
    pub(crate) fn segment_mass(ys: f64, vs: f64, k: f64, a: f64, b: f64) -> f64 {
        if (k + 1.0).abs() < 1e-12 {
            vs * ys * (b / a).ln()
        } else {
            vs * ys / (k + 1.0) * ((b / ys).powf(k + 1.0) - (a / ys).powf(k + 1.0))
        }
    }
}

/// The Lévy measure `ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MeasureFamily {
    /// Finite sum of atoms.
    PointMasses { masses: Vec<PointMass> },
    /// Density `c · y^{-1-α}` on `(0, y_max]`.
    StableLike { c: f64, alpha: f64, y_max: f64 },
    /// Density `c · y^{-1} e^{-βy}` on `(0, ∞)`.
    GammaLike { c: f64, beta: f64 },
    UserDensity(UserDensity),
}

impl MeasureFamily {
    pub fn zero() -> Self {
        MeasureFamily::PointMasses { masses: Vec::new() }
    }

    /// Density at `y`; `None` for atomic measures.
    pub fn density(&self, y: f64) -> Option<f64> {
        match self {
            MeasureFamily::PointMasses { .. } => None,
            &MeasureFamily::StableLike { c, alpha, y_max } => {
                Some(if y > 0.0 && y <= y_max { c * y.powf(-1.0 - alpha) } else { 0.0 })
            }
            &MeasureFamily::GammaLike { c, beta } => Some(if y > 0.0 { c * (-beta * y).exp() / y } else { 0.0 }),
            MeasureFamily::UserDensity(u) => Some(u.density(y)),
        }
    }

    /// Exponent `k` with `density(y) ~ y^k` as `y → 0`.
    fn exponent_at_zero(&self) -> f64 {
        match self {
            MeasureFamily::PointMasses { .. } => 0.0,
            MeasureFamily::StableLike { alpha, .. } => -1.0 - alpha,
            MeasureFamily::GammaLike { .. } => -1.0,
            MeasureFamily::UserDensity(u) => u.slope(0),
        }
    }

    fn support_max(&self) -> f64 {
        match self {
            MeasureFamily::PointMasses { masses } => {
                masses.iter().map(|m| m.location).fold(f64::NEG_INFINITY, f64::max)
            }
            MeasureFamily::StableLike { y_max, .. } => *y_max,
            MeasureFamily::GammaLike { .. } => f64::INFINITY,
            MeasureFamily::UserDensity(u) => u.support_max(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            MeasureFamily::UserDensity(u) => u.table.iter().map(|p| p.0).collect(),
            _ => Vec::new(),
        }
    }

    /// Lower end of the support (`+∞` for the zero measure).
    pub fn support_inf(&self) -> f64 {
        match self {
            MeasureFamily::PointMasses { masses } => {
                masses.iter().map(|m| m.location).fold(f64::INFINITY, f64::min)
            }
            _ => 0.0,
        }
    }

    pub fn has_negative_jumps(&self) -> bool {
        self.support_inf() < 0.0
    }

    pub fn is_finite_activity(&self) -> bool {
        matches!(self, MeasureFamily::PointMasses { .. })
    }

    fn validate(&self) -> Result<(), LevyError> {
        match self {
            MeasureFamily::PointMasses { masses } => {
                for m in masses {
                    if !(m.weight > 0.0 && m.weight.is_finite()) || !m.location.is_finite() || m.location == 0.0 {
                        return Err(LevyError::InvalidSpec(format!(
                            "point mass at {} with weight {} (weights must be positive, locations nonzero)",
                            m.location, m.weight
                        )));
                    }
                }
                Ok(())
            }
            &MeasureFamily::StableLike { c, alpha, y_max } => {
                if !(alpha > 0.0 && alpha < 2.0) {
                    return Err(LevyError::InvalidSpec(format!(
                        "stable-like index alpha = {alpha} must lie in (0, 2) for ∫(y²∧1)ν(dy) < ∞"
                    )));
                }
                if !(c > 0.0 && y_max > 0.0 && y_max.is_finite()) {
                    return Err(LevyError::InvalidSpec("stable-like needs c > 0 and finite y_max > 0".into()));
                }
                Ok(())
            }
            &MeasureFamily::GammaLike { c, beta } => {
                if !(c > 0.0 && beta > 0.0) {
                    return Err(LevyError::InvalidSpec("gamma-like needs c > 0 and beta > 0".into()));
                }
                Ok(())
            }
            MeasureFamily::UserDensity(u) => u.validate(),
        }
    }

    /// `∫_{[lo, hi)} g(y) ν(dy)` over the positive half-line, where `g(y)`
    /// vanishes like `y^order` at zero.
    #[allow(clippy::too_many_arguments)]
    fn integrate_positive(
        &self,
        lo: f64,
        hi: f64,
        order: f64,
        rate: f64,
        tol: Tolerance,
        what: &'static str,
        g: impl Fn(f64) -> f64,
    ) -> Result<f64, LevyError> {
        let lo = lo.max(0.0);
        if let MeasureFamily::PointMasses { masses } = self {
            return Ok(masses
                .iter()
                .filter(|m| m.location >= lo && m.location < hi && m.location > 0.0)
                .map(|m| m.weight * g(m.location))
                .sum());
        }
        let hi = hi.min(self.support_max());
        if !(hi > lo) {
            return Ok(0.0);
        }
        let fail = |source| LevyError::NonIntegrable { what, source };
        let integrand = |y: f64| g(y) * self.density(y).unwrap_or(0.0);

        let mut cuts = vec![lo];
        // resolve the boundary layer of e^{-rate·y} near zero
        let layer = if rate > 1.0 { [1.0, 8.0, 64.0].map(|k| k / rate).to_vec() } else { Vec::new() };
        let mut interior: Vec<f64> = self.breakpoints().into_iter().chain(layer).filter(|&b| b > lo && b < hi).collect();
        interior.sort_by(f64::total_cmp);
        interior.dedup();
        cuts.extend(interior);
        let mut total = 0.0;
        let mut start_index = 0;
        if lo == 0.0 {
            let first_end = cuts.get(1).copied().unwrap_or(hi).min(if hi.is_finite() { hi } else { 1.0 });
            let p = order + self.exponent_at_zero();
            if p <= -1.0 {
                return Err(fail(QuadError::NotConverged {
                    estimate: f64::INFINITY,
                    error: f64::INFINITY,
                    panels: 0,
                }));
            }
            total += quadrature::integrate_from_zero(integrand, first_end, p, tol).map_err(fail)?;
            cuts[0] = first_end;
            if cuts.len() > 1 && cuts[1] == first_end {
                start_index = 1;
            }
        }
        let cuts = &cuts[start_index..];
        let finite_end = if hi.is_finite() { hi } else { cuts.last().copied().unwrap_or(lo).max(1.0) };
        for w in cuts.windows(2) {
            total += quadrature::integrate(integrand, w[0], w[1], tol).map_err(fail)?;
        }
        let last = *cuts.last().expect("nonempty cuts");
        if finite_end > last {
            total += quadrature::integrate(integrand, last, finite_end, tol).map_err(fail)?;
        }
        if !hi.is_finite() {
            total += quadrature::integrate_to_infinity(integrand, finite_end.max(last), tol).map_err(fail)?;
        }
        Ok(total)
    }

    /// `∫ g(y) ν(dy)` over the negative atoms.
    fn sum_negative(&self, g: impl Fn(f64) -> f64) -> f64 {
        match self {
            MeasureFamily::PointMasses { masses } => masses
                .iter()
                .filter(|m| m.location < 0.0)
                .map(|m| m.weight * g(m.location))
                .sum(),
            _ => 0.0,
        }
    }
}

/// `e^{-x} - 1 + x` without cancellation near zero.
#[inline]
pub fn compensated_exp(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)))
    } else {
        (-x).exp_m1() + x
    }
}

/// `1 - e^{-x}`.
#[inline]
fn one_minus_exp(x: f64) -> f64 {
    -(-x).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    First,
    Second,
    Third,
}

/// Characteristic triplet of the driving Lévy process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyModelSpec {
    pub drift_a: f64,
    pub gaussian_q: f64,
    pub measure: MeasureFamily,
    /// Declares that `L` is a subordinator plus a linear function.
    #[serde(default)]
    pub subordinator: bool,
}

/// Evaluation of `J`, `J'`, `J''` on `[0, ∞)`.
pub trait LevyExponent: Send + Sync {
    fn value(&self, z: f64) -> Result<f64, LevyError>;
    fn first(&self, z: f64) -> Result<f64, LevyError>;
    fn second(&self, z: f64) -> Result<f64, LevyError>;
}

impl LevyModelSpec {
    /// Pure drift: `L(t) = c·t`, so `J(z) = -cz`.
    pub fn drift_only(c: f64) -> Self {
        Self {
            drift_a: c,
            gaussian_q: 0.0,
            measure: MeasureFamily::zero(),
            subordinator: false,
        }
    }

    /// Gamma subordinator with `J(z) = -c ln(1 + z/β)`: the drift cancels the
    /// compensator on `(0, 1)`.
    pub fn gamma_subordinator(c: f64, beta: f64) -> Self {
        Self {
            drift_a: c * (1.0 - (-beta).exp()) / beta,
            gaussian_q: 0.0,
            measure: MeasureFamily::GammaLike { c, beta },
            subordinator: true,
        }
    }

    pub fn validate(&self) -> Result<(), LevyError> {
        if !self.drift_a.is_finite() {
            return Err(LevyError::InvalidSpec("drift a must be finite".into()));
        }
        if !(self.gaussian_q >= 0.0 && self.gaussian_q.is_finite()) {
            return Err(LevyError::InvalidSpec(format!(
                "Gaussian coefficient q = {} must be nonnegative",
                self.gaussian_q
            )));
        }
        self.measure.validate()
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    /// `J(z)`.
    pub fn exponent(&self, z: f64) -> Result<f64, LevyError> {
        self.exponent_with(z, Self::tol())
    }

    pub(crate) fn exponent_with(&self, z: f64, tol: Tolerance) -> Result<f64, LevyError> {
        if !(z >= 0.0) {
            return Err(LevyError::DomainError(z));
        }
        let m = &self.measure;
        let j1 = m.sum_negative(|y| if y > -1.0 { compensated_exp(z * y) } else { (-z * y).exp_m1() });
        let j2 = m.integrate_positive(0.0, 1.0, 2.0, z, tol, "e^{-zy}-1+zy on (0,1)", |y| compensated_exp(z * y))?;
        let j3 = -m.integrate_positive(1.0, f64::INFINITY, 0.0, z, tol, "1-e^{-zy} on [1,∞)", |y| {
            one_minus_exp(z * y)
        })?;
        Ok(-self.drift_a * z + 0.5 * self.gaussian_q * z * z + j1 + j2 + j3)
    }

    /// `J'(z)` or `J''(z)` (and `J'''` for interpolation tables).
    pub fn exponent_derivative(&self, z: f64, order: Derivative) -> Result<f64, LevyError> {
        self.derivative_with(z, order, Self::tol())
    }

    pub(crate) fn derivative_with(&self, z: f64, order: Derivative, tol: Tolerance) -> Result<f64, LevyError> {
        if !(z >= 0.0) {
            return Err(LevyError::DomainError(z));
        }
        let m = &self.measure;
        let inf = f64::INFINITY;
        match order {
            Derivative::First => {
                let j1 = m.sum_negative(|y| {
                    if y > -1.0 {
                        y * one_minus_exp(z * y)
                    } else {
                        -y * (-z * y).exp()
                    }
                });
                let j2 = m.integrate_positive(0.0, 1.0, 2.0, z, tol, "y(1-e^{-zy}) on (0,1)", |y| {
                    y * one_minus_exp(z * y)
                })?;
                let j3 = -m.integrate_positive(1.0, inf, 1.0, z, tol, "y e^{-zy} on [1,∞)", |y| y * (-z * y).exp())?;
                Ok(-self.drift_a + self.gaussian_q * z + j1 + j2 + j3)
            }
            Derivative::Second => {
                let j1 = m.sum_negative(|y| y * y * (-z * y).exp());
                let j2 = m.integrate_positive(0.0, 1.0, 2.0, z, tol, "y² e^{-zy} on (0,1)", |y| y * y * (-z * y).exp())?;
                let j3 = m.integrate_positive(1.0, inf, 2.0, z, tol, "y² e^{-zy} on [1,∞)", |y| y * y * (-z * y).exp())?;
                Ok(self.gaussian_q + j1 + j2 + j3)
            }
            Derivative::Third => {
                let cube = |y: f64| y * y * y * (-z * y).exp();
                let j1 = m.sum_negative(cube);
                let j2 = m.integrate_positive(0.0, 1.0, 3.0, z, tol, "y³ e^{-zy} on (0,1)", cube)?;
                let j3 = m.integrate_positive(1.0, inf, 3.0, z, tol, "y³ e^{-zy} on [1,∞)", cube)?;
                Ok(-(j1 + j2 + j3))
            }
        }
    }

    /// `U_ν(x) = ∫₀ˣ y² ν(dy)`.
    pub fn small_jump_moment(&self, x: f64) -> Result<f64, LevyError> {
        if !(x > 0.0) {
            return Err(LevyError::DomainError(x));
        }
        // include an atom sitting exactly at x
        let upper = if self.measure.is_finite_activity() { next_up(x) } else { x };
        self.measure
            .integrate_positive(0.0, upper, 2.0, 0.0, Self::tol(), "y² near zero", |y| y * y)
    }

    /// `ν([lo, hi))` on the positive half-line.
    pub fn positive_mass(&self, lo: f64, hi: f64) -> Result<f64, LevyError> {
        self.measure.integrate_positive(lo, hi, 0.0, 0.0, Self::tol(), "ν", |_| 1.0)
    }

    /// `∫_{[lo, hi)} y ν(dy)` on the positive half-line.
    pub fn positive_first_moment(&self, lo: f64, hi: f64) -> Result<f64, LevyError> {
        self.measure.integrate_positive(lo, hi, 1.0, 0.0, Self::tol(), "y", |y| y)
    }
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

impl LevyExponent for LevyModelSpec {
    fn value(&self, z: f64) -> Result<f64, LevyError> {
        self.exponent(z)
    }
    fn first(&self, z: f64) -> Result<f64, LevyError> {
        self.exponent_derivative(z, Derivative::First)
    }
    fn second(&self, z: f64) -> Result<f64, LevyError> {
        self.exponent_derivative(z, Derivative::Second)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub pass: bool,
    pub detail: String,
}

/// Per-assumption outcome of [`check_assumptions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub lambda_bar: f64,
    /// infimum of the support of ν
    pub support_inf: f64,
    /// `-1/λ̄`
    pub support_limit: f64,
    pub a2: Check,
    pub a3: Check,
    /// `∫_{(-1/λ̄, 1)} y² ν(dy)`
    pub a4_small_jumps: f64,
    /// `∫₁^∞ y ν(dy)`
    pub a4_tail: f64,
    pub a4: Check,
    /// `∫₀^∞ y² ν(dy)`
    pub second_moment: f64,
    pub second_moment_finite: bool,
}

impl AssumptionReport {
    /// First failing label among (A2)–(A4), if any.
    pub fn first_failure(&self) -> Option<(&'static str, &str)> {
        [("A2", &self.a2), ("A3", &self.a3), ("A4", &self.a4)]
            .into_iter()
            .find(|(_, c)| !c.pass)
            .map(|(label, c)| (label, c.detail.as_str()))
    }
}

/// Evaluates (A2)–(A4) and the second moment `∫ y² ν(dy)`.
pub fn check_assumptions(spec: &LevyModelSpec, vol: &VolatilitySpec) -> AssumptionReport {
    let lambda_bar = vol.lambda_bar();
    let limit = -1.0 / lambda_bar;
    let m = &spec.measure;
    let support_inf = m.support_inf();
    let a2_pass = match m {
        MeasureFamily::PointMasses { masses } => masses.iter().all(|p| p.location > limit),
        _ => true,
    };
    let a2 = Check {
        pass: a2_pass,
        detail: format!("support infimum {support_inf} vs -1/λ̄ = {limit}"),
    };
    let bounded = vol.terms.iter().all(|t| match t.maturity {
        crate::volatility::ScalarFn::Affine { slope, .. } => slope == 0.0,
        crate::volatility::ScalarFn::ExpDecay { rate, amplitude, .. } => rate >= 0.0 || amplitude == 0.0,
        crate::volatility::ScalarFn::Constant { .. } => true,
    });
    let a3 = Check {
        pass: bounded,
        detail: if bounded {
            "separable surface with continuous time factors and bounded maturity factors".into()
        } else {
            "a maturity factor b_n is unbounded on [0, ∞)".into()
        },
    };
    let value_or_inf = |r: Result<f64, LevyError>| r.unwrap_or(f64::INFINITY);
    let small = m.sum_negative(|y| if y > limit { y * y } else { 0.0 })
        + value_or_inf(m.integrate_positive(0.0, 1.0, 2.0, 0.0, Tolerance::default(), "y²", |y| y * y));
    let tail = value_or_inf(spec.positive_first_moment(1.0, f64::INFINITY));
    let a4_pass = small.is_finite() && tail.is_finite();
    let a4 = Check {
        pass: a4_pass,
        detail: format!("∫(-1/λ̄,1) y²ν = {small:e}, ∫[1,∞) yν = {tail:e}"),
    };
    let second_moment = m.sum_negative(|y| y * y)
        + value_or_inf(m.integrate_positive(0.0, f64::INFINITY, 2.0, 0.0, Tolerance::default(), "y²", |y| y * y));
    AssumptionReport {
        lambda_bar,
        support_inf,
        support_limit: limit,
        a2,
        a3,
        a4_small_jumps: small,
        a4_tail: tail,
        a4,
        second_moment,
        second_moment_finite: second_moment.is_finite(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn drift_and_gaussian_only() {
        let drift = LevyModelSpec::drift_only(1.0);
        assert_eq!(drift.exponent(3.0).unwrap(), -3.0);
        let gauss = LevyModelSpec {
            drift_a: 0.0,
            gaussian_q: 2.0,
            measure: MeasureFamily::zero(),
            subordinator: false,
        };
        assert_eq!(gauss.exponent(3.0).unwrap(), 9.0);
        let five = LevyModelSpec::drift_only(5.0);
        for z in [0.0, 0.7, 12.0] {
            assert_eq!(five.exponent_derivative(z, Derivative::First).unwrap(), -5.0);
        }
    }

    #[test]
    fn negative_argument_is_rejected() {
        let spec = LevyModelSpec::drift_only(1.0);
        assert!(matches!(spec.exponent(-1.0), Err(LevyError::DomainError(_))));
        assert!(matches!(
            spec.exponent_derivative(-0.1, Derivative::First),
            Err(LevyError::DomainError(_))
        ));
    }

    #[test]
    fn gamma_subordinator_frullani() {
        // Frullani: ∫₀^∞ (e^{-zy} - 1) e^{-y}/y dy = -ln(1+z)
        let spec = LevyModelSpec::gamma_subordinator(1.0, 1.0);
        let z = std::f64::consts::E - 1.0;
        assert!(rel(spec.exponent(z).unwrap(), -1.0) < 1e-9);
        assert!(spec.exponent(0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn point_mass_derivatives() {
        let spec = LevyModelSpec {
            drift_a: 0.0,
            gaussian_q: 0.0,
            measure: MeasureFamily::PointMasses {
                masses: vec![PointMass { location: 2.0, weight: 1.0 }],
            },
            subordinator: false,
        };
        assert_eq!(spec.exponent_derivative(0.0, Derivative::First).unwrap(), -2.0);
        assert_eq!(spec.exponent_derivative(0.0, Derivative::Second).unwrap(), 4.0);
        // J(z) = e^{-2z} - 1 for a jump at 2 (no compensator above 1)
        assert!(rel(spec.exponent(0.5).unwrap(), (-1.0f64).exp() - 1.0) < 1e-15);
        assert_eq!(spec.small_jump_moment(1.0).unwrap(), 0.0);
        assert_eq!(spec.small_jump_moment(2.0).unwrap(), 4.0);
    }

    #[test]
    fn small_jump_moment_closed_forms() {
        let stable = LevyModelSpec {
            drift_a: 0.0,
            gaussian_q: 0.0,
            measure: MeasureFamily::StableLike {
                c: 1.0,
                alpha: 0.5,
                y_max: 1.0,
            },
            subordinator: false,
        };
        let expected = 0.25f64.powf(1.5) / 1.5;
        assert!(rel(stable.small_jump_moment(0.25).unwrap(), expected) < 1e-10);
        let gamma = LevyModelSpec::gamma_subordinator(1.0, 1.0);
        let expected = 1.0 - 2.0 * (-1.0f64).exp();
        assert!(rel(gamma.small_jump_moment(1.0).unwrap(), expected) < 1e-10);
    }

    #[test]
    fn compensated_exp_is_continuous_at_switch() {
        let a = compensated_exp(0.999_999e-4);
        let b = compensated_exp(1.000_001e-4);
        assert!(rel(a, b) < 1e-5);
        assert!(rel(compensated_exp(1e-9), 0.5e-18) < 1e-8);
    }

    #[test]
    fn invalid_specs() {
        let bad_alpha = LevyModelSpec {
            drift_a: 0.0,
            gaussian_q: 0.0,
            measure: MeasureFamily::StableLike {
                c: 1.0,
                alpha: 2.0,
                y_max: 1.0,
            },
            subordinator: false,
        };
        assert!(bad_alpha.validate().is_err());
        let neg_q = LevyModelSpec {
            gaussian_q: -1.0,
            ..LevyModelSpec::drift_only(0.0)
        };
        assert!(neg_q.validate().is_err());
    }

    #[test]
    fn heavy_user_tail_is_not_integrable() {
        // density ~ y^{-1.5} beyond the table: ∫₁^∞ y ν(dy) diverges
        let spec = LevyModelSpec {
            drift_a: 0.0,
            gaussian_q: 0.0,
            measure: MeasureFamily::UserDensity(UserDensity {
                table: vec![(0.5, 1.0), (2.0, 0.25)],
                tail_exponent: Some(-1.5),
                certificates: None,
            }),
            subordinator: false,
        };
        assert!(matches!(
            spec.exponent_derivative(0.0, Derivative::First),
            Err(LevyError::NonIntegrable { .. })
        ));
        // at z > 0 the exponential damping makes it finite
        assert!(spec.exponent_derivative(1.0, Derivative::First).is_ok());
    }

    #[test]
    fn assumption_report() {
        let vol = VolatilitySpec::constant(3.0);
        let neg = LevyModelSpec {
            drift_a: 0.0,
            gaussian_q: 0.0,
            measure: MeasureFamily::PointMasses {
                masses: vec![PointMass {
                    location: -0.5,
                    weight: 1.0,
                }],
            },
            subordinator: false,
        };
        let report = check_assumptions(&neg, &vol);
        assert!(!report.a2.pass);
        assert_eq!(report.first_failure().unwrap().0, "A2");

        let gamma = LevyModelSpec::gamma_subordinator(1.0, 1.0);
        let report = check_assumptions(&gamma, &VolatilitySpec::constant(0.3));
        assert!(report.a2.pass && report.a4.pass);
        assert!(rel(report.second_moment, 1.0) < 1e-9);

        let stable = LevyModelSpec {
            drift_a: 0.0,
            gaussian_q: 0.0,
            measure: MeasureFamily::StableLike {
                c: 1.0,
                alpha: 1.5,
                y_max: 1.0,
            },
            subordinator: false,
        };
        let report = check_assumptions(&stable, &VolatilitySpec::constant(0.3));
        assert!(report.a4.pass && report.second_moment_finite);
        assert!(rel(report.second_moment, 1.0 / 0.5) < 1e-9);
    }

    #[test]
    fn json_uses_family_tag() {
        let spec = LevyModelSpec::gamma_subordinator(1.0, 2.0);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"family\":\"gamma_like\""), "{text}");
        let back: LevyModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
