//! Rule-based existence/explosion classification.

use super::{Derivative, LevyModelSpec, MeasureFamily};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ExistenceLogGrowth,
    ExplosionCubicLog,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    NecessaryCondition,
    Subordinator,
    TauberianRhoGt1,
    TauberianRhoLt1,
    TauberianRhoEq1Integral,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthClassification {
    pub verdict: Verdict,
    pub rule_fired: Rule,
    /// Index of regular variation of `U_ν` at zero, when finite.
    pub rho: Option<f64>,
    /// Approximate 95% band for an estimated `rho`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_band: Option<(f64, f64)>,
    pub notes: String,
}

impl GrowthClassification {
    fn new(verdict: Verdict, rule_fired: Rule, rho: Option<f64>, notes: impl Into<String>) -> Self {
        Self {
            verdict,
            rule_fired,
            rho,
            rho_band: None,
            notes: notes.into(),
        }
    }
}

fn from_rho(rho: f64, notes: &str) -> GrowthClassification {
    if rho > 1.0 {
        GrowthClassification::new(Verdict::ExistenceLogGrowth, Rule::TauberianRhoGt1, Some(rho), notes)
    } else if rho < 1.0 {
        GrowthClassification::new(Verdict::ExplosionCubicLog, Rule::TauberianRhoLt1, Some(rho), notes)
    } else {
        unreachable!("boundary case handled by caller")
    }
}

/// Slope and standard error of the least-squares fit `ln U = ρ ln x + b`
/// over 41 log-spaced points in `[1e-6, 1e-2]`.
fn estimate_rho(spec: &LevyModelSpec) -> Option<(f64, f64)> {
    let n = 41;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for k in 0..n {
        let lx = (1e-6f64).ln() + (1e4f64).ln() * k as f64 / (n - 1) as f64;
        let u = spec.small_jump_moment(lx.exp()).ok()?;
        if !(u > 0.0) {
            return None;
        }
        xs.push(lx);
        ys.push(u.ln());
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let se = (sse / (n - 2) as f64 / sxx).sqrt();
    Some((slope, se))
}

/// Classifies `(a, q, ν)` into the existence or explosion regime.
///
/// Rules apply in priority order: necessary conditions (Gaussian part or
/// negative jumps), subordinator declaration, then the regular-variation
/// index `ρ` of `U_ν` at zero.
pub fn classify_growth(spec: &LevyModelSpec, lambda_bar: f64, t_star: f64) -> GrowthClassification {
    let limit = -1.0 / lambda_bar;
    if spec.gaussian_q > 0.0 {
        return GrowthClassification::new(
            Verdict::ExplosionCubicLog,
            Rule::NecessaryCondition,
            None,
            format!("Gaussian coefficient q = {} > 0", spec.gaussian_q),
        );
    }
    if let MeasureFamily::PointMasses { masses } = &spec.measure {
        if let Some(m) = masses.iter().find(|m| m.location < 0.0 && m.location > limit) {
            return GrowthClassification::new(
                Verdict::ExplosionCubicLog,
                Rule::NecessaryCondition,
                None,
                format!("ν charges (-1/λ̄, 0) = ({limit}, 0) with an atom at {}", m.location),
            );
        }
        if let Some(m) = masses.iter().find(|m| m.location <= limit) {
            return GrowthClassification::new(
                Verdict::Indeterminate,
                Rule::None,
                None,
                format!(
                    "atom at {} lies outside the admissible support (-1/λ̄, ∞); the model violates (A2)",
                    m.location
                ),
            );
        }
    }
    if spec.subordinator {
        return GrowthClassification::new(
            Verdict::ExistenceLogGrowth,
            Rule::Subordinator,
            None,
            "declared subordinator plus linear function",
        );
    }
    let horizon_note = format!("λ̄ = {lambda_bar}, T* = {t_star}");
    match &spec.measure {
        MeasureFamily::PointMasses { .. } => GrowthClassification::new(
            Verdict::ExistenceLogGrowth,
            Rule::TauberianRhoGt1,
            None,
            format!("finite activity: U_ν vanishes near 0, ρ = +∞; {horizon_note}"),
        ),
        &MeasureFamily::StableLike { c, alpha, .. } => {
            let rho = 2.0 - alpha;
            if rho == 1.0 {
                // U_ν(x) = c·x, so M ≡ c does not vanish at zero
                GrowthClassification::new(
                    Verdict::Indeterminate,
                    Rule::None,
                    Some(rho),
                    format!("ρ = 1 with constant slowly varying factor M ≡ {c}; integral test inapplicable"),
                )
            } else {
                from_rho(rho, &format!("U_ν(x) = c x^{{2-α}}/(2-α); {horizon_note}"))
            }
        }
        MeasureFamily::GammaLike { .. } => from_rho(2.0, &format!("U_ν(x) ~ c x²/2; {horizon_note}")),
        MeasureFamily::UserDensity(u) => {
            let Some(certs) = u.certificates else {
                return GrowthClassification::new(
                    Verdict::Indeterminate,
                    Rule::None,
                    None,
                    "user density without integrability certificates",
                );
            };
            if !(certs.small_jump_second_moment && certs.tail_first_moment) {
                return GrowthClassification::new(
                    Verdict::Indeterminate,
                    Rule::None,
                    None,
                    "user density certificates do not cover both integrability conditions",
                );
            }
            let Some((rho, se)) = estimate_rho(spec) else {
                return GrowthClassification::new(
                    Verdict::Indeterminate,
                    Rule::None,
                    None,
                    "could not evaluate U_ν on [1e-6, 1e-2]",
                );
            };
            let band = Some((rho - 1.96 * se, rho + 1.96 * se));
            let mut out = if (rho - 1.0).abs() < 0.1 {
                match certs.slowly_varying {
                    Some(m) if m.vanishes_at_zero() && m.log_integral_diverges() => GrowthClassification::new(
                        Verdict::ExistenceLogGrowth,
                        Rule::TauberianRhoEq1Integral,
                        Some(rho),
                        "ρ ≈ 1; declared M vanishes at 0 and ∫₀¹ M(x)/x dx = ∞",
                    ),
                    Some(_) => GrowthClassification::new(
                        Verdict::Indeterminate,
                        Rule::None,
                        Some(rho),
                        "ρ ≈ 1; declared M fails the integral test",
                    ),
                    None => GrowthClassification::new(
                        Verdict::Indeterminate,
                        Rule::None,
                        Some(rho),
                        "ρ ≈ 1 and no slowly varying factor declared",
                    ),
                }
            } else {
                from_rho(rho, &format!("ρ estimated by log-log regression of U_ν on [1e-6, 1e-2]; {horizon_note}"))
            };
            out.rho_band = band;
            out
        }
    }
}

/// Samples `ln z − λ̄ T* J'(z)` on a log grid `z = 10^k`, `k ∈ [0, decades]`.
///
/// Purely diagnostic: a finite sample cannot decide a limsup.
pub fn log_growth_diagnostic(
    spec: &LevyModelSpec,
    lambda_bar: f64,
    t_star: f64,
    decades: usize,
    per_decade: usize,
) -> Vec<(f64, f64)> {
    let n = decades * per_decade;
    (0..=n)
        .filter_map(|k| {
            let z = 10f64.powf(k as f64 / per_decade as f64);
            let d = spec.exponent_derivative(z, Derivative::First).ok()?;
            Some((z, z.ln() - lambda_bar * t_star * d))
        })
        .collect()
}
