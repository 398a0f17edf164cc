//! Realizations of the driving Lévy path and the pathwise fields `b̃`, `ã`.

use crate::grid::{Field, GridSpec};
use crate::levy::{LevyError, LevyModelSpec, MeasureFamily, UserDensity};
use crate::quadrature;
use crate::volatility::{InitialCurve, VolatilityError, VolatilitySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("simulation unsupported: {0}")]
    UnsupportedSpec(String),
    #[error("({t}, {x}) lies outside [0, {t_star}] x [0, inf)")]
    DomainError { t: f64, x: f64, t_star: f64 },
    #[error("jump factor 1 + λ̃ΔL = {factor} at s = {s} is not positive (A2)")]
    NonPositiveFactor { s: f64, factor: f64 },
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Volatility(#[from] VolatilityError),
}

/// One realization of `L` on `[0, T*]`: `L(t) = drift_rate·t + Σ_{s_i ≤ t} size_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpPath {
    pub horizon: f64,
    pub drift_rate: f64,
    pub times: Vec<f64>,
    pub sizes: Vec<f64>,
    pub seed: u64,
    pub truncation_eps: f64,
}

impl JumpPath {
    /// Path without jumps.
    pub fn deterministic(horizon: f64, drift_rate: f64) -> Self {
        Self {
            horizon,
            drift_rate,
            times: Vec::new(),
            sizes: Vec::new(),
            seed: 0,
            truncation_eps: 0.0,
        }
    }

    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.sizes.iter().copied())
    }

    /// `L(t)`.
    pub fn value(&self, t: f64) -> f64 {
        self.drift_rate * t + self.jumps().take_while(|&(s, _)| s <= t).map(|(_, y)| y).sum::<f64>()
    }

    /// Jumps with times in `(t0, t1]`.
    fn jumps_in(&self, t0: f64, t1: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.jumps().filter(move |&(s, _)| s > t0 && s <= t1)
    }
}

/// Per-path seed derived from a master seed and the path index
/// (SplitMix64 finalizer), independent of how paths are scheduled.
pub fn path_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Density piece `vs (y / ys)^k` on `[lo, hi)`.
#[derive(Debug, Clone, Copy)]
struct PowerPiece {
    lo: f64,
    hi: f64,
    ys: f64,
    vs: f64,
    k: f64,
}

impl PowerPiece {
    fn mass(&self) -> f64 {
        if self.hi.is_infinite() {
            // requires k < -1
            -self.vs * self.ys / (self.k + 1.0) * (self.lo / self.ys).powf(self.k + 1.0)
        } else {
            UserDensity::segment_mass(self.ys, self.vs, self.k, self.lo, self.hi)
        }
    }

    fn sample(&self, u: f64) -> f64 {
        let p = self.k + 1.0;
        if self.hi.is_infinite() {
            return self.lo * (1.0 - u).powf(1.0 / p);
        }
        if p.abs() < 1e-12 {
            return self.lo * (self.hi / self.lo).powf(u);
        }
        let (a, b) = (self.lo.powf(p), self.hi.powf(p));
        (a + u * (b - a)).powf(1.0 / p).clamp(self.lo, self.hi)
    }
}

fn power_pieces(measure: &MeasureFamily, eps: f64) -> Result<Vec<PowerPiece>, PathError> {
    let mut pieces = Vec::new();
    match measure {
        &MeasureFamily::StableLike { c, alpha, y_max } => {
            if eps < y_max {
                pieces.push(PowerPiece {
                    lo: eps,
                    hi: y_max,
                    ys: 1.0,
                    vs: c,
                    k: -1.0 - alpha,
                });
            }
        }
        MeasureFamily::UserDensity(u) => {
            let n = u.table.len();
            for seg in 0..n - 1 {
                let (ys, vs) = u.table[seg];
                let lo = if seg == 0 { 0.0 } else { ys };
                let hi = u.table[seg + 1].0;
                let lo = lo.max(eps);
                if lo < hi {
                    pieces.push(PowerPiece {
                        lo,
                        hi,
                        ys,
                        vs,
                        k: u.slope(seg),
                    });
                }
            }
            if let Some(k) = u.tail_exponent {
                if k >= -1.0 {
                    return Err(PathError::UnsupportedSpec(format!(
                        "tail exponent {k} gives infinite jump intensity above the table"
                    )));
                }
                let (ys, vs) = u.table[n - 1];
                pieces.push(PowerPiece {
                    lo: ys.max(eps),
                    hi: f64::INFINITY,
                    ys,
                    vs,
                    k,
                });
            }
        }
        _ => unreachable!("only power-law families have pieces"),
    }
    Ok(pieces)
}

/// Drift of the simulated path: `a − ∫_{[eps, 1)} y ν(dy)` for the positive
/// part plus the exactly summed compensator of atoms in `(−1, 0)`.
fn simulated_drift(spec: &LevyModelSpec, eps: f64) -> Result<f64, PathError> {
    let compensator = match &spec.measure {
        MeasureFamily::PointMasses { masses } => masses
            .iter()
            .filter(|m| m.location > -1.0 && m.location < 1.0)
            .map(|m| m.weight * m.location)
            .sum(),
        &MeasureFamily::StableLike { c, alpha, y_max } => {
            let top = y_max.min(1.0);
            if eps >= top {
                0.0
            } else if (alpha - 1.0).abs() < 1e-12 {
                c * (top / eps).ln()
            } else {
                c / (1.0 - alpha) * (top.powf(1.0 - alpha) - eps.powf(1.0 - alpha))
            }
        }
        &MeasureFamily::GammaLike { c, beta } => {
            if eps >= 1.0 {
                0.0
            } else {
                c / beta * ((-beta * eps).exp() - (-beta).exp())
            }
        }
        MeasureFamily::UserDensity(_) => {
            if eps >= 1.0 {
                0.0
            } else {
                spec.positive_first_moment(eps, 1.0)?
            }
        }
    };
    Ok(spec.drift_a - compensator)
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
}

/// Draws one path of `L` on `[0, t_star]`.
///
/// Finite-activity measures are sampled exactly. Infinite-activity measures
/// keep only jumps of size at least `eps`; the dropped compensated small
/// jumps change the exponent by at most `z² U_ν(eps) / 2`.
pub fn simulate_path(spec: &LevyModelSpec, t_star: f64, seed: u64, eps: f64) -> Result<JumpPath, PathError> {
    spec.validate()?;
    if spec.gaussian_q > 0.0 {
        return Err(PathError::UnsupportedSpec(
            "Gaussian component q > 0 is not simulated; see the growth classifier (explosion regime)".into(),
        ));
    }
    if spec.measure.has_negative_jumps() {
        return Err(PathError::UnsupportedSpec(
            "negative jumps are not simulated; see the growth classifier (explosion regime)".into(),
        ));
    }
    if !(t_star > 0.0) {
        return Err(PathError::DomainError {
            t: t_star,
            x: 0.0,
            t_star,
        });
    }
    let finite = spec.measure.is_finite_activity();
    if !finite && !(eps > 0.0) {
        return Err(PathError::UnsupportedSpec(
            "infinite-activity measure needs a positive truncation eps".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jumps: Vec<(f64, f64)> = Vec::new();
    let time = |rng: &mut ChaCha8Rng| t_star * (1.0 - rng.random::<f64>());

    match &spec.measure {
        MeasureFamily::PointMasses { masses } => {
            for m in masses {
                let n = poisson_count(&mut rng, m.weight * t_star);
                for _ in 0..n {
                    let s = time(&mut rng);
                    jumps.push((s, m.location));
                }
            }
        }
        &MeasureFamily::GammaLike { beta, .. } => {
            let y1 = eps.max(1.0 / beta);
            let m1 = spec.positive_mass(eps, y1)?;
            let m2 = spec.positive_mass(y1, f64::INFINITY)?;
            let n = poisson_count(&mut rng, (m1 + m2) * t_star);
            let tail = Exp::new(beta).expect("beta > 0");
            for _ in 0..n {
                let s = time(&mut rng);
                // pick the region by its exact mass, then sample inside it by rejection
                let small = rng.random::<f64>() * (m1 + m2) < m1;
                let y = loop {
                    if small {
                        // proposal ∝ 1/y on [eps, y1], accept with e^{-β(y-eps)}
                        let y = eps * (y1 / eps).powf(rng.random::<f64>());
                        if rng.random::<f64>() < (-beta * (y - eps)).exp() {
                            break y;
                        }
                    } else {
                        // proposal ∝ e^{-βy} on [y1, ∞), accept with y1/y
                        let y = y1 + tail.sample(&mut rng);
                        if rng.random::<f64>() < y1 / y {
                            break y;
                        }
                    }
                };
                jumps.push((s, y));
            }
        }
        measure => {
            let pieces = power_pieces(measure, eps)?;
            let masses: Vec<f64> = pieces.iter().map(PowerPiece::mass).collect();
            let total: f64 = masses.iter().sum();
            let n = poisson_count(&mut rng, total * t_star);
            for _ in 0..n {
                let s = time(&mut rng);
                let mut pick = rng.random::<f64>() * total;
                let mut idx = pieces.len() - 1;
                for (k, m) in masses.iter().enumerate() {
                    if pick < *m {
                        idx = k;
                        break;
                    }
                    pick -= m;
                }
                let y = pieces[idx].sample(rng.random::<f64>());
                jumps.push((s, y));
            }
        }
    }
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let drift_rate = simulated_drift(spec, if finite { 0.0 } else { eps })?;
    Ok(JumpPath {
        horizon: t_star,
        drift_rate,
        times: jumps.iter().map(|j| j.0).collect(),
        sizes: jumps.iter().map(|j| j.1).collect(),
        seed,
        truncation_eps: if finite { 0.0 } else { eps },
    })
}

/// `∫_{t0}^{t1} λ(s, T) dL(s)`: the drift part by the composite trapezoid
/// with `ceil((t1 - t0)/step)` equal cells, jumps in `(t0, t1]` exactly.
pub fn stochastic_integral(
    vol: &VolatilitySpec,
    path: &JumpPath,
    t0: f64,
    t1: f64,
    maturity: f64,
    step: f64,
) -> f64 {
    let mut total = 0.0;
    if t1 > t0 && path.drift_rate != 0.0 {
        let n = (((t1 - t0) / step) - 1e-9).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        let values: Vec<f64> = (0..=n).map(|k| vol.standard(t0 + k as f64 * h, maturity)).collect();
        total += path.drift_rate * quadrature::trapezoid(&values, h);
    }
    total
        + path
            .jumps_in(t0, t1)
            .map(|(s, y)| vol.standard(s, maturity) * y)
            .sum::<f64>()
}

/// `∫₀ᵗ λ̃(s, t − s + x) dL(s)` with the drift part on a grid of step `step`.
pub fn integrate_against_path(
    vol: &VolatilitySpec,
    path: &JumpPath,
    t: f64,
    x: f64,
    step: f64,
) -> Result<f64, PathError> {
    if !(t >= 0.0 && t <= path.horizon * (1.0 + 1e-12) && x >= 0.0) {
        return Err(PathError::DomainError {
            t,
            x,
            t_star: path.horizon,
        });
    }
    Ok(stochastic_integral(vol, path, 0.0, t, t + x, step))
}

/// `b(t, T) = e^{∫₀ᵗ λ(s,T) dL(s)} · ∏_{s_i ≤ t} (1 + λ(s_i,T) ΔL_i) e^{−λ(s_i,T) ΔL_i}`
/// at a single point, with the drift integral on step `step`. With
/// `left_limit` the jump at exactly `t` (if any) is excluded.
pub fn b_value(
    vol: &VolatilitySpec,
    path: &JumpPath,
    t: f64,
    maturity: f64,
    step: f64,
    left_limit: bool,
) -> Result<f64, PathError> {
    let mut drift = 0.0;
    if t > 0.0 && path.drift_rate != 0.0 {
        let n = ((t / step) - 1e-9).ceil().max(1.0) as usize;
        let h = t / n as f64;
        let values: Vec<f64> = (0..=n).map(|k| vol.standard(k as f64 * h, maturity)).collect();
        drift = path.drift_rate * quadrature::trapezoid(&values, h);
    }
    let mut jump_sum = 0.0;
    let mut product = 1.0;
    for (s, y) in path.jumps() {
        if s > t || (left_limit && s == t) {
            break;
        }
        let ly = vol.standard(s, maturity) * y;
        let factor = 1.0 + ly;
        if !(factor > 0.0) {
            return Err(PathError::NonPositiveFactor { s, factor });
        }
        jump_sum += ly;
        product *= factor;
    }
    let integral = drift + jump_sum;
    Ok((integral - jump_sum).exp() * product)
}

/// The field `b̃` in standard coordinates, `b(t_i, T_j)` for `T_j ≥ t_i`.
pub fn field_b(vol: &VolatilitySpec, path: &JumpPath, grid: &GridSpec) -> Result<Field, PathError> {
    let (nt, nm) = grid.shape();
    let delta = grid.delta;
    let mut out = Field::zeros(*grid);
    let jumps: Vec<(f64, f64)> = path.jumps().collect();
    let mut column = vec![0.0; nt];
    for j in 0..nm {
        let maturity = grid.maturity(j);
        let rows = nt.min(j + 1);
        for (k, c) in column.iter_mut().enumerate().take(rows) {
            *c = vol.standard(grid.time(k), maturity);
        }
        let drift = quadrature::cumulative_trapezoid(&column[..rows], delta);
        let mut next_jump = 0;
        let mut jump_sum = 0.0;
        let mut product = 1.0;
        for (i, d) in drift.iter().enumerate() {
            let t = grid.time(i);
            while next_jump < jumps.len() && jumps[next_jump].0 <= t * (1.0 + 1e-14) {
                let (s, y) = jumps[next_jump];
                let ly = vol.standard(s, maturity) * y;
                let factor = 1.0 + ly;
                if !(factor > 0.0) {
                    return Err(PathError::NonPositiveFactor { s, factor });
                }
                jump_sum += ly;
                product *= factor;
                next_jump += 1;
            }
            let integral = path.drift_rate * d + jump_sum;
            out.values[[i, j]] = (integral - jump_sum).exp() * product;
        }
    }
    out.apply_flat_extension();
    Ok(out)
}

/// `a(t, T) = r₀(T) · b(t, T)`.
pub fn field_a(r0: &InitialCurve, b: &Field) -> Result<Field, PathError> {
    r0.validate(&b.grid)?;
    let grid = b.grid;
    let r: Vec<f64> = (0..=grid.n_maturity()).map(|j| r0.value(grid.maturity(j))).collect();
    let mut out = b.clone();
    for ((_, j), v) in out.values.indexed_iter_mut() {
        *v *= r[j];
    }
    Ok(out)
}

/// Mass of `ν` on `[eps, ∞)`, the jump intensity of the simulated path.
pub fn simulated_intensity(spec: &LevyModelSpec, eps: f64) -> Result<f64, PathError> {
    let lo = if spec.measure.is_finite_activity() { 0.0 } else { eps };
    Ok(spec.positive_mass(lo, f64::INFINITY)?)
}
