//! Adaptive Gauss–Kronrod (7/15) integration plus the composite trapezoid
//! helpers shared by the grid code.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {panels} panels")]
    NotConverged {
        estimate: f64,
        error: f64,
        panels: usize,
    },
    #[error("integrand returned a non-finite value at {at:e}")]
    NonFinite { at: f64 },
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            relative: 1e-10,
            absolute: 1e-15,
            max_panels: 400,
        }
    }
}

impl Tolerance {
    pub fn relative(relative: f64) -> Self {
        Self {
            relative,
            ..Self::default()
        }
    }
}

// Kronrod abscissae on [-1, 1]; odd indices are the Gauss–Legendre 7-point nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    roundoff: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Panel, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { at: center });
    }
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    let mut abs_kron = fc.abs() * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { at: x1 });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { at: x2 });
        }
        fv1[j] = f1;
        fv2[j] = f2;
        kron += WGK[j] * (f1 + f2);
        abs_kron += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let resasc = asc * half.abs();
    let mut error = ((kron - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    let resabs = abs_kron * half.abs();
    let roundoff = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(roundoff);
    }
    Ok(Panel {
        a,
        b,
        value: kron * half,
        error,
        roundoff,
    })
}

/// Integrates `f` over the finite interval `[a, b]` by globally adaptive
/// bisection of Gauss–Kronrod panels.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let mut panels = vec![kronrod(&mut f, a, b)?];
    loop {
        let (value, error, roundoff) = panels
            .iter()
            .fold((0.0, 0.0, 0.0), |(v, e, r), p| (v + p.value, e + p.error, r + p.roundoff));
        // the last clause accepts integrals that cancel down to rounding noise
        if error <= tol.absolute.max(tol.relative * value.abs()).max(2.0 * roundoff) {
            return Ok(value);
        }
        if panels.len() >= tol.max_panels {
            return Err(QuadError::NotConverged {
                estimate: value,
                error,
                panels: panels.len(),
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // panel no longer splittable in floating point
            return Err(QuadError::NotConverged {
                estimate: value,
                error,
                panels: panels.len() + 1,
            });
        }
        panels.push(kronrod(&mut f, p.a, mid)?);
        panels.push(kronrod(&mut f, mid, p.b)?);
    }
}

/// Integrates over `(0, b]` where `f(y)` behaves like `y^p` (`p > -1`) near zero.
///
/// Substitutes `y = b u^m` with `m = max(1, 2/(p+1))`, which turns the
/// endpoint singularity into a factor vanishing at least linearly in `u`.
pub fn integrate_from_zero<F: FnMut(f64) -> f64>(
    mut f: F,
    b: f64,
    p: f64,
    tol: Tolerance,
) -> Result<f64, QuadError> {
    let m = (2.0 / (p + 1.0)).max(1.0);
    integrate(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let y = b * u.powf(m);
            if y <= 0.0 {
                return 0.0;
            }
            f(y) * b * m * u.powf(m - 1.0)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Integrates over `[c, ∞)` (`c > 0`) through `y = c / u`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, c: f64, tol: Tolerance) -> Result<f64, QuadError> {
    integrate(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let y = c / u;
            f(y) * c / (u * u)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Composite trapezoid sum of equally spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Running trapezoid integral: `out[k] = ∫_0^{k·step}`.
pub fn cumulative_trapezoid(values: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * step * (values[k - 1] + v);
        }
        out.push(acc);
    }
    out
}
