//! Deterministic volatility surfaces `λ̃(t, x) = Σ a_n(t) b_n(t + x)` and
//! initial forward curves.

use crate::grid::GridSpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VolatilityError {
    #[error("volatility surface needs at least one term")]
    Empty,
    #[error("declared bounds must satisfy 0 < lambda_lower <= lambda_upper < inf, got [{lower}, {upper}]")]
    BadBounds { lower: f64, upper: f64 },
    #[error("λ̃({t}, {x}) = {value} lies outside the declared bounds [{lower}, {upper}]")]
    OutOfBounds {
        t: f64,
        x: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("|∂λ̃/∂x({t}, {x})| = {value} exceeds the declared bound {bound}")]
    DerivativeBound { t: f64, x: f64, value: f64, bound: f64 },
    #[error("time_only flag is {declared} but the maturity factors say otherwise")]
    TimeOnlyMismatch { declared: bool },
    #[error("(A1) the initial curve must be positive, r0({x}) = {value}")]
    NonPositiveInitialCurve { x: f64, value: f64 },
    #[error("initial curve table needs at least two points with increasing x")]
    BadTable,
}

/// Scalar building block for volatility factors and initial curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFn {
    Constant { value: f64 },
    Affine { intercept: f64, slope: f64 },
    /// `base + amplitude · e^{-rate·u}`
    ExpDecay { base: f64, amplitude: f64, rate: f64 },
}

impl ScalarFn {
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            ScalarFn::Constant { value } => value,
            ScalarFn::Affine { intercept, slope } => intercept + slope * u,
            ScalarFn::ExpDecay { base, amplitude, rate } => base + amplitude * (-rate * u).exp(),
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            ScalarFn::Constant { .. } => 0.0,
            ScalarFn::Affine { slope, .. } => slope,
            ScalarFn::ExpDecay { amplitude, rate, .. } => -rate * amplitude * (-rate * u).exp(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            ScalarFn::Constant { .. } => true,
            ScalarFn::Affine { slope, .. } => slope == 0.0,
            ScalarFn::ExpDecay { amplitude, rate, .. } => amplitude == 0.0 || rate == 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolTerm {
    /// `a_n(t)`
    pub time: ScalarFn,
    /// `b_n(u)`, evaluated at `u = t + x`
    pub maturity: ScalarFn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilitySpec {
    pub terms: Vec<VolTerm>,
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    pub x_derivative_bound: f64,
    pub time_only: bool,
}

impl VolatilitySpec {
    /// `λ̃(t, x) ≡ value`.
    pub fn constant(value: f64) -> Self {
        Self {
            terms: vec![VolTerm {
                time: ScalarFn::Constant { value },
                maturity: ScalarFn::Constant { value: 1.0 },
            }],
            lambda_lower: value,
            lambda_upper: value,
            x_derivative_bound: 0.0,
            time_only: true,
        }
    }

    /// `λ̃(t, x) = λ̃(t)` with the given time profile; bounds are filled in
    /// from a sample over `[0, t_star]`.
    pub fn time_only(profile: ScalarFn, t_star: f64) -> Self {
        let (lo, hi) = (0..=1000)
            .map(|k| profile.value(t_star * k as f64 / 1000.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Self {
            terms: vec![VolTerm {
                time: profile,
                maturity: ScalarFn::Constant { value: 1.0 },
            }],
            lambda_lower: lo,
            lambda_upper: hi,
            x_derivative_bound: 0.0,
            time_only: true,
        }
    }

    /// Musiela form `λ̃(t, x)`.
    #[inline]
    pub fn musiela(&self, t: f64, x: f64) -> f64 {
        self.standard(t, t + x)
    }

    /// Standard form `λ(t, T) = λ̃(t, T - t) = Σ a_n(t) b_n(T)`.
    #[inline]
    pub fn standard(&self, t: f64, maturity: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.time.value(t) * term.maturity.value(maturity))
            .sum()
    }

    /// `∂λ̃/∂x (t, x)`.
    pub fn x_derivative(&self, t: f64, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.time.value(t) * term.maturity.derivative(t + x))
            .sum()
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_upper
    }

    /// Checks the declared bounds on every `(t_i, x_j)` node with
    /// `t_i <= T*`, `x_j <= T_max`.
    pub fn validate(&self, grid: &GridSpec) -> Result<(), VolatilityError> {
        if self.terms.is_empty() {
            return Err(VolatilityError::Empty);
        }
        if !(self.lambda_lower > 0.0 && self.lambda_lower <= self.lambda_upper && self.lambda_upper.is_finite()) {
            return Err(VolatilityError::BadBounds {
                lower: self.lambda_lower,
                upper: self.lambda_upper,
            });
        }
        let structural = self.terms.iter().all(|t| t.maturity.is_constant());
        if structural != self.time_only {
            return Err(VolatilityError::TimeOnlyMismatch {
                declared: self.time_only,
            });
        }
        let slack = 1e-12 * self.lambda_upper;
        for i in 0..=grid.n_t() {
            let t = grid.time(i);
            for j in 0..=grid.n_maturity() {
                let x = grid.maturity(j);
                let value = self.musiela(t, x);
                if !(value >= self.lambda_lower - slack && value <= self.lambda_upper + slack) {
                    return Err(VolatilityError::OutOfBounds {
                        t,
                        x,
                        value,
                        lower: self.lambda_lower,
                        upper: self.lambda_upper,
                    });
                }
                let dx = self.x_derivative(t, x).abs();
                if dx > self.x_derivative_bound + slack {
                    return Err(VolatilityError::DerivativeBound {
                        t,
                        x,
                        value: dx,
                        bound: self.x_derivative_bound,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Initial forward curve `r_0(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCurve {
    Constant { level: f64 },
    Affine { intercept: f64, slope: f64 },
    /// `level + amplitude · e^{-rate·x}`
    ExponentialDecay { level: f64, amplitude: f64, rate: f64 },
    /// Linear interpolation through `(x, r0)` pairs, flat outside.
    Table { points: Vec<(f64, f64)> },
}

impl InitialCurve {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            InitialCurve::Constant { level } => *level,
            InitialCurve::Affine { intercept, slope } => intercept + slope * x,
            InitialCurve::ExponentialDecay { level, amplitude, rate } => level + amplitude * (-rate * x).exp(),
            InitialCurve::Table { points } => {
                let k = points.partition_point(|p| p.0 <= x);
                if k == 0 {
                    points[0].1
                } else if k == points.len() {
                    points[k - 1].1
                } else {
                    let (x0, y0) = points[k - 1];
                    let (x1, y1) = points[k];
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            InitialCurve::Constant { .. } => 0.0,
            InitialCurve::Affine { slope, .. } => *slope,
            InitialCurve::ExponentialDecay { amplitude, rate, .. } => -rate * amplitude * (-rate * x).exp(),
            InitialCurve::Table { points } => {
                let k = points.partition_point(|p| p.0 <= x);
                if k == 0 || k == points.len() {
                    0.0
                } else {
                    let (x0, y0) = points[k - 1];
                    let (x1, y1) = points[k];
                    (y1 - y0) / (x1 - x0)
                }
            }
        }
    }

    /// (A1): strictly positive on every maturity node of the grid.
    pub fn validate(&self, grid: &GridSpec) -> Result<(), VolatilityError> {
        if let InitialCurve::Table { points } = self {
            if points.len() < 2 || points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(VolatilityError::BadTable);
            }
        }
        for j in 0..=grid.n_maturity() {
            let x = grid.maturity(j);
            let value = self.value(x);
            if !(value > 0.0) || !value.is_finite() {
                return Err(VolatilityError::NonPositiveInitialCurve { x, value });
            }
        }
        Ok(())
    }

    /// `sup r_0` over the maturity nodes.
    pub fn sup_on(&self, grid: &GridSpec) -> f64 {
        (0..=grid.n_maturity())
            .map(|j| self.value(grid.maturity(j)))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
