//! Uniform grids and fields in standard `(t, T)` coordinates.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("step {delta} does not divide {what} = {value}")]
    NotDivisible { what: &'static str, delta: f64, value: f64 },
    #[error("maximum maturity {t_max} is below the horizon {t_star}")]
    MaturityBelowHorizon { t_star: f64, t_max: f64 },
    #[error("weight exponent gamma must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("time {0} lies outside the grid")]
    OutOfRange(f64),
}

/// Uniform grid on `[0, T*] × [0, T_max]` with step `delta` in both
/// directions, plus the exponent `gamma` of the weight `e^{γx}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub delta: f64,
    pub t_star: f64,
    pub t_max: f64,
    pub gamma: f64,
}

fn steps(value: f64, delta: f64, what: &'static str) -> Result<usize, GridError> {
    let n = value / delta;
    let rounded = n.round();
    if rounded < 1.0 || (n - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(GridError::NotDivisible { what, delta, value });
    }
    Ok(rounded as usize)
}

impl GridSpec {
    pub fn new(delta: f64, t_star: f64, t_max: f64, gamma: f64) -> Result<Self, GridError> {
        let grid = Self {
            delta,
            t_star,
            t_max,
            gamma,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.delta > 0.0) {
            return Err(GridError::NonPositiveStep(self.delta));
        }
        if !(self.gamma > 0.0) {
            return Err(GridError::NonPositiveGamma(self.gamma));
        }
        if self.t_max < self.t_star {
            return Err(GridError::MaturityBelowHorizon {
                t_star: self.t_star,
                t_max: self.t_max,
            });
        }
        steps(self.t_star, self.delta, "t_star")?;
        steps(self.t_max, self.delta, "t_max")?;
        Ok(())
    }

    /// Number of time steps `T*/Δ`.
    pub fn n_t(&self) -> usize {
        (self.t_star / self.delta).round() as usize
    }

    /// Number of maturity steps `T_max/Δ`.
    pub fn n_maturity(&self) -> usize {
        (self.t_max / self.delta).round() as usize
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.delta
    }

    pub fn maturity(&self, j: usize) -> f64 {
        j as f64 * self.delta
    }

    /// Grid index of `t`, which must be a node up to rounding.
    pub fn index_of(&self, t: f64) -> Result<usize, GridError> {
        let k = t / self.delta;
        let r = k.round();
        if r < 0.0 || (k - r).abs() > 1e-9 * r.max(1.0) || r as usize > self.n_maturity() {
            return Err(GridError::OutOfRange(t));
        }
        Ok(r as usize)
    }

    /// Same grid with the step halved.
    pub fn refined(&self) -> Self {
        Self {
            delta: 0.5 * self.delta,
            ..*self
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_t() + 1, self.n_maturity() + 1)
    }
}

/// Values on the `(t_i, T_j)` nodes. Rows index time, columns maturity.
///
/// Only cells with `T_j >= t_i` carry independent data. Cells below the
/// diagonal hold the flat extension `f(t, T) = f(T, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    pub values: Array2<f64>,
}

/// Forward-rate field `f(t_i, T_j)`.
pub type RateField = Field;

impl Field {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: Array2::zeros(grid.shape()),
        }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        let (nt, nm) = grid.shape();
        for i in 0..nt {
            for j in i..nm {
                field.values[[i, j]] = f(i, j);
            }
        }
        field.apply_flat_extension();
        field
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Musiela value `r(t_i, x_m) = f(t_i, t_i + x_m)`.
    #[inline]
    pub fn musiela(&self, i: usize, m: usize) -> f64 {
        self.values[[i, i + m]]
    }

    /// Number of Musiela nodes available at time row `i`.
    pub fn musiela_len(&self, i: usize) -> usize {
        self.grid.n_maturity() - i + 1
    }

    pub fn musiela_slice(&self, i: usize) -> Vec<f64> {
        (0..self.musiela_len(i)).map(|m| self.musiela(i, m)).collect()
    }

    /// Overwrites the cells with `T_j < t_i` by the diagonal value `f(T_j, T_j)`.
    pub fn apply_flat_extension(&mut self) {
        let (nt, _) = self.grid.shape();
        for i in 1..nt {
            for j in 0..i {
                self.values[[i, j]] = self.values[[j, j]];
            }
        }
    }

    /// Largest value on the cells with `T >= t`.
    pub fn sup(&self) -> f64 {
        self.upper_cells().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.upper_cells().fold(f64::INFINITY, f64::min)
    }

    fn upper_cells(&self) -> impl Iterator<Item = f64> + '_ {
        let (nt, nm) = self.grid.shape();
        (0..nt).flat_map(move |i| (i..nm).map(move |j| self.values[[i, j]]))
    }

    /// `max |self - other|` over the cells with `T >= t`.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        let (nt, nm) = self.grid.shape();
        let mut d = 0.0f64;
        for i in 0..nt {
            for j in i..nm {
                let diff = (self.values[[i, j]] - other.values[[i, j]]).abs();
                if diff.is_nan() {
                    return f64::NAN;
                }
                d = d.max(diff);
            }
        }
        d
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.mapv(f),
        }
    }

    /// CSV with columns `t,T,<name>` over `T >= t`.
    pub fn to_standard_csv(&self, name: &str) -> String {
        let mut out = format!("t,T,{name}\n");
        let (nt, nm) = self.grid.shape();
        for i in 0..nt {
            for j in i..nm {
                let _ = writeln!(
                    out,
                    "{:.10e},{:.10e},{:.10e}",
                    self.grid.time(i),
                    self.grid.maturity(j),
                    self.values[[i, j]]
                );
            }
        }
        out
    }

    /// CSV with columns `t,x,<name>` in Musiela coordinates.
    pub fn to_musiela_csv(&self, name: &str) -> String {
        let mut out = format!("t,x,{name}\n");
        let (nt, _) = self.grid.shape();
        for i in 0..nt {
            for m in 0..self.musiela_len(i) {
                let _ = writeln!(
                    out,
                    "{:.10e},{:.10e},{:.10e}",
                    self.grid.time(i),
                    self.grid.maturity(m),
                    self.musiela(i, m)
                );
            }
        }
        out
    }
}
