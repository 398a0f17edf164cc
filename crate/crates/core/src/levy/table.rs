//! Interpolation table for `J`, `J'`, `J''`.
//!
//! Nodes are uniform in `s = ln(1 + z)`. Each quantity is interpolated by a
//! cubic Hermite polynomial in `s` whose slopes come from the next
//! derivative (`d/ds = (1 + z) d/dz`), so every value and slope at a node is
//! exact to quadrature accuracy. Arguments outside the table fall back to
//! direct quadrature; the table starts at the first node where all four
//! quantities are finite (with `∫y²ν = ∞`, `J''(0)` is not).

use super::{Derivative, LevyError, LevyExponent, LevyModelSpec};
use crate::quadrature::Tolerance;

/// Leading nodes that may be skipped before giving up.
const LEADING_SKIP: usize = 8;

#[derive(Debug, Clone)]
pub struct TabulatedExponent {
    spec: LevyModelSpec,
    step: f64,
    /// Index of the first tabulated node.
    first: usize,
    z_min: f64,
    z_max: f64,
    /// `[J, J', J'', J''']` at `z_k = e^{(first + k)·step} - 1`.
    nodes: Vec<[f64; 4]>,
}

impl TabulatedExponent {
    pub const DEFAULT_Z_MAX: f64 = 1e8;
    pub const DEFAULT_STEP: f64 = 5e-3;

    pub fn new(spec: &LevyModelSpec) -> Result<Self, LevyError> {
        Self::with_range(spec, Self::DEFAULT_Z_MAX, Self::DEFAULT_STEP)
    }

    /// Tabulates on `[0, z_max]`. Leading nodes where a quantity is
    /// infinite are skipped; the range is cut short at the first later node
    /// where any quantity overflows or fails to integrate.
    pub fn with_range(spec: &LevyModelSpec, z_max: f64, step: f64) -> Result<Self, LevyError> {
        spec.validate()?;
        let tol = Tolerance::relative(1e-12);
        let n = ((z_max.ln_1p()) / step).ceil() as usize;
        let mut nodes = Vec::with_capacity(n + 1);
        let mut first = 0;
        for k in 0..=n {
            let z = (k as f64 * step).exp_m1();
            let row = (|| -> Result<[f64; 4], LevyError> {
                Ok([
                    spec.exponent_with(z, tol)?,
                    spec.derivative_with(z, Derivative::First, tol)?,
                    spec.derivative_with(z, Derivative::Second, tol)?,
                    spec.derivative_with(z, Derivative::Third, tol)?,
                ])
            })();
            match row {
                Ok(r) if r.iter().all(|v| v.is_finite()) => nodes.push(r),
                Ok(_) | Err(_) if nodes.is_empty() && k < LEADING_SKIP => first = k + 1,
                Err(e) if nodes.is_empty() => return Err(e),
                Ok(_) | Err(_) => break,
            }
        }
        if nodes.len() < 2 {
            return Err(LevyError::InvalidSpec("exponent overflows immediately".into()));
        }
        Ok(Self {
            spec: spec.clone(),
            step,
            first,
            z_min: (first as f64 * step).exp_m1(),
            z_max: ((first + nodes.len() - 1) as f64 * step).exp_m1(),
            nodes,
        })
    }

    pub fn spec(&self) -> &LevyModelSpec {
        &self.spec
    }

    /// Smallest argument served from the table.
    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    /// Largest argument served from the table.
    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    fn interpolate(&self, z: f64, idx: usize) -> f64 {
        let s = z.ln_1p() / self.step - self.first as f64;
        let k = (s.max(0.0).floor() as usize).min(self.nodes.len() - 2);
        let t = s - k as f64;
        let z0 = ((self.first + k) as f64 * self.step).exp_m1();
        let z1 = ((self.first + k + 1) as f64 * self.step).exp_m1();
        let p0 = self.nodes[k][idx];
        let p1 = self.nodes[k + 1][idx];
        let m0 = self.nodes[k][idx + 1] * (1.0 + z0) * self.step;
        let m1 = self.nodes[k + 1][idx + 1] * (1.0 + z1) * self.step;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (3.0 * t2 - 2.0 * t3) * p1 + (t3 - t2) * m1
    }

    fn lookup(&self, z: f64, idx: usize) -> Result<f64, LevyError> {
        if !(z >= 0.0) {
            return Err(LevyError::DomainError(z));
        }
        if z >= self.z_min && z <= self.z_max {
            return Ok(self.interpolate(z, idx));
        }
        match idx {
            0 => self.spec.exponent(z),
            1 => self.spec.exponent_derivative(z, Derivative::First),
            _ => self.spec.exponent_derivative(z, Derivative::Second),
        }
    }
}

impl LevyExponent for TabulatedExponent {
    fn value(&self, z: f64) -> Result<f64, LevyError> {
        self.lookup(z, 0)
    }
    fn first(&self, z: f64) -> Result<f64, LevyError> {
        self.lookup(z, 1)
    }
    fn second(&self, z: f64) -> Result<f64, LevyError> {
        self.lookup(z, 2)
    }
}
