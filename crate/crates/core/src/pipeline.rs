//! One model setup and the per-path chain simulate → `b̃` → `ã` → solve.

use crate::grid::{GridError, GridSpec};
use crate::levy::{check_assumptions, LevyError, LevyExponent, LevyModelSpec};
use crate::path::{field_a, field_b, simulate_path, JumpPath, PathError};
use crate::solver::{FixedPointProblem, SolverReport, SolverSettings};
use crate::volatility::{InitialCurve, VolatilityError, VolatilitySpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Volatility(#[from] VolatilityError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("({label}) {detail}")]
    Assumption { label: &'static str, detail: String },
}

/// Everything needed to run the pipeline on one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub levy: LevyModelSpec,
    pub volatility: VolatilitySpec,
    pub initial_curve: InitialCurve,
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSettings,
    /// Jump truncation for infinite-activity measures.
    pub eps: f64,
}

/// Output of [`ModelConfig::run_path`].
#[derive(Debug, Clone)]
pub struct PathRun {
    pub path: JumpPath,
    pub report: SolverReport,
}

impl ModelConfig {
    /// Grid, volatility bounds, (A1) and (A2)–(A4).
    pub fn validate(&self) -> Result<(), ModelError> {
        self.grid.validate()?;
        self.levy.validate()?;
        self.volatility.validate(&self.grid)?;
        self.initial_curve.validate(&self.grid)?;
        let report = check_assumptions(&self.levy, &self.volatility);
        if let Some((label, detail)) = report.first_failure() {
            return Err(ModelError::Assumption {
                label,
                detail: detail.to_string(),
            });
        }
        Ok(())
    }

    pub fn simulate(&self, seed: u64) -> Result<JumpPath, ModelError> {
        Ok(simulate_path(&self.levy, self.grid.t_star, seed, self.eps)?)
    }

    /// Solves the fixed point on a given path.
    pub fn solve_on<E: LevyExponent + ?Sized>(
        &self,
        path: &JumpPath,
        exponent: &E,
        initial: Option<&crate::grid::Field>,
    ) -> Result<SolverReport, ModelError> {
        let b = field_b(&self.volatility, path, &self.grid)?;
        let a = field_a(&self.initial_curve, &b)?;
        let problem = FixedPointProblem::new(&a, &self.volatility, exponent);
        Ok(match initial {
            Some(h0) => problem.solve_from(h0, &self.solver)?,
            None => problem.solve(&self.solver)?,
        })
    }

    /// Simulates the path with `seed` and solves on it.
    pub fn run_path<E: LevyExponent + ?Sized>(&self, exponent: &E, seed: u64) -> Result<PathRun, ModelError> {
        let path = self.simulate(seed)?;
        let report = self.solve_on(&path, exponent, None)?;
        Ok(PathRun { path, report })
    }
}
