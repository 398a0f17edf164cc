//! Fixtures shared by the benchmarks.

use hjmm_core::{
    field_a, field_b, simulate_path, Field, GridSpec, InitialCurve, LevyModelSpec, ModelConfig, SolverSettings,
    VolatilitySpec,
};

pub fn gamma_model(delta: f64) -> ModelConfig {
    ModelConfig {
        levy: LevyModelSpec::gamma_subordinator(1.0, 1.0),
        volatility: VolatilitySpec::constant(0.5),
        initial_curve: InitialCurve::ExponentialDecay {
            level: 0.05,
            amplitude: 0.03,
            rate: 1.0,
        },
        grid: GridSpec::new(delta, 1.0, 2.0, 1.0).expect("valid grid"),
        solver: SolverSettings::default(),
        eps: 1e-3,
    }
}

/// `ã` on one simulated path.
pub fn a_field(model: &ModelConfig, seed: u64) -> Field {
    let path = simulate_path(&model.levy, model.grid.t_star, seed, model.eps).expect("gamma paths simulate");
    let b = field_b(&model.volatility, &path, &model.grid).expect("finite b");
    field_a(&model.initial_curve, &b).expect("finite a")
}
