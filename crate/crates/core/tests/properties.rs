use hjmm_core::levy::{PointMass, UserDensity};
use hjmm_core::norms::integral_embedding_slack;
use hjmm_core::path::stochastic_integral;
use hjmm_core::quadrature::trapezoid;
use hjmm_core::*;
use proptest::prelude::*;

fn gamma() -> LevyModelSpec {
    LevyModelSpec::gamma_subordinator(1.3, 0.8)
}

fn stable(alpha: f64) -> LevyModelSpec {
    LevyModelSpec {
        drift_a: 0.2,
        gaussian_q: 0.0,
        measure: MeasureFamily::StableLike { c: 0.7, alpha, y_max: 2.0 },
        subordinator: false,
    }
}

fn user() -> LevyModelSpec {
    LevyModelSpec {
        drift_a: 0.0,
        gaussian_q: 0.1,
        measure: MeasureFamily::UserDensity(UserDensity {
            table: vec![(0.01, 50.0), (0.1, 4.0), (1.0, 0.5), (3.0, 0.05)],
            tail_exponent: Some(-3.5),
            certificates: None,
        }),
        subordinator: false,
    }
}

fn specs() -> Vec<LevyModelSpec> {
    vec![gamma(), stable(0.5), stable(1.5), user()]
}

fn point_mass_spec(atoms: &[(f64, f64)]) -> LevyModelSpec {
    let masses: Vec<PointMass> = atoms
        .iter()
        .map(|&(location, weight)| PointMass { location, weight })
        .collect();
    LevyModelSpec {
        drift_a: 0.3,
        gaussian_q: 0.0,
        measure: MeasureFamily::PointMasses { masses },
        subordinator: false,
    }
}

fn small_grid() -> GridSpec {
    GridSpec::new(0.125, 1.0, 2.0, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn first_derivative_is_nondecreasing(z1 in 0.0f64..200.0, dz in 0.0f64..50.0, k in 0usize..4) {
        let spec = &specs()[k];
        let a = spec.exponent_derivative(z1, Derivative::First).unwrap();
        let b = spec.exponent_derivative(z1 + dz, Derivative::First).unwrap();
        prop_assert!(b >= a - 1e-10 * a.abs().max(1.0), "J'({z1}) = {a}, J'({}) = {b}", z1 + dz);
    }

    #[test]
    fn derivatives_match_finite_differences(z in 0.1f64..50.0, k in 0usize..4) {
        let spec = &specs()[k];
        let h = 1e-4 * (1.0 + z);
        let j = |z: f64| spec.exponent(z).unwrap();
        let j1 = |z: f64| spec.exponent_derivative(z, Derivative::First).unwrap();
        let fd1 = (j(z + h) - j(z - h)) / (2.0 * h);
        let fd2 = (j1(z + h) - j1(z - h)) / (2.0 * h);
        let d1 = j1(z);
        let d2 = spec.exponent_derivative(z, Derivative::Second).unwrap();
        prop_assert!((fd1 - d1).abs() <= 1e-6 * d1.abs().max(1e-3), "J' at {z}: {fd1} vs {d1}");
        prop_assert!((fd2 - d2).abs() <= 1e-6 * d2.abs().max(1e-3), "J'' at {z}: {fd2} vs {d2}");
    }

    #[test]
    fn small_jump_moment_is_nondecreasing(x in 1e-6f64..5.0, factor in 1.0f64..10.0, k in 0usize..4) {
        let spec = &specs()[k];
        let a = spec.small_jump_moment(x).unwrap();
        let b = spec.small_jump_moment(x * factor).unwrap();
        prop_assert!(a >= 0.0 && b >= a * (1.0 - 1e-10));
    }

    #[test]
    fn table_agrees_with_quadrature(z in 0.0f64..1e4, k in 0usize..3) {
        let spec = &specs()[k];
        let table = TabulatedExponent::with_range(spec, 1e4, 5e-3).unwrap();
        for (d, got) in [
            (Derivative::First, table.first(z).unwrap()),
            (Derivative::Second, table.second(z).unwrap()),
        ] {
            let want = spec.exponent_derivative(z, d).unwrap();
            prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{d:?} at {z}: {got} vs {want}");
        }
    }

    #[test]
    fn operator_is_monotone_and_positive(
        seed in 0u64..1000,
        base in proptest::collection::vec(0.0f64..0.3, 9 * 17),
        bump in proptest::collection::vec(0.0f64..0.3, 9 * 17),
    ) {
        let grid = small_grid();
        let spec = gamma();
        let vol = VolatilitySpec::constant(0.4);
        let path = simulate_path(&spec, 1.0, seed, 1e-2).unwrap();
        let r0 = InitialCurve::ExponentialDecay { level: 0.05, amplitude: 0.02, rate: 1.0 };
        let a = field_a(&r0, &field_b(&vol, &path, &grid).unwrap()).unwrap();
        let (_, nm) = grid.shape();
        let mut h = Field::from_fn(grid, |i, j| base[i * nm + j]);
        let mut g = Field::from_fn(grid, |i, j| base[i * nm + j] + bump[i * nm + j]);
        h.apply_flat_extension();
        g.apply_flat_extension();
        let kh = apply_k(&h, &a, &vol, &spec).unwrap();
        let kg = apply_k(&g, &a, &vol, &spec).unwrap();
        for i in 0..=grid.n_t() {
            for j in i..=grid.n_maturity() {
                prop_assert!(kh.at(i, j) > 0.0);
                prop_assert!(kg.at(i, j) >= kh.at(i, j) - 1e-15);
            }
        }
    }

    #[test]
    fn embeddings_hold(
        values in proptest::collection::vec(0.0f64..10.0, 3..300),
        delta in 0.002f64..0.2,
        gamma in 0.05f64..8.0,
    ) {
        let n = slice_norms(&values, delta, gamma);
        let cells = values.len() - 1;
        let slack = integral_embedding_slack(n.l2_gamma, cells, delta, gamma);
        let integral = trapezoid(&values, delta);
        prop_assert!(integral <= n.l2_gamma / gamma.sqrt() + slack + 1e-12 * integral.max(1.0));
        prop_assert!(n.sup <= values[0] + n.h1_gamma / gamma.sqrt() + 1e-12 * n.sup.max(1.0));
        prop_assert!(n.h1_gamma >= n.l2_gamma);
    }

    #[test]
    fn b_field_is_the_jump_product(
        atoms in proptest::collection::vec((0.05f64..2.0, 0.1f64..3.0), 1..4),
        seed in 0u64..10_000,
    ) {
        let mut spec = point_mass_spec(&atoms);
        spec.drift_a = atoms.iter().filter(|a| a.0 < 1.0).map(|a| a.1 * a.0).sum();
        let path = simulate_path(&spec, 1.0, seed, 0.0).unwrap();
        prop_assert_eq!(path.drift_rate, 0.0);
        let grid = small_grid();
        let vol = VolatilitySpec::constant(0.6);
        let b = field_b(&vol, &path, &grid).unwrap();
        for i in 0..=grid.n_t() {
            for j in i..=grid.n_maturity() {
                let t = grid.time(i);
                let p: f64 = path.jumps().filter(|&(s, _)| s <= t).map(|(_, y)| 1.0 + 0.6 * y).product();
                prop_assert!((b.at(i, j) - p).abs() <= 1e-12 * p);
            }
        }
    }

    #[test]
    fn stochastic_integral_is_additive(seed in 0u64..10_000, split in 0.0f64..1.0, maturity in 1.0f64..2.0) {
        let spec = point_mass_spec(&[(0.4, 2.0), (1.5, 0.5)]);
        let path = simulate_path(&spec, 1.0, seed, 0.0).unwrap();
        let vol = VolatilitySpec::constant(0.3);
        // constant λ: the trapezoid drift part is exact on any cell count
        let whole = stochastic_integral(&vol, &path, 0.0, 1.0, maturity, 0.01);
        let parts = stochastic_integral(&vol, &path, 0.0, split, maturity, 0.01)
            + stochastic_integral(&vol, &path, split, 1.0, maturity, 0.01);
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1.0));
        prop_assert!((whole - 0.3 * path.value(1.0)).abs() <= 1e-12 * whole.abs().max(1.0));
    }
}

#[test]
fn iterates_stay_below_fixed_point_and_a_priori_bound() {
    let grid = GridSpec::new(1.0 / 16.0, 1.0, 2.0, 1.0).unwrap();
    let spec = gamma();
    let vol = VolatilitySpec::constant(0.5);
    let r0 = InitialCurve::Constant { level: 0.2 };
    for seed in 0..5 {
        let path = simulate_path(&spec, 1.0, path_seed(3, seed), 1e-3).unwrap();
        let a = field_a(&r0, &field_b(&vol, &path, &grid).unwrap()).unwrap();
        let problem = FixedPointProblem::new(&a, &vol, &spec);
        let report = problem.solve(&SolverSettings::default()).unwrap();
        assert_eq!(report.status, SolverStatus::Converged);
        let fixed = &report.final_field;
        let c1 = report.c1_bound.expect("subordinator admits c1");
        let mut h = Field::zeros(grid);
        for _ in 0..report.iterations {
            h = problem.apply(&h).unwrap();
            let norms = timeline_norms(&h);
            assert!(norms.l2_gamma <= c1 * (1.0 + 1e-12));
            for i in 0..=grid.n_t() {
                for j in i..=grid.n_maturity() {
                    assert!(h.at(i, j) <= fixed.at(i, j) + 1e-10);
                }
            }
        }
        assert!(report.is_monotone(1e-12));
        for w in report.l2_gamma_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }
}

#[test]
fn converged_slices_satisfy_the_sup_embedding() {
    let config = ModelConfig {
        levy: gamma(),
        volatility: VolatilitySpec::constant(0.5),
        initial_curve: InitialCurve::ExponentialDecay {
            level: 0.05,
            amplitude: 0.04,
            rate: 2.0,
        },
        grid: GridSpec::new(1.0 / 16.0, 1.0, 2.0, 0.5).unwrap(),
        solver: SolverSettings::default(),
        eps: 1e-3,
    };
    let run = config.run_path(&config.levy, 17).unwrap();
    let f = &run.report.final_field;
    for i in 0..=config.grid.n_t() {
        let t = config.grid.time(i);
        let n = weighted_norms(f, t).unwrap();
        let r = f.musiela_slice(i);
        assert!(n.sup <= r[0] + n.h1_gamma / config.grid.gamma.sqrt() + 1e-12);
    }
}

#[test]
fn bond_surface_invariants_on_solved_fields() {
    let config = ModelConfig {
        levy: gamma(),
        volatility: VolatilitySpec::constant(0.5),
        initial_curve: InitialCurve::Constant { level: 0.1 },
        grid: GridSpec::new(1.0 / 16.0, 1.0, 2.0, 1.0).unwrap(),
        solver: SolverSettings::default(),
        eps: 1e-3,
    };
    let grid = config.grid;
    for seed in 0..4 {
        let run = config.run_path(&config.levy, seed).unwrap();
        let s = bond_surface(&run.report.final_field);
        for i in 0..=grid.n_t() {
            assert_eq!(s.price(i, i), Some(1.0));
            let norms = weighted_norms(&run.report.final_field, grid.time(i)).unwrap();
            let cells = grid.n_maturity() - i;
            let floor = (-(norms.l2_gamma / grid.gamma.sqrt()
                + integral_embedding_slack(norms.l2_gamma, cells, grid.delta, grid.gamma)))
            .exp();
            for j in i + 1..=grid.n_maturity() {
                let p = s.price(i, j).unwrap();
                assert!(p > 0.0 && p <= 1.0);
                assert!(p <= s.price(i, j - 1).unwrap());
                assert!(p >= floor * (1.0 - 1e-12));
            }
        }
        for j in 0..=grid.n_maturity() {
            assert_eq!(s.discounted[[0, j]], s.prices[[0, j]]);
        }
    }
}

#[test]
fn drift_identity_converges_at_second_order() {
    let spec = gamma();
    let vol = VolatilitySpec::constant(0.5);
    let r0 = InitialCurve::ExponentialDecay {
        level: 0.3,
        amplitude: 0.2,
        rate: 1.5,
    };
    let path = simulate_path(&spec, 1.0, 99, 1e-3).unwrap();
    let residual = |delta: f64| {
        let grid = GridSpec::new(delta, 1.0, 2.0, 1.0).unwrap();
        let a = field_a(&r0, &field_b(&vol, &path, &grid).unwrap()).unwrap();
        let f = solve_fixed_point(&a, &vol, &spec, &SolverSettings::default())
            .unwrap()
            .final_field;
        let r = drift_identity_check(&spec, &vol, &f, 0.5, 0.75, 2.0).unwrap();
        (r.residual, r.left.abs())
    };
    let (coarse, scale) = residual(1.0 / 16.0);
    let (fine, _) = residual(1.0 / 32.0);
    assert!(coarse < 10.0 / 256.0 * scale, "{coarse} vs scale {scale}");
    assert!(coarse / fine > 3.0, "order: {coarse} -> {fine}");
}
