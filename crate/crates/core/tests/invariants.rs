use deepc_core::ambiguity::{cvar, epsilon_radius, wasserstein_distance, worst_case_expectation_oracle, OracleSettings};
use deepc_core::harness::report::{read_columns, signal_csv};
use deepc_core::harness::verify::random_system;
use deepc_core::harness::{sweep, AxisValue, ExperimentConfig, SweepAxis, SweepOptions};
use deepc_core::plant::{observability_matrix, simulate, toeplitz_impulse};
use deepc_core::robustctl::{solve_robust, CostTerm, TermForm};
use deepc_core::trajlib::{build_matrix, partition_data};
use deepc_core::{
    AmbiguitySpec, Concentration, ConstraintSpec, CostSpec, EmpiricalDistribution, NoiseSpec, NormIndex, Signal, Structure,
    TrajectoryMatrix,
};
use deepc_conic::Settings;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian_signal(rng: &mut ChaCha8Rng, dim: usize, len: usize) -> Signal<f64> {
    Signal::new(DMatrix::from_fn(dim, len, |_, _| rng.random_range(-1.0..1.0))).unwrap()
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize, dim: usize, r: NormIndex) -> EmpiricalDistribution<f64> {
    let samples = (0..n).map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0))).collect();
    EmpiricalDistribution::new(samples, r).unwrap()
}

fn norm_index(k: u8) -> NormIndex {
    match k % 3 {
        0 => NormIndex::One,
        1 => NormIndex::Two,
        _ => NormIndex::Inf,
    }
}

const TRENDS: &str = include_str!("../../../configs/trends.json");

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn output_is_linear_in_state_and_input(seed in 0u64..10_000, n in 1usize..5, m in 1usize..3, p in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, n, m, p);
        let (ua, ub) = (gaussian_signal(&mut rng, m, 12), gaussian_signal(&mut rng, m, 12));
        let (xa, xb) = (DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)), DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
        let k = rng.random_range(-3.0..3.0);
        let sum = Signal::new(ua.matrix() + ub.matrix() * k).unwrap();
        let ya = simulate(&sys, &xa, &ua, &NoiseSpec::none()).unwrap();
        let yb = simulate(&sys, &xb, &ub, &NoiseSpec::none()).unwrap();
        let ys = simulate(&sys, &(&xa + &xb * k), &sum, &NoiseSpec::none()).unwrap();
        let gap = (ys.matrix() - (ya.matrix() + yb.matrix() * k)).amax();
        prop_assert!(gap <= 1e-9 * (1.0 + ys.matrix().amax()));
    }

    #[test]
    fn window_equals_observability_plus_toeplitz(seed in 0u64..10_000, n in 1usize..5, m in 1usize..3, p in 1usize..3, len in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, n, m, p);
        let u = gaussian_signal(&mut rng, m, len);
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let y = simulate(&sys, &x0, &u, &NoiseSpec::none()).unwrap();
        let predicted = observability_matrix(&sys, len) * x0 + toeplitz_impulse(&sys, len) * u.to_vector();
        prop_assert!((predicted - y.to_vector()).amax() <= 1e-9 * (1.0 + y.to_vector().amax()));
    }

    #[test]
    fn trajectory_matrix_csv_round_trips(seed in 0u64..10_000, m in 1usize..3, depth in 1usize..5, hankel in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let structure = if hankel { Structure::Hankel } else { Structure::Page };
        let u = gaussian_signal(&mut rng, m, 4 * depth + 3);
        let h = build_matrix(&u, depth, structure).unwrap();
        let back = TrajectoryMatrix::from_csv(&h.to_csv().unwrap(), m).unwrap();
        prop_assert_eq!(back, h);
    }

    #[test]
    fn signal_csv_round_trips(seed in 0u64..10_000, dim in 1usize..4, len in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = gaussian_signal(&mut rng, dim, len);
        let text = signal_csv(&s, "y").unwrap();
        let (names, cols) = read_columns(&text).unwrap();
        prop_assert_eq!(names.len(), dim);
        for (i, col) in cols.iter().enumerate() {
            let row: Vec<f64> = s.matrix().row(i).iter().copied().collect();
            prop_assert_eq!(col, &row);
        }
    }

    #[test]
    fn distribution_csv_round_trips(seed in 0u64..10_000, n in 1usize..6, dim in 1usize..5, r in 0u8..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dist(&mut rng, n, dim, norm_index(r));
        let back = EmpiricalDistribution::<f64>::from_csv(&d.to_csv().unwrap()).unwrap();
        prop_assert_eq!(back.samples, d.samples);
    }

    #[test]
    fn wasserstein_is_a_metric(seed in 0u64..10_000, r in 0u8..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = norm_index(r);
        let (a, b, c) = (random_dist(&mut rng, 3, 2, r), random_dist(&mut rng, 4, 2, r), random_dist(&mut rng, 2, 2, r));
        let ab = wasserstein_distance(&a, &b).unwrap();
        let ba = wasserstein_distance(&b, &a).unwrap();
        let bc = wasserstein_distance(&b, &c).unwrap();
        let ac = wasserstein_distance(&a, &c).unwrap();
        prop_assert!(wasserstein_distance(&a, &a).unwrap() <= 1e-7);
        prop_assert!((ab - ba).abs() <= 1e-6 * (1.0 + ab));
        prop_assert!(ac <= ab + bc + 1e-6);
    }

    #[test]
    fn translating_all_atoms_moves_by_the_shift_norm(seed in 0u64..10_000, r in 0u8..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = norm_index(r);
        let a = random_dist(&mut rng, 3, 3, r);
        let shift = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let b = EmpiricalDistribution::new(a.samples.iter().map(|s| s + &shift).collect(), r).unwrap();
        let w = wasserstein_distance(&a, &b).unwrap();
        prop_assert!(w <= r.norm(shift.as_slice()) + 1e-6);
        // the mean must move by the shift, so no plan is cheaper
        prop_assert!(w >= r.norm(shift.as_slice()) - 1e-6);
    }

    #[test]
    fn cvar_is_nonincreasing_in_alpha(values in prop::collection::vec(-10.0f64..10.0, 1..30), a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let c_lo = cvar(&values, None, lo);
        let c_hi = cvar(&values, None, hi);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(c_lo >= c_hi - 1e-9);
        prop_assert!(c_hi >= mean - 1e-9 && c_lo <= max + 1e-9);
    }

    #[test]
    fn cvar_matches_its_variational_form(values in prop::collection::vec(-10.0f64..10.0, 1..20), alpha in 0.01f64..1.0) {
        // the infimum over τ is attained at one of the values
        let n = values.len() as f64;
        let inf = values
            .iter()
            .map(|&t| t + values.iter().map(|v| (v - t).max(0.0)).sum::<f64>() / (n * alpha))
            .fold(f64::INFINITY, f64::min);
        prop_assert!((cvar(&values, None, alpha) - inf).abs() <= 1e-9 * (1.0 + inf.abs()));
    }

    #[test]
    fn radius_shrinks_with_samples_and_grows_with_confidence(n in 1usize..500, k in 1usize..6, beta in 0.01f64..0.5) {
        let mut spec = AmbiguitySpec::new(0.0, NormIndex::Two);
        spec.concentration = Some(Concentration { c1: 1.5, c2: 0.3, a: 2.0 });
        spec.beta = beta;
        let here = epsilon_radius(&spec, n, k).unwrap();
        prop_assert!(epsilon_radius(&spec, n + 1, k).unwrap() <= here + 1e-12);
        spec.beta = beta / 2.0;
        prop_assert!(epsilon_radius(&spec, n, k).unwrap() >= here - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn oracle_is_nondecreasing_in_radius(seed in 0u64..1000, e1 in 0.0f64..0.5, e2 in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let dist = random_dist(&mut rng, 3, 6, NormIndex::Two);
        let g = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let target = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let phi = |c: &DVector<f64>| (c - &target).norm();
        let settings = OracleSettings { seed, ..Default::default() };
        let a = worst_case_expectation_oracle(&dist, &phi, &g, lo, &settings).unwrap();
        let b = worst_case_expectation_oracle(&dist, &phi, &g, hi, &settings).unwrap();
        prop_assert!(b >= a - 1e-6 * (1.0 + a.abs()));
    }

    #[test]
    fn robust_optimum_is_nondecreasing_in_radius(seed in 0u64..1000, e1 in 0.0f64..0.3, e2 in 0.0f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let sys = random_system(&mut rng, 2, 1, 1);
        let u = gaussian_signal(&mut rng, 1, 8 * 5);
        let ys: Vec<_> = (0..3)
            .map(|i| simulate(&sys, &DVector::zeros(2), &u, &NoiseSpec::gaussian(0.05, seed).with_stream(i)).unwrap())
            .collect();
        let blocks = partition_data(&u, &ys, 2, 3, Structure::Page).unwrap();
        let cost = CostSpec {
            f1: vec![CostTerm::norm(0.1, None, None)],
            f2: vec![CostTerm::tracking(1.0, &[1.0], 3, TermForm::Norm2)],
            f3: vec![CostTerm::norm(5.0, None, None)],
        };
        let z = DVector::zeros(2);
        let settings = Settings::default().with_tolerance(1e-8);
        let a = solve_robust(&blocks, &cost, &ConstraintSpec::unconstrained(), &AmbiguitySpec::new(lo, NormIndex::Two), &z, &z, &settings).unwrap();
        let b = solve_robust(&blocks, &cost, &ConstraintSpec::unconstrained(), &AmbiguitySpec::new(hi, NormIndex::Two), &z, &z, &settings).unwrap();
        prop_assert!(b.objective >= a.objective - 1e-5 * (1.0 + a.objective.abs()));
    }
}

fn small_trend_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(TRENDS).unwrap();
    cfg.control.steps = 6;
    cfg.data.len = 400;
    cfg.data.batches = 2;
    cfg
}

#[test]
fn run_log_error_matches_recomputation() {
    let (_, log) = deepc_core::harness::run_config(&small_trend_config()).unwrap();
    assert_eq!(log.records.len(), 6);
    assert_eq!(log.tracking_error, log.recompute_tracking_error());
}

#[test]
fn sweep_csv_is_byte_identical_without_timing() {
    let cfg = small_trend_config();
    let values = [AxisValue::Real(0.01), AxisValue::Real(0.1)];
    let opts = SweepOptions { trials: 2, timing: false };
    let a = sweep(&cfg, SweepAxis::Epsilon, &values, opts).unwrap().to_csv().unwrap();
    let b = sweep(&cfg, SweepAxis::Epsilon, &values, opts).unwrap().to_csv().unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 5);
}

#[test]
fn config_json_round_trips() {
    let cfg = ExperimentConfig::from_json(TRENDS).unwrap();
    assert_eq!(ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
}
