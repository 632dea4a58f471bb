//! End-to-end acceptance suite. Each test prints a single pass/fail line.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{Complex, DMatrix, DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fuzzy_l1::fuzzy::{FuzzyGainTuner, Label};
use fuzzy_l1::integrate::TimeGrid;
use fuzzy_l1::l1::{
    adaptation_step, simulate_linearized, simulate_with_config, AdaptiveEstimates, ConstantGain,
    L1Config, SAMPLED_SUBSTEPS,
};
use fuzzy_l1::plant::{PlantScenario, ScenarioKind};
use fuzzy_l1::pso::{decode, run_pso, SwarmConfig, ENCODING_BOUNDS};
use fuzzy_l1::ss::{lyapunov_solve, place_poles};
use fuzzy_l1::tuned::default_output_set;

fn check(name: &str, body: impl FnOnce()) {
    let result = catch_unwind(AssertUnwindSafe(body));
    match &result {
        Ok(()) => println!("criterion {name}: pass"),
        Err(_) => println!("criterion {name}: fail"),
    }
    if let Err(e) = result {
        std::panic::resume_unwind(e);
    }
}

fn reference(t: f64) -> f64 {
    (0.5 * t).cos()
}

fn tuned_gain(scenario: &PlantScenario) -> FuzzyGainTuner {
    FuzzyGainTuner::new(
        scenario.k_p,
        scenario.k_d,
        scenario.k_e,
        scenario.k_const,
        default_output_set(),
    )
    .expect("scenario constants are valid")
}

#[test]
fn criterion_1_case3_destabilization_dichotomy() {
    check("1 (case-3 destabilization dichotomy)", || {
        let start = Instant::now();
        let scenario = PlantScenario::new(ScenarioKind::Case3);
        let grid = TimeGrid::new(0.0, 40.0, 0.01).unwrap();

        // Constant gain k = 20 on the recording-grid (sampled) controller.
        let mut sampled = L1Config::from_scenario(&scenario).unwrap();
        sampled.substeps = SAMPLED_SUBSTEPS;
        let constant =
            simulate_with_config(&scenario, &sampled, &ConstantGain(20.0), &grid, reference)
                .unwrap();
        let t_fail = constant.diverged.expect("constant gain must destabilize");
        assert!(t_fail < 40.0, "divergence at t = {t_fail}");

        // Fuzzy-scheduled gain with the frozen tuned parameters.
        let cfg = L1Config::from_scenario(&scenario).unwrap();
        let fuzzy =
            simulate_with_config(&scenario, &cfg, &tuned_gain(&scenario), &grid, reference)
                .unwrap();
        assert!(fuzzy.diverged.is_none(), "fuzzy run must stay bounded");
        let max_x = fuzzy
            .trajectory
            .records
            .iter()
            .map(|r| r.x1.abs().max(r.x2.abs()))
            .fold(0.0, f64::max);
        assert!(max_x < 1e3, "max ||x||_inf = {max_x}");
        let terminal_e = fuzzy.trajectory.last().unwrap().e.abs();
        assert!(terminal_e < 0.2, "terminal |e| = {terminal_e}");

        let elapsed = start.elapsed().as_secs_f64();
        assert!(elapsed < 10.0, "runtime {elapsed:.1} s exceeds 10 s");
    });
}

#[test]
fn criterion_2_case1_tracking_and_control_range() {
    check("2 (case-1 tracking and control-range reduction)", || {
        let start = Instant::now();
        let scenario = PlantScenario::new(ScenarioKind::Case1);
        let grid = TimeGrid::new(0.0, 40.0, 0.01).unwrap();
        let cfg = L1Config::from_scenario(&scenario).unwrap();

        let constant =
            simulate_with_config(&scenario, &cfg, &ConstantGain(20.0), &grid, reference).unwrap();
        let fuzzy =
            simulate_with_config(&scenario, &cfg, &tuned_gain(&scenario), &grid, reference)
                .unwrap();
        assert!(constant.diverged.is_none() && fuzzy.diverged.is_none());

        let max_u_const = constant.trajectory.max_abs_u(1.0, 40.0);
        let max_u_fuzzy = fuzzy.trajectory.max_abs_u(1.0, 40.0);
        assert!(
            max_u_fuzzy <= max_u_const,
            "max|u| fuzzy {max_u_fuzzy} > constant {max_u_const}"
        );
        let rms = fuzzy.trajectory.rms_error(5.0, 40.0);
        assert!(rms < 0.05, "fuzzy rms error {rms}");

        let elapsed = start.elapsed().as_secs_f64();
        assert!(elapsed < 10.0, "runtime {elapsed:.1} s exceeds 10 s");
    });
}

#[test]
fn criterion_3_pso_convergence() {
    check("3 (PSO convergence at CI scale)", || {
        let start = Instant::now();
        // Sampled-fidelity case 3 with the gain handoff threshold raised into
        // the reachable error band: schedules that fall back to the constant
        // gain excite the same control chatter that destabilizes it, so the
        // objective has real dynamic range for the swarm to descend.
        let mut scenario = PlantScenario::new(ScenarioKind::Case3);
        scenario.k_e = 0.67;
        let grid = TimeGrid::new(0.0, 2.0, 0.01).unwrap();
        let config = SwarmConfig {
            population: 10,
            generations: 15,
            seed: 2,
            gamma2: 1e-5,
            substeps: SAMPLED_SUBSTEPS,
            ..SwarmConfig::default()
        };
        let result = run_pso(&config, &scenario, &grid).unwrap();
        assert_eq!(result.history.len(), 15);
        for pair in result.history.windows(2) {
            assert!(pair[1] <= pair[0], "history must be non-increasing");
        }
        let ratio = result.best_value / result.history[0];
        assert!(ratio <= 0.5, "final/initial = {ratio:.3}");

        let elapsed = start.elapsed().as_secs_f64();
        assert!(elapsed < 120.0, "runtime {elapsed:.1} s exceeds 2 min");
    });
}

#[test]
fn criterion_4_projection_confinement() {
    check("4 (projection confinement, 1e5 steps)", || {
        let scenario = PlantScenario::new(ScenarioKind::Case1);
        let cfg = L1Config::from_scenario(&scenario).unwrap();
        let bounds = &cfg.bounds;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut est = AdaptiveEstimates::default();
        let mut violations = 0usize;
        for step in 0..100_000 {
            // Occasionally restart from a random interior point so the walk
            // explores both boundary layers and the interior.
            if step % 5_000 == 0 {
                est = AdaptiveEstimates {
                    omega_hat: rng.gen_range(0.0..10.0),
                    theta_hat: rng.gen_range(-10.0..10.0),
                    sigma_hat: rng.gen_range(-100.0..100.0),
                };
            }
            let x_tilde = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let x = Vector2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let u = rng.gen_range(-500.0..500.0);
            let dt = rng.gen_range(1e-5..0.01);
            est = adaptation_step(&est, &x_tilde, &x, u, &cfg, dt);
            if !est.within(bounds, 0.0) {
                violations += 1;
            }
        }
        assert_eq!(violations, 0, "{violations} confinement violations");
    });
}

#[test]
fn criterion_5_lyapunov_and_placement_numerics() {
    check("5 (Lyapunov and placement numerics)", || {
        let residual = |a_m: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>| -> f64 {
            (a_m.transpose() * p + p * a_m + q)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let spectral_error = |a_m: &DMatrix<f64>, poles: &[Complex<f64>; 2]| -> f64 {
            let mut eig = a_m.clone().complex_eigenvalues().as_slice().to_vec();
            let mut want = poles.to_vec();
            eig.sort_by(|a, b| (a.im).total_cmp(&b.im));
            want.sort_by(|a, b| (a.im).total_cmp(&b.im));
            eig.iter()
                .zip(&want)
                .map(|(e, w)| (e - w).norm())
                .fold(0.0, f64::max)
        };

        let q = DMatrix::identity(2, 2);
        for kind in [ScenarioKind::Case1, ScenarioKind::Case3] {
            let sc = PlantScenario::new(kind);
            let (_, a_m) = place_poles(&sc.a, &sc.b, &sc.poles).unwrap();
            let p = lyapunov_solve(&a_m, &q).unwrap();
            assert!(residual(&a_m, &p, &q) < 1e-9);
            assert!(spectral_error(&a_m, &sc.poles) < 1e-6);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DVector::from_column_slice(&[0.0, 1.0]);
        for _ in 0..100 {
            let re = -rng.gen_range(0.5..100.0);
            let im = rng.gen_range(0.0..10.0);
            let poles = [Complex::new(re, im), Complex::new(re, -im)];
            let (_, a_m) = place_poles(&a, &b, &poles).unwrap();
            let p = lyapunov_solve(&a_m, &q).unwrap();
            assert!(residual(&a_m, &p, &q) < 1e-9);
            assert!(spectral_error(&a_m, &poles) < 1e-6);
        }
    });
}

#[test]
fn criterion_6_filter_dc_property() {
    check("6 (filter DC property, linearized loop)", || {
        for kind in [ScenarioKind::Case1, ScenarioKind::Case3] {
            let scenario = PlantScenario::new(kind);
            let grid = TimeGrid::new(0.0, 8.0, 0.01).unwrap();
            let traj = simulate_linearized(&scenario, 20.0, &grid, |_| 1.0).unwrap();
            for rec in traj.records.iter().filter(|r| r.t >= 5.0) {
                assert!(
                    (rec.y - 1.0).abs() < 1e-3,
                    "{kind:?}: |y - 1| = {:.2e} at t = {}",
                    (rec.y - 1.0).abs(),
                    rec.t
                );
            }
        }
    });
}

#[test]
fn criterion_7_fuzzy_oracle_equivalence() {
    check("7 (fuzzy oracle equivalence)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let mut p = [0.0; 9];
            for (v, (lo, hi)) in p.iter_mut().zip(ENCODING_BOUNDS.iter()) {
                *v = rng.gen_range(*lo..=*hi);
            }
            let (set, _) = decode(&p);
            let tuner = FuzzyGainTuner::new(0.1, 0.05, 0.1, 20.0, set).unwrap();
            for i in 0..50 {
                for j in 0..50 {
                    let e = i as f64 / 49.0;
                    let de = j as f64 / 49.0;
                    let fast = tuner
                        .defuzzify_centroid(&tuner.infer(e, de))
                        .unwrap();
                    let slow = oracle_gain(&tuner, e, de);
                    assert!(
                        (fast - slow).abs() < 1e-9,
                        "mismatch {fast} vs {slow} at ({e}, {de})"
                    );
                }
            }
        }
    });
}

/// Brute-force 25-rule Mamdani evaluation, written independently of the
/// library's row-indexed inference loop.
fn oracle_gain(tuner: &FuzzyGainTuner, e_norm: f64, de_norm: f64) -> f64 {
    let label_index = |l: Label| match l {
        Label::Z => 0,
        Label::Vs => 1,
        Label::S => 2,
        Label::L => 3,
        Label::Vl => 4,
    };
    let mut agg = [0.0f64; 5];
    for ei in 0..5 {
        for di in 0..5 {
            let w = tuner.e_set.mfs[ei]
                .eval(e_norm)
                .min(tuner.de_set.mfs[di].eval(de_norm));
            let out = label_index(tuner.rules.output(ei, di));
            agg[out] = agg[out].max(w);
        }
    }
    let n = (12.0 / tuner.resolution).round() as usize;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=n {
        let x = 12.0 * i as f64 / n as f64;
        let mut m = 0.0f64;
        for k in 0..5 {
            if agg[k] > 0.0 {
                m = m.max(agg[k].min(tuner.output_set.mfs[k].eval(x)));
            }
        }
        num += x * m;
        den += m;
    }
    num / den
}

#[test]
fn criterion_8_determinism() {
    check("8 (fixed-seed determinism across pools)", || {
        let scenario = PlantScenario::new(ScenarioKind::Case1);
        let grid = TimeGrid::new(0.0, 2.0, 0.01).unwrap();
        let config = SwarmConfig {
            population: 8,
            generations: 6,
            seed: 9,
            substeps: SAMPLED_SUBSTEPS,
            ..SwarmConfig::default()
        };

        let fingerprint = |r: &fuzzy_l1::pso::PsoResult| {
            let mut bits: Vec<u64> = r.best.iter().map(|v| v.to_bits()).collect();
            bits.extend(r.history.iter().map(|v| v.to_bits()));
            bits.push(r.best_value.to_bits());
            bits
        };

        let base = fingerprint(&run_pso(&config, &scenario, &grid).unwrap());
        let again = fingerprint(&run_pso(&config, &scenario, &grid).unwrap());
        assert_eq!(base, again, "repeated invocation differs");
        for workers in [1usize, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .unwrap();
            let pooled = fingerprint(&pool.install(|| run_pso(&config, &scenario, &grid).unwrap()));
            assert_eq!(base, pooled, "pool of {workers} workers differs");
        }

        let cfg = L1Config::from_scenario(&scenario).unwrap();
        let sim = |_: ()| {
            simulate_with_config(&scenario, &cfg, &tuned_gain(&scenario), &grid, reference)
                .unwrap()
        };
        let (a, b) = (sim(()), sim(()));
        assert_eq!(
            a.trajectory.records.len(),
            b.trajectory.records.len()
        );
        for (ra, rb) in a.trajectory.records.iter().zip(&b.trajectory.records) {
            assert_eq!(ra.y.to_bits(), rb.y.to_bits());
            assert_eq!(ra.u.to_bits(), rb.u.to_bits());
        }
    });
}
