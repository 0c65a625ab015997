//! The acceptance gate: one test per shipped guarantee, each printing a
//! single verdict line (visible under `--nocapture`). Tolerances are part
//! of the contract and are asserted, not logged.

use std::fs;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use porous_lattice::attractor::{
    absorbing_radius, absorption_experiment, nullity_experiment, pullback_attraction,
    sample_ball, temperedness_of_r, theoretical_entry_time, CloudSpec, LabSetup,
};
use porous_lattice::cli::{
    cmd_absorb, cmd_ou_diag, cmd_pullback, cmd_simulate, cmd_tails, cmd_verify_phi,
};
use porous_lattice::config::ExperimentConfig;
use porous_lattice::dynamics::{
    check_continuous_dependence, cocycle, integrate, rhs, IntegrationOptions, ModelParams,
};
use porous_lattice::energy::energy_report;
use porous_lattice::lattice::{apply_a, apply_b, apply_bstar};
use porous_lattice::nonlinearity::{
    suggested_constants, verify_growth, verify_monotonicity, VerifyGrid,
};
use porous_lattice::{LatticeVector, OuPath, PhiSpec, SiteSequence, WienerPath};

fn verdict(n: u32, name: &str, detail: &str) {
    println!("acceptance {n:02} {name}: PASS ({detail})");
}

fn random_vector(rng: &mut ChaCha8Rng, half_width: usize, amp: f64) -> LatticeVector {
    LatticeVector::from_fn(half_width, |_| rng.random_range(-amp..amp))
}

fn flat_chart(t_min: f64, t_max: f64, dt: f64) -> Arc<OuPath> {
    let cells = ((t_max - t_min) / dt).round() as usize;
    let n_neg = (-t_min / dt).round() as usize;
    Arc::new(OuPath::from_values(dt, n_neg, vec![0.0; cells + 1]).unwrap())
}

fn params(
    half_width: usize,
    lambda: f64,
    alpha: f64,
    p: f64,
    g: SiteSequence,
    a: SiteSequence,
) -> ModelParams {
    ModelParams::new(half_width, lambda, alpha, PhiSpec::power_law(p).unwrap(), g, a).unwrap()
}

fn bump(half_width: usize, amplitude: f64, support: i64) -> SiteSequence {
    SiteSequence::from_fn(half_width, |i| {
        if i.abs() <= support {
            amplitude * (-((i * i) as f64) / 8.0).exp()
        } else {
            0.0
        }
    })
}

#[test]
fn a01_operator_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_energy = 0.0f64;
    let mut worst_adjoint = 0.0f64;
    for &n in &[4usize, 16, 64] {
        for _ in 0..1000 {
            let u = random_vector(&mut rng, n, 2.0);
            let w = random_vector(&mut rng, n + 1, 2.0);
            let au = apply_a(&u);
            let bu = apply_b(&u);

            let quad = au.inner(&u);
            let grad = bu.norm_l2_squared();
            let scale = 1.0f64.max(quad.abs()).max(grad.abs());
            worst_energy = worst_energy.max((quad - grad).abs() / scale);

            let lhs = bu.inner(&w);
            let rhs_ip = u.inner(&apply_bstar(&w));
            let scale = 1.0f64.max(lhs.abs()).max(rhs_ip.abs());
            worst_adjoint = worst_adjoint.max((lhs - rhs_ip).abs() / scale);

            assert!(
                quad <= 4.0 * u.norm_l2_squared() * (1.0 + 1e-12),
                "operator norm bound violated: (Au,u) = {quad}, 4|u|^2 = {}",
                4.0 * u.norm_l2_squared()
            );
        }
    }
    assert!(worst_energy <= 1e-12, "energy identity drift {worst_energy}");
    assert!(worst_adjoint <= 1e-12, "adjointness drift {worst_adjoint}");
    verdict(
        1,
        "operator-identities",
        &format!("3000 vectors, worst rel gaps {worst_energy:.2e} / {worst_adjoint:.2e}"),
    );
}

#[test]
fn a02_phi_conditions() {
    let grid = VerifyGrid::default();
    for &p in &[1.2, 1.5, 2.0, 3.0, 5.0] {
        let phi = PhiSpec::power_law(p).unwrap();
        let c = suggested_constants(p);
        let growth = verify_growth(&phi, c.c1, c.c2, &grid);
        let mono = verify_monotonicity(&phi, c.k, 0.0, &grid);
        assert!(
            growth.pass && growth.violation_count == 0,
            "growth violated at p = {p}: {growth}"
        );
        assert!(
            mono.pass && mono.violation_count == 0,
            "monotonicity violated at p = {p}: {mono}"
        );
    }
    let phi = PhiSpec::power_law(2.0).unwrap();
    let broken_c2 = verify_growth(&phi, 2.0, 2.0, &grid);
    assert!(!broken_c2.pass, "oversized c2 = 2 not detected");
    let broken_k = verify_monotonicity(&phi, 1.0, 0.0, &grid);
    assert!(!broken_k.pass, "oversized k = 1 not detected");
    verdict(
        2,
        "phi-conditions",
        "suggested constants clean for p in {1.2,1.5,2,3,5}; broken c2/k detected",
    );
}

#[test]
fn a03_ou_fidelity() {
    let horizon = 1e4;
    let dt = 0.01;

    let w = WienerPath::sample(1, -50.0, horizon, dt).unwrap();
    let ou = OuPath::from_wiener(&w);
    let (_, var) = ou.empirical_moments(0.0, horizon);
    assert!(
        (var - 0.5).abs() <= 0.025,
        "stationary variance {var} off by more than 5%"
    );

    let mut worst_z = 0.0f64;
    let mut worst_avg = 0.0f64;
    for seed in 1..=20u64 {
        let w = WienerPath::sample(seed, -50.0, horizon, dt).unwrap();
        let ou = OuPath::from_wiener(&w);
        let ratio_z = ou.z_at(horizon).abs() / horizon;
        let ratio_avg = (ou.integral(0.0, horizon) / horizon).abs();
        worst_z = worst_z.max(ratio_z);
        worst_avg = worst_avg.max(ratio_avg);
        assert!(ratio_z < 0.05, "seed {seed}: |z(T)|/T = {ratio_z}");
        assert!(ratio_avg < 0.05, "seed {seed}: |avg z| = {ratio_avg}");
    }
    verdict(
        3,
        "ou-fidelity",
        &format!("var {var:.4}; worst ratios {worst_z:.2e} / {worst_avg:.2e} over 20 seeds"),
    );
}

#[test]
fn a04_cocycle_property() {
    let n = 32;
    let model = params(n, 1.0, 0.4, 2.0, bump(n, 0.2, 3), SiteSequence::zeros(n));
    let opts = IntegrationOptions::with_tol(1e-9);
    let v0 = LatticeVector::from_fn(n, |i| 1.5 / (1.0 + (i * i) as f64));
    let (s, t) = (0.5, 0.5);

    let mut worst = 0.0f64;
    for seed in 1..=10u64 {
        let omega = WienerPath::sample(seed, -51.5, 1.05, 0.01).unwrap();
        let direct = cocycle(s + t, &omega, &v0, &model, &opts).unwrap();

        let mid = cocycle(s, &omega, &v0, &model, &opts).unwrap();
        let shifted = omega.shift(s).unwrap();
        let chart = OuPath::from_wiener(&shifted);
        let restart = mid.u.scale((-model.alpha() * chart.z_at(0.0)).exp());
        let relayed = cocycle(t, &shifted, &restart, &model, &opts).unwrap();

        let defect = direct.u.l2_distance(&relayed.u) / direct.u.norm_l2();
        worst = worst.max(defect);
        assert!(defect <= 1e-5, "seed {seed}: relative cocycle defect {defect}");
    }
    verdict(4, "cocycle-property", &format!("worst relative defect {worst:.2e} over 10 seeds"));
}

#[test]
fn a05_deterministic_decay_and_reference() {
    // exponential decay of the norm at every checkpoint
    let n = 8;
    let lambda = 1.3;
    let model = params(n, lambda, 0.0, 2.0, SiteSequence::zeros(n), SiteSequence::zeros(n));
    let chart = flat_chart(-1.0, 3.0, 0.1);
    let v0 = LatticeVector::from_fn(n, |i| 1.0 / (1 + i.abs()) as f64);
    let opts = IntegrationOptions::with_tol(1e-10).uniform_checkpoints(60, 3.0);
    let traj = integrate(&v0, &chart, &model, 3.0, &opts).unwrap();
    let n0 = v0.norm_l2_squared();
    for (&t, v) in traj.times().iter().zip(traj.states()) {
        let cap = (-lambda * t).exp() * n0 + 1e-9;
        let now = v.norm_l2_squared();
        assert!(now <= cap, "t = {t}: |v|^2 = {now} above e^(-lambda t)|v0|^2 = {cap}");
    }

    // adaptive endpoint against a fixed-step classical Runge-Kutta reference
    let nref = 4;
    let model = params(nref, 1.0, 0.0, 2.0, SiteSequence::zeros(nref), SiteSequence::zeros(nref));
    let chart = flat_chart(-1.0, 2.0, 0.1);
    let v0 = LatticeVector::unit(nref, 0).scale(1.5);

    let fine = integrate(
        &v0,
        &chart,
        &model,
        1.0,
        &IntegrationOptions::with_tol(1e-12),
    )
    .unwrap();

    let h = 1e-6;
    let steps = 1_000_000u32;
    let mut y = v0.clone();
    let mut t = 0.0;
    for _ in 0..steps {
        let k1 = rhs(t, &y, &model, &chart).unwrap();
        let k2 = rhs(t + 0.5 * h, &y.add(&k1.scale(0.5 * h)), &model, &chart).unwrap();
        let k3 = rhs(t + 0.5 * h, &y.add(&k2.scale(0.5 * h)), &model, &chart).unwrap();
        let k4 = rhs(t + h, &y.add(&k3.scale(h)), &model, &chart).unwrap();
        y = y.add(
            &k1.add(&k2.scale(2.0))
                .add(&k3.scale(2.0))
                .add(&k4)
                .scale(h / 6.0),
        );
        t += h;
    }
    let gap = fine.final_state().l2_distance(&y);
    assert!(gap <= 1e-8, "adaptive vs fixed-step reference gap {gap}");
    verdict(
        5,
        "deterministic-decay",
        &format!("decay bound at 61 checkpoints; reference gap {gap:.2e}"),
    );
}

#[test]
fn a06_energy_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let n = 8;
    let mut worst = f64::INFINITY;
    for run in 0..100u64 {
        let lambda = rng.random_range(0.5..2.0);
        let p = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        let alpha = rng.random_range(0.0..0.6);
        let g = SiteSequence::from_fn(n, |_| rng.random_range(-0.3..0.3));
        let a = SiteSequence::from_fn(n, |_| {
            0.05 * rng.sample::<f64, _>(StandardNormal).abs()
        });
        let model = params(n, lambda, alpha, p, g, a);
        let v0 = random_vector(&mut rng, n, 1.0);

        let w = WienerPath::sample(7000 + run, -30.0, 2.2, 0.02).unwrap();
        let ou = Arc::new(OuPath::from_wiener(&w));
        let opts = IntegrationOptions::with_tol(1e-8).uniform_checkpoints(120, 2.0);
        let traj = integrate(&v0, &ou, &model, 2.0, &opts).unwrap();
        let report = energy_report(&traj, &model, 1e-6);
        worst = worst.min(report.min_residual);
        assert!(
            report.pass,
            "run {run} (lambda {lambda:.3}, p {p}, alpha {alpha:.3}): min residual {}",
            report.min_residual
        );
        assert!(report.crude_bound_margin >= -1e-9, "crude bound failed on run {run}");
    }
    verdict(
        6,
        "energy-inequality",
        &format!("100 randomized runs, worst residual {worst:+.2e} >= -1e-6"),
    );
}

#[test]
fn a07_absorption() {
    let n = 64;
    let model = params(n, 1.0, 0.5, 2.0, bump(n, 0.4, 4), SiteSequence::zeros(n));
    let setup = LabSetup {
        noise_dt: 0.02,
        history: 30.0,
        tol: 1e-8,
        quad_horizon: 30.0,
    };
    let cloud = CloudSpec {
        axis_sites: vec![0, 32, -32, 64, -64],
        random_directions: 6,
        include_zero: true,
    };
    let seeds: Vec<u64> = (1..=20).collect();
    let times = [1.0, 2.0, 4.0, 6.0];
    let report = absorption_experiment(10.0, &times, &seeds, &model, &cloud, &setup).unwrap();
    assert!(report.all_absorbed_at_final_time, "a seed stayed outside at t = 6");
    for s in &report.per_seed {
        assert!(
            s.rows.last().unwrap().all_inside,
            "seed {} outside R^2 = {} at final time",
            s.seed,
            s.r_squared
        );
    }

    // deterministic alpha = 0 entry deadline against the closed form
    let det = params(4, 1.0, 0.0, 2.0, SiteSequence::zeros(4), SiteSequence::zeros(4));
    let chart = flat_chart(-40.0, 5.0, 0.01);
    let deadline = theoretical_entry_time(&chart, &det, 10.0, 30.0).unwrap();
    let closed_form = 2.0 * 10.0f64.ln();
    assert!(
        (deadline - closed_form).abs() <= 0.1 * closed_form,
        "deadline {deadline} vs closed form {closed_form}"
    );

    // and the state really is inside the unit ball just past the deadline
    let v0 = LatticeVector::unit(4, 0).scale(10.0);
    let opts = IntegrationOptions::with_tol(1e-8);
    let arrived = integrate(&v0, &chart, &det, closed_form * 1.05, &opts).unwrap();
    assert!(arrived.final_state().norm_l2_squared() <= 1.0);

    verdict(
        7,
        "absorption",
        &format!("20/20 seeds inside by t = 6; deterministic deadline {deadline:.4} vs {closed_form:.4}"),
    );
}

#[test]
fn a08_absorbing_radius_quadrature() {
    // horizon insensitivity on a live path
    let n = 8;
    let model = params(n, 1.0, 0.3, 2.0, bump(n, 0.5, 3), SiteSequence::zeros(n));
    let w = WienerPath::sample(42, -110.0, 0.1, 0.02).unwrap();
    let ou = OuPath::from_wiener(&w);
    let r50 = absorbing_radius(&ou, &model, 50.0, 0.02).unwrap();
    let r100 = absorbing_radius(&ou, &model, 100.0, 0.02).unwrap();
    let drift = (r50.r_squared - r100.r_squared).abs();
    assert!(drift < 1e-8, "horizon 50 -> 100 moved R^2 by {drift}");

    // no data, unit radius
    let bare = params(n, 1.0, 0.3, 2.0, SiteSequence::zeros(n), SiteSequence::zeros(n));
    let r = absorbing_radius(&ou, &bare, 50.0, 0.02).unwrap();
    assert_eq!(r.r_squared, 1.0, "R^2 must be exactly 1 without forcing data");

    // alpha = 0 closed form
    let lambda = 1.3;
    let a_seq = SiteSequence::from_fn(n, |i| if i.abs() <= 2 { 0.1 } else { 0.0 });
    let det = params(n, lambda, 0.0, 2.0, bump(n, 0.4, 3), a_seq);
    let chart = flat_chart(-80.0, 0.1, 0.01);
    let r = absorbing_radius(&chart, &det, 50.0, 0.01).unwrap();
    let level = 8.0 * det.g().norm_l2_squared() / lambda + 2.0 * det.a().norm_l1();
    let exact = 1.0 + level / lambda;
    assert!(
        (r.r_squared - exact).abs() <= 1e-10,
        "alpha = 0 closed form: {} vs {exact}",
        r.r_squared
    );
    assert!(r.tail_estimate <= 1e-10);

    verdict(
        8,
        "absorbing-radius-quadrature",
        &format!("horizon drift {drift:.1e}; closed-form gap {:.1e}", (r.r_squared - exact).abs()),
    );
}

#[test]
fn a09_radius_temperedness() {
    let n = 8;
    let model = params(n, 1.0, 0.5, 2.0, bump(n, 0.5, 3), SiteSequence::zeros(n));
    let setup = LabSetup {
        noise_dt: 0.02,
        history: 30.0,
        tol: 1e-8,
        quad_horizon: 30.0,
    };
    let t_list = [1.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0, 65.0, 80.0, 100.0];
    let seeds: Vec<u64> = (1..=10).collect();
    let report = temperedness_of_r(&seeds, &[0.1], &t_list, &model, &setup).unwrap();
    let mut worst: f64 = 0.0;
    for v in &report.verdicts {
        worst = worst.max(v.ratio);
        assert!(
            v.ratio <= 1e-2,
            "seed {}: e^(-gamma t) R^2 fell only by {:.3e} from t=1 to t=100",
            v.seed,
            v.ratio
        );
    }
    verdict(
        9,
        "radius-temperedness",
        &format!("worst final/initial ratio {worst:.2e} <= 1e-2 over 10 seeds"),
    );
}

#[test]
fn a10_tail_nullity() {
    let n = 32;
    let model = params(n, 1.0, 0.3, 2.0, bump(n, 0.5, 5), SiteSequence::zeros(n));
    let setup = LabSetup {
        noise_dt: 0.05,
        history: 30.0,
        tol: 1e-8,
        quad_horizon: 30.0,
    };
    let cloud = CloudSpec {
        axis_sites: vec![0, 8, -8, 16, -16],
        random_directions: 4,
        include_zero: true,
    };
    let times = [5.0, 10.0, 20.0, 40.0];
    let report =
        nullity_experiment(&[1e-3], &times, &[1, 2, 3], &model, &cloud, &setup, 8).unwrap();

    // worst minimal cut per pullback time, across seeds
    let worst: Vec<usize> = (0..times.len())
        .map(|r| {
            report
                .per_seed
                .iter()
                .map(|s| s.rows[r].per_epsilon[0].minimal_i0)
                .max()
                .unwrap()
        })
        .collect();
    for pair in worst.windows(2) {
        assert!(pair[1] <= pair[0], "minimal cut grew along pullback times: {worst:?}");
    }
    let summary = &report.summaries[0];
    assert!(summary.stabilized, "tail cuts did not stabilize: {worst:?}");
    assert!(
        summary.n_tilde <= 12,
        "stabilized cut {} not modestly above the forcing support 5",
        summary.n_tilde
    );
    verdict(
        10,
        "tail-nullity",
        &format!("minimal cuts {worst:?} non-increasing, settle at {}", summary.n_tilde),
    );
}

#[test]
fn a11_pullback_attraction() {
    let n = 64;
    let model = params(n, 1.0, 0.5, 2.0, bump(n, 1.0, 8), SiteSequence::zeros(n));
    let setup = LabSetup {
        noise_dt: 0.025,
        history: 30.0,
        tol: 1e-8,
        quad_horizon: 30.0,
    };
    let cloud = CloudSpec {
        axis_sites: vec![0, 64, -64],
        random_directions: 3,
        include_zero: true,
    };
    let times = [2.5, 5.0, 10.0, 20.0];
    let mut worst: f64 = 0.0;
    for seed in 1..=5u64 {
        let small = sample_ball(n, 1.0, &cloud, seed);
        let large = sample_ball(n, 10.0, &cloud, seed + 500);
        let report = pullback_attraction(&small, &large, &times, seed, &model, &setup).unwrap();
        worst = worst.max(report.final_mutual);
        assert!(
            report.final_mutual < 1e-4,
            "seed {seed}: mutual semi-distance {:.3e} at t = 20",
            report.final_mutual
        );
    }
    verdict(
        11,
        "pullback-attraction",
        &format!("worst mutual semi-distance {worst:.2e} < 1e-4 at t = 20, 5 seeds"),
    );
}

#[test]
fn a12_continuous_dependence() {
    let mut rng = ChaCha8Rng::seed_from_u64(1212);
    let n = 8;
    let mut tightest = f64::INFINITY;
    for run in 0..50u64 {
        let lambda = rng.random_range(0.5..2.0);
        let p = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        let alpha = rng.random_range(0.0..0.5);
        let model = params(
            n,
            lambda,
            alpha,
            p,
            SiteSequence::from_fn(n, |_| rng.random_range(-0.2..0.2)),
            SiteSequence::zeros(n),
        );
        let u0 = random_vector(&mut rng, n, 1.0);
        let delta = random_vector(&mut rng, n, 1.0);
        let v0 = u0.add(&delta.scale(1e-3 / delta.norm_l2()));
        let omega = WienerPath::sample(9000 + run, -30.0, 1.1, 0.02).unwrap();
        let report = check_continuous_dependence(
            &u0,
            &v0,
            &omega,
            &model,
            1.0,
            &IntegrationOptions::with_tol(1e-8),
        )
        .unwrap();
        assert!(
            report.pass,
            "run {run}: sup gap {} above bound {}",
            report.sup_gap_sq, report.bound
        );
        tightest = tightest.min(report.bound / report.sup_gap_sq.max(1e-300));
        assert!(report.sup_gap_sq > 0.0, "perturbation vanished, test degenerate");
    }
    verdict(
        12,
        "continuous-dependence",
        &format!("50 perturbation runs inside the bound, tightest factor {tightest:.1e}"),
    );
}

#[test]
fn a13_reproducibility() {
    let base = r#"{
        "model": {
            "half_width": 8, "lambda": 1.0, "p": 2.0, "alpha": 0.3,
            "g": { "profile": "gaussian-bump", "amplitude": 0.3, "width": 1.5, "support": 3 }
        },
        "noise": { "seeds": [1, 2], "dt": 0.05, "history": 10.0 },
        "experiment": {
            "t_end": 1.0, "checkpoints": 20,
            "pullback_times": [0.5, 1.0],
            "quad_horizon": 10.0,
            "ball_radius": 3.0,
            "epsilons": [0.1],
            "gammas": [0.1],
            "cut": 2,
            "pullback_radii": [1.0, 3.0],
            "diag_horizon": 16.0,
            "diag_threshold": 0.5,
            "cloud": { "axis_sites": [0, 4], "random_directions": 2 }
        },
        "output": { "emit_plot_data": true }
    }"#;
    let commands: [(&str, fn(&ExperimentConfig) -> porous_lattice::Result<i32>); 6] = [
        ("verify-phi", cmd_verify_phi),
        ("simulate", cmd_simulate),
        ("absorb", cmd_absorb),
        ("pullback", cmd_pullback),
        ("tails", cmd_tails),
        ("ou-diag", cmd_ou_diag),
    ];

    let root = tempfile::tempdir().unwrap();
    let dirs = [root.path().join("first"), root.path().join("second")];
    for dir in &dirs {
        let mut cfg: ExperimentConfig = serde_json::from_str(base).unwrap();
        cfg.validate().unwrap();
        cfg.output.dir = dir.clone();
        for (name, run) in &commands {
            run(&cfg).unwrap_or_else(|e| panic!("{name} failed: {e}"));
        }
    }

    let mut names: Vec<String> = fs::read_dir(&dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n.ends_with(".csv")), "no CSV outputs emitted");
    let mut compared = 0;
    for name in &names {
        let a = fs::read(dirs[0].join(name)).unwrap();
        let b = fs::read(dirs[1].join(name))
            .unwrap_or_else(|_| panic!("{name} missing from the second run"));
        if name.ends_with("_manifest.json") {
            // manifests echo the resolved config, which includes the output
            // directory itself; normalize that one field
            let norm = |bytes: &[u8], dir: &std::path::Path| {
                String::from_utf8(bytes.to_vec())
                    .unwrap()
                    .replace(&dir.display().to_string(), "<out>")
            };
            assert_eq!(norm(&a, &dirs[0]), norm(&b, &dirs[1]), "{name} differs beyond the echoed dir");
        } else {
            assert_eq!(a, b, "{name} differs between identical runs");
        }
        compared += 1;
    }
    verdict(
        13,
        "reproducibility",
        &format!("{compared} files byte-identical across repeated runs of all six commands"),
    );
}
