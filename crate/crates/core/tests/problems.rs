use dc_ode::newton::NewtonConfig;
use dc_ode::problems::{
    by_name, krogh_b, make_d6, make_krogh, make_oregonator, make_oscillator, make_robertson, make_vdp, BenchmarkProblem,
    ErrorKind, KROGH_U, PROBLEM_NAMES,
};
use dc_ode::stream::march;
use dc_ode::SchemeSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rhs(p: &BenchmarkProblem, t: f64, y: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0; y.len()];
    p.problem.rhs(t, y, &mut f);
    f
}

/// Central differences, exact up to rounding on the quadratic kinetics.
fn central_jacobian(p: &BenchmarkProblem, t: f64, y: &[f64]) -> Vec<f64> {
    let d = y.len();
    let mut jac = vec![0.0; d * d];
    for c in 0..d {
        let h = 1e-4 * (1.0 + y[c].abs());
        let mut plus = y.to_vec();
        let mut minus = y.to_vec();
        plus[c] += h;
        minus[c] -= h;
        let (fp, fm) = (rhs(p, t, &plus), rhs(p, t, &minus));
        for r in 0..d {
            jac[r * d + c] = (fp[r] - fm[r]) / (plus[c] - minus[c]);
        }
    }
    jac
}

/// Random states spanning the ranges each solution visits.
fn random_state(name: &str, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut u = |a: f64, b: f64| rng.gen_range(a..b);
    match name {
        "oscillator" => vec![u(0.135, 7.39)],
        "krogh" => (0..4).map(|_| u(-2.0, 2.0)).collect(),
        "robertson" => vec![u(0.0, 1.0), u(0.0, 5e-5), u(0.0, 1.0)],
        "d6" => vec![u(0.0, 1.0), u(0.0, 1.0), u(0.0, 1e-7)],
        "oregonator" => vec![u(1.0, 1.2e5), u(3e-3, 1.8e3), u(1.0, 3.2e4)],
        "vdp" => vec![u(-2.0, 2.0), u(-1300.0, 1300.0)],
        other => panic!("unknown problem {other}"),
    }
}

#[test]
fn analytic_jacobians_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for name in PROBLEM_NAMES {
        let p = by_name(name).unwrap();
        let d = p.problem.dim();
        for _ in 0..10 {
            let y = random_state(name, &mut rng);
            let t = rng.gen_range(0.0..10.0);
            let mut analytic = vec![0.0; d * d];
            assert!(p.problem.jacobian(t, &y, &mut analytic), "{name} has a Jacobian");
            let fd = central_jacobian(&p, t, &y);
            let scale = analytic.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let diff = analytic.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(diff <= 1e-6 * scale, "{name} at {y:?}: relative difference {}", diff / scale);
        }
    }
}

#[test]
fn kinetics_conserve_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in ["robertson", "d6"] {
        let p = by_name(name).unwrap();
        for _ in 0..100 {
            let y = random_state(name, &mut rng);
            let f = rhs(&p, 0.0, &y);
            let scale = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(f.iter().sum::<f64>().abs() <= 1e-15 * scale.max(1.0), "{name} at {y:?}: {f:?}");
        }
    }
}

#[test]
fn oscillator_exact_solution_satisfies_the_equation() {
    let p = make_oscillator();
    assert_eq!(p.exact_at(0.0).unwrap(), vec![1.0]);
    assert!((p.exact_at(std::f64::consts::FRAC_PI_2).unwrap()[0] - 2f64.exp()).abs() < 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let t: f64 = rng.gen_range(-50.0..50.0);
        let u = p.exact_at(t).unwrap()[0];
        // the derivative of e^{2 sin t}, written out
        let du = 2.0 * t.cos() * (2.0 * t.sin()).exp();
        assert!((du - rhs(&p, t, &[u])[0]).abs() <= 1e-12 * u.abs(), "t = {t}");
    }
}

#[test]
fn initial_slopes_by_substitution() {
    assert_eq!(rhs(&make_oscillator(), 0.0, &[1.0]), vec![2.0]);
    assert_eq!(rhs(&make_robertson(), 0.0, &[1.0, 0.0, 0.0]), vec![-0.04, 0.04, 0.0]);
    assert_eq!(rhs(&make_d6(), 0.0, &[1.0, 0.0, 0.0]), vec![-1.0, 0.0, 1.0]);
    let o = rhs(&make_oregonator(), 0.0, &[1.0, 2.0, 3.0]);
    assert!((o[2] + 0.322).abs() < 1e-15);
    assert!((o[1] + 1.0 / 77.27).abs() < 1e-15);
    assert_eq!(rhs(&make_vdp(1000.0, 3000.0), 0.0, &[2.0, 0.0]), vec![0.0, -2.0]);
}

#[test]
fn hand_differentiated_rows() {
    let mut j = vec![0.0; 9];
    make_robertson().problem.jacobian(0.0, &[1.0, 0.0, 0.0], &mut j);
    assert_eq!(&j[..3], &[-0.04, 0.0, 0.0]);
    let mu = 1000.0;
    let mut j = vec![0.0; 4];
    make_vdp(mu, 1.0).problem.jacobian(0.0, &[2.0, 0.0], &mut j);
    assert_eq!(&j[2..], &[-1.0, -3.0 * mu]);
}

#[test]
fn krogh_construction() {
    let p = make_krogh();
    assert_eq!(p.problem.dim(), 4);
    assert_eq!(p.problem.u0(), &[0.0, -2.0, -1.0, -1.0]);
    assert_eq!(p.problem.t_end(), 1000.0);
    // z(0) = U y(0) by hand: each row is half a signed sum
    let y0 = [0.0, -2.0, -1.0, -1.0];
    let z0: Vec<f64> = KROGH_U.iter().map(|row| row.iter().zip(&y0).map(|(a, b)| a * b).sum()).collect();
    assert_eq!(z0, vec![-2.0, 0.0, -1.0, -1.0]);
    // B(1,1) = Σ U(1,l) core(l,m) U(m,1) with U(1,·) = (-1, 1, 1, 1)/2, which
    // by hand is (-10 + 10 - 10 - 10 + 1000 + 1e-4) / 4
    let core = [
        [-10.0, -10.0, 0.0, 0.0],
        [10.0, -10.0, 0.0, 0.0],
        [0.0, 0.0, 1000.0, 0.0],
        [0.0, 0.0, 0.0, 1e-4],
    ];
    let u1 = [-0.5, 0.5, 0.5, 0.5];
    let mut b11 = 0.0f64;
    for l in 0..4 {
        for m in 0..4 {
            b11 += u1[l] * core[l][m] * u1[m];
        }
    }
    assert!((b11 - 245.000025).abs() <= 1e-12);
    assert!((krogh_b()[0][0] - b11).abs() <= 1e-12);
    // U is symmetric, so applying it without a transpose is the same thing
    for (i, row) in KROGH_U.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            assert_eq!(x, KROGH_U[j][i]);
        }
    }
}

#[test]
fn metadata() {
    for name in PROBLEM_NAMES {
        let p = by_name(name).unwrap();
        assert_eq!(p.name(), name);
        assert_eq!(p.exact.is_some(), name == "oscillator");
        assert_eq!(p.k0.is_none(), name == "oscillator");
        assert!(!p.magnitude_notes.is_empty());
    }
    assert_eq!(make_robertson().error_kind, ErrorKind::Relative);
    assert_eq!(make_d6().error_kind, ErrorKind::Relative);
    assert_eq!(make_krogh().error_kind, ErrorKind::Absolute);
    assert!(by_name("lorenz").is_none());
}

/// Componentwise extremes of a DC4 run.
fn extremes(p: &BenchmarkProblem, k: f64) -> (Vec<f64>, Vec<f64>) {
    let d = p.problem.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    let spec = SchemeSpec::trapezoid(4).unwrap();
    march(&p.problem, &spec, k, &NewtonConfig::for_initial_state(p.problem.u0()), |_, u| {
        for i in 0..d {
            lo[i] = lo[i].min(u[i]);
            hi[i] = hi[i].max(u[i]);
        }
    })
    .unwrap();
    (lo, hi)
}

#[test]
fn d6_third_component_stays_tiny() {
    let p = make_d6().with_t_end(1e-4).unwrap();
    let (lo, hi) = extremes(&p, 1e-8);
    assert!(lo[2] >= 0.0 && hi[2] < 1e-7 && hi[2] > 1e-9, "y3 in [{}, {}]", lo[2], hi[2]);
}

#[test]
fn oregonator_first_component_peaks_near_its_published_maximum() {
    // the first relaxation spike happens within the first 60 time units
    let p = make_oregonator().with_t_end(60.0).unwrap();
    let (lo, hi) = extremes(&p, 2e-4);
    assert!(lo[0] >= 0.99, "min y1 = {}", lo[0]);
    assert!((hi[0] - 117845.8).abs() <= 0.01 * 117845.8, "max y1 = {}", hi[0]);
}

#[test]
fn vdp_follows_its_slow_manifold_before_the_first_jump() {
    // on the slow branch mu (1 - y1²) y2 ≈ y1 until y1 nears 1, and the jump
    // comes near t = 807; the trapezoidal rule does not damp the stiff initial
    // layer, so its ringing is left to die out over the first 100 time units
    let mu = 1000.0;
    let p = make_vdp(mu, 780.0);
    let spec = SchemeSpec::trapezoid(4).unwrap();
    let mut worst = 0.0f64;
    let mut last = f64::INFINITY;
    march(&p.problem, &spec, 0.05, &NewtonConfig::for_initial_state(p.problem.u0()), |n, u| {
        assert!(u[0] <= last && u[0] > 1.0, "y1 = {} at step {n}", u[0]);
        last = u[0];
        if n >= 2000 && u[0] >= 1.2 {
            let slow = u[0] / (mu * (1.0 - u[0] * u[0]));
            worst = worst.max((u[1] - slow).abs() / slow.abs());
        }
    })
    .unwrap();
    assert!(worst <= 1e-2, "relative distance from the slow branch {worst}");
    assert!(last < 1.2, "y1 = {last} at the end");
}
