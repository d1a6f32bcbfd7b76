use std::time::Instant;

use dc_ode::coefficients::{
    euler_operator_exponents, generate_euler_coeffs, generate_trapezoid_coeffs, to_f64, Rational,
};
use dc_ode::operators::{average, backward_diff, composite_power, forward_diff, midpoint_centered_diff, odd_composite, GridSeq};
use num_bigint::BigInt;

fn q(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn fact(n: i64) -> i64 {
    (1..=n).product()
}

fn observed_orders(ks: &[f64], errors: &[f64]) -> Vec<f64> {
    ks.windows(2)
        .zip(errors.windows(2))
        .map(|(k, e)| (e[0] / e[1]).ln() / (k[0] / k[1]).ln())
        .collect()
}

#[test]
fn central_table() {
    let start = Instant::now();
    let c = generate_trapezoid_coeffs(5);
    let expected = [
        (2, q(1, 8)),
        (3, q(1, 24)),
        (4, q(-18, fact(4) * 32)),
        (5, q(-18, fact(5) * 32)),
        (6, q(450, fact(6) * 128)),
        (7, q(450, fact(7) * 128)),
        (8, q(-22050, fact(8) * 512)),
        (9, q(-22050, fact(9) * 512)),
        (10, q(1786050, fact(10) * 2048)),
        (11, q(1786050, fact(11) * 2048)),
    ];
    assert_eq!(c.p(), 5);
    assert_eq!(c.iter().count(), 10);
    for (i, v) in expected {
        assert_eq!(c.c(i), &v, "c_{i}");
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn central_small_orders() {
    let c1 = generate_trapezoid_coeffs(1);
    assert_eq!(c1.c(2), &q(1, 8));
    assert_eq!(c1.c(3), &q(1, 24));
    let c2 = generate_trapezoid_coeffs(2);
    assert_eq!(c2.c(4), &q(-3, 128));
    assert_eq!(c2.c(5), &q(-3, 640));
}

#[test]
fn one_sided_table() {
    let start = Instant::now();
    let a = generate_euler_coeffs(9);
    let expected = [
        q(1, 1),
        q(1, 2),
        q(1, 6),
        q(2, 24),
        q(-4, 120),
        q(-12, 720),
        q(36, fact(7)),
        q(144, fact(8)),
        q(-576, fact(9)),
    ];
    assert_eq!(a.p(), 9);
    for (i, v) in expected.iter().enumerate() {
        assert_eq!(a.a(i + 1), v, "a_{}", i + 1);
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(generate_euler_coeffs(1).a(1), &q(1, 1));
}

#[test]
fn coefficients_do_not_depend_on_p() {
    let big_c = generate_trapezoid_coeffs(14);
    for p in 1..=14 {
        let c = generate_trapezoid_coeffs(p);
        for (i, v) in c.iter() {
            assert_eq!(v, big_c.c(i), "c_{i} at p = {p}");
        }
    }
    let big_a = generate_euler_coeffs(14);
    for p in 1..=14 {
        let a = generate_euler_coeffs(p);
        for (i, v) in a.iter() {
            assert_eq!(v, big_a.a(i), "a_{i} at p = {p}");
        }
    }
}

#[test]
fn rationals_are_reduced() {
    for (_, c) in generate_trapezoid_coeffs(8).iter() {
        let r = Rational::new(c.numer().clone(), c.denom().clone());
        assert_eq!(&r, c);
        assert!(c.denom() > &BigInt::from(0));
    }
    assert_eq!(to_f64(&q(1, 8)), 0.125);
}

#[test]
fn operator_exponent_bookkeeping() {
    assert_eq!(euler_operator_exponents(1), (0, 1));
    assert_eq!(euler_operator_exponents(2), (1, 1));
    assert_eq!(euler_operator_exponents(3), (0, 2));
    assert_eq!(euler_operator_exponents(4), (1, 2));
}

/// Samples `f` on a grid whose pair `(0, 1)` straddles `center`.
fn straddling(f: fn(f64) -> f64, center: f64, k: f64, reach: i64) -> GridSeq<f64> {
    GridSeq::from_fn(1, k, -reach, reach + 1, |n| vec![f(center + (n as f64 - 0.5) * k)]).unwrap()
}

#[test]
fn central_expansions_reach_their_order() {
    let center = 0.5;
    for j in 1..=4u32 {
        let c = generate_trapezoid_coeffs(j as usize);
        let ks = [0.4, 0.2, 0.1];
        let mut d_err = Vec::new();
        let mut e_err = Vec::new();
        for &k in &ks {
            let s = straddling(f64::sin, center, k, i64::from(j) + 1);
            let mut deriv = forward_diff(&s, 0).unwrap()[0];
            let mut value = average(&s, 0).unwrap()[0];
            for i in 1..=j {
                let k2i = k.powi(2 * i as i32);
                deriv -= to_f64(c.c(2 * i as usize + 1)) * k2i * midpoint_centered_diff(&s, 0, i).unwrap()[0];
                let averaged = GridSeq::from_fn(1, k, -i64::from(j), i64::from(j), |n| average(&s, n).unwrap()).unwrap();
                value -= to_f64(c.c(2 * i as usize)) * k2i * composite_power(&averaged, 0, i).unwrap()[0];
            }
            d_err.push((deriv - center.cos()).abs());
            e_err.push((value - center.sin()).abs());
        }
        let target = f64::from(2 * j + 2) - 0.2;
        for o in observed_orders(&ks, &d_err) {
            assert!(o >= target, "derivative, j = {j}: order {o}, errors {d_err:?}");
        }
        for o in observed_orders(&ks, &e_err) {
            assert!(o >= target, "value, j = {j}: order {o}, errors {e_err:?}");
        }
    }
}

#[test]
fn one_sided_expansion_reaches_its_order() {
    let t = 1.0;
    let ks = [0.4, 0.2, 0.1];
    for p in 1..=9u32 {
        let a = generate_euler_coeffs(p as usize);
        let mut errs = Vec::new();
        for &k in &ks {
            let reach = i64::from(p) + 2;
            let s = GridSeq::from_fn(1, k, -reach, reach, |n| vec![(t + n as f64 * k).exp()]).unwrap();
            let mut approx = to_f64(a.a(1)) * forward_diff(&s, 0).unwrap()[0];
            for i in 1..p {
                let (r, m) = euler_operator_exponents(i);
                let op = if r == 0 {
                    composite_power(&s, 0, m).unwrap()[0]
                } else {
                    odd_composite(&s, 0, m).unwrap()[0]
                };
                approx -= to_f64(a.a(i as usize + 1)) * k.powi(i as i32) * op;
            }
            errs.push((approx - t.exp()).abs());
        }
        for o in observed_orders(&ks, &errs) {
            assert!(o >= f64::from(p) - 0.2, "p = {p}: order {o}, errors {errs:?}");
        }
    }
    // a_1 alone is the plain one-sided difference
    let s = GridSeq::from_time_fn(0.5, 0, 1, |x| 3.0 * x).unwrap();
    assert_eq!(backward_diff(&s, 1).unwrap()[0], 3.0);
}
