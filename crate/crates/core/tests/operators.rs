use dc_ode::operators::{
    average, backward_diff, composite_power, forward_diff, midpoint_centered_diff, odd_composite, GridSeq,
    OperatorError,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scalar(v: Vec<f64>) -> f64 {
    assert_eq!(v.len(), 1);
    v[0]
}

fn random_seq(seed: u64, step: f64, first: i64, len: usize) -> GridSeq<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridSeq::from_fn(1, step, first, first + len as i64 - 1, |_| vec![rng.gen_range(-1.0..1.0)]).unwrap()
}

/// Nested application of `D+` and `D-` on whole sequences, as the oracle for
/// the closed forms.
fn apply_forward(s: &GridSeq<f64>) -> GridSeq<f64> {
    let (a, b) = (s.first_index(), s.last_index() - 1);
    GridSeq::from_fn(1, s.step(), a, b, |n| forward_diff(s, n).unwrap()).unwrap()
}

fn apply_backward(s: &GridSeq<f64>) -> GridSeq<f64> {
    let (a, b) = (s.first_index() + 1, s.last_index());
    GridSeq::from_fn(1, s.step(), a, b, |n| backward_diff(s, n).unwrap()).unwrap()
}

fn nested_composite(s: &GridSeq<f64>, m: u32) -> GridSeq<f64> {
    let mut cur = s.clone();
    for _ in 0..m {
        cur = apply_forward(&apply_backward(&cur));
    }
    cur
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn forward_diff_examples() {
    let c = GridSeq::from_time_fn(0.1, -3, 3, |_| 7.0).unwrap();
    for n in -3..3 {
        assert_eq!(scalar(forward_diff(&c, n).unwrap()), 0.0);
    }
    let k = 0.25;
    let lin = GridSeq::from_time_fn(k, -2, 4, |t| t).unwrap();
    for n in -2..4 {
        assert_eq!(scalar(forward_diff(&lin, n).unwrap()), 1.0);
    }
    let s = random_seq(1, 0.3, 0, 5);
    for n in 0..4 {
        let expected = (s.get(n + 1).unwrap()[0] - s.get(n).unwrap()[0]) / 0.3;
        assert_eq!(scalar(forward_diff(&s, n).unwrap()), expected);
    }
}

#[test]
fn backward_diff_examples() {
    let c = GridSeq::from_time_fn(0.1, 0, 4, |_| -2.0).unwrap();
    assert_eq!(scalar(backward_diff(&c, 2).unwrap()), 0.0);
    let lin = GridSeq::from_time_fn(0.5, 0, 4, |t| t).unwrap();
    assert_eq!(scalar(backward_diff(&lin, 3).unwrap()), 1.0);
    let s = random_seq(2, 0.7, -4, 9);
    for n in -3..=4 {
        assert_eq!(backward_diff(&s, n).unwrap(), forward_diff(&s, n - 1).unwrap());
    }
}

#[test]
fn average_examples() {
    let c = GridSeq::from_time_fn(0.1, 0, 3, |_| 3.5).unwrap();
    assert_eq!(scalar(average(&c, 1).unwrap()), 3.5);
    let pair = GridSeq::from_fn(1, 1.0, 0, 1, |n| vec![2.0 * n as f64]).unwrap();
    assert_eq!(scalar(average(&pair, 0).unwrap()), 1.0);
    let k = 0.125;
    let lin = GridSeq::from_time_fn(k, 0, 6, |t| 3.0 * t - 1.0).unwrap();
    for n in 0..6 {
        let mid = (n as f64 + 0.5) * k;
        assert_eq!(scalar(average(&lin, n).unwrap()), 3.0 * mid - 1.0);
    }
}

#[test]
fn composite_power_examples() {
    for &k in &[1.0, 0.5, 0.25] {
        let sq = GridSeq::from_time_fn(k, -4, 4, |t| t * t).unwrap();
        for n in -3..=3 {
            assert_eq!(scalar(composite_power(&sq, n, 1).unwrap()), 2.0);
        }
    }
    let k = 0.5;
    for m in 1..=4u32 {
        let odd = GridSeq::from_time_fn(k, -6, 6, |t| t.powi(2 * m as i32 - 1)).unwrap();
        let even = GridSeq::from_time_fn(k, -6, 6, |t| t.powi(2 * m as i32)).unwrap();
        let fact: f64 = (1..=2 * m).map(f64::from).product();
        for n in [-1i64, 0, 2] {
            assert_eq!(scalar(composite_power(&odd, n, m).unwrap()), 0.0, "m = {m}, n = {n}");
            assert_eq!(scalar(composite_power(&even, n, m).unwrap()), fact, "m = {m}, n = {n}");
        }
    }
    let s = random_seq(3, 0.9, -10, 21);
    let nested = nested_composite(&s, 3);
    for n in -7..=7 {
        let a = scalar(composite_power(&s, n, 3).unwrap());
        let b = nested.get(n).unwrap()[0];
        assert!(rel_close(a, b, 1e-13), "n = {n}: {a} vs {b}");
    }
}

#[test]
fn odd_composite_examples() {
    let s = random_seq(4, 0.4, -8, 17);
    for n in -7..=8 {
        assert_eq!(odd_composite(&s, n, 0).unwrap(), backward_diff(&s, n).unwrap());
    }
    let k = 0.5;
    let cube = GridSeq::from_time_fn(k, -4, 4, |t| t * t * t).unwrap();
    for n in -2..=3 {
        assert_eq!(scalar(odd_composite(&cube, n, 1).unwrap()), 6.0);
    }
    let inner = GridSeq::from_fn(1, s.step(), -6, 6, |n| composite_power(&s, n, 2).unwrap()).unwrap();
    for n in -5..=6 {
        let a = scalar(odd_composite(&s, n, 2).unwrap());
        let b = scalar(backward_diff(&inner, n).unwrap());
        assert!(rel_close(a, b, 1e-13), "n = {n}: {a} vs {b}");
    }
}

#[test]
fn midpoint_centered_diff_examples() {
    let k = 0.2;
    let pair = GridSeq::from_fn(1, k, 0, 1, |n| vec![n as f64 * k]).unwrap();
    assert!((scalar(midpoint_centered_diff(&pair, 0, 0).unwrap()) - 1.0).abs() < 1e-15);
    for m in 1..=3u32 {
        let poly = GridSeq::from_time_fn(0.5, -6, 7, |t| (0..=2 * m).map(|p| t.powi(p as i32)).sum()).unwrap();
        assert_eq!(scalar(midpoint_centered_diff(&poly, 0, m).unwrap()), 0.0, "m = {m}");
    }
    let s = random_seq(5, 0.6, -8, 18);
    let inner = GridSeq::from_fn(1, s.step(), -6, 7, |n| composite_power(&s, n, 2).unwrap()).unwrap();
    for n in -6..=6 {
        let a = scalar(midpoint_centered_diff(&s, n, 2).unwrap());
        let b = scalar(forward_diff(&inner, n).unwrap());
        assert!(rel_close(a, b, 1e-13), "n = {n}: {a} vs {b}");
    }
}

#[test]
fn out_of_range_is_an_error() {
    let s = random_seq(6, 0.1, 0, 5);
    assert!(matches!(forward_diff(&s, 4), Err(OperatorError::OutOfRange { .. })));
    assert!(matches!(backward_diff(&s, 0), Err(OperatorError::OutOfRange { .. })));
    assert!(matches!(composite_power(&s, 1, 2), Err(OperatorError::OutOfRange { .. })));
    assert!(matches!(odd_composite(&s, 2, 2), Err(OperatorError::OutOfRange { .. })));
    assert!(GridSeq::<f64>::new(1, 0.0, 0).is_err());
    let mut v = GridSeq::<f64>::new(2, 0.1, 0).unwrap();
    assert!(v.push(&[1.0]).is_err());
}

#[test]
fn operators_act_componentwise() {
    let k = 0.25;
    let s = GridSeq::from_fn(2, k, -3, 3, |n| {
        let t = n as f64 * k;
        vec![t * t, -t * t * t]
    })
    .unwrap();
    let d = composite_power(&s, 0, 1).unwrap();
    assert_eq!(d, vec![2.0, 0.0]);
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn binom(n: u32, k: u32) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..k {
        acc = acc * big(i64::from(n - i)) / big(i64::from(i + 1));
    }
    acc
}

/// `Σ_j (-1)^j C(m, j) (m + r - j)^p` in exact arithmetic.
fn alternating_sum(m: u32, r: &BigRational, p: u32) -> BigRational {
    let mut acc = BigRational::zero();
    for j in 0..=m {
        let base = big(i64::from(m)) + r - big(i64::from(j));
        let mut pw = BigRational::one();
        for _ in 0..p {
            pw *= &base;
        }
        let term = binom(m, j) * pw;
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

#[test]
fn alternating_binomial_moments_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in 1..=8u32 {
        let fact: BigRational = (1..=m).fold(BigRational::one(), |a, i| a * big(i64::from(i)));
        for _ in 0..20 {
            let r = BigRational::new(BigInt::from(rng.gen_range(-1000i64..1000)), BigInt::from(rng.gen_range(1i64..97)));
            assert!(alternating_sum(m, &r, 0).is_zero());
            for p in 1..m {
                assert!(alternating_sum(m, &r, p).is_zero(), "m = {m}, p = {p}, r = {r}");
            }
            assert_eq!(alternating_sum(m, &r, m), fact, "m = {m}, r = {r}");
        }
    }
}

#[test]
fn midpoint_stencil_moments_vanish_exactly() {
    // the half-integer shifts of the centred stencils: Σ_j (-1)^j C(2i+1, j) (i + 1/2 - j)^p
    // and Σ_j (-1)^j C(2i, j) (i - j)^p vanish below their width
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    for i in 1..=6u32 {
        let shift_odd = half.clone() - big(i64::from(2 * i + 1)) + big(i64::from(i));
        let shift_even = big(-i64::from(i));
        for p in 0..2 * i {
            assert!(alternating_sum(2 * i + 1, &shift_odd, p).is_zero());
            assert!(alternating_sum(2 * i, &shift_even, p).is_zero());
        }
        assert!(alternating_sum(2 * i, &shift_even, 2 * i + 1).is_zero(), "odd moment of a symmetric stencil");
    }
}

/// Evaluates the composite stencil on exact polynomial samples.
fn exact_composite(m: u32, coeffs: &[BigRational], k: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for i in 0..=2 * m {
        let t = k * big(i64::from(m) - i64::from(i));
        let mut val = BigRational::zero();
        let mut pw = BigRational::one();
        for c in coeffs {
            val += c * &pw;
            pw *= &t;
        }
        let term = binom(2 * m, i) * val;
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

#[test]
fn composite_annihilates_low_degree_polynomials_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let k = BigRational::new(BigInt::from(3), BigInt::from(7));
    for m in 1..=5u32 {
        for _ in 0..5 {
            let coeffs: Vec<BigRational> = (0..2 * m)
                .map(|_| BigRational::new(BigInt::from(rng.gen_range(-50i64..50)), BigInt::from(rng.gen_range(1i64..20))))
                .collect();
            assert!(exact_composite(m, &coeffs, &k).is_zero(), "m = {m}");
        }
    }
}

#[test]
fn differences_of_exp_bounded_by_derivatives() {
    // every difference quotient of order |α| of exp is an average of exp^{(|α|)}
    // over the stencil hull, so it cannot exceed the maximum there
    for &k in &[0.1, 0.05, 0.01] {
        let s = GridSeq::from_time_fn(k, 0, (1.0 / k).round() as i64, f64::exp).unwrap();
        let last = s.last_index();
        for order in 0..=6u32 {
            for n in 0..=last {
                let (value, lo, hi) = if order % 2 == 0 {
                    let m = order / 2;
                    let m_i = i64::from(m);
                    if n - m_i < 0 || n + m_i > last {
                        continue;
                    }
                    (scalar(composite_power(&s, n, m).unwrap()), n - m_i, n + m_i)
                } else {
                    let m = (order - 1) / 2;
                    let m_i = i64::from(m);
                    if n - m_i - 1 < 0 || n + m_i > last {
                        continue;
                    }
                    (scalar(odd_composite(&s, n, m).unwrap()), n - m_i - 1, n + m_i)
                };
                let (a, b) = (lo as f64 * k, hi as f64 * k);
                // rounding in the difference quotient grows like eps / k^order
                let slack = 64.0 * f64::EPSILON * 2f64.powi(order as i32) / k.powi(order as i32) * b.exp();
                assert!(value <= b.exp() + slack, "order {order}, n {n}: {value} > {}", b.exp());
                assert!(value >= a.exp() - slack, "order {order}, n {n}: {value} < {}", a.exp());
            }
        }
    }
}

proptest! {
    #[test]
    fn forward_and_backward_commute(values in prop::collection::vec(-1e3f64..1e3, 3..40), step in 1e-3f64..10.0) {
        let s = GridSeq::from_fn(1, step, -1, values.len() as i64 - 2, |n| vec![values[(n + 1) as usize]]).unwrap();
        let fb = apply_forward(&apply_backward(&s));
        let bf = apply_backward(&apply_forward(&s));
        for n in fb.first_index()..=fb.last_index() {
            prop_assert_eq!(fb.get(n).unwrap(), bf.get(n).unwrap());
        }
    }

    #[test]
    fn closed_forms_match_nested_recursion(seed in any::<u64>(), m in 1u32..=5, step in 0.05f64..2.0) {
        let len = 4 * m as usize + 6;
        let s = random_seq(seed, step, -(len as i64) / 2, len);
        let nested = nested_composite(&s, m);
        let inner_first = nested.first_index();
        for n in inner_first..=nested.last_index() {
            let a = scalar(composite_power(&s, n, m).unwrap());
            let b = nested.get(n).unwrap()[0];
            // both are k^{-2m} times sums of O(4^m) terms; compare on that scale
            let scale = 4f64.powi(m as i32) / step.powi(2 * m as i32);
            prop_assert!((a - b).abs() <= 1e-13 * scale.max(1.0), "n = {}: {} vs {}", n, a, b);
        }
        let nested_odd = apply_backward(&nested);
        for n in nested_odd.first_index()..=nested_odd.last_index() {
            let a = scalar(odd_composite(&s, n, m).unwrap());
            let b = nested_odd.get(n).unwrap()[0];
            let scale = 2f64.powi(2 * m as i32 + 1) / step.powi(2 * m as i32 + 1);
            prop_assert!((a - b).abs() <= 1e-13 * scale.max(1.0), "n = {}: {} vs {}", n, a, b);
        }
    }

    #[test]
    fn average_is_exact_on_linear_data(a in -1e3f64..1e3, b in -1e3f64..1e3, n in -20i64..20) {
        let k = 0.5;
        let s = GridSeq::from_time_fn(k, -21, 21, |t| a * t + b).unwrap();
        let mid = (n as f64 + 0.5) * k;
        let got = scalar(average(&s, n).unwrap());
        prop_assert!((got - (a * mid + b)).abs() <= 1e-12 * (1.0 + a.abs() * 21.0 + b.abs()));
    }
}
