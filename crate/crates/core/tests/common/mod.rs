//! Test-side oracles shared by several integration test files.

#![allow(dead_code)]

use dc_ode::coefficients::{generate_trapezoid_coeffs, to_f64};
use dc_ode::operators::{average, composite_power, midpoint_centered_diff, GridSeq};
use num_complex::Complex64;

/// Left and right reach of every stage of a DC(2J) hierarchy: stage `s`
/// must cover the stencils of all stages above it, and correction `j`
/// reaches `j` indices beyond the pair `(n, n+1)` on each side.
pub fn stage_reach(order: u32) -> Vec<i64> {
    let stages = (order / 2) as i64;
    (0..stages).map(|s| (s + 1..stages).sum()).collect()
}

/// `(k Λ, Γ)` of correction `j` on the pair `(n, n+1)`, summed term by term
/// from the nested difference operators and the central coefficients.
pub fn nested_correction(lower: &GridSeq<Complex64>, j: u32, n: i64) -> (Complex64, Complex64) {
    let k = lower.step();
    let c = generate_trapezoid_coeffs(j as usize);
    let averaged = GridSeq::from_fn(1, k, n - i64::from(j), n + i64::from(j), |m| {
        average(lower, m).expect("inside the lower stage")
    })
    .expect("averaged window");
    let mut lambda = Complex64::new(0.0, 0.0);
    let mut gamma = Complex64::new(0.0, 0.0);
    for i in 1..=j {
        let k2i = k.powi(2 * i as i32);
        lambda += midpoint_centered_diff(lower, n, i).unwrap()[0] * to_f64(c.c(2 * i as usize + 1)) * k2i;
        gamma += composite_power(&averaged, n, i).unwrap()[0] * to_f64(c.c(2 * i as usize)) * k2i;
    }
    (lambda * k, gamma)
}

/// `u^0 ..= u^N` of DC(`order`) on `u' = λu`, `u(0) = 1`, with `z = λk`,
/// evolved stage by stage as explicit one-step recurrences.
///
/// Stage 0 is `u^{n+1} = u^n (2+z)/(2-z)`; correction `j` adds
/// `(kΛ - zΓ)/(1 - z/2)`. Ghost values come from solving the same
/// relations for `u^n` given `u^{n+1}`.
pub fn linear_recurrence(z: Complex64, k: f64, order: u32, n_steps: i64) -> Vec<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let reach = stage_reach(order);
    let mut lower: Option<GridSeq<Complex64>> = None;
    for (s, &r) in reach.iter().enumerate() {
        let (first, last) = (-r, n_steps + r);
        let mut values = vec![Complex64::new(0.0, 0.0); (last - first + 1) as usize];
        let at = |n: i64| (n - first) as usize;
        values[at(0)] = one;
        let correction = |n: i64| match &lower {
            None => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
            Some(low) => nested_correction(low, s as u32, n),
        };
        for n in 0..last {
            let (kl, g) = correction(n);
            values[at(n + 1)] = (values[at(n)] * (one + z / 2.0) + kl - z * g) / (one - z / 2.0);
        }
        for n in (first..0).rev() {
            let (kl, g) = correction(n);
            values[at(n)] = (values[at(n + 1)] * (one - z / 2.0) - kl + z * g) / (one + z / 2.0);
        }
        let mut seq = GridSeq::new(1, k, first).unwrap();
        for v in &values {
            seq.push(&[*v]).unwrap();
        }
        lower = Some(seq);
    }
    let top = lower.expect("at least one stage");
    (0..=n_steps).map(|n| top.get(n).unwrap()[0]).collect()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.norm()))
}

/// Pairwise observed orders `log(e_i / e_{i+1}) / log(k_i / k_{i+1})`.
pub fn observed_orders(ks: &[f64], errors: &[f64]) -> Vec<f64> {
    ks.windows(2)
        .zip(errors.windows(2))
        .map(|(k, e)| (e[0] / e[1]).ln() / (k[0] / k[1]).ln())
        .collect()
}
