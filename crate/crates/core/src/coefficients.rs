//! Exact coefficients of the correction stencils.
//!
//! * `c_2 … c_{2p+1}` of the centred expansions around a half step
//!
//!   ```text
//!   f'(t_{n+1/2}) = D f(t_{n+1/2}) - Σ c_{2i+1} k^{2i} D(D+D-)^i f(t_{n+1/2}) + O(k^{2p+2})
//!   f(t_{n+1/2})  = E f(t_{n+1/2}) - Σ c_{2i}   k^{2i} (D+D-)^i E f(t_{n+1/2}) + O(k^{2p+2})
//!   ```
//!
//!   generated by successively eliminating the odd (resp. even) Taylor
//!   derivatives of the one-step expansions;
//! * `a_1 … a_p` of the one-sided expansion used by the Euler hierarchy
//!
//!   ```text
//!   f'(t_n) = a_1 D+ f(t_n) - Σ_{i=1}^{p-1} a_{i+1} k^i D-^{r_i} (D+D-)^{m_i} f(t_n) + O(k^p)
//!   ```
//!
//!   with `r_i = (1 + (-1)^i) / 2` and `m_i = ⌊(i+1)/2⌋`, generated by the
//!   method of undetermined coefficients.
//!
//! Everything is computed with big rationals; floats are taken once, by
//! nearest rounding, when a scheme is built.

// the exact elimination below reads best with explicit indices
#![allow(clippy::needless_range_loop)]

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact fraction, always in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Orders up to this bound are generated once and cached.
const CACHED_P: usize = 12;

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn factorial(n: u32) -> Rational {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    Rational::from_integer(acc)
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn pow(x: &Rational, e: u32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// `Σ_{j=0}^{width} (-1)^j C(width, j) (shift - j)^power`, exactly.
fn alternating_moment(width: u32, shift: &Rational, power: u32) -> Rational {
    let mut acc = Rational::zero();
    for j in 0..=width {
        let term = Rational::from_integer(binomial(width, j)) * pow(&(shift - int(j as i64)), power);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

fn half() -> Rational {
    Rational::new(BigInt::one(), BigInt::from(2))
}

/// Coefficients `c_2 … c_{2p+1}` of the centred half-step expansions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapezoidCoeffs {
    p: usize,
    // c[i - 2] = c_i
    c: Vec<Rational>,
}

impl TrapezoidCoeffs {
    pub fn p(&self) -> usize {
        self.p
    }

    /// `c_index` for `2 <= index <= 2p + 1`.
    pub fn c(&self, index: usize) -> &Rational {
        assert!(
            (2..=2 * self.p + 1).contains(&index),
            "c_{index} not generated for p = {}",
            self.p
        );
        &self.c[index - 2]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.c.iter().enumerate().map(|(i, c)| (i + 2, c))
    }

    fn prefix(&self, p: usize) -> Self {
        Self {
            p,
            c: self.c[..2 * p].to_vec(),
        }
    }
}

/// Coefficients `a_1 … a_p` of the one-sided expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerCoeffs {
    p: usize,
    // a[i - 1] = a_i
    a: Vec<Rational>,
}

impl EulerCoeffs {
    pub fn p(&self) -> usize {
        self.p
    }

    /// `a_index` for `1 <= index <= p`.
    pub fn a(&self, index: usize) -> &Rational {
        assert!(
            (1..=self.p).contains(&index),
            "a_{index} not generated for p = {}",
            self.p
        );
        &self.a[index - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.a.iter().enumerate().map(|(i, a)| (i + 1, a))
    }

    fn prefix(&self, p: usize) -> Self {
        Self {
            p,
            a: self.a[..p].to_vec(),
        }
    }
}

/// Generates `c_2 … c_{2p+1}`.
///
/// Odd part: with `g_{1,i} = 2^{-2i}` the coefficient of
/// `k^{2i+1} f^{(2i+1)}/(2i+1)!` in `f(t_{n+1}) - f(t_n) - k f'(t_{n+1/2})`,
/// eliminating `f^{(2q-1)}` through the odd composite stencil gives
///
/// ```text
/// g_{q,i} = g_{q-1,i} - g_{q-1,q-1}/(2q-1)! · Σ_j (-1)^j C(2q-1,j) (q-j-1/2)^{2i+1}
/// c_{2i+1} = g_{i,i} / (2i+1)!
/// ```
///
/// Even part: the same with `h_{1,i} = 2^{1-2i}` taken from
/// `f(t_{n+1}) + f(t_n) - 2 f(t_{n+1/2})`, the averaged even stencil and
/// `c_{2i} = h_{i,i} / (2 (2i)!)`.
pub fn generate_trapezoid_coeffs(p: usize) -> TrapezoidCoeffs {
    assert!(p >= 1, "p must be positive");
    if p <= CACHED_P {
        static CACHE: OnceLock<TrapezoidCoeffs> = OnceLock::new();
        return CACHE.get_or_init(|| build_trapezoid(CACHED_P)).prefix(p);
    }
    build_trapezoid(p)
}

fn build_trapezoid(p: usize) -> TrapezoidCoeffs {
    let h = half();

    // odd[i] tracks g_{q,i} for i = 1..=p (index 0 unused)
    let mut odd: Vec<Rational> = (0..=p)
        .map(|i| Rational::new(BigInt::one(), BigInt::from(2).pow(2 * i as u32)))
        .collect();
    let mut c_odd = vec![Rational::zero(); p + 1];
    for q in 1..=p {
        let qq = q as u32;
        c_odd[q] = &odd[q] / factorial(2 * qq + 1);
        // eliminate f^{(2q+1)} from the remaining terms
        let shift = int(q as i64) + &h;
        for i in q + 1..=p {
            let moment = alternating_moment(2 * qq + 1, &shift, 2 * i as u32 + 1);
            let delta = &odd[q] / factorial(2 * qq + 1) * moment;
            odd[i] -= delta;
        }
    }

    let mut even: Vec<Rational> = (0..=p)
        .map(|i| Rational::new(BigInt::from(2), BigInt::from(2).pow(2 * i as u32)))
        .collect();
    let mut c_even = vec![Rational::zero(); p + 1];
    for q in 1..=p {
        let qq = q as u32;
        c_even[q] = &even[q] / (int(2) * factorial(2 * qq));
        let up = int(q as i64) + &h;
        let down = int(q as i64) - &h;
        for i in q + 1..=p {
            let e = 2 * i as u32;
            let moment = alternating_moment(2 * qq, &up, e) + alternating_moment(2 * qq, &down, e);
            let delta = &even[q] / factorial(2 * qq) * moment * &h;
            even[i] -= delta;
        }
    }

    let mut c = Vec::with_capacity(2 * p);
    for i in 1..=p {
        c.push(c_even[i].clone());
        c.push(c_odd[i].clone());
    }
    TrapezoidCoeffs { p, c }
}

/// Operator applied with `a_{i+1} k^i` in the Euler corrections:
/// `D-^{r} (D+D-)^{m}` with `r = (1 + (-1)^i)/2` and `m = ⌊(i+1)/2⌋`.
/// Returned as `(r, m)`.
pub fn euler_operator_exponents(i: u32) -> (u32, u32) {
    let r = if i.is_multiple_of(2) { 1 } else { 0 };
    (r, i.div_ceil(2))
}

/// Stencil of `k^{i+1}` times the `i`-th operator of the one-sided expansion
/// anchored at 0, as `(offset, weight)` pairs. Operator 0 is `D+`.
pub(crate) fn euler_operator_stencil(i: u32) -> Vec<(i64, BigInt)> {
    if i == 0 {
        return vec![(0, BigInt::from(-1)), (1, BigInt::one())];
    }
    let (r, m) = euler_operator_exponents(i);
    let width = 2 * m + r;
    (0..=width)
        .map(|l| {
            let w = binomial(width, l);
            (m as i64 - l as i64, if l % 2 == 0 { w } else { -w })
        })
        .collect()
}

/// Generates `a_1 … a_p` by matching Taylor moments.
///
/// Unknowns `w_0 … w_{p-1}` weight the operators `k^i Op_i`; requiring the
/// combination to reproduce `f'` exactly for polynomials of degree `<= p`
/// gives the moment system `Σ_i w_i M_{i,m} / m! = δ_{m,1}`, `m = 1..=p`,
/// with `M_{i,m} = Σ_s β_{i,s} s^m`. Then `a_1 = w_0`, `a_{i+1} = -w_i`.
pub fn generate_euler_coeffs(p: usize) -> EulerCoeffs {
    assert!(p >= 1, "p must be positive");
    if p <= CACHED_P {
        static CACHE: OnceLock<EulerCoeffs> = OnceLock::new();
        return CACHE.get_or_init(|| build_euler(CACHED_P)).prefix(p);
    }
    build_euler(p)
}

fn build_euler(p: usize) -> EulerCoeffs {
    let stencils: Vec<_> = (0..p as u32).map(euler_operator_stencil).collect();
    // rows m = 1..=p, columns i = 0..p, augmented with the right-hand side
    let mut system: Vec<Vec<Rational>> = (1..=p as u32)
        .map(|m| {
            let mut row: Vec<Rational> = stencils
                .iter()
                .map(|st| {
                    let moment = st.iter().fold(Rational::zero(), |acc, (s, w)| {
                        acc + Rational::from_integer(w.clone()) * pow(&int(*s), m)
                    });
                    moment / factorial(m)
                })
                .collect();
            row.push(if m == 1 { Rational::one() } else { Rational::zero() });
            row
        })
        .collect();

    let w = solve_exact(&mut system).expect("moment system is nonsingular");
    let a = w
        .into_iter()
        .enumerate()
        .map(|(i, w)| if i == 0 { w } else { -w })
        .collect();
    EulerCoeffs { p, a }
}

/// Gauss-Jordan elimination on an augmented square system.
fn solve_exact(system: &mut [Vec<Rational>]) -> Option<Vec<Rational>> {
    let n = system.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !system[r][col].is_zero())?;
        system.swap(col, pivot);
        let inv = system[col][col].recip();
        for x in system[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != col && !system[r][col].is_zero() {
                let factor = system[r][col].clone();
                for c in col..=n {
                    let delta = &factor * &system[col][c];
                    system[r][c] -= delta;
                }
            }
        }
    }
    Some(system.iter().map(|row| row[n].clone()).collect())
}

/// Nearest `f64` to an exact rational.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}
