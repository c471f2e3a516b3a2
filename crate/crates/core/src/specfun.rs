//! Combinatorial and special-function building blocks of the alternative
//! expansion.
//!
//! The modified spherical-Bessel-type function of order `l` is
//!
//! ```text
//! j̃_l(t) = 1/(2l+1) Σ_s β_s^(k) (2n+1)!! / n! · (t/(1+t²))^n,   n = 2s + l,
//! ```
//!
//! with `k = ⌊l/2⌋`. Writing `t = tan α` turns `t/(1+t²)` into `½ sin 2α`, so
//! the same series is a power series in `sin 2α`. Coefficients are exact
//! rationals for the first [`EXACT_TERMS`] terms and continue by a
//! double-precision ratio recurrence beyond.

use std::f64::consts::FRAC_PI_4;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::quadrature::GaussLegendre;

/// Largest radial summation index accepted by series evaluations.
pub const MAX_S: usize = 200;

/// Number of leading coefficients computed in exact rational arithmetic.
pub const EXACT_TERMS: usize = 21;

/// Truncation orders of the double series over `s` (radial) and `l`
/// (multipole).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SeriesTruncation {
    pub s_max: usize,
    pub l_max: usize,
}

impl SeriesTruncation {
    pub fn new(s_max: usize, l_max: usize) -> Result<Self> {
        if s_max > MAX_S {
            return Err(domain(format!("s_max = {s_max} exceeds {MAX_S}")));
        }
        Ok(Self { s_max, l_max })
    }
}

/// `n!!` for `n ≥ −1`, with `(−1)!! = 0!! = 1`.
pub fn double_factorial(n: i64) -> Result<BigUint> {
    if n < -1 {
        return Err(domain(format!("double factorial of {n} < -1")));
    }
    let mut acc = BigUint::one();
    let mut m = n;
    while m > 1 {
        acc *= m as u64;
        m -= 2;
    }
    Ok(acc)
}

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, m| acc * m)
}

/// Legendre polynomial P_l(x) by the Bonnet recurrence.
pub fn legendre(l: usize, x: f64) -> Result<f64> {
    check_unit_interval(x)?;
    Ok(legendre_table(l, x)[l])
}

/// P_0(x) .. P_lmax(x). No domain check; callers validate `x`.
pub(crate) fn legendre_table(l_max: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(l_max + 1);
    p.push(1.0);
    if l_max >= 1 {
        p.push(x);
    }
    for n in 1..l_max {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0);
        p.push(next);
    }
    p
}

fn check_unit_interval(x: f64) -> Result<()> {
    if x.is_nan() || x.abs() > 1.0 {
        return Err(domain(format!("Legendre argument {x} outside [-1, 1]")));
    }
    Ok(())
}

/// β index for multipole order `l`: `k = l̂/2` with `l̂ = l` (even `l`) or
/// `l − 1` (odd `l`).
pub fn beta_index(l: u32) -> u32 {
    l / 2
}

/// Exact β_s^(k) for multipole order `l`:
///
/// ```text
/// β_s^(k) = (2l+1) · 2^k · (s+k)!/s!  /  Π_{j=0..k} (2l+2s+1−2j)
/// ```
///
/// This is the coefficient of P_l in the Legendre expansion of x^(2s+l)
/// whenever `k = ⌊l/2⌋`.
pub fn beta_exact(k: u32, l: u32, s: u32) -> Result<BigRational> {
    let (l, s, k) = (i64::from(l), i64::from(s), i64::from(k));
    let mut den = BigInt::one();
    for j in 0..=k {
        let f = 2 * l + 2 * s + 1 - 2 * j;
        if f <= 0 {
            return Err(domain(format!(
                "beta(k={k}, l={l}, s={s}): denominator factor {f} is not positive"
            )));
        }
        den *= f;
    }
    let mut num = BigInt::from(2 * l + 1) << (k as usize);
    for m in (s + 1)..=(s + k) {
        num *= m;
    }
    Ok(BigRational::new(num, den))
}

pub fn beta(k: u32, l: u32, s: u32) -> Result<f64> {
    Ok(rational_to_f64(&beta_exact(k, l, s)?))
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Coefficients of j̃_l(α) as a power series in sin 2α: entry `s` multiplies
/// `sin^(2s+l)(2α)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesselCoefficientTable {
    pub l: usize,
    pub coeffs: Vec<f64>,
}

impl BesselCoefficientTable {
    /// Exponent of sin 2α carried by entry `s`.
    pub fn power(&self, s: usize) -> usize {
        2 * s + self.l
    }
}

/// Exact coefficient of `sin^(2s+l)(2α)` in j̃_l:
/// `β_s^(⌊l/2⌋) (2l+4s+1)!! / ((2s+l)! (2l+1) 2^(2s+l))`.
pub fn bessel_coefficient_exact(l: u32, s: u32) -> Result<BigRational> {
    let n = 2 * u64::from(s) + u64::from(l);
    let beta = beta_exact(beta_index(l), l, s)?;
    let num = BigInt::from(double_factorial(2 * n as i64 + 1)?);
    let den = BigInt::from(factorial(n) * (2 * u64::from(l) + 1)) << (n as usize);
    Ok(beta * BigRational::new(num, den))
}

pub fn bessel_coefficients_exact(l: usize, n_terms: usize) -> Result<Vec<BigRational>> {
    let l = to_u32(l)?;
    (0..n_terms)
        .map(|s| bessel_coefficient_exact(l, to_u32(s)?))
        .collect()
}

fn to_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| domain(format!("index {v} too large")))
}

/// Double-precision coefficients: exact rationals for the first
/// [`EXACT_TERMS`] entries, then the ratio recurrence in `s`.
pub fn bessel_coefficients(l: usize, n_terms: usize) -> Result<BesselCoefficientTable> {
    if n_terms == 0 {
        return Err(domain("bessel_coefficients needs at least one term"));
    }
    let exact = n_terms.min(EXACT_TERMS);
    let mut coeffs: Vec<f64> = bessel_coefficients_exact(l, exact)?
        .iter()
        .map(rational_to_f64)
        .collect();
    for s in exact..n_terms {
        let prev = coeffs[s - 1];
        coeffs.push(prev * coefficient_ratio(l, s - 1));
    }
    Ok(BesselCoefficientTable { l, coeffs })
}

/// Double-precision coefficients from the ratio recurrence alone, starting
/// from a product form of the `s = 0` entry. Never overflows for
/// `s ≤ MAX_S`, any `l`.
pub fn bessel_coefficients_recurrence(l: usize, n_terms: usize) -> Vec<f64> {
    let k = l / 2;
    let lf = l as f64;
    // β_0 = Π_{j=1..k} 2j / (2l+1−2j)
    let beta0: f64 = (1..=k)
        .map(|j| 2.0 * j as f64 / (2.0 * lf + 1.0 - 2.0 * j as f64))
        .product();
    // (2l+1)!! / (l! (2l+1) 2^l) = Π_{i=1..l} (2i−1)/(2i)
    let lead: f64 = (1..=l)
        .map(|i| (2.0 * i as f64 - 1.0) / (2.0 * i as f64))
        .product();
    let mut coeffs = Vec::with_capacity(n_terms);
    let mut c = beta0 * lead;
    for s in 0..n_terms {
        coeffs.push(c);
        c *= coefficient_ratio(l, s);
    }
    coeffs
}

/// c_{s+1}/c_s for fixed `l`.
fn coefficient_ratio(l: usize, s: usize) -> f64 {
    let k = (l / 2) as f64;
    let (lf, sf) = (l as f64, s as f64);
    let n = 2.0 * sf + lf;
    let beta_ratio = (sf + k + 1.0) / (sf + 1.0) * (2.0 * lf + 2.0 * sf + 1.0 - 2.0 * k)
        / (2.0 * lf + 2.0 * sf + 3.0);
    beta_ratio * (2.0 * n + 3.0) * (2.0 * n + 5.0) / (4.0 * (n + 1.0) * (n + 2.0))
}

/// Argument of j̃_l: either the radial ratio `t = r_< / r_>` or the
/// hyperangle `α = arctan t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BesselArg {
    T(f64),
    Alpha(f64),
}

impl BesselArg {
    /// sin 2α, which equals 2t/(1+t²).
    fn sin_two_alpha(self) -> Result<f64> {
        match self {
            BesselArg::T(t) => {
                if !(0.0..=1.0).contains(&t) {
                    return Err(domain(format!("t = {t} outside [0, 1]")));
                }
                Ok(2.0 * t / (1.0 + t * t))
            }
            BesselArg::Alpha(a) => {
                if !(0.0..=FRAC_PI_4).contains(&a) {
                    return Err(domain(format!("alpha = {a} outside [0, pi/4]")));
                }
                Ok((2.0 * a).sin())
            }
        }
    }
}

/// Partial sum of j̃_l through `s = s_max`.
///
/// At `t = 1` (α = π/4) the terms decay too slowly for the sum to settle;
/// the value returned is the partial sum and nothing more.
pub fn bessel_eval(l: usize, arg: BesselArg, s_max: usize) -> Result<f64> {
    if s_max > MAX_S {
        return Err(domain(format!("s_max = {s_max} exceeds {MAX_S}")));
    }
    let x = arg.sin_two_alpha()?;
    let table = bessel_coefficients(l, s_max + 1)?;
    Ok(eval_table(&table, x))
}

/// Σ_s c_s x^(2s+l), summed from the highest power down.
pub(crate) fn eval_table(table: &BesselCoefficientTable, x: f64) -> f64 {
    let x2 = x * x;
    let inner = table.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x2 + c);
    inner * x.powi(table.l as i32)
}

/// The coefficient of P_l that makes the addition-theorem form
/// `1/(r_> √(1+t²)) Σ_l (2l+1) f_l(t) P_l(cos θ)` exact, computed by
/// Gauss–Legendre projection:
///
/// ```text
/// f_l(t) = √(1+t²)/2 · ∫_{−1}^{1} (1 − 2tx + t²)^(−1/2) P_l(x) dx
/// ```
///
/// Analytically `f_l(t) = √(1+t²) t^l / (2l+1)`.
pub fn bessel_projection_oracle(l: usize, t: f64, n_quad: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(domain(format!("projection oracle needs 0 <= t < 1, got {t}")));
    }
    if n_quad < 64 {
        return Err(domain(format!("n_quad = {n_quad} < 64")));
    }
    let rule = GaussLegendre::new(n_quad);
    let integral = rule.integrate(-1.0, 1.0, |x| {
        legendre_table(l, x)[l] / (1.0 - 2.0 * t * x + t * t).sqrt()
    });
    Ok(0.5 * (1.0 + t * t).sqrt() * integral)
}

/// Single binomial sum of `(1 − 2tx + t²)^(−1/2)` in powers of `x`,
/// truncated at `x^order`:
/// `(1+t²)^(−1/2) Σ_n C(−½, n) (−2t/(1+t²))^n x^n`.
pub fn binomial_series(t: f64, x: f64, order: usize) -> f64 {
    let y0 = 1.0 + t * t;
    let w = -2.0 * t / y0;
    let mut binom = 1.0;
    let mut wx = 1.0;
    let mut sum = 0.0;
    for n in 0..=order {
        sum += binom * wx;
        binom *= (-0.5 - n as f64) / (n as f64 + 1.0);
        wx *= w * x;
    }
    sum / y0.sqrt()
}

/// How the double (l, s) sum is cut off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubleSumCutoff {
    /// Keep terms with `2s + l ≤ order`.
    TotalOrder(usize),
    /// Keep `s ≤ s_max` and `l ≤ l_max` independently.
    Rectangular(SeriesTruncation),
}

/// The same function regrouped over Legendre polynomials:
/// `(1+t²)^(−1/2) Σ_l Σ_s β_s^(⌊l/2⌋) C(−½, 2s+l) (−2t/(1+t²))^(2s+l) P_l(x)`.
pub fn legendre_resummed_series(t: f64, x: f64, cutoff: DoubleSumCutoff) -> Result<f64> {
    check_unit_interval(x)?;
    let (l_max, n_max) = match cutoff {
        DoubleSumCutoff::TotalOrder(order) => (order, order),
        DoubleSumCutoff::Rectangular(tr) => (tr.l_max, 2 * tr.s_max + tr.l_max),
    };
    let y0 = 1.0 + t * t;
    let w = -2.0 * t / y0;
    // C(−½, n) w^n for every n that can appear.
    let mut scaled = Vec::with_capacity(n_max + 1);
    let mut binom = 1.0;
    let mut wn = 1.0;
    for n in 0..=n_max {
        scaled.push(binom * wn);
        binom *= (-0.5 - n as f64) / (n as f64 + 1.0);
        wn *= w;
    }
    let p = legendre_table(l_max, x);
    let mut sum = 0.0;
    for (l, &pl) in p.iter().enumerate() {
        let s_top = match cutoff {
            DoubleSumCutoff::TotalOrder(order) => (order - l) / 2,
            DoubleSumCutoff::Rectangular(tr) => tr.s_max,
        };
        let k = beta_index(to_u32(l)?);
        let mut inner = 0.0;
        for s in 0..=s_top {
            let b = beta(k, to_u32(l)?, to_u32(s)?)?;
            inner += b * scaled[2 * s + l];
        }
        sum += inner * pl;
    }
    Ok(sum / y0.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn double_factorial_values() {
        assert_eq!(double_factorial(5).unwrap(), BigUint::from(15u32));
        assert_eq!(double_factorial(0).unwrap(), BigUint::one());
        assert_eq!(double_factorial(-1).unwrap(), BigUint::one());
        assert_eq!(double_factorial(13).unwrap(), BigUint::from(135135u32));
        assert!(double_factorial(-2).is_err());
        assert!(double_factorial(-3).is_err());
    }

    #[test]
    fn double_factorial_large_argument_is_exact() {
        // (2·200·2 + 2·200 + 1)!! is far beyond f64 but must be exact.
        let big = double_factorial(1201).unwrap();
        let prev = double_factorial(1199).unwrap();
        assert_eq!(big, prev * 1201u32);
    }

    #[test]
    fn legendre_low_orders() {
        assert_eq!(legendre(0, 0.7).unwrap(), 1.0);
        assert_eq!(legendre(1, 0.3).unwrap(), 0.3);
        assert!((legendre(2, 0.5).unwrap() + 0.125).abs() < 1e-15);
        assert!(legendre(3, 1.0 + 1e-12).is_err());
        assert!(legendre(3, f64::NAN).is_err());
    }

    #[test]
    fn legendre_matches_hand_expansions() {
        let explicit: [fn(f64) -> f64; 7] = [
            |_| 1.0,
            |x| x,
            |x| (3.0 * x * x - 1.0) / 2.0,
            |x| (5.0 * x.powi(3) - 3.0 * x) / 2.0,
            |x| (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0,
            |x| (63.0 * x.powi(5) - 70.0 * x.powi(3) + 15.0 * x) / 8.0,
            |x| (231.0 * x.powi(6) - 315.0 * x.powi(4) + 105.0 * x * x - 5.0) / 16.0,
        ];
        for i in 0..=20 {
            let x = -1.0 + 0.1 * i as f64;
            for (l, p) in explicit.iter().enumerate() {
                let got = legendre(l, x).unwrap();
                assert!((got - p(x)).abs() < 1e-14, "P_{l}({x})");
                assert!(got.abs() <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_exact(0, 0, 0).unwrap(), q(1, 1));
        assert_eq!(beta_exact(0, 0, 1).unwrap(), q(1, 3));
        assert_eq!(beta_exact(1, 3, 0).unwrap(), q(2, 5));
        assert!((beta(1, 3, 0).unwrap() - 0.4).abs() < 1e-16);
    }

    #[test]
    fn beta_rejects_nonpositive_denominator() {
        // k = 1, l = 0, s = 0: factor 2l+2s+1−2 = −1.
        assert!(beta_exact(1, 0, 0).is_err());
        assert!(beta_exact(3, 1, 1).is_err());
    }

    #[test]
    fn beta_reproduces_explicit_patterns() {
        for l in 0..=5i64 {
            for s in 0..=10i64 {
                let d1 = 2 * l + 2 * s + 1;
                let k0 = q(2 * l + 1, d1);
                assert_eq!(beta_exact(0, l as u32, s as u32).unwrap(), k0);
                if d1 - 2 > 0 {
                    let k1 = q((2 * l + 1) * 2 * (s + 1), d1 * (d1 - 2));
                    assert_eq!(beta_exact(1, l as u32, s as u32).unwrap(), k1);
                }
                if d1 - 4 > 0 {
                    let k2 = q(
                        (2 * l + 1) * 4 * (s + 1) * (s + 2),
                        d1 * (d1 - 2) * (d1 - 4),
                    );
                    assert_eq!(beta_exact(2, l as u32, s as u32).unwrap(), k2);
                }
            }
        }
    }

    #[test]
    fn coefficient_examples() {
        let t = bessel_coefficients(1, 1).unwrap();
        assert_eq!(t.coeffs, vec![0.5]);
        let t = bessel_coefficients(0, 2).unwrap();
        assert_eq!(t.coeffs, vec![1.0, 0.625]);
        let t = bessel_coefficients(2, 2).unwrap();
        assert_eq!(t.coeffs, vec![0.25, 0.28125]);
        assert_eq!(t.power(1), 4);
        assert!(bessel_coefficients(2, 0).is_err());
    }

    #[test]
    fn recurrence_agrees_with_exact_coefficients() {
        for l in 0..=12 {
            let exact = bessel_coefficients_exact(l, EXACT_TERMS).unwrap();
            let rec = bessel_coefficients_recurrence(l, EXACT_TERMS);
            for (s, (e, r)) in exact.iter().zip(&rec).enumerate() {
                let e = rational_to_f64(e);
                assert!((e - r).abs() <= 1e-13 * e, "l={l} s={s}: {e} vs {r}");
            }
        }
    }

    #[test]
    fn coefficients_stay_finite_up_to_max_s() {
        for l in [0, 1, 7, 60] {
            let t = bessel_coefficients(l, MAX_S + 1).unwrap();
            assert!(t.coeffs.iter().all(|c| c.is_finite() && *c > 0.0));
        }
    }

    #[test]
    fn bessel_eval_examples() {
        assert_eq!(bessel_eval(0, BesselArg::Alpha(0.0), 7).unwrap(), 1.0);
        let v = bessel_eval(1, BesselArg::Alpha(FRAC_PI_4), 0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        // 1 + 0.625 + 0.4921875 + 135135/322560
        let expect = 1.0 + 0.625 + 0.4921875 + 135135.0 / 322560.0;
        let v = bessel_eval(0, BesselArg::Alpha(FRAC_PI_4), 3).unwrap();
        assert!((v - expect).abs() < 1e-14);
        assert!((v - 2.536133).abs() < 1e-6);
    }

    #[test]
    fn bessel_eval_domain() {
        assert!(bessel_eval(0, BesselArg::T(1.01), 3).is_err());
        assert!(bessel_eval(0, BesselArg::T(-0.1), 3).is_err());
        assert!(bessel_eval(0, BesselArg::Alpha(0.8), 3).is_err());
        assert!(bessel_eval(0, BesselArg::T(0.5), MAX_S + 1).is_err());
        assert!(bessel_eval(0, BesselArg::T(1.0), 3).is_ok());
    }

    #[test]
    fn modes_agree() {
        for i in 1..=9 {
            let t = 0.1 * i as f64;
            for l in 0..=5 {
                let a = bessel_eval(l, BesselArg::T(t), 20).unwrap();
                let b = bessel_eval(l, BesselArg::Alpha(t.atan()), 20).unwrap();
                assert!((a - b).abs() < 1e-12, "t={t} l={l}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn oracle_examples() {
        assert!((bessel_projection_oracle(0, 0.0, 64).unwrap() - 1.0).abs() < 1e-14);
        let v = bessel_projection_oracle(1, 0.5, 64).unwrap();
        assert!((v - 1.25f64.sqrt() * 0.5 / 3.0).abs() < 1e-12);
        assert!((v - 0.186339).abs() < 1e-6);
        let v = bessel_projection_oracle(2, 0.2, 64).unwrap();
        assert!((v - 1.04f64.sqrt() * 0.04 / 5.0).abs() < 1e-12);
        assert!((v - 0.0081584).abs() < 1e-7);
        assert!(bessel_projection_oracle(0, 1.0, 64).is_err());
        assert!(bessel_projection_oracle(0, 0.5, 63).is_err());
    }

    #[test]
    fn truncation_bound() {
        assert!(SeriesTruncation::new(200, 5).is_ok());
        assert!(SeriesTruncation::new(201, 5).is_err());
    }

    #[test]
    fn resummation_matches_binomial_sum() {
        for &t in &[0.05, 0.1, 0.2, 0.3] {
            for i in 0..=18 {
                let x = -0.9 + 0.1 * i as f64;
                let single = binomial_series(t, x, 30);
                let double = legendre_resummed_series(t, x, DoubleSumCutoff::TotalOrder(30)).unwrap();
                assert!((single - double).abs() < 1e-12, "t={t} x={x}");
            }
        }
    }
}
