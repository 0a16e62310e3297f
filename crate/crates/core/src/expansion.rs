//! The map `T_N(x) = N/x - floor(N/x)`, its digit expansion
//! `x = N/(a_1 + N/(a_2 + ...))`, exact evaluation and convergents.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, domain, NcfError, Result};

/// Arbitrary-precision rational in lowest terms with positive denominator.
pub type Rational = BigRational;

/// The integer parameter `N >= 1` of the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NcfParams {
    n: u32,
}

impl NcfParams {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return domain("N must be at least 1");
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `N` as a float.
    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    /// `log((N+1)/N)`, the normalizer of the invariant measure.
    pub fn log_norm(&self) -> f64 {
        (1.0 / self.nf()).ln_1p()
    }
}

/// Partial quotients of an expansion. `terminated` is set when the orbit
/// reached 0 exactly, in which case the list is the complete expansion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitSequence {
    digits: Vec<u64>,
    terminated: bool,
}

impl DigitSequence {
    /// Builds a sequence, checking every digit is at least `N`.
    pub fn new(digits: Vec<u64>, terminated: bool, params: NcfParams) -> Result<Self> {
        if let Some(d) = digits.iter().find(|&&d| d < u64::from(params.n())) {
            return domain(format!("digit {d} is below N = {}", params.n()));
        }
        Ok(Self { digits, terminated })
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn into_digits(self) -> Vec<u64> {
        self.digits
    }
}

/// Values the map can act on: binary64 or exact rationals.
pub trait Expand: Sized {
    fn is_zero_value(&self) -> bool;

    /// Checks `0 <= x <= 1`.
    fn check_domain(&self) -> Result<()>;

    /// `(floor(N/x), T_N(x))` for `x` in `(0, 1]`.
    fn split(&self, params: NcfParams) -> Result<(u64, Self)>;
}

// 2^63: past this the float quotient has no meaningful integer part.
const MAX_FLOAT_QUOTIENT: f64 = 9_223_372_036_854_775_808.0;

impl Expand for f64 {
    fn is_zero_value(&self) -> bool {
        *self == 0.0
    }

    fn check_domain(&self) -> Result<()> {
        check_unit(*self, "x")
    }

    fn split(&self, params: NcfParams) -> Result<(u64, Self)> {
        let q = params.nf() / *self;
        if q >= MAX_FLOAT_QUOTIENT {
            return domain(format!(
                "iterate {self:e} too small for a representable digit"
            ));
        }
        let a = q.floor();
        Ok((a as u64, q - a))
    }
}

impl Expand for Rational {
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }

    fn check_domain(&self) -> Result<()> {
        if *self < Rational::zero() || *self > Rational::one() {
            return domain(format!("x = {self} is not in [0, 1]"));
        }
        Ok(())
    }

    fn split(&self, params: NcfParams) -> Result<(u64, Self)> {
        let q = Rational::from_integer(BigInt::from(params.n())) / self;
        let a = q.floor();
        let digit = a
            .to_integer()
            .to_u64()
            .ok_or_else(|| NcfError::Domain(format!("digit of {self} exceeds u64")))?;
        Ok((digit, q - a))
    }
}

/// `T_N(x)`; fixes 0. Result lies in `[0, 1)`.
pub fn gauss_map(x: f64, params: NcfParams) -> Result<f64> {
    x.check_domain()?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(x.split(params)?.1)
}

/// Exact `T_N(x)` on rationals.
pub fn gauss_map_rational(x: &Rational, params: NcfParams) -> Result<Rational> {
    x.check_domain()?;
    if x.is_zero() {
        return Ok(Rational::zero());
    }
    Ok(x.split(params)?.1)
}

/// First `max_len` digits `a_k = floor(N / T_N^{k-1}(x))`, stopping early
/// (with `terminated`) when an iterate is exactly 0.
///
/// `x = 0` is rejected: its first digit would be infinite.
pub fn digits<X: Expand>(x: X, params: NcfParams, max_len: usize) -> Result<DigitSequence> {
    x.check_domain()?;
    if x.is_zero_value() {
        return domain("x = 0 has no finite first digit");
    }
    if max_len == 0 {
        return domain("max_len must be at least 1");
    }
    let mut out = Vec::new();
    let mut cur = x;
    while out.len() < max_len {
        let (a, next) = cur.split(params)?;
        out.push(a);
        if next.is_zero_value() {
            return Ok(DigitSequence {
                digits: out,
                terminated: true,
            });
        }
        cur = next;
    }
    Ok(DigitSequence {
        digits: out,
        terminated: false,
    })
}

/// Full expansion of a rational; always terminates.
pub fn digits_exact(x: &Rational, params: NcfParams) -> Result<DigitSequence> {
    digits(x.clone(), params, usize::MAX)
}

fn check_digits(seq: &[u64]) -> Result<()> {
    if seq.is_empty() {
        return Err(NcfError::EmptySequence);
    }
    if seq.contains(&0) {
        return domain("digits must be positive");
    }
    Ok(())
}

/// `N/(a_1 + N/(a_2 + ... + N/a_k))` by backward recursion, exactly.
pub fn evaluate(seq: &[u64], params: NcfParams) -> Result<Rational> {
    check_digits(seq)?;
    let n = Rational::from_integer(BigInt::from(params.n()));
    let mut v = Rational::zero();
    for &a in seq.iter().rev() {
        v = &n / (Rational::from_integer(BigInt::from(a)) + v);
    }
    Ok(v)
}

/// Prefix values `p_k / q_k` via
/// `p_k = a_k p_{k-1} + N p_{k-2}`, `q_k = a_k q_{k-1} + N q_{k-2}`
/// with `p_{-1} = 1, p_0 = 0, q_{-1} = 0, q_0 = 1`.
pub fn convergents(seq: &[u64], params: NcfParams) -> Result<Vec<Rational>> {
    check_digits(seq)?;
    let n = BigInt::from(params.n());
    let (mut p_prev, mut p) = (BigInt::one(), BigInt::zero());
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    let mut out = Vec::with_capacity(seq.len());
    for &a in seq {
        let a = BigInt::from(a);
        let p_next = &a * &p + &n * &p_prev;
        let q_next = &a * &q + &n * &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        // p and q share factors of N in general; reduce only the reported value.
        let g = p.gcd(&q);
        out.push(Rational::new_raw(&p / &g, &q / &g));
    }
    Ok(out)
}

/// `x* = (-N + sqrt(N^2 + 4N)) / 2`, the fixed point of `x -> N/(x + N)`
/// and of `T_N` on its first branch.
pub fn fixed_point(params: NcfParams) -> f64 {
    let n = params.nf();
    // Rationalized form avoids cancellation for large N.
    2.0 * n / (n + (n * n + 4.0 * n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{FromPrimitive, Signed};
    use proptest::prelude::*;

    fn p(n: u32) -> NcfParams {
        NcfParams::new(n).unwrap()
    }

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn params_reject_zero() {
        assert!(NcfParams::new(0).is_err());
    }

    #[test]
    fn gauss_map_examples() {
        assert_eq!(gauss_map(0.0, p(3)).unwrap(), 0.0);
        assert!((gauss_map(0.75, p(2)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        for n in 1..=10 {
            let xs = fixed_point(p(n));
            assert!((gauss_map(xs, p(n)).unwrap() - xs).abs() <= 1e-12);
        }
        assert_eq!(gauss_map(1.0, p(4)).unwrap(), 0.0);
    }

    #[test]
    fn gauss_map_domain() {
        assert!(gauss_map(-0.1, p(1)).is_err());
        assert!(gauss_map(1.5, p(1)).is_err());
        assert!(gauss_map(f64::NAN, p(1)).is_err());
        assert!(gauss_map_rational(&r(3, 2), p(1)).is_err());
    }

    #[test]
    fn gauss_map_rational_examples() {
        assert_eq!(gauss_map_rational(&r(1, 2), p(1)).unwrap(), r(0, 1));
        assert_eq!(gauss_map_rational(&r(2, 3), p(2)).unwrap(), r(0, 1));
        assert_eq!(gauss_map_rational(&r(3, 7), p(1)).unwrap(), r(1, 3));
        assert_eq!(gauss_map_rational(&r(3, 4), p(2)).unwrap(), r(2, 3));
    }

    #[test]
    fn digits_examples() {
        let d = digits(r(2, 3), p(2), 10).unwrap();
        assert_eq!(d.digits(), &[3]);
        assert!(d.terminated());

        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let d = digits(golden, p(1), 4).unwrap();
        assert_eq!(d.digits(), &[1, 1, 1, 1]);
        assert!(!d.terminated());

        let d = digits(2f64.sqrt() - 1.0, p(2), 4).unwrap();
        assert_eq!(d.digits(), &[4, 2, 4, 2]);

        let d = digits(1.0, p(5), 10).unwrap();
        assert_eq!(d.digits(), &[5]);
        assert!(d.terminated());
    }

    #[test]
    fn digits_rejects_zero_and_empty_request() {
        assert!(digits(0.0, p(1), 4).is_err());
        assert!(digits(r(0, 1), p(1), 4).is_err());
        assert!(digits(0.5, p(1), 0).is_err());
    }

    #[test]
    fn evaluate_examples() {
        for n in 1..6 {
            assert_eq!(evaluate(&[u64::from(n)], p(n)).unwrap(), r(1, 1));
        }
        assert_eq!(evaluate(&[3], p(2)).unwrap(), r(2, 3));
        assert_eq!(evaluate(&[4, 2], p(2)).unwrap(), r(2, 5));
        assert_eq!(evaluate(&[], p(2)), Err(NcfError::EmptySequence));
        assert!(evaluate(&[0], p(1)).is_err());
    }

    #[test]
    fn convergents_examples() {
        assert_eq!(convergents(&[4, 2], p(2)).unwrap(), vec![r(1, 2), r(2, 5)]);
        assert_eq!(
            convergents(&[1, 1, 1], p(1)).unwrap(),
            vec![r(1, 1), r(1, 2), r(2, 3)]
        );
        assert_eq!(convergents(&[7], p(7)).unwrap(), vec![r(1, 1)]);
    }

    #[test]
    fn fixed_point_values() {
        assert!((fixed_point(p(1)) - 0.618_033_988_749_894_8).abs() < 1e-15);
        assert!((fixed_point(p(4)) - (2.0 * 2f64.sqrt() - 2.0)).abs() < 1e-15);
        for n in 1..=10 {
            let xs = fixed_point(p(n));
            assert!(xs > 0.0 && xs < 1.0);
            let mut x = 0.0;
            let mut steps = 0;
            while (x - xs).abs() > 1e-12 {
                x = f64::from(n) / (x + f64::from(n));
                steps += 1;
            }
            assert!(steps <= 200, "N = {n}: {steps} steps");
        }
    }

    #[test]
    fn fixed_point_digits_are_constant_n() {
        for n in 1..=10 {
            let d = digits(fixed_point(p(n)), p(n), 5).unwrap();
            assert!(d.digits().iter().all(|&a| a == u64::from(n)), "{d:?}");
        }
    }

    #[test]
    fn digit_sequence_checks_lower_bound() {
        assert!(DigitSequence::new(vec![3, 1], false, p(2)).is_err());
        assert!(DigitSequence::new(vec![3, 2], false, p(2)).is_ok());
    }

    fn exact_err(x: f64, approx: &Rational) -> f64 {
        let xr = Rational::from_f64(x).unwrap();
        (xr - approx).abs().to_f64().unwrap()
    }

    #[test]
    fn convergence_on_samples() {
        let samples = [
            2f64.sqrt() - 1.0,
            std::f64::consts::PI - 3.0,
            std::f64::consts::E - 2.0,
            0.123_456_789_012_345,
            (5f64.sqrt() - 1.0) / 2.0,
        ];
        for n in 1..=10 {
            for &x in &samples {
                let seq = digits(x, p(n), 60).unwrap();
                let errs: Vec<f64> = (1..=seq.len())
                    .map(|k| exact_err(x, &evaluate(&seq.digits()[..k], p(n)).unwrap()))
                    .collect();
                for w in errs.windows(2) {
                    assert!(w[1] <= w[0] + 1e-16, "N={n} x={x}: {errs:?}");
                }
                assert!(*errs.last().unwrap() < 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn roundtrip_rationals(q in 1i64..=1000, frac in 0.0f64..1.0, n in 1u32..=10) {
            let pnum = ((frac * q as f64).floor() as i64 + 1).min(q);
            let x = r(pnum, q);
            let seq = digits_exact(&x, p(n)).unwrap();
            prop_assert!(seq.terminated());
            prop_assert!(seq.digits().iter().all(|&a| a >= u64::from(n)));
            prop_assert_eq!(evaluate(seq.digits(), p(n)).unwrap(), x);
        }

        #[test]
        fn convergents_match_prefix_evaluation(
            digs in proptest::collection::vec(0u64..20, 1..12),
            n in 1u32..=6,
        ) {
            let seq: Vec<u64> = digs.iter().map(|d| d + u64::from(n)).collect();
            let conv = convergents(&seq, p(n)).unwrap();
            for k in 1..=seq.len() {
                prop_assert_eq!(&conv[k - 1], &evaluate(&seq[..k], p(n)).unwrap());
            }
        }

        #[test]
        fn float_map_agrees_with_exact(q in 2i64..=100_000, frac in 0.0f64..1.0, n in 1u32..=10) {
            let pnum = ((frac * q as f64).floor() as i64 + 1).min(q);
            let xr = r(pnum, q);
            let x = xr.to_f64().unwrap();
            let exact = gauss_map_rational(&Rational::from_f64(x).unwrap(), p(n)).unwrap();
            let float = gauss_map(x, p(n)).unwrap();
            let e = exact.to_f64().unwrap();
            // Skip the measure-zero neighbourhood where the float quotient rounds
            // across an integer.
            prop_assume!((e - float).abs() < 0.5);
            let ulp = f64::EPSILON * (f64::from(n) / x);
            prop_assert!((e - float).abs() <= 4.0 * ulp, "{} vs {}", e, float);
        }

        #[test]
        fn shift_property(x in 0.001f64..1.0, n in 1u32..=10, m in 1usize..12) {
            let long = digits(x, p(n), m + 1).unwrap();
            prop_assume!(!long.terminated() && long.len() == m + 1);
            // Stay away from digit boundaries.
            let mut y = x;
            for _ in 0..=m {
                let q = f64::from(n) / y;
                prop_assume!((q - q.round()).abs() > 1e-9);
                y = q - q.floor();
            }
            let shifted = digits(gauss_map(x, p(n)).unwrap(), p(n), m).unwrap();
            prop_assert_eq!(&long.digits()[1..], shifted.digits());
        }
    }
}
