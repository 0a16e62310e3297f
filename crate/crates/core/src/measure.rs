//! The invariant measure `G_N`, with density `1/((x+N) log((N+1)/N))` on
//! `[0, 1]`, and the law of the first digit under it.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_unit, domain, Result};
use crate::expansion::NcfParams;
use crate::quad;
use crate::rng::Uniform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussMeasure {
    params: NcfParams,
    log_norm: f64,
}

impl GaussMeasure {
    pub fn new(params: NcfParams) -> Self {
        Self {
            params,
            log_norm: params.log_norm(),
        }
    }

    pub fn params(&self) -> NcfParams {
        self.params
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// Density with respect to Lebesgue measure. Not range-checked.
    pub fn density(&self, x: f64) -> f64 {
        1.0 / ((x + self.params.nf()) * self.log_norm)
    }

    /// `G_N([0, x]) = log((x+N)/N) / log((N+1)/N)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_unit(x, "x")?;
        Ok(self.cdf_unchecked(x))
    }

    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        (x / self.params.nf()).ln_1p() / self.log_norm
    }

    /// `G_N([a, b])`.
    pub fn measure(&self, a: f64, b: f64) -> Result<f64> {
        check_unit(a, "a")?;
        check_unit(b, "b")?;
        if a > b {
            return domain(format!("empty interval [{a}, {b}]"));
        }
        // ln((b+N)/(a+N)) directly keeps precision for short intervals.
        let n = self.params.nf();
        Ok(((b - a) / (a + n)).ln_1p() / self.log_norm)
    }

    /// Inverse CDF: `N((N+1)/N)^u - N`.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        check_unit(u, "u")?;
        Ok(self.inverse_cdf_unchecked(u))
    }

    pub(crate) fn inverse_cdf_unchecked(&self, u: f64) -> f64 {
        self.params.nf() * (u * self.log_norm).exp_m1()
    }

    /// One draw from `G_N` by inversion.
    pub fn sample(&self, source: &mut Uniform) -> f64 {
        // Rounding can push u close to 1 onto the endpoint.
        self.inverse_cdf_unchecked(source.next_f64())
            .min(1.0 - f64::EPSILON / 2.0)
    }

    /// `G_N{x : a_1(x) = i} = log((i+1)^2 / (i(i+2))) / log((N+1)/N)` for `i >= N`.
    pub fn digit_law(&self, i: u64) -> Result<f64> {
        if i < u64::from(self.params.n()) {
            return domain(format!("digit {i} is below N = {}", self.params.n()));
        }
        let i = i as f64;
        Ok((1.0 / (i * (i + 2.0))).ln_1p() / self.log_norm)
    }

    /// `G_N{x : a_1(x) >= m} = log((m+1)/m) / log((N+1)/N)`.
    pub fn digit_tail(&self, m: u64) -> Result<f64> {
        if m < u64::from(self.params.n()) {
            return domain(format!("digit {m} is below N = {}", self.params.n()));
        }
        Ok((1.0 / m as f64).ln_1p() / self.log_norm)
    }

    /// `G_N(T_N^{-1}[0, u))` summed over inverse branches `(N/(i+u), N/i]`,
    /// with the branches past `i_max` added in closed form.
    pub fn preimage_measure(&self, u: f64, i_max: u64) -> Result<f64> {
        check_unit(u, "u")?;
        let n = u64::from(self.params.n());
        let nf = self.params.nf();
        let i_max = i_max.max(n);
        let mut total = 0.0;
        for i in n..=i_max {
            let i = i as f64;
            total += self.measure(nf / (i + u), nf / i)?;
        }
        let m = (i_max + 1) as f64;
        total += (u / m).ln_1p() / self.log_norm;
        Ok(total)
    }
}

/// `G_N([0, x])` for the given parameter.
pub fn gn_cdf(x: f64, params: NcfParams) -> Result<f64> {
    GaussMeasure::new(params).cdf(x)
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A probability density on `[0, 1]`, checked to integrate to 1.
#[derive(Clone)]
pub struct DensityFunction {
    evaluator: Evaluator,
    lipschitz_bound: Option<f64>,
}

impl fmt::Debug for DensityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityFunction")
            .field("lipschitz_bound", &self.lipschitz_bound)
            .finish_non_exhaustive()
    }
}

/// Tolerance on the total mass at construction.
pub const MASS_TOLERANCE: f64 = 1e-9;

impl DensityFunction {
    pub fn new<F>(evaluator: F, lipschitz_bound: Option<f64>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_arc(Arc::new(evaluator), lipschitz_bound)
    }

    pub(crate) fn from_arc(evaluator: Evaluator, lipschitz_bound: Option<f64>) -> Result<Self> {
        let probes = (0..=64).map(|j| f64::from(j) / 64.0);
        for x in probes {
            let v = evaluator(x);
            if !v.is_finite() || v < 0.0 {
                return domain(format!("density is {v} at x = {x}"));
            }
        }
        let mass = quad::integrate(|x| evaluator(x), 0.0, 1.0, 1e-12)?;
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return domain(format!("density integrates to {mass}, not 1"));
        }
        Ok(Self {
            evaluator,
            lipschitz_bound,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    /// `∫_0^x h(t) dt`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_unit(x, "x")?;
        quad::integrate(|t| self.eval(t), 0.0, x, 1e-13)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{digits, NcfParams};
    use crate::rng::SeedStream;

    fn gm(n: u32) -> GaussMeasure {
        GaussMeasure::new(NcfParams::new(n).unwrap())
    }

    #[test]
    fn cdf_examples() {
        for n in 1..=10 {
            assert_eq!(gm(n).cdf(0.0).unwrap(), 0.0);
            assert!((gm(n).cdf(1.0).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((gm(1).cdf(0.5).unwrap() - 0.584_962_500_721_156_2).abs() < 1e-15);
        assert!(gm(1).cdf(1.1).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        for n in [1, 2, 5, 10] {
            let g = gm(n);
            let mass = quad::integrate(|x| g.density(x), 0.0, 1.0, 1e-14).unwrap();
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn measure_examples() {
        let g = gm(2);
        assert!((g.measure(0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(g.measure(0.3, 0.3).unwrap(), 0.0);
        let v = g.measure(1.0 / 3.0, 0.5).unwrap();
        assert!((v - 0.170_157_357_827_560_56).abs() < 1e-14);
        let by_quad = quad::integrate(|x| g.density(x), 1.0 / 3.0, 0.5, 1e-12).unwrap();
        assert!((v - by_quad).abs() < 1e-10);
        assert!(g.measure(0.5, 0.4).is_err());
    }

    #[test]
    fn inverse_cdf_consistency() {
        for n in [1, 3, 7] {
            let g = gm(n);
            assert_eq!(g.inverse_cdf(0.0).unwrap(), 0.0);
            assert!((g.inverse_cdf(1.0).unwrap() - 1.0).abs() < 1e-15);
            for k in 0..=100 {
                let u = f64::from(k) / 100.0;
                let x = g.inverse_cdf(u).unwrap();
                assert!((g.cdf(x).unwrap() - u).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn samples_pass_ks() {
        let g = gm(2);
        let mut src = SeedStream::new(11).stream(0);
        let k = 1_000_000;
        let mut xs: Vec<f64> = (0..k).map(|_| g.sample(&mut src)).collect();
        xs.sort_by(f64::total_cmp);
        let kf = k as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let f = g.cdf(x).unwrap();
                (f - j as f64 / kf)
                    .abs()
                    .max(((j + 1) as f64 / kf - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 1.63 / kf.sqrt(), "KS statistic {d}");
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn digit_law_examples() {
        assert!((gm(1).digit_law(1).unwrap() - 0.415_037_499_278_843_8).abs() < 1e-15);
        assert!((gm(2).digit_law(2).unwrap() - 0.290_488_708_648_545_2).abs() < 1e-15);
        assert!(gm(3).digit_law(2).is_err());
        // Quadrature of the density over the branch (N/(i+1), N/i].
        for n in [1, 2, 5] {
            let g = gm(n);
            for i in u64::from(n)..u64::from(n) + 10 {
                let (a, b) = (f64::from(n) / (i + 1) as f64, f64::from(n) / i as f64);
                let q = quad::integrate(|x| g.density(x), a, b, 1e-13).unwrap();
                assert!((q - g.digit_law(i).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn digit_law_sums_to_one_and_decreases() {
        for n in [1, 2, 5, 10] {
            let g = gm(n);
            let n = u64::from(n);
            let m = n + 500;
            let head: f64 = (n..m).map(|i| g.digit_law(i).unwrap()).sum();
            assert!((head + g.digit_tail(m).unwrap() - 1.0).abs() < 1e-12);
            for i in n..m {
                assert!(g.digit_law(i + 1).unwrap() < g.digit_law(i).unwrap());
            }
        }
    }

    #[test]
    fn digit_law_shape_is_independent_of_n() {
        for i in 10..40u64 {
            let a = gm(3).digit_law(i).unwrap() * gm(3).log_norm();
            let b = gm(10).digit_law(i).unwrap() * gm(10).log_norm();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn interval_invariance_under_map() {
        for n in [1, 2, 5, 10] {
            let g = gm(n);
            for k in 1..=32 {
                let u = f64::from(k) / 32.0;
                let pre = g.preimage_measure(u, 2000).unwrap();
                assert!((pre - g.cdf(u).unwrap()).abs() < 1e-9, "N={n} u={u}");
            }
        }
    }

    #[test]
    fn first_digit_frequencies() {
        for n in [1u32, 3] {
            let g = gm(n);
            let params = NcfParams::new(n).unwrap();
            let mut src = SeedStream::new(5).stream(u64::from(n));
            let k = 1_000_000usize;
            let nn = u64::from(n);
            let mut counts = [0u64; 21];
            for _ in 0..k {
                let x = g.sample(&mut src);
                if x == 0.0 {
                    continue;
                }
                let a = digits(x, params, 1).unwrap().digits()[0];
                if a <= nn + 20 {
                    counts[(a - nn) as usize] += 1;
                }
            }
            for (off, &c) in counts.iter().enumerate() {
                let p = g.digit_law(nn + off as u64).unwrap();
                let se = (p * (1.0 - p) / k as f64).sqrt();
                let freq = c as f64 / k as f64;
                assert!(
                    (freq - p).abs() < 4.0 * se,
                    "N={n} i={} {freq} vs {p}",
                    nn + off as u64
                );
            }
        }
    }

    #[test]
    fn density_function_checks_mass() {
        assert!(DensityFunction::new(|_| 1.0, Some(0.0)).is_ok());
        assert!(DensityFunction::new(|_| 2.0, None).is_err());
        assert!(DensityFunction::new(|x| 2.0 * x - 0.5, None).is_err());
        let g = gm(1);
        let d = DensityFunction::new(move |x| g.density(x), None).unwrap();
        assert!((d.cdf(0.5).unwrap() - g.cdf(0.5).unwrap()).abs() < 1e-12);
    }
}
