use crate::error::{check_unit, domain, Result};
use crate::expansion::NcfParams;
use crate::measure::GaussMeasure;
use crate::quad;

use super::RsccSystem;

/// The system on `W = [0, 1]`, `X = {N, N+1, ...}` with
/// `u(x, i) = N/(x+i)` and `P(x, i) = (x+N)/((x+i)(x+i+1))`.
///
/// With `N = 1` this is the classical continued-fraction system
/// `u(w, x) = 1/(w+x)`, `P(w, x) = (w+1)/((w+x)(w+x+1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcfRscc {
    params: NcfParams,
}

impl NcfRscc {
    pub fn new(params: NcfParams) -> Self {
        Self { params }
    }

    pub fn classical() -> Self {
        Self::new(NcfParams::new(1).expect("N = 1 is valid"))
    }

    pub fn params(&self) -> NcfParams {
        self.params
    }

    fn n(&self) -> u64 {
        u64::from(self.params.n())
    }

    /// Smallest branch `i >= N` with `N/(x+i) < u_end`, i.e. `max(E(x,N), N)`
    /// with `E(x,N) = floor(N/u_end - x) + 1`, corrected so that it agrees
    /// with the direct branch test under rounding.
    pub(crate) fn first_branch_below(&self, x: f64, u_end: f64) -> u64 {
        let nf = self.params.nf();
        let inside = |i: u64| nf / (x + i as f64) < u_end;
        let guess = (nf / u_end - x).floor() + 1.0;
        let mut m = if guess.is_finite() && guess > 0.0 {
            (guess as u64).max(self.n())
        } else {
            self.n()
        };
        while m > self.n() && inside(m - 1) {
            m -= 1;
        }
        while !inside(m) {
            m += 1;
        }
        m
    }
}

impl RsccSystem for NcfRscc {
    fn state_bounds(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn first_event(&self) -> u64 {
        self.n()
    }

    fn event_count(&self) -> Option<u64> {
        None
    }

    fn transition(&self, w: f64, x: u64) -> f64 {
        self.params.nf() / (w + x as f64)
    }

    fn probability(&self, w: f64, x: u64) -> f64 {
        if x < self.n() {
            return 0.0;
        }
        let xf = x as f64;
        (w + self.params.nf()) / ((w + xf) * (w + xf + 1.0))
    }

    fn tail_mass(&self, w: f64, m: u64) -> f64 {
        if m <= self.n() {
            return 1.0;
        }
        (w + self.params.nf()) / (w + m as f64)
    }

    fn transition_lipschitz(&self, x: u64) -> f64 {
        let xf = x as f64;
        self.params.nf() / (xf * xf)
    }

    fn monotone_from(&self) -> Option<u64> {
        // dP/dx > 0 on [0, 1] once i(i + 1 - 2N) > 3N + 1, which holds from 2N + 2.
        Some(2 * self.n() + 2)
    }

    fn sample_event(&self, w: f64, v: f64) -> u64 {
        // Largest i with (w+N)/(w+i) >= v.
        let i = ((w + self.params.nf()) / v - w).floor();
        if i >= u64::MAX as f64 {
            return u64::MAX;
        }
        (i as u64).max(self.n())
    }
}

/// `Q(x, [0, u_end)) = (x+N)/(x+m)` with `m` the first branch landing in
/// `[0, u_end)`.
pub fn q_kernel_interval(sys: &NcfRscc, x: f64, u_end: f64) -> Result<f64> {
    check_unit(x, "x")?;
    if !(u_end > 0.0 && u_end <= 1.0) {
        return domain(format!("u_end = {u_end} is not in (0, 1]"));
    }
    Ok(sys.tail_mass(x, sys.first_branch_below(x, u_end)))
}

/// `Q(x, [0, a))`, allowing `a = 0`.
pub(crate) fn kernel_below(sys: &NcfRscc, x: f64, a: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else {
        sys.tail_mass(x, sys.first_branch_below(x, a))
    }
}

/// `∫_0^1 Q(x, [0, u)) dG_N(x)`, by quadrature split at the kinks
/// `x = N/u − i` where a branch crosses `u`.
pub fn kernel_invariance(sys: &NcfRscc, u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return domain(format!("u = {u} is not in (0, 1]"));
    }
    let g = GaussMeasure::new(sys.params);
    let c = sys.params.nf() / u;
    let mut pts = vec![0.0, 1.0];
    let lo = (c - 1.0).floor() as i64;
    pts.extend(
        (lo..=lo + 2)
            .map(|i| c - i as f64)
            .filter(|&p| p > 0.0 && p < 1.0),
    );
    pts.sort_by(f64::total_cmp);
    quad::integrate_pieces(|x| kernel_below(sys, x, u) * g.density(x), &pts, 1e-13)
}

/// Direct branch sum `Σ_{i <= i_max, N/(x+i) < u_end} P(x, i)` plus the tail
/// mass of the branches past `i_max`, all of which must land in `[0, u_end)`.
pub fn brute_force_kernel(sys: &NcfRscc, x: f64, u_end: f64, i_max: u64) -> Result<f64> {
    check_unit(x, "x")?;
    if !(u_end > 0.0 && u_end <= 1.0) {
        return domain(format!("u_end = {u_end} is not in (0, 1]"));
    }
    if sys.transition(x, i_max + 1) >= u_end {
        return domain(format!("i_max = {i_max} too small for u_end = {u_end}"));
    }
    let head: f64 = (sys.first_event()..=i_max)
        .filter(|&i| sys.transition(x, i) < u_end)
        .map(|i| sys.probability(x, i))
        .sum();
    Ok(head + sys.tail_mass(x, i_max + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(n: u32) -> NcfRscc {
        NcfRscc::new(NcfParams::new(n).unwrap())
    }

    #[test]
    fn construction_examples() {
        for n in 1..=5 {
            let s = sys(n);
            assert_eq!(s.transition(0.0, u64::from(n)), 1.0);
            assert_eq!(s.transition(0.0, 7), f64::from(n) / 7.0);
        }
        assert_eq!(sys(1).probability(0.0, 1), 0.5);
        assert_eq!(sys(3).probability(0.5, 2), 0.0);
        let c = NcfRscc::classical();
        for &w in &[0.0, 0.3, 1.0] {
            for x in 1..20u64 {
                let xf = x as f64;
                assert_eq!(c.transition(w, x), 1.0 / (w + xf));
                let p = (w + 1.0) / ((w + xf) * (w + xf + 1.0));
                assert!((c.probability(w, x) - p).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn kernel_examples() {
        let s = sys(1);
        assert!((q_kernel_interval(&s, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        for n in [1, 2, 5] {
            let s = sys(n);
            let nf = f64::from(n);
            for j in 0..=10 {
                let x = f64::from(j) / 10.0;
                let u = (nf / (x + nf) + 1e-9).min(1.0);
                if u > nf / (x + nf) {
                    assert_eq!(q_kernel_interval(&s, x, u).unwrap(), 1.0);
                }
            }
        }
        assert!(q_kernel_interval(&s, 0.5, 0.0).is_err());
        assert!(q_kernel_interval(&s, 1.5, 0.5).is_err());
    }

    #[test]
    fn closed_form_matches_branch_sum() {
        for n in [1, 2, 3, 7] {
            let s = sys(n);
            for j in 0..=40 {
                let x = f64::from(j) / 40.0;
                for k in 1..=32 {
                    let u = f64::from(k) / 32.0;
                    let a = q_kernel_interval(&s, x, u).unwrap();
                    let b = brute_force_kernel(&s, x, u, 5000).unwrap();
                    assert!((a - b).abs() < 1e-12, "N={n} x={x} u={u}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn brute_force_needs_enough_branches() {
        assert!(brute_force_kernel(&sys(1), 0.0, 0.01, 50).is_err());
    }

    #[test]
    fn kernel_is_monotone_and_additive() {
        let s = sys(2);
        for j in 0..=20 {
            let x = f64::from(j) / 20.0;
            let mut prev = 0.0;
            for k in 1..=50 {
                let u = f64::from(k) / 50.0;
                let q = q_kernel_interval(&s, x, u).unwrap();
                assert!(q >= prev);
                prev = q;
            }
            // [0, a) ∪ [a, b) = [0, b)
            let (a, b) = (0.3, 0.8);
            let left = kernel_below(&s, x, a);
            let mid = kernel_below(&s, x, b) - kernel_below(&s, x, a);
            assert!((left + mid - q_kernel_interval(&s, x, b).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn invariance_of_gauss_measure() {
        for n in [1, 2, 5] {
            let s = sys(n);
            let g = GaussMeasure::new(s.params());
            for k in 1..=16 {
                let u = f64::from(k) / 16.0;
                let lhs = kernel_invariance(&s, u).unwrap();
                assert!((lhs - g.cdf(u).unwrap()).abs() < 1e-8, "N={n} u={u}");
            }
        }
        assert!(kernel_invariance(&sys(1), 0.0).is_err());
    }

    #[test]
    fn derivative_bound_of_transition() {
        for n in 1..=10 {
            let s = sys(n);
            for i in u64::from(n)..u64::from(n) + 30 {
                for j in 0..=100 {
                    let x = f64::from(j) / 100.0;
                    let d = f64::from(n) / (x + i as f64).powi(2);
                    assert!(d <= s.transition_lipschitz(i) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn probability_monotone_past_threshold() {
        for n in 1..=10 {
            let s = sys(n);
            let m = s.monotone_from().unwrap();
            for i in m..m + 40 {
                for j in 0..100 {
                    let (a, b) = (f64::from(j) / 100.0, f64::from(j + 1) / 100.0);
                    assert!(s.probability(b, i) >= s.probability(a, i));
                }
            }
        }
    }

    #[test]
    fn closed_form_sampler() {
        let s = sys(3);
        let w = 0.4;
        assert_eq!(s.sample_event(w, 1.0), 3);
        for m in 4..30u64 {
            let t = s.tail_mass(w, m);
            // v just below the tail mass of m selects an event >= m.
            assert!(s.sample_event(w, t * (1.0 - 1e-12)) >= m);
            assert!(s.sample_event(w, (t * (1.0 + 1e-12)).min(1.0)) < m);
        }
    }
}
