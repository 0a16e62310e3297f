//! Regularity and uniform ergodicity: the support orbit toward the fixed
//! point, shifted path laws `P_r^n(w, A)` and their limit `P_r^∞(A)`.

use serde::Serialize;

use crate::budget::{work, Budget};
use crate::error::{check_unit, domain, Result};
use crate::expansion::fixed_point;
use crate::measure::GaussMeasure;
use crate::quad;
use crate::rng::{MeanAcc, SeedStream};

use super::kernel::{GridKernel, McEstimate};
use super::mealy::FiniteChain;
use super::ncf::NcfRscc;
use super::{path_probability_set, EventWord, RsccSystem, WordSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartWitness {
    pub start: f64,
    /// `|x_n − x*|` for `n = 0..=n_max`.
    pub distances: Vec<f64>,
    /// Every step used an event of positive probability.
    pub supported: bool,
    /// Distances never grow after the first step (up to a few ulps).
    pub monotone_after_first: bool,
    /// `|x_{n+1} − x*| / |x_n − x*|` while `|x_n − x*| > 1e−7`.
    pub ratios: Vec<f64>,
}

impl StartWitness {
    /// First `n` with `|x_n − x*| < tol`.
    pub fn steps_to(&self, tol: f64) -> Option<usize> {
        self.distances.iter().position(|&d| d < tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub x_star: f64,
    /// `N/(x*+N)^2`, the modulus of the orbit map's derivative at `x*`.
    pub limit_ratio: f64,
    pub starts: Vec<StartWitness>,
    /// Largest distance over all starts, per step.
    pub max_dist_curve: Vec<f64>,
}

/// Follows `x_{n+1} = u(x_n, N) = N/(x_n + N)`, which lies in the support of
/// `Q(x_n, ·)`, from each start.
pub fn regularity_witness(sys: &NcfRscc, starts: &[f64], n_max: usize) -> Result<RegularityReport> {
    if n_max == 0 {
        return domain("n_max must be at least 1");
    }
    for &s in starts {
        check_unit(s, "start")?;
    }
    let params = sys.params();
    let n = sys.first_event();
    let x_star = fixed_point(params);
    let limit_ratio = params.nf() / (x_star + params.nf()).powi(2);
    let slack = 4.0 * f64::EPSILON;
    let witnesses: Vec<StartWitness> = starts
        .iter()
        .map(|&start| {
            let mut x = start;
            let mut supported = true;
            let mut distances = vec![(x - x_star).abs()];
            for _ in 0..n_max {
                supported &= sys.probability(x, n) > 0.0;
                x = sys.transition(x, n);
                distances.push((x - x_star).abs());
            }
            let monotone_after_first = distances[1..].windows(2).all(|w| w[1] <= w[0] + slack);
            let ratios = distances
                .windows(2)
                .take_while(|w| w[0] > 1e-7)
                .map(|w| w[1] / w[0])
                .collect();
            StartWitness {
                start,
                distances,
                supported,
                monotone_after_first,
                ratios,
            }
        })
        .collect();
    let max_dist_curve = (0..=n_max)
        .map(|k| witnesses.iter().map(|w| w.distances[k]).fold(0.0, f64::max))
        .collect();
    Ok(RegularityReport {
        x_star,
        limit_ratio,
        starts: witnesses,
        max_dist_curve,
    })
}

fn check_shift(n: usize, set: &WordSet) -> Result<usize> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    set.word_len()
}

/// Exact `P_r^n(w, A) = Σ_{w'} Q^(n−1)(w, w') P_r(w', A)` on a finite system.
pub fn shifted_path_probability<S: RsccSystem + ?Sized>(
    sys: &S,
    w: f64,
    n: usize,
    set: &WordSet,
) -> Result<f64> {
    check_shift(n, set)?;
    let chain = FiniteChain::from_system(sys)?;
    let i = chain.state_index(w)?;
    let q = chain.step(n - 1);
    chain
        .states()
        .iter()
        .enumerate()
        .map(|(j, &s)| Ok(q.get(i, j) * path_probability_set(sys, s, set)?))
        .sum()
}

fn in_set(set: &WordSet, word: &[u64]) -> bool {
    match set {
        WordSet::Tail(m) => word[0] >= *m,
        WordSet::Words(ws) => ws.iter().any(|x| x.letters() == word),
    }
}

/// `P_r^n(w, A)` by simulation: `n − 1` burn-in events, then `r` recorded ones.
#[allow(clippy::too_many_arguments)]
pub fn shifted_path_probability_mc<S: RsccSystem + ?Sized>(
    sys: &S,
    w: f64,
    n: usize,
    set: &WordSet,
    paths: u64,
    seed: SeedStream,
    stream: u64,
    budget: &Budget,
) -> Result<McEstimate> {
    let r = check_shift(n, set)?;
    if paths < 2 {
        return domain("need at least 2 paths");
    }
    budget.check(work(&[paths, (n - 1 + r) as u64]))?;
    let mut src = seed.stream(stream);
    let mut acc = MeanAcc::default();
    let mut word = vec![0u64; r];
    for _ in 0..paths {
        let mut s = w;
        for _ in 1..n {
            s = sys.transition(s, sys.sample_event(s, src.next_open0()));
        }
        for slot in word.iter_mut() {
            let x = sys.sample_event(s, src.next_open0());
            *slot = x;
            s = sys.transition(s, x);
        }
        acc.push(if in_set(set, &word) { 1.0 } else { 0.0 });
    }
    Ok(acc.into())
}

/// `P_r^∞(A) = ∫ P_r(w, A) dG_N(w)`.
pub fn limit_path_law(sys: &NcfRscc, set: &WordSet) -> Result<f64> {
    set.word_len()?;
    let g = GaussMeasure::new(sys.params());
    quad::integrate(
        |w| path_probability_set(sys, w, set).expect("word set validated") * g.density(w),
        0.0,
        1.0,
        1e-14,
    )
}

/// A named word set used to probe `ε_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathProbe {
    pub label: String,
    pub set: WordSet,
}

impl PathProbe {
    /// Single digits `N`, `N+1`, the tail `{i >= N+2}`, and two-letter sets.
    pub fn standard_family(sys: &NcfRscc) -> Vec<PathProbe> {
        let n = sys.first_event();
        let w = |v: Vec<u64>| EventWord::from(v);
        vec![
            PathProbe {
                label: format!("{{{n}}}"),
                set: WordSet::singleton(n),
            },
            PathProbe {
                label: format!("{{{}}}", n + 1),
                set: WordSet::singleton(n + 1),
            },
            PathProbe {
                label: format!("{{i>={}}}", n + 2),
                set: WordSet::Tail(n + 2),
            },
            PathProbe {
                label: format!("{{{n}{n}}}"),
                set: WordSet::Words(vec![w(vec![n, n])]),
            },
            PathProbe {
                label: format!("{{{n}{m},{m}{n}}}", m = n + 1),
                set: WordSet::Words(vec![w(vec![n, n + 1]), w(vec![n + 1, n])]),
            },
        ]
    }
}

/// `ε_n = sup_probe sup_grid |P_r^n(w, A) − P_r^∞(A)|` for `n = 1..=n_max`,
/// with `P_r^n(·, A) = Q^(n−1) P_r(·, A)` propagated on the grid kernel.
pub fn ergodicity_curve(
    sys: &NcfRscc,
    probes: &[PathProbe],
    n_max: usize,
    resolution: usize,
    budget: &Budget,
) -> Result<Vec<f64>> {
    if n_max == 0 || probes.is_empty() {
        return domain("need n_max >= 1 and at least one probe");
    }
    let m = resolution as u64;
    budget.check(work(&[probes.len() as u64, n_max as u64, m + 1, m]))?;
    let kern = GridKernel::new(*sys, resolution, budget)?;
    let mut eps = vec![0.0f64; n_max];
    for probe in probes {
        let limit = limit_path_law(sys, &probe.set)?;
        let mut g = (0..=resolution)
            .map(|j| path_probability_set(sys, kern.node(j), &probe.set))
            .collect::<Result<Vec<f64>>>()?;
        for e in eps.iter_mut() {
            let dev = g.iter().map(|v| (v - limit).abs()).fold(0.0, f64::max);
            *e = e.max(dev);
            g = kern.step(&g);
        }
    }
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::NcfParams;
    use crate::rscc::{all_words, path_probability, MealySystem};

    fn sys(n: u32) -> NcfRscc {
        NcfRscc::new(NcfParams::new(n).unwrap())
    }

    fn starts() -> Vec<f64> {
        (0..8).map(|j| f64::from(j) / 7.0).collect()
    }

    #[test]
    fn orbit_reaches_the_fixed_point() {
        for n in [1, 2, 5, 10] {
            let rep = regularity_witness(&sys(n), &starts(), 200).unwrap();
            for w in &rep.starts {
                assert!(w.supported && w.monotone_after_first);
                assert!(w.steps_to(1e-12).is_some());
                let last = *w.ratios.last().unwrap();
                assert!(
                    (last - rep.limit_ratio).abs() < 1e-5,
                    "N={n}: {last} vs {}",
                    rep.limit_ratio
                );
            }
            assert!(rep.max_dist_curve[200] < 1e-12);
        }
    }

    #[test]
    fn orbit_examples() {
        let rep = regularity_witness(&sys(1), &[0.0], 60).unwrap();
        assert!(rep.starts[0].distances[60] < 1e-12);
        assert!((rep.x_star - 0.6180339887498949).abs() < 1e-15);
        let rep = regularity_witness(&sys(4), &[1.0], 200).unwrap();
        assert!((rep.x_star - (2.0 * 2f64.sqrt() - 2.0)).abs() < 1e-15);
        assert!(regularity_witness(&sys(1), &[0.5], 0).is_err());
        assert!(regularity_witness(&sys(1), &[1.5], 5).is_err());
    }

    fn brute_shifted(m: &MealySystem, w: f64, n: usize, set: &WordSet) -> f64 {
        let WordSet::Words(ws) = set else {
            unreachable!()
        };
        let prefixes = if n == 1 {
            vec![EventWord::empty()]
        } else {
            all_words(m, n - 1).unwrap()
        };
        prefixes
            .iter()
            .flat_map(|p| ws.iter().map(move |a| p.concat(a)))
            .map(|x| path_probability(m, w, &x).unwrap())
            .sum()
    }

    #[test]
    fn mealy_shifted_laws_are_exact() {
        let m = MealySystem::new(0.3, 0.6).unwrap();
        let sets = [
            WordSet::singleton(1),
            WordSet::singleton(2),
            WordSet::Words(vec![vec![1, 2].into(), vec![2, 2].into()]),
        ];
        for &w in &[1.0, 2.0] {
            for set in &sets {
                assert_eq!(
                    shifted_path_probability(&m, w, 1, set).unwrap(),
                    path_probability_set(&m, w, set).unwrap()
                );
                for n in 1..=6 {
                    let a = shifted_path_probability(&m, w, n, set).unwrap();
                    let b = brute_shifted(&m, w, n, set);
                    assert!((a - b).abs() < 1e-14);
                }
            }
        }
        // Next input after n − 1 steps: row of Q^(n).
        let chain = FiniteChain::from_system(&m).unwrap();
        for n in 1..=5 {
            let p = shifted_path_probability(&m, 1.0, n, &WordSet::singleton(1)).unwrap();
            assert!((p - chain.step(n).get(0, 0)).abs() < 1e-15);
        }
        assert!(shifted_path_probability(&sys(1), 0.5, 2, &WordSet::singleton(1)).is_err());
    }

    #[test]
    fn mc_agrees_with_exact_on_mealy() {
        let m = MealySystem::new(0.3, 0.9).unwrap();
        let set = WordSet::Words(vec![vec![2, 1].into()]);
        let exact = shifted_path_probability(&m, 1.0, 4, &set).unwrap();
        let mc = shifted_path_probability_mc(
            &m,
            1.0,
            4,
            &set,
            50_000,
            SeedStream::new(5),
            0,
            &Budget::default(),
        )
        .unwrap();
        assert!((exact - mc.mean).abs() < 4.0 * mc.std_error);
    }

    #[test]
    fn limit_law_matches_digit_law() {
        for n in [1, 2, 5] {
            let s = sys(n);
            let g = GaussMeasure::new(s.params());
            for i in u64::from(n)..=u64::from(n) + 20 {
                let v = limit_path_law(&s, &WordSet::singleton(i)).unwrap();
                assert!((v - g.digit_law(i).unwrap()).abs() < 1e-10);
            }
            let all = limit_path_law(&s, &WordSet::Tail(u64::from(n))).unwrap();
            assert!((all - 1.0).abs() < 1e-12);
        }
        let v = limit_path_law(&sys(1), &WordSet::singleton(1)).unwrap();
        assert!((v - (4.0f64 / 3.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn shifted_mc_approaches_the_limit() {
        let s = sys(2);
        let set = WordSet::singleton(2);
        let limit = limit_path_law(&s, &set).unwrap();
        let mc = shifted_path_probability_mc(
            &s,
            0.0,
            30,
            &set,
            100_000,
            SeedStream::new(11),
            3,
            &Budget::default(),
        )
        .unwrap();
        assert!((mc.mean - limit).abs() < 4.0 * mc.std_error);
    }

    #[test]
    fn ergodicity_curve_decays() {
        let s = sys(1);
        let probes = PathProbe::standard_family(&s);
        let eps = ergodicity_curve(&s, &probes, 12, 256, &Budget::default()).unwrap();
        assert!(eps[0] > 0.05);
        assert!(eps[11] < eps[0] * 1e-3, "{eps:?}");
        for n in 0..6 {
            assert!(eps[n + 1] <= eps[n], "{eps:?}");
        }
    }
}
