//! Grid estimates of the contraction coefficients
//! `r_k = sup Σ_{x ∈ X^k} P_k(w', x) |w'x − w''x| / |w' − w''|` and
//! `R = sup_A sup |P(w', A) − P(w'', A)| / |w' − w''|`.

use serde::Serialize;

use crate::budget::{work, Budget};
use crate::error::{domain, NcfError, Result};

use super::RsccSystem;

const MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionConfig {
    pub k_max: usize,
    /// Number of grid cells on an interval state space.
    pub grid: usize,
    /// Maximum number of enumerated words per `k`.
    pub word_cap: u64,
    pub budget: Budget,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        Self {
            k_max: 2,
            grid: 512,
            word_cap: 256,
            budget: Budget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    /// `r_1, ..., r_{k_max}`.
    pub r_values: Vec<f64>,
    /// `true` where `r_k` is the submultiplicative bound rather than a grid sup.
    pub r_bounded: Vec<bool>,
    pub big_r: f64,
    /// `R` restricted to singletons and tail sets.
    pub big_r_families: f64,
    pub certified: bool,
    /// Smallest `ℓ` with `r_ℓ < 1 − 1e−6`.
    pub certified_at: Option<usize>,
    pub points: usize,
}

fn states<S: RsccSystem + ?Sized>(sys: &S, grid: usize) -> Result<Vec<f64>> {
    if let Some(s) = sys.finite_states() {
        return Ok(s);
    }
    if grid < 1 {
        return domain("grid must have at least one cell");
    }
    let (lo, hi) = sys.state_bounds();
    Ok((0..=grid)
        .map(|j| lo + (hi - lo) * j as f64 / grid as f64)
        .collect())
}

fn int_root(cap: u64, k: usize) -> u64 {
    let mut c = (cap as f64).powf(1.0 / k as f64).floor() as u64;
    while c > 0 && c.checked_pow(k as u32).is_none_or(|p| p > cap) {
        c -= 1;
    }
    while (c + 1).checked_pow(k as u32).is_some_and(|p| p <= cap) {
        c += 1;
    }
    c
}

/// Letters enumerated per position and the bound `Lip u(·, x)` shared by all
/// letters past the cut; `None` if nothing fits.
fn letter_cut<S: RsccSystem + ?Sized>(sys: &S, k: usize, cap: u64) -> Option<(Vec<u64>, f64)> {
    let first = sys.first_event();
    match sys.event_count() {
        Some(c) => {
            let all = c.checked_pow(k as u32)?;
            (all <= cap).then(|| ((first..first + c).collect(), 0.0))
        }
        None => {
            let cut = int_root(cap, k);
            if cut < 2 {
                return None;
            }
            Some((
                (first..first + cut).collect(),
                sys.transition_lipschitz(first + cut),
            ))
        }
    }
}

/// Enumerated words from one state, level by level: `states[l]` holds
/// `w·x_1...x_l` for every enumerated prefix of length `l`, `probs[l]` its
/// path probability, and `cut[l]` that probability times the mass of the
/// letters past the cut.
struct WordTable {
    states: Vec<Vec<f64>>,
    probs: Vec<f64>,
    cut: Vec<Vec<f64>>,
}

fn words_at<S: RsccSystem + ?Sized>(sys: &S, w: f64, letters: &[u64], k: usize) -> WordTable {
    let end = letters.last().map_or(0, |x| x + 1);
    let infinite = sys.event_end().is_none();
    let mut probs = vec![1.0];
    let mut states = vec![vec![w]];
    let mut cut = Vec::with_capacity(k);
    for _ in 0..k {
        let last = states.last().expect("level 0");
        let mut p2 = Vec::with_capacity(probs.len() * letters.len());
        let mut s2 = Vec::with_capacity(probs.len() * letters.len());
        let mut c = Vec::with_capacity(probs.len());
        for (&p, &s) in probs.iter().zip(last) {
            c.push(if infinite {
                p * sys.tail_mass(s, end)
            } else {
                0.0
            });
            for &x in letters {
                p2.push(p * sys.probability(s, x));
                s2.push(sys.transition(s, x));
            }
        }
        cut.push(c);
        probs = p2;
        states.push(s2);
    }
    WordTable { states, probs, cut }
}

/// Grid sup of the `k`-step ratio. A prefix of length `l` followed by a
/// letter past the cut contributes at most
/// `P · tail · lip · |Δ prefix| · r_{k−1−l}`, with `rest[j] = r_j`, `rest[0] = 1`.
fn r_grid<S: RsccSystem + ?Sized>(
    sys: &S,
    pts: &[f64],
    letters: &[u64],
    lip: f64,
    rest: &[f64],
) -> f64 {
    let k = rest.len();
    let table: Vec<WordTable> = pts.iter().map(|&w| words_at(sys, w, letters, k)).collect();
    let mut best: f64 = 0.0;
    for (a, ta) in table.iter().enumerate() {
        for (b, tb) in table.iter().enumerate() {
            if a == b {
                continue;
            }
            let d = (pts[a] - pts[b]).abs();
            let head: f64 = ta
                .probs
                .iter()
                .zip(ta.states[k].iter().zip(&tb.states[k]))
                .map(|(p, (x, y))| p * (x - y).abs())
                .sum();
            let mut tail = 0.0;
            if lip > 0.0 {
                for l in 0..k {
                    let s: f64 = ta.cut[l]
                        .iter()
                        .zip(ta.states[l].iter().zip(&tb.states[l]))
                        .map(|(c, (x, y))| c * (x - y).abs())
                        .sum();
                    tail += s * rest[k - 1 - l];
                }
            }
            best = best.max((head + lip * tail) / d);
        }
    }
    best
}

/// `(exact sup over A, sup over singletons and tails)` on the grid.
fn big_r<S: RsccSystem + ?Sized>(sys: &S, pts: &[f64], cap: u64) -> (f64, f64) {
    let first = sys.first_event();
    let (end, exact_tail) = match sys.event_end() {
        Some(e) => (e, true),
        None => match sys.monotone_from() {
            Some(m) => (m.max(first), true),
            None => (first + cap, false),
        },
    };
    let rows: Vec<(Vec<f64>, f64)> = pts
        .iter()
        .map(|&w| {
            let head = (first..end).map(|x| sys.probability(w, x)).collect();
            let tail = if sys.event_end().is_some() {
                0.0
            } else {
                sys.tail_mass(w, end)
            };
            (head, tail)
        })
        .collect();
    let mut exact: f64 = 0.0;
    let mut families: f64 = 0.0;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let d = (pts[a] - pts[b]).abs();
            let (ha, ta) = &rows[a];
            let (hb, tb) = &rows[b];
            let (mut pos, mut neg) = (0.0, 0.0);
            let mut fam: f64 = 0.0;
            for (p, q) in ha.iter().zip(hb) {
                let di = p - q;
                if di > 0.0 {
                    pos += di;
                } else {
                    neg -= di;
                }
                fam = fam.max(di.abs());
            }
            let dt = ta - tb;
            let sup = if exact_tail {
                if dt > 0.0 {
                    pos += dt;
                } else {
                    neg -= dt;
                }
                pos.max(neg)
            } else {
                pos.max(neg) + ta + tb
            };
            // Tail sets {x >= m} for every cut inside the head, plus the head end.
            let mut tail_diff = dt;
            fam = fam.max(tail_diff.abs());
            for (p, q) in ha.iter().zip(hb).rev() {
                tail_diff += p - q;
                fam = fam.max(tail_diff.abs());
            }
            exact = exact.max(sup / d);
            families = families.max(fam / d);
        }
    }
    (exact, families)
}

pub fn contraction_coefficients<S: RsccSystem + ?Sized>(
    sys: &S,
    config: &ContractionConfig,
) -> Result<ContractionReport> {
    if config.k_max == 0 {
        return domain("k_max must be at least 1");
    }
    let pts = states(sys, config.grid)?;
    if pts.len() < 2 {
        return domain("need at least two states");
    }
    let n = pts.len() as u64;
    let mut r_values = Vec::with_capacity(config.k_max);
    let mut r_bounded = Vec::with_capacity(config.k_max);
    for k in 1..=config.k_max {
        let enumerated = letter_cut(sys, k, config.word_cap).and_then(|(letters, lip)| {
            let words = (letters.len() as u64).saturating_pow(k as u32);
            config
                .budget
                .check(work(&[n, n, words]))
                .ok()
                .map(|()| (letters, lip))
        });
        match enumerated {
            Some((letters, lip)) => {
                let rest: Vec<f64> = std::iter::once(1.0)
                    .chain(r_values.iter().copied())
                    .collect();
                r_values.push(r_grid(sys, &pts, &letters, lip, &rest));
                r_bounded.push(false);
            }
            None if k == 1 => {
                let words = sys.event_count().unwrap_or(config.word_cap);
                return Err(NcfError::Budget {
                    required: work(&[n, n, words]),
                    cap: config.budget.cap,
                });
            }
            None => {
                let bound = (1..k)
                    .map(|j| r_values[j - 1] * r_values[k - j - 1])
                    .fold(f64::INFINITY, f64::min);
                r_values.push(bound);
                r_bounded.push(true);
            }
        }
    }
    config.budget.check(work(&[n, n, config.word_cap]))?;
    let (big_r, big_r_families) = big_r(sys, &pts, config.word_cap);
    let certified_at = r_values
        .iter()
        .position(|&r| r < 1.0 - MARGIN)
        .map(|i| i + 1);
    let certified = r_values[0].is_finite() && certified_at.is_some() && big_r.is_finite();
    Ok(ContractionReport {
        r_values,
        r_bounded,
        big_r,
        big_r_families,
        certified,
        certified_at,
        points: pts.len(),
    })
}
