//! Random systems with complete connections over a real state space.
//!
//! A system is a state space `W ⊂ ℝ`, a countable event set `X` enumerated
//! as `first_event, first_event + 1, ...`, a transition `u(w, x)` and a
//! place-dependent probability `P(w, x)`. Events past an enumeration cut-off
//! are handled through the exact tail mass `Σ_{x >= m} P(w, x)`.

mod contraction;
mod ergodic;
mod kernel;
mod mealy;
mod ncf;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use contraction::{contraction_coefficients, ContractionConfig, ContractionReport};
pub use ergodic::{
    ergodicity_curve, limit_path_law, regularity_witness, shifted_path_probability,
    shifted_path_probability_mc, PathProbe, RegularityReport, StartWitness,
};
pub use kernel::{
    q_cesaro_grid, q_cesaro_mc, q_step_grid, q_step_mc, q_steps_grid, q_steps_mc, GridKernel,
    IntervalUnion, KernelEstimate, KernelRepr, McEstimate,
};
pub use mealy::{mealy_dot_export, mul_exact, FiniteChain, Matrix, MealySystem};
pub use ncf::{brute_force_kernel, kernel_invariance, q_kernel_interval, NcfRscc};

pub trait RsccSystem {
    /// Closed interval `[lo, hi]` containing the state space.
    fn state_bounds(&self) -> (f64, f64);

    /// The states, when the state space is finite.
    fn finite_states(&self) -> Option<Vec<f64>> {
        None
    }

    fn first_event(&self) -> u64;

    /// Number of events, or `None` for an infinite event set.
    fn event_count(&self) -> Option<u64>;

    /// `u(w, x)`.
    fn transition(&self, w: f64, x: u64) -> f64;

    /// `P(w, x)`.
    fn probability(&self, w: f64, x: u64) -> f64;

    /// `Σ_{x >= m} P(w, x)`.
    fn tail_mass(&self, w: f64, m: u64) -> f64;

    /// Bound on `sup_w |∂u(w, x)/∂w|`; must be non-increasing in `x` for
    /// infinite event sets.
    fn transition_lipschitz(&self, x: u64) -> f64;

    /// An event index from which `P(·, x)` is non-decreasing in `w` for all
    /// later events, if known.
    fn monotone_from(&self) -> Option<u64> {
        None
    }

    /// Event drawn from `P(w, ·)` by inversion of `v ∈ (0, 1]`.
    fn sample_event(&self, w: f64, v: f64) -> u64 {
        let mut x = self.first_event();
        loop {
            if self.tail_mass(w, x + 1) < v {
                return x;
            }
            if let Some(c) = self.event_count() {
                if x + 1 >= self.first_event() + c {
                    return x;
                }
            }
            x += 1;
        }
    }

    /// One past the last event, or `None` for infinite `X`.
    fn event_end(&self) -> Option<u64> {
        self.event_count().map(|c| self.first_event() + c)
    }
}

/// A finite word `x_1 ... x_r` over the event set; concatenation is the
/// product of the free semigroup, the empty word its unit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventWord(Vec<u64>);

impl EventWord {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn letters(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &EventWord) -> EventWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        EventWord(v)
    }
}

impl From<Vec<u64>> for EventWord {
    fn from(v: Vec<u64>) -> Self {
        Self(v)
    }
}

/// A set `A ⊂ X^r` of words of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WordSet {
    Words(Vec<EventWord>),
    /// The single-letter tail `{x : x >= m}`.
    Tail(u64),
}

impl WordSet {
    pub fn singleton(x: u64) -> Self {
        WordSet::Words(vec![EventWord(vec![x])])
    }

    pub fn word_len(&self) -> Result<usize> {
        match self {
            WordSet::Tail(_) => Ok(1),
            WordSet::Words(ws) => {
                let r = ws.first().map(EventWord::len).unwrap_or(0);
                if r == 0 || ws.iter().any(|w| w.len() != r) {
                    return domain("word set must hold non-empty words of equal length");
                }
                Ok(r)
            }
        }
    }
}

/// The right action `w · x_1 ... x_r = u(...u(u(w, x_1), x_2)..., x_r)`.
pub fn act<S: RsccSystem + ?Sized>(sys: &S, w: f64, word: &EventWord) -> f64 {
    word.0.iter().fold(w, |s, &x| sys.transition(s, x))
}

/// `P_r(w, x_1...x_r) = P(w, x_1) P(w x_1, x_2) ... P(w x_1...x_{r-1}, x_r)`.
pub fn path_probability<S: RsccSystem + ?Sized>(sys: &S, w: f64, word: &EventWord) -> Result<f64> {
    if word.is_empty() {
        return domain("path probability needs a non-empty word");
    }
    let mut state = w;
    let mut p = 1.0;
    for &x in &word.0 {
        p *= sys.probability(state, x);
        if p == 0.0 {
            return Ok(0.0);
        }
        state = sys.transition(state, x);
    }
    Ok(p)
}

/// `P_r(w, A)`.
pub fn path_probability_set<S: RsccSystem + ?Sized>(sys: &S, w: f64, set: &WordSet) -> Result<f64> {
    set.word_len()?;
    match set {
        WordSet::Tail(m) => Ok(sys.tail_mass(w, *m)),
        WordSet::Words(ws) => ws.iter().map(|word| path_probability(sys, w, word)).sum(),
    }
}

/// `Σ_x P(w, x)` over the first `cut` events plus the tail mass.
pub fn total_mass<S: RsccSystem + ?Sized>(sys: &S, w: f64, cut: u64) -> f64 {
    let first = sys.first_event();
    let end = match sys.event_end() {
        Some(e) => e.min(first + cut),
        None => first + cut,
    };
    let head: f64 = (first..end).map(|x| sys.probability(w, x)).sum();
    head + sys.tail_mass(w, end)
}

/// All words of length `r` over the finite event set.
pub fn all_words<S: RsccSystem + ?Sized>(sys: &S, r: usize) -> Result<Vec<EventWord>> {
    let Some(end) = sys.event_end() else {
        return domain("cannot enumerate words over an infinite event set");
    };
    let letters: Vec<u64> = (sys.first_event()..end).collect();
    let mut words = vec![EventWord::empty()];
    for _ in 0..r {
        words = words
            .into_iter()
            .flat_map(|w| {
                letters.iter().map(move |&x| {
                    let mut v = w.0.clone();
                    v.push(x);
                    EventWord(v)
                })
            })
            .collect();
    }
    Ok(words)
}
