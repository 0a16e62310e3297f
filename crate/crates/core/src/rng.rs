//! Seedable, splittable uniform sources for the Monte Carlo routines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A root seed from which independent ChaCha streams are derived.
///
/// Stream `k` of seed `s` is always the same sequence, so estimators that
/// assign one stream per cell are reproducible regardless of evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, id: u64) -> Uniform {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        Uniform { rng }
    }
}

/// Uniform variates on [0, 1) and (0, 1].
#[derive(Debug, Clone)]
pub struct Uniform {
    rng: ChaCha8Rng,
}

impl Uniform {
    /// U in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// U in (0, 1].
    pub fn next_open0(&mut self) -> f64 {
        1.0 - self.next_f64()
    }
}

/// Running mean of Bernoulli/real observations; merges associatively.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAcc {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAcc {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(mut self, other: MeanAcc) -> MeanAcc {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum / self.count as f64
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        let n = self.count as f64;
        let m = self.mean();
        let var = ((self.sum_sq / n) - m * m).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}
