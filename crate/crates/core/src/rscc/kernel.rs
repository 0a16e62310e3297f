//! Multi-step kernels `Q^(k)` and Cesàro kernels `Q_n` on interval state
//! spaces, by grid recursion and by seeded path simulation.

use serde::Serialize;

use crate::budget::{work, Budget};
use crate::error::{check_unit, domain, Result};
use crate::rng::{MeanAcc, SeedStream};

use super::mealy::{FiniteChain, Matrix};
use super::ncf::{kernel_below, NcfRscc};
use super::RsccSystem;

/// A finite union of disjoint half-open intervals `[a, b) ⊂ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    parts: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn new(mut parts: Vec<(f64, f64)>) -> Result<Self> {
        if parts.is_empty() {
            return domain("empty interval union");
        }
        parts.sort_by(|p, q| p.0.total_cmp(&q.0));
        for &(a, b) in &parts {
            check_unit(a, "a")?;
            check_unit(b, "b")?;
            if a >= b {
                return domain(format!("[{a}, {b}) is empty"));
            }
        }
        if parts.windows(2).any(|w| w[1].0 < w[0].1) {
            return domain("intervals overlap");
        }
        Ok(Self { parts })
    }

    /// `[0, u)`.
    pub fn below(u: f64) -> Result<Self> {
        Self::new(vec![(0.0, u)])
    }

    pub fn contains(&self, y: f64) -> bool {
        self.parts.iter().any(|&(a, b)| y >= a && y < b)
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    /// `Q(x, B)` in closed form.
    pub fn kernel(&self, sys: &NcfRscc, x: f64) -> f64 {
        self.parts
            .iter()
            .map(|&(a, b)| kernel_below(sys, x, b) - kernel_below(sys, x, a))
            .sum()
    }
}

/// One-step kernel discretized on `M` cells `[t_c, t_{c+1})` (the last one
/// closed at 1), with masses from closed-form interval kernels.
#[derive(Debug, Clone)]
pub struct GridKernel {
    sys: NcfRscc,
    resolution: usize,
    rows: Vec<Vec<f64>>,
}

impl GridKernel {
    pub fn new(sys: NcfRscc, resolution: usize, budget: &Budget) -> Result<Self> {
        if resolution < 2 {
            return domain("grid resolution must be at least 2");
        }
        let m = resolution as u64;
        budget.check(work(&[m + 1, m]))?;
        let mut k = Self {
            sys,
            resolution,
            rows: Vec::new(),
        };
        k.rows = (0..=resolution).map(|j| k.cell_masses(k.node(j))).collect();
        Ok(k)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.resolution as f64
    }

    /// `Q(x, cell_c)` for every cell.
    pub fn cell_masses(&self, x: f64) -> Vec<f64> {
        let m = self.resolution;
        let cum: Vec<f64> = (0..m)
            .map(|c| kernel_below(&self.sys, x, self.node(c)))
            .collect();
        let mut out: Vec<f64> = cum.windows(2).map(|w| w[1] - w[0]).collect();
        out.push(1.0 - cum[m - 1]);
        out
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `∫ g dQ_x` with `g` given at the nodes; each cell contributes its mass
    /// times the mean of `g` at the cell's end nodes.
    pub fn integrate_at(&self, masses: &[f64], g: &[f64]) -> f64 {
        masses
            .iter()
            .enumerate()
            .map(|(c, &w)| w * 0.5 * (g[c] + g[c + 1]))
            .sum()
    }

    pub(crate) fn step(&self, g: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| self.integrate_at(row, g))
            .collect()
    }
}

/// `Q^(k)(x, B)` for `k = 1..=k_max` by the grid recursion
/// `Q^(k)(x, B) = ∫ Q^(k-1)(y, B) dQ_x(y)`.
pub fn q_steps_grid(
    sys: &NcfRscc,
    k_max: usize,
    x: f64,
    target: &IntervalUnion,
    resolution: usize,
    budget: &Budget,
) -> Result<Vec<f64>> {
    check_unit(x, "x")?;
    if k_max == 0 {
        return domain("k must be at least 1");
    }
    let m = resolution as u64;
    budget.check(work(&[k_max as u64, m + 1, m]))?;
    let kern = GridKernel::new(*sys, resolution, budget)?;
    let at_source = kern.cell_masses(x);
    let mut g: Vec<f64> = (0..=resolution)
        .map(|j| target.kernel(sys, kern.node(j)))
        .collect();
    let mut out = vec![target.kernel(sys, x)];
    for _ in 1..k_max {
        out.push(kern.integrate_at(&at_source, &g));
        g = kern.step(&g);
    }
    Ok(out)
}

pub fn q_step_grid(
    sys: &NcfRscc,
    k: usize,
    x: f64,
    target: &IntervalUnion,
    resolution: usize,
    budget: &Budget,
) -> Result<f64> {
    Ok(*q_steps_grid(sys, k, x, target, resolution, budget)?
        .last()
        .expect("k >= 1"))
}

/// `Q_n(x, B) = (1/n) Σ_{k=1..n} Q^(k)(x, B)` on the grid.
pub fn q_cesaro_grid(
    sys: &NcfRscc,
    n: usize,
    x: f64,
    target: &IntervalUnion,
    resolution: usize,
    budget: &Budget,
) -> Result<f64> {
    let steps = q_steps_grid(sys, n, x, target, resolution, budget)?;
    Ok(steps.iter().sum::<f64>() / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl From<MeanAcc> for McEstimate {
    fn from(acc: MeanAcc) -> Self {
        Self {
            mean: acc.mean(),
            std_error: acc.std_error(),
            samples: acc.count,
        }
    }
}

fn check_paths(paths: u64, steps: usize, budget: &Budget) -> Result<()> {
    if paths < 2 || steps == 0 {
        return domain("need at least 2 paths and 1 step");
    }
    budget.check(work(&[paths, steps as u64]))
}

/// Simulates `paths` chains from `x` and reports `Q^(k)(x, B)` for
/// `k = 1..=k_max` from the same paths. Stream `stream` of `seed` is used.
#[allow(clippy::too_many_arguments)]
pub fn q_steps_mc<S: RsccSystem + ?Sized>(
    sys: &S,
    k_max: usize,
    x: f64,
    target: &dyn Fn(f64) -> bool,
    paths: u64,
    seed: SeedStream,
    stream: u64,
    budget: &Budget,
) -> Result<Vec<McEstimate>> {
    check_paths(paths, k_max, budget)?;
    let mut src = seed.stream(stream);
    let mut acc = vec![MeanAcc::default(); k_max];
    for _ in 0..paths {
        let mut w = x;
        for a in acc.iter_mut() {
            let e = sys.sample_event(w, src.next_open0());
            w = sys.transition(w, e);
            a.push(if target(w) { 1.0 } else { 0.0 });
        }
    }
    Ok(acc.into_iter().map(McEstimate::from).collect())
}

#[allow(clippy::too_many_arguments)]
pub fn q_step_mc<S: RsccSystem + ?Sized>(
    sys: &S,
    k: usize,
    x: f64,
    target: &dyn Fn(f64) -> bool,
    paths: u64,
    seed: SeedStream,
    stream: u64,
    budget: &Budget,
) -> Result<McEstimate> {
    Ok(*q_steps_mc(sys, k, x, target, paths, seed, stream, budget)?
        .last()
        .expect("k >= 1"))
}

/// Monte Carlo `Q_n(x, B)`: per-path averages of the indicator over the
/// first `n` steps.
#[allow(clippy::too_many_arguments)]
pub fn q_cesaro_mc<S: RsccSystem + ?Sized>(
    sys: &S,
    n: usize,
    x: f64,
    target: &dyn Fn(f64) -> bool,
    paths: u64,
    seed: SeedStream,
    stream: u64,
    budget: &Budget,
) -> Result<McEstimate> {
    check_paths(paths, n, budget)?;
    let mut src = seed.stream(stream);
    let mut acc = MeanAcc::default();
    for _ in 0..paths {
        let mut w = x;
        let mut hits = 0u64;
        for _ in 0..n {
            let e = sys.sample_event(w, src.next_open0());
            w = sys.transition(w, e);
            hits += u64::from(target(w));
        }
        acc.push(hits as f64 / n as f64);
    }
    Ok(acc.into())
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelRepr {
    /// `Q^(k)` over a finite state space.
    Matrix(Matrix),
    /// Row `j` is the law of `Q^(k)(t_j, ·)` over the `M` grid cells.
    Grid {
        resolution: usize,
        rows: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate {
    pub step: usize,
    pub repr: KernelRepr,
}

impl KernelEstimate {
    pub fn finite(chain: &FiniteChain, k: usize) -> Result<Self> {
        if k == 0 {
            return domain("k must be at least 1");
        }
        Ok(Self {
            step: k,
            repr: KernelRepr::Matrix(chain.step(k)),
        })
    }

    /// Full discretized `Q^(k)`; costs `O(k M^3)`, meant for small grids.
    pub fn grid(sys: &NcfRscc, k: usize, resolution: usize, budget: &Budget) -> Result<Self> {
        if k == 0 {
            return domain("k must be at least 1");
        }
        let m = resolution as u64;
        budget.check(work(&[k as u64, m + 1, m, m]))?;
        let kern = GridKernel::new(*sys, resolution, budget)?;
        let mut rows = kern.rows().to_vec();
        for _ in 1..k {
            // Column c of the previous step, as a function on the nodes.
            let cols: Vec<Vec<f64>> = (0..resolution)
                .map(|c| rows.iter().map(|r| r[c]).collect())
                .collect();
            rows = kern
                .rows()
                .iter()
                .map(|one| cols.iter().map(|g| kern.integrate_at(one, g)).collect())
                .collect();
        }
        Ok(Self {
            step: k,
            repr: KernelRepr::Grid { resolution, rows },
        })
    }

    /// Largest deviation of a row sum from 1.
    pub fn max_row_sum_error(&self) -> f64 {
        let rows = match &self.repr {
            KernelRepr::Matrix(m) => m.rows(),
            KernelRepr::Grid { rows, .. } => rows.clone(),
        };
        rows.iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}
