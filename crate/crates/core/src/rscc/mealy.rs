//! Finite systems: the two-state Mealy machine and exact chain algebra.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};

use crate::error::{domain, Result};
use crate::expansion::Rational;

use super::RsccSystem;

/// Two states and two inputs with `u(i, j) = j` and
/// `P(1,1) = α, P(1,2) = 1-α, P(2,1) = β, P(2,2) = 1-β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MealySystem {
    alpha: f64,
    beta: f64,
}

impl MealySystem {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..=1.0).contains(&v) {
                return domain(format!("{name} = {v} is not a probability"));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn state_index(w: f64) -> usize {
        if w < 1.5 {
            0
        } else {
            1
        }
    }

    /// The `2×2` kernel in exact rationals (the float inputs are exact binary
    /// fractions, so nothing is lost).
    pub fn kernel_exact(&self) -> [[Rational; 2]; 2] {
        let a = BigRational::from_f64(self.alpha).expect("finite");
        let b = BigRational::from_f64(self.beta).expect("finite");
        let one = Rational::one();
        [[a.clone(), &one - &a], [b.clone(), &one - &b]]
    }

    /// `Q^(k)` in exact rationals via `Q^(k) = Q Q^(k-1)`.
    pub fn kernel_power_exact(&self, k: usize) -> [[Rational; 2]; 2] {
        let q = self.kernel_exact();
        let mut acc = identity_exact();
        for _ in 0..k {
            acc = mul_exact(&q, &acc);
        }
        acc
    }

    /// `(β/(1-α+β), (1-α)/(1-α+β))`; requires `1 - α + β > 0`.
    pub fn stationary(&self) -> Result<[f64; 2]> {
        let d = 1.0 - self.alpha + self.beta;
        if d <= 0.0 {
            return domain("stationary vector undefined for alpha = 1, beta = 0");
        }
        Ok([self.beta / d, (1.0 - self.alpha) / d])
    }
}

fn identity_exact() -> [[Rational; 2]; 2] {
    [
        [Rational::one(), Rational::zero()],
        [Rational::zero(), Rational::one()],
    ]
}

/// Product of two exact `2×2` matrices.
pub fn mul_exact(a: &[[Rational; 2]; 2], b: &[[Rational; 2]; 2]) -> [[Rational; 2]; 2] {
    let cell = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
    [[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]]
}

impl RsccSystem for MealySystem {
    fn state_bounds(&self) -> (f64, f64) {
        (1.0, 2.0)
    }

    fn finite_states(&self) -> Option<Vec<f64>> {
        Some(vec![1.0, 2.0])
    }

    fn first_event(&self) -> u64 {
        1
    }

    fn event_count(&self) -> Option<u64> {
        Some(2)
    }

    fn transition(&self, _w: f64, x: u64) -> f64 {
        x as f64
    }

    fn probability(&self, w: f64, x: u64) -> f64 {
        let p1 = [self.alpha, self.beta][Self::state_index(w)];
        match x {
            1 => p1,
            2 => 1.0 - p1,
            _ => 0.0,
        }
    }

    fn tail_mass(&self, w: f64, m: u64) -> f64 {
        match m {
            0 | 1 => 1.0,
            2 => self.probability(w, 2),
            _ => 0.0,
        }
    }

    fn transition_lipschitz(&self, _x: u64) -> f64 {
        0.0
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return domain("matrix rows must be square");
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The Markov chain on a finite state space, with kernel
/// `Q(w, w') = P(w, {x : u(w, x) = w'})`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    states: Vec<f64>,
    q: Matrix,
}

impl FiniteChain {
    pub fn from_system<S: RsccSystem + ?Sized>(sys: &S) -> Result<Self> {
        let (Some(states), Some(end)) = (sys.finite_states(), sys.event_end()) else {
            return domain("finite chain needs finite state and event sets");
        };
        let mut q = Matrix::zeros(states.len());
        for (i, &w) in states.iter().enumerate() {
            for x in sys.first_event()..end {
                let target = sys.transition(w, x);
                let Some(j) = states.iter().position(|&s| s == target) else {
                    return domain(format!("u({w}, {x}) = {target} is not a state"));
                };
                q.add_to(i, j, sys.probability(w, x));
            }
        }
        Ok(Self { states, q })
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn state_index(&self, w: f64) -> Result<usize> {
        self.states
            .iter()
            .position(|&s| s == w)
            .map_or_else(|| domain(format!("{w} is not a state")), Ok)
    }

    pub fn kernel(&self) -> &Matrix {
        &self.q
    }

    /// `Q^(k)`, built as `Q Q^(k-1)`; `Q^(0)` is the identity.
    pub fn step(&self, k: usize) -> Matrix {
        let mut acc = Matrix::identity(self.q.dim());
        for _ in 0..k {
            acc = self.q.mul(&acc);
        }
        acc
    }

    /// `Q^(k)(w, B)` for a set of target state indices.
    pub fn q_step(&self, k: usize, source: usize, target: &[usize]) -> f64 {
        let m = self.step(k);
        target.iter().map(|&j| m.get(source, j)).sum()
    }

    /// `Q_n = (1/n) Σ_{k=1..n} Q^(k)`, by binary splitting so that very large
    /// `n` costs `O(log n)` products.
    pub fn cesaro(&self, n: u64) -> Result<Matrix> {
        if n == 0 {
            return domain("Cesàro average needs n >= 1");
        }
        let (sum, _) = self.power_sum(n);
        Ok(sum.scale(1.0 / n as f64))
    }

    // (Σ_{k=1..n} Q^k, Q^n)
    fn power_sum(&self, n: u64) -> (Matrix, Matrix) {
        let d = self.q.dim();
        if n == 0 {
            return (Matrix::zeros(d), Matrix::identity(d));
        }
        if n.is_multiple_of(2) {
            let (s, p) = self.power_sum(n / 2);
            let s2 = s.add(&p.mul(&s));
            (s2, stochastic(p.mul(&p)))
        } else {
            let (s, p) = self.power_sum(n - 1);
            let p1 = stochastic(p.mul(&self.q));
            (s.add(&p1), p1)
        }
    }

    /// Solves `πQ = π`, `Σπ = 1` by Gaussian elimination.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let d = self.q.dim();
        // Rows: (Q^T - I) with the last equation replaced by normalization.
        let mut a: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let mut row: Vec<f64> = (0..d).map(|j| self.q.get(j, i)).collect();
                row[i] -= 1.0;
                row.push(0.0);
                row
            })
            .collect();
        a[d - 1] = vec![1.0; d + 1];
        for col in 0..d {
            let piv = (col..d)
                .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
                .expect("non-empty");
            if a[piv][col].abs() < 1e-14 {
                return domain("stationary distribution is not unique");
            }
            a.swap(col, piv);
            for r in 0..d {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    let pivot = a[col].clone();
                    for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                        *x -= f * p;
                    }
                }
            }
        }
        Ok((0..d).map(|i| a[i][d] / a[i][i]).collect())
    }
}

// Rescales rows to sum to one. Without this, row-sum drift doubles at every
// squaring and reaches ~n·eps by Q^n.
fn stochastic(mut m: Matrix) -> Matrix {
    let d = m.dim();
    for i in 0..d {
        let row = &mut m.data[i * d..(i + 1) * d];
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    m
}

fn fmt_prob(p: f64) -> String {
    let s = format!("{p:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// GraphViz transition diagram: vertices are states, and each edge `(i, k, j)`
/// with `u(i, k) = j` is labelled `k/P(i,k)`.
pub fn mealy_dot_export(m: &MealySystem) -> String {
    let mut out = String::new();
    out.push_str("digraph mealy {\n");
    out.push_str("  rankdir=LR;\n");
    for s in [1u64, 2] {
        let _ = writeln!(out, "  {s} [shape=circle];");
    }
    for i in [1u64, 2] {
        for k in [1u64, 2] {
            let w = i as f64;
            let j = m.transition(w, k) as u64;
            let _ = writeln!(
                out,
                "  {i} -> {j} [label=\"{k}/{}\"];",
                fmt_prob(m.probability(w, k))
            );
        }
    }
    out.push_str("}\n");
    out
}
