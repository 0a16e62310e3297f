//! The transition operator `Uf(x) = Σ_{i>=N} V_{N,i}(x) f(N/(x+i))` on grid
//! functions, its Cesàro averages, and geometric-rate estimates.

use serde::Serialize;

use crate::budget::{work, Budget};
use crate::error::{check_unit, domain, NcfError, Result};
use crate::expansion::NcfParams;
use crate::rscc::NcfRscc;

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Last branch summed explicitly.
pub fn truncation_index(params: NcfParams) -> u64 {
    (100 * u64::from(params.n())).max(1000)
}

/// Samples at the nodes `x_j = j/M`, `j = 0..=M`, read between nodes by
/// linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return domain("a grid function needs M >= 2");
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("value at node {j} is not finite"));
        }
        Ok(Self { values })
    }

    pub fn from_fn(resolution: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let m = resolution as f64;
        Self::new((0..=resolution).map(|j| f(j as f64 / m)).collect())
    }

    pub fn constant(resolution: usize, c: f64) -> Result<Self> {
        Self::from_fn(resolution, |_| c)
    }

    pub fn resolution(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.resolution() as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.resolution();
        let p = x * m as f64;
        let c = (p.floor().max(0.0) as usize).min(m - 1);
        let t = p - c as f64;
        self.values[c] + t * (self.values[c + 1] - self.values[c])
    }

    fn zip(&self, other: &GridFunction, op: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        if self.resolution() != other.resolution() {
            return Err(NcfError::ResolutionMismatch {
                left: self.resolution(),
                right: other.resolution(),
            });
        }
        GridFunction::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| op(*a, *b))
                .collect(),
        )
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn shift(&self, c: f64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }

    /// `∫_0^{x_j} f dG_N` of the interpolant for every node.
    pub fn cumulative_gn(&self, params: NcfParams) -> Vec<f64> {
        let n = params.nf();
        let l = params.log_norm();
        let mut acc = Neumaier::default();
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        for j in 0..self.resolution() {
            let (a, b) = (self.node(j), self.node(j + 1));
            acc.add(cell_integral(self.values[j], self.values[j + 1], a, b, n) / l);
            out.push(acc.total());
        }
        out
    }

    /// `∫_0^x f dG_N` of the interpolant.
    pub fn integrate_gn_to(&self, params: NcfParams, x: f64) -> Result<f64> {
        check_unit(x, "x")?;
        let cum = self.cumulative_gn(params);
        Ok(self.integral_from_table(&cum, params, x))
    }

    pub(crate) fn integral_from_table(&self, cum: &[f64], params: NcfParams, x: f64) -> f64 {
        let m = self.resolution();
        let c = ((x * m as f64).floor() as usize).min(m - 1);
        let a = self.node(c);
        if x == a {
            return cum[c];
        }
        let fx = self.eval(x);
        cum[c] + cell_integral(self.values[c], fx, a, x, params.nf()) / params.log_norm()
    }

    /// `∫_0^1 f dG_N` of the interpolant.
    pub fn integrate_gn(&self, params: NcfParams) -> f64 {
        *self.cumulative_gn(params).last().expect("non-empty")
    }
}

/// `∫_a^b (fa + s (x − a)) / (x + N) dx` for the chord through `(a, fa)`, `(b, fb)`.
fn cell_integral(fa: f64, fb: f64, a: f64, b: f64, n: f64) -> f64 {
    let s = (fb - fa) / (b - a);
    (fa - s * (a + n)) * ((b - a) / (a + n)).ln_1p() + s * (b - a)
}

/// `(Uf)(x)` for a pointwise `f`. Past the truncation index the weights are
/// differences of `t = 1/(x+i)`, so the tail is a Riemann sum for
/// `(x+N) ∫_0^t f(Ns) ds` with `t = 1/(x+i_max+1)`. It is replaced by a
/// two-point Gauss rule whose nodes are shifted by `N t^2/6`, the endpoint
/// correction of that sum; the leftover is `O(f'' N^2 t^4)`.
pub fn transfer_at(params: NcfParams, f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let sys = NcfRscc::new(params);
    let n = params.nf();
    let i_max = truncation_index(params);
    let mut acc = Neumaier::default();
    for i in u64::from(params.n())..=i_max {
        let z = x + i as f64;
        acc.add((x + n) / (z * (z + 1.0)) * f(n / z));
    }
    let t = 1.0 / (x + (i_max + 1) as f64);
    let h = n * t;
    let shift = h * t / 6.0;
    let half = 0.5 * crate::rscc::RsccSystem::tail_mass(&sys, x, i_max + 1);
    let off = 0.5 / 3f64.sqrt();
    acc.add(half * f(h * (0.5 - off) + shift));
    acc.add(half * f(h * (0.5 + off) + shift));
    acc.total()
}

/// `max|f| · (x+N)/(x+i_max+1)` at `x = 1`, bounding the folded tail.
pub fn truncation_bound(f: &GridFunction, params: NcfParams) -> f64 {
    let n = params.nf();
    f.sup_norm() * (1.0 + n) / (2.0 + truncation_index(params) as f64)
}

pub fn apply_transfer(f: &GridFunction, params: NcfParams) -> Result<GridFunction> {
    GridFunction::new(
        (0..=f.resolution())
            .map(|j| transfer_at(params, |y| f.eval(y), f.node(j)))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzNormEstimate {
    pub sup_part: f64,
    pub slope_part: f64,
    pub total: f64,
}

/// `sup|f| + sup |Δf|/Δx` over nodes; a lower bound for `‖f‖_L`.
pub fn lipschitz_norm(f: &GridFunction) -> LipschitzNormEstimate {
    let sup_part = f.sup_norm();
    let m = f.resolution() as f64;
    let slope_part = f
        .values()
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() * m)
        .fold(0.0, f64::max);
    LipschitzNormEstimate {
        sup_part,
        slope_part,
        total: sup_part + slope_part,
    }
}

/// `U_n f = (1/n) Σ_{k=1..n} U^k f`.
pub fn cesaro_operator(f: &GridFunction, n: usize, sys: &NcfRscc) -> Result<GridFunction> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let params = sys.params();
    let mut g = f.clone();
    let mut sum = GridFunction::constant(f.resolution(), 0.0)?;
    for _ in 0..n {
        g = apply_transfer(&g, params)?;
        sum = sum.add(&g)?;
    }
    Ok(sum.scale(1.0 / n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEstimate {
    pub q_hat: f64,
    pub k_hat: f64,
    /// `log e_n − (log k + n log q)` over the fit window.
    pub residuals: Vec<f64>,
    pub window: Vec<usize>,
    /// `sup |U^n f − c_f|` for `n = 0..=n_max`.
    pub errors: Vec<f64>,
    /// Grid `‖U^n f − c_f‖_L` for `n = 0..=n_max`.
    pub lip_errors: Vec<f64>,
    /// Limit of the errors under the discretized operator.
    pub floor: f64,
}

/// Least-squares fit of `log e_n = log k + n log q` over `window`.
/// Returns `(q, k, residuals)`.
pub(crate) fn fit_geometric(errors: &[f64], window: &[usize]) -> Result<(f64, f64, Vec<f64>)> {
    if window.len() < 3 {
        return Err(NcfError::Fit(format!(
            "only {} admissible points above the error floor",
            window.len()
        )));
    }
    let m = window.len() as f64;
    let xs: Vec<f64> = window.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = window.iter().map(|&n| errors[n].ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let residuals = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (icpt + slope * x))
        .collect();
    Ok((slope.exp(), icpt.exp(), residuals))
}

/// Admissible `n >= 1`: contiguous from 1 while `e_n` stays above
/// `100 · max(eps, floor)`.
pub(crate) fn fit_window(errors: &[f64], floor: f64, scale: f64) -> Vec<usize> {
    let cut = 100.0 * (f64::EPSILON * scale).max(floor);
    (1..errors.len()).take_while(|&n| errors[n] > cut).collect()
}

/// Iterates the discretized operator until the oscillation is below
/// `1e−14` or `extra` more steps have run.
pub(crate) fn iterate_to_limit(
    mut g: GridFunction,
    params: NcfParams,
    extra: usize,
) -> Result<GridFunction> {
    for _ in 0..extra {
        if g.oscillation() < 1e-14 {
            break;
        }
        g = apply_transfer(&g, params)?;
    }
    Ok(g)
}

pub fn estimate_gap(
    f: &GridFunction,
    params: NcfParams,
    n_max: usize,
    budget: &Budget,
) -> Result<GapEstimate> {
    if n_max < 5 {
        return domain("n_max must be at least 5");
    }
    if f.oscillation() == 0.0 {
        return domain("gap estimation needs a non-constant function");
    }
    let m = f.resolution() as u64;
    budget.check(work(&[n_max as u64 + 400, m + 1, truncation_index(params)]))?;
    let c = f.integrate_gn(params);
    let mut g = f.clone();
    let mut errors = Vec::with_capacity(n_max + 1);
    let mut lip_errors = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            g = apply_transfer(&g, params)?;
        }
        let d = g.shift(-c);
        errors.push(d.sup_norm());
        lip_errors.push(lipschitz_norm(&d).total);
    }
    let limit = iterate_to_limit(g, params, 400)?;
    let floor = limit.shift(-c).sup_norm();
    let window = fit_window(&errors, floor, f.sup_norm().max(c.abs()));
    let (q_hat, k_hat, residuals) = fit_geometric(&errors, &window)?;
    Ok(GapEstimate {
        q_hat,
        k_hat,
        residuals,
        window,
        errors,
        lip_errors,
        floor,
    })
}
