//! Propagation of an initial measure `μ` under `T_N`, compared with the
//! limit law `F(x) = log((x+N)/N) / log((N+1)/N)`.
//!
//! The operator route carries `f_0 = dμ/dG_N = L (x+N) h(x)`, with
//! `L = log((N+1)/N)` and `h = dμ/dλ`, and uses
//! `μ(T_N^n < x) = ∫_0^x U^n f_0 dG_N`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::budget::{work, Budget};
use crate::error::{check_unit, domain, NcfError, Result};
use crate::expansion::{gauss_map, NcfParams};
use crate::measure::{gn_cdf, DensityFunction, GaussMeasure};
use crate::operator::{
    apply_transfer, fit_geometric, fit_window, iterate_to_limit, transfer_at, truncation_index,
    GridFunction,
};
use crate::quad;
use crate::rng::{MeanAcc, SeedStream, Uniform};

/// `F(x) = G_N([0, x])`.
pub fn limit_cdf(x: f64, params: NcfParams) -> Result<f64> {
    gn_cdf(x, params)
}

type InverseCdf = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An absolutely continuous initial law with an inverse-CDF sampler.
#[derive(Clone)]
pub struct InitialMeasure {
    name: String,
    density: DensityFunction,
    lipschitz: bool,
    inverse_cdf: InverseCdf,
}

impl fmt::Debug for InitialMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialMeasure")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

const TABLE_SIZE: usize = 4096;

impl InitialMeasure {
    /// Uniform law on `[0, 1]`.
    pub fn lebesgue() -> Self {
        Self {
            name: "lebesgue".into(),
            density: DensityFunction::new(|_| 1.0, Some(0.0)).expect("unit density"),
            lipschitz: true,
            inverse_cdf: Arc::new(|u| u),
        }
    }

    pub fn gauss(params: NcfParams) -> Self {
        let g = GaussMeasure::new(params);
        let n = params.nf();
        let l = params.log_norm();
        Self {
            name: "gauss".into(),
            density: DensityFunction::new(move |x| g.density(x), Some(1.0 / (n * n * l)))
                .expect("G_N density"),
            lipschitz: true,
            inverse_cdf: Arc::new(move |u| g.inverse_cdf(u).unwrap_or(1.0)),
        }
    }

    /// Density `(1 + c x)/(1 + c/2)` for `c > −1`.
    pub fn linear(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > -1.0) {
            return domain(format!("linear density needs c > -1, got {c}"));
        }
        let z = 1.0 + 0.5 * c;
        Ok(Self {
            name: format!("linear({c})"),
            density: DensityFunction::new(move |x| (1.0 + c * x) / z, Some(c.abs() / z))?,
            lipschitz: true,
            // Root of x + c x^2/2 = u z, written to avoid cancellation.
            inverse_cdf: Arc::new(move |u| 2.0 * u * z / (1.0 + (1.0 + 2.0 * c * u * z).sqrt())),
        })
    }

    /// Density `1/((x+N+1) log((N+2)/(N+1)))`.
    pub fn shifted_gauss(params: NcfParams) -> Self {
        let s = params.nf() + 1.0;
        let l = (1.0 / s).ln_1p();
        Self {
            name: "shifted".into(),
            density: DensityFunction::new(move |x| 1.0 / ((x + s) * l), Some(1.0 / (s * s * l)))
                .expect("shifted density"),
            lipschitz: true,
            inverse_cdf: Arc::new(move |u| s * (u * l).exp_m1()),
        }
    }

    /// Any checked density; sampled through a tabulated inverse CDF.
    pub fn custom(
        name: impl Into<String>,
        density: DensityFunction,
        lipschitz: bool,
    ) -> Result<Self> {
        let mut cdf = Vec::with_capacity(TABLE_SIZE + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for j in 0..TABLE_SIZE {
            let (a, b) = (
                j as f64 / TABLE_SIZE as f64,
                (j + 1) as f64 / TABLE_SIZE as f64,
            );
            acc += quad::integrate(|x| density.eval(x), a, b, 1e-14)?;
            cdf.push(acc);
        }
        let total = acc;
        let inverse_cdf: InverseCdf = Arc::new(move |u| {
            let t = u * total;
            let j = cdf.partition_point(|&c| c <= t).clamp(1, TABLE_SIZE);
            let (c0, c1) = (cdf[j - 1], cdf[j]);
            let frac = if c1 > c0 { (t - c0) / (c1 - c0) } else { 0.0 };
            ((j - 1) as f64 + frac) / TABLE_SIZE as f64
        });
        Ok(Self {
            name: name.into(),
            density,
            lipschitz,
            inverse_cdf,
        })
    }

    /// `lebesgue`, `gauss`, `shifted`, or `linear` (density `1 + x/2`).
    pub fn from_name(name: &str, params: NcfParams) -> Result<Self> {
        match name {
            "lebesgue" => Ok(Self::lebesgue()),
            "gauss" => Ok(Self::gauss(params)),
            "shifted" => Ok(Self::shifted_gauss(params)),
            "linear" => Self::linear(0.5),
            other => domain(format!("unknown initial measure '{other}'")),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn density(&self) -> &DensityFunction {
        &self.density
    }

    pub fn is_lipschitz(&self) -> bool {
        self.lipschitz
    }

    pub fn sample(&self, source: &mut Uniform) -> f64 {
        (self.inverse_cdf)(source.next_f64()).clamp(0.0, 1.0)
    }

    /// `f_0(x) = L (x+N) h(x)`.
    pub fn f0(&self, params: NcfParams, x: f64) -> f64 {
        params.log_norm() * (x + params.nf()) * self.density.eval(x)
    }

    pub fn f0_grid(&self, params: NcfParams, resolution: usize) -> Result<GridFunction> {
        GridFunction::from_fn(resolution, |x| self.f0(params, x))
    }
}

/// `h(x) = f_0(x) / (L (x+N))`.
pub fn density_from_f0(params: NcfParams, f0: f64, x: f64) -> f64 {
    f0 / (params.log_norm() * (x + params.nf()))
}

/// Density of `μ ∘ T_N^{-1}`: `U f_0` converted back to a density, with
/// `U` applied pointwise to the exact `f_0`.
pub fn pushforward_density(mu: &InitialMeasure, params: NcfParams) -> Result<DensityFunction> {
    let m = mu.clone();
    DensityFunction::new(
        move |x| density_from_f0(params, transfer_at(params, |y| m.f0(params, y), x), x),
        None,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Operator { resolution: usize },
    MonteCarlo { samples: u64, seed: u64 },
}

/// `μ(T_N^n < x)`.
pub fn distribution_at(
    mu: &InitialMeasure,
    n: usize,
    x: f64,
    params: NcfParams,
    method: Method,
    budget: &Budget,
) -> Result<f64> {
    check_unit(x, "x")?;
    match method {
        Method::Operator { resolution } => {
            budget.check(work(&[
                n as u64,
                resolution as u64 + 1,
                truncation_index(params),
            ]))?;
            let mut g = mu.f0_grid(params, resolution)?;
            for _ in 0..n {
                g = apply_transfer(&g, params)?;
            }
            g.integrate_gn_to(params, x)
        }
        Method::MonteCarlo { samples, seed } => {
            Ok(monte_carlo(mu, n, x, params, samples, SeedStream::new(seed), 0, budget)?.mean())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn monte_carlo(
    mu: &InitialMeasure,
    n: usize,
    x: f64,
    params: NcfParams,
    samples: u64,
    seed: SeedStream,
    stream: u64,
    budget: &Budget,
) -> Result<MeanAcc> {
    if samples < 2 {
        return domain("need at least 2 samples");
    }
    budget.check(work(&[samples, n as u64 + 1]))?;
    let mut src = seed.stream(stream);
    let mut acc = MeanAcc::default();
    for _ in 0..samples {
        let mut y = mu.sample(&mut src);
        for _ in 0..n {
            y = gauss_map(y, params)?;
        }
        acc.push(if y < x { 1.0 } else { 0.0 });
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GkConfig {
    pub n_max: usize,
    pub x_points: usize,
    pub resolution: usize,
    pub mc_samples: u64,
    pub seed: u64,
    pub budget: Budget,
}

impl Default for GkConfig {
    fn default() -> Self {
        Self {
            n_max: 40,
            x_points: 257,
            resolution: 1024,
            mc_samples: 1_000_000,
            seed: 0,
            budget: Budget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodAgreement {
    pub n: usize,
    pub x: f64,
    pub operator: f64,
    pub monte_carlo: f64,
    pub std_error: f64,
    pub gap: f64,
    /// `4 SE + grid tolerance`.
    pub band: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GkReport {
    pub measure: String,
    pub n: u32,
    pub n_values: Vec<usize>,
    pub sup_errors: Vec<f64>,
    pub q_fit: Option<f64>,
    /// `max |e_n(x)| / (q^n F(x))` over the fit window and `x > 0`.
    pub theta_bound: Option<f64>,
    pub residuals: Vec<f64>,
    pub window: Vec<usize>,
    pub floor: f64,
    pub method_agreement: Vec<MethodAgreement>,
}

impl GkReport {
    pub fn require_fit(&self) -> Result<f64> {
        self.q_fit.ok_or_else(|| {
            NcfError::Fit(format!(
                "{} points above the error floor {:.3e}; need 3",
                self.window.len(),
                self.floor
            ))
        })
    }
}

/// Tolerance added to the Monte Carlo band for the grid route.
pub const GRID_TOLERANCE: f64 = 1e-6;

const AGREEMENT_CELLS: [(usize, f64); 3] = [(1, 0.5), (2, 0.25), (3, 0.75)];

pub fn run_experiment(
    mu: &InitialMeasure,
    params: NcfParams,
    config: &GkConfig,
) -> Result<GkReport> {
    if config.n_max < 5 {
        return domain("n_max must be at least 5");
    }
    if config.x_points < 2 {
        return domain("x grid needs at least 2 points");
    }
    let m = config.resolution as u64;
    config.budget.check(work(&[
        config.n_max as u64 + 400,
        m + 1,
        truncation_index(params),
    ]))?;
    let g_n = GaussMeasure::new(params);
    let xs: Vec<f64> = (0..config.x_points)
        .map(|j| j as f64 / (config.x_points - 1) as f64)
        .collect();
    let limit: Vec<f64> = xs.iter().map(|&x| g_n.cdf_unchecked(x)).collect();
    let deviations = |g: &GridFunction| -> Vec<f64> {
        let cum = g.cumulative_gn(params);
        xs.iter()
            .zip(&limit)
            .map(|(&x, &f)| g.integral_from_table(&cum, params, x) - f)
            .collect()
    };
    let sup = |d: &[f64]| d.iter().fold(0.0, |m: f64, v| m.max(v.abs()));

    let mut g = mu.f0_grid(params, config.resolution)?;
    let mut per_n = Vec::with_capacity(config.n_max + 1);
    let mut sup_errors = Vec::with_capacity(config.n_max + 1);
    for n in 0..=config.n_max {
        if n > 0 {
            g = apply_transfer(&g, params)?;
        }
        let d = deviations(&g);
        sup_errors.push(sup(&d));
        per_n.push(d);
    }
    let floor = sup(&deviations(&iterate_to_limit(g, params, 400)?));
    let window = fit_window(&sup_errors, floor, 1.0);
    let (q_fit, theta_bound, residuals) = match fit_geometric(&sup_errors, &window) {
        Ok((q, _, res)) if q > 0.0 && q < 1.0 => {
            let theta = window
                .iter()
                .flat_map(|&n| {
                    let qn = q.powi(n as i32);
                    per_n[n]
                        .iter()
                        .zip(&limit)
                        .filter(|(_, &f)| f > 0.0)
                        .map(move |(e, f)| e.abs() / (qn * f))
                })
                .fold(0.0, f64::max);
            (Some(q), Some(theta), res)
        }
        Ok((_, _, res)) => (None, None, res),
        Err(_) => (None, None, Vec::new()),
    };

    let seed = SeedStream::new(config.seed);
    let mut method_agreement = Vec::with_capacity(AGREEMENT_CELLS.len());
    for (cell, &(n, x)) in AGREEMENT_CELLS.iter().enumerate() {
        let operator = distribution_at(
            mu,
            n,
            x,
            params,
            Method::Operator {
                resolution: config.resolution,
            },
            &config.budget,
        )?;
        let acc = monte_carlo(
            mu,
            n,
            x,
            params,
            config.mc_samples,
            seed,
            cell as u64,
            &config.budget,
        )?;
        let p = acc.mean();
        let std_error = (p * (1.0 - p) / acc.count as f64).sqrt();
        let gap = (operator - p).abs();
        let band = 4.0 * std_error + GRID_TOLERANCE;
        method_agreement.push(MethodAgreement {
            n,
            x,
            operator,
            monte_carlo: p,
            std_error,
            gap,
            band,
            within: gap <= band,
        });
    }

    Ok(GkReport {
        measure: mu.name().to_string(),
        n: params.n(),
        n_values: (0..=config.n_max).collect(),
        sup_errors,
        q_fit,
        theta_bound,
        residuals,
        window,
        floor,
        method_agreement,
    })
}
