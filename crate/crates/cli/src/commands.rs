use ncf_core::rscc::{kernel_invariance, mealy_dot_export, regularity_witness, FiniteChain};
use ncf_core::{
    apply_transfer, contraction_coefficients, convergents, digits, digits_exact, estimate_gap,
    evaluate, operator::truncation_bound, run_experiment, Budget, ContractionConfig, GaussMeasure,
    GkConfig, GridFunction, InitialMeasure, MealySystem, NcfError, NcfParams, NcfRscc, Rational,
};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::output::{Csv, Report};
use crate::Func;

type Res = Result<Report, NcfError>;

fn params(n: u32) -> Result<NcfParams, NcfError> {
    NcfParams::new(n)
}

fn parse_rational(s: &str) -> Result<Rational, NcfError> {
    s.trim()
        .parse::<BigRational>()
        .map_err(|e| NcfError::Domain(format!("cannot parse '{s}' as p/q: {e}")))
}

#[derive(Serialize)]
struct Expansion<'a> {
    n: u32,
    x: &'a str,
    exact: bool,
    digits: &'a [u64],
    terminated: bool,
}

pub fn expand(n: u32, x: &str, max_len: usize) -> Res {
    let p = params(n)?;
    let exact = x.contains('/');
    let seq = if exact {
        digits_exact(&parse_rational(x)?, p)?
    } else {
        let v: f64 = x
            .trim()
            .parse()
            .map_err(|_| NcfError::Domain(format!("cannot parse '{x}' as a real")))?;
        digits(v, p, max_len)?
    };
    let mut csv = Csv::new(&["index", "digit"]);
    for (k, &d) in seq.digits().iter().enumerate() {
        csv.push(vec![(k + 1).into(), d.into()]);
    }
    let payload = Expansion {
        n,
        x,
        exact,
        digits: seq.digits(),
        terminated: seq.terminated(),
    };
    Report::new("expand", &payload, csv)
}

#[derive(Serialize)]
struct Evaluation<'a> {
    n: u32,
    digits: &'a [u64],
    value: String,
    approx: f64,
    convergents: Vec<String>,
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn eval(n: u32, ds: &[u64]) -> Res {
    let p = params(n)?;
    let value = evaluate(ds, p)?;
    let conv = convergents(ds, p)?;
    let mut csv = Csv::new(&["k", "convergent", "approx"]);
    for (k, c) in conv.iter().enumerate() {
        csv.push(vec![(k + 1).into(), c.to_string().into(), to_f64(c).into()]);
    }
    let payload = Evaluation {
        n,
        digits: ds,
        value: value.to_string(),
        approx: to_f64(&value),
        convergents: conv.iter().map(ToString::to_string).collect(),
    };
    Report::new("eval", &payload, csv)
}

#[derive(Serialize)]
struct DigitRow {
    digit: u64,
    probability: f64,
}

#[derive(Serialize)]
struct DigitLaw {
    n: u32,
    rows: Vec<DigitRow>,
    tail_from: u64,
    tail_probability: f64,
}

pub fn digit_law(n: u32, count: u64) -> Res {
    let g = GaussMeasure::new(params(n)?);
    let first = u64::from(n);
    let mut rows = Vec::new();
    let mut csv = Csv::new(&["digit", "probability"]);
    for i in first..first + count {
        let pr = g.digit_law(i)?;
        csv.push(vec![i.into(), pr.into()]);
        rows.push(DigitRow {
            digit: i,
            probability: pr,
        });
    }
    let tail_from = first + count;
    let payload = DigitLaw {
        n,
        rows,
        tail_from,
        tail_probability: g.digit_tail(tail_from)?,
    };
    Report::new("digit-law", &payload, csv)
}

#[derive(Serialize)]
struct InvarianceRow {
    u: f64,
    integral: f64,
    gn_cdf: f64,
    abs_error: f64,
}

#[derive(Serialize)]
struct Invariance {
    n: u32,
    rows: Vec<InvarianceRow>,
    max_abs_error: f64,
}

pub fn invariance(n: u32, grid: usize) -> Res {
    if grid == 0 {
        return Err(NcfError::Domain("grid must be at least 1".into()));
    }
    let p = params(n)?;
    let sys = NcfRscc::new(p);
    let g = GaussMeasure::new(p);
    let mut rows = Vec::with_capacity(grid);
    let mut csv = Csv::new(&["u", "integral", "gn_cdf", "abs_error"]);
    for k in 1..=grid {
        let u = k as f64 / grid as f64;
        let integral = kernel_invariance(&sys, u)?;
        let cdf = g.cdf(u)?;
        let err = (integral - cdf).abs();
        csv.push(vec![u.into(), integral.into(), cdf.into(), err.into()]);
        rows.push(InvarianceRow {
            u,
            integral,
            gn_cdf: cdf,
            abs_error: err,
        });
    }
    let max_abs_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    Report::new(
        "invariance",
        &Invariance {
            n,
            rows,
            max_abs_error,
        },
        csv,
    )
}

#[derive(Serialize)]
struct Transfer {
    n: u32,
    func: &'static str,
    resolution: usize,
    iterations: usize,
    unit_max_deviation: f64,
    truncation_bound: f64,
    integral_before: f64,
    integral_after: f64,
    values: Vec<f64>,
}

pub fn transfer(n: u32, grid: usize, iterations: usize, func: Func) -> Res {
    let p = params(n)?;
    let budget = Budget::from_env();
    budget.check(
        (iterations as u64 + 1)
            .saturating_mul(grid as u64 + 1)
            .saturating_mul(ncf_core::operator::truncation_index(p)),
    )?;
    let f = GridFunction::from_fn(grid, |x| func.eval(x))?;
    let one = apply_transfer(&GridFunction::constant(grid, 1.0)?, p)?;
    let unit_max_deviation = one.shift(-1.0).sup_norm();
    let mut g = f.clone();
    for _ in 0..iterations {
        g = apply_transfer(&g, p)?;
    }
    let mut csv = Csv::new(&["x", "f", "uf"]);
    for j in 0..=grid {
        csv.push(vec![
            f.node(j).into(),
            f.values()[j].into(),
            g.values()[j].into(),
        ]);
    }
    let payload = Transfer {
        n,
        func: func.name(),
        resolution: grid,
        iterations,
        unit_max_deviation,
        truncation_bound: truncation_bound(&f, p),
        integral_before: f.integrate_gn(p),
        integral_after: g.integrate_gn(p),
        values: g.values().to_vec(),
    };
    Report::new("transfer", &payload, csv)
}

#[derive(Serialize)]
struct Gap<T: Serialize> {
    n: u32,
    func: &'static str,
    resolution: usize,
    #[serde(flatten)]
    estimate: T,
}

pub fn gap(n: u32, grid: usize, n_max: usize, func: Func) -> Res {
    let p = params(n)?;
    let f = GridFunction::from_fn(grid, |x| func.eval(x))?;
    let est = estimate_gap(&f, p, n_max, &Budget::from_env())?;
    let mut csv = Csv::new(&["n", "sup_error", "lip_error"]);
    for (k, (e, l)) in est.errors.iter().zip(&est.lip_errors).enumerate() {
        csv.push(vec![k.into(), (*e).into(), (*l).into()]);
    }
    let payload = Gap {
        n,
        func: func.name(),
        resolution: grid,
        estimate: est,
    };
    Report::new("gap", &payload, csv)
}

#[derive(Serialize)]
struct Gk<T: Serialize> {
    resolution: usize,
    seed: u64,
    samples: u64,
    #[serde(flatten)]
    report: T,
}

#[allow(clippy::too_many_arguments)]
pub fn gk(
    n: u32,
    mu: &str,
    n_max: usize,
    grid: usize,
    x_points: usize,
    samples: u64,
    seed: u64,
) -> Res {
    let p = params(n)?;
    let measure = InitialMeasure::from_name(mu, p)?;
    let config = GkConfig {
        n_max,
        x_points,
        resolution: grid,
        mc_samples: samples,
        seed,
        budget: Budget::from_env(),
    };
    let report = run_experiment(&measure, p, &config)?;
    let failure = report.require_fit().err();
    let mut csv = Csv::new(&["n", "sup_error"]);
    for (&k, &e) in report.n_values.iter().zip(&report.sup_errors) {
        csv.push(vec![k.into(), e.into()]);
    }
    let payload = Gk {
        resolution: grid,
        seed,
        samples,
        report,
    };
    Ok(Report::new("gk", &payload, csv)?.with_failure(failure))
}

#[derive(Serialize)]
struct Mealy {
    alpha: f64,
    beta: f64,
    kernel: Vec<Vec<f64>>,
    powers: Vec<Vec<Vec<f64>>>,
    stationary: Option<[f64; 2]>,
    cesaro_n: u64,
    cesaro: Vec<Vec<f64>>,
    cesaro_max_error: Option<f64>,
}

/// Horizon of the reported Cesàro average.
const CESARO_N: u64 = 1 << 36;

pub fn mealy(alpha: f64, beta: f64, dot: bool, n_max: usize) -> Res {
    let m = MealySystem::new(alpha, beta)?;
    let chain = FiniteChain::from_system(&m)?;
    let powers: Vec<Vec<Vec<f64>>> = (1..=n_max).map(|k| chain.step(k).rows()).collect();
    let stationary = m.stationary().ok();
    let cesaro = chain.cesaro(CESARO_N)?;
    let cesaro_max_error = stationary.map(|pi| {
        (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| (cesaro.get(i, j) - pi[j]).abs())
            .fold(0.0, f64::max)
    });
    let mut csv = Csv::new(&["k", "q11", "q12", "q21", "q22"]);
    for (k, q) in powers.iter().enumerate() {
        csv.push(vec![
            (k + 1).into(),
            q[0][0].into(),
            q[0][1].into(),
            q[1][0].into(),
            q[1][1].into(),
        ]);
    }
    let payload = Mealy {
        alpha,
        beta,
        kernel: chain.kernel().rows(),
        powers,
        stationary,
        cesaro_n: CESARO_N,
        cesaro: cesaro.rows(),
        cesaro_max_error,
    };
    let report = Report::new("rscc-mealy", &payload, csv)?;
    Ok(if dot {
        report.with_text(mealy_dot_export(&m))
    } else {
        report
    })
}

#[derive(Serialize)]
struct Contraction<T: Serialize> {
    n: u32,
    grid: usize,
    word_cap: u64,
    #[serde(flatten)]
    report: T,
}

pub fn contraction(n: u32, grid: usize, k_max: usize, word_cap: u64) -> Res {
    let sys = NcfRscc::new(params(n)?);
    let config = ContractionConfig {
        k_max,
        grid,
        word_cap,
        budget: Budget::from_env(),
    };
    let report = contraction_coefficients(&sys, &config)?;
    let mut csv = Csv::new(&["k", "r_k", "bounded"]);
    for (k, (&r, &b)) in report.r_values.iter().zip(&report.r_bounded).enumerate() {
        csv.push(vec![(k + 1).into(), r.into(), b.into()]);
    }
    let payload = Contraction {
        n,
        grid,
        word_cap,
        report,
    };
    Report::new("contraction", &payload, csv)
}

#[derive(Serialize)]
struct Regularity<T: Serialize> {
    n: u32,
    #[serde(flatten)]
    report: T,
}

pub fn regularity(n: u32, n_max: usize, starts: usize) -> Res {
    if starts == 0 {
        return Err(NcfError::Domain("need at least one start".into()));
    }
    let sys = NcfRscc::new(params(n)?);
    let pts: Vec<f64> = if starts == 1 {
        vec![0.0]
    } else {
        (0..starts)
            .map(|j| j as f64 / (starts - 1) as f64)
            .collect()
    };
    let report = regularity_witness(&sys, &pts, n_max)?;
    let mut csv = Csv::new(&["n", "max_dist"]);
    for (k, &d) in report.max_dist_curve.iter().enumerate() {
        csv.push(vec![k.into(), d.into()]);
    }
    Report::new("regularity", &Regularity { n, report }, csv)
}
