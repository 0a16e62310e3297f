//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{NcfError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const DEFAULT_ABS_TOL: f64 = 1e-10;
const MAX_SEGMENTS: usize = 4096;

/// One G7K15 panel: (kronrod estimate, |kronrod - gauss|).
fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol` by global
/// adaptive bisection of the panel with the largest error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = panel(&f, a, b);
    let mut segs = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = segs.iter().map(|s| s.3).sum();
        if total_err <= abs_tol {
            break;
        }
        if segs.len() >= MAX_SEGMENTS {
            return Err(NcfError::Quadrature {
                a,
                b,
                estimate: total_err,
            });
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (sa, sb, _, _) = segs.swap_remove(idx);
        let mid = 0.5 * (sa + sb);
        let (lv, le) = panel(&f, sa, mid);
        let (rv, re) = panel(&f, mid, sb);
        segs.push((sa, mid, lv, le));
        segs.push((mid, sb, rv, re));
    }
    // Sum in order of position for reproducibility.
    segs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(segs.iter().map(|s| s.2).sum())
}

/// Integrates over a partition `points` (sorted), useful when the integrand
/// has known kinks at those points.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], abs_tol: f64) -> Result<f64> {
    let pieces = points.len().saturating_sub(1).max(1) as f64;
    points
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], abs_tol / pieces))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 1.0, 1e-14).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v = integrate(|x| x.powi(7) - x, -1.0, 2.0, 1e-12).unwrap();
        assert!((v - (255.0 / 8.0 - 1.5)).abs() < 1e-12);
    }

    #[test]
    fn log_integrand() {
        // ∫₀¹ dx/(x+1) = ln 2
        let v = integrate(|x| 1.0 / (x + 1.0), 0.0, 1.0, 1e-13).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-13);
    }

    #[test]
    fn adapts_to_kink() {
        let v = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-11).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
    }

    #[test]
    fn reports_nonconvergence() {
        let r = integrate(|x: f64| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, 1e-300);
        assert!(matches!(r, Err(NcfError::Quadrature { .. })));
    }
}
