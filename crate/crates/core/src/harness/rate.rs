//! Empirical convergence rates from traces.

use crate::error::{Error, Result};
use crate::trace::SolverTrace;

/// Least-squares fit of `log(e_k) = intercept + slope · log k` over a window
/// of iterations, with `e_k = column_k - f_star`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Iteration range actually used.
    pub window: (u64, u64),
    pub points: usize,
    /// Set when the requested window was cut short because the error hit
    /// zero (or went negative) before its end.
    pub truncated: bool,
}

/// Fits the error decay of `column` against `f_star` on iterations
/// `window.0..=window.1` (iteration 0 is always skipped).
///
/// The window ends at the first non-positive error, since at that point the
/// error is below the accuracy of `f_star`. Fewer than three usable points
/// is reported as saturation.
pub fn fit_rate(trace: &SolverTrace, column: &str, f_star: f64, window: (u64, u64)) -> Result<RateReport> {
    if window.0 > window.1 {
        return Err(Error::Config(format!("empty rate window {}..{}", window.0, window.1)));
    }
    let iters = trace.column("iter")?;
    let values = trace.column(column)?;
    let mut pts = Vec::new();
    let mut truncated = false;
    for (&k, &v) in iters.iter().zip(&values) {
        let k = k as u64;
        if k == 0 || k < window.0 || k > window.1 {
            continue;
        }
        let err = v - f_star;
        if !(err > 0.0) || !err.is_finite() {
            truncated = true;
            break;
        }
        pts.push(((k as f64).ln(), err.ln(), k));
    }
    if pts.len() < 3 {
        return Err(Error::Numeric(format!(
            "rate fit saturated: only {} positive errors in window {}..{}",
            pts.len(),
            window.0,
            window.1
        )));
    }
    let (slope, intercept, r_squared) = least_squares(&pts.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>());
    Ok(RateReport {
        slope,
        intercept,
        r_squared,
        window: (pts[0].2, pts[pts.len() - 1].2),
        points: pts.len(),
        truncated,
    })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r_squared)
}

/// First iteration whose `column` error against `f_star` is at most `eps`.
pub fn iterations_to(trace: &SolverTrace, column: &str, f_star: f64, eps: f64) -> Result<Option<u64>> {
    let iters = trace.column("iter")?;
    let values = trace.column(column)?;
    Ok(iters
        .iter()
        .zip(&values)
        .find(|(_, &v)| v - f_star <= eps)
        .map(|(&k, _)| k as u64))
}
