//! Recovering expansion coefficients from sampled maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;

/// Largest disagreement between the slope estimate and the guess for which
/// the guess is trusted as the exact exponent.
pub const EXPONENT_TRUST: f64 = 0.05;
/// Relative rms of the full fit above which the data are called noisy.
pub const NOISE_LEVEL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitTerm {
    pub exponent: f64,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Local log-log slope at the smallest samples.
    pub exponent: f64,
    /// Exponent divided out before the coefficient fit.
    pub exponent_used: f64,
    pub leading: f64,
    pub second: Option<FitTerm>,
    /// Extra basis terms beyond the second.
    pub higher: Vec<FitTerm>,
    /// Decay rate of what is left after the two leading terms, if resolvable.
    pub residual_slope: Option<f64>,
    pub relative_rms: f64,
    pub s_grid: Vec<f64>,
    pub confident: bool,
    pub flags: Vec<String>,
}

/// `s₀ ρᵏ` for `k = 0..count`.
pub fn geometric_grid(s0: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| s0 * ratio.powi(k as i32)).collect()
}

/// The default fitting grid `s = 10⁻² · 2⁻ᵏ`, `k = 0..=12`.
pub fn default_grid() -> Vec<f64> {
    geometric_grid(1e-2, 0.5, 13)
}

/// Exponents `i + jλ` in `(0, max]`, sorted, with near-duplicates merged.
pub fn dulac_basis(lambda: f64, max: f64, limit: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0.0;
    while i <= max {
        let mut j = 0.0;
        while i + j * lambda <= max {
            let e = i + j * lambda;
            if e > 0.0 {
                out.push(e);
            }
            j += 1.0;
        }
        i += 1.0;
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 0.05);
    out.truncate(limit);
    out
}

fn is_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0]) || v.windows(2).all(|w| w[1] <= w[0])
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fit `v(s) ≈ s^e (c₀ + Σ cₖ s^{bₖ})` with `bₖ` from `basis`, the first of
/// which is reported as the second term.
pub fn fit_expansion(samples: &[(f64, f64)], exponent_guess: f64, basis: &[f64]) -> Result<FitReport> {
    if samples.len() < 8 {
        return Err(Error::Invalid(format!(
            "fit needs at least 8 samples, got {}",
            samples.len()
        )));
    }
    let mut pts: Vec<(f64, f64)> = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.iter().any(|&(s, v)| !(s > 0.0) || !(v > 0.0)) {
        return Err(Error::Invalid("fit needs positive abscissae and values".into()));
    }
    let span = (pts[pts.len() - 1].0 / pts[0].0).log10();
    if span < 3.0 - 1e-9 {
        return Err(Error::Invalid(format!(
            "fit samples span {span:.2} decades, need at least 3"
        )));
    }
    let mut flags = Vec::new();
    let values: Vec<f64> = pts.iter().map(|p| p.1).collect();
    if !is_monotone(&values) {
        flags.push("values are not monotone in s".to_string());
    }
    let exponent = (pts[1].1 / pts[0].1).ln() / (pts[1].0 / pts[0].0).ln();
    let exponent_used = if (exponent - exponent_guess).abs() <= EXPONENT_TRUST {
        exponent_guess
    } else {
        flags.push(format!(
            "slope {exponent} disagrees with the expected exponent {exponent_guess}"
        ));
        exponent
    };
    let g: Vec<f64> = pts.iter().map(|&(s, v)| v / s.powf(exponent_used)).collect();
    let mut basis: Vec<f64> = basis.to_vec();
    let max_terms = pts.len().saturating_sub(3);
    if basis.len() > max_terms {
        flags.push(format!("basis truncated to {max_terms} terms"));
        basis.truncate(max_terms);
    }
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|&(s, _)| std::iter::once(1.0).chain(basis.iter().map(|b| s.powf(*b))).collect())
        .collect();
    let coef = least_squares(&rows, &g)?;
    let fitted: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(&coef).map(|(a, c)| a * c).sum())
        .collect();
    let relative_rms = (g
        .iter()
        .zip(&fitted)
        .map(|(a, b)| ((a - b) / a).powi(2))
        .sum::<f64>()
        / g.len() as f64)
        .sqrt();
    if relative_rms > NOISE_LEVEL {
        flags.push(format!("relative rms {relative_rms:e} above {NOISE_LEVEL:e}"));
    }
    let second = basis.first().map(|&b| FitTerm {
        exponent: b,
        coefficient: coef[1],
    });
    let higher = basis
        .iter()
        .zip(coef.iter().skip(1))
        .skip(1)
        .map(|(&exponent, &coefficient)| FitTerm {
            exponent,
            coefficient,
        })
        .collect();
    // decay of what the two-term truncation leaves behind
    let floor = 1e3 * f64::EPSILON;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, &(s, _)) in pts.iter().enumerate() {
        let two = coef[0] + second.map_or(0.0, |t| t.coefficient * s.powf(t.exponent));
        let r = (g[i] - two).abs();
        if r > floor * g[i].abs() {
            xs.push(s.ln());
            ys.push(r.ln());
        }
    }
    let residual_slope = (xs.len() >= 3).then(|| slope(&xs, &ys));
    let lower = second.map_or(0.0, |t| t.exponent);
    if let Some(sl) = residual_slope {
        if sl < lower - 0.1 {
            flags.push(format!("residual slope {sl} below {lower}"));
        }
    }
    Ok(FitReport {
        exponent,
        exponent_used,
        leading: coef[0],
        second,
        higher,
        residual_slope,
        relative_rms,
        s_grid: pts.iter().map(|p| p.0).collect(),
        confident: flags.is_empty(),
        flags,
    })
}
