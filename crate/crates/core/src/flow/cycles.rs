//! Fixed points of a return map, located by sign changes of `R(s) − s`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::returns::ReturnMap;

/// Default relative bisection tolerance in `s`.
pub const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    /// `R(s) − s` positive below and negative above.
    Attracting,
    Repelling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub s: f64,
    pub bracket: (f64, f64),
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleScan {
    pub fixed_points: Vec<FixedPoint>,
    /// `(s, R(s) − s)` on the scan grid; `None` where integration failed.
    pub displacement: Vec<(f64, Option<f64>)>,
    pub failures: Vec<(f64, String)>,
    pub coverage_warning: Option<String>,
    pub relative_tolerance: f64,
}

/// `points` values of `s` spaced geometrically over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Displacement `R(s) − s` at every grid point, evaluated in parallel and
/// assembled in grid order.
pub fn displacement_samples(map: &dyn ReturnMap, grid: &[f64]) -> Vec<(f64, Result<f64>)> {
    grid.par_iter()
        .map(|&s| (s, map.eval(s).map(|r| r - s)))
        .collect()
}

fn refine(map: &dyn ReturnMap, mut lo: f64, mut hi: f64, mut d_lo: f64, rel_tol: f64) -> Result<f64> {
    while hi / lo - 1.0 > rel_tol {
        let mid = (lo * hi).sqrt();
        let d = map.eval(mid)? - mid;
        if d == 0.0 {
            return Ok(mid);
        }
        if (d > 0.0) == (d_lo > 0.0) {
            lo = mid;
            d_lo = d;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Scan `[s_min, s_max]` on a geometric grid of `points` values and refine
/// each sign change of `R(s) − s` to relative width `rel_tol`.
pub fn count_limit_cycles(
    map: &dyn ReturnMap,
    s_min: f64,
    s_max: f64,
    points: usize,
    rel_tol: f64,
) -> Result<CycleScan> {
    if !(s_min > 0.0 && s_max > s_min) || points < 2 {
        return Err(Error::Invalid(format!(
            "empty scan range [{s_min}, {s_max}] with {points} points"
        )));
    }
    let grid = log_grid(s_min, s_max, points);
    let samples = displacement_samples(map, &grid);
    let mut failures = Vec::new();
    let mut good: Vec<(f64, f64)> = Vec::new();
    let mut displacement = Vec::new();
    for (s, r) in samples {
        match r {
            Ok(d) => {
                good.push((s, d));
                displacement.push((s, Some(d)));
            }
            Err(e) => {
                failures.push((s, e.to_string()));
                displacement.push((s, None));
            }
        }
    }
    if good.is_empty() {
        return Err(Error::Integration(format!(
            "all {points} return evaluations failed; first: {}",
            failures.first().map_or("", |f| f.1.as_str())
        )));
    }
    let mut fixed_points = Vec::new();
    for w in good.windows(2) {
        let ((s0, d0), (s1, d1)) = (w[0], w[1]);
        if d0 == 0.0 {
            continue;
        }
        if d1 == 0.0 || (d0 > 0.0) != (d1 > 0.0) {
            let s = if d1 == 0.0 { s1 } else { refine(map, s0, s1, d0, rel_tol)? };
            let stability = if d0 > 0.0 { Stability::Attracting } else { Stability::Repelling };
            fixed_points.push(FixedPoint {
                s,
                bracket: (s0, s1),
                stability,
            });
        }
    }
    let coverage_warning = (!failures.is_empty()).then(|| {
        format!(
            "{} of {points} samples failed; sign changes across them are not resolved",
            failures.len()
        )
    });
    Ok(CycleScan {
        fixed_points,
        displacement,
        failures,
        coverage_warning,
        relative_tolerance: rel_tol,
    })
}
