//! Adaptive 21-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadTolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-10,
            max_subdivisions: 10_000,
        }
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let err = ((kronrod - gauss) * half).abs();
    // QUADPACK-style error scaling
    let err = if err > 0.0 {
        err * (200.0 * err / (half.abs() * kronrod.abs()).max(f64::MIN_POSITIVE))
            .powf(1.5)
            .min(1.0)
    } else {
        0.0
    };
    (kronrod * half, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over `[a, b]`. Returns the value; fails if the requested
/// tolerance is not met within the subdivision budget or `f` is not finite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &QuadTolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (value, error) = gk21(&f, a, b);
    if !value.is_finite() {
        return Err(Error::Tolerance(format!(
            "integrand not finite on [{a}, {b}]"
        )));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut splits = 0;
    while total_err > tol.abs.max(tol.rel * total.abs()) {
        if splits >= tol.max_subdivisions {
            return Err(Error::Tolerance(format!(
                "quadrature on [{a}, {b}] did not converge in {} subdivisions (error estimate {total_err:e})",
                tol.max_subdivisions
            )));
        }
        let seg = heap.pop().expect("heap never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a.min(seg.b) || mid >= seg.a.max(seg.b) {
            // interval exhausted at machine resolution
            return Err(Error::Tolerance(format!(
                "quadrature interval collapsed near {mid} (error estimate {total_err:e})"
            )));
        }
        let (v1, e1) = gk21(&f, seg.a, mid);
        let (v2, e2) = gk21(&f, mid, seg.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Tolerance(format!(
                "integrand not finite on [{}, {}]",
                seg.a, seg.b
            )));
        }
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        splits += 1;
    }
    // re-sum to shed accumulated cancellation in the running totals
    Ok(heap.iter().map(|s| s.value).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, &QuadTolerance::default()).unwrap();
        assert!((v - 8.0).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &QuadTolerance::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn reversed_interval() {
        let v = integrate(f64::exp, 1.0, 0.0, &QuadTolerance::default()).unwrap();
        assert!((v + (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let tol = QuadTolerance {
            max_subdivisions: 3,
            ..QuadTolerance::default()
        };
        assert!(integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &tol).is_err());
    }
}
