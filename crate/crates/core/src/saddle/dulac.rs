//! Closed-form Dulac coefficients of a corner.

use crate::error::{Error, Result};
use crate::expansion::{classify, DulacCase, DulacExpansion};
use crate::quad::QuadTolerance;
use crate::saddle::chart::LocalChart;
use crate::saddle::mellin::mellin_hat;
use crate::saddle::section::SectionPair;
use crate::saddle::transition::{Axis, Transition};

/// Everything computed along the way, for reports and cross-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DulacData {
    pub expansion: DulacExpansion,
    pub l1: f64,
    pub l2: f64,
    pub m1_hat: Option<f64>,
    pub m2_hat: Option<f64>,
}

pub fn dulac_coefficients(chart: &LocalChart, sections: &SectionPair, tol: &QuadTolerance) -> Result<DulacExpansion> {
    Ok(dulac_data(chart, sections, tol)?.expansion)
}

pub fn dulac_data(chart: &LocalChart, sections: &SectionPair, tol: &QuadTolerance) -> Result<DulacData> {
    if chart.n1 != 0 || chart.n2 != 0 {
        return Err(Error::Chart("corners with n₁ or n₂ > 0 are not supported".into()));
    }
    sections.validate()?;
    let lambda = chart.lambda;
    let sg = |i, j, k| sections.sigma(i, j, k);
    let (s111, s112, s120, s121) = (sg(1, 1, 1), sg(1, 1, 2), sg(1, 2, 0), sg(1, 2, 1));
    let (s210, s211, s221, s222) = (sg(2, 1, 0), sg(2, 1, 1), sg(2, 2, 1), sg(2, 2, 2));

    let t1 = Transition::new(chart, Axis::Stable, *tol)?;
    let t2 = Transition::new(chart, Axis::Unstable, *tol)?;
    let l1 = t1.value(s120)?;
    let l2 = t2.value(s210)?;
    let delta00 = s111.powf(lambda) * s120 / l1.powf(lambda) * l2 / (s221 * s210.powf(lambda));
    if !(delta00 > 0.0 && delta00.is_finite()) {
        return Err(Error::Integration(format!("Δ₀₀ = {delta00} is not a positive number")));
    }

    let s1 = || -> Result<(f64, f64)> {
        let hat = mellin_hat(&t1, 1.0 / lambda, s120, tol)?;
        let v = s112 / (2.0 * s111) - s121 / s120 * t1.ratio(s120) - s111 / l1 * hat;
        Ok((v, hat))
    };
    let s2 = || -> Result<(f64, f64)> {
        let hat = mellin_hat(&t2, lambda, s210, tol)?;
        let v = s222 / (2.0 * s221) - s211 / s210 * t2.ratio(s210) - s221 / l2 * hat;
        Ok((v, hat))
    };
    let (s1, s2) = match classify(lambda) {
        DulacCase::BelowOne => (s1().ok(), Some(s2()?)),
        DulacCase::AboveOne => (Some(s1()?), s2().ok()),
        DulacCase::AtOne => (None, None),
    };
    Ok(DulacData {
        expansion: DulacExpansion::from_saddle(lambda, delta00, s1.map(|p| p.0), s2.map(|p| p.0)),
        l1,
        l2,
        m1_hat: s1.map(|p| p.1),
        m2_hat: s2.map(|p| p.1),
    })
}
