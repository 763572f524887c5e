//! From a model and a parameter point to corner maps, return-map and
//! displacement expansions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{
    displacement_expansion, products::{a_product, lambda_product}, return_expansion, BlockPattern, DisplacementExpansion,
    PolycycleSpec, ReturnExpansion,
};
use crate::error::{Error, Result};
use crate::expansion::DulacExpansion;
use crate::field::PlanarField;
use crate::flow::{Leg, PolycycleReturn};
use crate::model::Model;
use crate::saddle::{dulac_data, normalize_saddle, SectionPair};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerReport {
    /// 1-based position in the model's corner list.
    pub index: usize,
    pub point: [f64; 2],
    pub lambda: f64,
    pub delta00: f64,
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub l1: f64,
    pub l2: f64,
    pub h_in: f64,
    pub h_out: f64,
    pub expansion: DulacExpansion,
}

/// An expansion computed after relabeling so corner `rotation + 1` comes first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rotated<T> {
    pub rotation: usize,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolycycleAnalysis {
    pub mu: Vec<f64>,
    pub corners: Vec<CornerReport>,
    pub spec: PolycycleSpec,
    pub r: f64,
    /// Return map in the listed corner order.
    pub return_map: ReturnExpansion,
    /// Return map for the first ordering with corners below one ahead of
    /// corners above one.
    pub below_above: Option<Rotated<ReturnExpansion>>,
    /// Displacement map for the first ordering with corners above one ahead
    /// of corners below one.
    pub displacement: Option<Rotated<DisplacementExpansion>>,
}

/// Relabelings held fixed while the parameter moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rotations {
    pub below_above: Option<usize>,
    pub above_below: Option<usize>,
}

/// The scalar functions the cyclicity conditions are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionQuantities {
    pub r_minus_1: f64,
    pub a_minus_1: f64,
    pub script_a: Option<f64>,
    pub psi: Option<[f64; 3]>,
    /// Size of the terms each quantity is built from, in `to_vec` order; a
    /// quantity is zero when it is small against its scale.
    pub scales: [f64; 6],
}

impl ConditionQuantities {
    /// Flattened values, absent ones as NaN: `r−1, A−1, 𝒜, Ψ₁, Ψ₂, Ψ₃`.
    pub fn to_vec(&self) -> Vec<f64> {
        let psi = self.psi.unwrap_or([f64::NAN; 3]);
        vec![
            self.r_minus_1,
            self.a_minus_1,
            self.script_a.unwrap_or(f64::NAN),
            psi[0],
            psi[1],
            psi[2],
        ]
    }
}

fn unit(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let d = [b[0] - a[0], b[1] - a[1]];
    let n = d[0].hypot(d[1]);
    [d[0] / n, d[1] / n]
}

/// Corner charts and sections of the model's polycycle at `mu`.
///
/// Sections sit on the edges, so the exit section of each corner is the
/// entry section of the next one.
pub fn corner_legs(model: &Model, mu: &[f64]) -> Result<(PlanarField, Vec<Leg>)> {
    let poly = model.polygon()?;
    let field = model.field.at(mu).map_err(|e| e.in_stage("instantiate field"))?;
    let n = poly.n();
    let mut legs = Vec::with_capacity(n);
    for i in 0..n {
        let stage = format!("corner {}", i + 1);
        let p = poly.corner(i);
        let next = poly.corner(i + 1);
        let prev = poly.corner(i + n - 1);
        let chart = normalize_saddle(&field, p, unit(p, prev), unit(p, next)).map_err(|e| e.in_stage(&stage))?;
        if chart.time_reversed {
            return Err(Error::Model(format!(
                "the flow runs through corner {} against the listed corner order",
                i + 1
            )));
        }
        let h_out = poly.fractions[i] * poly.edge_length(i);
        let j = (i + n - 1) % n;
        let h_in = (1.0 - poly.fractions[j]) * poly.edge_length(j);
        chart.check_footprint(h_out, h_in).map_err(|e| e.in_stage(&stage))?;
        legs.push(Leg {
            chart,
            sections: SectionPair::straight(h_in, h_out),
        });
    }
    Ok((field, legs))
}

/// The numeric return map on the section of the last edge.
pub fn polycycle_return(model: &Model, mu: &[f64], tol: &Tolerances) -> Result<PolycycleReturn> {
    let (_, legs) = corner_legs(model, mu)?;
    PolycycleReturn::new(legs, tol.ode.clone())
}

pub fn analyze(model: &Model, mu: &[f64], tol: &Tolerances) -> Result<PolycycleAnalysis> {
    let (_, legs) = corner_legs(model, mu)?;
    let poly = model.polygon()?;
    let mut corners = Vec::with_capacity(legs.len());
    for (i, leg) in legs.iter().enumerate() {
        let data = dulac_data(&leg.chart, &leg.sections, &tol.quad).map_err(|e| e.in_stage(&format!("corner {} coefficients", i + 1)))?;
        let ex = data.expansion;
        corners.push(CornerReport {
            index: i + 1,
            point: poly.corner(i),
            lambda: ex.lambda,
            delta00: ex.delta00,
            s1: ex.s1,
            s2: ex.s2,
            l1: data.l1,
            l2: data.l2,
            h_in: leg.sections.sigma(1, 2, 0),
            h_out: leg.sections.sigma(2, 1, 0),
            expansion: ex,
        });
    }
    let spec = PolycycleSpec::new(corners.iter().map(|c| c.expansion.clone()).collect())?;
    let rotations = Rotations {
        below_above: spec.find_rotation(|p| matches!(p, BlockPattern::BelowAbove { .. })),
        above_below: spec.find_rotation(|p| matches!(p, BlockPattern::AboveBelow { .. })),
    };
    expansions(mu, corners, spec, rotations)
}

fn expansions(mu: &[f64], corners: Vec<CornerReport>, spec: PolycycleSpec, rot: Rotations) -> Result<PolycycleAnalysis> {
    let return_map = return_expansion(&spec).map_err(|e| e.in_stage("return expansion"))?;
    let below_above = match rot.below_above {
        Some(k) => Some(Rotated {
            rotation: k,
            value: return_expansion(&spec.rotated(k)).map_err(|e| e.in_stage("return expansion"))?,
        }),
        None => None,
    };
    let displacement = match rot.above_below {
        Some(k) => Some(Rotated {
            rotation: k,
            value: displacement_expansion(&spec.rotated(k)).map_err(|e| e.in_stage("displacement expansion"))?,
        }),
        None => None,
    };
    Ok(PolycycleAnalysis {
        mu: mu.to_vec(),
        r: spec.graphic_number(),
        corners,
        spec,
        return_map,
        below_above,
        displacement,
    })
}

impl PolycycleAnalysis {
    pub fn rotations(&self) -> Rotations {
        Rotations {
            below_above: self.below_above.as_ref().map(|r| r.rotation),
            above_below: self.displacement.as_ref().map(|r| r.rotation),
        }
    }

    /// `r − 1`, `A₁,ₙ − 1` (in the below-then-above labeling when there is
    /// one), `𝒜` and `Ψ`.
    pub fn quantities(&self) -> Result<ConditionQuantities> {
        let n = self.spec.n();
        let base = self.below_above.as_ref().map_or(0, |r| r.rotation);
        let spec = self.spec.rotated(base);
        let a = a_product(&spec, 1, n)?;
        let mut scales = [1.0, a.abs().max(1.0), 1.0, 1.0, 1.0, 1.0];
        let script_a = self.below_above.as_ref().and_then(|r| r.value.script_a());
        if let (Some(_), BlockPattern::BelowAbove { m }) = (script_a, spec.block_pattern()) {
            let s1 = spec.corner(m + 1)?.s1_value().unwrap_or(0.0);
            let s2 = spec.corner(m)?.s2_value().unwrap_or(0.0);
            scales[2] = lambda_product(&spec, m, n)? * a_product(&spec, 1, m)? * a * s1.abs().max(s2.abs());
        }
        if let Some(d) = &self.displacement {
            let d = &d.value;
            let s2 = self.spec.rotated(self.displacement.as_ref().map_or(0, |r| r.rotation)).corner(n)?.s2_value().unwrap_or(0.0);
            scales[3] = d.a1m.abs() * d.lambda_0m.max(d.lambda_mn_inv);
            scales[4] = d.a1m.abs().max(d.a_star.abs());
            scales[5] = d.a_star.abs() * d.u1.abs().max((d.lambda_mn_inv * s2).abs());
        }
        for s in scales.iter_mut() {
            *s = s.max(1.0);
        }
        Ok(ConditionQuantities {
            r_minus_1: self.r - 1.0,
            a_minus_1: a - 1.0,
            script_a,
            psi: self.displacement.as_ref().map(|d| d.value.psi()),
            scales,
        })
    }
}

/// Condition quantities at `mu` with the labelings fixed to `rot`, so that
/// nearby parameter points are compared in the same corner order.
pub fn quantities_at(model: &Model, mu: &[f64], tol: &Tolerances, rot: Rotations) -> Result<ConditionQuantities> {
    let a = analyze(model, mu, tol)?;
    if a.rotations() == rot {
        return a.quantities();
    }
    let fixed = expansions(mu, a.corners, a.spec, rot)?;
    fixed.quantities()
}

/// Condition quantities at each point, evaluated in parallel and returned in
/// input order. With `rot` set every point uses those labelings.
pub fn scan_quantities(
    model: &Model,
    points: &[Vec<f64>],
    tol: &Tolerances,
    rot: Option<Rotations>,
) -> Vec<Result<ConditionQuantities>> {
    points
        .par_iter()
        .map(|mu| match rot {
            Some(rot) => quantities_at(model, mu, tol, rot),
            None => analyze(model, mu, tol)?.quantities(),
        })
        .collect()
}
