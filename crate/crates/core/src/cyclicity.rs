//! Cyclicity verdicts from the conditions on `r`, `A₁,ₙ`, `𝒜` and `Ψ`.

use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, polycycle_return, quantities_at, ConditionQuantities, PolycycleAnalysis, Rotations};
use crate::error::{Error, Result};
use crate::flow::{log_grid, ReturnMap};
use crate::linalg::singular_values;
use crate::model::Model;
use crate::tolerances::Tolerances;

/// How parameter independence is established.
pub const INDEPENDENCE_LABEL: &str = "sufficient-condition";

/// Names of the quantities in [`ConditionQuantities::to_vec`] order.
pub const QUANTITY_NAMES: [&str; 6] = ["r-1", "A-1", "script_A", "psi1", "psi2", "psi3"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jacobian {
    /// One gradient per function, each with one entry per parameter.
    pub rows: Vec<Vec<f64>>,
    /// Largest relative change of each gradient between steps `h` and `h/2`.
    pub disagreement: Vec<f64>,
    pub certified: Vec<bool>,
}

fn central(
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    mu: &[f64],
    i: usize,
    step: f64,
) -> Result<Vec<f64>> {
    let mut plus = mu.to_vec();
    let mut minus = mu.to_vec();
    plus[i] += step;
    minus[i] -= step;
    let (fp, fm) = (f(&plus)?, f(&minus)?);
    Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * step)).collect())
}

/// Central-difference gradients with steps `h·max(|μᵢ|, 1)`, checked against
/// the same differences at half the step.
pub fn jacobian(
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    mu: &[f64],
    h: f64,
    richardson: f64,
) -> Result<Jacobian> {
    let mut cols = Vec::with_capacity(mu.len());
    let mut half = Vec::with_capacity(mu.len());
    for i in 0..mu.len() {
        let step = h * mu[i].abs().max(1.0);
        cols.push(central(f, mu, i, step)?);
        half.push(central(f, mu, i, step / 2.0)?);
    }
    let m = cols.first().map_or(0, Vec::len);
    let mut rows = vec![vec![0.0; mu.len()]; m];
    let mut disagreement = vec![0.0; m];
    for k in 0..m {
        let norm = (0..mu.len()).map(|i| half[i][k].abs()).fold(0.0, f64::max);
        let mut worst = 0.0f64;
        for i in 0..mu.len() {
            rows[k][i] = cols[i][k];
            let d = (cols[i][k] - half[i][k]).abs();
            worst = worst.max(if norm > 0.0 { d / norm } else { d });
        }
        disagreement[k] = worst;
    }
    let certified = disagreement.iter().map(|&d| d <= richardson).collect();
    Ok(Jacobian {
        rows,
        disagreement,
        certified,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub functions: Vec<String>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub certified: bool,
}

/// Numerical rank with threshold `max(m, n)·ε·σ_max·10³`.
pub fn independence_rank(rows: &[Vec<f64>]) -> (usize, Vec<f64>, f64) {
    if rows.is_empty() || rows[0].is_empty() {
        return (0, Vec::new(), 0.0);
    }
    let sv = singular_values(rows);
    let smax = sv.first().copied().unwrap_or(0.0);
    let dim = rows.len().max(rows[0].len()) as f64;
    let threshold = dim * f64::EPSILON * smax * 1e3;
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    (rank, sv, threshold)
}

/// Parameter points on both sides of `mu` along the gradient at which `f`
/// takes opposite signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub f_plus: f64,
    pub f_minus: f64,
}

pub fn sign_change_witness(
    f: &dyn Fn(&[f64]) -> Result<f64>,
    mu: &[f64],
    grad: &[f64],
    radius: f64,
) -> Result<Option<Witness>> {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Ok(None);
    }
    let shift = |sign: f64| -> Vec<f64> {
        mu.iter()
            .zip(grad)
            .map(|(m, g)| m + sign * radius * g / norm)
            .collect()
    };
    let (plus, minus) = (shift(1.0), shift(-1.0));
    let (f_plus, f_minus) = (f(&plus)?, f(&minus)?);
    Ok((f_plus * f_minus < 0.0).then_some(Witness {
        plus,
        minus,
        f_plus,
        f_minus,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NotIdentityEvidence {
    /// `|R(s) − s|` exceeds ten times the integration tolerance at `s`.
    Numeric { s: f64, displacement: f64 },
    /// A nonzero expansion coefficient rules out `R ≡ id`.
    Analytic { quantity: String, value: f64 },
    Inconclusive { reason: String },
}

impl NotIdentityEvidence {
    pub fn established(&self) -> bool {
        !matches!(self, NotIdentityEvidence::Inconclusive { .. })
    }
}

/// Sample points for the identity probe.
pub fn probe_samples() -> Vec<f64> {
    log_grid(1e-3, 1e-1, 9)
}

/// First sample where the return map visibly moves points.
pub fn not_identity_probe(map: &dyn ReturnMap, samples: &[f64]) -> NotIdentityEvidence {
    let tol = map.tolerance();
    let mut failures = 0;
    for &s in samples {
        match map.eval(s) {
            Ok(r) => {
                let d = r - s;
                if d.abs() > 10.0 * (tol.abs + tol.rel * s) {
                    return NotIdentityEvidence::Numeric { s, displacement: d };
                }
            }
            Err(_) => failures += 1,
        }
    }
    NotIdentityEvidence::Inconclusive {
        reason: format!(
            "|R(s) − s| stayed within ten integration tolerances at all {} samples ({failures} failed)",
            samples.len()
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Bound {
    Exactly(u32),
    AtLeast(u32),
    AtMost(u32),
}

impl Bound {
    fn lower(self) -> Option<u32> {
        match self {
            Bound::Exactly(k) | Bound::AtLeast(k) => Some(k),
            Bound::AtMost(_) => None,
        }
    }

    fn upper(self) -> Option<u32> {
        match self {
            Bound::Exactly(k) | Bound::AtMost(k) => Some(k),
            Bound::AtLeast(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub item: String,
    pub hypothesis: String,
    pub quantities: Vec<(String, f64)>,
    pub holds: bool,
    pub bound: Bound,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub lower: u32,
    /// `None` when no condition bounds the cyclicity from above.
    pub upper: Option<u32>,
    pub lower_from: Vec<String>,
    pub upper_from: Vec<String>,
    /// False when the bounds cross, which signals a numerical problem.
    pub consistent: bool,
    pub independence: String,
    pub conditions: Vec<Condition>,
}

/// Largest lower bound and smallest upper bound over the conditions that hold.
pub fn combine(conditions: Vec<Condition>) -> Verdict {
    let holding = || conditions.iter().filter(|c| c.holds);
    let lower = holding().filter_map(|c| c.bound.lower()).max().unwrap_or(0);
    let upper = holding().filter_map(|c| c.bound.upper()).min();
    let lower_from = holding()
        .filter(|c| c.bound.lower() == Some(lower))
        .map(|c| c.item.clone())
        .collect();
    let upper_from = holding()
        .filter(|c| upper.is_some() && c.bound.upper() == upper)
        .map(|c| c.item.clone())
        .collect();
    Verdict {
        lower,
        upper,
        lower_from,
        upper_from,
        consistent: upper.map_or(true, |u| lower <= u),
        independence: INDEPENDENCE_LABEL.to_string(),
        conditions,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub analysis: PolycycleAnalysis,
    pub quantities: ConditionQuantities,
    pub jacobian: Jacobian,
    pub ranks: Vec<RankReport>,
    pub not_identity: NotIdentityEvidence,
    pub verdict: Verdict,
}

struct Ctx<'a> {
    values: Vec<f64>,
    scales: [f64; 6],
    zero: f64,
    jac: &'a Jacobian,
}

impl Ctx<'_> {
    fn available(&self, k: usize) -> bool {
        !self.values[k].is_nan()
    }
    fn is_zero(&self, k: usize) -> bool {
        self.available(k) && self.values[k].abs() <= self.zero * self.scales[k]
    }
    fn nonzero(&self, k: usize) -> bool {
        self.available(k) && !self.is_zero(k)
    }
    fn named(&self, ks: &[usize]) -> Vec<(String, f64)> {
        ks.iter()
            .filter(|&&k| self.available(k))
            .map(|&k| (QUANTITY_NAMES[k].to_string(), self.values[k]))
            .collect()
    }
    fn rank(&self, ks: &[usize]) -> RankReport {
        let rows: Vec<Vec<f64>> = ks.iter().map(|&k| self.jac.rows[k].clone()).collect();
        let usable = ks.iter().all(|&k| self.available(k));
        let (rank, singular_values, threshold) = if usable {
            independence_rank(&rows)
        } else {
            (0, Vec::new(), 0.0)
        };
        RankReport {
            functions: ks.iter().map(|&k| QUANTITY_NAMES[k].to_string()).collect(),
            rank,
            singular_values,
            threshold,
            certified: usable && ks.iter().all(|&k| self.jac.certified[k]),
        }
    }
}

fn condition(item: &str, hypothesis: &str, quantities: Vec<(String, f64)>, holds: bool, bound: Bound) -> Condition {
    Condition {
        item: item.into(),
        hypothesis: hypothesis.into(),
        quantities,
        holds,
        bound,
        note: None,
    }
}

fn full_rank(r: &RankReport, want: usize) -> bool {
    r.certified && r.rank == want
}

fn rank_note(r: &RankReport) -> Option<String> {
    (!r.certified).then(|| {
        format!(
            "gradients of {} are not certified by the step-halving check",
            r.functions.join(", ")
        )
    })
}

/// Evaluate every condition at `mu` and combine them into a verdict.
pub fn assess(model: &Model, mu: &[f64], tol: &Tolerances) -> Result<Assessment> {
    let analysis = analyze(model, mu, tol)?;
    let q = analysis.quantities()?;
    let rot: Rotations = analysis.rotations();
    let f = |p: &[f64]| -> Result<Vec<f64>> { Ok(quantities_at(model, p, tol, rot)?.to_vec()) };
    let jac = jacobian(&f, mu, tol.gradient_step, tol.richardson).map_err(|e| e.in_stage("gradients"))?;
    let ctx = Ctx {
        values: q.to_vec(),
        scales: q.scales,
        zero: tol.zero,
        jac: &jac,
    };

    let returns = polycycle_return(model, mu, tol)?;
    let mut not_identity = not_identity_probe(&returns, &probe_samples());
    if !not_identity.established() {
        if let Some(k) = [2, 5].into_iter().find(|&k| ctx.nonzero(k)) {
            not_identity = NotIdentityEvidence::Analytic {
                quantity: QUANTITY_NAMES[k].to_string(),
                value: ctx.values[k],
            };
        }
    }
    let moves = not_identity.established();
    let radius = tol.probe_radius * mu.iter().map(|m| m * m).sum::<f64>().sqrt().max(1.0);
    let witness = |k: usize| -> Result<Option<Witness>> {
        let g = |p: &[f64]| -> Result<f64> { Ok(quantities_at(model, p, tol, rot)?.to_vec()[k]) };
        sign_change_witness(&g, mu, &jac.rows[k], radius)
    };

    let rank_a = ctx.rank(&[0, 1]);
    let rank_b = ctx.rank(&[0, 1, 2]);
    let rank_c2 = ctx.rank(&[3, 4]);
    let rank_c3 = ctx.rank(&[3, 4, 5]);
    let mut conds = Vec::new();

    conds.push(condition("A(a)", "r ≠ 1", ctx.named(&[0]), ctx.nonzero(0), Bound::Exactly(0)));
    let mut c = condition(
        "A(b)",
        "r = 1, r − 1 changes sign nearby, R ≢ id",
        ctx.named(&[0]),
        false,
        Bound::AtLeast(1),
    );
    if ctx.is_zero(0) && moves {
        match witness(0)? {
            Some(w) => {
                c.holds = true;
                c.note = Some(format!("r − 1 = {:e} and {:e} on either side", w.f_plus, w.f_minus));
            }
            None => c.note = Some("no sign change of r − 1 found along its gradient".into()),
        }
    }
    conds.push(c);
    conds.push(condition("A(c)", "A₁,ₙ ≠ 1", ctx.named(&[1]), ctx.nonzero(1), Bound::AtMost(1)));
    let mut c = condition(
        "A(d)",
        "r = A₁,ₙ = 1, r − 1 and A₁,ₙ − 1 independent, R ≢ id",
        ctx.named(&[0, 1]),
        ctx.is_zero(0) && ctx.is_zero(1) && full_rank(&rank_a, 2) && moves,
        Bound::AtLeast(2),
    );
    c.note = rank_note(&rank_a);
    conds.push(c);
    if ctx.available(2) {
        conds.push(condition("B(a)", "𝒜 ≠ 0", ctx.named(&[2]), ctx.nonzero(2), Bound::AtMost(2)));
        let mut c = condition(
            "B(b)",
            "r = A₁,ₙ = 1, 𝒜 = 0, r − 1, A₁,ₙ − 1 and 𝒜 independent, R ≢ id",
            ctx.named(&[0, 1, 2]),
            ctx.is_zero(0) && ctx.is_zero(1) && ctx.is_zero(2) && full_rank(&rank_b, 3) && moves,
            Bound::AtLeast(3),
        );
        c.note = rank_note(&rank_b);
        conds.push(c);
    }
    if ctx.available(3) {
        conds.push(condition("C(a)", "Ψ₁ ≠ 0", ctx.named(&[3]), ctx.nonzero(3), Bound::Exactly(0)));
        let mut c = condition("C(b)", "Ψ₁ = 0 and Ψ₁ changes sign nearby", ctx.named(&[3]), false, Bound::AtLeast(1));
        if ctx.is_zero(3) {
            match witness(3)? {
                Some(w) => {
                    c.holds = true;
                    c.note = Some(format!("Ψ₁ = {:e} and {:e} on either side", w.f_plus, w.f_minus));
                }
                None => c.note = Some("no sign change of Ψ₁ found along its gradient".into()),
            }
        }
        conds.push(c);
        conds.push(condition("C(c)", "Ψ₂ ≠ 0", ctx.named(&[4]), ctx.nonzero(4), Bound::AtMost(1)));
        let mut c = condition(
            "C(d)",
            "Ψ₁ = Ψ₂ = 0, Ψ₁ and Ψ₂ independent",
            ctx.named(&[3, 4]),
            ctx.is_zero(3) && ctx.is_zero(4) && full_rank(&rank_c2, 2),
            Bound::AtLeast(2),
        );
        c.note = rank_note(&rank_c2);
        conds.push(c);
        conds.push(condition("C(e)", "Ψ₃ ≠ 0", ctx.named(&[5]), ctx.nonzero(5), Bound::AtMost(2)));
        let mut c = condition(
            "C(f)",
            "Ψ₁ = Ψ₂ = Ψ₃ = 0, Ψ₁, Ψ₂ and Ψ₃ independent",
            ctx.named(&[3, 4, 5]),
            ctx.is_zero(3) && ctx.is_zero(4) && ctx.is_zero(5) && full_rank(&rank_c3, 3),
            Bound::AtLeast(3),
        );
        c.note = rank_note(&rank_c3);
        conds.push(c);
    }
    let verdict = combine(conds);
    if !verdict.consistent {
        return Err(Error::Invalid(format!(
            "conditions give lower bound {} above upper bound {:?}",
            verdict.lower, verdict.upper
        )));
    }
    let mut ranks = vec![rank_a];
    if ctx.available(2) {
        ranks.push(rank_b);
    }
    if ctx.available(3) {
        ranks.push(rank_c2);
        ranks.push(rank_c3);
    }
    Ok(Assessment {
        analysis,
        quantities: q,
        jacobian: jac,
        ranks,
        not_identity,
        verdict,
    })
}
