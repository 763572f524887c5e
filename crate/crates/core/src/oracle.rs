//! Checks of the closed-form calculus against direct numerics: composed
//! truncations for the composition rules, and integration for corner and
//! return maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, corner_legs, polycycle_return};
use crate::calculus::{compose_pair, inverse_dulac, second_order_candidates, upsilon0};
use crate::error::{Error, Result};
use crate::expansion::{DulacExpansion, NextTerm};
use crate::flow::{dulac_basis, fit_expansion, log_grid, numeric_dulac, FitReport, ReturnMap};
use crate::linalg::least_squares;
use crate::model::Model;
use crate::tolerances::Tolerances;

pub const LEADING_TOL: f64 = 1e-10;
pub const SECOND_TOL: f64 = 1e-8;

/// Degree of the regression polynomial in `s^x`.
const DEGREE: usize = 8;
const GRID_POINTS: usize = 120;
/// Range of `s^x` covered by the regression grid.
const GRID_RANGE: (f64, f64) = (1e-12, 1e-2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckCase {
    Leading,
    AboveAbove,
    BelowBelow,
    AboveBelow,
    BelowAbove,
    InverseBelow,
    InverseAbove,
}

pub const ALL_CASES: [CheckCase; 7] = [
    CheckCase::Leading,
    CheckCase::AboveAbove,
    CheckCase::BelowBelow,
    CheckCase::AboveBelow,
    CheckCase::BelowAbove,
    CheckCase::InverseBelow,
    CheckCase::InverseAbove,
];

/// Deliberate damage applied to the formula side, to show the check bites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "factor", rename_all = "kebab-case")]
pub enum Corruption {
    None,
    Leading(f64),
    Second(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermCheck {
    pub exponent: f64,
    pub formula: f64,
    pub fitted: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub index: usize,
    pub inputs: Vec<DulacExpansion>,
    pub leading: TermCheck,
    pub second: Vec<TermCheck>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub case: CheckCase,
    pub count: usize,
    pub failures: usize,
    pub worst_leading: f64,
    pub worst_second: f64,
    pub failed: Vec<CaseResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposeCheck {
    pub seed: u64,
    pub leading_tolerance: f64,
    pub second_tolerance: f64,
    pub cases: Vec<CaseSummary>,
}

impl ComposeCheck {
    pub fn pass(&self) -> bool {
        self.cases.iter().all(|c| c.failures == 0)
    }
}

/// `s^λ(a + c s^e)`, evaluated through logarithms.
#[derive(Debug, Clone, Copy)]
struct Truncation {
    lambda: f64,
    a: f64,
    c: f64,
    e: f64,
}

impl Truncation {
    fn of(d: &DulacExpansion) -> Self {
        let (e, c) = d.second_term().expect("sampled maps carry a monomial second term");
        Self {
            lambda: d.lambda,
            a: d.delta00,
            c,
            e,
        }
    }

    /// `ln d(s)` from `ln s`.
    fn ln_eval(&self, ln_s: f64) -> f64 {
        self.lambda * ln_s + (self.a + self.c * (self.e * ln_s).exp()).ln()
    }
}

fn sample_above(rng: &mut ChaCha8Rng) -> DulacExpansion {
    let l = rng.gen_range(1.1..3.5);
    let a = rng.gen_range(0.5..2.0);
    let c = signed(rng);
    DulacExpansion::from_coefficients(l, a, Some(c), None)
}

fn sample_below(rng: &mut ChaCha8Rng) -> DulacExpansion {
    let l = rng.gen_range(0.25..0.9);
    let a = rng.gen_range(0.5..2.0);
    let c = signed(rng);
    DulacExpansion::from_coefficients(l, a, None, Some(c))
}

fn signed(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.gen_range(0.5..2.0);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Coefficients of `g = Σₖ cₖ qᵏ`, `k ≤ DEGREE`, from samples at `ln q`.
fn regress(ln_q: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = ln_q
        .iter()
        .map(|&l| (0..=DEGREE).map(|k| (k as f64 * l).exp()).collect())
        .collect();
    least_squares(&rows, g)
}

/// `ln q` on a geometric grid over `GRID_RANGE`.
fn ln_grid() -> Vec<f64> {
    log_grid(GRID_RANGE.0, GRID_RANGE.1, GRID_POINTS)
        .into_iter()
        .map(f64::ln)
        .collect()
}

/// Coefficient of `s^{exponent}` in a series in `s^x`, shifted by `offset`.
fn coefficient_at(coef: &[f64], x: f64, offset: f64, exponent: f64) -> f64 {
    let k = (exponent - offset) / x;
    let kr = k.round();
    if kr >= 0.0 && (k - kr).abs() <= 1e-9 && (kr as usize) < coef.len() {
        coef[kr as usize]
    } else {
        0.0
    }
}

fn term(exponent: f64, formula: f64, fitted: f64, scale: f64) -> TermCheck {
    TermCheck {
        exponent,
        formula,
        fitted,
        relative_error: (formula - fitted).abs() / scale.abs().max(formula.abs()).max(f64::MIN_POSITIVE),
    }
}

fn corrupt(c: Corruption, leading: f64, second: f64) -> (f64, f64) {
    match c {
        Corruption::None => (leading, second),
        Corruption::Leading(f) => (leading * f, second),
        Corruption::Second(f) => (leading, second * f),
    }
}

fn composition_result(
    index: usize,
    case: CheckCase,
    d1: DulacExpansion,
    d2: DulacExpansion,
    corruption: Corruption,
) -> Result<CaseResult> {
    let (t1, t2) = (Truncation::of(&d1), Truncation::of(&d2));
    let lambda = d1.lambda * d2.lambda;
    let [(x1, from1), (x2, from2)] =
        second_order_candidates(&d1, &d2).ok_or_else(|| Error::Invalid("sampled maps need second terms".into()))?;
    // The truncated outer map is affine in its second coefficient, so the
    // composition splits into the part with c₂ = 0 and the c₂-derivative,
    // each a power series in s^{x₁}.
    let ln_q = ln_grid();
    let mut g0 = Vec::with_capacity(ln_q.len());
    let mut g1 = Vec::with_capacity(ln_q.len());
    for &lq in &ln_q {
        let l = lq / x1;
        let ln_y = t1.ln_eval(l);
        g0.push((t2.lambda * ln_y + t2.a.ln() - lambda * l).exp());
        g1.push(((t2.lambda + t2.e) * ln_y - (lambda + x2) * l).exp());
    }
    let (c0, c1) = (regress(&ln_q, &g0)?, regress(&ln_q, &g1)?);
    let fitted_at = |e: f64| coefficient_at(&c0, x1, 0.0, e) + t2.c * coefficient_at(&c1, x1, x2, e);
    let composed = compose_pair(&d1, &d2);
    let mut second = Vec::new();
    let lead_formula;
    if case == CheckCase::Leading {
        lead_formula = corrupt(corruption, upsilon0(&d1, &d2), 0.0).0;
    } else {
        lead_formula = corrupt(corruption, composed.delta00, 0.0).0;
        let scale = from1.abs().max(from2.abs());
        match (case, composed.next) {
            (CheckCase::AboveBelow, NextTerm::Compensated { linear, self_power }) => {
                let (_, sum) = corrupt(corruption, 0.0, linear + self_power);
                second.push(term(x1, sum, fitted_at(x1), scale));
            }
            (_, next) => {
                let (e, c) = match next {
                    NextTerm::Linear { coefficient } => (1.0, coefficient),
                    NextTerm::SelfPower { coefficient } => (composed.lambda, coefficient),
                    NextTerm::Monomial { exponent, coefficient } => (exponent, coefficient),
                    other => {
                        return Err(Error::Invalid(format!(
                            "unexpected next term {other:?} for {case:?}"
                        )))
                    }
                };
                let (_, c) = corrupt(corruption, 0.0, c);
                second.push(term(e, c, fitted_at(e), scale));
            }
        }
    }
    let leading = term(0.0, lead_formula, c0[0], lead_formula);
    let pass = leading.relative_error <= LEADING_TOL && second.iter().all(|t| t.relative_error <= SECOND_TOL);
    Ok(CaseResult {
        index,
        inputs: vec![d1, d2],
        leading,
        second,
        pass,
    })
}

fn inverse_result(index: usize, d: DulacExpansion, corruption: Corruption) -> Result<CaseResult> {
    let t = Truncation::of(&d);
    let inv = inverse_dulac(&d)?;
    let rho = inv.lambda;
    // s as a function of y = d(s) is y^ρ times a series in y^{ρe}.
    let x = rho * t.e;
    let ln_s: Vec<f64> = ln_grid().into_iter().map(|l| l / t.e).collect();
    let ln_y: Vec<f64> = ln_s.iter().map(|&l| t.ln_eval(l)).collect();
    let ln_q: Vec<f64> = ln_y.iter().map(|l| x * l).collect();
    let g: Vec<f64> = ln_s.iter().zip(&ln_y).map(|(ls, ly)| (ls - rho * ly).exp()).collect();
    let coef = regress(&ln_q, &g)?;
    let (e, c) = inv
        .second_term()
        .ok_or_else(|| Error::Invalid("inverse lost its second term".into()))?;
    let (lead, c) = corrupt(corruption, inv.delta00, c);
    let second = vec![term(e, c, coefficient_at(&coef, x, 0.0, e), c)];
    let leading = term(0.0, lead, coef[0], lead);
    let pass = leading.relative_error <= LEADING_TOL && second.iter().all(|t| t.relative_error <= SECOND_TOL);
    Ok(CaseResult {
        index,
        inputs: vec![d],
        leading,
        second,
        pass,
    })
}

fn draw(case: CheckCase, index: usize, rng: &mut ChaCha8Rng) -> (DulacExpansion, Option<DulacExpansion>) {
    match case {
        CheckCase::Leading => {
            let d1 = if rng.gen_bool(0.5) { sample_above(rng) } else { sample_below(rng) };
            let d2 = if rng.gen_bool(0.5) { sample_above(rng) } else { sample_below(rng) };
            (d1, Some(d2))
        }
        CheckCase::AboveAbove => (sample_above(rng), Some(sample_above(rng))),
        CheckCase::BelowBelow => (sample_below(rng), Some(sample_below(rng))),
        CheckCase::AboveBelow => {
            let d1 = sample_above(rng);
            let mut d2 = sample_below(rng);
            if index % 10 == 9 {
                d2 = DulacExpansion::from_coefficients(1.0 / d1.lambda, d2.delta00, None, d2.delta01());
            }
            (d1, Some(d2))
        }
        CheckCase::BelowAbove => (sample_below(rng), Some(sample_above(rng))),
        CheckCase::InverseBelow => (sample_below(rng), None),
        CheckCase::InverseAbove => (sample_above(rng), None),
    }
}

/// Run `count` random instances of each case from `seed`.
pub fn compose_check(seed: u64, count: usize, corruption: Corruption) -> Result<ComposeCheck> {
    let mut cases = Vec::new();
    for (k, case) in ALL_CASES.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let mut results = Vec::with_capacity(count);
        for index in 0..count {
            let (d1, d2) = draw(case, index, &mut rng);
            results.push(match d2 {
                Some(d2) => composition_result(index, case, d1, d2, corruption)?,
                None => inverse_result(index, d1, corruption)?,
            });
        }
        let worst_second = results
            .iter()
            .flat_map(|r| r.second.iter().map(|t| t.relative_error))
            .fold(0.0, f64::max);
        cases.push(CaseSummary {
            case,
            count,
            failures: results.iter().filter(|r| !r.pass).count(),
            worst_leading: results.iter().map(|r| r.leading.relative_error).fold(0.0, f64::max),
            worst_second,
            failed: results.into_iter().filter(|r| !r.pass).collect(),
        });
    }
    Ok(ComposeCheck {
        seed,
        leading_tolerance: LEADING_TOL,
        second_tolerance: SECOND_TOL,
        cases,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerCheck {
    pub corner: usize,
    pub expansion: DulacExpansion,
    pub samples: Vec<(f64, f64)>,
    /// Grid points whose integration failed, with the reason.
    pub failures: Vec<(f64, String)>,
    pub fit: FitReport,
    pub leading_relative_error: f64,
    pub second_relative_error: Option<f64>,
}

/// Fit integrated passages through corner `k` (1-based) and compare with
/// the closed-form coefficients.
pub fn corner_check(model: &Model, mu: &[f64], tol: &Tolerances, k: usize, grid: &[f64]) -> Result<CornerCheck> {
    let (_, legs) = corner_legs(model, mu)?;
    let n = legs.len();
    if k == 0 || k > n {
        return Err(Error::Usage(format!("corner {k} outside 1..={n}")));
    }
    let leg = &legs[k - 1];
    let analysis = analyze(model, mu, tol)?;
    let expansion = analysis.corners[k - 1].expansion.clone();
    let (samples, failures) = split(
        grid.par_iter()
            .map(|&s| (s, numeric_dulac(&leg.chart, &leg.sections, s, &tol.ode)))
            .collect(),
    );
    if samples.is_empty() {
        return Err(all_failed(&failures).in_stage(&format!("integrating corner {k}")));
    }
    let basis = dulac_basis(expansion.lambda, 2.0, 4);
    let fit = fit_expansion(&samples, expansion.lambda, &basis)?;
    let leading_relative_error = (fit.leading / expansion.delta00 - 1.0).abs();
    let second_relative_error = match (expansion.second_term(), &fit.second) {
        (Some((e, c)), Some(t)) if (t.exponent - e).abs() < 1e-12 => Some((t.coefficient - c).abs() / c.abs().max(1e-300)),
        _ => None,
    };
    Ok(CornerCheck {
        corner: k,
        expansion,
        samples,
        failures,
        fit,
        leading_relative_error,
        second_relative_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnRow {
    pub s: f64,
    pub numeric: f64,
    pub predicted: f64,
    /// `R(s)/s^r` minus the two-term bracket.
    pub bracket_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnCheck {
    pub r: f64,
    pub leading_exponent: f64,
    pub rows: Vec<ReturnRow>,
    pub failures: Vec<(f64, String)>,
    /// Log-log slope of `|R(s) − prediction|`.
    pub difference_slope: f64,
    /// Log-log slope of `|bracket residual|`.
    pub bracket_slope: f64,
}

pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 != 0.0)
        .map(|p| (p.0.ln(), p.1.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Integrated return map against the two-term expansion in listed order.
pub fn return_check(model: &Model, mu: &[f64], tol: &Tolerances, grid: &[f64]) -> Result<ReturnCheck> {
    let analysis = analyze(model, mu, tol)?;
    let map = polycycle_return(model, mu, tol)?;
    let ex = &analysis.return_map;
    let (numeric, failures) = split(grid.par_iter().map(|&s| (s, map.eval(s))).collect());
    if numeric.is_empty() {
        return Err(all_failed(&failures).in_stage("integrating the return map"));
    }
    let rows: Vec<ReturnRow> = numeric
        .iter()
        .map(|&(s, r)| ReturnRow {
            s,
            numeric: r,
            predicted: ex.eval_truncated(s),
            bracket_residual: r / s.powf(ex.r) - ex.bracket(s),
        })
        .collect();
    let leading_exponent = match ex.next {
        crate::calculus::ReturnNext::A { exponent, .. } => exponent,
        _ => ex.ell.lo,
    };
    Ok(ReturnCheck {
        r: ex.r,
        leading_exponent,
        difference_slope: loglog_slope(&rows.iter().map(|w| (w.s, w.numeric - w.predicted)).collect::<Vec<_>>()),
        bracket_slope: loglog_slope(&rows.iter().map(|w| (w.s, w.bracket_residual)).collect::<Vec<_>>()),
        rows,
        failures,
    })
}

fn split(results: Vec<(f64, Result<f64>)>) -> (Vec<(f64, f64)>, Vec<(f64, String)>) {
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for (s, r) in results {
        match r {
            Ok(v) => good.push((s, v)),
            Err(e) => bad.push((s, e.to_string())),
        }
    }
    (good, bad)
}

fn all_failed(failures: &[(f64, String)]) -> Error {
    match failures.first() {
        Some((s, e)) => Error::Integration(format!("all {} samples failed; at s = {s}: {e}", failures.len())),
        None => Error::Usage("empty sample grid".into()),
    }
}
