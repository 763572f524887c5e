use std::collections::HashMap;

use polycycle::calculus::{a_product, compensator, compose_chain, compose_pair, inverse_dulac, PolycycleSpec};
use polycycle::cyclicity::{combine, independence_rank, Bound, Condition};
use polycycle::expr::{instantiate, parse_expression};
use polycycle::flow::{numeric_dulac, OdeTolerance};
use polycycle::oracle::loglog_slope;
use polycycle::poly::BivariatePolynomial as BP;
use polycycle::quad::QuadTolerance;
use polycycle::saddle::{dulac_coefficients, mellin_hat, normalize_saddle, LocalChart, SectionPair, TaylorFunction};
use polycycle::series::{gbt_coefficient, ps_exp, ps_log};
use polycycle::{DulacExpansion, NextTerm, PlanarField, PowerSeries};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn lambda_off_one() -> impl Strategy<Value = f64> {
    prop_oneof![0.25..0.9f64, 1.1..2.8f64]
}

fn expansion() -> impl Strategy<Value = DulacExpansion> {
    (lambda_off_one(), 0.2..5.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_map(|(l, d, s1, s2)| DulacExpansion::from_saddle(l, d, Some(s1), Some(s2)))
}

/// `u̇ = u(1 + a u + b v)`, `v̇ = v(−λ + c u + d v)` at the origin.
fn quadratic_chart(lambda: f64, [a, b, c, d]: [f64; 4]) -> LocalChart {
    let dx = BP::from_terms([((1, 0), 1.0), ((2, 0), a), ((1, 1), b)]);
    let dy = BP::from_terms([((0, 1), -lambda), ((1, 1), c), ((0, 2), d)]);
    normalize_saddle(&PlanarField::new(dx, dy), [0.0, 0.0], [0.0, 1.0], [1.0, 0.0]).unwrap()
}

fn small_quadratic() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-0.4..0.4f64)
}

/// Random polynomial in `x`, `y` and a parameter `a`, as source text.
fn poly_text() -> impl Strategy<Value = String> {
    prop::collection::vec((-9i32..=9, 0u32..3, 0u32..3, 0u32..2), 1..5).prop_map(|terms| {
        terms
            .iter()
            .map(|(c, i, j, k)| format!("({c})*x^{i}*y^{j}*a^{k}"))
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

fn poly_of(text: &str, a: f64) -> BP {
    let e = parse_expression(text, &["a"]).unwrap();
    instantiate(&e, &HashMap::from([("a".to_string(), a)])).unwrap()
}

fn bound() -> impl Strategy<Value = Bound> {
    prop_oneof![
        (0u32..4).prop_map(Bound::Exactly),
        (0u32..4).prop_map(Bound::AtLeast),
        (0u32..4).prop_map(Bound::AtMost),
    ]
}

fn fired(bound: Bound, k: usize) -> Condition {
    Condition {
        item: format!("item{k}"),
        hypothesis: String::new(),
        quantities: Vec::new(),
        holds: true,
        bound,
        note: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_undoes_log(f0 in 0.5..2.0f64, rest in prop::collection::vec(-0.5..0.5f64, 0..12)) {
        let mut c = vec![f0];
        c.extend(rest);
        let order = c.len() - 1;
        let f = PowerSeries::new(&c, order);
        let back = ps_exp(&ps_log(&f).unwrap());
        for k in 0..=order {
            prop_assert!((back.coeff(k) - f.coeff(k)).abs() <= 1e-12, "k = {k}: {} vs {}", back.coeff(k), f.coeff(k));
        }
    }

    #[test]
    fn binomial_partial_sums(which in 0usize..3, t in -0.25..0.25f64, k_max in 4u32..24) {
        let alpha = [0.5, -0.5, 5.0 / 3.0][which];
        let sum: f64 = (0..=k_max).map(|k| gbt_coefficient(alpha, k) * t.powi(k as i32)).sum();
        // Every coefficient is at most 5/3 in size for these exponents.
        let tail = 5.0 / 3.0 * t.abs().powi(k_max as i32 + 1) / (1.0 - t.abs());
        prop_assert!((sum - (1.0 + t).powf(alpha)).abs() <= tail + 1e-15);
    }

    #[test]
    fn instantiate_is_additive(e1 in poly_text(), e2 in poly_text(), a in -2.0..2.0f64) {
        let sum = poly_of(&format!("({e1}) + ({e2})"), a);
        let diff = poly_of(&format!("({e1}) - ({e2})"), a);
        let (p1, p2) = (poly_of(&e1, a), poly_of(&e2, a));
        let scale = p1.max_abs_coefficient().max(p2.max_abs_coefficient()).max(1.0);
        prop_assert!((&sum - &(&p1 + &p2)).max_abs_coefficient() <= 1e-12 * scale);
        prop_assert!((&diff - &(&p1 - &p2)).max_abs_coefficient() <= 1e-12 * scale);
    }

    #[test]
    fn printing_round_trips(text in poly_text(), a in -2.0..2.0f64) {
        let e = parse_expression(&text, &["a"]).unwrap();
        let again = parse_expression(&e.to_string(), &["a"]).unwrap();
        prop_assert_eq!(&again, &e);
        prop_assert!((&poly_of(&text, a) - &poly_of(&e.to_string(), a)).max_abs_coefficient() <= 1e-12);
    }

    #[test]
    fn incomplete_mellin_solves_its_equation(
        coeffs in prop::collection::vec(-1.0..1.0f64, 1..7),
        which in 0usize..3,
        x in 0.2..1.5f64,
        radius in prop_oneof![Just(f64::INFINITY), Just(1.0)],
    ) {
        let alpha = [0.3, 1.6, 2.7][which];
        let c = coeffs.clone();
        let mut taylor = coeffs.clone();
        taylor.resize(32, 0.0);
        let f = TaylorFunction {
            coeffs: taylor,
            f: move |x: f64| c.iter().rev().fold(0.0, |acc, a| acc * x + a),
            radius,
        };
        let tol = QuadTolerance::default();
        let hat = |x: f64| mellin_hat(&f, alpha, x, &tol).unwrap();
        let h = 1e-4 * x;
        let derivative = (hat(x + h) - hat(x - h)) / (2.0 * h);
        let fx = coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a);
        let scale = fx.abs().max(hat(x).abs()).max(1.0);
        prop_assert!((x * derivative - alpha * hat(x) - fx).abs() <= 1e-7 * scale);
    }

    #[test]
    fn compensator_derivative(s in 0.1..1.0f64, alpha in -0.5..0.5f64) {
        let h = 1e-5 * s;
        let fd = (compensator(s + h, alpha) - compensator(s - h, alpha)) / (2.0 * h);
        prop_assert!(rel(fd, -s.powf(-alpha - 1.0)) <= 1e-6);
    }

    #[test]
    fn compensator_tends_to_log(s in 1e-6..1.0f64, alpha in -0.5..0.5f64) {
        let ln = s.ln();
        prop_assume!((alpha * ln).abs() <= 0.5);
        prop_assert!((compensator(s, alpha) + ln).abs() <= alpha.abs() * ln * ln + 1e-15);
    }

    #[test]
    fn composition_is_associative_at_leading_order(d1 in expansion(), d2 in expansion(), d3 in expansion()) {
        let spec = PolycycleSpec::new(vec![d1.clone(), d2.clone(), d3.clone()]).unwrap();
        let chain = compose_chain(&[d1.clone(), d2.clone(), d3.clone()]).unwrap();
        let other = compose_pair(&d1, &compose_pair(&d2, &d3));
        let a = a_product(&spec, 1, 3).unwrap();
        prop_assert!(rel(chain.delta00, a) <= 1e-12);
        prop_assert!(rel(other.delta00, a) <= 1e-12);
        prop_assert!(rel(chain.lambda, d1.lambda * d2.lambda * d3.lambda) <= 1e-15);
    }

    #[test]
    fn composed_remainder_intervals_shrink(d1 in expansion(), d2 in expansion()) {
        let c = compose_pair(&d1, &d2);
        prop_assert!(c.ell.is_nonempty());
        prop_assert!(c.ell.hi <= d1.ell.hi);
        prop_assert!(c.ell.hi <= d1.lambda * d2.ell.hi + 1e-15);
        if let Some((e, _)) = c.second_term() {
            prop_assert!(c.ell.lo <= e && e < c.ell.hi);
        }
    }

    #[test]
    fn binomial_remainder_decays(b in 0.5..2.0f64, a in -1.0..1.0f64, eta in -2.0..2.0f64, lambda in 0.3..1.5f64) {
        prop_assume!(a.abs() > 0.05 && eta.abs() > 0.05);
        // Sample where s^λ is small whatever λ is.
        let pts: Vec<(f64, f64)> = polycycle::flow::log_grid(1e-5, 1e-3, 12)
            .into_iter()
            .map(|t| {
                let s = t.powf(1.0 / lambda);
                let exact = (b + a * t).powf(eta);
                let linear = b.powf(eta) + eta * b.powf(eta - 1.0) * a * t;
                (s, (exact - linear) / t)
            })
            .filter(|p| p.1 != 0.0)
            .collect();
        prop_assume!(pts.len() >= 8);
        prop_assert!(loglog_slope(&pts) >= lambda - 1e-2);
    }

    #[test]
    fn verdicts_are_monotone(base in prop::collection::vec(bound(), 0..5), extra in bound()) {
        let conds: Vec<Condition> = base.iter().enumerate().map(|(k, b)| fired(*b, k)).collect();
        let before = combine(conds.clone());
        let mut more = conds;
        more.push(fired(extra, 99));
        let after = combine(more);
        prop_assert!(after.lower >= before.lower);
        match (before.upper, after.upper) {
            (Some(b), Some(a)) => prop_assert!(a <= b),
            (Some(_), None) => prop_assert!(false, "an added item removed the upper bound"),
            _ => {}
        }
    }

    #[test]
    fn rank_ignores_positive_rescaling(
        rows in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 5), 1..4),
        scales in prop::collection::vec(0.01..100.0f64, 4),
        dependent in any::<bool>(),
    ) {
        let mut rows = rows;
        if dependent && rows.len() > 1 {
            let copy: Vec<f64> = rows[0].iter().map(|v| 2.0 * v).collect();
            let last = rows.len() - 1;
            rows[last] = copy;
        }
        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .zip(&scales)
            .map(|(r, c)| r.iter().map(|v| v * c).collect())
            .collect();
        prop_assert_eq!(independence_rank(&rows).0, independence_rank(&scaled).0);
    }
}

fn inverse_cancels(d: DulacExpansion) -> Result<(), TestCaseError> {
    let inv = inverse_dulac(&d).unwrap();
    for c in [compose_pair(&d, &inv), compose_pair(&inv, &d)] {
        prop_assert!((c.lambda - 1.0).abs() <= 1e-12);
        prop_assert!((c.delta00 - 1.0).abs() <= 1e-12);
        let second = match c.next {
            NextTerm::Compensated { linear, self_power } => linear + self_power,
            NextTerm::Linear { coefficient } | NextTerm::SelfPower { coefficient } => coefficient,
            NextTerm::Monomial { coefficient, .. } => coefficient,
            NextTerm::LeadingOnly => f64::NAN,
        };
        let size = d.second_term().map_or(1.0, |t| t.1.abs()).max(1.0);
        prop_assert!(second.abs() <= 1e-10 * size, "{:?}", c.next);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn inverse_cancels_below_one(l in 0.25..0.9f64, d in 0.2..5.0f64, s2 in -2.0..2.0f64) {
        inverse_cancels(DulacExpansion::from_saddle(l, d, None, Some(s2)))?;
    }

    #[test]
    fn inverse_cancels_above_one(l in 1.1..2.8f64, d in 0.2..5.0f64, s1 in -2.0..2.0f64) {
        inverse_cancels(DulacExpansion::from_saddle(l, d, Some(s1), None))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rescaled_entry_section_scales_the_leading_coefficient(
        lambda in lambda_off_one(),
        coeffs in small_quadratic(),
        c in 0.5..2.0f64,
    ) {
        let chart = quadratic_chart(lambda, coeffs);
        let sec = SectionPair::straight(0.5, 0.5);
        let tol = QuadTolerance::default();
        let d = dulac_coefficients(&chart, &sec, &tol).unwrap();
        let scaled = dulac_coefficients(&chart, &sec.with_entry_rescaled(c), &tol).unwrap();
        prop_assert!(rel(scaled.delta00 / d.delta00, c.powf(lambda)) <= 1e-10);
    }

    #[test]
    fn reversed_flow_inverts_the_passage(
        lambda in lambda_off_one(),
        coeffs in small_quadratic(),
        s in 1e-4..1e-1f64,
    ) {
        let chart = quadratic_chart(lambda, coeffs);
        let sec = SectionPair::straight(0.5, 0.5);
        let tol = OdeTolerance::default();
        let forward = numeric_dulac(&chart, &sec, s, &tol).unwrap();
        let back = numeric_dulac(&chart.reversed(), &sec.reversed(), forward, &tol).unwrap();
        prop_assert!(rel(back, s) <= 1e-7, "{back} vs {s}");
    }
}
