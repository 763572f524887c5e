use polycycle::analysis::{analyze, polycycle_return};
use polycycle::cyclicity::assess;
use polycycle::flow::{count_limit_cycles, log_grid};
use polycycle::oracle::{compose_check, corner_check, Corruption};
use polycycle::{Model, Tolerances};

const GAME: &str = include_str!("../../cli/examples/game.model");

fn game() -> (Model, Vec<f64>) {
    let m = Model::parse(GAME).unwrap();
    let mu = m.defaults.clone();
    (m, mu)
}

#[test]
fn corner_coefficients_are_positive_and_consistent() {
    let (m, mu) = game();
    let a = analyze(&m, &mu, &Tolerances::default()).unwrap();
    assert_eq!(a.corners.len(), 4);
    for c in &a.corners {
        assert!(c.delta00 > 0.0 && c.delta00.is_finite(), "corner {}: {}", c.index, c.delta00);
        let e = &c.expansion;
        if let (Some(s1), Some(d10)) = (e.s1, e.delta10()) {
            assert_eq!(d10, e.lambda * e.delta00 * s1);
        }
        if let (Some(s2), Some(d01)) = (e.s2, e.delta01()) {
            assert_eq!(d01, -e.delta00 * e.delta00 * s2);
        }
    }
    assert_eq!(a.spec.pattern_string(), "-+++");
}

#[test]
fn every_game_corner_matches_its_integrated_passage() {
    let (m, mu) = game();
    let tol = Tolerances::default();
    // Corner 3 has |S₁| ≈ 34, so the fit needs s well below 1e-2.
    let grid = log_grid(1e-8, 1e-4, 17);
    for k in 1..=4 {
        let c = corner_check(&m, &mu, &tol, k, &grid).unwrap();
        assert!(c.failures.is_empty());
        assert!(c.leading_relative_error < 1e-6, "corner {k}: {}", c.leading_relative_error);
        let second = c.second_relative_error.unwrap();
        assert!(second < 1e-2, "corner {k}: {second}");
    }
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let (m, mu) = game();
    let tol = Tolerances::default();
    assert_eq!(analyze(&m, &mu, &tol).unwrap(), analyze(&m, &mu, &tol).unwrap());
    assert_eq!(assess(&m, &mu, &tol).unwrap(), assess(&m, &mu, &tol).unwrap());
    assert_eq!(
        compose_check(5, 10, Corruption::None).unwrap(),
        compose_check(5, 10, Corruption::None).unwrap()
    );
    let map = polycycle_return(&m, &mu, &tol).unwrap();
    let scan = || count_limit_cycles(&map, 1e-5, 1e-2, 24, tol.bisection).unwrap();
    assert_eq!(scan(), scan());
}
