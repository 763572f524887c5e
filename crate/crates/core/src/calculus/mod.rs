//! Coefficient calculus for compositions, inverses and return maps.

pub mod compose;
pub mod products;
pub mod returns;

pub use compose::{
    compose_chain, compose_pair, composition_case, inverse_dulac, second_order_candidates, upsilon0, CompositionCase,
};
pub use products::{a_product, a_star, b_product, b_star, c_product, lambda_product, BlockPattern, PolycycleSpec};
pub use returns::{
    displacement_expansion, displacement_expansion_rotated, return_expansion, script_a, script_b, script_c,
    DisplacementCase, DisplacementExpansion, ReturnExpansion, ReturnNext,
};

/// Below this size of `α ln s` the compensator switches to its series.
const COMPENSATOR_SERIES_BAND: f64 = 1e-8;

/// `ω(s; α) = (s^{−α} − 1)/α`, continued by `−ln s` at `α = 0`.
pub fn compensator(s: f64, alpha: f64) -> f64 {
    let ln = s.ln();
    let x = -alpha * ln;
    if x.abs() < COMPENSATOR_SERIES_BAND {
        -ln * (1.0 + x / 2.0 + x * x / 6.0)
    } else {
        x.exp_m1() / alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensator_values() {
        assert_eq!(compensator(0.3, 0.0), -(0.3f64.ln()));
        for a in [-0.7, 0.0, 1e-12, 2.0] {
            assert_eq!(compensator(1.0, a), 0.0);
        }
        assert!((compensator(0.5, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn compensator_is_continuous_across_the_band() {
        let s = 0.01;
        let inside = compensator(s, 1e-9);
        let outside = compensator(s, 1e-8);
        assert!((inside - outside).abs() < 1e-7);
        assert!((inside + s.ln()).abs() <= 1e-9 * s.ln().powi(2));
    }
}
