//! Shared inputs for the benchmarks under `benches/`.

use polycycle::Model;

pub const GAME_MODEL: &str = include_str!("../../cli/examples/game.model");

pub fn game() -> Model {
    Model::parse(GAME_MODEL).expect("bundled game model parses")
}
