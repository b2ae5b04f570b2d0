//! Bundled airport benchmark: eight airports, four infrastructure inputs
//! (runway uncontrollable), three traffic outputs.

use crate::dataset::{load_dataset, Dataset};

pub const AIRPORTS_CSV: &str = include_str!("../fixtures/airports.csv");
pub const AIRPORTS_SCHEMA: &str = include_str!("../fixtures/airports.toml");

/// Index of the runway column among the inputs.
pub const RUNWAY: usize = 3;

pub fn airports() -> Dataset {
    load_dataset(AIRPORTS_CSV, AIRPORTS_SCHEMA).expect("bundled airport fixture is valid")
}
