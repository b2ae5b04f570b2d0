//! Epsilon-neighborhood Data Envelopment Analysis.
//!
//! Measures the efficiency of homogeneous firms against the constant-returns
//! hull of their peers, with per-factor epsilon radii that let technically
//! efficient firms be told apart. Also provides frontier targets,
//! uncontrollable-factor handling, shared-weight dominance ordering and an
//! efficiency/effectiveness productivity classification.
//!
//! ```
//! use kam_dea::{fixtures, kam, schemes::{EpsilonScheme, WeightScheme}};
//!
//! let ds = fixtures::airports();
//! let cfg = kam::KamConfig::from_schema(
//!     &ds, WeightScheme::Sbm, EpsilonScheme::per_firm(0.1), None).unwrap();
//! let a = kam::evaluate(&ds, &cfg, 0).unwrap();
//! assert!((a.score - 0.85672).abs() < 5e-6);
//! ```

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod dataset;
pub mod fixtures;
pub mod kam;
pub mod lp;
pub mod report;
pub mod reproduce;
pub mod schemes;

pub use dataset::{load_dataset, Dataset, FactorSchema, UncontrollableMode};
pub use kam::{evaluate, evaluate_all, KamConfig, KamResult};
