//! Well-founded relation proofs for finite-state systems.
//!
//! A model is abstracted into a finite graph whose arcs are tagged with the
//! behaviour of component measures. A lexicographic measure is synthesized
//! over the graph's strongly connected components and then checked
//! independently against the concrete relation.

pub mod error;
pub mod model;
pub mod scalar;
pub mod bitblast;
pub mod enumerate;
pub mod absgraph;
pub mod pipeline;
pub mod synth;
pub mod ordinals;
pub mod certify;
pub mod bakery;

pub use error::{Error, Result};

/// Source of the shipped Bakery model.
pub const BAKERY_SOURCE: &str = include_str!("../../../models/bakery.wfm");
