//! Spatial-relation constraints for segmentation refinement.
//!
//! Triplets such as `⟨cat, right, person⟩` are calibrated against a
//! [`relations::RelationOracle`], compiled into a product-fuzzy-logic loss
//! over per-category probability maps ([`logic`]), and used to refine noisy
//! maps by test-time gradient descent ([`refine`]). [`scenes`] and [`eval`]
//! provide a synthetic test bed and metrics; [`cli`] ties it together.

pub mod cli;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod grid;
pub mod logic;
pub mod refine;
pub mod relations;
pub mod scenes;

pub use error::{Error, Result};
