//! Extension of a truncated Taylor series through a zero-free region.
//!
//! A certified polynomial [`disk_map::DiskMap`] `Φ` sends the closed unit
//! disk into the region, the [`bell`] transform re-expands `f ∘ Φ` around 0,
//! and [`budget`] controls truncation and coefficient errors at `z₁`.

pub mod bell;
pub mod budget;
pub mod disk_map;

pub use bell::{bell_transform, bell_transform_coefficients, CoefficientTransform};
pub use budget::{allocate_budget, compose_and_evaluate, taylor_terms_needed, Composed, TaylorBudget};
pub use disk_map::{build_disk_map, default_map, map_for, DiskMap};
