//! Inhomogeneous exponential and geometric corner-growth models.
//!
//! The crate samples the models, computes last-passage times, evaluates the
//! limit shape through its one-dimensional variational formula, computes the
//! exact one-point distribution of the geometric model through Fredholm
//! determinants, and evaluates the Tracy-Widom GUE limit. Numerical code is
//! generic over the scalar type [`Real`] (`f32` or `f64`); the aliases below
//! fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airy;
pub mod descent;
pub mod error;
pub mod exactdist;
pub mod grid;
pub mod lpp;
pub mod model;
pub mod numeric;
pub mod scalar;
pub mod shape;
pub mod stats;

pub use error::{Error, Result};
pub use grid::Grid;
pub use scalar::Real;

pub type Law = model::ParamLaw<f64>;
pub type Spec = model::ModelSpec<f64>;
