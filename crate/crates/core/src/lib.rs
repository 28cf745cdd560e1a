//! Anisotropic fast diffusion u_t = sum_i (u^m_i)_{x_i x_i}: self-similar
//! exponents, explicit profiles, finite-volume solvers, local mass bounds and
//! the numerical experiments built on them.
//!
//! Numerical routines are generic over [`Real`]; the aliases below fix `f64`.

// `!(x > 0)` is used on purpose so that NaN fails every check
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod closed_forms;
pub mod fit;
pub mod grid;
pub mod local_mass;
mod real;
pub mod similarity;
pub mod solver;
pub mod verify;

pub use real::{pairwise_sum, Real};

pub type Grid = grid::TensorGrid<f64>;
pub type Field = grid::ScalarField<f64>;
pub type Medium = similarity::MediumExponents<f64>;
pub type Similarity = similarity::SimilarityExponents<f64>;
pub type Region = grid::AxisBox<f64>;
