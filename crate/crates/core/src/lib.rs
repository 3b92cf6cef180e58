//! Hierarchical (p-adic) deep neural networks at finite level.
//!
//! Neurons are addressed by elements of `G_l = Z_p / p^l Z_p`, states and
//! weights are locally constant functions on `Z_p` and `Z_p × Z_p`, and
//! every integral is an exact finite sum. On top of that the crate provides
//!
//! - a Picard solver for the hidden state with contraction diagnostics
//!   ([`solver`]),
//! - recasting of ordinary layered networks into tree form ([`recast`]),
//! - the closed-form states of a p-adic cellular edge detector ([`toy`]),
//! - Gaussian network priors and their Monte Carlo check ([`prior`]).
//!
//! Numeric code is generic over [`Real`] (`f32`, `f64`); the aliases below
//! fix the scalar to `f64`.

// NaN must fail range checks, so `!(x <= y)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod error;
pub mod formats;
pub mod padic;
pub mod pgm;
pub mod prior;
pub mod recast;
pub mod scalar;
pub mod solver;
pub mod toy;
pub mod tree;

pub use activation::Activation;
pub use error::{Error, Result};
pub use padic::{enumerate_level, haar_weight, LevelPair, PadicIndex, Prime};
pub use pgm::{GrayImage, PgmFormat};
pub use prior::{BiasCovariance, NetworkPrior, PriorCovariance, WeightCovariance};
pub use recast::{LayeredNet, Matrix, NeuronMap, RecastResult};
pub use scalar::Real;
pub use solver::{NetworkParams, SolveOptions, SolveReport};
pub use toy::{DriveField, StatePoset, ToyParams};
pub use tree::{TreeFunction, TreeKernel};

pub type TreeFunctionF64 = TreeFunction<f64>;
pub type TreeKernelF64 = TreeKernel<f64>;
pub type ActivationF64 = Activation<f64>;
pub type NetworkParamsF64 = NetworkParams<f64>;
pub type SolveReportF64 = SolveReport<f64>;
pub type LayeredNetF64 = LayeredNet<f64>;
pub type ToyParamsF64 = ToyParams<f64>;
pub type TreeFunctionF32 = TreeFunction<f32>;
pub type TreeKernelF32 = TreeKernel<f32>;
pub type NetworkParamsF32 = NetworkParams<f32>;
