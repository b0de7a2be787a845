//! Goodness-of-fit tests for linear non-Gaussian structural equation models
//! with latent confounders, based on rank and polynomial constraints on
//! higher-order cumulant tensors.

pub mod accum;
pub mod combinatorics;
pub mod constraints;
pub mod cumulants;
pub mod data;
pub mod error;
pub mod exec;
pub mod gof;
pub mod simlab;
pub mod tensor;

pub use cumulants::{sample_cumulant, sample_cumulants, CumulantSet, SemModel};
pub use data::DataMatrix;
pub use error::{Error, Result};
pub use tensor::SymmetricTensor;
