//! Optimal Euclidean embedding of mixed categorical/numerical data by
//! homogeneity analysis, followed by large-scale clustering and validation.
//!
//! The pipeline is decoupled: categorical attributes are quantified once by
//! [`homals::fit`], joined with the standardized continuous attributes by
//! [`embedding::embed`], and the resulting matrix can then be clustered for
//! any number of `k` values with [`clustering::cluster`] and scored with
//! [`validation`].

pub mod clustering;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod homals;
pub mod indicator;
pub mod synthgen;
pub mod validation;

pub use error::{Error, Result};
