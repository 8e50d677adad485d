// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregates;
#[cfg(feature = "cli")]
pub mod cli;
pub mod enumeration;
pub mod error;
pub mod facet_formulas;
pub mod montecarlo;
pub mod numerics;
pub mod persistence;
pub mod simplex_moments;

pub use error::{Error, Result};
