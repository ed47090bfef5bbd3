#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod density;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod exec;
pub mod mesh;
pub mod metrics;
pub mod quad;
pub mod reference;
pub mod transform;

pub use error::{Error, Result};
