#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod error;
pub mod flow;
pub mod irprep;
pub mod kernel;
pub mod model;
pub mod numerics;
pub mod scheme;
pub mod topology;
