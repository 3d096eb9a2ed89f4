//! File formats, the batch pipeline and the elicitation service built on
//! `elicitsurv-core`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod plot;
pub mod service;
pub mod synthetic;

pub use elicitsurv_core as core;
