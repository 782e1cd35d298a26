//! Random instances, experiment orchestration and configuration for the
//! `nspd` command-line tool.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod generators;
