//! Self-checking activation functions and fault-injection campaigns.

pub mod activations;
pub mod campaign;
pub mod cli;
pub mod extended;
pub mod fault_engine;
pub mod float_bits;
pub mod series;
pub mod softfloat;
pub mod tables;
