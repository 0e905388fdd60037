//! Dense `f64` tensors with tape-based reverse-mode differentiation.
//!
//! The engine covers exactly what the recurrent models need: matrix
//! products, pointwise gates, row softmax, a bias broadcast and a few
//! reshaping helpers. Every operation checks its output for NaN/Inf.

mod gemm;
pub mod grad_check;
mod params;
mod tape;
mod tensor;

pub use grad_check::{grad_check, grad_check_store, relative_error, resolution_floor, ParamCheck};
pub use params::{Binding, ParamId, ParamStore};
pub use tape::{softmax_in_place, Tape, Var};
pub use tensor::Tensor;
