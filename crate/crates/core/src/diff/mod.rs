//! Minimal differentiable-layer engine with hand-derived backward passes.
//!
//! Every layer exposes `forward` returning its output plus a cache, and a
//! `backward` that consumes that cache, accumulates parameter gradients into
//! the [`ParamStore`] and returns the input gradient. Caches are moved into
//! `backward`, so a backward pass can only follow its own forward and runs at
//! most once.

pub mod activation;
pub mod gradcheck;
pub mod linear;
pub mod norm;
pub mod params;
pub mod plr;
pub mod sgd;

pub use activation::{relu, relu_backward, Dropout};
pub use gradcheck::{check_input_grad, check_param_grads, relative_error, GradCheckReport};
pub use linear::Linear;
pub use norm::{BatchNorm, BatchNormState, LayerNorm};
pub use params::{ParamId, ParamStore};
pub use plr::{PlrConfig, PlrEncoder};
pub use sgd::sgd_step;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
