//! Multilayer perceptrons as compositions of layer functions
//! `f_i(x) = σ(W_i x + b_i)`, with per-layer activation tracing.

mod activation;
mod mlp;

pub use activation::{activations, relu, softmax, Activation, Identity, Relu, Softmax};
pub use mlp::{
    build_mlp, build_paper_net, load_model, save_model, ActivationTrace, ForwardCache, LayerSpec,
    Mlp, TraceStage, HIDDEN_BIAS_INIT, PAPER_NET_DIMS,
};
