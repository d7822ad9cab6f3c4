//! Laboratory for studying small neural networks as topological classifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense matrices, symmetric eigensolvers, null spaces, seeded RNG.
//! - [`data`]: labeled point clouds sampled from balls and spherical shells.
//! - [`network`]: multilayer perceptrons as compositions of layer functions.
//! - [`training`]: cross-entropy, reverse-mode gradients and mini-batch SGD.
//! - [`topology`]: separability criteria, Urysohn separators, kernel witnesses
//!   and activation-cloud diagnostics.
//! - [`isomap`]: kNN graphs, geodesic distances and classical MDS.
//!
//! Interchangeable algorithms (activations, eigensolvers, enclosing-ball
//! solvers, separability criteria) live behind traits and are looked up by
//! name through a [`registry::Registry`].

pub mod data;
pub mod error;
pub mod isomap;
pub mod network;
pub mod numerics;
pub mod registry;
pub mod topology;
pub mod training;

pub use error::{Error, Result};
