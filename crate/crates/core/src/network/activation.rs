use std::fmt::Debug;

use crate::numerics::Vector;
use crate::registry::Registry;

/// A coordinate map `σ` applied after the affine part of a layer.
pub trait Activation: Send + Sync + Debug {
    /// Name used in model files and on the command line.
    fn name(&self) -> &'static str;

    fn apply(&self, z: &[f64]) -> Vector;

    /// Pulls `∂L/∂a` back to `∂L/∂z`, given the pre-activation `z` and the
    /// output `a = apply(z)`.
    fn backward(&self, z: &[f64], a: &[f64], grad_out: &[f64]) -> Vector;

    /// Whether the activation may only close a network.
    fn final_only(&self) -> bool {
        false
    }
}

pub fn activations() -> Registry<dyn Activation> {
    Registry::<dyn Activation>::new("activation")
        .with("relu", || Box::new(Relu))
        .with("softmax", || Box::new(Softmax))
        .with("identity", || Box::new(Identity))
}

pub fn relu(v: &[f64]) -> Vector {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// Coordinate-wise exponential followed by normalisation onto the simplex.
/// The maximum is subtracted first; the map is invariant under that shift.
pub fn softmax(v: &[f64]) -> Vector {
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vector = v.iter().map(|&x| (x - top).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Relu;

impl Activation for Relu {
    fn name(&self) -> &'static str {
        "relu"
    }

    fn apply(&self, z: &[f64]) -> Vector {
        relu(z)
    }

    // subgradient at exactly 0 is taken to be 0
    fn backward(&self, z: &[f64], _a: &[f64], grad_out: &[f64]) -> Vector {
        z.iter()
            .zip(grad_out)
            .map(|(&zi, &g)| if zi > 0.0 { g } else { 0.0 })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Softmax;

impl Activation for Softmax {
    fn name(&self) -> &'static str {
        "softmax"
    }

    fn apply(&self, z: &[f64]) -> Vector {
        softmax(z)
    }

    fn backward(&self, _z: &[f64], a: &[f64], grad_out: &[f64]) -> Vector {
        let inner: f64 = a.iter().zip(grad_out).map(|(p, g)| p * g).sum();
        a.iter()
            .zip(grad_out)
            .map(|(p, g)| p * (g - inner))
            .collect()
    }

    fn final_only(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Activation for Identity {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn apply(&self, z: &[f64]) -> Vector {
        z.to_vec()
    }

    fn backward(&self, _z: &[f64], _a: &[f64], grad_out: &[f64]) -> Vector {
        grad_out.to_vec()
    }
}
