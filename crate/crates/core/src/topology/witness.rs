use serde::{Deserialize, Serialize};

use crate::data::{ANNULUS_INNER_MAX, ANNULUS_OUTER_MAX, ANNULUS_OUTER_MIN};
use crate::error::{Error, Result};
use crate::network::Mlp;
use crate::numerics::{dist, norm, null_space_basis, Matrix, Vector, DEFAULT_KERNEL_TOL};

/// Residual bound `‖W p‖` that every witness point must meet.
const WITNESS_RESIDUAL: f64 = 1e-9;

pub const DEFAULT_INNER_R: f64 = 0.5;
pub const DEFAULT_OUTER_R: f64 = 1.5;

/// Two points on a kernel line of `W`, one in the inner ball and one in the
/// outer shell, with identical images under `x ↦ σ(W x + b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelWitness {
    pub direction: Vector,
    pub p1: Vector,
    pub p2: Vector,
    /// `‖W p₁ − W p₂‖`.
    pub output_gap: f64,
}

pub fn kernel_witness(w: &Matrix, inner_r: f64, outer_r: f64) -> Result<KernelWitness> {
    if w.rows() >= w.cols() {
        return Err(Error::NotApplicable(format!(
            "a {}x{} layer has no bottleneck",
            w.rows(),
            w.cols()
        )));
    }
    if !(inner_r > 0.0 && inner_r <= ANNULUS_INNER_MAX) {
        return Err(Error::Spec(format!(
            "inner radius {inner_r} is outside (0, {ANNULUS_INNER_MAX}]"
        )));
    }
    if !(ANNULUS_OUTER_MIN..=ANNULUS_OUTER_MAX).contains(&outer_r) {
        return Err(Error::Spec(format!(
            "outer radius {outer_r} is outside [{ANNULUS_OUTER_MIN}, {ANNULUS_OUTER_MAX}]"
        )));
    }
    let basis = null_space_basis(w, DEFAULT_KERNEL_TOL);
    let v = basis.into_iter().next().ok_or_else(|| {
        Error::Numerical(format!(
            "no kernel direction found for a {}x{} matrix",
            w.rows(),
            w.cols()
        ))
    })?;
    let len = norm(&v);
    let direction: Vector = v.iter().map(|x| x / len).collect();
    let p1: Vector = direction.iter().map(|x| inner_r * x).collect();
    let p2: Vector = direction.iter().map(|x| outer_r * x).collect();
    let w1 = w.apply(&p1)?;
    let w2 = w.apply(&p2)?;
    let worst = norm(&w1).max(norm(&w2));
    if worst > WITNESS_RESIDUAL {
        return Err(Error::Numerical(format!(
            "kernel residual {worst:e} exceeds {WITNESS_RESIDUAL:e}"
        )));
    }
    Ok(KernelWitness {
        direction,
        p1,
        p2,
        output_gap: dist(&w1, &w2),
    })
}

/// A kernel witness pushed through a whole network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetWitness {
    pub witness: KernelWitness,
    pub first_layer_p1: Vector,
    pub first_layer_p2: Vector,
    pub output_p1: Vector,
    pub output_p2: Vector,
    /// `‖Net(p₁) − Net(p₂)‖`.
    pub output_difference: f64,
}

pub fn net_witness(net: &Mlp, inner_r: f64, outer_r: f64) -> Result<NetWitness> {
    let first = &net.layers()[0];
    let witness = kernel_witness(first.weight(), inner_r, outer_r)?;
    let first_layer_p1 = first.apply(&witness.p1)?;
    let first_layer_p2 = first.apply(&witness.p2)?;
    let output_p1 = net.forward(&witness.p1)?;
    let output_p2 = net.forward(&witness.p2)?;
    Ok(NetWitness {
        output_difference: dist(&output_p1, &output_p2),
        witness,
        first_layer_p1,
        first_layer_p2,
        output_p1,
        output_p2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_kernel() {
        let w = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let k = kernel_witness(&w, DEFAULT_INNER_R, DEFAULT_OUTER_R).unwrap();
        assert_eq!(k.direction, vec![0.0, 0.0, 1.0]);
        assert_eq!(k.p1, vec![0.0, 0.0, 0.5]);
        assert_eq!(k.p2, vec![0.0, 0.0, 1.5]);
        assert_eq!(k.output_gap, 0.0);
    }

    #[test]
    fn square_layer_is_not_applicable() {
        let w = Matrix::identity(2);
        assert!(matches!(
            kernel_witness(&w, 0.5, 1.5),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn radii_must_respect_the_regions() {
        let w = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(matches!(kernel_witness(&w, 0.95, 1.5), Err(Error::Spec(_))));
        assert!(matches!(kernel_witness(&w, 0.5, 2.5), Err(Error::Spec(_))));
        assert!(kernel_witness(&w, 0.9, 1.0).is_ok());
    }
}
