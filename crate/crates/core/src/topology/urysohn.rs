use crate::error::{Error, Result};
use crate::numerics::{dist, Vector};

/// A real-valued function on `Rⁿ`.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;
}

fn dist_to_set(x: &[f64], set: &[Vector]) -> f64 {
    set.iter().map(|p| dist(x, p)).fold(f64::INFINITY, f64::min)
}

fn common_dim(sets: &[&[Vector]]) -> Result<usize> {
    let dim = sets
        .iter()
        .flat_map(|s| s.first())
        .map(Vec::len)
        .next()
        .unwrap_or(0);
    if sets.iter().flat_map(|s| s.iter()).any(|p| p.len() != dim) {
        return Err(Error::Dimension("points of mixed dimension".into()));
    }
    Ok(dim)
}

fn set_gap(a: &[Vector], b: &[Vector]) -> f64 {
    a.iter()
        .map(|p| dist_to_set(p, b))
        .fold(f64::INFINITY, f64::min)
}

/// `f(x) = d(x, D₁) / (d(x, D₁) + d(x, D₂))`: zero on `D₁`, one on `D₂`,
/// continuous on all of `Rⁿ` with Lipschitz constant at most `1 / gap`.
#[derive(Clone, Debug)]
pub struct UrysohnBinary {
    zero_set: Vec<Vector>,
    one_set: Vec<Vector>,
    gap: f64,
}

impl UrysohnBinary {
    /// Minimum distance between the two sets.
    pub fn gap(&self) -> f64 {
        self.gap
    }
}

impl ScalarField for UrysohnBinary {
    fn dim(&self) -> usize {
        self.zero_set[0].len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let a = dist_to_set(x, &self.zero_set);
        let b = dist_to_set(x, &self.one_set);
        a / (a + b)
    }
}

pub fn urysohn_binary(d1: &[Vector], d2: &[Vector]) -> Result<UrysohnBinary> {
    if d1.is_empty() || d2.is_empty() {
        return Err(Error::EmptyInput(
            "both sets need at least one point".into(),
        ));
    }
    common_dim(&[d1, d2])?;
    let gap = set_gap(d1, d2);
    if gap <= 0.0 {
        return Err(Error::Separation("the two sets share a point".into()));
    }
    Ok(UrysohnBinary {
        zero_set: d1.to_vec(),
        one_set: d2.to_vec(),
        gap,
    })
}

/// Partition-of-unity separator `f(x) = Σ_k k · w_k(x)` with
/// `w_k ∝ Π_{j≠k} d(x, D_j)`; equals `k` exactly on `D_k`.
#[derive(Clone, Debug)]
pub struct UrysohnMulticlass {
    classes: Vec<Vec<Vector>>,
    gap: f64,
}

impl UrysohnMulticlass {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Smallest distance between any two classes.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Partition-of-unity weights at `x`.
    pub fn weights(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = self.classes.iter().map(|c| dist_to_set(x, c)).collect();
        let prods: Vec<f64> = (0..d.len())
            .map(|k| {
                d.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, v)| v)
                    .product()
            })
            .collect();
        let total: f64 = prods.iter().sum();
        prods.into_iter().map(|p| p / total).collect()
    }
}

impl ScalarField for UrysohnMulticlass {
    fn dim(&self) -> usize {
        self.classes[0][0].len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.weights(x)
            .iter()
            .enumerate()
            .map(|(k, w)| k as f64 * w)
            .sum()
    }
}

pub fn urysohn_multiclass(classes: &[Vec<Vector>]) -> Result<UrysohnMulticlass> {
    if classes.len() < 2 {
        return Err(Error::Spec("need at least two classes".into()));
    }
    if let Some(k) = classes.iter().position(Vec::is_empty) {
        return Err(Error::EmptyInput(format!("class {k} has no points")));
    }
    let refs: Vec<&[Vector]> = classes.iter().map(Vec::as_slice).collect();
    common_dim(&refs)?;
    let mut gap = f64::INFINITY;
    for i in 0..classes.len() {
        for j in (i + 1)..classes.len() {
            let g = set_gap(&classes[i], &classes[j]);
            if g <= 0.0 {
                return Err(Error::Separation(format!(
                    "classes {i} and {j} share a point"
                )));
            }
            gap = gap.min(g);
        }
    }
    Ok(UrysohnMulticlass {
        classes: classes.to_vec(),
        gap,
    })
}
