use serde::{Deserialize, Serialize};

use super::report::Violation;
use crate::data::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::network::Mlp;

/// Absolute tolerance under which two output coordinates count as tied.
pub const BOUNDARY_TOL: f64 = 1e-12;

const SIMPLEX_TOL: f64 = 1e-9;

/// Index of the strictly largest coordinate, or `None` when the top two are
/// within `tol` of each other.
pub fn strict_argmax(y: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    let mut runner_up = f64::NEG_INFINITY;
    for (i, &v) in y.iter().enumerate() {
        match best {
            Some(b) if v > y[b] => {
                runner_up = y[b];
                best = Some(i);
            }
            Some(_) => runner_up = runner_up.max(v),
            None => best = Some(i),
        }
    }
    let b = best?;
    (y[b] - runner_up > tol).then_some(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplexClass {
    Class(usize),
    Boundary,
}

/// Interior Voronoi cell of the simplex vertices containing `y`.
///
/// On the simplex `‖y − v_i‖² − ‖y − v_j‖² = 2(y_j − y_i)`, so the cell of
/// `v_i` is exactly where `y_i` is the strict maximum.
pub fn simplex_class(y: &[f64]) -> Result<SimplexClass> {
    let sum: f64 = y.iter().sum();
    if y.is_empty()
        || y.iter().any(|&v| v.is_nan() || v < -SIMPLEX_TOL)
        || (sum - 1.0).abs() > SIMPLEX_TOL
    {
        return Err(Error::Domain(format!(
            "{y:?} is not on the probability simplex"
        )));
    }
    Ok(match strict_argmax(y, BOUNDARY_TOL) {
        Some(i) => SimplexClass::Class(i),
        None => SimplexClass::Boundary,
    })
}

fn check_classifier(net: &Mlp, cloud: &LabeledPointCloud) -> Result<()> {
    if !net.ends_in_softmax() {
        return Err(Error::Config("the network does not end in softmax".into()));
    }
    if net.output_dim() != cloud.class_count() {
        return Err(Error::Config(format!(
            "network has {} outputs but data has {} classes",
            net.output_dim(),
            cloud.class_count()
        )));
    }
    Ok(())
}

/// Points whose image is not in the interior of their label's Voronoi cell.
/// The network separates the cloud exactly when the list is empty.
pub fn check_voronoi(net: &Mlp, cloud: &LabeledPointCloud) -> Result<Vec<Violation>> {
    check_classifier(net, cloud)?;
    let outputs = net.forward_batch(cloud.points())?;
    violations(&outputs, cloud.labels())
}

pub(crate) fn violations(outputs: &[Vec<f64>], labels: &[usize]) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    for (index, (y, &label)) in outputs.iter().zip(labels).enumerate() {
        let assigned = match simplex_class(y)? {
            SimplexClass::Class(c) => Some(c),
            SimplexClass::Boundary => None,
        };
        if assigned != Some(label) {
            out.push(Violation {
                index,
                assigned,
                true_class: label,
            });
        }
    }
    Ok(out)
}
