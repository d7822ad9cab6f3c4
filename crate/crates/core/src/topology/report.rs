use serde::{Deserialize, Serialize};

use super::ball::{check_disc_separation, Disc};
use super::voronoi::violations;
use crate::data::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::network::Mlp;
use crate::registry::Registry;

/// A point whose network output is not inside its label's Voronoi cell.
/// `assigned` is `None` when the output sits on a cell boundary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub assigned: Option<usize>,
    pub true_class: usize,
}

/// Verdicts of the separability criteria that were run; fields of criteria
/// that were not run stay `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub criteria: Vec<String>,
    pub point_count: usize,
    pub class_count: usize,
    pub voronoi_ok: Option<bool>,
    pub violating_points: Vec<Violation>,
    pub disc_ok: Option<bool>,
    pub discs: Vec<Disc>,
    pub min_inter_disc_gap: Option<f64>,
}

impl SeparabilityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(crate::data::schema_or_parse)
    }
}

/// One way of deciding whether a network's outputs separate the classes.
pub trait SeparabilityCriterion: Send + Sync {
    fn name(&self) -> &'static str;

    /// `outputs` holds the network image of every input point, with the
    /// input labels.
    fn evaluate(&self, outputs: &LabeledPointCloud, report: &mut SeparabilityReport) -> Result<()>;
}

/// Interior membership of the label's Voronoi cell on the output simplex.
#[derive(Clone, Copy, Debug, Default)]
pub struct VoronoiCriterion;

impl SeparabilityCriterion for VoronoiCriterion {
    fn name(&self) -> &'static str {
        "voronoi"
    }

    fn evaluate(&self, outputs: &LabeledPointCloud, report: &mut SeparabilityReport) -> Result<()> {
        let found = violations(outputs.points(), outputs.labels())?;
        report.voronoi_ok = Some(found.is_empty());
        report.violating_points = found;
        Ok(())
    }
}

/// Pairwise-disjoint minimum enclosing balls of the per-class output clouds.
#[derive(Clone, Copy, Debug, Default)]
pub struct DiscCriterion;

impl SeparabilityCriterion for DiscCriterion {
    fn name(&self) -> &'static str {
        "disc"
    }

    fn evaluate(&self, outputs: &LabeledPointCloud, report: &mut SeparabilityReport) -> Result<()> {
        let sep = check_disc_separation(&outputs.by_class())?;
        report.disc_ok = Some(sep.separated);
        report.discs = sep.discs;
        report.min_inter_disc_gap = sep.min_gap;
        Ok(())
    }
}

pub fn criteria() -> Registry<dyn SeparabilityCriterion> {
    Registry::<dyn SeparabilityCriterion>::new("separability criterion")
        .with("voronoi", || Box::new(VoronoiCriterion))
        .with("disc", || Box::new(DiscCriterion))
}

/// Runs the named criteria on `net`'s image of `cloud`.
pub fn check_separability(
    net: &Mlp,
    cloud: &LabeledPointCloud,
    names: &[&str],
) -> Result<SeparabilityReport> {
    if names.iter().any(|n| n.eq_ignore_ascii_case("voronoi")) && !net.ends_in_softmax() {
        return Err(Error::Config(
            "the voronoi criterion needs a softmax final layer".into(),
        ));
    }
    if net.output_dim() != cloud.class_count() && net.ends_in_softmax() {
        return Err(Error::Config(format!(
            "network has {} outputs but data has {} classes",
            net.output_dim(),
            cloud.class_count()
        )));
    }
    let registry = criteria();
    let selected = names
        .iter()
        .map(|n| registry.create(n))
        .collect::<Result<Vec<_>>>()?;
    let outputs = cloud.relabel_points(net.forward_batch(cloud.points())?)?;
    let mut report = SeparabilityReport {
        point_count: cloud.len(),
        class_count: cloud.class_count(),
        ..Default::default()
    };
    for c in selected {
        report.criteria.push(c.name().to_string());
        c.evaluate(&outputs, &mut report)?;
    }
    Ok(report)
}
