//! Finite labeled point clouds sampled from balls and spherical shells.
//!
//! Class `k` of a cloud plays the role of the preimage of the `k`-th label.
//! The two-class ball/shell geometry with radii 0.9 and [1, 2] is the
//! counterexample used against bottleneck first layers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{norm, Rng, Vector};

pub const ANNULUS_INNER_MAX: f64 = 0.9;
pub const ANNULUS_OUTER_MIN: f64 = 1.0;
pub const ANNULUS_OUTER_MAX: f64 = 2.0;
pub const DEFAULT_SAMPLES_PER_CLASS: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabeledPointCloud {
    dim: usize,
    class_count: usize,
    points: Vec<Vector>,
    labels: Vec<usize>,
}

#[derive(Deserialize)]
struct RawCloud {
    dim: usize,
    class_count: usize,
    points: Vec<Vector>,
    labels: Vec<usize>,
}

impl LabeledPointCloud {
    pub fn new(
        dim: usize,
        class_count: usize,
        points: Vec<Vector>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Schema("cloud has no points".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::Schema(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
            return Err(Error::Schema(format!(
                "point {i} has {} coordinates, expected {dim}",
                p.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|x| !x.is_finite())) {
            return Err(Error::Schema(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        let mut seen = vec![false; class_count];
        for (i, &l) in labels.iter().enumerate() {
            if l >= class_count {
                return Err(Error::Schema(format!(
                    "label {l} of point {i} is not below class_count {class_count}"
                )));
            }
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Schema(format!("class {missing} has no points")));
        }
        Ok(Self {
            dim,
            class_count,
            points,
            labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn class_points(&self, class: usize) -> Vec<Vector> {
        self.points
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == class)
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn by_class(&self) -> Vec<Vec<Vector>> {
        (0..self.class_count)
            .map(|k| self.class_points(k))
            .collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Same labels, new coordinates (e.g. the image of the cloud under a layer).
    pub fn relabel_points(&self, points: Vec<Vector>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        Self::new(dim, self.class_count, points, self.labels.clone())
    }

    /// Smallest and largest Euclidean norm within each class.
    pub fn norm_ranges(&self) -> Vec<(f64, f64)> {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); self.class_count];
        for (p, &l) in self.points.iter().zip(&self.labels) {
            let r = norm(p);
            ranges[l].0 = ranges[l].0.min(r);
            ranges[l].1 = ranges[l].1.max(r);
        }
        ranges
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawCloud = serde_json::from_str(text).map_err(schema_or_parse)?;
        Self::new(raw.dim, raw.class_count, raw.points, raw.labels)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        writeln!(out, "{},label", header.join(","))?;
        for (p, l) in self.points.iter().zip(&self.labels) {
            let coords: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{},{l}", coords.join(","))?;
        }
        Ok(())
    }
}

/// Missing or mistyped fields are schema problems; broken syntax is a parse problem.
pub(crate) fn schema_or_parse(e: serde_json::Error) -> Error {
    match e.classify() {
        serde_json::error::Category::Data => Error::Schema(e.to_string()),
        _ => e.into(),
    }
}

pub fn save_cloud(cloud: &LabeledPointCloud, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(cloud.to_json()?.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn load_cloud(path: impl AsRef<Path>) -> Result<LabeledPointCloud> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    LabeledPointCloud::from_json(&text)
}

pub fn save_cloud_csv(cloud: &LabeledPointCloud, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    cloud.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Two classes: a solid ball of radius `inner_max_radius` and the shell
/// between `outer_min_radius` and `outer_max_radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec {
    pub dim: usize,
    pub inner_max_radius: f64,
    pub outer_min_radius: f64,
    pub outer_max_radius: f64,
    pub samples_per_class: usize,
    pub seed: u64,
}

impl ShellSpec {
    pub fn annulus(samples_per_class: usize, seed: u64) -> Self {
        Self {
            dim: 2,
            inner_max_radius: ANNULUS_INNER_MAX,
            outer_min_radius: ANNULUS_OUTER_MIN,
            outer_max_radius: ANNULUS_OUTER_MAX,
            samples_per_class,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.inner_max_radius > 0.0
            && self.inner_max_radius < self.outer_min_radius
            && self.outer_min_radius <= self.outer_max_radius
            && self.outer_max_radius.is_finite();
        if !ok {
            return Err(Error::Spec(format!(
                "need 0 < inner ({}) < outer_min ({}) <= outer_max ({})",
                self.inner_max_radius, self.outer_min_radius, self.outer_max_radius
            )));
        }
        if self.dim == 0 || self.samples_per_class == 0 {
            return Err(Error::Spec(
                "dim and samples_per_class must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn bands(&self) -> Vec<(f64, f64)> {
        vec![
            (0.0, self.inner_max_radius),
            (self.outer_min_radius, self.outer_max_radius),
        ]
    }
}

pub fn gen_shells(spec: &ShellSpec) -> Result<LabeledPointCloud> {
    spec.validate()?;
    gen_bands(spec.dim, &spec.bands(), spec.samples_per_class, spec.seed)
}

pub fn gen_annulus2d(samples_per_class: usize, seed: u64) -> Result<LabeledPointCloud> {
    gen_shells(&ShellSpec::annulus(samples_per_class, seed))
}

/// Class `k` is uniform on `{x : bands[k].0 <= ‖x‖ <= bands[k].1}`; bands must
/// be increasing and pairwise disjoint. Sampling rejects draws from the
/// enclosing cube, so norms respect the bounds exactly.
pub fn gen_bands(
    dim: usize,
    bands: &[(f64, f64)],
    samples_per_class: usize,
    seed: u64,
) -> Result<LabeledPointCloud> {
    if dim == 0 || samples_per_class == 0 {
        return Err(Error::Spec(
            "dim and samples_per_class must be positive".into(),
        ));
    }
    if bands.len() < 2 {
        return Err(Error::Spec("need at least two bands".into()));
    }
    for (k, &(lo, hi)) in bands.iter().enumerate() {
        if !(lo >= 0.0 && lo <= hi && hi > 0.0 && hi.is_finite()) {
            return Err(Error::Spec(format!("band {k} [{lo}, {hi}] is invalid")));
        }
        if k > 0 && lo <= bands[k - 1].1 {
            return Err(Error::Spec(format!(
                "band {k} starts at {lo}, not above previous band end {}",
                bands[k - 1].1
            )));
        }
    }
    let mut rng = Rng::new(seed);
    let mut points = Vec::with_capacity(bands.len() * samples_per_class);
    let mut labels = Vec::with_capacity(points.capacity());
    for (class, &(lo, hi)) in bands.iter().enumerate() {
        let mut accepted = 0;
        while accepted < samples_per_class {
            let p: Vector = (0..dim).map(|_| rng.uniform(-hi, hi)).collect();
            let r = norm(&p);
            if r >= lo && r <= hi {
                points.push(p);
                labels.push(class);
                accepted += 1;
            }
        }
    }
    LabeledPointCloud::new(dim, bands.len(), points, labels)
}
