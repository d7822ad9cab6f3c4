use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::activation::{activations, Activation};
use crate::data::{schema_or_parse, LabeledPointCloud};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Vector};

/// Layer widths of the traced annulus classifier: 2→5→5→2→2→2, ReLU on the
/// first five layers and softmax on the last.
pub const PAPER_NET_DIMS: [usize; 7] = [2, 5, 5, 2, 2, 2, 2];

/// Initial bias of every layer except the last.
pub const HIDDEN_BIAS_INIT: f64 = 0.1;

/// One layer function `x ↦ σ(W x + b)`.
#[derive(Clone)]
pub struct LayerSpec {
    weight: Matrix,
    bias: Vector,
    activation: Arc<dyn Activation>,
}

impl LayerSpec {
    pub fn new(weight: Matrix, bias: Vector, activation: Arc<dyn Activation>) -> Result<Self> {
        if weight.rows() != bias.len() {
            return Err(Error::Dimension(format!(
                "weight has {} rows but bias has {} entries",
                weight.rows(),
                bias.len()
            )));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("non-finite bias".into()));
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    /// Looks the activation up by name in the activation registry.
    pub fn named(weight: Matrix, bias: Vector, activation: &str) -> Result<Self> {
        let act: Arc<dyn Activation> = Arc::from(activations().create(activation)?);
        Self::new(weight, bias, act)
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> &dyn Activation {
        self.activation.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Affine part `W x + b`.
    pub fn pre_activation(&self, x: &[f64]) -> Result<Vector> {
        let mut z = self.weight.apply(x)?;
        z.iter_mut().zip(&self.bias).for_each(|(zi, b)| *zi += b);
        Ok(z)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vector> {
        Ok(self.activation.apply(&self.pre_activation(x)?))
    }

    pub(crate) fn with_parameters(&self, weight: Matrix, bias: Vector) -> Self {
        Self {
            weight,
            bias,
            activation: Arc::clone(&self.activation),
        }
    }
}

impl fmt::Debug for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LayerSpec")
            .field("shape", &self.weight.shape())
            .field("activation", &self.activation.name())
            .finish()
    }
}

impl PartialEq for LayerSpec {
    fn eq(&self, other: &Self) -> bool {
        self.weight == other.weight
            && self.bias == other.bias
            && self.activation.name() == other.activation.name()
    }
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    activation: String,
    weight: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    layers: Vec<LayerFile>,
}

/// `Net = f_L ∘ ⋯ ∘ f_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<LayerSpec>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `inputs[i]` is the input to layer `i`; the last entry is the network output.
    pub inputs: Vec<Vector>,
    pub pre_activations: Vec<Vector>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().expect("cache holds the input")
    }
}

impl Mlp {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("a network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Dimension(format!(
                    "layer {} outputs {} values but layer {} expects {}",
                    i + 1,
                    pair[0].output_dim(),
                    i + 2,
                    pair[1].input_dim()
                )));
            }
        }
        let last = layers.len() - 1;
        if let Some(i) = layers[..last]
            .iter()
            .position(|l| l.activation().final_only())
        {
            return Err(Error::Config(format!(
                "{} is only allowed as the final layer (found at layer {})",
                layers[i].activation().name(),
                i + 1
            )));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Widths `[input, layer 1 output, ..., final output]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(LayerSpec::output_dim))
            .collect()
    }

    pub fn ends_in_softmax(&self) -> bool {
        self.layers[self.layers.len() - 1].activation().name() == "softmax"
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vector> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer.apply(&a)?;
        }
        Ok(a)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        inputs.push(x.to_vec());
        for layer in &self.layers {
            let z = layer.pre_activation(inputs.last().expect("nonempty"))?;
            inputs.push(layer.activation().apply(&z));
            pre.push(z);
        }
        Ok(ForwardCache {
            inputs,
            pre_activations: pre,
        })
    }

    /// Evaluates every point; per-point results equal sequential `forward`.
    pub fn forward_batch(&self, points: &[Vector]) -> Result<Vec<Vector>> {
        points.par_iter().map(|p| self.forward(p)).collect()
    }

    /// Records the cloud after every layer (and, with `pre_activation`, the
    /// affine image `W_i x + b_i` before each activation as well).
    pub fn forward_trace(
        &self,
        cloud: &LabeledPointCloud,
        pre_activation: bool,
    ) -> Result<ActivationTrace> {
        if cloud.dim() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "cloud has dimension {} but the network expects {}",
                cloud.dim(),
                self.input_dim()
            )));
        }
        let caches: Vec<ForwardCache> = cloud
            .points()
            .par_iter()
            .map(|p| self.forward_cached(p))
            .collect::<Result<_>>()?;
        let mut stages = vec![TraceStage {
            name: "input".into(),
            layer: 0,
            pre_activation: false,
            cloud: cloud.clone(),
        }];
        for (i, layer) in self.layers.iter().enumerate() {
            if pre_activation {
                let pts = caches
                    .iter()
                    .map(|c| c.pre_activations[i].clone())
                    .collect();
                stages.push(TraceStage {
                    name: format!("W{}x+b{}", i + 1, i + 1),
                    layer: i + 1,
                    pre_activation: true,
                    cloud: cloud.relabel_points(pts)?,
                });
            }
            let pts = caches.iter().map(|c| c.inputs[i + 1].clone()).collect();
            stages.push(TraceStage {
                name: format!("f{} ({})", i + 1, layer.activation().name()),
                layer: i + 1,
                pre_activation: false,
                cloud: cloud.relabel_points(pts)?,
            });
        }
        Ok(ActivationTrace { stages })
    }

    /// Network made of layers `range` only, e.g. a single-layer sub-net.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Mlp> {
        Mlp::new(self.layers[range].to_vec())
    }

    pub fn with_layers(&self, layers: Vec<LayerSpec>) -> Result<Mlp> {
        Mlp::new(layers)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has {} coordinates but the network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    activation: l.activation().name().to_string(),
                    weight: l.weight().to_rows(),
                    bias: l.bias().to_vec(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(schema_or_parse)?;
        let layers = file
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                let weight = Matrix::from_rows(&l.weight)
                    .map_err(|e| Error::Schema(format!("layer {}: {e}", i + 1)))?;
                if weight.rows() == 0 || weight.cols() == 0 {
                    return Err(Error::Schema(format!(
                        "layer {} has an empty weight",
                        i + 1
                    )));
                }
                LayerSpec::named(weight, l.bias, &l.activation)
                    .map_err(|e| Error::Schema(format!("layer {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Mlp::new(layers).map_err(|e| Error::Schema(e.to_string()))
    }
}

pub fn save_model(net: &Mlp, path: impl AsRef<Path>) -> Result<()> {
    let mut text = net.to_json()?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Mlp> {
    Mlp::from_json(&fs::read_to_string(path)?)
}

/// Builds a network with the given widths and per-layer activation names.
/// Weights are uniform in `±√(6 / n_in)`. Hidden biases start at
/// [`HIDDEN_BIAS_INIT`] so that few ReLU units are dead from the start; the
/// output layer's bias starts at zero.
pub fn build_mlp(dims: &[usize], activation_names: &[&str], rng: &mut Rng) -> Result<Mlp> {
    if dims.len() < 2 {
        return Err(Error::Config(
            "need at least input and output widths".into(),
        ));
    }
    if dims.contains(&0) {
        return Err(Error::Config("layer widths must be positive".into()));
    }
    if activation_names.len() != dims.len() - 1 {
        return Err(Error::Config(format!(
            "{} layers need {} activations, got {}",
            dims.len() - 1,
            dims.len() - 1,
            activation_names.len()
        )));
    }
    let last = activation_names.len() - 1;
    let layers = dims
        .windows(2)
        .zip(activation_names)
        .enumerate()
        .map(|(i, (w, act))| {
            let (n_in, n_out) = (w[0], w[1]);
            let limit = (6.0 / n_in as f64).sqrt();
            let weight = Matrix::from_fn(n_out, n_in, |_, _| rng.uniform(-limit, limit));
            let b = if i == last { 0.0 } else { HIDDEN_BIAS_INIT };
            LayerSpec::named(weight, vec![b; n_out], act)
        })
        .collect::<Result<Vec<_>>>()?;
    Mlp::new(layers)
}

pub fn build_paper_net(rng: &mut Rng) -> Mlp {
    build_mlp(
        &PAPER_NET_DIMS,
        &["relu", "relu", "relu", "relu", "relu", "softmax"],
        rng,
    )
    .expect("fixed architecture is valid")
}

#[derive(Clone, Debug)]
pub struct TraceStage {
    pub name: String,
    /// 0 for the input, otherwise the 1-based layer index.
    pub layer: usize,
    pub pre_activation: bool,
    pub cloud: LabeledPointCloud,
}

#[derive(Clone, Debug)]
pub struct ActivationTrace {
    pub stages: Vec<TraceStage>,
}

impl ActivationTrace {
    pub fn dims(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.cloud.dim()).collect()
    }

    pub fn last(&self) -> &TraceStage {
        self.stages.last().expect("trace holds the input stage")
    }
}
