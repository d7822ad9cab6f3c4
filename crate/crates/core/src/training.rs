//! Cross-entropy training of softmax classifiers by mini-batch SGD.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::network::Mlp;
use crate::numerics::{Matrix, Rng, Vector};
use crate::topology::{strict_argmax, BOUNDARY_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop as soon as training accuracy reaches this value.
    pub target_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 500,
            batch_size: 32,
            seed: 0,
            target_accuracy: Some(0.999),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if let Some(t) = self.target_accuracy {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!(
                    "target accuracy {t} is not in (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn final_accuracy(&self) -> f64 {
        self.epochs.last().map_or(0.0, |r| r.accuracy)
    }

    pub fn best_accuracy(&self) -> f64 {
        self.epochs.iter().map(|r| r.accuracy).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,loss,accuracy")?;
        for r in &self.epochs {
            writeln!(out, "{},{},{}", r.epoch, r.loss, r.accuracy)?;
        }
        Ok(())
    }
}

/// `−ln p[label]`.
pub fn cross_entropy(p: &[f64], label: usize) -> Result<f64> {
    let q = *p.get(label).ok_or(Error::Index {
        index: label,
        len: p.len(),
    })?;
    Ok(-q.ln())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub weight: Matrix,
    pub bias: Vector,
}

impl LayerGradient {
    fn zeros_like(net: &Mlp) -> Vec<LayerGradient> {
        net.layers()
            .iter()
            .map(|l| LayerGradient {
                weight: Matrix::zeros(l.output_dim(), l.input_dim()),
                bias: vec![0.0; l.output_dim()],
            })
            .collect()
    }
}

fn check_classifier(net: &Mlp) -> Result<()> {
    if !net.ends_in_softmax() {
        return Err(Error::Config(
            "cross-entropy training needs a softmax final layer".into(),
        ));
    }
    Ok(())
}

/// Adds the gradient of `cross_entropy(forward(net, x), label)` into `acc`,
/// returning the loss.
fn accumulate(net: &Mlp, x: &[f64], label: usize, acc: &mut [LayerGradient]) -> Result<f64> {
    let cache = net.forward_cached(x)?;
    let p = cache.output();
    let loss = cross_entropy(p, label)?;
    // softmax followed by cross-entropy pulls back to p − e_label
    let mut grad_z: Vector = p.to_vec();
    grad_z[label] -= 1.0;
    for (i, layer) in net.layers().iter().enumerate().rev() {
        if i + 1 < net.depth() {
            let grad_a = net.layers()[i + 1].weight().apply_transpose(&grad_z)?;
            grad_z = layer.activation().backward(
                &cache.pre_activations[i],
                &cache.inputs[i + 1],
                &grad_a,
            );
        }
        let input = &cache.inputs[i];
        let g = &mut acc[i];
        for (r, &gz) in grad_z.iter().enumerate() {
            g.bias[r] += gz;
            if gz != 0.0 {
                for (w, &xi) in g.weight.row_mut(r).iter_mut().zip(input) {
                    *w += gz * xi;
                }
            }
        }
    }
    Ok(loss)
}

/// Reverse-mode derivatives of the cross-entropy loss at one sample with
/// respect to every weight and bias. ReLU's derivative at 0 is taken as 0.
pub fn gradients(net: &Mlp, x: &[f64], label: usize) -> Result<Vec<LayerGradient>> {
    check_classifier(net)?;
    let mut acc = LayerGradient::zeros_like(net);
    accumulate(net, x, label, &mut acc)?;
    Ok(acc)
}

/// Summed gradient and summed loss over a batch, reduced in input order.
pub fn batch_gradients(
    net: &Mlp,
    samples: &[(&[f64], usize)],
) -> Result<(Vec<LayerGradient>, f64)> {
    check_classifier(net)?;
    let mut acc = LayerGradient::zeros_like(net);
    let mut loss = 0.0;
    for (x, label) in samples {
        loss += accumulate(net, x, *label, &mut acc)?;
    }
    Ok((acc, loss))
}

/// Fraction of points whose output has a strict maximum at their label;
/// ties count as misclassified.
pub fn accuracy(net: &Mlp, cloud: &LabeledPointCloud) -> Result<f64> {
    let outputs = net.forward_batch(cloud.points())?;
    let correct = outputs
        .iter()
        .zip(cloud.labels())
        .filter(|(y, &l)| strict_argmax(y, BOUNDARY_TOL) == Some(l))
        .count();
    Ok(correct as f64 / cloud.len() as f64)
}

pub fn mean_loss(net: &Mlp, cloud: &LabeledPointCloud) -> Result<f64> {
    let outputs = net.forward_batch(cloud.points())?;
    let mut total = 0.0;
    for (y, &l) in outputs.iter().zip(cloud.labels()) {
        total += cross_entropy(y, l)?;
    }
    Ok(total / cloud.len() as f64)
}

/// Mini-batch SGD with a fixed learning rate. The sample order is reshuffled
/// every epoch from `cfg.seed`; the recorded loss is the mean over the
/// epoch's batches and the accuracy is measured on the full cloud afterwards.
pub fn train(
    net: &Mlp,
    cloud: &LabeledPointCloud,
    cfg: &TrainConfig,
) -> Result<(Mlp, TrainHistory)> {
    cfg.validate()?;
    check_classifier(net)?;
    if cloud.dim() != net.input_dim() {
        return Err(Error::Config(format!(
            "data has dimension {} but the network expects {}",
            cloud.dim(),
            net.input_dim()
        )));
    }
    if cloud.class_count() != net.output_dim() {
        return Err(Error::Config(format!(
            "data has {} classes but the network outputs {}",
            cloud.class_count(),
            net.output_dim()
        )));
    }

    let mut rng = Rng::new(cfg.seed);
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    let mut net = net.clone();
    let mut history = TrainHistory::default();

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let samples: Vec<(&[f64], usize)> = chunk
                .iter()
                .map(|&i| (cloud.points()[i].as_slice(), cloud.labels()[i]))
                .collect();
            let (grads, loss) = batch_gradients(&net, &samples)?;
            loss_sum += loss;
            let step = cfg.learning_rate / chunk.len() as f64;
            let layers = net
                .layers()
                .iter()
                .zip(&grads)
                .map(|(layer, g)| {
                    let mut w = layer.weight().clone();
                    w.as_mut_slice()
                        .iter_mut()
                        .zip(g.weight.as_slice())
                        .for_each(|(wi, gi)| *wi -= step * gi);
                    let b = layer
                        .bias()
                        .iter()
                        .zip(&g.bias)
                        .map(|(bi, gi)| bi - step * gi)
                        .collect();
                    layer.with_parameters(w, b)
                })
                .collect();
            net = net.with_layers(layers)?;
        }
        let loss = loss_sum / cloud.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("loss diverged at epoch {epoch}")));
        }
        let acc = accuracy(&net, cloud)?;
        history.epochs.push(EpochRecord {
            epoch,
            loss,
            accuracy: acc,
        });
        if cfg.target_accuracy.is_some_and(|t| acc >= t) {
            break;
        }
    }
    Ok((net, history))
}
