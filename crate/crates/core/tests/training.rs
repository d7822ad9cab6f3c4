use topoclass::data::{gen_annulus2d, LabeledPointCloud};
use topoclass::network::{build_mlp, build_paper_net, LayerSpec, Mlp};
use topoclass::numerics::{Rng, Vector};
use topoclass::training::{cross_entropy, gradients, mean_loss, train, TrainConfig};

fn blobs(n: usize, seed: u64) -> LabeledPointCloud {
    let mut rng = Rng::new(seed);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2 {
        let cx = if class == 0 { -2.0 } else { 2.0 };
        for _ in 0..n {
            points.push(vec![cx + 0.5 * rng.normal(), 0.5 * rng.normal()]);
            labels.push(class);
        }
    }
    LabeledPointCloud::new(2, 2, points, labels).unwrap()
}

#[test]
fn separable_blobs_reach_full_accuracy() {
    let cloud = blobs(100, 1);
    let net = build_paper_net(&mut Rng::new(1));
    let cfg = TrainConfig {
        epochs: 200,
        target_accuracy: Some(1.0),
        ..Default::default()
    };
    let (_, history) = train(&net, &cloud, &cfg).unwrap();
    assert_eq!(history.final_accuracy(), 1.0);
    assert!(history.epochs.len() <= 200);
}

#[test]
fn training_is_deterministic() {
    let cloud = gen_annulus2d(100, 3).unwrap();
    let net = build_paper_net(&mut Rng::new(3));
    let cfg = TrainConfig {
        epochs: 20,
        seed: 3,
        ..Default::default()
    };
    let (a, ha) = train(&net, &cloud, &cfg).unwrap();
    let (b, hb) = train(&net, &cloud, &cfg).unwrap();
    assert_eq!(ha, hb);
    assert_eq!(a, b);
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    ha.write_csv(&mut csv_a).unwrap();
    hb.write_csv(&mut csv_b).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn initial_loss_is_near_ln2() {
    let cloud = gen_annulus2d(200, 4).unwrap();
    for seed in 0..5 {
        let net = build_paper_net(&mut Rng::new(seed));
        let loss = mean_loss(&net, &cloud).unwrap();
        assert!(
            (loss - std::f64::consts::LN_2).abs() < 0.2,
            "seed {seed}: {loss}"
        );
    }
}

#[test]
fn history_losses_are_finite_and_accuracies_bounded() {
    let cloud = gen_annulus2d(50, 5).unwrap();
    let net = build_paper_net(&mut Rng::new(5));
    let cfg = TrainConfig {
        epochs: 30,
        target_accuracy: None,
        ..Default::default()
    };
    let (_, history) = train(&net, &cloud, &cfg).unwrap();
    assert_eq!(history.epochs.len(), 30);
    for (i, r) in history.epochs.iter().enumerate() {
        assert_eq!(r.epoch, i + 1);
        assert!(r.loss.is_finite() && r.loss >= 0.0);
        assert!((0.0..=1.0).contains(&r.accuracy));
    }
}

fn with_param(net: &Mlp, layer: usize, index: usize, delta: f64) -> Mlp {
    let mut layers = net.layers().to_vec();
    let l = &layers[layer];
    let mut weight = l.weight().clone();
    let mut bias = l.bias().to_vec();
    let wlen = weight.as_slice().len();
    if index < wlen {
        weight.as_mut_slice()[index] += delta;
    } else {
        bias[index - wlen] += delta;
    }
    layers[layer] = LayerSpec::named(weight, bias, l.activation().name()).unwrap();
    Mlp::new(layers).unwrap()
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = Rng::new(11);
    let h = 1e-5;
    let mut tested = 0;
    while tested < 20 {
        let net = build_mlp(&[3, 4, 3, 2], &["relu", "relu", "softmax"], &mut rng).unwrap();
        let x: Vector = (0..3).map(|_| rng.normal()).collect();
        let label = rng.index(2);
        let cache = net.forward_cached(&x).unwrap();
        if cache.pre_activations[..2]
            .iter()
            .flatten()
            .any(|z| z.abs() < 1e-3)
        {
            continue;
        }
        tested += 1;
        let loss = |n: &Mlp| cross_entropy(&n.forward(&x).unwrap(), label).unwrap();
        let grads = gradients(&net, &x, label).unwrap();
        for (li, g) in grads.iter().enumerate() {
            let analytic: Vec<f64> = g.weight.as_slice().iter().chain(&g.bias).copied().collect();
            for (idx, a) in analytic.iter().enumerate() {
                let fd = (loss(&with_param(&net, li, idx, h))
                    - loss(&with_param(&net, li, idx, -h)))
                    / (2.0 * h);
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
                assert!(rel < 1e-4, "layer {li} param {idx}: {a} vs {fd}");
            }
        }
    }
}
