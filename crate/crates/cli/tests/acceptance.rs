//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use topoclass::data::{gen_annulus2d, gen_bands, LabeledPointCloud};
use topoclass::isomap::{classical_mds, geodesic_distances, pairwise_distances, NeighborGraph};
use topoclass::network::{LayerSpec, Mlp};
use topoclass::numerics::{dist, Matrix, Rng, Vector};
use topoclass::topology::{
    kernel_witness, simplex_class, urysohn_binary, urysohn_multiclass, ScalarField, SimplexClass,
    BOUNDARY_TOL,
};
use topoclass::training::{accuracy, cross_entropy, gradients};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_topoclass")
}

/// Runs the CLI in `dir` and returns its exit code and stdout.
fn run(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.normal())
}

fn random_net(dims: &[usize], rng: &mut Rng) -> Mlp {
    let last = dims.len() - 2;
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i == last { "softmax" } else { "relu" };
            let bias = (0..w[1]).map(|_| 0.5 * rng.normal()).collect();
            LayerSpec::named(random_matrix(w[1], w[0], rng), bias, act).unwrap()
        })
        .collect();
    Mlp::new(layers).unwrap()
}

/// Trains the 2-5-5-2-2-2 network on the seed-0 annulus through the CLI.
fn trained_reference_net(dir: &Path) -> Result<f64, String> {
    let (code, _) = run(
        dir,
        &[
            "gen",
            "--annulus",
            "--n",
            "500",
            "--seed",
            "0",
            "-o",
            "data.json",
        ],
    );
    ensure(code == 0, || format!("gen exited {code}"))?;
    let start = Instant::now();
    let (code, out) = run(
        dir,
        &[
            "train",
            "--paper-net",
            "data.json",
            "--seed",
            "0",
            "--target",
            "1",
        ],
    );
    let secs = start.elapsed().as_secs_f64();
    ensure(code == 0, || format!("train exited {code}: {out}"))?;
    Ok(secs)
}

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let secs = trained_reference_net(dir.path())?;
    let history = fs::read_to_string(dir.path().join("history.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<&str> = history.lines().skip(1).collect();
    let last = rows.last().ok_or("empty history")?;
    let acc: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    ensure(rows.len() <= 500, || format!("{} epochs", rows.len()))?;
    ensure(acc >= 0.99, || format!("accuracy {acc}"))?;
    ensure(secs < 60.0, || format!("training took {secs:.1}s"))?;
    let (code, out) = run(dir.path(), &["check-sep", "model.json", "data.json"]);
    ensure(code == 0, || format!("check-sep exited {code}: {out}"))?;
    Ok(format!(
        "accuracy {acc} after {} epochs in {secs:.2}s; check-sep exit 0",
        rows.len()
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = Rng::new(2);
    let mut worst_first: f64 = 0.0;
    let mut worst_out: f64 = 0.0;
    for case in 0..100 {
        let cols = 2 + rng.index(9);
        let rows = 1 + rng.index(cols - 1);
        let w = random_matrix(rows, cols, &mut rng);
        let kw = kernel_witness(&w, 0.5, 1.5).map_err(|e| format!("case {case}: {e}"))?;
        let bias: Vector = (0..rows).map(|_| rng.normal()).collect();
        let first = LayerSpec::named(w.clone(), bias, "relu").unwrap();
        let f1 = dist(&first.apply(&kw.p1).unwrap(), &first.apply(&kw.p2).unwrap());
        worst_first = worst_first.max(f1);
        let cloud = LabeledPointCloud::new(cols, 2, vec![kw.p1.clone(), kw.p2.clone()], vec![0, 1])
            .unwrap();
        for _ in 0..5 {
            let mut dims = vec![rows];
            for _ in 0..rng.index(3) {
                dims.push(1 + rng.index(6));
            }
            dims.push(2);
            let tail = random_net(&dims, &mut rng);
            let mut layers = vec![first.clone()];
            layers.extend(tail.layers().iter().cloned());
            let net = Mlp::new(layers).unwrap();
            let out = dist(&net.forward(&kw.p1).unwrap(), &net.forward(&kw.p2).unwrap());
            worst_out = worst_out.max(out);
            let acc = accuracy(&net, &cloud).unwrap();
            ensure(acc < 1.0, || {
                format!("case {case}: a net separated the witness pair")
            })?;
        }
    }
    ensure(worst_first <= 1e-9, || {
        format!("first-layer gap {worst_first:e}")
    })?;
    ensure(worst_out <= 1e-9, || format!("output gap {worst_out:e}"))?;
    Ok(format!(
        "100 layers, 500 nets: max first-layer gap {worst_first:.1e}, max output gap {worst_out:.1e}, no pair separated"
    ))
}

fn criterion_3() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let (code, _) = run(d, &["gen", "--annulus", "--seed", "0", "-o", "data.json"]);
    ensure(code == 0, || format!("gen exited {code}"))?;
    let (code, out) = run(
        d,
        &[
            "sweep-bottleneck",
            "data.json",
            "--widths",
            "1,2,3,4,5",
            "--runs",
            "5",
            "--epochs",
            "500",
        ],
    );
    ensure(code == 0, || format!("sweep exited {code}: {out}"))?;
    let csv = fs::read_to_string(d.join("sweep.csv")).map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let width: usize = f[0].parse().unwrap();
        let successes: usize = f[2].parse().unwrap();
        let best: f64 = f[3].parse().unwrap();
        summary.push(format!("w{width}:{successes}/5"));
        if width == 1 {
            ensure(successes == 0, || format!("width 1 reached 99% ({best})"))?;
            let gap: f64 = f[5]
                .parse()
                .map_err(|_| "width 1 has no witness".to_string())?;
            ensure(gap <= 1e-9, || format!("width-1 witness gap {gap:e}"))?;
        } else {
            ensure(successes >= 4, || {
                format!("width {width}: {successes}/5 runs")
            })?;
        }
    }
    ensure(summary.len() == 5, || format!("{} rows", summary.len()))?;
    Ok(summary.join(" "))
}

/// Nearest simplex vertices by explicit squared distances; two vertices tie
/// when their squared distances differ by at most twice the boundary
/// tolerance (squared distances differ by twice the coordinate difference).
fn nearest_vertex(y: &[f64]) -> SimplexClass {
    let d: Vec<f64> = (0..y.len())
        .map(|i| {
            y.iter()
                .enumerate()
                .map(|(k, &v)| {
                    let e = if k == i { 1.0 } else { 0.0 };
                    (v - e) * (v - e)
                })
                .sum()
        })
        .collect();
    let best = (0..d.len()).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
    let unique = (0..d.len()).all(|k| k == best || d[k] - d[best] > 2.0 * BOUNDARY_TOL);
    if unique {
        SimplexClass::Class(best)
    } else {
        SimplexClass::Boundary
    }
}

fn criterion_4() -> Outcome {
    let mut rng = Rng::new(4);
    let mut ties = 0;
    for case in 0..10_000 {
        let n = 2 + rng.index(5);
        let mut v: Vec<f64> = (0..n).map(|_| (3.0 * rng.normal()).exp()).collect();
        if rng.unit() < 0.2 {
            // Exact tie between the largest coordinate and another one.
            let top = (0..n).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
            let other = (top + 1 + rng.index(n - 1)) % n;
            v[other] = v[top];
        }
        let s: f64 = v.iter().sum();
        let y: Vec<f64> = v.iter().map(|x| x / s).collect();
        let got = simplex_class(&y).map_err(|e| format!("case {case}: {e}"))?;
        let want = nearest_vertex(&y);
        if want == SimplexClass::Boundary {
            ties += 1;
        }
        ensure(got == want, || {
            format!("case {case}: {y:?} gave {got:?}, oracle {want:?}")
        })?;
    }
    Ok(format!("10000 points agree, {ties} on cell boundaries"))
}

fn criterion_5() -> Outcome {
    let cloud = gen_annulus2d(500, 5).map_err(|e| e.to_string())?;
    let classes = cloud.by_class();
    let f = urysohn_binary(&classes[0], &classes[1]).map_err(|e| e.to_string())?;
    let mut dev: f64 = 0.0;
    for (k, pts) in classes.iter().enumerate() {
        for p in pts {
            dev = dev.max((f.eval(p) - k as f64).abs());
        }
    }
    ensure(dev <= 1e-15, || format!("binary deviation {dev:e}"))?;

    let shells =
        gen_bands(3, &[(0.0, 0.5), (0.7, 1.2), (1.5, 2.0)], 300, 5).map_err(|e| e.to_string())?;
    let sc = shells.by_class();
    let g = urysohn_multiclass(&sc).map_err(|e| e.to_string())?;
    let mut mdev: f64 = 0.0;
    for (k, pts) in sc.iter().enumerate() {
        for p in pts {
            mdev = mdev.max((g.eval(p) - k as f64).abs());
        }
    }
    ensure(mdev <= 1e-15, || format!("multiclass deviation {mdev:e}"))?;

    let bound = 2.0 / f.gap();
    let mut rng = Rng::new(55);
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let x = [rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5)];
        // Half the pairs are close together, where quotients are largest.
        let scale = if i % 2 == 0 { 1e-3 } else { 1.0 };
        let y = [x[0] + scale * rng.normal(), x[1] + scale * rng.normal()];
        let q = (f.eval(&x) - f.eval(&y)).abs() / dist(&x, &y);
        worst = worst.max(q);
    }
    ensure(worst <= bound, || {
        format!("quotient {worst} exceeds {bound}")
    })?;
    Ok(format!(
        "deviations {dev:.0e} / {mdev:.0e}; max quotient {worst:.3} <= 2/d_min = {bound:.3}"
    ))
}

fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(i, j, w) in edges {
        d[i][j] = d[i][j].min(w);
        d[j][i] = d[j][i].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn criterion_6() -> Outcome {
    let mut rng = Rng::new(6);
    for g in 0..20 {
        let n = 30;
        let mut edges = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        // A random spanning tree keeps the graph connected.
        for i in 1..n {
            let parent = order[rng.index(i)];
            edges.push((order[i], parent, (1 + rng.index(20)) as f64));
        }
        for i in 0..n {
            for j in i + 1..n {
                if rng.unit() < 0.1
                    && !edges
                        .iter()
                        .any(|e| (e.0, e.1) == (i, j) || (e.0, e.1) == (j, i))
                {
                    edges.push((i, j, (1 + rng.index(20)) as f64));
                }
            }
        }
        let graph = NeighborGraph::from_edges(n, &edges).map_err(|e| e.to_string())?;
        let got = geodesic_distances(&graph).map_err(|e| e.to_string())?;
        let want = floyd_warshall(n, &edges);
        for i in 0..n {
            for j in 0..n {
                ensure(got[(i, j)] == want[i][j], || {
                    format!("graph {g}: d({i},{j}) = {} vs {}", got[(i, j)], want[i][j])
                })?;
            }
        }
    }

    let mut worst: f64 = 0.0;
    for n in [4, 10, 25, 50] {
        for _ in 0..3 {
            let pts: Vec<Vector> = (0..n)
                .map(|_| (0..3).map(|_| rng.uniform(-2.0, 2.0)).collect())
                .collect();
            let d = pairwise_distances(&pts);
            let e = classical_mds(&d, 3).map_err(|e| e.to_string())?;
            let r = pairwise_distances(&e.coordinates);
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((r[(i, j)] - d[(i, j)]).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-6, || format!("MDS distance error {worst:e}"))?;

    let mut stress: f64 = 0.0;
    for _ in 0..5 {
        let flat: Vec<Vector> = (0..40)
            .map(|_| vec![rng.uniform(-3.0, 3.0), rng.uniform(-1.0, 1.0)])
            .collect();
        stress = stress.max(classical_mds(&pairwise_distances(&flat), 2).unwrap().stress);
        // The same plane tilted inside R³.
        let (c, s) = (0.6_f64, 0.8_f64);
        let tilted: Vec<Vector> = flat
            .iter()
            .map(|p| vec![p[0], c * p[1], s * p[1]])
            .collect();
        stress = stress.max(
            classical_mds(&pairwise_distances(&tilted), 2)
                .unwrap()
                .stress,
        );
    }
    ensure(stress < 1e-9, || format!("planar stress {stress:e}"))?;
    Ok(format!(
        "20 graphs exact; MDS max distance error {worst:.1e}; planar stress {stress:.1e}"
    ))
}

fn criterion_7() -> Outcome {
    let mut rng = Rng::new(7);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut nets = 0;
    while nets < 20 {
        let mut dims = vec![1 + rng.index(5)];
        for _ in 0..1 + rng.index(3) {
            dims.push(1 + rng.index(6));
        }
        dims.push(2 + rng.index(3));
        let net = random_net(&dims, &mut rng);
        let x: Vector = (0..dims[0]).map(|_| rng.normal()).collect();
        let label = rng.index(net.output_dim());
        // Central differences are meaningless next to a ReLU kink.
        let cache = net.forward_cached(&x).unwrap();
        let near_kink = cache.pre_activations[..net.depth() - 1]
            .iter()
            .flatten()
            .any(|z| z.abs() < 1e-3);
        if near_kink {
            continue;
        }
        nets += 1;
        let loss = |n: &Mlp| cross_entropy(&n.forward(&x).unwrap(), label).unwrap();
        let grads = gradients(&net, &x, label).unwrap();
        let perturbed = |layer: usize, w: Option<(usize, usize)>, b: Option<usize>, delta: f64| {
            let mut layers = net.layers().to_vec();
            let l = &layers[layer];
            let mut weight = l.weight().clone();
            let mut bias = l.bias().to_vec();
            if let Some(ij) = w {
                weight[ij] += delta;
            }
            if let Some(i) = b {
                bias[i] += delta;
            }
            layers[layer] = LayerSpec::named(weight, bias, l.activation().name()).unwrap();
            Mlp::new(layers).unwrap()
        };
        for (li, g) in grads.iter().enumerate() {
            let (rows, cols) = g.weight.shape();
            let mut entries = Vec::new();
            for i in 0..rows {
                for j in 0..cols {
                    entries.push((Some((i, j)), None, g.weight[(i, j)]));
                }
                entries.push((None, Some(i), g.bias[i]));
            }
            for (w, b, analytic) in entries {
                let fd =
                    (loss(&perturbed(li, w, b, h)) - loss(&perturbed(li, w, b, -h))) / (2.0 * h);
                let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-6);
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    ensure(worst <= 1e-4, || format!("relative error {worst:e}"))?;
    Ok(format!(
        "{checked} partial derivatives on 20 nets, max relative error {worst:.1e}"
    ))
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    trained_reference_net(d)?;
    let (code, out) = run(
        d,
        &["trace", "model.json", "data.json", "--out-dir", "trace"],
    );
    ensure(code == 0, || format!("trace exited {code}: {out}"))?;
    let text = fs::read_to_string(d.join("trace/trace.json")).map_err(|e| e.to_string())?;
    let index: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let stages = index["stages"].as_array().ok_or("no stages")?;
    ensure(stages.len() == 7, || format!("{} stages", stages.len()))?;
    let s3 = &stages[3];
    let rank = s3["linear_rank"].as_u64().unwrap();
    let ratio = s3["singular_value_ratio"].as_f64().unwrap();
    ensure(rank <= 2, || format!("stage-3 rank {rank}"))?;
    let comps: Vec<u64> = stages
        .iter()
        .map(|s| s["component_counts"][0].as_u64().unwrap())
        .collect();
    let (a, b) = (comps[5], comps[6]);
    ensure(b <= a, || {
        format!("label-0 components rose from {a} to {b}")
    })?;
    Ok(format!(
        "stage-3 rank {rank} (sigma2/sigma1 = {ratio:.3}); label-0 components per stage {comps:?}"
    ))
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    files
}

fn criterion_9() -> Outcome {
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "gen",
            "--annulus",
            "--n",
            "200",
            "--seed",
            "9",
            "-o",
            "data.json",
        ],
        vec![
            "gen", "--shells", "--dim", "5", "--n", "100", "--seed", "9", "--format", "csv", "-o",
            "s5.csv",
        ],
        vec![
            "gen",
            "--shells",
            "--bands",
            "0:0.5,0.7:1.2,1.5:2",
            "--n",
            "100",
            "-o",
            "s3.json",
        ],
        vec![
            "train",
            "--paper-net",
            "data.json",
            "--seed",
            "9",
            "--epochs",
            "60",
        ],
        vec![
            "train",
            "--dims",
            "2,1,2",
            "data.json",
            "--epochs",
            "20",
            "--model",
            "bn.json",
            "--history",
            "bn.csv",
        ],
        vec![
            "trace",
            "model.json",
            "data.json",
            "--format",
            "csv",
            "--out-dir",
            "trace",
        ],
        vec!["check-sep", "model.json", "data.json"],
        vec!["witness", "bn.json"],
        vec![
            "sweep-bottleneck",
            "data.json",
            "--widths",
            "1,3",
            "--runs",
            "2",
            "--epochs",
            "30",
        ],
        vec!["isomap", "data.json"],
        vec![
            "isomap",
            "data.json",
            "--format",
            "csv",
            "--target-dim",
            "2",
        ],
        vec!["urysohn", "s3.json"],
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let mut files = 0;
    for cmd in &commands {
        let (c1, o1) = run(d, cmd);
        let first = snapshot(d);
        let (c2, o2) = run(d, cmd);
        let second = snapshot(d);
        ensure(c1 == c2 && c1 != 2, || {
            format!("{cmd:?} exited {c1} then {c2}: {o1}")
        })?;
        ensure(o1 == o2, || format!("{cmd:?} printed different output"))?;
        for (path, bytes) in &first {
            ensure(second.get(path) == Some(bytes), || {
                format!("{cmd:?} changed {}", path.display())
            })?;
        }
        files = second.len();
    }
    Ok(format!(
        "{} commands repeated, {files} files byte-identical",
        commands.len()
    ))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("1 reference net separates the annulus", criterion_1),
        ("2 kernel witness exactness", criterion_2),
        ("3 bottleneck width sweep", criterion_3),
        ("4 simplex Voronoi equivalence", criterion_4),
        ("5 Urysohn separators", criterion_5),
        ("6 Isomap small-scale correctness", criterion_6),
        ("7 gradient check", criterion_7),
        ("8 trace diagnostics", criterion_8),
        ("9 CLI determinism", criterion_9),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name} [{secs:.1}s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} [{secs:.1}s]: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
