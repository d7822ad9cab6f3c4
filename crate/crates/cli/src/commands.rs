use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use topoclass::data::{gen_bands, gen_shells, load_cloud, LabeledPointCloud, ShellSpec};
use topoclass::isomap::{isomap_with, IsomapOptions, DEFAULT_TARGET_DIM};
use topoclass::network::{build_mlp, build_paper_net, load_model, Mlp};
use topoclass::numerics::{Rng, Vector};
use topoclass::topology::{
    check_separability, component_count, linear_rank, net_witness, singular_values, urysohn_binary,
    urysohn_multiclass, ScalarField, DEFAULT_INNER_R, DEFAULT_OUTER_R,
};
use topoclass::training::{train, TrainConfig};
use topoclass::Error;

use crate::svg::{self, Style};
use crate::{
    CheckSepArgs, Cli, Command, Format, GenArgs, IsomapArgs, SvgArgs, SweepArgs, TraceArgs,
    TrainArgs, TrainOpts, UrysohnArgs, WitnessArgs,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_QUALITY: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NOT_APPLICABLE: u8 = 3;

/// Largest output difference accepted for a witness pair.
const WITNESS_TOL: f64 = 1e-9;

/// Largest deviation of a separator from the class index on a sample.
const SEPARATOR_TOL: f64 = 1e-12;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotApplicable(_) => EXIT_NOT_APPLICABLE,
            Error::Convergence { .. }
            | Error::Numerical(_)
            | Error::Separation(_)
            | Error::Disconnected { .. } => EXIT_QUALITY,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type Outcome = Result<u8, Failure>;

struct Context<'a> {
    seed: u64,
    out_dir: &'a Path,
    format: Format,
}

impl Context<'_> {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    fn write(&self, p: &Path, contents: &str) -> Result<PathBuf, Failure> {
        let path = self.path(p);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        Ok(path)
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let ctx = Context {
        seed: cli.seed,
        out_dir: &cli.out_dir,
        format: cli.format,
    };
    match &cli.command {
        Command::Gen(a) => gen(&ctx, a),
        Command::Train(a) => train_cmd(&ctx, a),
        Command::Trace(a) => trace(&ctx, a),
        Command::CheckSep(a) => check_sep(&ctx, a),
        Command::Witness(a) => witness(&ctx, a),
        Command::SweepBottleneck(a) => sweep(&ctx, a),
        Command::Isomap(a) => isomap_cmd(&ctx, a),
        Command::Urysohn(a) => urysohn(&ctx, a),
    }
}

fn utf8(buf: Vec<u8>) -> String {
    String::from_utf8(buf).expect("writers emit UTF-8")
}

fn cloud_text(cloud: &LabeledPointCloud, format: Format) -> Result<String, Failure> {
    Ok(match format {
        Format::Json => cloud.to_json()? + "\n",
        Format::Csv => {
            let mut buf = Vec::new();
            cloud.write_csv(&mut buf)?;
            utf8(buf)
        }
    })
}

fn style(a: &SvgArgs) -> Result<Style, Failure> {
    let colors: Vec<String> = a
        .colors
        .split(',')
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    if colors.is_empty() {
        return Err(Failure::usage("--colors needs at least one color"));
    }
    let sizes = [a.svg_width, a.svg_height, a.point_radius];
    if sizes.iter().any(|&v| !(v > 0.0 && v.is_finite()))
        || a.svg_margin.is_nan()
        || a.svg_margin < 0.0
    {
        return Err(Failure::usage("SVG sizes must be positive"));
    }
    Ok(Style {
        width: a.svg_width,
        height: a.svg_height,
        margin: a.svg_margin,
        point_radius: a.point_radius,
        colors,
    })
}

fn fmt_point(p: &[f64]) -> String {
    p.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_bands(specs: &[String]) -> Result<Vec<(f64, f64)>, Failure> {
    specs
        .iter()
        .map(|s| {
            let (lo, hi) = s
                .split_once(':')
                .ok_or_else(|| Failure::usage(format!("band `{s}` is not of the form lo:hi")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Failure::usage(format!("band `{s}` has a bad number")))
            };
            Ok((parse(lo)?, parse(hi)?))
        })
        .collect()
}

fn gen(ctx: &Context, a: &GenArgs) -> Outcome {
    let cloud = if a.annulus {
        if a.dim != 2 {
            return Err(Failure::usage(
                "--annulus is planar; use --shells with --dim",
            ));
        }
        if !a.bands.is_empty() {
            return Err(Failure::usage("--bands requires --shells"));
        }
        gen_shells(&ShellSpec {
            dim: 2,
            inner_max_radius: a.inner_max,
            outer_min_radius: a.outer_min,
            outer_max_radius: a.outer_max,
            samples_per_class: a.n,
            seed: ctx.seed,
        })?
    } else if !a.bands.is_empty() {
        gen_bands(a.dim, &parse_bands(&a.bands)?, a.n, ctx.seed)?
    } else {
        gen_shells(&ShellSpec {
            dim: a.dim,
            inner_max_radius: a.inner_max,
            outer_min_radius: a.outer_min,
            outer_max_radius: a.outer_max,
            samples_per_class: a.n,
            seed: ctx.seed,
        })?
    };
    let path = ctx.write(&a.output, &cloud_text(&cloud, ctx.format)?)?;
    say!(
        "wrote {} points (dimension {}, {} classes) to {}",
        cloud.len(),
        cloud.dim(),
        cloud.class_count(),
        path.display()
    );
    for (k, (size, (lo, hi))) in cloud
        .class_sizes()
        .iter()
        .zip(cloud.norm_ranges())
        .enumerate()
    {
        say!("class {k}: {size} points, norm in [{lo:.4}, {hi:.4}]");
    }
    Ok(EXIT_OK)
}

fn train_config(opts: &TrainOpts, seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: opts.lr,
        epochs: opts.epochs,
        batch_size: opts.batch,
        seed,
        target_accuracy: Some(opts.target),
    }
}

/// ReLU on every layer but a softmax output.
fn classifier_acts(layers: usize) -> Vec<&'static str> {
    let mut acts = vec!["relu"; layers.saturating_sub(1)];
    acts.push("softmax");
    acts
}

fn train_cmd(ctx: &Context, a: &TrainArgs) -> Outcome {
    let cloud = load_cloud(&a.data)?;
    let mut rng = Rng::new(ctx.seed);
    let net = if a.paper_net {
        build_paper_net(&mut rng)
    } else if a.acts.is_empty() {
        build_mlp(
            &a.dims,
            &classifier_acts(a.dims.len().saturating_sub(1)),
            &mut rng,
        )?
    } else {
        let names: Vec<&str> = a.acts.iter().map(String::as_str).collect();
        build_mlp(&a.dims, &names, &mut rng)?
    };
    let cfg = train_config(&a.opts, ctx.seed);
    let (net, history) = train(&net, &cloud, &cfg)?;
    let model = ctx.write(&a.model, &(net.to_json()? + "\n"))?;
    let mut buf = Vec::new();
    history.write_csv(&mut buf)?;
    let hist = ctx.write(&a.history, &utf8(buf))?;
    let acc = history.final_accuracy();
    say!(
        "dims {:?}: accuracy {acc:.4} after {} epochs (best {:.4})",
        net.dims(),
        history.epochs.len(),
        history.best_accuracy()
    );
    say!("wrote {} and {}", model.display(), hist.display());
    if acc >= a.opts.target {
        Ok(EXIT_OK)
    } else {
        say!("target accuracy {} not reached", a.opts.target);
        Ok(EXIT_QUALITY)
    }
}

#[derive(Serialize)]
struct StageEntry {
    index: usize,
    name: String,
    layer: usize,
    pre_activation: bool,
    dim: usize,
    /// Isomap details when the stage was projected to 3-D for plotting.
    isomap: Option<ProjectionInfo>,
    linear_rank: usize,
    singular_values: Vec<f64>,
    /// Second singular value over the first; 0 for a collapsed cloud.
    singular_value_ratio: f64,
    /// kNN-graph components of each class.
    component_counts: Vec<usize>,
    svg: String,
    csv: Option<String>,
}

#[derive(Serialize)]
struct ProjectionInfo {
    k_used: usize,
    distinct_points: usize,
    stress: f64,
    eigenvalues: Vec<f64>,
    negative_eigenvalues_clamped: bool,
}

#[derive(Serialize)]
struct TraceIndex {
    dims: Vec<usize>,
    isomap_k: usize,
    component_k: usize,
    rank_tol: f64,
    stages: Vec<StageEntry>,
}

fn class_components(cloud: &LabeledPointCloud, k: usize) -> Result<Vec<usize>, Failure> {
    cloud
        .by_class()
        .iter()
        .map(|pts| {
            if pts.len() <= 1 || k == 0 {
                Ok(pts.len())
            } else {
                Ok(component_count(pts, k.min(pts.len() - 1))?)
            }
        })
        .collect()
}

fn trace(ctx: &Context, a: &TraceArgs) -> Outcome {
    let net = load_model(&a.model)?;
    let cloud = load_cloud(&a.data)?;
    let style = style(&a.svg)?;
    if a.k == 0 {
        return Err(Failure::usage("--k must be positive"));
    }
    let trace = net.forward_trace(&cloud, a.pre_activation)?;
    let mut stages = Vec::new();
    for (i, stage) in trace.stages.iter().enumerate() {
        let pts = stage.cloud.points();
        let dim = stage.cloud.dim();
        let (plotted, isomap) = if dim > DEFAULT_TARGET_DIM {
            let opts = IsomapOptions {
                k: a.k,
                target_dim: DEFAULT_TARGET_DIM,
                grow_k: true,
                merge_duplicates: true,
            };
            let out = isomap_with(pts, &opts)?;
            let info = ProjectionInfo {
                k_used: out.k_used,
                distinct_points: out.distinct_points,
                stress: out.embedding.stress,
                eigenvalues: out.embedding.eigenvalues.clone(),
                negative_eigenvalues_clamped: out.embedding.negative_eigenvalues_clamped,
            };
            (out.embedding.coordinates, Some(info))
        } else {
            (pts.to_vec(), None)
        };
        let sv = singular_values(pts);
        let ratio = match sv.as_slice() {
            [s0, s1, ..] if *s0 > 0.0 => s1 / s0,
            _ => 0.0,
        };
        let mut title = format!("{i}: {} (dim {dim})", stage.name);
        if isomap.is_some() {
            title.push_str(", Isomap to 3-D");
        }
        let svg_name = format!("stage_{i:02}.svg");
        let scene = svg::scatter(&plotted, stage.cloud.labels(), &title, &style);
        ctx.write(Path::new(&svg_name), &scene.render())?;
        let csv = if ctx.format == Format::Csv {
            let name = format!("stage_{i:02}.csv");
            let mut text = String::new();
            for p in plotted.iter().zip(stage.cloud.labels()) {
                let row: Vec<String> = p.0.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(text, "{},{}", row.join(","), p.1);
            }
            let d = plotted.first().map_or(0, Vec::len);
            let header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
            ctx.write(
                Path::new(&name),
                &format!("{},label\n{text}", header.join(",")),
            )?;
            Some(name)
        } else {
            None
        };
        stages.push(StageEntry {
            index: i,
            name: stage.name.clone(),
            layer: stage.layer,
            pre_activation: stage.pre_activation,
            dim,
            isomap,
            linear_rank: linear_rank(pts, a.rank_tol),
            singular_values: sv,
            singular_value_ratio: ratio,
            component_counts: class_components(&stage.cloud, a.component_k)?,
            svg: svg_name,
            csv,
        });
    }
    for s in &stages {
        say!(
            "{:>2} {:<14} dim {} rank {} components {:?}",
            s.index,
            s.name,
            s.dim,
            s.linear_rank,
            s.component_counts
        );
    }
    let index = TraceIndex {
        dims: trace.dims(),
        isomap_k: a.k,
        component_k: a.component_k,
        rank_tol: a.rank_tol,
        stages,
    };
    let text = serde_json::to_string_pretty(&index).map_err(Error::from)? + "\n";
    let path = ctx.write(&a.index, &text)?;
    say!("wrote {} stages to {}", index.stages.len(), path.display());
    Ok(EXIT_OK)
}

fn check_sep(ctx: &Context, a: &CheckSepArgs) -> Outcome {
    let net = load_model(&a.model)?;
    let cloud = load_cloud(&a.data)?;
    let names: Vec<&str> = a.criteria.iter().map(String::as_str).collect();
    let report = check_separability(&net, &cloud, &names)?;
    let path = ctx.write(&a.report, &(report.to_json()? + "\n"))?;
    if let Some(ok) = report.voronoi_ok {
        say!(
            "voronoi: {} ({} of {} points outside their cell)",
            if ok { "separated" } else { "not separated" },
            report.violating_points.len(),
            report.point_count
        );
        for v in report.violating_points.iter().take(a.show) {
            let assigned = v
                .assigned
                .map_or("boundary".to_string(), |c| format!("class {c}"));
            say!("  point {} (class {}) -> {assigned}", v.index, v.true_class);
        }
        if report.violating_points.len() > a.show {
            say!("  ...");
        }
    }
    if let Some(ok) = report.disc_ok {
        let gap = report
            .min_inter_disc_gap
            .map_or("n/a".to_string(), |g| format!("{g:.6}"));
        say!(
            "disc: {} (minimum gap {gap})",
            if ok { "disjoint" } else { "overlapping" }
        );
    }
    say!("wrote {}", path.display());
    let ok = report.voronoi_ok.or(report.disc_ok).unwrap_or(false);
    Ok(if ok { EXIT_OK } else { EXIT_QUALITY })
}

fn witness(ctx: &Context, a: &WitnessArgs) -> Outcome {
    let net = load_model(&a.model)?;
    let w = match net_witness(&net, a.inner_r, a.outer_r) {
        Err(Error::NotApplicable(_)) => {
            say!("no bottleneck; theorem does not apply");
            return Ok(EXIT_NOT_APPLICABLE);
        }
        other => other?,
    };
    let text = serde_json::to_string_pretty(&w).map_err(Error::from)? + "\n";
    let path = ctx.write(&a.output, &text)?;
    say!(
        "p1 = {:?} (label 0), p2 = {:?} (label 1)",
        w.witness.p1,
        w.witness.p2
    );
    say!("shared first-layer image {:?}", w.first_layer_p1);
    say!("output difference {:e}", w.output_difference);
    say!("wrote {}", path.display());
    Ok(if w.output_difference <= WITNESS_TOL {
        EXIT_OK
    } else {
        EXIT_QUALITY
    })
}

struct SweepRow {
    width: usize,
    runs: usize,
    successes: usize,
    best: f64,
    mean: f64,
    witness: Option<(f64, Vector, Vector)>,
}

fn sweep(ctx: &Context, a: &SweepArgs) -> Outcome {
    let cloud = load_cloud(&a.data)?;
    if a.widths.is_empty() || a.runs == 0 {
        return Err(Failure::usage("need at least one width and one run"));
    }
    let jobs: Vec<(usize, u64)> = a
        .widths
        .iter()
        .flat_map(|&w| (0..a.runs).map(move |r| (w, r)))
        .collect();
    let results: Vec<(Mlp, f64)> = jobs
        .par_iter()
        .map(|&(w, r)| {
            let seed = ctx.seed.wrapping_add(r);
            let mut dims = vec![cloud.dim(), w];
            dims.extend(&a.hidden);
            dims.push(cloud.class_count());
            let net = build_mlp(&dims, &classifier_acts(dims.len() - 1), &mut Rng::new(seed))?;
            let (net, history) = train(&net, &cloud, &train_config(&a.opts, seed))?;
            Ok((net, history.best_accuracy()))
        })
        .collect::<topoclass::Result<_>>()?;

    let mut rows = Vec::new();
    for (chunk, &width) in results.chunks(a.runs as usize).zip(&a.widths) {
        let (best_net, best) =
            chunk
                .iter()
                .fold((&chunk[0].0, f64::NEG_INFINITY), |(n, b), (net, acc)| {
                    if *acc > b {
                        (net, *acc)
                    } else {
                        (n, b)
                    }
                });
        let witness = if width < cloud.dim() {
            let w = net_witness(best_net, DEFAULT_INNER_R, DEFAULT_OUTER_R)?;
            Some((w.output_difference, w.witness.p1, w.witness.p2))
        } else {
            None
        };
        rows.push(SweepRow {
            width,
            runs: chunk.len(),
            successes: chunk.iter().filter(|(_, acc)| *acc >= a.success).count(),
            best,
            mean: chunk.iter().map(|(_, acc)| acc).sum::<f64>() / chunk.len() as f64,
            witness,
        });
    }

    let mut text = String::from(
        "width,runs,successes,best_accuracy,mean_accuracy,witness_gap,witness_p1,witness_p2\n",
    );
    for r in &rows {
        let (gap, p1, p2) = match &r.witness {
            Some((g, p1, p2)) => (g.to_string(), fmt_point(p1), fmt_point(p2)),
            None => Default::default(),
        };
        let _ = writeln!(
            text,
            "{},{},{},{},{},{gap},{p1},{p2}",
            r.width, r.runs, r.successes, r.best, r.mean
        );
        say!(
            "width {}: {}/{} runs reach {}, best {:.4}{}",
            r.width,
            r.successes,
            r.runs,
            a.success,
            r.best,
            if gap.is_empty() {
                String::new()
            } else {
                format!(", witness gap {gap}")
            }
        );
    }
    let path = ctx.write(&a.output, &text)?;
    say!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn isomap_cmd(ctx: &Context, a: &IsomapArgs) -> Outcome {
    let cloud = load_cloud(&a.data)?;
    let style = style(&a.svg)?;
    let opts = IsomapOptions {
        k: a.k,
        target_dim: a.target_dim,
        grow_k: a.grow_k,
        merge_duplicates: a.merge_duplicates,
    };
    let out = isomap_with(cloud.points(), &opts)?;
    let e = &out.embedding;
    let text = match ctx.format {
        Format::Json => e.to_json()? + "\n",
        Format::Csv => {
            let mut buf = Vec::new();
            e.write_csv(&mut buf, Some(cloud.labels()))?;
            utf8(buf)
        }
    };
    let default = match ctx.format {
        Format::Json => "embedding.json",
        Format::Csv => "embedding.csv",
    };
    let path = ctx.write(a.output.as_deref().unwrap_or(Path::new(default)), &text)?;
    let title = format!("Isomap, k = {}, {} points", out.k_used, cloud.len());
    let scene = svg::scatter(&e.coordinates, cloud.labels(), &title, &style);
    let svg_path = ctx.write(&a.svg_file, &scene.render())?;
    say!(
        "k {} ({} distinct points), stress {:.3e}{}",
        out.k_used,
        out.distinct_points,
        e.stress,
        if e.negative_eigenvalues_clamped {
            ", negative eigenvalues clamped"
        } else {
            ""
        }
    );
    say!("wrote {} and {}", path.display(), svg_path.display());
    Ok(EXIT_OK)
}

fn urysohn(ctx: &Context, a: &UrysohnArgs) -> Outcome {
    let cloud = load_cloud(&a.data)?;
    let style = style(&a.svg)?;
    let finite = a.grid_min.is_finite() && a.grid_max.is_finite();
    if a.grid_n < 2 || !finite || a.grid_min >= a.grid_max {
        return Err(Failure::usage("grid needs at least 2 nodes and min < max"));
    }
    let classes = cloud.by_class();
    let field: Box<dyn ScalarField> = if classes.len() == 2 {
        Box::new(urysohn_binary(&classes[0], &classes[1])?)
    } else {
        Box::new(urysohn_multiclass(&classes)?)
    };

    let values: Vec<f64> = cloud.points().par_iter().map(|p| field.eval(p)).collect();
    let mut text = String::new();
    let header: Vec<String> = (0..cloud.dim()).map(|j| format!("x{j}")).collect();
    let _ = writeln!(text, "{},label,value", header.join(","));
    let mut worst: f64 = 0.0;
    for ((p, &label), v) in cloud.points().iter().zip(cloud.labels()).zip(&values) {
        worst = worst.max((v - label as f64).abs());
        let _ = writeln!(text, "{},{label},{v}", fmt_point(p).replace(';', ","));
    }
    let samples = ctx.write(&a.samples, &text)?;
    say!("largest deviation from the class index on samples: {worst:e}");
    say!("wrote {}", samples.display());

    if cloud.dim() == 2 {
        let n = a.grid_n;
        let step = (a.grid_max - a.grid_min) / (n - 1) as f64;
        let node = |i: usize| {
            if i + 1 == n {
                a.grid_max
            } else {
                a.grid_min + i as f64 * step
            }
        };
        let grid: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| field.eval(&[node(j), node(i)])).collect())
            .collect();
        let mut text = String::from("x,y,value\n");
        for (i, row) in grid.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(text, "{},{},{v}", node(j), node(i));
            }
        }
        let grid_path = ctx.write(&a.grid, &text)?;
        let vmax = (classes.len() - 1) as f64;
        let title = format!("separator over {} classes", classes.len());
        let scene = svg::heatmap(
            &grid,
            a.grid_min,
            a.grid_max,
            vmax,
            cloud.points(),
            cloud.labels(),
            &title,
            &style,
        );
        let svg_path = ctx.write(&a.svg_file, &scene.render())?;
        say!("wrote {} and {}", grid_path.display(), svg_path.display());
    } else {
        say!(
            "grid and heat map skipped: data is {}-dimensional",
            cloud.dim()
        );
    }
    Ok(if worst <= SEPARATOR_TOL {
        EXIT_OK
    } else {
        EXIT_QUALITY
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes() {
        let code = |e: Error| Failure::from(e).code;
        assert_eq!(code(Error::Schema("x".into())), EXIT_USAGE);
        assert_eq!(code(Error::Config("x".into())), EXIT_USAGE);
        assert_eq!(code(Error::NotApplicable("x".into())), EXIT_NOT_APPLICABLE);
        assert_eq!(code(Error::Numerical("x".into())), EXIT_QUALITY);
    }

    #[test]
    fn bands_parse() {
        let b = parse_bands(&["0:0.5".into(), " 1 : 2".into()]).unwrap();
        assert_eq!(b, vec![(0.0, 0.5), (1.0, 2.0)]);
        assert_eq!(parse_bands(&["1-2".into()]).unwrap_err().code, EXIT_USAGE);
        assert_eq!(parse_bands(&["a:2".into()]).unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn classifier_activations() {
        assert_eq!(classifier_acts(1), vec!["softmax"]);
        assert_eq!(classifier_acts(3), vec!["relu", "relu", "softmax"]);
    }
}
