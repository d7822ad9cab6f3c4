use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dist, Rng, Vector};
use crate::registry::Registry;

/// Radius slack of the iterative solver relative to the optimum.
pub const ITERATIVE_SLACK: f64 = 0.01;

const CONTAIN_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Vector,
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, p: &[f64], eps: f64) -> bool {
        dist(&self.center, p) <= self.radius + eps
    }

    /// `‖c₁ − c₂‖ − r₁ − r₂`; positive exactly when the closed balls are disjoint.
    pub fn gap(&self, other: &Disc) -> f64 {
        dist(&self.center, &other.center) - self.radius - other.radius
    }
}

/// A minimum-enclosing-ball algorithm.
pub trait EnclosingBallSolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, points: &[Vector]) -> Result<Disc>;
}

/// `welzl` (exact), `badoiu-clarkson` (within 1% of optimal) and `auto`
/// (exact up to dimension 3, iterative above).
pub fn enclosing_ball_solvers() -> Registry<dyn EnclosingBallSolver> {
    Registry::<dyn EnclosingBallSolver>::new("enclosing-ball solver")
        .with("auto", || Box::new(AutoBall))
        .with("welzl", || Box::new(Welzl))
        .with("badoiu-clarkson", || Box::new(BadoiuClarkson::default()))
}

pub fn min_enclosing_ball(points: &[Vector]) -> Result<Disc> {
    AutoBall.solve(points)
}

fn validate(points: &[Vector]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::EmptyInput("enclosing ball of no points".into()))?;
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Dimension("points of mixed dimension".into()));
    }
    Ok(dim)
}

/// Grows the radius, if needed, so every point is inside.
fn make_containing(mut disc: Disc, points: &[Vector]) -> Disc {
    let far = points
        .iter()
        .map(|p| dist(&disc.center, p))
        .fold(0.0, f64::max);
    disc.radius = disc.radius.max(far);
    disc
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AutoBall;

impl EnclosingBallSolver for AutoBall {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn solve(&self, points: &[Vector]) -> Result<Disc> {
        if validate(points)? <= 3 {
            Welzl.solve(points)
        } else {
            BadoiuClarkson::default().solve(points)
        }
    }
}

/// Welzl's randomized algorithm (move-free iterative form, recursion depth
/// bounded by `dim + 1`). Points are visited in a fixed pseudo-random order.
#[derive(Clone, Copy, Debug, Default)]
pub struct Welzl;

impl EnclosingBallSolver for Welzl {
    fn name(&self) -> &'static str {
        "welzl"
    }

    fn solve(&self, points: &[Vector]) -> Result<Disc> {
        let dim = validate(points)?;
        let mut order: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        Rng::new(0x3e1f).shuffle(&mut order);
        let scale = points
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()))
            .max(1.0);
        let mut boundary = Vec::with_capacity(dim + 1);
        let disc = welzl(&order, order.len(), &mut boundary, dim, CONTAIN_EPS * scale)
            .expect("nonempty input yields a ball");
        Ok(make_containing(disc, points))
    }
}

fn welzl<'a>(
    points: &[&'a [f64]],
    n: usize,
    boundary: &mut Vec<&'a [f64]>,
    dim: usize,
    eps: f64,
) -> Option<Disc> {
    let mut ball = ball_through(boundary);
    if boundary.len() == dim + 1 {
        return ball;
    }
    for i in 0..n {
        let p = points[i];
        if ball.as_ref().is_some_and(|b| b.contains(p, eps)) {
            continue;
        }
        boundary.push(p);
        ball = welzl(points, i, boundary, dim, eps);
        boundary.pop();
    }
    ball
}

/// Smallest ball with every boundary point on its sphere; falls back to the
/// smallest enclosing ball of a subset when the points are affinely dependent.
fn ball_through(boundary: &[&[f64]]) -> Option<Disc> {
    match boundary {
        [] => None,
        [p] => Some(Disc {
            center: p.to_vec(),
            radius: 0.0,
        }),
        _ => circumball(boundary).or_else(|| smallest_subset_ball(boundary)),
    }
}

fn circumball(pts: &[&[f64]]) -> Option<Disc> {
    let p0 = pts[0];
    let u: Vec<Vector> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let m = u.len();
    // Gram system 2 G λ = |u_j|²
    let mut a = vec![vec![0.0; m + 1]; m];
    for j in 0..m {
        for k in 0..m {
            a[j][k] = 2.0 * crate::numerics::dot(&u[j], &u[k]);
        }
        a[j][m] = crate::numerics::dot(&u[j], &u[j]);
    }
    let scale = a
        .iter()
        .flat_map(|r| r[..m].iter())
        .fold(0.0f64, |s, v| s.max(v.abs()));
    let lambda = solve_dense(a, 1e-12 * scale)?;
    let mut center = p0.to_vec();
    for (l, uj) in lambda.iter().zip(&u) {
        center.iter_mut().zip(uj).for_each(|(c, x)| *c += l * x);
    }
    let radius = pts.iter().map(|p| dist(&center, p)).fold(0.0, f64::max);
    Some(Disc { center, radius })
}

fn smallest_subset_ball(pts: &[&[f64]]) -> Option<Disc> {
    let n = pts.len();
    let mut best: Option<Disc> = None;
    for mask in 1u32..(1 << n) {
        let subset: Vec<&[f64]> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| pts[i])
            .collect();
        if subset.len() == n {
            continue;
        }
        let Some(candidate) = ball_through(&subset) else {
            continue;
        };
        let fits = pts
            .iter()
            .all(|p| candidate.contains(p, 1e-12 * (1.0 + candidate.radius)));
        if fits && best.as_ref().is_none_or(|b| candidate.radius < b.radius) {
            best = Some(candidate);
        }
    }
    best
}

/// Gaussian elimination with partial pivoting on an augmented `m × (m+1)` system.
fn solve_dense(mut a: Vec<Vec<f64>>, pivot_tol: f64) -> Option<Vector> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= pivot_tol {
            return None;
        }
        a.swap(col, piv);
        for row in (col + 1)..m {
            let f = a[row][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(row);
            for (r, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *r -= f * p;
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = ((row + 1)..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][m] - s) / a[row][row];
    }
    Some(x)
}

/// Bădoiu–Clarkson core-set iteration: step the center toward the farthest
/// point with weight `1/(t+1)`. After `⌈1/ε²⌉` steps the covering radius is
/// within a factor `1 + ε` of optimal.
#[derive(Clone, Copy, Debug)]
pub struct BadoiuClarkson {
    pub epsilon: f64,
}

impl Default for BadoiuClarkson {
    fn default() -> Self {
        Self {
            epsilon: ITERATIVE_SLACK,
        }
    }
}

impl EnclosingBallSolver for BadoiuClarkson {
    fn name(&self) -> &'static str {
        "badoiu-clarkson"
    }

    fn solve(&self, points: &[Vector]) -> Result<Disc> {
        validate(points)?;
        let steps = (1.0 / (self.epsilon * self.epsilon)).ceil() as usize;
        let mut center = points[0].clone();
        let farthest = |c: &[f64]| {
            points
                .iter()
                .map(|p| (dist(c, p), p))
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .expect("nonempty")
        };
        let mut best = Disc {
            center: center.clone(),
            radius: farthest(&center).0,
        };
        for t in 1..=steps {
            let (r, q) = farthest(&center);
            if r < best.radius {
                best = Disc {
                    center: center.clone(),
                    radius: r,
                };
            }
            if r == 0.0 {
                break;
            }
            let w = 1.0 / (t as f64 + 1.0);
            center
                .iter_mut()
                .zip(q)
                .for_each(|(c, x)| *c += w * (x - *c));
        }
        let r = farthest(&center).0;
        if r < best.radius {
            best = Disc { center, radius: r };
        }
        Ok(make_containing(best, points))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscSeparation {
    pub separated: bool,
    pub discs: Vec<Disc>,
    /// Smallest pairwise gap between the class balls; `None` for a single class.
    pub min_gap: Option<f64>,
}

/// Sufficient certificate for disc separation: per-class minimum enclosing
/// balls that are pairwise disjoint.
pub fn check_disc_separation(classes: &[Vec<Vector>]) -> Result<DiscSeparation> {
    check_disc_separation_with(classes, &AutoBall)
}

pub fn check_disc_separation_with(
    classes: &[Vec<Vector>],
    solver: &dyn EnclosingBallSolver,
) -> Result<DiscSeparation> {
    let discs = classes
        .iter()
        .enumerate()
        .map(|(k, pts)| {
            solver.solve(pts).map_err(|e| match e {
                Error::EmptyInput(_) => Error::EmptyInput(format!("class {k} has no points")),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut min_gap: Option<f64> = None;
    for i in 0..discs.len() {
        for j in (i + 1)..discs.len() {
            let g = discs[i].gap(&discs[j]);
            min_gap = Some(min_gap.map_or(g, |m| m.min(g)));
        }
    }
    Ok(DiscSeparation {
        separated: min_gap.is_none_or(|g| g > 0.0),
        discs,
        min_gap,
    })
}
