use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dist, JacobiSolver, LanczosSolver, Matrix, SymmetricEigensolver, Vector};

/// Extra leading eigenvalues reported beyond the target dimension.
const EXTRA_EIGENVALUES: usize = 5;

/// Largest matrix handed to the dense Jacobi solver by [`classical_mds`].
const DENSE_LIMIT: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub coordinates: Vec<Vector>,
    /// Leading eigenvalues of the double-centred Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// `‖D(coords) − D‖_F / ‖D‖_F`.
    pub stress: f64,
    /// True when a negative eigenvalue among the used ones was clamped to 0.
    pub negative_eigenvalues_clamped: bool,
}

impl EmbeddingResult {
    pub(crate) fn collapsed(points: usize, target_dim: usize) -> Self {
        Self {
            coordinates: vec![vec![0.0; target_dim]; points],
            eigenvalues: vec![0.0; target_dim],
            stress: 0.0,
            negative_eigenvalues_clamped: false,
        }
    }

    pub fn target_dim(&self) -> usize {
        self.coordinates.first().map_or(0, Vec::len)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Header `x,y,z` (or `x0,x1,…` beyond three axes), plus `label` when given.
    pub fn write_csv<W: Write>(&self, mut out: W, labels: Option<&[usize]>) -> Result<()> {
        let dim = self.target_dim();
        let mut header: Vec<String> = if dim <= 3 {
            ["x", "y", "z"][..dim]
                .iter()
                .map(|s| s.to_string())
                .collect()
        } else {
            (0..dim).map(|i| format!("x{i}")).collect()
        };
        if labels.is_some() {
            header.push("label".into());
        }
        writeln!(out, "{}", header.join(","))?;
        for (i, c) in self.coordinates.iter().enumerate() {
            let mut row: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            if let Some(l) = labels {
                row.push(l[i].to_string());
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn pairwise_distances(points: &[Vector]) -> Matrix {
    let n = points.len();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = dist(&points[i], &points[j]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

fn check_distance_matrix(d: &Matrix) -> Result<()> {
    if !d.is_square() {
        return Err(Error::Domain(format!(
            "distance matrix is {}x{}",
            d.rows(),
            d.cols()
        )));
    }
    let scale = d.max_abs().max(1.0);
    for i in 0..d.rows() {
        if d[(i, i)].abs() > 1e-12 * scale {
            return Err(Error::Domain(format!("nonzero diagonal entry at {i}")));
        }
        for j in 0..i {
            if d[(i, j)] < 0.0 || d[(j, i)] < 0.0 {
                return Err(Error::Domain(format!("negative distance at ({i}, {j})")));
            }
            if (d[(i, j)] - d[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::Domain(format!("asymmetric distance at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Classical (Torgerson) scaling with the dense Jacobi solver up to 200
/// points and Lanczos above.
pub fn classical_mds(d: &Matrix, target_dim: usize) -> Result<EmbeddingResult> {
    if d.rows() <= DENSE_LIMIT {
        classical_mds_with(d, target_dim, &JacobiSolver)
    } else {
        classical_mds_with(d, target_dim, &LanczosSolver::default())
    }
}

/// `B = −½ H (D∘D) H`, `H = I − 11ᵀ/n`; coordinates are the leading
/// eigenvectors of `B` scaled by the square roots of their (clamped) eigenvalues.
pub fn classical_mds_with(
    d: &Matrix,
    target_dim: usize,
    solver: &dyn SymmetricEigensolver,
) -> Result<EmbeddingResult> {
    if target_dim == 0 {
        return Err(Error::Spec("target dimension must be positive".into()));
    }
    check_distance_matrix(d)?;
    let n = d.rows();
    if n == 0 {
        return Err(Error::EmptyInput("empty distance matrix".into()));
    }
    let sq = Matrix::from_fn(n, n, |i, j| {
        let v = 0.5 * (d[(i, j)] + d[(j, i)]);
        v * v
    });
    let row_mean: Vec<f64> = (0..n)
        .map(|i| sq.row(i).iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let b = Matrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand)
    });

    let wanted = (target_dim + EXTRA_EIGENVALUES).min(n);
    let eig = solver.leading(&b, wanted, 1e-12)?;
    let used = target_dim.min(eig.values.len());
    let clamped = eig.values[..used].iter().any(|&l| l < 0.0);
    let scales: Vec<f64> = eig.values[..used]
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    let coordinates: Vec<Vector> = (0..n)
        .map(|i| {
            (0..target_dim)
                .map(|k| {
                    if k < used {
                        scales[k] * eig.vectors[(i, k)]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    let embedded = pairwise_distances(&coordinates);
    let denom = d.frobenius_norm();
    let stress = if denom == 0.0 {
        0.0
    } else {
        embedded.sub(d)?.frobenius_norm() / denom
    };
    Ok(EmbeddingResult {
        coordinates,
        eigenvalues: eig.values,
        stress,
        negative_eigenvalues_clamped: clamped,
    })
}
