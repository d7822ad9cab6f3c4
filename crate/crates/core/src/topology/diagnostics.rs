use crate::error::{Error, Result};
use crate::isomap::{connected_components, knn_graph};
use crate::numerics::{eigh_symmetric, Matrix, Vector};

/// Singular values of the mean-centred cloud, descending.
pub fn singular_values(points: &[Vector]) -> Vec<f64> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let dim = first.len();
    let n = points.len() as f64;
    let mean: Vector = (0..dim)
        .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n)
        .collect();
    let mut scatter = Matrix::zeros(dim, dim);
    for p in points {
        for i in 0..dim {
            let di = p[i] - mean[i];
            for j in 0..dim {
                scatter[(i, j)] += di * (p[j] - mean[j]);
            }
        }
    }
    match eigh_symmetric(&scatter, 1e-15) {
        Ok(e) => e.values.iter().map(|&l| l.max(0.0).sqrt()).collect(),
        Err(_) => vec![0.0; dim],
    }
}

/// Number of singular values above `rel_tol` times the largest one: the
/// dimension of the affine subspace the cloud effectively occupies.
pub fn linear_rank(points: &[Vector], rel_tol: f64) -> usize {
    let s = singular_values(points);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Connected components of the symmetric `k`-nearest-neighbour graph.
pub fn component_count(points: &[Vector], k: usize) -> Result<usize> {
    if k == 0 || k >= points.len() {
        return Err(Error::Spec(format!(
            "k = {k} needs 1 <= k < {} points",
            points.len()
        )));
    }
    Ok(connected_components(&knn_graph(points, k)?).len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn line_in_space_has_rank_one() {
        let pts: Vec<Vector> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.3;
                vec![1.0 + t, 2.0 - 2.0 * t, 0.5 * t]
            })
            .collect();
        assert_eq!(linear_rank(&pts, 1e-6), 1);
    }

    #[test]
    fn single_point_has_rank_zero() {
        assert_eq!(linear_rank(&[vec![1.0, 2.0, 3.0]], 1e-6), 0);
    }

    #[test]
    fn generic_cloud_has_full_rank() {
        let mut rng = Rng::new(10);
        let pts: Vec<Vector> = (0..100)
            .map(|_| (0..5).map(|_| rng.normal()).collect())
            .collect();
        assert_eq!(linear_rank(&pts, 1e-6), 5);
        let s = singular_values(&pts);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    fn cluster(center: &[f64], n: usize, rng: &mut Rng) -> Vec<Vector> {
        (0..n)
            .map(|_| center.iter().map(|c| c + rng.uniform(-0.5, 0.5)).collect())
            .collect()
    }

    #[test]
    fn separated_clusters_count_two() {
        let mut rng = Rng::new(3);
        let mut pts = cluster(&[0.0, 0.0], 30, &mut rng);
        pts.extend(cluster(&[100.0, 0.0], 30, &mut rng));
        assert_eq!(component_count(&pts, 3).unwrap(), 2);
    }

    #[test]
    fn dense_cluster_counts_one() {
        let mut rng = Rng::new(4);
        let pts = cluster(&[0.0, 0.0, 0.0], 60, &mut rng);
        assert_eq!(component_count(&pts, 3).unwrap(), 1);
    }

    #[test]
    fn k_out_of_range() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(matches!(component_count(&pts, 2), Err(Error::Spec(_))));
        assert!(matches!(component_count(&pts, 0), Err(Error::Spec(_))));
    }
}
