use crate::error::{Error, Result};
use crate::registry::Registry;

use super::matrix::{dot, norm, Matrix};
use super::rng::Rng;

/// Default relative tolerance for kernel membership: `‖W v‖ <= tol · ‖W‖ · ‖v‖`.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-10;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues descending, eigenvectors as
/// orthonormal columns in matching order.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }
}

pub trait SymmetricEigensolver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Returns the `count` algebraically largest eigenpairs of `s` (all of
    /// them when `count >= s.rows()`), sorted descending.
    fn leading(&self, s: &Matrix, count: usize, tol: f64) -> Result<Eigen>;
}

/// Solvers selectable by name: `jacobi` (full spectrum) and `lanczos`
/// (leading pairs only, for large matrices).
pub fn eigensolvers() -> Registry<dyn SymmetricEigensolver> {
    Registry::<dyn SymmetricEigensolver>::new("eigensolver")
        .with("jacobi", || Box::new(JacobiSolver))
        .with("lanczos", || Box::new(LanczosSolver::default()))
}

fn check_symmetric(s: &Matrix, tol: f64) -> Result<()> {
    if !s.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    if !s.is_symmetric(tol.max(1e-12)) {
        return Err(Error::Shape("matrix is not symmetric".into()));
    }
    Ok(())
}

/// Flips each column so its first significant entry is positive.
pub fn orient_columns(v: &mut Matrix) {
    for j in 0..v.cols() {
        let col = v.column(j);
        let scale = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-10 * scale) {
            if *first < 0.0 {
                for i in 0..v.rows() {
                    v[(i, j)] = -v[(i, j)];
                }
            }
        }
    }
}

fn sorted_descending(values: &[f64], vectors: &Matrix, count: usize) -> Eigen {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(count);
    let mut out = Matrix::from_fn(vectors.rows(), order.len(), |i, j| vectors[(i, order[j])]);
    orient_columns(&mut out);
    Eigen {
        values: order.iter().map(|&k| values[k]).collect(),
        vectors: out,
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations; stops once the
/// off-diagonal Frobenius norm drops below `tol · ‖s‖_F`.
pub fn eigh_symmetric(s: &Matrix, tol: f64) -> Result<Eigen> {
    JacobiSolver.leading(s, s.rows(), tol)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct JacobiSolver;

impl SymmetricEigensolver for JacobiSolver {
    fn name(&self) -> &'static str {
        "jacobi"
    }

    fn leading(&self, s: &Matrix, count: usize, tol: f64) -> Result<Eigen> {
        check_symmetric(s, tol)?;
        let n = s.rows();
        // work on the exactly symmetrised copy
        let mut a = Matrix::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
        let mut v = Matrix::identity(n);
        let scale = a.frobenius_norm();
        let target = tol * scale;

        let off_norm = |a: &Matrix| -> f64 {
            let mut sum = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    sum += 2.0 * a[(p, q)] * a[(p, q)];
                }
            }
            sum.sqrt()
        };

        let mut sweeps = 0;
        loop {
            let off = off_norm(&a);
            if off <= target || off == 0.0 {
                break;
            }
            if sweeps == MAX_JACOBI_SWEEPS {
                return Err(Error::Convergence {
                    sweeps,
                    residual: off,
                });
            }
            sweeps += 1;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    // negligible against both diagonal entries: drop it
                    let g = 100.0 * apq.abs();
                    if sweeps > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                        a[(p, q)] = 0.0;
                        a[(q, p)] = 0.0;
                        continue;
                    }
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta.is_finite() {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    } else {
                        0.0
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * c;
                    rotate(&mut a, &mut v, p, q, c, sn);
                }
            }
        }

        let values: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        Ok(sorted_descending(&values, &v, count.min(n)))
    }
}

fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Lanczos iteration with full reorthogonalisation. The Krylov dimension
/// doubles until every requested Ritz pair has residual `‖S y − θ y‖ <= tol · ‖S‖_F`.
/// Matrices up to `dense_cutoff` rows go straight to Jacobi.
#[derive(Clone, Copy, Debug)]
pub struct LanczosSolver {
    pub dense_cutoff: usize,
    pub seed: u64,
}

impl Default for LanczosSolver {
    fn default() -> Self {
        Self {
            dense_cutoff: 64,
            seed: 0x5eed_1a2c,
        }
    }
}

impl SymmetricEigensolver for LanczosSolver {
    fn name(&self) -> &'static str {
        "lanczos"
    }

    fn leading(&self, s: &Matrix, count: usize, tol: f64) -> Result<Eigen> {
        check_symmetric(s, tol)?;
        let n = s.rows();
        let count = count.min(n);
        if n <= self.dense_cutoff || 2 * count + 10 >= n {
            return JacobiSolver.leading(s, count, tol);
        }
        let scale = s.frobenius_norm();
        if scale == 0.0 {
            return JacobiSolver.leading(s, count, tol);
        }
        let target = tol.max(1e-13) * scale;

        let mut steps = (2 * count + 20).max(40).min(n);
        loop {
            let eig = self.run(s, count, steps, scale)?;
            let worst = (0..count)
                .map(|k| {
                    let y = eig.vectors.column(k);
                    let sy = s.apply(&y).expect("square");
                    sy.iter()
                        .zip(&y)
                        .map(|(a, b)| (a - eig.values[k] * b).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0f64, f64::max);
            if worst <= target {
                return Ok(eig);
            }
            if steps == n {
                return Err(Error::Convergence {
                    sweeps: steps,
                    residual: worst,
                });
            }
            steps = (steps * 2).min(n);
        }
    }
}

impl LanczosSolver {
    fn run(&self, s: &Matrix, count: usize, steps: usize, scale: f64) -> Result<Eigen> {
        let n = s.rows();
        let mut rng = Rng::new(self.seed);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut alpha = Vec::with_capacity(steps);
        let mut beta: Vec<f64> = Vec::with_capacity(steps);

        let mut q = match fresh_direction(&basis, n, &mut rng) {
            Some(q) => q,
            None => return Err(Error::Numerical("empty Krylov start".into())),
        };
        for j in 0..steps {
            let mut w = s.apply(&q)?;
            let a = dot(&q, &w);
            alpha.push(a);
            basis.push(q);
            // twice is enough
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
                }
            }
            if j + 1 == steps {
                break;
            }
            let b = norm(&w);
            if b > 1e-12 * scale {
                beta.push(b);
                q = w.into_iter().map(|x| x / b).collect();
            } else {
                // invariant subspace exhausted; restart in the orthogonal complement
                match fresh_direction(&basis, n, &mut rng) {
                    Some(next) => {
                        beta.push(0.0);
                        q = next;
                    }
                    None => break,
                }
            }
        }

        let m = basis.len();
        let mut t = Matrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let small = JacobiSolver.leading(&t, count, 1e-15)?;
        let mut vectors = Matrix::zeros(n, small.values.len());
        for k in 0..small.values.len() {
            for (j, qj) in basis.iter().enumerate() {
                let c = small.vectors[(j, k)];
                for i in 0..n {
                    vectors[(i, k)] += c * qj[i];
                }
            }
        }
        orient_columns(&mut vectors);
        Ok(Eigen {
            values: small.values,
            vectors,
        })
    }
}

fn fresh_direction(basis: &[Vec<f64>], n: usize, rng: &mut Rng) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
        }
        let len = norm(&v);
        if len > 1e-8 {
            return Some(v.into_iter().map(|x| x / len).collect());
        }
    }
    None
}

/// Orthonormal basis of `{v : ‖W v‖ <= tol · ‖W‖_F · ‖v‖}`, from the
/// eigenvectors of `WᵀW` whose directly measured residual passes the test.
pub fn null_space_basis(w: &Matrix, tol: f64) -> Vec<Vec<f64>> {
    let cols = w.cols();
    if cols == 0 {
        return Vec::new();
    }
    let gram = w.transpose().matmul(w).expect("shapes agree");
    let eig = match eigh_symmetric(&gram, 1e-15) {
        Ok(e) => e,
        Err(_) => return Vec::new(),
    };
    let bound = tol * w.frobenius_norm();
    (0..cols)
        .rev()
        .map(|k| eig.vector(k))
        .filter(|v| norm(&w.apply(v).expect("shapes agree")) <= bound)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, rng: &mut Rng) -> Matrix {
        let a = Matrix::from_fn(n, n, |_, _| rng.uniform(-1.0, 1.0));
        Matrix::from_fn(n, n, |i, j| a[(i, j)] + a[(j, i)])
    }

    fn reconstruction_error(s: &Matrix, e: &Eigen) -> f64 {
        let lambda = Matrix::diag(&e.values);
        let back = e
            .vectors
            .matmul(&lambda)
            .unwrap()
            .matmul(&e.vectors.transpose())
            .unwrap();
        back.sub(s).unwrap().max_abs()
    }

    fn orthonormality_error(v: &Matrix) -> f64 {
        let g = v.transpose().matmul(v).unwrap();
        g.sub(&Matrix::identity(v.cols())).unwrap().max_abs()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = eigh_symmetric(&Matrix::identity(3), 1e-12).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_is_sorted_with_permuted_axes() {
        let e = eigh_symmetric(&Matrix::diag(&[2.0, 3.0]), 1e-12).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0]);
        assert_eq!(e.vector(1), vec![1.0, 0.0]);
    }

    #[test]
    fn swap_matrix_has_plus_minus_one() {
        // det([[-l, 1], [1, -l]]) = l^2 - 1
        let s = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = eigh_symmetric(&s, 1e-14).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        assert!((v0[0] - h).abs() < 1e-12 && (v0[1] - h).abs() < 1e-12);
    }

    #[test]
    fn random_symmetric_reconstructs() {
        let mut rng = Rng::new(5);
        for n in [1, 2, 3, 7, 20, 45] {
            let s = random_symmetric(n, &mut rng);
            let e = eigh_symmetric(&s, 1e-14).unwrap();
            assert!(reconstruction_error(&s, &e) < 1e-8 * s.frobenius_norm().max(1.0));
            assert!(orthonormality_error(&e.vectors) < 1e-8);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn non_square_or_asymmetric_is_a_shape_error() {
        assert!(matches!(
            eigh_symmetric(&Matrix::zeros(2, 3), 1e-12),
            Err(Error::Shape(_))
        ));
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(eigh_symmetric(&s, 1e-12), Err(Error::Shape(_))));
    }

    #[test]
    fn sign_convention_makes_first_entry_positive() {
        let mut rng = Rng::new(8);
        let s = random_symmetric(6, &mut rng);
        let e = eigh_symmetric(&s, 1e-14).unwrap();
        for k in 0..6 {
            let v = e.vector(k);
            let first = v.iter().find(|x| x.abs() > 1e-9).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn lanczos_agrees_with_jacobi_on_leading_pairs() {
        let mut rng = Rng::new(21);
        let n = 150;
        // PSD matrix with a decaying spectrum plus a small negative tail
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|k| rng.normal() * (4.0 - k as f64)).collect())
            .collect();
        let mut s = Matrix::from_fn(n, n, |i, j| dot(&pts[i], &pts[j]));
        for i in 0..n {
            s[(i, i)] -= 0.01;
        }
        let full = JacobiSolver.leading(&s, 5, 1e-14).unwrap();
        let fast = LanczosSolver::default().leading(&s, 5, 1e-12).unwrap();
        for k in 0..5 {
            assert!((full.values[k] - fast.values[k]).abs() < 1e-8 * full.values[0].abs());
        }
        for k in 0..4 {
            let a = full.vector(k);
            let b = fast.vector(k);
            assert!(dot(&a, &b).abs() > 1.0 - 1e-8, "vector {k} differs");
        }
        assert!(orthonormality_error(&fast.vectors) < 1e-10);
    }

    #[test]
    fn registry_exposes_both_solvers() {
        let reg = eigensolvers();
        assert_eq!(reg.names(), vec!["jacobi", "lanczos"]);
        assert_eq!(reg.create("lanczos").unwrap().name(), "lanczos");
    }

    #[test]
    fn kernel_of_coordinate_projection() {
        let w = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let basis = null_space_basis(&w, DEFAULT_KERNEL_TOL);
        assert_eq!(basis.len(), 1);
        assert!((basis[0][2].abs() - 1.0).abs() < 1e-15);
        assert!(basis[0][0].abs() < 1e-15 && basis[0][1].abs() < 1e-15);
    }

    #[test]
    fn kernel_of_zero_matrix_is_everything() {
        let basis = null_space_basis(&Matrix::zeros(2, 3), DEFAULT_KERNEL_TOL);
        assert_eq!(basis.len(), 3);
    }

    #[test]
    fn kernel_of_full_rank_square_is_trivial() {
        let w = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!(null_space_basis(&w, DEFAULT_KERNEL_TOL).is_empty());
    }

    #[test]
    fn random_wide_kernels_have_tiny_residuals() {
        let mut rng = Rng::new(77);
        for _ in 0..200 {
            let rows = 1 + rng.index(4);
            let cols = rows + 1 + rng.index(4);
            let w = Matrix::from_fn(rows, cols, |_, _| rng.uniform(-1.0, 1.0));
            let basis = null_space_basis(&w, DEFAULT_KERNEL_TOL);
            assert!(basis.len() >= cols - rows);
            for (i, v) in basis.iter().enumerate() {
                assert!(norm(&w.apply(v).unwrap()) <= 1e-9);
                assert!((norm(v) - 1.0).abs() < 1e-9);
                for u in &basis[..i] {
                    assert!(dot(u, v).abs() < 1e-9);
                }
            }
        }
    }
}
