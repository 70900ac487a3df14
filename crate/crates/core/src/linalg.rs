//! Dense solvers shared by the trajectory-space, weaving and simulation layers.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Counts singular values above `rel_tol * sigma_max`.
pub(crate) fn rank_from_singular_values(s: &[f64], rel_tol: f64) -> usize {
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Minimum-norm least-squares solver backed by a thin SVD, factored once and
/// reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct MinNormSolver {
    svd: SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    cutoff: f64,
    rank: usize,
    nrows: usize,
    ncols: usize,
}

impl MinNormSolver {
    pub fn new(a: DMatrix<f64>, rel_tol: f64) -> Self {
        let (nrows, ncols) = a.shape();
        let svd = SVD::new(a, true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let cutoff = rel_tol * smax;
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > cutoff && s > 0.0)
            .count();
        Self {
            svd,
            cutoff,
            rank,
            nrows,
            ncols,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.nrows {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, system has {}",
                b.len(),
                self.nrows
            )));
        }
        if self.rank == 0 {
            return Ok(DVector::zeros(self.ncols));
        }
        // nalgebra zeroes singular values <= eps; keep strictly-above-cutoff ones.
        let eps = self.cutoff.max(f64::MIN_POSITIVE);
        self.svd
            .solve(b, eps)
            .map_err(|e| Error::Linalg(e.to_string()))
    }
}

/// Solves `(M + shift*I) x = b` for symmetric positive semidefinite `M` and `shift > 0`.
pub(crate) fn solve_shifted_spd(
    m: &DMatrix<f64>,
    shift: f64,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut a = m.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += shift;
    }
    let chol = Cholesky::new(a).ok_or_else(|| {
        Error::Linalg(format!(
            "regularized system is not numerically positive definite (shift {shift:e})"
        ))
    })?;
    Ok(chol.solve(b))
}

/// Minimum-norm solution of `G x = c` for symmetric positive semidefinite `G`,
/// discarding eigenvalues at or below `rel_tol * lambda_max`.
pub(crate) fn pinv_solve_psd(g: &DMatrix<f64>, c: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(g.clone());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = rel_tol * lmax;
    let proj = eig.eigenvectors.tr_mul(c);
    let mut scaled = DVector::zeros(proj.len());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > cutoff && l > 0.0 {
            scaled[i] = proj[i] / l;
        }
    }
    &eig.eigenvectors * scaled
}

/// Stacks matrices with equal column count vertically.
pub(crate) fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let ncols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let nrows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(nrows, ncols);
    let mut r = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), ncols);
        out.rows_mut(r, b.nrows()).copy_from(*b);
        r += b.nrows();
    }
    out
}

pub(crate) fn vstack_vec(blocks: &[&DVector<f64>]) -> DVector<f64> {
    let n = blocks.iter().map(|b| b.len()).sum();
    let mut out = DVector::zeros(n);
    let mut r = 0;
    for b in blocks {
        out.rows_mut(r, b.len()).copy_from(*b);
        r += b.len();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn min_norm_on_rank_deficient_system() {
        // x1 + x2 = 2 has minimum-norm solution (1, 1).
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let s = MinNormSolver::new(a, 1e-12);
        let x = s.solve(&DVector::from_vec(vec![2.0])).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-12);
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn least_squares_on_overdetermined_system() {
        let a = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        let s = MinNormSolver::new(a, 1e-12);
        let x = s.solve(&DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        assert_relative_eq!(x[0], 2.0, epsilon = 1e-12);
        assert!(s.solve(&DVector::zeros(2)).is_err());
    }

    #[test]
    fn zero_matrix_gives_zero_solution() {
        let s = MinNormSolver::new(DMatrix::zeros(2, 3), 1e-10);
        assert_eq!(s.rank(), 0);
        assert_eq!(
            s.solve(&DVector::from_vec(vec![1.0, 1.0])).unwrap(),
            DVector::zeros(3)
        );
    }

    #[test]
    fn pinv_matches_min_norm_route() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let direct = MinNormSolver::new(a.clone(), 1e-12).solve(&b).unwrap();
        let via_gram = pinv_solve_psd(&(a.transpose() * &a), &(a.transpose() * &b), 1e-12);
        assert_relative_eq!(direct, via_gram, epsilon = 1e-10);
    }

    #[test]
    fn shifted_spd_solve() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let x = solve_shifted_spd(&m, 1.0, &DVector::from_vec(vec![3.0, 1.0])).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-14);
    }
}
