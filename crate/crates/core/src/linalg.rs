//! Dense row-major matrices and a partial-pivoting LU solve.
//!
//! Everything here operates on tiny systems (KKT matrices of a few dozen
//! rows at most), so no factorization caching or sparsity is attempted.

use crate::error::{Error, Result};

/// Relative pivot threshold below which a matrix is declared singular.
pub const SINGULARITY_TOL: f64 = 1e-12;

/// Dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        let mut entries = Vec::with_capacity(nr * nc);
        for r in rows {
            assert_eq!(r.len(), nc, "ragged rows");
            entries.extend_from_slice(r);
        }
        DenseMatrix {
            rows: nr,
            cols: nc,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Entrywise max-norm of the difference.
    pub fn max_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i * self.cols + j]
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
///
/// Fails with [`Error::SingularMatrix`] when a pivot falls below
/// [`SINGULARITY_TOL`] relative to the largest initial pivot.
pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.rows, a.cols, "solve_linear requires a square matrix");
    assert_eq!(a.rows, b.len(), "rhs length mismatch");
    let n = a.rows;
    let mut m = a.clone();
    let mut x = b.to_vec();

    // Reference scale for the relative singularity test.
    let scale = m.entries.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::SingularMatrix { step: 0, pivot: 0.0 });
    }

    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        // partial pivot
        let (mut imax, mut pmax) = (k, m[(perm[k], k)].abs());
        for i in (k + 1)..n {
            let v = m[(perm[i], k)].abs();
            if v > pmax {
                imax = i;
                pmax = v;
            }
        }
        if pmax < SINGULARITY_TOL * scale {
            return Err(Error::SingularMatrix { step: k, pivot: pmax });
        }
        perm.swap(k, imax);
        let pk = perm[k];
        let pivot = m[(pk, k)];
        for i in (k + 1)..n {
            let pi = perm[i];
            let f = m[(pi, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            m[(pi, k)] = 0.0;
            for j in (k + 1)..n {
                let v = m[(pk, j)];
                m[(pi, j)] -= f * v;
            }
            x[pi] -= f * x[pk];
        }
    }

    // back substitution
    let mut sol = vec![0.0; n];
    for k in (0..n).rev() {
        let pk = perm[k];
        let mut acc = x[pk];
        for j in (k + 1)..n {
            acc -= m[(pk, j)] * sol[j];
        }
        sol[k] = acc / m[(pk, k)];
    }

    // One step of iterative refinement keeps the residual near machine
    // precision for the bordered KKT matrices used downstream.
    let r: Vec<f64> = a
        .matvec(&sol)
        .iter()
        .zip(b)
        .map(|(ax, bi)| bi - ax)
        .collect();
    if max_abs(&r) > 0.0 {
        if let Ok(corr) = solve_no_refine(a, &r) {
            for (s, c) in sol.iter_mut().zip(&corr) {
                *s += c;
            }
        }
    }
    Ok(sol)
}

fn solve_no_refine(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    // plain elimination, used only for the refinement correction
    let n = a.rows;
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.entries.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut imax, mut pmax) = (k, m[(perm[k], k)].abs());
        for i in (k + 1)..n {
            let v = m[(perm[i], k)].abs();
            if v > pmax {
                imax = i;
                pmax = v;
            }
        }
        if pmax < SINGULARITY_TOL * scale {
            return Err(Error::SingularMatrix { step: k, pivot: pmax });
        }
        perm.swap(k, imax);
        let pk = perm[k];
        let pivot = m[(pk, k)];
        for i in (k + 1)..n {
            let pi = perm[i];
            let f = m[(pi, k)] / pivot;
            m[(pi, k)] = 0.0;
            for j in (k + 1)..n {
                let v = m[(pk, j)];
                m[(pi, j)] -= f * v;
            }
            x[pi] -= f * x[pk];
        }
    }
    let mut sol = vec![0.0; n];
    for k in (0..n).rev() {
        let pk = perm[k];
        let mut acc = x[pk];
        for j in (k + 1)..n {
            acc -= m[(pk, j)] * sol[j];
        }
        sol[k] = acc / m[(pk, k)];
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_solve() {
        let a = DenseMatrix::identity(2);
        let x = solve_linear(&a, &[3.0, -1.0]).unwrap();
        assert_eq!(x, vec![3.0, -1.0]);
    }

    #[test]
    fn diagonal_solve() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let x = solve_linear(&a, &[2.0, 8.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn bordered_kkt_case_c2() {
        // H = diag(0.2, 0.2) bordered by the all-ones column,
        // rhs -(0.5, 0.6, -1.1); primal part (0.8, 0.3).
        let a = DenseMatrix::from_rows(&[
            vec![0.2, 0.0, 1.0],
            vec![0.0, 0.2, 1.0],
            vec![1.0, 1.0, 0.0],
        ]);
        let x = solve_linear(&a, &[-0.5, -0.6, 1.1]).unwrap();
        assert_abs_diff_eq!(x[0], 0.8, epsilon = 1e-10);
        assert_abs_diff_eq!(x[1], 0.3, epsilon = 1e-10);
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            solve_linear(&a, &[1.0, 2.0]),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn residual_contract() {
        let a = DenseMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, -0.2],
            vec![0.5, -0.2, 5.0],
        ]);
        let b = [1.0, -2.0, 0.3];
        let x = solve_linear(&a, &b).unwrap();
        let r: Vec<f64> = a.matvec(&x).iter().zip(&b).map(|(ax, bi)| ax - bi).collect();
        assert!(max_abs(&r) <= 1e-10 * max_abs(&b).max(1.0));
    }
}
