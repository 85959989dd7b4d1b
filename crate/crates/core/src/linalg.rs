//! Small dense and banded linear solvers.
//!
//! Two helpers cover everything the crate needs:
//!
//! - [`LuFactors`]: dense LU with partial pivoting for the vertex-coupling
//!   system (a few dozen unknowns). One factorization serves both the
//!   forward solve and the transpose solve required by the adjoint sweep,
//!   which off-the-shelf dense solvers do not expose from a single
//!   factorization.
//! - [`BandedCholesky`]: Cholesky factorization of a symmetric positive
//!   definite band matrix, used for the Sobolev-weighted control
//!   inner product (pentadiagonal-plus, bandwidth 3).

use crate::error::SolverError;

/// Dense row-major matrix just big enough for the coupling systems.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Zero matrix of size `n` x `n`.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Matrix dimension.
    pub fn size(&self) -> usize {
        self.n
    }

    /// Read entry (i, j).
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Overwrite entry (i, j).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    /// Add `value` to entry (i, j).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] += value;
    }

    /// Matrix-vector product `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    /// Transposed matrix-vector product `self^T * x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += a * x[i];
            }
        }
        y
    }
}

/// LU factorization with partial pivoting: `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    /// Packed L (unit diagonal, below) and U (diagonal and above).
    lu: Vec<f64>,
    /// Row permutation: factored row i came from original row `perm[i]`.
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factor a dense matrix. Fails if a pivot falls below an absolute
    /// threshold scaled by the largest entry (numerically singular).
    pub fn factor(mut a: DenseMatrix, context: &str) -> Result<Self, SolverError> {
        let n = a.n;
        let scale = a
            .data
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
            .max(1.0);
        let tol = scale * 1e-14;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_val = a.get(k, k).abs();
            for i in (k + 1)..n {
                let v = a.get(i, k).abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = i;
                }
            }
            if pivot_val <= tol {
                return Err(SolverError::SingularSystem {
                    context: context.to_string(),
                    pivot: pivot_val,
                    row: k,
                });
            }
            if pivot_row != k {
                for j in 0..n {
                    let tmp = a.get(k, j);
                    a.set(k, j, a.get(pivot_row, j));
                    a.set(pivot_row, j, tmp);
                }
                perm.swap(k, pivot_row);
            }
            let inv = 1.0 / a.get(k, k);
            for i in (k + 1)..n {
                let m = a.get(i, k) * inv;
                a.set(i, k, m);
                if m != 0.0 {
                    for j in (k + 1)..n {
                        let v = a.get(i, j) - m * a.get(k, j);
                        a.set(i, j, v);
                    }
                }
            }
        }
        Ok(Self {
            n,
            lu: a.data,
            perm,
        })
    }

    /// Solve `A x = b` in place: `b` holds `x` on return.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // Apply the permutation, then forward/back substitution.
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Solve `A^T x = b` in place using the same factorization:
    /// `A^T = U^T L^T P`, so solve `U^T z = b`, `L^T w = z`, `x = P^T w`.
    pub fn solve_transpose(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut w = b.to_vec();
        // U^T is lower triangular: forward substitution with U's diagonal.
        for i in 0..n {
            let mut s = w[i];
            for k in 0..i {
                s -= self.lu[k * n + i] * w[k];
            }
            w[i] = s / self.lu[i * n + i];
        }
        // L^T is unit upper triangular: back substitution.
        for i in (0..n).rev() {
            let mut s = w[i];
            for k in (i + 1)..n {
                s -= self.lu[k * n + i] * w[k];
            }
            w[i] = s;
        }
        // Undo the row permutation (columns of A^T).
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = w[i];
        }
    }
}

/// Cholesky factorization of a symmetric positive definite band matrix.
///
/// Storage holds the lower band: `bands[d][i]` is entry `(i, i - d)` for
/// diagonals `d = 0..=bandwidth` (entries with `i < d` are unused).
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    bands: Vec<Vec<f64>>,
}

impl BandedCholesky {
    /// Factor a band matrix given by its lower bands. `bands[0]` is the main
    /// diagonal, `bands[d][i]` the entry `(i, i - d)`.
    pub fn factor(
        n: usize,
        bandwidth: usize,
        mut bands: Vec<Vec<f64>>,
        context: &str,
    ) -> Result<Self, SolverError> {
        assert_eq!(bands.len(), bandwidth + 1);
        for band in &bands {
            assert_eq!(band.len(), n);
        }
        for j in 0..n {
            // Diagonal entry.
            let mut s = bands[0][j];
            for d in 1..=bandwidth.min(j) {
                s -= bands[d][j] * bands[d][j];
            }
            if s <= 0.0 {
                return Err(SolverError::SingularSystem {
                    context: context.to_string(),
                    pivot: s,
                    row: j,
                });
            }
            let ljj = s.sqrt();
            bands[0][j] = ljj;
            // Column below the diagonal.
            for i in (j + 1)..(j + bandwidth + 1).min(n) {
                let d = i - j;
                let mut s = bands[d][i];
                // L[i, k] * L[j, k] over shared columns k.
                let kmin = i.saturating_sub(bandwidth).max(j.saturating_sub(bandwidth));
                for k in kmin..j {
                    s -= bands[i - k][i] * bands[j - k][j];
                }
                bands[d][i] = s / ljj;
            }
        }
        Ok(Self {
            n,
            bandwidth,
            bands,
        })
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // L y = b
        for i in 0..n {
            let mut s = b[i];
            for d in 1..=self.bandwidth.min(i) {
                s -= self.bands[d][i] * b[i - d];
            }
            b[i] = s / self.bands[0][i];
        }
        // L^T x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            for d in 1..=self.bandwidth.min(n - 1 - i) {
                s -= self.bands[d][i + d] * b[i + d];
            }
            b[i] = s / self.bands[0][i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn random_matrix(n: usize, rng: &mut ChaCha12Rng) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, rng.random_range(-1.0..1.0));
            }
            // Keep it comfortably nonsingular.
            a.add(i, i, 3.0);
        }
        a
    }

    #[test]
    fn lu_solves_random_systems() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for n in [1, 2, 5, 17, 60] {
            let a = random_matrix(n, &mut rng);
            let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut b = a.matvec(&x_true);
            let lu = LuFactors::factor(a, "test").unwrap();
            lu.solve(&mut b);
            for (xi, ti) in b.iter().zip(&x_true) {
                assert!((xi - ti).abs() < 1e-10, "n={n}: {xi} vs {ti}");
            }
        }
    }

    #[test]
    fn lu_transpose_solve_matches_transposed_system() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for n in [1, 3, 12, 41] {
            let a = random_matrix(n, &mut rng);
            let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut b = a.matvec_transpose(&x_true);
            let lu = LuFactors::factor(a, "test").unwrap();
            lu.solve_transpose(&mut b);
            for (xi, ti) in b.iter().zip(&x_true) {
                assert!((xi - ti).abs() < 1e-10, "n={n}: {xi} vs {ti}");
            }
        }
    }

    #[test]
    fn lu_rejects_singular_matrix() {
        let mut a = DenseMatrix::zeros(3);
        // Rank 2: row 2 = row 0 + row 1.
        let rows = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [5.0, 7.0, 9.0]];
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                a.set(i, j, *v);
            }
        }
        assert!(LuFactors::factor(a, "test").is_err());
    }

    #[test]
    fn lu_handles_permutation_heavy_matrix() {
        // Zero diagonal forces pivoting on every step.
        let mut a = DenseMatrix::zeros(3);
        a.set(0, 1, 1.0);
        a.set(1, 2, 1.0);
        a.set(2, 0, 1.0);
        let lu = LuFactors::factor(a, "test").unwrap();
        let mut b = vec![2.0, 3.0, 4.0];
        lu.solve(&mut b);
        // x solves the cyclic permutation: x[1] = 2, x[2] = 3, x[0] = 4.
        assert_eq!(b, vec![4.0, 2.0, 3.0]);
    }

    #[test]
    fn banded_cholesky_matches_dense_solve() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for (n, bw) in [(1, 0), (4, 1), (30, 3), (101, 3)] {
            // Random SPD band matrix: diagonally dominant.
            let mut bands = vec![vec![0.0; n]; bw + 1];
            for d in 1..=bw {
                for i in d..n {
                    bands[d][i] = rng.random_range(-1.0..1.0);
                }
            }
            for i in 0..n {
                bands[0][i] = 2.0 * (bw as f64) + 1.0 + rng.random_range(0.0..1.0);
            }
            // Dense mirror for the reference solution.
            let mut dense = DenseMatrix::zeros(n);
            for i in 0..n {
                dense.set(i, i, bands[0][i]);
                for d in 1..=bw.min(i) {
                    dense.set(i, i - d, bands[d][i]);
                    dense.set(i - d, i, bands[d][i]);
                }
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut b = dense.matvec(&x_true);
            let chol = BandedCholesky::factor(n, bw, bands, "test").unwrap();
            chol.solve(&mut b);
            for (xi, ti) in b.iter().zip(&x_true) {
                assert!((xi - ti).abs() < 1e-9, "n={n} bw={bw}: {xi} vs {ti}");
            }
        }
    }

    #[test]
    fn banded_cholesky_rejects_indefinite_matrix() {
        let bands = vec![vec![1.0, -1.0, 1.0]];
        assert!(BandedCholesky::factor(3, 0, bands, "test").is_err());
    }
}
