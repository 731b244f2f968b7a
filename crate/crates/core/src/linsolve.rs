//! Sparse direct solves with a fixed pattern reused across factorizations.

use std::fmt::Write as _;
use std::sync::OnceLock;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::Mat;

use crate::error::{Error, Result};

/// Coordinate list with a fixed entry order. Duplicate `(row, col)` pairs are
/// summed. The symbolic LU factorization is computed on first use and reused
/// for every later set of values.
pub struct SparsePattern {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu_symbolic: OnceLock<SymbolicLu<usize>>,
}

impl SparsePattern {
    pub fn new(n_rows: usize, n_cols: usize, rows: Vec<usize>, cols: Vec<usize>) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(Error::Internal("pattern row/col length mismatch".into()));
        }
        let pairs: Vec<Pair<usize, usize>> = rows
            .iter()
            .zip(&cols)
            .map(|(&row, &col)| Pair { row, col })
            .collect();
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n_rows, n_cols, &pairs)
            .map_err(|e| Error::LinearSolve(format!("invalid sparse pattern: {e:?}")))?;
        Ok(SparsePattern {
            n_rows,
            n_cols,
            rows,
            cols,
            symbolic,
            argsort,
            lu_symbolic: OnceLock::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of coordinate entries (before summing duplicates).
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn matrix(&self, vals: &[f64]) -> Result<SparseColMat<usize, f64>> {
        if vals.len() != self.rows.len() {
            return Err(Error::Internal("value count does not match the pattern".into()));
        }
        SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, vals)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))
    }

    /// `A·x` straight from the coordinate list.
    pub fn mul_vec(&self, vals: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        for ((&r, &c), v) in self.rows.iter().zip(&self.cols).zip(vals) {
            y[r] += v * x[c];
        }
        y
    }

    /// Solves `A·x = b` for a square pattern, with one step of iterative
    /// refinement when the first residual is not small.
    pub fn solve(&self, vals: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        if self.n_rows != self.n_cols || b.len() != self.n_rows {
            return Err(Error::LinearSolve("system is not square or rhs length differs".into()));
        }
        let mat = self.matrix(vals)?;
        let symbolic = match self.lu_symbolic.get() {
            Some(s) => s.clone(),
            None => {
                let s = SymbolicLu::try_new(mat.symbolic())
                    .map_err(|e| Error::LinearSolve(format!("symbolic factorization: {e:?}")))?;
                self.lu_symbolic.get_or_init(|| s).clone()
            }
        };
        let lu = Lu::try_new_with_symbolic(symbolic, mat.as_ref())
            .map_err(|e| Error::LinearSolve(format!("numeric factorization: {e:?}")))?;
        let mut x = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        lu.solve_in_place(x.as_mut());
        let mut sol: Vec<f64> = (0..b.len()).map(|i| x[(i, 0)]).collect();

        let bn = norm2(b);
        let r: Vec<f64> = self.mul_vec(vals, &sol).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        if norm2(&r) > 1e-12 * bn {
            let mut dx = Mat::<f64>::from_fn(r.len(), 1, |i, _| r[i]);
            lu.solve_in_place(dx.as_mut());
            for (i, s) in sol.iter_mut().enumerate() {
                *s += dx[(i, 0)];
            }
        }
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("non-finite solution (singular matrix)".into()));
        }
        Ok(sol)
    }

    /// Dense copy, for small diagnostics.
    pub fn to_dense(&self, vals: &[f64]) -> nalgebra::DMatrix<f64> {
        let mut a = nalgebra::DMatrix::<f64>::zeros(self.n_rows, self.n_cols);
        for ((&r, &c), v) in self.rows.iter().zip(&self.cols).zip(vals) {
            a[(r, c)] += v;
        }
        a
    }

    /// Coordinate text dump `row col value` with duplicates summed.
    pub fn dump(&self, vals: &[f64]) -> Result<String> {
        let mat = self.matrix(vals)?;
        let mut s = String::from("# row col value\n");
        let m = mat.as_ref();
        for c in 0..self.n_cols {
            let rows = m.row_idx_of_col_raw(c);
            let v = m.val_of_col(c);
            let mut entries: Vec<(usize, f64)> = rows.iter().copied().zip(v.iter().copied()).collect();
            entries.sort_by_key(|e| e.0);
            for (r, val) in entries {
                writeln!(s, "{r} {c} {val:.16e}").unwrap();
            }
        }
        Ok(s)
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_diagonally_dominant_system() {
        let n = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..n {
            rows.push(i);
            cols.push(i);
            vals.push(10.0 + rng.random::<f64>());
            for _ in 0..5 {
                rows.push(i);
                cols.push(rng.random_range(0..n));
                vals.push(rng.random_range(-1.0..1.0));
            }
        }
        let pat = SparsePattern::new(n, n, rows, cols).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        for shift in [0.0, 1.0] {
            let v: Vec<f64> = vals.iter().map(|x| x + shift).collect();
            let x = pat.solve(&v, &b).unwrap();
            let ax = pat.mul_vec(&v, &x);
            let r: Vec<f64> = ax.iter().zip(&b).map(|(a, c)| a - c).collect();
            assert!(norm2(&r) <= 1e-12 * norm2(&b));
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let pat = SparsePattern::new(2, 2, vec![0, 0, 1, 1], vec![0, 0, 1, 0]).unwrap();
        let vals = [1.0, 2.0, 4.0, 1.0];
        let d = pat.to_dense(&vals);
        assert_eq!(d[(0, 0)], 3.0);
        let x = pat.solve(&vals, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!(pat.dump(&vals).unwrap().contains("0 0 3.0000000000000000e0"));
    }

    #[test]
    fn singular_matrix_is_reported() {
        let pat = SparsePattern::new(2, 2, vec![0, 1], vec![0, 0]).unwrap();
        assert!(pat.solve(&[1.0, 1.0], &[1.0, 1.0]).is_err());
    }
}
