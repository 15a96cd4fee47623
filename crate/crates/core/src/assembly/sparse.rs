use crate::error::Result;
use crate::exec::Exec;

/// Symmetric linear map applied in place. Operators backed by inner solves
/// (the reduced bidomain operator) can fail, hence the `Result`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()>;

    /// Diagonal used for Jacobi preconditioning.
    fn diagonal(&self) -> Vec<f64>;
}

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseOperator {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: diag.to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[lo..hi].binary_search(&j) {
            Ok(p) => self.vals[lo + p],
            Err(_) => 0.0,
        }
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        let mut s = 0.0;
        for p in lo..hi {
            s += self.vals[p] * x[self.cols[p]];
        }
        s
    }

    /// `y = A x` with an explicit execution strategy.
    pub fn apply_with(&self, exec: Exec, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        exec.fill(y, |i| self.row_dot(i, x));
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply_with(Exec::default(), x, &mut y);
        y
    }

    /// `uᵀ A v`
    pub fn quad_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let av = self.mul(v);
        crate::exec::dot(u, &av)
    }

    /// `alpha · A + diag(d)` as a new matrix with the same pattern (plus diagonal).
    pub fn scaled_plus_diag(&self, alpha: f64, d: &[f64]) -> Self {
        let mut trip = Vec::with_capacity(self.nnz() + self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                trip.push((i, self.cols[p], alpha * self.vals[p]));
            }
            trip.push((i, i, d[i]));
        }
        Self::from_triplets(self.n, trip)
    }

    /// `alpha · A + beta · B`
    pub fn linear_combination(&self, alpha: f64, other: &SparseOperator, beta: f64) -> Self {
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for (m, s) in [(self, alpha), (other, beta)] {
            for i in 0..m.n {
                for p in m.row_ptr[i]..m.row_ptr[i + 1] {
                    trip.push((i, m.cols[p], s * m.vals[p]));
                }
            }
        }
        Self::from_triplets(self.n, trip)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum())
            .collect()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                worst = worst.max((self.vals[p] - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Dense copy, row-major. Intended for small test systems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                row[self.cols[p]] += self.vals[p];
            }
        }
        d
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_with(Exec::default(), x, y);
        Ok(())
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diag()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_duplicates() {
        let a = SparseOperator::from_triplets(
            2,
            vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)],
        );
        assert_eq!(a.to_dense(), vec![vec![2.0, 2.0], vec![2.0, 3.0]]);
        assert_eq!(a.mul(&[1.0, 1.0]), vec![4.0, 5.0]);
        assert_eq!(a.asymmetry(), 0.0);
        assert_eq!(a.quad_form(&[1.0, 0.0], &[0.0, 1.0]), 2.0);
    }

    #[test]
    fn shifted_and_combined() {
        let a = SparseOperator::from_triplets(2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        let s = a.scaled_plus_diag(2.0, &[1.0, 3.0]);
        assert_eq!(s.to_dense(), vec![vec![1.0, 2.0], vec![2.0, 3.0]]);
        let c = a.linear_combination(1.0, &s, -1.0);
        assert_eq!(c.to_dense(), vec![vec![-1.0, -1.0], vec![-1.0, -3.0]]);
    }
}
