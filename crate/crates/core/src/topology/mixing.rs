use nalgebra::DMatrix;

use super::Graph;
use crate::error::{Error, Result};

/// Tolerance on row/column sums accepted by [`MixingMatrix::from_dense`].
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Doubly stochastic, nonnegative `n x n` weight matrix.
///
/// Kept both dense (for spectral queries) and as sparse rows (for mixing),
/// where sparse rows list `(j, w_ij)` for `w_ij > 0` in ascending `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    dense: DMatrix<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl MixingMatrix {
    /// Validate nonnegativity and unit row/column sums.
    pub fn from_dense(dense: DMatrix<f64>) -> Result<Self> {
        if dense.nrows() != dense.ncols() || dense.nrows() == 0 {
            return Err(Error::invalid("mixing matrix must be square and nonempty"));
        }
        let n = dense.nrows();
        if dense.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("mixing weights must be finite and nonnegative"));
        }
        for i in 0..n {
            let r: f64 = dense.row(i).iter().sum();
            let c: f64 = dense.column(i).iter().sum();
            if (r - 1.0).abs() > STOCHASTIC_TOL || (c - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::invalid(format!("row/column {i} does not sum to 1 (row {r}, col {c})")));
            }
        }
        let rows = (0..n)
            .map(|i| (0..n).filter(|&j| dense[(i, j)] > 0.0).map(|j| (j, dense[(i, j)])).collect())
            .collect();
        Ok(MixingMatrix { dense, rows })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_dense(DMatrix::identity(n, n)).expect("identity is doubly stochastic")
    }

    /// All entries `1/n`.
    pub fn uniform(n: usize) -> Self {
        Self::from_dense(DMatrix::from_element(n, n, 1.0 / n as f64)).expect("uniform averaging is doubly stochastic")
    }

    pub fn size(&self) -> usize {
        self.dense.nrows()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.dense[(i, j)]
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    /// Nonzero `(j, w_ij)` of row `i`, ascending in `j`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `sum_j w_ij x_j` for one row, evaluated as
    /// `x_i + sum_{j != i} w_ij (x_j - x_i)` so that equal inputs come back
    /// bit for bit.
    pub fn mix_row(&self, i: usize, stack: &[Vec<f64>]) -> Vec<f64> {
        let own = &stack[i];
        let mut out = own.clone();
        for &(j, w) in &self.rows[i] {
            if j != i {
                out.iter_mut().zip(own).zip(&stack[j]).for_each(|((o, a), b)| *o += w * (b - a));
            }
        }
        out
    }

    /// `W X` where row `i` of `X` is `stack[i]`.
    pub fn mix(&self, stack: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.size()).map(|i| self.mix_row(i, stack)).collect()
    }
}

/// Metropolis-Hastings weights: `w_ij = 1 / (1 + max(deg_i, deg_j))` on edges,
/// diagonal takes the remainder.
pub fn metropolis_weights(g: &Graph) -> Result<MixingMatrix> {
    if !g.is_connected() {
        return Err(Error::invalid("metropolis weights need a connected graph"));
    }
    let n = g.node_count();
    let deg = g.degrees();
    let mut w = DMatrix::zeros(n, n);
    for (i, j) in g.edges() {
        let wij = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
        w[(i, j)] = wij;
        w[(j, i)] = wij;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    MixingMatrix::from_dense(w)
}

/// Second-largest singular value of the mixing matrix.
pub fn spectral_gap(m: &MixingMatrix) -> f64 {
    let mut sv: Vec<f64> = m.dense().clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.get(1).copied().unwrap_or(0.0).clamp(0.0, 1.0)
}
