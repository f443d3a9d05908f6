//! Problem data: block matrices, instances, the residual `r(x)`, and the
//! row-wise linearization of the minimum function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::maximize::WeightFamily;

/// The ordered family `(A_0, ..., A_k)` of `n x n` blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Matrix>", into = "Vec<Matrix>")]
pub struct BlockMatrix {
    blocks: Vec<Matrix>,
}

impl BlockMatrix {
    /// Requires at least two blocks of one common dimension `n >= 1`, all finite.
    pub fn new(blocks: Vec<Matrix>) -> Result<Self> {
        if blocks.len() < 2 {
            return Err(Error::input(format!("need at least two blocks, got {}", blocks.len())));
        }
        let n = blocks[0].dim();
        if n == 0 {
            return Err(Error::input("blocks must have dimension n >= 1"));
        }
        for (j, b) in blocks.iter().enumerate() {
            if b.dim() != n {
                return Err(Error::input(format!("block {j} is {0}x{0}, expected {n}x{n}", b.dim())));
            }
            if !b.is_finite() {
                return Err(Error::input(format!("block {j} has non-finite entries")));
            }
        }
        Ok(BlockMatrix { blocks })
    }

    /// Convenience constructor from nested row arrays.
    pub fn from_rows<R: AsRef<[f64]>>(blocks: &[&[R]]) -> Result<Self> {
        let blocks = blocks.iter().map(|b| Matrix::from_rows(b)).collect::<Result<Vec<_>>>()?;
        BlockMatrix::new(blocks)
    }

    /// Number of blocks minus one.
    #[inline]
    pub fn k(&self) -> usize {
        self.blocks.len() - 1
    }

    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &Matrix {
        &self.blocks[j]
    }

    pub fn into_blocks(self) -> Vec<Matrix> {
        self.blocks
    }
}

impl TryFrom<Vec<Matrix>> for BlockMatrix {
    type Error = Error;
    fn try_from(blocks: Vec<Matrix>) -> Result<Self> {
        BlockMatrix::new(blocks)
    }
}

impl From<BlockMatrix> for Vec<Matrix> {
    fn from(a: BlockMatrix) -> Self {
        a.blocks
    }
}

/// A full problem `min(A_0 x + q_0, ..., A_k x + q_k) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvlcpInstance {
    a: BlockMatrix,
    q: Vec<Vec<f64>>,
}

impl EvlcpInstance {
    pub fn new(a: BlockMatrix, q: Vec<Vec<f64>>) -> Result<Self> {
        if q.len() != a.num_blocks() {
            return Err(Error::input(format!("expected {} source vectors, got {}", a.num_blocks(), q.len())));
        }
        for (j, qj) in q.iter().enumerate() {
            if qj.len() != a.n() {
                return Err(Error::input(format!("q_{j} has length {}, expected {}", qj.len(), a.n())));
            }
            if qj.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("q_{j} has non-finite entries")));
            }
        }
        Ok(EvlcpInstance { a, q })
    }

    /// Instance with all source vectors zero (its solution is `x = 0`).
    pub fn homogeneous(a: BlockMatrix) -> Self {
        let q = vec![vec![0.0; a.n()]; a.num_blocks()];
        EvlcpInstance { a, q }
    }

    pub fn matrix(&self) -> &BlockMatrix {
        &self.a
    }

    pub fn q(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn k(&self) -> usize {
        self.a.k()
    }

    /// Piece values `p[j][i] = (A_j x + q_j)_i`.
    pub fn pieces(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_len(x)?;
        Ok(self
            .a
            .blocks()
            .iter()
            .zip(&self.q)
            .map(|(aj, qj)| aj.rows().zip(qj).map(|(r, qi)| dot(r, x) + qi).collect())
            .collect())
    }

    /// `r(x)_i = min_j (A_j x + q_j)_i`.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.pieces(x)?;
        Ok((0..self.n()).map(|i| p.iter().map(|pj| pj[i]).fold(f64::INFINITY, f64::min)).collect())
    }

    /// Row-wise weights `D_j` with `r(x) - r(y) = (sum_j D_j A_j)(x - y)`,
    /// obtained by applying [`min_decompose`] to the piece values of each row.
    pub fn linearize(&self, x: &[f64], y: &[f64]) -> Result<WeightFamily> {
        let px = self.pieces(x)?;
        let py = self.pieces(y)?;
        let blocks = self.a.num_blocks();
        let mut d = vec![vec![0.0; self.n()]; blocks];
        let mut a = vec![0.0; blocks];
        let mut b = vec![0.0; blocks];
        for i in 0..self.n() {
            for j in 0..blocks {
                a[j] = px[j][i];
                b[j] = py[j][i];
            }
            let lambda = min_decompose(&a, &b)?;
            for j in 0..blocks {
                d[j][i] = lambda[j];
            }
        }
        WeightFamily::new(d)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::input(format!("x has length {}, expected {}", x.len(), self.n())));
        }
        Ok(())
    }
}

/// Convex weights `lambda` with `min(a) - min(b) = sum_j lambda_j (a_j - b_j)`.
///
/// The target always lies between the smallest and largest difference
/// `a_j - b_j`, so it is reached by interpolating between those two indices
/// (lowest index on ties); every other weight is zero.
pub fn min_decompose(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::input(format!(
            "min_decompose needs two non-empty vectors of equal length, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let target = min(a) - min(b);
    let (mut lo, mut hi) = (0, 0);
    let mut diffs = Vec::with_capacity(a.len());
    for (j, (x, y)) in a.iter().zip(b).enumerate() {
        let c = x - y;
        diffs.push(c);
        if c < diffs[lo] {
            lo = j;
        }
        if c > diffs[hi] {
            hi = j;
        }
    }
    let mut lambda = vec![0.0; a.len()];
    let span = diffs[hi] - diffs[lo];
    if span <= 0.0 {
        lambda[lo] = 1.0;
        return Ok(lambda);
    }
    let theta = ((diffs[hi] - target) / span).clamp(0.0, 1.0);
    lambda[lo] = theta;
    lambda[hi] = 1.0 - theta;
    Ok(lambda)
}

/// `A = Lambda - C` with `Lambda` the diagonal part of `A`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagonalSplit {
    pub lambda: Vec<f64>,
    pub c: Matrix,
}

impl DiagonalSplit {
    pub fn reconstruct(&self) -> Matrix {
        Matrix::from_diagonal(&self.lambda).sub(&self.c)
    }
}

pub fn diagonal_split(a: &Matrix) -> DiagonalSplit {
    let lambda = a.diagonal();
    let mut c = a.scale(-1.0);
    for i in 0..a.dim() {
        c[(i, i)] = 0.0;
    }
    DiagonalSplit { lambda, c }
}

/// Comparison matrix `<A>`: `|a_ii|` on the diagonal, `-|a_ij|` elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonMatrix(pub Matrix);

impl ComparisonMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// `<A> e`, the diagonal-dominance margins of each row.
    pub fn row_sums(&self) -> Vec<f64> {
        self.0.rows().map(|r| r.iter().sum()).collect()
    }
}

pub fn comparison_matrix(a: &Matrix) -> ComparisonMatrix {
    let mut m = a.abs().scale(-1.0);
    for i in 0..a.dim() {
        m[(i, i)] = a[(i, i)].abs();
    }
    ComparisonMatrix(m)
}
