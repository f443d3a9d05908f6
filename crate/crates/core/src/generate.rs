//! Random instances with the row W-property.
//!
//! Every block is strictly row diagonally dominant with a positive
//! diagonal, which is sufficient for the row W-property.

use rand::Rng;

use crate::matrix::Matrix;
use crate::model::{BlockMatrix, EvlcpInstance};

/// One block: off-diagonals uniform in `(-1, 1)`, diagonal equal to the
/// absolute off-diagonal row sum plus a margin uniform in `[0.1, 1)`.
pub fn sdd_block<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        let mut off = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            let v = rng.random_range(-1.0..1.0);
            m[(i, j)] = v;
            off += f64::abs(v);
        }
        m[(i, i)] = off + rng.random_range(0.1..1.0);
    }
    m
}

pub fn sdd_block_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> BlockMatrix {
    BlockMatrix::new((0..=k).map(|_| sdd_block(rng, n)).collect()).expect("valid blocks")
}

/// Blocks from [`sdd_block`] and source vectors uniform in `(-5, 5)`.
pub fn sdd_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> EvlcpInstance {
    let a = sdd_block_matrix(rng, n, k);
    let q = (0..=k).map(|_| (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
    EvlcpInstance::new(a, q).expect("consistent shapes")
}
