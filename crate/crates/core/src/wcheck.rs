//! Deciding the row W-property.
//!
//! A block matrix `(A_0, ..., A_k)` has the row W-property exactly when
//! every convex row-combination `sum_j D_j A_j` (nonnegative diagonal `D_j`
//! summing to `I`) is nonsingular.
//!
//! Row `i` of that combination is `sum_j d_{j,i} (A_j)_{i.}`, so its
//! determinant is affine in each row's weight vector separately. Fixing all
//! rows but one, the determinant is a convex combination of its values with
//! that row at a simplex vertex; by induction over the rows the determinant
//! anywhere in the product of simplices is a convex combination of the
//! determinants of the representative matrices (one block chosen per row).
//! Hence: all `(k+1)^n` representative determinants nonzero with one common
//! sign is both necessary and sufficient, and the check below is exact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{spectral_radius_nonnegative, LuWorkspace, Matrix};
use crate::maximize::WeightFamily;
use crate::model::{comparison_matrix, diagonal_split, BlockMatrix};

pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-10;

/// One block index per row: row `i` of the representative is row `i` of
/// block `choice[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RowSelection {
    pub choice: Vec<usize>,
}

impl RowSelection {
    pub fn new(choice: Vec<usize>) -> Self {
        RowSelection { choice }
    }

    pub fn zeros(n: usize) -> Self {
        RowSelection { choice: vec![0; n] }
    }

    /// The `index`-th selection in lexicographic order (row 0 most significant).
    pub fn from_index(mut index: u64, blocks: usize, n: usize) -> Self {
        let mut choice = vec![0; n];
        for c in choice.iter_mut().rev() {
            *c = (index % blocks as u64) as usize;
            index /= blocks as u64;
        }
        RowSelection { choice }
    }

    pub fn validate(&self, a: &BlockMatrix) -> Result<()> {
        if self.choice.len() != a.n() {
            return Err(Error::input(format!("selection has {} rows, matrix has {}", self.choice.len(), a.n())));
        }
        if let Some((i, &j)) = self.choice.iter().enumerate().find(|(_, &j)| j > a.k()) {
            return Err(Error::input(format!("row {i} selects block {j}, but k = {}", a.k())));
        }
        Ok(())
    }
}

/// Number of selections `(k+1)^n`, `None` on overflow.
pub fn selection_count(blocks: usize, n: usize) -> Option<u128> {
    (blocks as u128).checked_pow(n as u32)
}

pub(crate) fn check_budget(what: &'static str, required: Option<u128>, budget: u64) -> Result<u64> {
    match required {
        Some(r) if r <= budget as u128 => Ok(r as u64),
        Some(r) => Err(Error::Budget { what, required: r, budget }),
        None => Err(Error::Budget { what, required: u128::MAX, budget }),
    }
}

pub(crate) fn fill_representative(a: &BlockMatrix, choice: &[usize], out: &mut [f64]) {
    let n = a.n();
    for (i, &j) in choice.iter().enumerate() {
        out[i * n..(i + 1) * n].copy_from_slice(a.block(j).row(i));
    }
}

pub fn representative(a: &BlockMatrix, s: &RowSelection) -> Result<Matrix> {
    s.validate(a)?;
    let n = a.n();
    let mut data = vec![0.0; n * n];
    fill_representative(a, &s.choice, &mut data);
    Matrix::from_row_slice(n, &data)
}

#[derive(Clone, Copy, Debug)]
pub struct WOptions {
    pub budget: u64,
    /// `|det| <= singular_tol * prod_i ‖row_i‖_inf` counts as singular.
    pub singular_tol: f64,
}

impl Default for WOptions {
    fn default() -> Self {
        WOptions { budget: DEFAULT_ENUMERATION_BUDGET, singular_tol: DEFAULT_SINGULAR_TOL }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    Singular,
    SignFlip,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// Every representative determinant has this sign.
    CommonSign { sign: i8, min_abs_det: f64 },
    /// First failing selection in lexicographic order.
    Failing { selection: RowSelection, determinant: f64, reason: FailureKind },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WCertificate {
    pub verdict: bool,
    pub witness: Witness,
    pub vertices_checked: u64,
}

fn scaled_det(a: &BlockMatrix, index: u64, ws: &mut LuWorkspace, buf: &mut [f64]) -> (f64, f64) {
    let n = a.n();
    let sel = RowSelection::from_index(index, a.num_blocks(), n);
    fill_representative(a, &sel.choice, buf);
    let scale: f64 = buf.chunks_exact(n).map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).product();
    (ws.determinant(buf), scale)
}

/// Exact vertex-sign decision of the row W-property.
pub fn has_row_w_property(a: &BlockMatrix, opts: &WOptions) -> Result<WCertificate> {
    let n = a.n();
    let total = check_budget("row W-property vertex enumeration", selection_count(a.num_blocks(), n), opts.budget)?;
    let classify = |det: f64, scale: f64| -> Option<i8> {
        if det.abs() <= opts.singular_tol * scale || det.abs() == 0.0 {
            None
        } else {
            Some(if det > 0.0 { 1 } else { -1 })
        }
    };

    let mut ws = LuWorkspace::new(n);
    let mut buf = vec![0.0; n * n];
    let (det0, scale0) = scaled_det(a, 0, &mut ws, &mut buf);
    let Some(sign) = classify(det0, scale0) else {
        return Ok(WCertificate {
            verdict: false,
            witness: Witness::Failing {
                selection: RowSelection::zeros(n),
                determinant: det0,
                reason: FailureKind::Singular,
            },
            vertices_checked: 1,
        });
    };

    // One pass: the first selection (lexicographically) that is singular or
    // has the wrong sign, plus the smallest |det| overall.
    #[derive(Clone, Copy)]
    struct Acc {
        bad: Option<(u64, f64, Option<i8>)>,
        min_abs: f64,
    }
    let merge = |x: Acc, y: Acc| Acc {
        bad: match (x.bad, y.bad) {
            (Some(p), Some(q)) => Some(if p.0 <= q.0 { p } else { q }),
            (p, q) => p.or(q),
        },
        min_abs: x.min_abs.min(y.min_abs),
    };
    let acc = (1..total)
        .into_par_iter()
        .map_init(
            || (LuWorkspace::new(n), vec![0.0; n * n]),
            |(ws, buf), idx| {
                let (det, scale) = scaled_det(a, idx, ws, buf);
                let class = classify(det, scale);
                Acc { bad: (class != Some(sign)).then_some((idx, det, class)), min_abs: det.abs() }
            },
        )
        .reduce(|| Acc { bad: None, min_abs: det0.abs() }, merge);

    Ok(match acc.bad {
        Some((idx, det, s)) => WCertificate {
            verdict: false,
            witness: Witness::Failing {
                selection: RowSelection::from_index(idx, a.num_blocks(), n),
                determinant: det,
                reason: if s.is_none() { FailureKind::Singular } else { FailureKind::SignFlip },
            },
            vertices_checked: total,
        },
        None => WCertificate {
            verdict: true,
            witness: Witness::CommonSign { sign, min_abs_det: acc.min_abs },
            vertices_checked: total,
        },
    })
}

/// Result of the spectral sufficient condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralCheck {
    pub rho: f64,
    pub holds: bool,
    /// Entrywise maximum over blocks of `Lambda_j^{-1} |C_j|`.
    pub jacobi_max: Matrix,
    /// Entrywise maximum over blocks of `Lambda_j^{-1}` (diagonal).
    pub inv_diag_max: Vec<f64>,
}

pub const POWER_MAX_ITER: usize = 500;
pub const POWER_TOL: f64 = 1e-10;

/// `rho(max_j Lambda_j^{-1}|C_j|) < 1` implies the row W-property.
/// Requires every diagonal entry of every block to be strictly positive.
pub fn spectral_sufficient(a: &BlockMatrix) -> Result<SpectralCheck> {
    let n = a.n();
    let mut jacobi_max = Matrix::zeros(n);
    let mut inv_diag_max = vec![0.0f64; n];
    for (j, block) in a.blocks().iter().enumerate() {
        let split = diagonal_split(block);
        if let Some(i) = split.lambda.iter().position(|&d| d <= 0.0) {
            return Err(Error::Precondition(format!(
                "diagonal entry ({i},{i}) of block {j} is {} but must be positive",
                split.lambda[i]
            )));
        }
        let mut scaled = split.c.abs();
        for i in 0..n {
            let inv = 1.0 / split.lambda[i];
            scaled.row_mut(i).iter_mut().for_each(|v| *v *= inv);
            inv_diag_max[i] = inv_diag_max[i].max(inv);
        }
        jacobi_max = jacobi_max.max_entrywise(&scaled);
    }
    let rho = spectral_radius_nonnegative(&jacobi_max, POWER_MAX_ITER, POWER_TOL);
    Ok(SpectralCheck { rho, holds: rho < 1.0, jacobi_max, inv_diag_max })
}

/// Why the diagonal-dominance condition fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SddViolation {
    NotDominant { block: usize, row: usize, margin: f64 },
    SignMismatch { block: usize, row: usize },
}

impl std::fmt::Display for SddViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SddViolation::NotDominant { block, row, margin } => {
                write!(f, "block {block} is not strictly row diagonally dominant in row {row} (margin {margin})")
            }
            SddViolation::SignMismatch { block, row } => {
                write!(f, "diagonal sign of block {block} in row {row} differs from block 0")
            }
        }
    }
}

/// First violation of "every block strictly row diagonally dominant with
/// diagonal signs matching block 0", scanning blocks then rows.
pub fn sdd_violation(a: &BlockMatrix) -> Option<SddViolation> {
    let sign0: Vec<f64> = a.block(0).diagonal().iter().map(|d| d.signum()).collect();
    for (j, block) in a.blocks().iter().enumerate() {
        let margins = comparison_matrix(block).row_sums();
        for (i, &margin) in margins.iter().enumerate() {
            if margin <= 0.0 {
                return Some(SddViolation::NotDominant { block: j, row: i, margin });
            }
            if block[(i, i)].signum() != sign0[i] {
                return Some(SddViolation::SignMismatch { block: j, row: i });
            }
        }
    }
    None
}

pub fn sdd_sufficient(a: &BlockMatrix) -> bool {
    sdd_violation(a).is_none()
}

/// Collapses blocks `1..=k` into one with per-row convex weights:
/// returns `(A_0, sum_{j>=1} D_j A_j)`. `w` has `k` weight rows, one per
/// block `A_1, ..., A_k`. The result has the row W-property exactly when
/// the input does, for every admissible `w`.
pub fn reduce_to_two_blocks(a: &BlockMatrix, w: &WeightFamily) -> Result<BlockMatrix> {
    if w.num_blocks() != a.k() || w.n() != a.n() {
        return Err(Error::input(format!(
            "weights cover {} blocks of dimension {}, expected {} blocks of dimension {}",
            w.num_blocks(),
            w.n(),
            a.k(),
            a.n()
        )));
    }
    let n = a.n();
    let mut combined = Matrix::zeros(n);
    for (d, block) in w.weights().iter().zip(&a.blocks()[1..]) {
        for i in 0..n {
            for (out, v) in combined.row_mut(i).iter_mut().zip(block.row(i)) {
                *out += d[i] * v;
            }
        }
    }
    BlockMatrix::new(vec![a.block(0).clone(), combined])
}
