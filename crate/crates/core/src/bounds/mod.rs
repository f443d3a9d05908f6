//! Global error bounds `‖x - x*‖ <= c ‖r(x)‖` and the matching lower bound.

pub mod alpha;
pub mod counting;
pub mod verify;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Norm};
use crate::maximize::{max_inv_norm_box, max_inv_norm_simplex, max_norm_simplex, MaxOptions, MaxStatus, WeightFamily};
use crate::model::{comparison_matrix, diagonal_split, BlockMatrix};
use crate::wcheck::{check_budget, sdd_violation, spectral_sufficient, RowSelection};

pub use alpha::{alpha_pair, bound_alpha_xz, bound_mathias_pang, AlphaEstimate, AlphaOptions};
pub use counting::{naive_rearrangement_cost, pair_enumeration_count, rearrangement_cardinality};
pub use verify::{verify_bound, verify_bound_at, Verification, VerifyOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rearrangement,
    Convex,
    Hmatrix,
    Sdd,
    AlphaXz,
    Lower,
    MathiasPang,
    ChenXiang,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Rearrangement,
        Method::Convex,
        Method::Hmatrix,
        Method::Sdd,
        Method::AlphaXz,
        Method::Lower,
        Method::MathiasPang,
        Method::ChenXiang,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rearrangement => "rearrangement",
            Method::Convex => "convex",
            Method::Hmatrix => "hmatrix",
            Method::Sdd => "sdd",
            Method::AlphaXz => "alpha_xz",
            Method::Lower => "lower",
            Method::MathiasPang => "mathias_pang",
            Method::ChenXiang => "chen_xiang",
        }
    }

    /// `lower` yields a multiplier `c` with `‖x - x*‖ >= c ‖r(x)‖`; all other
    /// methods are upper bounds.
    pub fn is_lower(self) -> bool {
        self == Method::Lower
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Method::ALL.into_iter().find(|m| m.as_str() == norm).ok_or_else(|| {
            let names: Vec<_> = Method::ALL.iter().map(|m| m.as_str()).collect();
            Error::input(format!("unknown method '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rigor {
    /// Closed-form value.
    Rigorous,
    /// Numerical estimate of a supremum or infimum.
    Estimate,
}

/// Per-row unordered block pair `(j, l)` with `j < l`. Row `i` of `B_1`
/// comes from `A_j`, row `i` of `B_2` from `A_l`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairSelection {
    pub pairs: Vec<(usize, usize)>,
}

impl PairSelection {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        if let Some((i, &(j, l))) = pairs.iter().enumerate().find(|(_, &(j, l))| j >= l) {
            return Err(Error::input(format!("row {i}: pair ({j}, {l}) must satisfy j < l")));
        }
        Ok(PairSelection { pairs })
    }

    /// `(B_1, B_2)` for this pair selection.
    pub fn build(&self, a: &BlockMatrix) -> Result<(Matrix, Matrix)> {
        let n = a.n();
        if self.pairs.len() != n {
            return Err(Error::input(format!("pair selection has {} rows, expected {n}", self.pairs.len())));
        }
        let (mut b1, mut b2) = (Matrix::zeros(n), Matrix::zeros(n));
        for (i, &(j, l)) in self.pairs.iter().enumerate() {
            if l >= a.num_blocks() {
                return Err(Error::input(format!("row {i}: block {l} out of range")));
            }
            b1.row_mut(i).copy_from_slice(a.block(j).row(i));
            b2.row_mut(i).copy_from_slice(a.block(l).row(i));
        }
        Ok((b1, b2))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    Weights { weights: WeightFamily },
    Selection { selection: RowSelection },
    Pair { pair: PairSelection, weights: WeightFamily },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub method: Method,
    #[serde(serialize_with = "crate::json::ser_f64")]
    pub value: f64,
    pub norm: Norm,
    pub rigor: Rigor,
    pub certificate: Option<Certificate>,
    /// Work in the method's own cost model: block pairs for the
    /// rearrangement bound, one for a single maximization, zero for closed forms.
    pub evaluations: u64,
    /// Objective evaluations actually performed.
    pub objective_evaluations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<MaxStatus>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    fn closed_form(method: Method, value: f64, norm: Norm) -> Self {
        BoundReport {
            method,
            value,
            norm,
            rigor: Rigor::Rigorous,
            certificate: None,
            evaluations: 0,
            objective_evaluations: 0,
            status: None,
            notes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct BoundOptions {
    pub max: MaxOptions,
    pub alpha: AlphaOptions,
}

/// Distinct pair options per row. Two pairs whose unordered sets of rows
/// coincide give the same box family (swapping them maps `d_i` to
/// `1 - d_i`), so only the first in `(j, l)` order is kept.
pub fn pair_options(a: &BlockMatrix) -> Vec<Vec<(usize, usize)>> {
    let blocks = a.num_blocks();
    let key = |j: usize, i: usize| -> Vec<u64> { a.block(j).row(i).iter().map(|v| (v + 0.0).to_bits()).collect() };
    (0..a.n())
        .map(|i| {
            let mut seen: Vec<(Vec<u64>, Vec<u64>)> = Vec::new();
            let mut opts = Vec::new();
            for j in 0..blocks {
                for l in (j + 1)..blocks {
                    let (kj, kl) = (key(j, i), key(l, i));
                    let set = if kj <= kl { (kj, kl) } else { (kl, kj) };
                    if !seen.contains(&set) {
                        seen.push(set);
                        opts.push((j, l));
                    }
                }
            }
            opts
        })
        .collect()
}

/// One box maximization of the rearrangement bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairValue {
    pub pair: PairSelection,
    #[serde(serialize_with = "crate::json::ser_f64")]
    pub value: f64,
    pub status: MaxStatus,
    pub argmax: WeightFamily,
    pub evaluations: u64,
}

/// Number of distinct pair selections after per-row deduplication.
pub fn distinct_pair_count(a: &BlockMatrix) -> Option<u128> {
    pair_options(a).iter().try_fold(1u128, |acc, o| acc.checked_mul(o.len() as u128))
}

/// Every distinct pair selection with its box maximum, in lexicographic
/// order of per-row option indices (row 0 most significant).
pub fn rearrangement_breakdown(a: &BlockMatrix, norm: Norm, opts: &MaxOptions) -> Result<Vec<PairValue>> {
    let options = pair_options(a);
    let total = check_budget("pair enumeration", distinct_pair_count(a), opts.vertex_budget)?;
    let n = a.n();
    (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut pairs = vec![(0, 0); n];
            for i in (0..n).rev() {
                let o = &options[i];
                pairs[i] = o[(idx % o.len() as u64) as usize];
                idx /= o.len() as u64;
            }
            let pair = PairSelection { pairs };
            let (b1, b2) = pair.build(a)?;
            let r = max_inv_norm_box(&b1, &b2, norm, opts)?;
            Ok(PairValue { pair, value: r.value, status: r.status, argmax: r.argmax, evaluations: r.evaluations })
        })
        .collect()
}

fn combine_status(a: MaxStatus, b: MaxStatus) -> MaxStatus {
    use MaxStatus::*;
    match (a, b) {
        (SingularEncountered, _) | (_, SingularEncountered) => SingularEncountered,
        (Estimate, _) | (_, Estimate) => Estimate,
        _ => VertexExact,
    }
}

/// Row-rearrangement bound: the largest box maximum over all block pairs.
pub fn bound_rearrangement(a: &BlockMatrix, norm: Norm, opts: &MaxOptions) -> Result<BoundReport> {
    let values = rearrangement_breakdown(a, norm, opts)?;
    let mut best: Option<&PairValue> = None;
    for v in &values {
        if best.map_or(true, |b| v.value > b.value) {
            best = Some(v);
        }
    }
    let best = best.expect("at least one pair");
    let status = values.iter().map(|v| v.status).fold(MaxStatus::VertexExact, combine_status);
    Ok(BoundReport {
        method: Method::Rearrangement,
        value: best.value,
        norm,
        rigor: Rigor::Estimate,
        certificate: Some(Certificate::Pair { pair: best.pair.clone(), weights: best.argmax.clone() }),
        evaluations: values.len() as u64,
        objective_evaluations: values.iter().map(|v| v.evaluations).sum(),
        status: Some(status),
        notes: Vec::new(),
    })
}

/// `max ‖(sum_j D_j A_j)^{-1}‖` over all weight families: one maximization.
pub fn bound_convex(a: &BlockMatrix, norm: Norm, opts: &MaxOptions) -> Result<BoundReport> {
    let r = max_inv_norm_simplex(a, norm, opts)?;
    let mut notes = Vec::new();
    if r.status == MaxStatus::SingularEncountered {
        notes.push("singular combination found: the row W-property fails".to_string());
    }
    Ok(BoundReport {
        method: Method::Convex,
        value: r.value,
        norm,
        rigor: Rigor::Estimate,
        certificate: Some(Certificate::Weights { weights: r.argmax }),
        evaluations: 1,
        objective_evaluations: r.evaluations,
        status: Some(r.status),
        notes,
    })
}

/// `‖(I - max_j Lambda_j^{-1}|C_j|)^{-1} max_j Lambda_j^{-1}‖`, valid when the
/// spectral condition holds.
pub fn bound_hmatrix(a: &BlockMatrix, norm: Norm) -> Result<BoundReport> {
    let check = spectral_sufficient(a)?;
    if !check.holds {
        return Err(Error::Precondition(format!(
            "spectral condition violated: rho(max_j Lambda_j^-1 |C_j|) = {:.6} >= 1",
            check.rho
        )));
    }
    let lhs = Matrix::identity(a.n()).sub(&check.jacobi_max);
    let inv =
        lhs.inverse().ok_or_else(|| Error::Numerical("I - max_j Lambda_j^-1 |C_j| is numerically singular".into()))?;
    let value = inv.matmul(&Matrix::from_diagonal(&check.inv_diag_max)).norm(norm);
    Ok(BoundReport::closed_form(Method::Hmatrix, value, norm))
}

/// `1 / min_i min_j (<A_j> e)_i` for strictly diagonally dominant blocks
/// with matching diagonal signs (infinity norm).
pub fn bound_sdd(a: &BlockMatrix) -> Result<BoundReport> {
    if let Some(v) = sdd_violation(a) {
        return Err(Error::Precondition(v.to_string()));
    }
    let min_margin = a.blocks().iter().flat_map(|b| comparison_matrix(b).row_sums()).fold(f64::INFINITY, f64::min);
    Ok(BoundReport::closed_form(Method::Sdd, 1.0 / min_margin, Norm::Inf))
}

/// Lower-bound multiplier `1 / max ‖sum_j D_j A_j‖`.
pub fn bound_lower(a: &BlockMatrix, norm: Norm) -> Result<BoundReport> {
    let r = max_norm_simplex(a, norm);
    if r.value == 0.0 {
        return Err(Error::Precondition("all blocks are zero".into()));
    }
    let mut report = BoundReport::closed_form(Method::Lower, 1.0 / r.value, norm);
    report.certificate = Some(Certificate::Weights { weights: r.argmax });
    report.objective_evaluations = r.evaluations;
    Ok(report)
}

/// The two standard-LCP bounds for `(I, A_1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChenXiangReport {
    /// `max_d ‖(I - D + D A_1)^{-1}‖`.
    pub max_form: BoundReport,
    /// `‖<A_1>^{-1} max(Lambda_1, I)‖`, an upper bound on `max_form`.
    pub closed_form: BoundReport,
}

/// Requires `A_1` to be an H-matrix with positive diagonal.
pub fn bound_chen_xiang(a1: &Matrix, norm: Norm, opts: &MaxOptions) -> Result<ChenXiangReport> {
    let n = a1.dim();
    let split = diagonal_split(a1);
    if let Some(i) = split.lambda.iter().position(|&d| d <= 0.0) {
        return Err(Error::Precondition(format!(
            "A_1 needs a positive diagonal, entry ({i},{i}) is {}",
            split.lambda[i]
        )));
    }
    let pair = BlockMatrix::new(vec![Matrix::identity(n), a1.clone()])?;
    let check = spectral_sufficient(&pair)?;
    if !check.holds {
        return Err(Error::Precondition(format!("A_1 is not an H-matrix: rho(Lambda^-1 |C|) = {:.6} >= 1", check.rho)));
    }
    let comp_inv = comparison_matrix(a1)
        .0
        .inverse()
        .ok_or_else(|| Error::Numerical("comparison matrix is numerically singular".into()))?;
    let scale: Vec<f64> = split.lambda.iter().map(|&d| d.max(1.0)).collect();
    let closed = comp_inv.matmul(&Matrix::from_diagonal(&scale)).norm(norm);

    let mut max_form = bound_convex(&pair, norm, opts)?;
    max_form.method = Method::ChenXiang;
    let closed_form = BoundReport::closed_form(Method::ChenXiang, closed, norm);
    if max_form.value > closed * (1.0 + 1e-9) {
        return Err(Error::Numerical(format!("max form {} exceeds closed form {closed}", max_form.value)));
    }
    Ok(ChenXiangReport { max_form, closed_form })
}

fn standard_lcp_matrix(a: &BlockMatrix, method: Method) -> Result<&Matrix> {
    if a.k() != 1 || *a.block(0) != Matrix::identity(a.n()) {
        return Err(Error::Precondition(format!("method {method} needs exactly two blocks with A_0 = I")));
    }
    Ok(a.block(1))
}

/// Runs one method with the given options.
pub fn compute(method: Method, a: &BlockMatrix, norm: Norm, opts: &BoundOptions) -> Result<BoundReport> {
    let inf_only = |m: Method| {
        if norm != Norm::Inf {
            Err(Error::Precondition(format!("method {m} is only defined for the infinity norm")))
        } else {
            Ok(())
        }
    };
    match method {
        Method::Rearrangement => bound_rearrangement(a, norm, &opts.max),
        Method::Convex => bound_convex(a, norm, &opts.max),
        Method::Hmatrix => bound_hmatrix(a, norm),
        Method::Sdd => {
            inf_only(method)?;
            bound_sdd(a)
        }
        Method::AlphaXz => {
            inf_only(method)?;
            bound_alpha_xz(a, &opts.alpha)
        }
        Method::Lower => bound_lower(a, norm),
        Method::MathiasPang => {
            inf_only(method)?;
            bound_mathias_pang(standard_lcp_matrix(a, method)?, &opts.alpha)
        }
        Method::ChenXiang => {
            let r = bound_chen_xiang(standard_lcp_matrix(a, method)?, norm, &opts.max)?;
            let mut report = r.closed_form;
            report.notes.push(format!("max form value {}", r.max_form.value));
            Ok(report)
        }
    }
}
