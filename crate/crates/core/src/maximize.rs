//! Maximization of norms of (inverses of) convex row-combinations.
//!
//! Every inner problem of the error bounds is a supremum over a product of
//! per-row simplices: row `i` of `M(d) = sum_j D_j A_j` is
//! `sum_j d_{j,i} (A_j)_{i.}` with `d_{.,i}` in the probability simplex.
//! The two-block box family `((I - D) B_1 + D B_2)` is the special case
//! with blocks `(B_1, B_2)`.
//!
//! The search evaluates every vertex (a [`RowSelection`]) exactly, sweeps a
//! barycentric grid, then runs compass-style refinement from the best grid
//! point. `status` says whether the grid or refinement ever beat the vertex
//! maximum.
//!
//! With all other rows fixed, `M(d)^{-1} = adj M(d) / det M(d)` has an
//! adjugate and determinant that are both affine in row `i`'s weights, so
//! `‖M(d)^{-1}‖` is a convex function over a positive affine one and hence
//! quasiconvex on that row's simplex. The supremum is therefore attained at
//! a vertex whenever no combination is singular, and in exact arithmetic the
//! grid never wins. The non-vertex phases are kept as an independent
//! numerical check; an `Estimate` status points at rounding trouble near
//! singularity.
//!
//! `‖M(d)‖` is convex in each row's weights and [`max_norm_simplex`] uses
//! the closed forms directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{LuWorkspace, Matrix, Norm};
use crate::model::BlockMatrix;
use crate::wcheck::{check_budget, fill_representative, selection_count, RowSelection};

/// Tolerance on the per-row sums and bounds of a weight family.
pub const WEIGHT_TOL: f64 = 1e-12;
pub const DEFAULT_REFINE_TOL: f64 = 1e-9;
pub const DEFAULT_VERTEX_BUDGET: u64 = 1_000_000;
pub const DEFAULT_GRID_BUDGET: u64 = 4_000_000;
const PARALLEL_THRESHOLD: u64 = 2048;
const MAX_REFINE_SWEEPS: usize = 20_000;

/// Diagonal weights `d[j][i]` = i-th diagonal entry of `D_j`, with
/// `sum_j d[j][i] = 1` for every row `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightFamily {
    d: Vec<Vec<f64>>,
}

impl WeightFamily {
    pub fn new(d: Vec<Vec<f64>>) -> Result<Self> {
        let Some(n) = d.first().map(Vec::len) else {
            return Err(Error::input("weight family needs at least one block"));
        };
        if n == 0 || d.iter().any(|r| r.len() != n) {
            return Err(Error::input("weight family rows must be non-empty and equally long"));
        }
        for i in 0..n {
            let mut sum = 0.0;
            for (j, dj) in d.iter().enumerate() {
                let v = dj[i];
                if !(-WEIGHT_TOL..=1.0 + WEIGHT_TOL).contains(&v) {
                    return Err(Error::input(format!("weight d[{j}][{i}] = {v} outside [0, 1]")));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::input(format!("weights of row {i} sum to {sum}, expected 1")));
            }
        }
        Ok(WeightFamily { d })
    }

    pub fn from_selection(sel: &RowSelection, blocks: usize) -> Self {
        let n = sel.choice.len();
        let mut d = vec![vec![0.0; n]; blocks];
        for (i, &j) in sel.choice.iter().enumerate() {
            d[j][i] = 1.0;
        }
        WeightFamily { d }
    }

    /// Box weights `d` as the two-block family `(I - D, D)`.
    pub fn from_box(d: &[f64]) -> Result<Self> {
        WeightFamily::new(vec![d.iter().map(|x| 1.0 - x).collect(), d.to_vec()])
    }

    /// Row-major `[i * blocks + j]` layout used internally.
    fn from_flat(flat: &[f64], blocks: usize, n: usize) -> Self {
        let mut d = vec![vec![0.0; n]; blocks];
        for i in 0..n {
            for j in 0..blocks {
                d[j][i] = flat[i * blocks + j];
            }
        }
        WeightFamily { d }
    }

    pub fn num_blocks(&self) -> usize {
        self.d.len()
    }

    pub fn n(&self) -> usize {
        self.d[0].len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.d
    }

    /// `sum_j D_j A_j`.
    pub fn combine(&self, a: &BlockMatrix) -> Result<Matrix> {
        if self.num_blocks() != a.num_blocks() || self.n() != a.n() {
            return Err(Error::input(format!(
                "weights cover {} blocks of dimension {}, matrix has {} blocks of dimension {}",
                self.num_blocks(),
                self.n(),
                a.num_blocks(),
                a.n()
            )));
        }
        let n = a.n();
        let mut m = Matrix::zeros(n);
        for (dj, block) in self.d.iter().zip(a.blocks()) {
            for i in 0..n {
                let w = dj[i];
                if w == 0.0 {
                    continue;
                }
                for (out, v) in m.row_mut(i).iter_mut().zip(block.row(i)) {
                    *out += w * v;
                }
            }
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxStatus {
    /// Grid and refinement never beat the vertex maximum.
    VertexExact,
    /// The reported value comes from an interior point.
    Estimate,
    /// Some combination is singular; the supremum is infinite.
    SingularEncountered,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxResult {
    #[serde(serialize_with = "crate::json::ser_f64")]
    pub value: f64,
    pub argmax: WeightFamily,
    pub evaluations: u64,
    pub status: MaxStatus,
    /// Maximum over the vertices alone.
    #[serde(serialize_with = "crate::json::ser_f64")]
    pub vertex_value: f64,
    /// Barycentric step actually used for the grid (after budget coarsening).
    pub grid_step: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxOptions {
    /// Grid step; `None` picks a size-dependent default.
    pub grid_step: Option<f64>,
    pub refine_tol: f64,
    /// Cap on the number of vertices `(k+1)^n`.
    pub vertex_budget: u64,
    /// Cap on grid points; the step is coarsened until the grid fits.
    pub grid_budget: u64,
}

impl Default for MaxOptions {
    fn default() -> Self {
        MaxOptions {
            grid_step: None,
            refine_tol: DEFAULT_REFINE_TOL,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
            grid_budget: DEFAULT_GRID_BUDGET,
        }
    }
}

impl MaxOptions {
    pub fn with_grid_step(mut self, step: f64) -> Self {
        self.grid_step = Some(step);
        self
    }
}

/// Default box grid: 0.01 for n <= 2, 0.1 for n <= 4, vertices only beyond.
pub fn default_box_step(n: usize) -> Option<f64> {
    match n {
        0..=2 => Some(0.01),
        3..=4 => Some(0.1),
        _ => None,
    }
}

/// Default simplex grid: 0.05 for k <= 3 and n <= 3, vertices only beyond.
pub fn default_simplex_step(k: usize, n: usize) -> Option<f64> {
    (k <= 3 && n <= 3).then_some(0.05)
}

/// `sup_{d in [0,1]^n} ‖((I - D) B_1 + D B_2)^{-1}‖`.
pub fn max_inv_norm_box(b1: &Matrix, b2: &Matrix, norm: Norm, opts: &MaxOptions) -> Result<MaxResult> {
    let pair = BlockMatrix::new(vec![b1.clone(), b2.clone()])?;
    let step = opts.grid_step.or_else(|| default_box_step(pair.n()));
    maximize_inverse_norm(&pair, norm, step, opts)
}

/// `sup ‖(sum_j D_j A_j)^{-1}‖` over all weight families.
pub fn max_inv_norm_simplex(a: &BlockMatrix, norm: Norm, opts: &MaxOptions) -> Result<MaxResult> {
    let step = opts.grid_step.or_else(|| default_simplex_step(a.k(), a.n()));
    maximize_inverse_norm(a, norm, step, opts)
}

/// Objective at one weight family: `‖(sum_j D_j A_j)^{-1}‖`, infinite when singular.
pub fn inverse_norm_at(a: &BlockMatrix, w: &WeightFamily, norm: Norm) -> Result<f64> {
    let m = w.combine(a)?;
    let mut ws = LuWorkspace::new(a.n());
    Ok(ws.inverse_norm(m.as_slice(), norm).unwrap_or(f64::INFINITY))
}

/// Exact `sup ‖sum_j D_j A_j‖`.
///
/// Each row's absolute sum is convex in that row's weights, so for the
/// infinity norm the maximum is `max_i max_j ‖(A_j)_{i.}‖_1`. For the one
/// norm, column `c`'s absolute sum is a sum of per-row convex terms and is
/// maximized by `sum_i max_j |(A_j)_{ic}|`; the overall value is the largest
/// column. Both maxima are attained at a vertex.
pub fn max_norm_simplex(a: &BlockMatrix, norm: Norm) -> MaxResult {
    let n = a.n();
    let blocks = a.num_blocks();
    let argmax_block = |score: &dyn Fn(usize, usize) -> f64, i: usize| -> (usize, f64) {
        (0..blocks).fold((0, f64::NEG_INFINITY), |(bj, bv), j| {
            let v = score(j, i);
            if v > bv {
                (j, v)
            } else {
                (bj, bv)
            }
        })
    };
    let (value, choice) = match norm {
        Norm::Inf => {
            let score = |j: usize, i: usize| a.block(j).row(i).iter().map(|x| x.abs()).sum::<f64>();
            let per_row: Vec<(usize, f64)> = (0..n).map(|i| argmax_block(&score, i)).collect();
            let value = per_row.iter().fold(0.0f64, |m, &(_, v)| m.max(v));
            (value, per_row.into_iter().map(|(j, _)| j).collect::<Vec<_>>())
        }
        Norm::One => {
            let mut best = (f64::NEG_INFINITY, vec![0; n]);
            for c in 0..n {
                let score = |j: usize, i: usize| a.block(j)[(i, c)].abs();
                let per_row: Vec<(usize, f64)> = (0..n).map(|i| argmax_block(&score, i)).collect();
                let total: f64 = per_row.iter().map(|&(_, v)| v).sum();
                if total > best.0 {
                    best = (total, per_row.into_iter().map(|(j, _)| j).collect());
                }
            }
            best
        }
    };
    MaxResult {
        value,
        argmax: WeightFamily::from_selection(&RowSelection::new(choice), blocks),
        evaluations: (blocks * n) as u64,
        status: MaxStatus::VertexExact,
        vertex_value: value,
        grid_step: None,
    }
}

/// Per-thread scratch for objective evaluations.
struct Scratch {
    ws: LuWorkspace,
    m: Vec<f64>,
    w: Vec<f64>,
}

impl Scratch {
    fn new(n: usize, blocks: usize) -> Self {
        Scratch { ws: LuWorkspace::new(n), m: vec![0.0; n * n], w: vec![0.0; n * blocks] }
    }
}

/// Evaluates the flat weights currently in `s.w`.
fn eval_flat(a: &BlockMatrix, norm: Norm, s: &mut Scratch) -> f64 {
    let n = a.n();
    let blocks = a.num_blocks();
    s.m.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        let row = &mut s.m[i * n..(i + 1) * n];
        for j in 0..blocks {
            let w = s.w[i * blocks + j];
            if w != 0.0 {
                for (out, v) in row.iter_mut().zip(a.block(j).row(i)) {
                    *out += w * v;
                }
            }
        }
    }
    s.ws.inverse_norm(&s.m, norm).unwrap_or(f64::INFINITY)
}

/// Running best point; `index` orders ties (smaller wins).
#[derive(Clone, Copy, Debug)]
struct Best {
    value: f64,
    index: u64,
    has_pos: bool,
    has_neg: bool,
}

impl Best {
    const EMPTY: Best = Best { value: f64::NEG_INFINITY, index: u64::MAX, has_pos: false, has_neg: false };

    fn merge(self, other: Best) -> Best {
        let take_other = other.value > self.value || (other.value == self.value && other.index < self.index);
        let (value, index) = if take_other { (other.value, other.index) } else { (self.value, self.index) };
        Best { value, index, has_pos: self.has_pos || other.has_pos, has_neg: self.has_neg || other.has_neg }
    }
}

fn sweep<F>(total: u64, n: usize, blocks: usize, f: F) -> Best
where
    F: Fn(u64, &mut Scratch) -> (f64, f64) + Sync,
{
    let point = |s: &mut Scratch, idx: u64| {
        let (value, det) = f(idx, s);
        Best { value, index: idx, has_pos: det > 0.0, has_neg: det < 0.0 }
    };
    if total >= PARALLEL_THRESHOLD {
        (0..total).into_par_iter().map_init(|| Scratch::new(n, blocks), point).reduce(|| Best::EMPTY, Best::merge)
    } else {
        let mut s = Scratch::new(n, blocks);
        (0..total).map(|idx| point(&mut s, idx)).fold(Best::EMPTY, Best::merge)
    }
}

/// Compositions of `m` into `parts` nonnegative parts, as barycentric
/// points, in lexicographic order.
fn simplex_points(parts: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(parts: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == parts {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(parts, left - c, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(parts, m, m, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.checked_mul(n - i)? / (i + 1);
    }
    Some(r)
}

/// Grid resolution `m` (step `1/m`) after coarsening to fit the budget.
fn grid_resolution(step: Option<f64>, blocks: usize, n: usize, budget: u64) -> Option<(usize, u64)> {
    let step = step?;
    if !(step > 0.0 && step <= 1.0) {
        return None;
    }
    let mut m = (1.0 / step).round().max(1.0) as usize;
    while m >= 2 {
        let per_row = binomial((m + blocks - 1) as u128, (blocks - 1) as u128);
        if let Some(total) = per_row.and_then(|p| p.checked_pow(n as u32)) {
            if total <= budget as u128 {
                return Some((m, total as u64));
            }
        }
        m -= 1;
    }
    None
}

fn maximize_inverse_norm(a: &BlockMatrix, norm: Norm, step: Option<f64>, opts: &MaxOptions) -> Result<MaxResult> {
    let n = a.n();
    let blocks = a.num_blocks();
    let vertices = check_budget("vertex enumeration", selection_count(blocks, n), opts.vertex_budget)?;
    let mut evaluations = vertices;

    let vertex_best = sweep(vertices, n, blocks, |idx, s| {
        let sel = RowSelection::from_index(idx, blocks, n);
        fill_representative(a, &sel.choice, &mut s.m);
        let v = s.ws.inverse_norm(&s.m, norm);
        let det = if v.is_some() { s.ws.factored_determinant() } else { 0.0 };
        (v.unwrap_or(f64::INFINITY), det)
    });
    let vertex_sel = RowSelection::from_index(vertex_best.index, blocks, n);
    let vertex_w = WeightFamily::from_selection(&vertex_sel, blocks);

    // A zero or sign-changing vertex determinant means some interior
    // combination is singular (the determinant interpolates the vertices).
    if vertex_best.value.is_infinite() || (vertex_best.has_pos && vertex_best.has_neg) {
        return Ok(MaxResult {
            value: f64::INFINITY,
            argmax: vertex_w,
            evaluations,
            status: MaxStatus::SingularEncountered,
            vertex_value: vertex_best.value,
            grid_step: None,
        });
    }

    // grid
    let grid = grid_resolution(step, blocks, n, opts.grid_budget);
    let mut start = vertex_w.clone();
    let mut start_value = vertex_best.value;
    let mut h0 = 0.25;
    if let Some((m, total)) = grid {
        let pts = simplex_points(blocks, m);
        let per_row = pts.len() as u64;
        let decode = |mut idx: u64, w: &mut [f64]| {
            for i in (0..n).rev() {
                let p = &pts[(idx % per_row) as usize];
                w[i * blocks..(i + 1) * blocks].copy_from_slice(p);
                idx /= per_row;
            }
        };
        let grid_best = sweep(total, n, blocks, |idx, s| {
            decode(idx, &mut s.w);
            (eval_flat(a, norm, s), 0.0)
        });
        evaluations += total;
        if grid_best.value.is_infinite() {
            let mut w = vec![0.0; n * blocks];
            decode(grid_best.index, &mut w);
            return Ok(MaxResult {
                value: f64::INFINITY,
                argmax: WeightFamily::from_flat(&w, blocks, n),
                evaluations,
                status: MaxStatus::SingularEncountered,
                vertex_value: vertex_best.value,
                grid_step: Some(1.0 / m as f64),
            });
        }
        if grid_best.value > start_value {
            let mut w = vec![0.0; n * blocks];
            decode(grid_best.index, &mut w);
            start = WeightFamily::from_flat(&w, blocks, n);
            start_value = grid_best.value;
        }
        h0 = 1.0 / m as f64;
    }

    let (refined_w, refined_value, refine_evals) = refine(a, norm, &start, start_value, h0, opts.refine_tol);
    evaluations += refine_evals;

    if refined_value.is_infinite() {
        return Ok(MaxResult {
            value: f64::INFINITY,
            argmax: refined_w,
            evaluations,
            status: MaxStatus::SingularEncountered,
            vertex_value: vertex_best.value,
            grid_step: grid.map(|(m, _)| 1.0 / m as f64),
        });
    }
    let grid_step = grid.map(|(m, _)| 1.0 / m as f64);
    if refined_value <= vertex_best.value + opts.refine_tol * vertex_best.value.max(1.0) {
        Ok(MaxResult {
            value: vertex_best.value,
            argmax: vertex_w,
            evaluations,
            status: MaxStatus::VertexExact,
            vertex_value: vertex_best.value,
            grid_step,
        })
    } else {
        Ok(MaxResult {
            value: refined_value,
            argmax: refined_w,
            evaluations,
            status: MaxStatus::Estimate,
            vertex_value: vertex_best.value,
            grid_step,
        })
    }
}

/// Compass search on the product of simplices: shift mass `h` between two
/// blocks within one row, keep strict improvements, halve `h` after a sweep
/// without one, stop once `h` drops below `tol`.
fn refine(
    a: &BlockMatrix,
    norm: Norm,
    start: &WeightFamily,
    start_value: f64,
    h0: f64,
    tol: f64,
) -> (WeightFamily, f64, u64) {
    let n = a.n();
    let blocks = a.num_blocks();
    let mut s = Scratch::new(n, blocks);
    for i in 0..n {
        for j in 0..blocks {
            s.w[i * blocks + j] = start.d[j][i];
        }
    }
    let mut best = start_value;
    let mut evals = 0u64;
    let mut h = h0;
    let mut sweeps = 0;
    while h >= tol && sweeps < MAX_REFINE_SWEEPS && best.is_finite() {
        sweeps += 1;
        let mut improved = false;
        for i in 0..n {
            for from in 0..blocks {
                for to in 0..blocks {
                    if from == to {
                        continue;
                    }
                    let (fi, ti) = (i * blocks + from, i * blocks + to);
                    let amount = h.min(s.w[fi]);
                    if amount <= 0.0 {
                        continue;
                    }
                    let (old_f, old_t) = (s.w[fi], s.w[ti]);
                    s.w[fi] = if amount == old_f { 0.0 } else { old_f - amount };
                    s.w[ti] = (old_t + amount).min(1.0);
                    let v = eval_flat(a, norm, &mut s);
                    evals += 1;
                    if v > best * (1.0 + 4.0 * f64::EPSILON) {
                        best = v;
                        improved = true;
                        if v.is_infinite() {
                            break;
                        }
                    } else {
                        s.w[fi] = old_f;
                        s.w[ti] = old_t;
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (WeightFamily::from_flat(&s.w, blocks, n), best, evals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use approx::assert_abs_diff_eq;

    fn m2(rows: [[f64; 2]; 2]) -> Matrix {
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn weight_family_validation() {
        assert!(WeightFamily::new(vec![vec![0.5, 1.0], vec![0.5, 0.0]]).is_ok());
        assert!(WeightFamily::new(vec![vec![0.5, 1.0], vec![0.6, 0.0]]).is_err());
        assert!(WeightFamily::new(vec![vec![-0.5, 1.0], vec![1.5, 0.0]]).is_err());
        assert!(WeightFamily::new(vec![vec![1.0], vec![0.0, 1.0]]).is_err());
        assert!(WeightFamily::new(vec![]).is_err());
    }

    #[test]
    fn simplex_points_count_and_order() {
        let p = simplex_points(3, 2);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![0.0, 0.0, 1.0]);
        assert_eq!(p[5], vec![1.0, 0.0, 0.0]);
        assert_eq!(simplex_points(4, 20).len(), 1771);
        assert_eq!(binomial(23, 3), Some(1771));
    }

    #[test]
    fn grid_coarsens_to_budget() {
        assert_eq!(grid_resolution(Some(0.05), 4, 2, DEFAULT_GRID_BUDGET), Some((20, 1771 * 1771)));
        let (m, total) = grid_resolution(Some(0.05), 4, 3, DEFAULT_GRID_BUDGET).unwrap();
        assert_eq!(m, 7);
        assert!(total <= DEFAULT_GRID_BUDGET);
        assert_eq!(grid_resolution(None, 2, 2, 100), None);
        assert_eq!(grid_resolution(Some(0.5), 2, 30, 100), None);
    }

    #[test]
    fn box_identity() {
        let r =
            max_inv_norm_box(&Matrix::identity(2), &Matrix::identity(2), Norm::Inf, &MaxOptions::default()).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.status, MaxStatus::VertexExact);
    }

    #[test]
    fn box_first_and_sixth_pairs() {
        let a0 = m2([[1.0, 1.0], [-1.0, 1.0]]);
        let r = max_inv_norm_box(&a0, &m2([[1.0, 0.0], [-2.0, 1.0]]), Norm::Inf, &MaxOptions::default()).unwrap();
        assert_abs_diff_eq!(r.value, 3.0, epsilon = 1e-12);
        assert!(r.evaluations > 4 + 101 * 101);
        assert_eq!(r.grid_step, Some(0.01));
        // (1-D)B1 + D B2 = [[1+d1, 1], [-1-d2, 1]]: inverse row sums 2/(2+d1+d2) and 1.
        let r = max_inv_norm_box(&a0, &m2([[2.0, 1.0], [-2.0, 1.0]]), Norm::Inf, &MaxOptions::default()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn simplex_reference_values() {
        let opts = MaxOptions::default();
        let r =
            max_inv_norm_simplex(&BlockMatrix::new(vec![Matrix::identity(3); 3]).unwrap(), Norm::Inf, &opts).unwrap();
        assert_eq!(r.value, 1.0);
        for (a, expect) in [(builtin::example_4_1(), 1.0), (builtin::example_4_2(), 3.0), (builtin::example_4_3(), 4.0)]
        {
            let r = max_inv_norm_simplex(&a, Norm::Inf, &opts).unwrap();
            assert_abs_diff_eq!(r.value, expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn singular_family_is_infinite() {
        let s = m2([[1.0, 1.0], [1.0, 1.0]]);
        let r = max_inv_norm_box(&s, &s, Norm::Inf, &MaxOptions::default()).unwrap();
        assert!(r.value.is_infinite());
        assert_eq!(r.status, MaxStatus::SingularEncountered);
        // vertices nonsingular but of opposite sign: I and -I
        let r =
            max_inv_norm_box(&Matrix::identity(2), &Matrix::identity(2).scale(-1.0), Norm::Inf, &MaxOptions::default())
                .unwrap();
        assert_eq!(r.status, MaxStatus::SingularEncountered);
    }

    fn random_block(rng: &mut impl rand::Rng, blocks: usize, n: usize) -> BlockMatrix {
        let mats = (0..blocks)
            .map(|_| {
                let mut m = Matrix::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = rng.random_range(-2.0..2.0);
                    }
                    m[(i, i)] += 2.0 * n as f64;
                }
                m
            })
            .collect();
        BlockMatrix::new(mats).unwrap()
    }

    #[test]
    fn monotone_refinement_and_vertex_attainment() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let opts = MaxOptions::default();
        for trial in 0..40 {
            let (blocks, n) = (2 + trial % 2, 2 + trial % 3);
            let a = random_block(&mut rng, blocks, n);
            let r = max_inv_norm_simplex(&a, Norm::Inf, &opts).unwrap();
            let at_zero = a.block(0).inverse().unwrap().norm(Norm::Inf);
            assert!(r.value >= r.vertex_value && r.vertex_value >= at_zero - 1e-12);
            // dense random sampling never exceeds the vertex maximum
            for _ in 0..200 {
                let mut d = vec![vec![0.0; n]; blocks];
                for i in 0..n {
                    let raw: Vec<f64> = (0..blocks).map(|_| rng.random_range(0.0..1.0)).collect();
                    let total: f64 = raw.iter().sum();
                    let mut acc = 0.0;
                    for j in 0..blocks - 1 {
                        d[j][i] = raw[j] / total;
                        acc += d[j][i];
                    }
                    d[blocks - 1][i] = 1.0 - acc;
                }
                let w = WeightFamily::new(d).unwrap();
                let v = inverse_norm_at(&a, &w, Norm::Inf).unwrap();
                assert!(v <= r.vertex_value * (1.0 + 1e-9), "trial {trial}: {v} > {}", r.vertex_value);
            }
            assert_eq!(r.status, MaxStatus::VertexExact, "trial {trial}");
        }
    }

    #[test]
    fn grid_halving_never_decreases() {
        let a = builtin::example_2_1();
        let pair = |step: f64| {
            max_inv_norm_box(a.block(1), a.block(2), Norm::One, &MaxOptions::default().with_grid_step(step))
                .unwrap()
                .value
        };
        let (coarse, fine) = (pair(0.1), pair(0.05));
        assert!(fine >= coarse - 1e-9);
    }

    #[test]
    fn norm_simplex_closed_forms() {
        let r = max_norm_simplex(&BlockMatrix::new(vec![Matrix::identity(2); 2]).unwrap(), Norm::Inf);
        assert_eq!(r.value, 1.0);
        assert_eq!(max_norm_simplex(&builtin::example_2_1(), Norm::Inf).value, 3.0);
        assert_eq!(max_norm_simplex(&builtin::example_4_3(), Norm::Inf).value, 5.0);
        // one-norm by explicit vertex enumeration
        for a in [builtin::example_2_1(), builtin::example_4_1(), builtin::example_4_3()] {
            let total = a.num_blocks().pow(a.n() as u32) as u64;
            let brute = (0..total)
                .map(|idx| {
                    let sel = RowSelection::from_index(idx, a.num_blocks(), a.n());
                    crate::wcheck::representative(&a, &sel).unwrap().norm(Norm::One)
                })
                .fold(0.0, f64::max);
            let r = max_norm_simplex(&a, Norm::One);
            assert_eq!(r.value, brute);
            assert_eq!(r.argmax.combine(&a).unwrap().norm(Norm::One), brute);
        }
    }
}
