//! Bounds of the form `‖A_0 + B‖_inf / alpha{A_0, B}` with
//! `alpha{A_0, B} = min_{‖x‖_inf = 1} max_i (A_0 x)_i (B x)_i`.
//!
//! `alpha` is estimated on the unit sphere of the infinity norm. The
//! objective is even in `x`, so only the `n` faces `x_c = +1` are swept:
//! a uniform grid over the free coordinates, then compass refinement from
//! the best point of each face.

use rayon::prelude::*;

use super::{BoundReport, Certificate, Method, Rigor};
use crate::error::{Error, Result};
use crate::matrix::{Matrix, Norm};
use crate::maximize::WeightFamily;
use crate::model::BlockMatrix;
use crate::wcheck::reduce_to_two_blocks;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaOptions {
    /// Grid step on each sphere face.
    pub sphere_step: f64,
    /// Cap on sphere grid points per alpha estimate; the step is coarsened to fit.
    pub sphere_budget: u64,
    pub refine_tol: f64,
    /// Barycentric grid step for the outer minimization over weights.
    pub outer_step: f64,
    /// Cap on outer grid points; coarsened to fit.
    pub outer_budget: u64,
    pub outer_tol: f64,
}

impl Default for AlphaOptions {
    fn default() -> Self {
        AlphaOptions {
            sphere_step: 0.01,
            sphere_budget: 100_000,
            refine_tol: 1e-10,
            outer_step: 0.1,
            outer_budget: 1_000,
            outer_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaEstimate {
    pub value: f64,
    /// Minimizer on the unit sphere.
    pub argmin: Vec<f64>,
    pub evaluations: u64,
}

fn phi(a0: &Matrix, b: &Matrix, x: &[f64]) -> f64 {
    (0..a0.dim())
        .map(|i| crate::matrix::dot(a0.row(i), x) * crate::matrix::dot(b.row(i), x))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Points per side so that `n (2m+1)^(n-1)` stays within budget.
fn sphere_resolution(n: usize, step: f64, budget: u64) -> usize {
    let mut m = (1.0 / step).round().max(1.0) as u64;
    let fits = |m: u64| {
        (2 * m + 1).checked_pow(n as u32 - 1).and_then(|p| p.checked_mul(n as u64)).is_some_and(|t| t <= budget)
    };
    while m > 1 && !fits(m) {
        m -= 1;
    }
    m as usize
}

/// Estimate of `min_{‖x‖_inf = 1} max_i (A_0 x)_i (B x)_i`.
pub fn alpha_pair(a0: &Matrix, b: &Matrix, opts: &AlphaOptions) -> Result<AlphaEstimate> {
    let n = a0.dim();
    if b.dim() != n {
        return Err(Error::input(format!("dimension mismatch: {n} vs {}", b.dim())));
    }
    let m = sphere_resolution(n, opts.sphere_step, opts.sphere_budget);
    let side = 2 * m + 1;
    let per_face = side.pow(n as u32 - 1) as u64;
    let coord = |t: usize| -1.0 + t as f64 / m as f64;

    let face_best = |c: usize| -> (f64, Vec<f64>, u64) {
        let mut x = vec![0.0; n];
        let mut best = (f64::INFINITY, vec![0.0; n]);
        for mut idx in 0..per_face {
            for (i, xi) in x.iter_mut().enumerate() {
                if i == c {
                    *xi = 1.0;
                } else {
                    *xi = coord((idx % side as u64) as usize);
                    idx /= side as u64;
                }
            }
            let v = phi(a0, b, &x);
            if v < best.0 {
                best = (v, x.clone());
            }
        }
        let (v, x, evals) = refine_face(a0, b, c, best.1, best.0, 1.0 / m as f64, opts.refine_tol);
        (v, x, per_face + evals)
    };
    let results: Vec<(f64, Vec<f64>, u64)> = if per_face * n as u64 >= 4096 {
        (0..n).into_par_iter().map(face_best).collect()
    } else {
        (0..n).map(face_best).collect()
    };
    let evaluations = results.iter().map(|r| r.2).sum();
    let (value, argmin, _) = results.into_iter().reduce(|a, b| if b.0 < a.0 { b } else { a }).expect("n >= 1");
    Ok(AlphaEstimate { value, argmin, evaluations })
}

fn refine_face(
    a0: &Matrix,
    b: &Matrix,
    face: usize,
    mut x: Vec<f64>,
    mut best: f64,
    h0: f64,
    tol: f64,
) -> (f64, Vec<f64>, u64) {
    let n = x.len();
    let mut evals = 0;
    let mut h = h0;
    while h >= tol {
        let mut improved = false;
        for i in (0..n).filter(|&i| i != face) {
            for dir in [-1.0, 1.0] {
                let old = x[i];
                x[i] = (old + dir * h).clamp(-1.0, 1.0);
                if x[i] == old {
                    continue;
                }
                let v = phi(a0, b, &x);
                evals += 1;
                if v < best {
                    best = v;
                    improved = true;
                } else {
                    x[i] = old;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (best, x, evals)
}

fn nonpositive_alpha(value: f64) -> Error {
    Error::Numerical(format!("alpha nonpositive ({value:.3e}): W-property dubious or resolution too coarse"))
}

/// Value of the ratio for one outer weight family.
fn ratio_at(a: &BlockMatrix, w: &WeightFamily, opts: &AlphaOptions) -> Result<(f64, u64)> {
    let pair = reduce_to_two_blocks(a, w)?;
    let (a0, b) = (pair.block(0), pair.block(1));
    let alpha = alpha_pair(a0, b, opts)?;
    if alpha.value <= 0.0 {
        return Err(nonpositive_alpha(alpha.value));
    }
    let num = a0.add(b).norm(Norm::Inf);
    Ok((num / alpha.value, alpha.evaluations))
}

/// Per-row barycentric points with `parts` parts and resolution `m`.
fn simplex_grid(parts: usize, m: usize) -> Vec<Vec<f64>> {
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
    rec(parts, m, m, &mut Vec::new(), &mut out);
    out
}

fn family(points: &[&Vec<f64>], parts: usize) -> WeightFamily {
    let d = (0..parts).map(|j| points.iter().map(|p| p[j]).collect()).collect();
    WeightFamily::new(d).expect("grid points lie on the simplex")
}

/// `min_D ‖A_0 + sum_{j>=1} D_j A_j‖_inf / alpha{A_0, sum_{j>=1} D_j A_j}`,
/// minimizing over weights `D_1 + ... + D_k = I`. The same weights enter
/// the numerator and `alpha`.
pub fn bound_alpha_xz(a: &BlockMatrix, opts: &AlphaOptions) -> Result<BoundReport> {
    let (n, k) = (a.n(), a.k());
    let mut objective_evaluations = 0u64;

    // outer grid over per-row simplices with k parts
    let mut m = (1.0 / opts.outer_step).round().max(1.0) as usize;
    let grid = loop {
        let g = simplex_grid(k, m);
        let fits = (g.len() as u64).checked_pow(n as u32).is_some_and(|t| t <= opts.outer_budget);
        if fits || m == 1 {
            break g;
        }
        m -= 1;
    };
    let total = (grid.len() as u64).saturating_pow(n as u32).min(opts.outer_budget.max(1));
    let decode = |mut idx: u64| -> WeightFamily {
        let mut rows: Vec<&Vec<f64>> = vec![&grid[0]; n];
        for i in (0..n).rev() {
            rows[i] = &grid[(idx % grid.len() as u64) as usize];
            idx /= grid.len() as u64;
        }
        family(&rows, k)
    };
    let evaluated: Vec<Result<(f64, u64)>> =
        (0..total).into_par_iter().map(|idx| ratio_at(a, &decode(idx), opts)).collect();
    let mut best = (f64::INFINITY, 0u64);
    for (idx, r) in evaluated.into_iter().enumerate() {
        let (v, e) = r?;
        objective_evaluations += e;
        if v < best.0 {
            best = (v, idx as u64);
        }
    }
    let mut outer_evaluations = total;
    let mut w = decode(best.1);
    let mut value = best.0;

    // compass refinement on the weights
    if k > 1 {
        let mut d: Vec<Vec<f64>> = w.weights().to_vec();
        let mut h = 1.0 / m as f64;
        while h >= opts.outer_tol {
            let mut improved = false;
            for i in 0..n {
                for from in 0..k {
                    for to in (0..k).filter(|&t| t != from) {
                        let amount = h.min(d[from][i]);
                        if amount <= 0.0 {
                            continue;
                        }
                        let (old_f, old_t) = (d[from][i], d[to][i]);
                        d[from][i] = if amount == old_f { 0.0 } else { old_f - amount };
                        d[to][i] = (old_t + amount).min(1.0);
                        let cand = WeightFamily::new(d.clone())?;
                        let (v, e) = ratio_at(a, &cand, opts)?;
                        objective_evaluations += e;
                        outer_evaluations += 1;
                        if v < value {
                            value = v;
                            w = cand;
                            improved = true;
                        } else {
                            d[from][i] = old_f;
                            d[to][i] = old_t;
                        }
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
    }

    Ok(BoundReport {
        method: Method::AlphaXz,
        value,
        norm: Norm::Inf,
        rigor: Rigor::Estimate,
        certificate: Some(Certificate::Weights { weights: w }),
        evaluations: outer_evaluations,
        objective_evaluations,
        status: None,
        notes: vec!["alpha is evaluated with the same weights D_j as the numerator".to_string()],
    })
}

/// `(1 + ‖A_1‖_inf) / alpha{I, A_1}` for a P-matrix `A_1`.
pub fn bound_mathias_pang(a1: &Matrix, opts: &AlphaOptions) -> Result<BoundReport> {
    let alpha = alpha_pair(&Matrix::identity(a1.dim()), a1, opts)?;
    if alpha.value <= 0.0 {
        return Err(nonpositive_alpha(alpha.value));
    }
    Ok(BoundReport {
        method: Method::MathiasPang,
        value: (1.0 + a1.norm(Norm::Inf)) / alpha.value,
        norm: Norm::Inf,
        rigor: Rigor::Estimate,
        certificate: None,
        evaluations: 1,
        objective_evaluations: alpha.evaluations,
        status: None,
        notes: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    /// Oracle for n = 2: dense scan of the parametrized faces (1, t) and
    /// (t, 1), then a fine rescan around the best parameter.
    fn alpha_scan_2d(a0: &Matrix, b: &Matrix) -> f64 {
        let face = |t: f64, first: bool| if first { phi(a0, b, &[1.0, t]) } else { phi(a0, b, &[t, 1.0]) };
        let mut best = f64::INFINITY;
        for first in [true, false] {
            let steps = 200_000;
            let coarse = (0..=steps)
                .map(|s| -1.0 + 2.0 * s as f64 / steps as f64)
                .min_by(|x, y| face(*x, first).total_cmp(&face(*y, first)))
                .unwrap();
            let width = 2.0 * 2.0 / steps as f64;
            for s in 0..=100_000 {
                let t = (coarse - width + 2.0 * width * s as f64 / 100_000.0).clamp(-1.0, 1.0);
                best = best.min(face(t, first));
            }
        }
        best
    }

    #[test]
    fn one_dimensional_sphere() {
        let one = m(&[&[1.0]]);
        let a = BlockMatrix::new(vec![one.clone(), one]).unwrap();
        let r = bound_alpha_xz(&a, &AlphaOptions::default()).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_pair() {
        let i2 = Matrix::identity(2);
        let alpha = alpha_pair(&i2, &i2, &AlphaOptions::default()).unwrap();
        assert_abs_diff_eq!(alpha.value, 1.0, epsilon = 1e-12);
        let r = bound_alpha_xz(&BlockMatrix::new(vec![i2.clone(), i2]).unwrap(), &AlphaOptions::default()).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-12);
        assert_eq!(r.rigor, Rigor::Estimate);
    }

    #[test]
    fn mathias_pang_matches_scan() {
        let opts = AlphaOptions::default();
        for a1 in [m(&[&[2.0, 1.0], &[0.0, 2.0]]), m(&[&[1.0, -1.0], &[1.0, 1.0]]), m(&[&[3.0, 2.0], &[1.0, 1.0]])] {
            let scan = alpha_scan_2d(&Matrix::identity(2), &a1);
            let r = bound_mathias_pang(&a1, &opts).unwrap();
            let expect = (1.0 + a1.norm(Norm::Inf)) / scan;
            assert!((r.value - expect).abs() <= 1e-7 * expect, "{} vs {expect}", r.value);
            // with A_0 = I the two-block ratio uses ‖I + A_1‖ <= 1 + ‖A_1‖
            let xz = bound_alpha_xz(&BlockMatrix::new(vec![Matrix::identity(2), a1]).unwrap(), &opts).unwrap();
            assert!(xz.value <= r.value + 1e-9);
        }
    }

    #[test]
    fn nonpositive_alpha_is_an_error() {
        // (1,-1)-direction makes x_i (A_1 x)_i negative in both rows
        let a1 = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let err = bound_mathias_pang(&a1, &AlphaOptions::default()).unwrap_err();
        assert!(err.to_string().contains("alpha nonpositive"), "{err}");
    }

    #[test]
    fn coarsened_sphere_grid_fits_budget() {
        let m = sphere_resolution(5, 0.01, 100_000);
        assert!(5 * (2 * m as u64 + 1).pow(4) <= 100_000);
        assert_eq!(sphere_resolution(2, 0.01, 100_000), 100);
    }

    #[test]
    fn three_block_family_runs() {
        let a = crate::builtin::example_4_2();
        let r = bound_alpha_xz(&a, &AlphaOptions::default()).unwrap();
        assert!(r.value.is_finite() && r.value > 0.0);
        let Some(Certificate::Weights { weights }) = &r.certificate else { panic!() };
        assert_eq!(weights.num_blocks(), 2);
        let (v, _) = ratio_at(&a, weights, &AlphaOptions::default()).unwrap();
        assert_abs_diff_eq!(v, r.value, epsilon = 1e-12);
    }
}
