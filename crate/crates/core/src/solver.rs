//! Solvers for `min_j (A_j x + q_j) = 0`.
//!
//! [`solve_enumerate`] is exact at desk scale: the solution lies on some
//! representative system `A_s x = -q_s`, so visiting every row selection
//! finds it. [`solve_newton`] is the semismooth Newton iteration on the
//! residual for larger instances.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{LuWorkspace, Norm};
use crate::model::EvlcpInstance;
use crate::wcheck::{check_budget, fill_representative, selection_count, RowSelection};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAXIT: usize = 100;
pub const DEFAULT_SOLVE_BUDGET: u64 = 1_000_000;
const JACOBIAN_SHIFT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Enumerate,
    Newton,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub method: SolveMethod,
    /// Active block per row at `x` (smallest index on ties).
    pub selection: RowSelection,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub maxit: usize,
    pub budget: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: DEFAULT_TOL, maxit: DEFAULT_MAXIT, budget: DEFAULT_SOLVE_BUDGET }
    }
}

/// Block index of the smallest piece in each row, lowest index on ties.
pub fn active_selection(inst: &EvlcpInstance, x: &[f64]) -> Result<RowSelection> {
    let pieces = inst.pieces(x)?;
    let choice = (0..inst.n())
        .map(|i| (0..pieces.len()).fold(0, |best, j| if pieces[j][i] < pieces[best][i] { j } else { best }))
        .collect();
    Ok(RowSelection::new(choice))
}

/// `‖r(x)‖_inf <= tol`.
pub fn check_solution(inst: &EvlcpInstance, x: &[f64], tol: f64) -> bool {
    inst.residual(x).is_ok_and(|r| Norm::Inf.vector(&r) <= tol)
}

struct Candidate {
    selection: RowSelection,
    x: Vec<f64>,
    residual: f64,
}

/// Solves the representative system for selection `idx`; returns the point
/// when it satisfies the complementarity conditions within `tol`.
fn try_selection(inst: &EvlcpInstance, idx: u64, tol: f64, ws: &mut LuWorkspace, buf: &mut [f64]) -> Option<Candidate> {
    let (n, blocks) = (inst.n(), inst.matrix().num_blocks());
    let sel = RowSelection::from_index(idx, blocks, n);
    fill_representative(inst.matrix(), &sel.choice, buf);
    if !ws.factor(buf) {
        return None;
    }
    let mut x: Vec<f64> = sel.choice.iter().enumerate().map(|(i, &j)| -inst.q()[j][i]).collect();
    ws.solve_in_place(&mut x);
    // normalizes -0.0
    x.iter_mut().for_each(|v| *v += 0.0);
    let pieces = inst.pieces(&x).ok()?;
    // selected pieces vanish by construction; the others must be >= -tol
    let mut residual = 0.0f64;
    for i in 0..n {
        let selected = pieces[sel.choice[i]][i];
        let min = (0..blocks).map(|j| pieces[j][i]).fold(f64::INFINITY, f64::min);
        if min < -tol || selected.abs() > tol {
            return None;
        }
        residual = residual.max(min.abs());
    }
    (residual <= tol).then_some(Candidate { selection: sel, x, residual })
}

fn outcome(inst: &EvlcpInstance, c: Candidate) -> Result<SolveOutcome> {
    let selection = active_selection(inst, &c.x)?;
    Ok(SolveOutcome { x: c.x, residual_norm: c.residual, method: SolveMethod::Enumerate, selection, iterations: 0 })
}

/// First accepted point over row selections in lexicographic order.
pub fn solve_enumerate(inst: &EvlcpInstance, opts: &SolveOptions) -> Result<SolveOutcome> {
    let (n, blocks) = (inst.n(), inst.matrix().num_blocks());
    let total = check_budget("solution enumeration", selection_count(blocks, n), opts.budget)?;
    let found = (0..total)
        .into_par_iter()
        .map_init(
            || (LuWorkspace::new(n), vec![0.0; n * n]),
            |(ws, buf), idx| try_selection(inst, idx, opts.tol, ws, buf),
        )
        .find_first(Option::is_some)
        .flatten();
    match found {
        Some(c) => outcome(inst, c),
        None => Err(Error::NoSolution("W-property likely fails".into())),
    }
}

/// Every accepted (selection, point) pair, in lexicographic order.
pub fn enumerate_candidates(inst: &EvlcpInstance, opts: &SolveOptions) -> Result<Vec<(RowSelection, Vec<f64>)>> {
    let (n, blocks) = (inst.n(), inst.matrix().num_blocks());
    let total = check_budget("solution enumeration", selection_count(blocks, n), opts.budget)?;
    Ok((0..total)
        .into_par_iter()
        .map_init(
            || (LuWorkspace::new(n), vec![0.0; n * n]),
            |(ws, buf), idx| try_selection(inst, idx, opts.tol, ws, buf),
        )
        .flatten()
        .map(|c| (c.selection, c.x))
        .collect())
}

/// Newton iteration `x <- x - G(x)^{-1} r(x)` with `G(x)` the representative
/// matrix of the active selection. A singular `G` is shifted by `1e-12 I`
/// once before giving up.
pub fn solve_newton(inst: &EvlcpInstance, x0: &[f64], opts: &SolveOptions) -> Result<SolveOutcome> {
    let n = inst.n();
    if x0.len() != n {
        return Err(Error::input(format!("starting point has length {}, expected {n}", x0.len())));
    }
    let mut x = x0.to_vec();
    let mut ws = LuWorkspace::new(n);
    let mut g = vec![0.0; n * n];
    let mut residual = f64::INFINITY;
    for it in 0..=opts.maxit {
        let r = inst.residual(&x)?;
        residual = Norm::Inf.vector(&r);
        let selection = active_selection(inst, &x)?;
        if residual <= opts.tol {
            return Ok(SolveOutcome {
                x,
                residual_norm: residual,
                method: SolveMethod::Newton,
                selection,
                iterations: it,
            });
        }
        if it == opts.maxit {
            break;
        }
        fill_representative(inst.matrix(), &selection.choice, &mut g);
        if !ws.factor(&g) {
            log::debug!("singular Newton matrix at iteration {it}, retrying with a diagonal shift");
            for i in 0..n {
                g[i * n + i] += JACOBIAN_SHIFT;
            }
            if !ws.factor(&g) {
                return Err(Error::SingularJacobian { iteration: it });
            }
        }
        let mut step = r;
        ws.solve_in_place(&mut step);
        x.iter_mut().zip(&step).for_each(|(xi, s)| *xi -= s);
    }
    Err(Error::NotConverged { iterations: opts.maxit, residual, last: x })
}

/// Enumeration when the selection count fits the budget, Newton from zero otherwise.
pub fn solve(inst: &EvlcpInstance, opts: &SolveOptions) -> Result<SolveOutcome> {
    match selection_count(inst.matrix().num_blocks(), inst.n()) {
        Some(c) if c <= opts.budget as u128 => solve_enumerate(inst, opts),
        _ => solve_newton(inst, &vec![0.0; inst.n()], opts),
    }
}
