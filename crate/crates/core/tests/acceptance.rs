//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion (with its sub-checks underneath) and exits non-zero if any
//! criterion failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use evlcp::bounds::{
    bound_convex, bound_hmatrix, bound_lower, bound_rearrangement, bound_sdd, distinct_pair_count,
    naive_rearrangement_cost, pair_enumeration_count, rearrangement_breakdown, rearrangement_cardinality,
    verify_bound_at, PairSelection, VerifyOptions,
};
use evlcp::generate::{sdd_block, sdd_instance};
use evlcp::matrix::LuWorkspace;
use evlcp::maximize::{max_inv_norm_box, MaxOptions};
use evlcp::model::min_decompose;
use evlcp::solver::{solve_enumerate, solve_newton, SolveOptions};
use evlcp::wcheck::{
    has_row_w_property, representative, sdd_sufficient, spectral_sufficient, RowSelection, WOptions,
    DEFAULT_SINGULAR_TOL,
};
use evlcp::{builtin, BlockMatrix, Matrix, Norm, WeightFamily};

/// Collected sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    lines: Vec<(bool, String)>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.lines.push((ok, what.into().trim_end().to_string()));
    }

    fn close(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, format!("{what}: got {got:.10}, want {want} (tol {tol:e})"));
    }

    fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.0)
    }
}

fn tag(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn elapsed(c: &mut Checks, start: Instant, limit: Duration) {
    let t = start.elapsed();
    c.check(t < limit, format!("runtime {:.2}s < {}s", t.as_secs_f64(), limit.as_secs()));
}

// per-row block pairs, in the order used for the nine box families below
const P01: (usize, usize) = (0, 1);
const P02: (usize, usize) = (0, 2);
const P12: (usize, usize) = (1, 2);

fn criterion_1() -> Checks {
    let mut c = Checks::default();
    let start = Instant::now();
    let a = builtin::example_2_1();
    let opts = MaxOptions::default().with_grid_step(0.01);
    let listed = [
        ([P01, P01], 3.0),
        ([P02, P02], 2.0),
        ([P12, P12], 3.0),
        ([P01, P02], 2.0),
        ([P01, P12], 3.0),
        ([P02, P01], 1.5),
        ([P02, P12], 2.0),
        ([P12, P01], 3.0),
        ([P12, P02], 2.0),
    ];
    let mut alpha = 0.0f64;
    for (idx, (pairs, want)) in listed.iter().enumerate() {
        let (b1, b2) = PairSelection::new(pairs.to_vec()).unwrap().build(&a).unwrap();
        let r = max_inv_norm_box(&b1, &b2, Norm::Inf, &opts).unwrap();
        alpha = alpha.max(r.value);
        c.close(&format!("mu_{} for rows {:?}", idx + 1, pairs), r.value, *want, 1e-6);
    }
    c.close("alpha_inf", alpha, 3.0, 1e-6);
    let breakdown = rearrangement_breakdown(&a, Norm::Inf, &opts).unwrap();
    c.check(breakdown.len() == 9, format!("pairs processed = {} (want 9)", breakdown.len()));
    let report = bound_rearrangement(&a, Norm::Inf, &opts).unwrap();
    c.close("bound_rearrangement", report.value, 3.0, 1e-6);
    c.check(report.evaluations == 9, format!("reported evaluations = {}", report.evaluations));
    let count = pair_enumeration_count(2, 2).unwrap();
    c.check(count == 9, format!("pair_enumeration_count(2,2) = {count}"));
    let naive = naive_rearrangement_cost(2, 2).unwrap();
    c.check(naive == 108, format!("naive cost = {naive} (want 108)"));
    elapsed(&mut c, start, Duration::from_secs(5));
    c
}

fn criterion_2() -> Checks {
    let mut c = Checks::default();
    let a = builtin::example_4_1();
    let opts = MaxOptions::default();
    let breakdown = rearrangement_breakdown(&a, Norm::Inf, &opts).unwrap();
    c.check(breakdown.len() == 3, format!("pairs processed = {} (want 3)", breakdown.len()));
    for (i, v) in breakdown.iter().enumerate() {
        c.close(&format!("mu_{} for rows {:?}", i + 1, v.pair.pairs), v.value, 1.0, 1e-6);
    }
    c.close("alpha_inf", bound_rearrangement(&a, Norm::Inf, &opts).unwrap().value, 1.0, 1e-6);
    c.close("bound_convex", bound_convex(&a, Norm::Inf, &opts).unwrap().value, 1.0, 1e-6);
    c
}

#[allow(clippy::approx_constant)]
fn criterion_3() -> Checks {
    let mut c = Checks::default();
    let a = builtin::example_4_2();
    let opts = MaxOptions::default();
    c.close("bound_convex", bound_convex(&a, Norm::Inf, &opts).unwrap().value, 3.0, 1e-6);
    c.close("bound_rearrangement", bound_rearrangement(&a, Norm::Inf, &opts).unwrap().value, 3.0, 1e-6);
    let s = spectral_sufficient(&a).unwrap();
    c.close("spectral rho", s.rho, 1.4142, 1e-3);
    c.check(!s.holds, format!("spectral condition holds = {}", s.holds));
    c.check(!sdd_sufficient(&a), "diagonal dominance condition fails");
    let w = has_row_w_property(&a, &WOptions::default()).unwrap();
    c.check(w.verdict, format!("row W-property verdict = {}", w.verdict));
    c
}

fn criterion_4() -> Checks {
    let mut c = Checks::default();
    let start = Instant::now();
    let a = builtin::example_4_3();
    let opts = MaxOptions::default();
    c.close("bound_convex", bound_convex(&a, Norm::Inf, &opts).unwrap().value, 4.0, 1e-6);
    let count = pair_enumeration_count(3, 2).unwrap();
    c.check(count == 36, format!("pair_enumeration_count(3,2) = {count}"));
    let distinct = distinct_pair_count(&a).unwrap();
    c.check(distinct == 36, format!("distinct pair selections = {distinct}"));
    let report = bound_rearrangement(&a, Norm::Inf, &opts).unwrap();
    c.check(report.evaluations == 36, format!("rearrangement evaluations = {}", report.evaluations));
    let s = spectral_sufficient(&a).unwrap();
    c.close("spectral rho", s.rho, 2.3028, 1e-3);
    let w = has_row_w_property(&a, &WOptions::default()).unwrap();
    c.check(w.verdict, format!("row W-property verdict = {}", w.verdict));
    elapsed(&mut c, start, Duration::from_secs(30));
    c
}

fn criterion_5() -> Checks {
    let mut c = Checks::default();
    for (what, got, want) in [
        ("rearrangement_cardinality(2,2)", rearrangement_cardinality(2, 2).unwrap(), 36),
        ("rearrangement_cardinality(1,1)", rearrangement_cardinality(1, 1).unwrap(), 2),
        ("pair_enumeration_count(2,2)", pair_enumeration_count(2, 2).unwrap(), 9),
        ("pair_enumeration_count(3,2)", pair_enumeration_count(3, 2).unwrap(), 36),
    ] {
        c.check(got == want, format!("{what} = {got} (want {want})"));
    }
    c
}

/// Outcome of the property checks on one random instance.
#[derive(Default)]
struct PropertyOutcome {
    solvers_agree: bool,
    verify_ok: bool,
    verify_detail: String,
    lower_ok: bool,
    dominance_ok: bool,
    dominance_detail: String,
    rearrangement_equiv: Option<bool>,
    conjecture_gap: f64,
}

fn property_instance(t: usize) -> PropertyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + t as u64);
    let n = 1 + t % 5;
    let k = 1 + (t / 5) % 3;
    let inst = sdd_instance(&mut rng, n, k);
    let a = inst.matrix();
    let mut out = PropertyOutcome::default();

    // (a)
    let sopts = SolveOptions::default();
    let exact = solve_enumerate(&inst, &sopts).expect("enumeration");
    out.solvers_agree = match solve_newton(&inst, &vec![0.0; n], &sopts) {
        Ok(nw) => exact.x.iter().zip(&nw.x).all(|(p, q)| (p - q).abs() <= 1e-8),
        Err(_) => false,
    };
    let x_star = exact.x;

    // (b), (c)
    let max_opts = MaxOptions { grid_budget: 2_000, ..MaxOptions::default() };
    let vopts = VerifyOptions { samples: 1000, seed: t as u64, radius: None };
    let convex = bound_convex(a, Norm::Inf, &max_opts).unwrap();
    let rearr = bound_rearrangement(a, Norm::Inf, &max_opts).unwrap();
    let mut reports = vec![convex.clone(), rearr.clone()];
    let spectral_ok = spectral_sufficient(a).map(|s| s.holds).unwrap_or(false);
    let hm = spectral_ok.then(|| bound_hmatrix(a, Norm::Inf).unwrap());
    let sdd = sdd_sufficient(a).then(|| bound_sdd(a).unwrap());
    reports.extend(hm.iter().cloned());
    reports.extend(sdd.iter().cloned());
    out.verify_ok = true;
    for r in &reports {
        let v = verify_bound_at(&inst, &x_star, r, &vopts).unwrap();
        if v.upper_violations > 0 {
            out.verify_ok = false;
            out.verify_detail = format!("{} bound {} < observed ratio {}", r.method, r.value, v.max_ratio);
        }
    }
    let lower = bound_lower(a, Norm::Inf).unwrap();
    out.lower_ok = verify_bound_at(&inst, &x_star, &lower, &vopts).unwrap().passed;

    // (d)
    out.dominance_ok = true;
    for (name, other) in [("hmatrix", &hm), ("sdd", &sdd)] {
        if let Some(o) = other {
            if convex.value > o.value + 1e-6 {
                out.dominance_ok = false;
                out.dominance_detail = format!("convex {} > {name} {}", convex.value, o.value);
            }
        }
    }

    // (e)
    if k == 1 {
        let (b0, b1) = (a.block(0), a.block(1));
        let base = max_inv_norm_box(b0, b1, Norm::Inf, &max_opts).unwrap().value;
        let mut ok = true;
        for mask in 0..(1u32 << n) {
            let (mut p, mut q) = (b0.clone(), b1.clone());
            for i in (0..n).filter(|i| mask & (1 << i) != 0) {
                p.row_mut(i).copy_from_slice(b1.row(i));
                q.row_mut(i).copy_from_slice(b0.row(i));
            }
            let v = max_inv_norm_box(&p, &q, Norm::Inf, &max_opts).unwrap().value;
            ok &= (v - base).abs() <= 1e-9;
        }
        out.rearrangement_equiv = Some(ok);
    }

    // (f)
    out.conjecture_gap = (convex.value - rearr.value).abs();
    out
}

fn criterion_6() -> Checks {
    let mut c = Checks::default();
    let outcomes: Vec<PropertyOutcome> = (0..200).into_par_iter().map(property_instance).collect();
    let count = |f: &dyn Fn(&PropertyOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    let first_detail = |f: &dyn Fn(&PropertyOutcome) -> Option<String>| outcomes.iter().find_map(f).unwrap_or_default();

    let agree = count(&|o| o.solvers_agree);
    c.check(agree == 200, format!("(a) enumeration and Newton agree on {agree}/200"));
    let verified = count(&|o| o.verify_ok);
    c.check(
        verified == 200,
        format!(
            "(b) upper bounds verified on {verified}/200 (1000 samples each) {}",
            first_detail(&|o| (!o.verify_ok).then(|| o.verify_detail.clone()))
        ),
    );
    let lower = count(&|o| o.lower_ok);
    c.check(lower == 200, format!("(c) lower bound holds on {lower}/200"));
    let dom = count(&|o| o.dominance_ok);
    c.check(
        dom == 200,
        format!(
            "(d) dominance chain holds on {dom}/200 {}",
            first_detail(&|o| (!o.dominance_ok).then(|| o.dominance_detail.clone()))
        ),
    );
    let k1: Vec<bool> = outcomes.iter().filter_map(|o| o.rearrangement_equiv).collect();
    let k1_ok = k1.iter().filter(|&&b| b).count();
    c.check(
        !k1.is_empty() && k1_ok == k1.len(),
        format!("(e) two-block rearrangement equivalence on {k1_ok}/{} instances", k1.len()),
    );
    let worst = outcomes.iter().map(|o| o.conjecture_gap).fold(0.0, f64::max);
    let within = count(&|o| o.conjecture_gap <= 1e-6);
    // logged only: the equality of the two bounds is an open conjecture
    println!(
        "    info (f) |convex - rearrangement| <= 1e-6 on {within}/200, largest gap {worst:.3e}{}",
        if within < 200 { " [flagged]" } else { "" }
    );
    c
}

fn criterion_7() -> Checks {
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut bad = 0;
    for _ in 0..10_000 {
        let m = rng.random_range(1..=8);
        let a: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        let lam = min_decompose(&a, &b).unwrap();
        let scale = a.iter().chain(&b).fold(1.0f64, |s, v| s.max(v.abs()));
        let target = a.iter().cloned().fold(f64::INFINITY, f64::min) - b.iter().cloned().fold(f64::INFINITY, f64::min);
        let combo: f64 = lam.iter().zip(a.iter().zip(&b)).map(|(l, (x, y))| l * (x - y)).sum();
        let ok = lam.iter().all(|&l| (0.0..=1.0).contains(&l))
            && (lam.iter().sum::<f64>() - 1.0).abs() <= 1e-12
            && (combo - target).abs() <= 1e-12 * scale;
        bad += usize::from(!ok);
    }
    c.check(bad == 0, format!("min_decompose postconditions: {bad} failures in 10000 pairs"));

    let mut bad = 0;
    for _ in 0..10_000 {
        let m = rng.random_range(1..=8);
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let t: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let a: Vec<f64> = (0..m).map(|_| rng.random_range(1e-3..10.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        let lhs = t.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / t.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>();
        let rhs = a.iter().zip(&b).map(|(x, y)| y.abs() / x).fold(0.0f64, f64::max);
        bad += usize::from(lhs > rhs * (1.0 + 1e-12));
    }
    c.check(bad == 0, format!("weighted ratio inequality: {bad} failures in 10000 samples"));
    c
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = rng.random_range(-1.0..1.0);
        }
        m[(i, i)] += rng.random_range(0.0..1.5);
    }
    m
}

fn random_block(rng: &mut ChaCha8Rng, n: usize, blocks: usize, dominant: bool) -> BlockMatrix {
    let mats = (0..blocks).map(|_| if dominant { sdd_block(rng, n) } else { random_matrix(rng, n) }).collect();
    BlockMatrix::new(mats).unwrap()
}

/// Sign probing on sampled weight families: half of the rows are drawn at a
/// vertex of their simplex, half uniformly. True when every sampled
/// determinant is clearly nonzero and all share one sign.
fn probe_signs(a: &BlockMatrix, rng: &mut ChaCha8Rng, samples: usize) -> bool {
    let (n, blocks) = (a.n(), a.num_blocks());
    let mut ws = LuWorkspace::new(n);
    let mut seen_pos = false;
    let mut seen_neg = false;
    for _ in 0..samples {
        let mut d = vec![vec![0.0; n]; blocks];
        for i in 0..n {
            if rng.random_bool(0.5) {
                d[rng.random_range(0..blocks)][i] = 1.0;
            } else {
                let raw: Vec<f64> = (0..blocks).map(|_| -rng.random_range(1e-12..1.0f64).ln()).collect();
                let total: f64 = raw.iter().sum();
                let mut acc = 0.0;
                for j in 0..blocks - 1 {
                    d[j][i] = raw[j] / total;
                    acc += d[j][i];
                }
                d[blocks - 1][i] = 1.0 - acc;
            }
        }
        let m = WeightFamily::new(d).unwrap().combine(a).unwrap();
        let scale: f64 = m.abs_row_sums().iter().product();
        let det = ws.determinant(m.as_slice());
        if det.abs() <= DEFAULT_SINGULAR_TOL * scale {
            return false;
        }
        seen_pos |= det > 0.0;
        seen_neg |= det < 0.0;
    }
    !(seen_pos && seen_neg)
}

fn principal_minors_positive(m: &Matrix) -> bool {
    let n = m.dim();
    (1u32..(1 << n)).all(|mask| {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let rows: Vec<Vec<f64>> = idx.iter().map(|&r| idx.iter().map(|&c| m[(r, c)]).collect()).collect();
        Matrix::from_rows(&rows).unwrap().determinant() > 0.0
    })
}

fn criterion_8() -> Checks {
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut agree, mut trues) = (0, 0);
    for t in 0..100 {
        let n = 1 + t % 3;
        let blocks = 2 + (t / 3) % 2;
        let a = random_block(&mut rng, n, blocks, t % 4 == 0);
        let verdict = has_row_w_property(&a, &WOptions::default()).unwrap().verdict;
        let probe = probe_signs(&a, &mut rng, 10_000);
        agree += usize::from(verdict == probe);
        trues += usize::from(verdict);
    }
    c.check(
        agree == 100,
        format!("vertex verdict agrees with sampled signs on {agree}/100 ({trues} with the property)"),
    );

    let (mut agree, mut trues) = (0, 0);
    for t in 0..100 {
        let n = 1 + t % 3;
        let a1 = random_matrix(&mut rng, n);
        let a = BlockMatrix::new(vec![Matrix::identity(n), a1.clone()]).unwrap();
        let verdict = has_row_w_property(&a, &WOptions::default()).unwrap().verdict;
        let p = principal_minors_positive(&a1);
        agree += usize::from(verdict == p);
        trues += usize::from(p);
    }
    c.check(
        agree == 100,
        format!("with A_0 = I, verdict agrees with principal minors on {agree}/100 ({trues} P-matrices)"),
    );

    // every representative of a family with the property is nonsingular
    let a = builtin::example_4_3();
    let all_nonsingular = (0..4u64.pow(2))
        .all(|idx| representative(&a, &RowSelection::from_index(idx, 4, 2)).unwrap().inverse().is_some());
    c.check(all_nonsingular, "all 16 representatives of the four-block example are nonsingular");
    c
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Checks); 8] = [
        ("1 three-block pairwise maxima and counts", criterion_1),
        ("2 shared-row example", criterion_2),
        ("3 three-block convex bound and sufficient conditions", criterion_3),
        ("4 four-block convex bound, pair count, spectral radius", criterion_4),
        ("5 cardinality formulas", criterion_5),
        ("6 randomized property suite", criterion_6),
        ("7 decomposition and ratio inequality", criterion_7),
        ("8 W-property decider cross-validation", criterion_8),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let checks = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(c) => c,
            Err(_) => {
                let mut c = Checks::default();
                c.check(false, "panicked");
                c
            }
        };
        let ok = checks.passed();
        failed += usize::from(!ok);
        println!("{} criterion {name} ({:.2}s)", tag(ok), start.elapsed().as_secs_f64());
        for (ok, line) in &checks.lines {
            println!("    {} {line}", tag(*ok));
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
