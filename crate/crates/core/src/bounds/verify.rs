//! Empirical check of a bound against random points around the solution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{bound_lower, BoundReport, Rigor};
use crate::error::Result;
use crate::model::EvlcpInstance;
use crate::solver::{solve, SolveOptions};

/// Relative slack on both inequalities.
pub const VERIFY_RTOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    /// Half-width of the sampling box; `None` uses `10 (1 + ‖x*‖_inf)`.
    pub radius: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 1000, seed: 0, radius: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub samples: usize,
    pub seed: u64,
    pub radius: f64,
    /// Largest and smallest `‖x - x*‖ / ‖r(x)‖` over samples with `r(x) != 0`.
    #[serde(serialize_with = "crate::json::ser_f64")]
    pub max_ratio: f64,
    #[serde(serialize_with = "crate::json::ser_f64")]
    pub min_ratio: f64,
    /// Samples violating the upper bound (always zero for a lower-bound report).
    pub upper_violations: usize,
    /// Samples violating `‖x - x*‖ >= c ‖r(x)‖` for the lower multiplier `c`.
    pub lower_violations: usize,
    #[serde(serialize_with = "crate::json::ser_f64")]
    pub lower_multiplier: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Solves the instance, then samples.
pub fn verify_bound(inst: &EvlcpInstance, report: &BoundReport, opts: &VerifyOptions) -> Result<Verification> {
    let x_star = solve(inst, &SolveOptions::default())?.x;
    verify_bound_at(inst, &x_star, report, opts)
}

/// Samples `x` uniformly in a box around a known solution `x_star` and
/// checks the bound in `report` together with the lower bound.
pub fn verify_bound_at(
    inst: &EvlcpInstance,
    x_star: &[f64],
    report: &BoundReport,
    opts: &VerifyOptions,
) -> Result<Verification> {
    let norm = report.norm;
    let lower = if report.method.is_lower() { report.value } else { bound_lower(inst.matrix(), norm)?.value };
    let radius = opts.radius.unwrap_or_else(|| 10.0 * (1.0 + norm_inf(x_star)));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let points: Vec<Vec<f64>> =
        (0..opts.samples).map(|_| x_star.iter().map(|c| c + rng.random_range(-radius..=radius)).collect()).collect();

    let upper = (!report.method.is_lower()).then_some(report.value);
    let checks: Vec<(f64, bool, bool)> = points
        .par_iter()
        .map(|x| -> Result<(f64, bool, bool)> {
            let dist = norm.vector(&x.iter().zip(x_star).map(|(a, b)| a - b).collect::<Vec<_>>());
            let res = norm.vector(&inst.residual(x)?);
            let ratio = if res > 0.0 {
                dist / res
            } else if dist > 0.0 {
                f64::INFINITY
            } else {
                f64::NAN
            };
            let upper_bad = upper.is_some_and(|c| dist > c * res * (1.0 + VERIFY_RTOL) + f64::MIN_POSITIVE);
            let lower_bad = dist < lower * res * (1.0 - VERIFY_RTOL);
            Ok((ratio, upper_bad, lower_bad))
        })
        .collect::<Result<_>>()?;

    let ratios = checks.iter().map(|c| c.0).filter(|r| !r.is_nan());
    let max_ratio = ratios.clone().fold(0.0f64, f64::max);
    let min_ratio = ratios.fold(f64::INFINITY, f64::min);
    let upper_violations = checks.iter().filter(|c| c.1).count();
    let lower_violations = checks.iter().filter(|c| c.2).count();
    let passed = upper_violations == 0 && lower_violations == 0;
    let message = (!passed).then(|| {
        if upper_violations > 0 && report.rigor == Rigor::Estimate {
            "estimate too low — refine grid".to_string()
        } else {
            format!("{upper_violations} upper and {lower_violations} lower violations")
        }
    });
    Ok(Verification {
        samples: opts.samples,
        seed: opts.seed,
        radius,
        max_ratio,
        min_ratio,
        upper_violations,
        lower_violations,
        lower_multiplier: lower,
        passed,
        message,
    })
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{bound_convex, bound_rearrangement, Method};
    use crate::builtin;
    use crate::matrix::Norm;
    use crate::maximize::MaxOptions;

    #[test]
    fn convex_bound_holds_on_example_4_2() {
        let inst = builtin::instance("example-4.2").unwrap();
        let report = bound_convex(inst.matrix(), Norm::Inf, &MaxOptions::default()).unwrap();
        let v = verify_bound(&inst, &report, &VerifyOptions { samples: 1000, seed: 42, radius: None }).unwrap();
        assert!(v.passed, "{v:?}");
        assert!(v.max_ratio <= 3.0 * (1.0 + 1e-9));
        assert!(v.min_ratio >= 1.0 / 3.0 * (1.0 - 1e-9));
    }

    #[test]
    fn rearrangement_bound_holds_on_example_4_1() {
        let inst = builtin::instance("example-4.1").unwrap();
        let report = bound_rearrangement(inst.matrix(), Norm::Inf, &MaxOptions::default()).unwrap();
        let v = verify_bound(&inst, &report, &VerifyOptions { samples: 1000, seed: 1, radius: None }).unwrap();
        assert!(v.passed && v.max_ratio <= 1.0 + 1e-9, "{v:?}");
    }

    #[test]
    fn lower_mode_checks_only_the_lower_side() {
        let inst = builtin::instance("example-2.1").unwrap();
        let report = bound_lower(inst.matrix(), Norm::Inf).unwrap();
        assert_eq!(report.method, Method::Lower);
        let v = verify_bound(&inst, &report, &VerifyOptions::default()).unwrap();
        assert!(v.passed);
        assert_eq!(v.upper_violations, 0);
    }

    #[test]
    fn too_small_estimate_is_flagged() {
        let inst = builtin::instance("example-4.2").unwrap();
        let mut report = bound_convex(inst.matrix(), Norm::Inf, &MaxOptions::default()).unwrap();
        report.value = 0.5;
        let v = verify_bound(&inst, &report, &VerifyOptions::default()).unwrap();
        assert!(!v.passed);
        assert_eq!(v.message.as_deref(), Some("estimate too low — refine grid"));
    }

    #[test]
    fn solution_itself_passes() {
        let inst = builtin::instance("example-4.3").unwrap();
        let report = bound_lower(inst.matrix(), Norm::Inf).unwrap();
        let v = verify_bound_at(&inst, &[0.0, 0.0], &report, &VerifyOptions { samples: 3, seed: 0, radius: Some(0.0) })
            .unwrap();
        assert!(v.passed);
    }

    #[test]
    fn sampling_is_deterministic() {
        let inst = builtin::instance("example-2.1").unwrap();
        let report = bound_lower(inst.matrix(), Norm::One).unwrap();
        let opts = VerifyOptions { samples: 200, seed: 9, radius: None };
        assert_eq!(verify_bound(&inst, &report, &opts).unwrap(), verify_bound(&inst, &report, &opts).unwrap());
    }
}
