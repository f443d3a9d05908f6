//! Report envelope shared by all subcommands, and the reference tables
//! behind `evlcp report`.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::bounds::{
    bound_convex, bound_lower, bound_rearrangement, distinct_pair_count, naive_rearrangement_cost,
    pair_enumeration_count, rearrangement_breakdown, PairSelection,
};
use crate::builtin;
use crate::error::Result;
use crate::matrix::Norm;
use crate::maximize::{max_inv_norm_box, MaxOptions};
use crate::wcheck::{has_row_w_property, sdd_sufficient, spectral_sufficient, WOptions};

#[derive(Clone, Debug, Serialize)]
pub struct InstanceInfo {
    pub source: String,
    pub sha256: String,
    pub n: usize,
    pub k: usize,
}

/// Everything a subcommand emits. Wall time is only filled in on request so
/// that reports stay byte-identical across runs by default.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub options: serde_json::Value,
    pub instance: InstanceInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub results: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Quantity {
    Real(#[serde(serialize_with = "crate::json::ser_f64")] f64),
    Count(u128),
    Flag(bool),
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Real(v) if v.fract() == 0.0 || !v.is_finite() => write!(f, "{v}"),
            Quantity::Real(v) => write!(f, "{v:.6}"),
            Quantity::Count(c) => write!(f, "{c}"),
            Quantity::Flag(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub quantity: String,
    pub computed: Quantity,
    pub expected: Quantity,
    #[serde(serialize_with = "crate::json::ser_f64")]
    pub tolerance: f64,
    pub matches: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<u64>,
}

struct Table {
    rows: Vec<TableRow>,
}

impl Table {
    fn push(
        &mut self,
        quantity: impl Into<String>,
        computed: Quantity,
        expected: Quantity,
        tolerance: f64,
        evaluations: Option<u64>,
    ) {
        let matches = match (computed, expected) {
            (Quantity::Real(a), Quantity::Real(b)) => (a - b).abs() <= tolerance,
            (a, b) => a == b,
        };
        self.rows.push(TableRow { quantity: quantity.into(), computed, expected, tolerance, matches, evaluations });
    }

    fn real(
        &mut self,
        quantity: impl Into<String>,
        computed: f64,
        expected: f64,
        tolerance: f64,
        evaluations: Option<u64>,
    ) {
        self.push(quantity, Quantity::Real(computed), Quantity::Real(expected), tolerance, evaluations);
    }
}

const VALUE_TOL: f64 = 1e-6;
const RHO_TOL: f64 = 1e-3;

/// Row pairs of the nine box families of example 2.1 in their customary
/// order, with the reference value of each maximum.
const EXAMPLE_2_1_FAMILIES: [([(usize, usize); 2], f64); 9] = [
    ([(0, 1), (0, 1)], 3.0),
    ([(0, 2), (0, 2)], 2.0),
    ([(1, 2), (1, 2)], 3.0),
    ([(0, 1), (0, 2)], 2.0),
    ([(0, 1), (1, 2)], 3.0),
    ([(0, 2), (0, 1)], 1.5),
    ([(0, 2), (1, 2)], 2.0),
    ([(1, 2), (0, 1)], 3.0),
    ([(1, 2), (0, 2)], 2.0),
];

fn pairs_label(pairs: &[(usize, usize)]) -> String {
    let parts: Vec<String> = pairs.iter().map(|(j, l)| format!("({j},{l})")).collect();
    parts.join(" ")
}

/// Recomputes the reference quantities of one built-in example.
// reference values are rounded to their tolerance
#[allow(clippy::approx_constant)]
pub fn reproduce(name: &str) -> Result<Vec<TableRow>> {
    let a = builtin::by_name(name)?;
    let opts = MaxOptions::default();
    let mut t = Table { rows: Vec::new() };
    match name {
        "example-2.1" => {
            let fine = MaxOptions::default().with_grid_step(0.01);
            for (i, (pairs, want)) in EXAMPLE_2_1_FAMILIES.iter().enumerate() {
                let (b1, b2) = PairSelection::new(pairs.to_vec())?.build(&a)?;
                let r = max_inv_norm_box(&b1, &b2, Norm::Inf, &fine)?;
                t.real(
                    format!("mu_{} rows {}", i + 1, pairs_label(pairs)),
                    r.value,
                    *want,
                    VALUE_TOL,
                    Some(r.evaluations),
                );
            }
            let r = bound_rearrangement(&a, Norm::Inf, &fine)?;
            t.real("alpha_inf", r.value, 3.0, VALUE_TOL, Some(r.objective_evaluations));
            t.push("pair families evaluated", Quantity::Count(r.evaluations as u128), Quantity::Count(9), 0.0, None);
            t.push(
                "pair enumeration count",
                Quantity::Count(pair_enumeration_count(2, 2)?),
                Quantity::Count(9),
                0.0,
                None,
            );
            t.push(
                "naive rearrangement cost",
                Quantity::Count(naive_rearrangement_cost(2, 2)?),
                Quantity::Count(108),
                0.0,
                None,
            );
            let low = bound_lower(&a, Norm::Inf)?;
            t.real("lower multiplier", low.value, 1.0 / 3.0, VALUE_TOL, None);
        }
        "example-4.1" => {
            let breakdown = rearrangement_breakdown(&a, Norm::Inf, &opts)?;
            for (i, p) in breakdown.iter().enumerate() {
                t.real(
                    format!("mu_{} rows {}", i + 1, pairs_label(&p.pair.pairs)),
                    p.value,
                    1.0,
                    VALUE_TOL,
                    Some(p.evaluations),
                );
            }
            t.push("pair families evaluated", Quantity::Count(breakdown.len() as u128), Quantity::Count(3), 0.0, None);
            let r = bound_rearrangement(&a, Norm::Inf, &opts)?;
            t.real("alpha_inf", r.value, 1.0, VALUE_TOL, Some(r.objective_evaluations));
            let c = bound_convex(&a, Norm::Inf, &opts)?;
            t.real("convex bound", c.value, 1.0, VALUE_TOL, Some(c.objective_evaluations));
        }
        "example-4.2" => {
            let c = bound_convex(&a, Norm::Inf, &opts)?;
            t.real("convex bound", c.value, 3.0, VALUE_TOL, Some(c.objective_evaluations));
            let r = bound_rearrangement(&a, Norm::Inf, &opts)?;
            t.real("alpha_inf", r.value, 3.0, VALUE_TOL, Some(r.objective_evaluations));
            let s = spectral_sufficient(&a)?;
            t.real("spectral radius", s.rho, 1.4142, RHO_TOL, None);
            t.push("spectral condition holds", Quantity::Flag(s.holds), Quantity::Flag(false), 0.0, None);
            t.push("diagonal dominance holds", Quantity::Flag(sdd_sufficient(&a)), Quantity::Flag(false), 0.0, None);
            let w = has_row_w_property(&a, &WOptions::default())?;
            t.push("row W-property", Quantity::Flag(w.verdict), Quantity::Flag(true), 0.0, Some(w.vertices_checked));
        }
        "example-4.3" => {
            let c = bound_convex(&a, Norm::Inf, &opts)?;
            t.real("convex bound", c.value, 4.0, VALUE_TOL, Some(c.objective_evaluations));
            t.push(
                "pair enumeration count",
                Quantity::Count(pair_enumeration_count(3, 2)?),
                Quantity::Count(36),
                0.0,
                None,
            );
            let distinct = distinct_pair_count(&a).unwrap_or(u128::MAX);
            t.push("distinct pair families", Quantity::Count(distinct), Quantity::Count(36), 0.0, None);
            let s = spectral_sufficient(&a)?;
            t.real("spectral radius", s.rho, 2.3028, RHO_TOL, None);
            let w = has_row_w_property(&a, &WOptions::default())?;
            t.push("row W-property", Quantity::Flag(w.verdict), Quantity::Flag(true), 0.0, Some(w.vertices_checked));
        }
        _ => unreachable!("by_name accepted an unknown builtin"),
    }
    Ok(t.rows)
}

pub fn render_table(name: &str, rows: &[TableRow]) -> String {
    let width = rows.iter().map(|r| r.quantity.len()).max().unwrap_or(0).max("quantity".len());
    let mut out = String::new();
    let _ = writeln!(out, "{name}");
    let _ =
        writeln!(out, "{:<width$}  {:>12}  {:>12}  {:<7}  evaluations", "quantity", "computed", "expected", "status");
    for r in rows {
        let status = if r.matches { "ok" } else { "differs" };
        let evals = r.evaluations.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{:<width$}  {:>12}  {:>12}  {:<7}  {evals}",
            r.quantity,
            r.computed.to_string(),
            r.expected.to_string(),
            status
        );
    }
    let differing = rows.iter().filter(|r| !r.matches).count();
    let _ = writeln!(out, "{} of {} quantities match", rows.len() - differing, rows.len());
    out
}
