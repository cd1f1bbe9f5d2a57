//! Serializable run reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::ambient::AmbientKind;
use crate::identities::IdentityCheck;
use crate::recurrence::{PointClass, RecurrenceResult, TheoremVerdict};
use crate::submanifold::ExpectedClass;

pub const SCHEMA_VERSION: u32 = 1;

/// Below this, `max_α |det A_{n_α}|` counts as singular.
pub const DEGENERATE_DET: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub seed: u64,
    pub points_per_case: usize,
    pub cases: Vec<CaseReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbientSummary {
    pub kind: AmbientKind,
    pub c: f64,
    pub m: usize,
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub name: String,
    pub ambient: AmbientSummary,
    pub expected_class: ExpectedClass,
    pub points: Vec<PointReport>,
    /// Points where the chart was unusable (rank loss, degenerate frame).
    pub skipped: Vec<SkippedPoint>,
    /// Points where a computation path disagreed or an invariant broke.
    pub errors: Vec<SkippedPoint>,
    pub aggregates: Aggregates,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub u: Vec<f64>,
    pub checks: Vec<IdentityCheck>,
    pub recurrence: RecurrenceResult,
    pub theorems: TheoremVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub u: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    /// Worst residual per check id over the evaluated points.
    pub max_residual: BTreeMap<String, f64>,
    pub max_residual_overall: f64,
    pub failed_checks: Vec<String>,
    pub checks_passed: bool,
    pub class_counts: BTreeMap<String, usize>,
    pub class_matched: bool,
    pub theorems_checked: usize,
    pub theorems_passed: bool,
    pub max_mu_norm: f64,
    pub max_fit_residual: f64,
    pub min_fit_residual: f64,
    pub max_theorem1_residual: f64,
    pub max_theorem2_residual: f64,
    pub min_normal_curvature_norm: f64,
    pub max_shape_det: f64,
    /// Every shape operator was singular at every evaluated point.
    pub shape_operators_degenerate: bool,
}

fn class_name(c: PointClass) -> &'static str {
    match c {
        PointClass::TotallyGeodesic => "totally_geodesic",
        PointClass::Parallel => "parallel",
        PointClass::Recurrent => "recurrent",
        PointClass::NonRecurrent => "non_recurrent",
    }
}

/// Whether every evaluated point carries the class the catalog expects.
pub fn class_matches(expected: ExpectedClass, observed: PointClass) -> bool {
    matches!(
        (expected, observed),
        (ExpectedClass::TotallyGeodesic, PointClass::TotallyGeodesic)
            | (ExpectedClass::Parallel, PointClass::Parallel)
            | (ExpectedClass::Generic, PointClass::NonRecurrent)
    )
}

impl Aggregates {
    pub fn from_points(expected: ExpectedClass, points: &[PointReport], errors: usize) -> Self {
        let mut max_residual: BTreeMap<String, f64> = BTreeMap::new();
        let mut failed: Vec<String> = Vec::new();
        let mut class_counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut agg = Aggregates {
            max_residual: BTreeMap::new(),
            max_residual_overall: 0.0,
            failed_checks: Vec::new(),
            checks_passed: true,
            class_counts: BTreeMap::new(),
            class_matched: !points.is_empty(),
            theorems_checked: 0,
            theorems_passed: true,
            max_mu_norm: 0.0,
            max_fit_residual: 0.0,
            min_fit_residual: if points.is_empty() { 0.0 } else { f64::INFINITY },
            max_theorem1_residual: 0.0,
            max_theorem2_residual: 0.0,
            min_normal_curvature_norm: if points.is_empty() { 0.0 } else { f64::INFINITY },
            max_shape_det: 0.0,
            shape_operators_degenerate: true,
        };
        for pt in points {
            for c in &pt.checks {
                let slot = max_residual.entry(c.id.clone()).or_insert(0.0);
                *slot = if c.residual.is_nan() { f64::NAN } else { slot.max(c.residual) };
                if !c.passed && !failed.contains(&c.id) {
                    failed.push(c.id.clone());
                }
            }
            let r = &pt.recurrence;
            *class_counts.entry(class_name(r.class).to_string()).or_insert(0) += 1;
            agg.class_matched &= class_matches(expected, r.class);
            if let TheoremVerdict::Checked { .. } = pt.theorems {
                agg.theorems_checked += 1;
            }
            agg.theorems_passed &= pt.theorems.passed();
            agg.max_mu_norm = agg.max_mu_norm.max(r.mu_norm);
            agg.max_fit_residual = agg.max_fit_residual.max(r.fit_residual);
            agg.min_fit_residual = agg.min_fit_residual.min(r.fit_residual);
            agg.max_theorem1_residual = agg.max_theorem1_residual.max(r.theorem1_residual);
            agg.max_theorem2_residual = agg.max_theorem2_residual.max(r.theorem2_residual);
            agg.min_normal_curvature_norm = agg.min_normal_curvature_norm.min(r.normal_curvature_norm);
            agg.max_shape_det = agg.max_shape_det.max(r.max_shape_det);
        }
        agg.shape_operators_degenerate = agg.max_shape_det <= DEGENERATE_DET;
        agg.max_residual_overall = max_residual.values().fold(0.0, |m, &v| if v.is_nan() { v } else { m.max(v) });
        agg.checks_passed = failed.is_empty() && errors == 0;
        agg.failed_checks = failed;
        agg.max_residual = max_residual;
        agg.class_counts = class_counts;
        agg
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Fixed-width summary of the aggregates.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>6} {:>7} {:>11} {:<18} {:<16} {:>5} {:>8} {:>6}",
            "case", "points", "skipped", "max_resid", "expected", "observed", "match", "theorems", "checks"
        );
        for c in &self.cases {
            let a = &c.aggregates;
            let observed = if a.class_counts.len() == 1 {
                a.class_counts.keys().next().cloned().unwrap_or_default()
            } else if a.class_counts.is_empty() {
                "-".to_string()
            } else {
                "mixed".to_string()
            };
            let expected = serde_json::to_value(c.expected_class)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            let theorems = if a.theorems_checked == 0 {
                "n/a"
            } else if a.theorems_passed {
                "pass"
            } else {
                "FAIL"
            };
            let _ = writeln!(
                out,
                "{:<14} {:>6} {:>7} {:>11.3e} {:<18} {:<16} {:>5} {:>8} {:>6}",
                c.name,
                c.points.len(),
                c.skipped.len(),
                a.max_residual_overall,
                expected,
                observed,
                if a.class_matched { "yes" } else { "NO" },
                theorems,
                if a.checks_passed { "pass" } else { "FAIL" },
            );
        }
        out
    }
}
