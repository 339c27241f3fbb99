//! Stratified accuracy reporting.
//!
//! Scores are grouped by how many operations affected the probed box and by
//! whether its contents changed from the initial state, with a Wilson 95%
//! interval per stratum. Besides the full table (CSV + JSON), the report can
//! be emitted as two plot-ready panels — unchanged boxes and changed boxes —
//! with one row per operation count.

use crate::scorer::ScoredExample;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Two-sided 95% normal quantile used for every interval.
pub const Z_95: f64 = 1.959964;

/// Wilson score interval for `correct` successes out of `count`.
/// Returns (low, high); both stay within [0, 1] and bracket correct/count.
pub fn wilson_interval(correct: usize, count: usize, z: f64) -> (f64, f64) {
    if count == 0 {
        return (0.0, 1.0);
    }
    let n = count as f64;
    let p = correct as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumRow {
    pub ops_affecting: usize,
    pub changed: bool,
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallRow {
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedReport {
    /// One row per non-empty (ops_affecting, changed) stratum, ordered.
    pub rows: Vec<StratumRow>,
    pub overall: OverallRow,
}

/// Group scored examples into strata and attach intervals. Empty strata do
/// not produce rows.
pub fn stratify(scores: &[ScoredExample]) -> StratifiedReport {
    let mut groups: BTreeMap<(usize, bool), (usize, usize)> = BTreeMap::new();
    let mut total = (0usize, 0usize);
    for score in scores {
        let entry = groups.entry((score.ops_affecting, score.changed)).or_default();
        entry.0 += 1;
        total.0 += 1;
        if score.correct {
            entry.1 += 1;
            total.1 += 1;
        }
    }
    let rows = groups
        .into_iter()
        .map(|((ops_affecting, changed), (count, correct))| {
            let accuracy = correct as f64 / count as f64;
            let (ci_low, ci_high) = wilson_interval(correct, count, Z_95);
            StratumRow { ops_affecting, changed, count, correct, accuracy, ci_low, ci_high }
        })
        .collect();
    let (count, correct) = total;
    let accuracy = if count == 0 { 0.0 } else { correct as f64 / count as f64 };
    let (ci_low, ci_high) = wilson_interval(correct, count, Z_95);
    StratifiedReport {
        rows,
        overall: OverallRow { count, correct, accuracy, ci_low, ci_high },
    }
}

const CSV_HEADER: &str = "ops_affecting,changed,count,correct,accuracy,ci_low,ci_high\n";

fn push_row(out: &mut String, row: &StratumRow) {
    let _ = writeln!(
        out,
        "{},{},{},{},{:.6},{:.6},{:.6}",
        row.ops_affecting, row.changed, row.count, row.correct, row.accuracy, row.ci_low,
        row.ci_high
    );
}

/// The full per-stratum table as CSV.
pub fn report_csv(report: &StratifiedReport) -> String {
    let mut out = String::from(CSV_HEADER);
    for row in &report.rows {
        push_row(&mut out, row);
    }
    out
}

/// One plot-ready panel: the strata with the given `changed` flag, one row
/// per operation count.
pub fn panel_csv(report: &StratifiedReport, changed: bool) -> String {
    let mut out = String::from("ops_affecting,count,correct,accuracy,ci_low,ci_high\n");
    for row in report.rows.iter().filter(|r| r.changed == changed) {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6}",
            row.ops_affecting, row.count, row.correct, row.accuracy, row.ci_low, row.ci_high
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scored(ops_affecting: usize, changed: bool, correct: bool) -> ScoredExample {
        ScoredExample {
            key: "k".into(),
            scenario_id: 0,
            t: 0,
            box_index: 0,
            ops_affecting,
            changed,
            gold: vec![],
            predicted: vec![],
            residual: false,
            correct,
            note: None,
        }
    }

    #[test]
    fn wilson_matches_the_frozen_values() {
        // 50/50 with z=1.959964 → (0.9286524, 1.0); frozen from an
        // independent implementation of the Wilson score interval.
        let (low, high) = wilson_interval(50, 50, Z_95);
        assert!((low - 0.9286524).abs() < 1e-6, "50/50 low is 0.9286524…, got {low}");
        assert!((high - 1.0).abs() < 1e-12);
        // Symmetric complement: 0/50 mirrors 50/50.
        let (low0, high0) = wilson_interval(0, 50, Z_95);
        assert_eq!(low0, 0.0);
        assert!((high0 - (1.0 - low)).abs() < 1e-12);
    }

    #[test]
    fn wilson_brackets_the_estimate_and_narrows_with_n() {
        for &(correct, count) in &[(1usize, 3usize), (7, 13), (250, 500), (0, 1), (9, 9)] {
            let p = correct as f64 / count as f64;
            let (low, high) = wilson_interval(correct, count, Z_95);
            assert!((0.0..=1.0).contains(&low));
            assert!((0.0..=1.0).contains(&high));
            assert!(low <= p && p <= high, "{correct}/{count}");
        }
        let (a_low, a_high) = wilson_interval(50, 100, Z_95);
        let (b_low, b_high) = wilson_interval(5_000, 10_000, Z_95);
        assert!(b_high - b_low < (a_high - a_low) / 5.0, "width shrinks roughly as sqrt(n)");
    }

    #[test]
    fn stratify_groups_and_sums() {
        let mut scores = Vec::new();
        for _ in 0..50 {
            scores.push(scored(0, false, true));
        }
        for i in 0..40 {
            scores.push(scored(2, true, i % 4 == 0));
        }
        let report = stratify(&scores);
        assert_eq!(report.rows.len(), 2, "empty strata are omitted");

        let first = &report.rows[0];
        assert_eq!((first.ops_affecting, first.changed, first.count, first.correct), (0, false, 50, 50));
        assert_eq!(first.accuracy, 1.0);
        assert!((first.ci_low - 0.9286524).abs() < 1e-6);

        let second = &report.rows[1];
        assert_eq!((second.ops_affecting, second.changed), (2, true));
        assert_eq!((second.count, second.correct), (40, 10));

        assert_eq!(report.overall.count, 90);
        assert_eq!(report.overall.correct, 60);
        let sum: usize = report.rows.iter().map(|r| r.count).sum();
        assert_eq!(sum, report.overall.count);
    }

    #[test]
    fn csv_layout_is_stable() {
        let scores = vec![scored(1, true, true), scored(1, true, false), scored(0, false, true)];
        let report = stratify(&scores);
        let csv = report_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "ops_affecting,changed,count,correct,accuracy,ci_low,ci_high");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,false,1,1,1.000000,"));
        assert!(lines[2].starts_with("1,true,2,1,0.500000,"));

        let unchanged = panel_csv(&report, false);
        let changed = panel_csv(&report, true);
        assert_eq!(unchanged.lines().count(), 2);
        assert_eq!(changed.lines().count(), 2);
        assert!(changed.lines().nth(1).unwrap().starts_with("1,2,1,0.500000,"));
    }
}
