//! Report serialization: CSV rows with a fixed per-kind schema, and a JSON
//! mirror carrying fits, ratios, and metadata.
//!
//! CSV uses RFC-4180 quoting, LF line endings, and 17 significant digits for
//! floating-point fields (round-trip exact); identical study configurations
//! produce byte-identical CSV. Wall-time cells print as 0 unless the run
//! opted into recording them.

use crate::study::{ConvergenceReport, ReportRow, StudyKind};

/// Pinned column set. Studies other than `order` append a trailing `flags`
/// column carrying semicolon-joined row tags.
pub const CSV_COLUMNS: [&str; 12] = [
    "study_kind",
    "N",
    "d",
    "dt",
    "M",
    "T",
    "error",
    "alpha_sup",
    "beta_sup",
    "bound_rhs",
    "slack",
    "wall_time_s",
];

/// 17 significant digits: exact round-trip for f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn quote_rfc4180(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn row_fields(row: &ReportRow, record_wall_time: bool) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
    vec![
        row.study_kind.as_str().to_string(),
        row.n.to_string(),
        row.d.to_string(),
        format_f64(row.dt),
        row.m.to_string(),
        format_f64(row.t_total),
        format_f64(row.error),
        opt(row.alpha_sup),
        opt(row.beta_sup),
        opt(row.bound_rhs),
        opt(row.slack),
        if record_wall_time {
            format_f64(row.wall_time_s)
        } else {
            "0".to_string()
        },
    ]
}

/// Serializes rows to CSV with the pinned schema.
pub fn to_csv(report: &ConvergenceReport, record_wall_time: bool) -> String {
    let with_flags = report.kind != StudyKind::Order;
    let mut out = String::new();
    let mut header: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
    if with_flags {
        header.push("flags".to_string());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &report.rows {
        let mut fields = row_fields(row, record_wall_time);
        if with_flags {
            fields.push(row.flags.join(";"));
        }
        let quoted: Vec<String> = fields.iter().map(|f| quote_rfc4180(f)).collect();
        out.push_str(&quoted.join(","));
        out.push('\n');
    }
    out
}

/// Full-fidelity JSON mirror (rows, fits, ratios, metadata). Wall-time
/// fields in the JSON are real measurements and are the one part of the
/// output that varies between runs.
pub fn to_json(report: &ConvergenceReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::{OrderFit, ReportMetadata, Tolerances};

    fn sample_report(kind: StudyKind) -> ConvergenceReport {
        ConvergenceReport {
            kind,
            rows: vec![ReportRow {
                study_kind: kind,
                n: 64,
                d: 1,
                dt: 0.0625,
                m: 4096,
                t_total: 1.0,
                error: 1.25e-7,
                alpha_sup: Some(3.5),
                beta_sup: None,
                bound_rhs: Some(2.0e-7),
                slack: Some(7.5e-8),
                wall_time_s: 1.5,
                flags: vec!["regime".to_string()],
            }],
            fits: vec![OrderFit {
                n: 64,
                axis: "dt",
                slope: Some(4.01),
                intercept: Some(0.2),
                max_residual: Some(0.01),
                points_used: 4,
                points_floored: 0,
                degenerate: false,
            }],
            uniformity_ratio: None,
            c_spread: None,
            violations: Vec::new(),
            metadata: ReportMetadata {
                version: "0.1.0".to_string(),
                seed: 7,
                workers: 0,
                potential: "cos_mode".to_string(),
                potential_smooth: true,
                m_policy: "reference(4096)".to_string(),
                scan_k: 17,
                refine_scans: true,
                error_floor: 1e-14,
                tolerances: Tolerances::default(),
                total_wall_time_s: 2.0,
            },
        }
    }

    #[test]
    fn order_csv_matches_pinned_schema() {
        let csv = to_csv(&sample_report(StudyKind::Order), false);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "study_kind,N,d,dt,M,T,error,alpha_sup,beta_sup,bound_rhs,slack,wall_time_s"
        );
        let row = lines.next().unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 12);
        assert_eq!(fields[0], "order");
        assert_eq!(fields[1], "64");
        assert_eq!(fields[3], "6.2500000000000000e-2");
        assert_eq!(fields[8], ""); // beta_sup absent
        assert_eq!(fields[11], "0"); // wall time suppressed by default
        assert!(csv.ends_with('\n'));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn non_order_kinds_append_flags() {
        let csv = to_csv(&sample_report(StudyKind::Theorem3Scan), false);
        let header = csv.lines().next().unwrap();
        assert!(header.ends_with(",flags"));
        let row = csv.lines().nth(1).unwrap();
        assert!(row.ends_with(",regime"));
    }

    #[test]
    fn wall_time_recorded_when_enabled() {
        let csv = to_csv(&sample_report(StudyKind::Order), true);
        let row = csv.lines().nth(1).unwrap();
        assert!(row.ends_with("1.5000000000000000e0"));
    }

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.0625, 1.25e-7, 3.5, 1.0 / 3.0, 1e-14] {
            let s = format_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    #[test]
    fn quoting_only_when_needed() {
        assert_eq!(quote_rfc4180("plain"), "plain");
        assert_eq!(quote_rfc4180("a,b"), "\"a,b\"");
        assert_eq!(quote_rfc4180("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn json_mirror_serializes() {
        let json = to_json(&sample_report(StudyKind::Order));
        assert!(json.contains("\"slope\": 4.01"));
        assert!(json.contains("\"uniformity_ratio\": null"));
    }
}
