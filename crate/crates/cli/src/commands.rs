use std::fmt::Write as _;
use std::path::Path;

use gauge_core::builder::{build_anchored, build_cousin, build_straddle_verified};
use gauge_core::model::residual_estimate;
use gauge_core::summation::basic_sum_sequence;
use gauge_core::{
    decompose, residue_check, total_kh, BuildLimits, DecompositionReport, Gauge, ResidueError, TagPolicy,
    TaggedPartition, TotalReport,
};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::format::{csv_line, csv_num, g6, num, opt_num, verdict_cells, verdict_json, verdict_text};
use crate::job::{BuilderKind, Job};

/// A command result in every output format, plus the exit status it implies.
pub struct Report {
    pub json: Value,
    pub csv: Vec<Vec<String>>,
    pub table: String,
    pub status: u8,
}

const FAIL_CHECK: u8 = 1;
const FAIL_BUILD: u8 = 3;

fn row_status(total: &TotalReport) -> u8 {
    if total.rows.iter().any(|r| r.outcome.is_err()) {
        FAIL_BUILD
    } else if !total.verified {
        FAIL_CHECK
    } else {
        0
    }
}

fn verification_json(total: &TotalReport) -> Value {
    total
        .rows
        .iter()
        .map(|row| {
            let (residual, pairs) = match &row.outcome {
                Ok(s) => (num(s.residual), Value::from(s.pairs)),
                Err(_) => (Value::Null, Value::Null),
            };
            json!({ "epsilon": num(row.epsilon), "residual": residual, "bound": num(row.bound), "pairs": pairs })
        })
        .collect()
}

fn verification_table(total: &TotalReport, out: &mut String) {
    let _ = writeln!(out, "{:>12} {:>12} {:>12} {:>10}", "epsilon", "residual", "bound", "pairs");
    for row in &total.rows {
        match &row.outcome {
            Ok(s) => {
                let mark = if row.passed() { "" } else { "  over bound" };
                let _ = writeln!(out, "{:>12} {:>12} {:>12} {:>10}{mark}", g6(row.epsilon), g6(s.residual), g6(row.bound), s.pairs);
            }
            Err(e) => {
                let _ = writeln!(out, "{:>12} {:>12} {:>12} {:>10}  {e}", g6(row.epsilon), "-", g6(row.bound), "-");
            }
        }
    }
}

fn report_row_errors(total: &TotalReport) {
    for row in &total.rows {
        if let Err(e) = &row.outcome {
            eprintln!("gauge: epsilon {}: {e}", row.epsilon);
        }
    }
}

fn residual_key(e: f64) -> String {
    csv_num(e)
}

pub fn integrate(job: &Job) -> Result<(Report, DecompositionReport), CliError> {
    let d = decompose(&job.model, &job.decompose_options())?;
    report_row_errors(&d.total);
    for flag in &d.flags {
        eprintln!("gauge: {flag}");
    }

    let residuals: Map<String, Value> =
        d.residuals.iter().map(|r| (residual_key(r.point), verdict_json(&r.verdict))).collect();
    let json = json!({
        "total": num(d.total.total),
        "verification": verification_json(&d.total),
        "kh": verdict_json(&d.kh.verdict),
        "basic_sum": verdict_json(&d.basic_sum.verdict),
        "residuals": residuals,
        "identity_gap": opt_num(d.identity_gap),
    });

    let mut csv = vec![vec!["quantity".into(), "kind".into(), "value".into(), "depth".into()]];
    csv.push(vec!["total".into(), "exact".into(), csv_num(d.total.total), String::new()]);
    let verdict_row = |name: String, v| {
        let [kind, value, depth] = verdict_cells(v);
        vec![name, kind, value, depth]
    };
    csv.push(verdict_row("kh".into(), &d.kh.verdict));
    csv.push(verdict_row("basic_sum".into(), &d.basic_sum.verdict));
    for r in &d.residuals {
        csv.push(verdict_row(format!("residual({})", residual_key(r.point)), &r.verdict));
    }
    csv.push(vec!["identity_gap".into(), "gap".into(), d.identity_gap.map(csv_num).unwrap_or_default(), String::new()]);

    let mut table = String::new();
    let _ = writeln!(table, "model        {}", job.model.provenance());
    let span = job.model.span();
    let _ = writeln!(table, "span         [{}, {}]", g6(span.lo()), g6(span.hi()));
    let _ = writeln!(table, "total        {}  ({})", g6(d.total.total), if d.total.verified { "verified" } else { "not verified" });
    let _ = writeln!(table, "kh           {}", verdict_text(&d.kh.verdict));
    let _ = writeln!(table, "basic sum    {}", verdict_text(&d.basic_sum.verdict));
    for r in &d.residuals {
        let _ = writeln!(table, "R({})  {}", g6(r.point), verdict_text(&r.verdict));
    }
    match (d.identity_gap, d.identity_holds()) {
        (Some(gap), Some(holds)) => {
            let _ = writeln!(table, "identity     gap {}  ({})", g6(gap), if holds { "holds" } else { "fails" });
        }
        _ => {
            let _ = writeln!(table, "identity     not checked: a limit did not converge");
        }
    }
    table.push('\n');
    verification_table(&d.total, &mut table);

    let status = match row_status(&d.total) {
        FAIL_BUILD => FAIL_BUILD,
        s if s != 0 || !d.flags.is_empty() => FAIL_CHECK,
        _ => 0,
    };
    Ok((Report { json, csv, table, status }, d))
}

pub fn verify(job: &Job) -> Result<Report, CliError> {
    let total = total_kh(&job.model, &job.total_options())?;
    report_row_errors(&total);
    let json = json!({
        "total": num(total.total),
        "verified": total.verified,
        "verification": verification_json(&total),
    });
    let mut csv = vec![vec!["epsilon".into(), "residual".into(), "bound".into(), "pairs".into()]];
    for row in &total.rows {
        let (residual, pairs) = match &row.outcome {
            Ok(s) => (csv_num(s.residual), s.pairs.to_string()),
            Err(_) => (String::new(), String::new()),
        };
        csv.push(vec![csv_num(row.epsilon), residual, csv_num(row.bound), pairs]);
    }
    let mut table = format!("total {}  ({})\n\n", g6(total.total), if total.verified { "verified" } else { "not verified" });
    verification_table(&total, &mut table);
    Ok(Report { json, csv, table, status: row_status(&total) })
}

pub fn residues(job: &Job) -> Result<Report, CliError> {
    let opts = job.decompose_options();
    let schedule = opts.schedule_for(&job.model);
    let basic = basic_sum_sequence(&job.model, &schedule, &opts.anchors);
    let identity = match residue_check(&job.model, &opts) {
        Ok(r) => Some(r),
        Err(ResidueError::NotLocallyConstant { x, derivative }) => {
            eprintln!("gauge: f({x}) = {derivative}, so F is not locally constant off E; residue identity skipped");
            None
        }
        Err(ResidueError::Evaluation(e)) => return Err(e.into()),
    };
    let residuals = match &identity {
        Some(r) => r.residuals.clone(),
        None => job
            .model
            .exceptional()
            .points()
            .iter()
            .map(|&e| residual_estimate(&job.model, e, &schedule, &opts.anchors))
            .collect(),
    };

    let sum_gap = match basic.verdict.value() {
        Some(rr) if !residuals.is_empty() => residuals
            .iter()
            .map(|r| r.verdict.value())
            .sum::<Option<f64>>()
            .map(|s| (s - rr).abs()),
        _ => None,
    };
    let sum_tol = opts.anchors.tol * (residuals.len() as f64 + 1.0);
    let mut status = 0;
    if let Some(gap) = sum_gap.filter(|g| *g > sum_tol) {
        eprintln!("gauge: sum of residuals differs from the basic sum by {gap:e}");
        status = FAIL_CHECK;
    }
    if let Some(gap) = identity.as_ref().and_then(|r| r.gap).filter(|g| *g > sum_tol) {
        eprintln!("gauge: residue identity gap {gap:e}");
        status = FAIL_CHECK;
    }

    let map: Map<String, Value> = residuals.iter().map(|r| (residual_key(r.point), verdict_json(&r.verdict))).collect();
    let identity_json = identity.as_ref().map_or(Value::Null, |r| {
        json!({ "lhs": num(r.lhs), "rhs": opt_num(r.rhs), "gap": opt_num(r.gap) })
    });
    let json = json!({
        "basic_sum": verdict_json(&basic.verdict),
        "residuals": map,
        "residual_sum_gap": opt_num(sum_gap),
        "residue_identity": identity_json,
    });

    let mut csv = vec![vec!["point".into(), "kind".into(), "value".into(), "depth".into()]];
    for r in &residuals {
        let [kind, value, depth] = verdict_cells(&r.verdict);
        csv.push(vec![residual_key(r.point), kind, value, depth]);
    }

    let mut table = String::new();
    let _ = writeln!(table, "{:>12}  verdict", "point");
    for r in &residuals {
        let _ = writeln!(table, "{:>12}  {}", g6(r.point), verdict_text(&r.verdict));
    }
    let _ = writeln!(table, "\nbasic sum     {}", verdict_text(&basic.verdict));
    if let Some(gap) = sum_gap {
        let _ = writeln!(table, "sum gap       {}", g6(gap));
    }
    if let Some(r) = &identity {
        let rhs = r.rhs.map_or(String::from("undefined"), g6);
        let _ = writeln!(table, "F(b) - F(a)   {}  vs  sum of residuals {rhs}", g6(r.lhs));
    }
    Ok(Report { json, csv, table, status })
}

fn build_partition(job: &Job) -> Result<TaggedPartition, CliError> {
    let model = &job.model;
    let points = model.exceptional().points();
    let radius = job.schedule().radius0;
    let partition = match job.builder {
        BuilderKind::Anchored => build_anchored(model.span(), points, radius, radius)?,
        BuilderKind::Straddle => {
            build_straddle_verified(model, radius, model.span().length(), job.epsilons[0], &BuildLimits::default())?
        }
        BuilderKind::Cousin => {
            let gauge = Gauge::anchored(radius, points.iter().map(|&e| (e, radius)).collect(), true);
            build_cousin(model.span(), &gauge, TagPolicy::Random(job.seed))?
        }
    };
    Ok(partition)
}

pub fn partition(job: &Job) -> Result<Report, CliError> {
    let p = build_partition(job)?;
    let pairs = p.pairs();
    let is_ex = |x: f64| job.model.is_exceptional(x);
    let json = json!({
        "builder": format!("{:?}", job.builder).to_lowercase(),
        "count": pairs.len(),
        "pairs": pairs
            .iter()
            .map(|q| json!({ "lo": num(q.lo()), "hi": num(q.hi()), "tag": num(q.tag), "in_exceptional": is_ex(q.tag) }))
            .collect::<Vec<_>>(),
    });
    let mut csv = vec![vec!["lo".into(), "hi".into(), "tag".into(), "in_exceptional".into()]];
    for q in pairs {
        csv.push(vec![csv_num(q.lo()), csv_num(q.hi()), csv_num(q.tag), is_ex(q.tag).to_string()]);
    }
    let mut table = format!("{} pairs\n{:>14} {:>14} {:>14}\n", pairs.len(), "lo", "hi", "tag");
    for q in pairs {
        let mark = if is_ex(q.tag) { "  E" } else { "" };
        let _ = writeln!(table, "{:>14} {:>14} {:>14}{mark}", g6(q.lo()), g6(q.hi()), g6(q.tag));
    }
    Ok(Report { json, csv, table, status: 0 })
}

/// `depth,h,r,epsilon,value,delta` for the plain-KH sequence.
pub fn write_convergence(path: &Path, d: &DecompositionReport) -> Result<(), CliError> {
    let mut out = String::from("depth,h,r,epsilon,value,delta\n");
    let mut prev: Option<f64> = None;
    for t in &d.kh.sequence {
        let delta = prev.map(|p| csv_num(t.value - p)).unwrap_or_default();
        let cells = [
            t.depth.to_string(),
            csv_num(t.params.mesh),
            csv_num(t.params.anchor_radius),
            csv_num(t.params.epsilon),
            csv_num(t.value),
            delta,
        ];
        out.push_str(&csv_line(&cells));
        out.push('\n');
        prev = Some(t.value);
    }
    std::fs::write(path, out)?;
    Ok(())
}
