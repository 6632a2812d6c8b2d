//! Comma-separated tables, one per report kind, and one-line JSON
//! summaries.

use std::io::Write;

use serde::Serialize;

use super::{AccuracyReport, ConcentrationReport, NetworkReport, PmiMatrix, TokenEfficiency};
use crate::error::{Error, Result};

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Validation(format!("csv: {other:?}")),
    }
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))?.flush()?;
    Ok(())
}

/// One row per setting.
pub fn write_accuracy_csv<W: Write>(reports: &[AccuracyReport], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["setting", "a", "b", "users", "abstentions", "accuracy"]).map_err(csv_err)?;
    for r in reports {
        w.write_record([
            r.setting(),
            r.a.to_string(),
            r.b.to_string(),
            r.users.len().to_string(),
            r.abstentions.to_string(),
            format!("{:.4}", r.accuracy),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// Square matrix with category names as header row and first column.
pub fn write_pmi_csv<W: Write>(m: &PmiMatrix, out: W) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["category".to_string()];
    header.extend(m.categories.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (c, row) in m.categories.iter().zip(&m.values) {
        let mut rec = vec![c.clone()];
        rec.extend(row.iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

/// One row per (scale, rank).
pub fn write_concentration_csv<W: Write>(r: &ConcentrationReport, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["agents", "runs", "purchases", "rank", "share"]).map_err(csv_err)?;
    for s in &r.scales {
        for (i, share) in s.top_shares.iter().enumerate() {
            w.write_record([
                s.agents.to_string(),
                s.runs.to_string(),
                s.purchases.to_string(),
                (i + 1).to_string(),
                format!("{share:.6}"),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(w)
}

/// Per-category token totals of both runs, then a total row.
pub fn write_tokens_csv<W: Write>(t: &TokenEfficiency, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["category", "with_fast", "without_fast", "share_with", "share_without"])
        .map_err(csv_err)?;
    for c in &t.categories {
        w.write_record([
            c.category.as_str().to_string(),
            c.with_fast.to_string(),
            c.without_fast.to_string(),
            format!("{:.6}", c.share_with),
            format!("{:.6}", c.share_without),
        ])
        .map_err(csv_err)?;
    }
    w.write_record([
        "total".to_string(),
        t.with_fast.to_string(),
        t.without_fast.to_string(),
        "1".into(),
        "1".into(),
    ])
    .map_err(csv_err)?;
    finish(w)
}

/// Mean reach per round, one column per topology.
pub fn write_network_csv<W: Write>(r: &NetworkReport, out: W) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["round".to_string()];
    header.extend(r.traces.iter().map(|t| t.topology.as_str().to_string()));
    w.write_record(&header).map_err(csv_err)?;
    for round in 0..=r.rounds as usize {
        let mut rec = vec![round.to_string()];
        rec.extend(r.traces.iter().map(|t| format!("{:.6}", t.mean_reach[round])));
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

/// Appends `{"report": kind, ...value}` as one line.
pub fn write_summary_line<W: Write, T: Serialize>(kind: &str, value: &T, mut out: W) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    let line = match v.as_object_mut() {
        Some(obj) => {
            obj.insert("report".into(), kind.into());
            v
        }
        None => serde_json::json!({ "report": kind, "value": v }),
    };
    serde_json::to_writer(&mut out, &line)?;
    out.write_all(b"\n")?;
    Ok(())
}
