//! CSV files written and read by the harness.

use std::path::Path;

use crate::dynamics::TraceRow;

use super::ExpError;

pub const TRAIN_LOG_HEADER: [&str; 7] = [
    "setting",
    "run",
    "episode",
    "f_final_hz",
    "dev_hz",
    "episode_return",
    "status",
];
pub const SUMMARY_HEADER: [&str; 5] = ["setting", "mean_dev_hz", "std_dev_hz", "runs", "window"];
pub const CURVES_HEADER: [&str; 5] = [
    "setting",
    "episode",
    "mean_f_final_hz",
    "std_f_final_hz",
    "runs",
];

pub const STATUS_OK: &str = "ok";
pub const STATUS_FAILED: &str = "failed";

/// One `train_log.csv` row. A failed run ends with a row whose numeric
/// fields are empty, marking the episode during which it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRow {
    pub setting: String,
    pub run: usize,
    pub episode: usize,
    pub f_final_hz: Option<f64>,
    pub dev_hz: Option<f64>,
    pub episode_return: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub setting: String,
    pub mean_dev_hz: f64,
    pub std_dev_hz: f64,
    pub runs: usize,
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub setting: String,
    pub episode: usize,
    pub mean_f_final_hz: f64,
    pub std_f_final_hz: f64,
    pub runs: usize,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ExpError> {
    csv::Writer::from_path(path).map_err(|e| ExpError::csv(path, e))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<(), ExpError> {
    w.flush().map_err(|e| ExpError::io(path, e))
}

pub fn write_train_log(path: &Path, rows: &[TrainRow]) -> Result<(), ExpError> {
    let mut w = writer(path)?;
    let csv_err = |e| ExpError::csv(path, e);
    w.write_record(TRAIN_LOG_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.setting.clone(),
            r.run.to_string(),
            r.episode.to_string(),
            opt(r.f_final_hz),
            opt(r.dev_hz),
            opt(r.episode_return),
            r.status.clone(),
        ])
        .map_err(csv_err)?;
    }
    finish(w, path)
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<std::fs::File>, ExpError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| ExpError::csv(path, e))?;
    let found = r.headers().map_err(|e| ExpError::csv(path, e))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(ExpError::Config(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    Ok(r)
}

fn field<V: std::str::FromStr>(
    path: &Path,
    rec: &csv::StringRecord,
    k: usize,
) -> Result<V, ExpError> {
    let raw = rec.get(k).unwrap_or("");
    raw.parse().map_err(|_| {
        let line = rec.position().map_or(0, |p| p.line());
        ExpError::Config(format!("{}:{line}: cannot parse `{raw}`", path.display()))
    })
}

fn opt_field(path: &Path, rec: &csv::StringRecord, k: usize) -> Result<Option<f64>, ExpError> {
    match rec.get(k) {
        None | Some("") => Ok(None),
        Some(_) => field(path, rec, k).map(Some),
    }
}

pub fn read_train_log(path: &Path) -> Result<Vec<TrainRow>, ExpError> {
    let mut r = reader(path, &TRAIN_LOG_HEADER)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| ExpError::csv(path, e))?;
        rows.push(TrainRow {
            setting: field(path, &rec, 0)?,
            run: field(path, &rec, 1)?,
            episode: field(path, &rec, 2)?,
            f_final_hz: opt_field(path, &rec, 3)?,
            dev_hz: opt_field(path, &rec, 4)?,
            episode_return: opt_field(path, &rec, 5)?,
            status: field(path, &rec, 6)?,
        });
    }
    Ok(rows)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), ExpError> {
    let mut w = writer(path)?;
    let csv_err = |e| ExpError::csv(path, e);
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.setting.clone(),
            r.mean_dev_hz.to_string(),
            r.std_dev_hz.to_string(),
            r.runs.to_string(),
            r.window.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w, path)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, ExpError> {
    let mut r = reader(path, &SUMMARY_HEADER)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| ExpError::csv(path, e))?;
        rows.push(SummaryRow {
            setting: field(path, &rec, 0)?,
            mean_dev_hz: field(path, &rec, 1)?,
            std_dev_hz: field(path, &rec, 2)?,
            runs: field(path, &rec, 3)?,
            window: field(path, &rec, 4)?,
        });
    }
    Ok(rows)
}

pub fn write_curves(path: &Path, rows: &[CurveRow]) -> Result<(), ExpError> {
    let mut w = writer(path)?;
    let csv_err = |e| ExpError::csv(path, e);
    w.write_record(CURVES_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.setting.clone(),
            r.episode.to_string(),
            r.mean_f_final_hz.to_string(),
            r.std_f_final_hz.to_string(),
            r.runs.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w, path)
}

pub fn trace_header(n_gen: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "f_coi_hz".to_string()];
    h.extend((1..=n_gen).map(|k| format!("f{k}_hz")));
    h.extend((1..=n_gen).map(|k| format!("pm{k}")));
    h
}

pub fn write_trace(path: &Path, rows: &[TraceRow<f64>]) -> Result<(), ExpError> {
    let n_gen = rows.first().map_or(0, |r| r.f_hz.len());
    let mut w = writer(path)?;
    let csv_err = |e| ExpError::csv(path, e);
    w.write_record(trace_header(n_gen)).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.t.to_string(), r.f_coi_hz.to_string()];
        rec.extend(r.f_hz.iter().map(f64::to_string));
        rec.extend(r.pm.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w, path)
}

/// Reads a trace back as `(header, rows of numbers)`.
pub fn read_trace(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), ExpError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| ExpError::csv(path, e))?;
    let header = r
        .headers()
        .map_err(|e| ExpError::csv(path, e))?
        .iter()
        .map(String::from)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| ExpError::csv(path, e))?;
        rows.push(
            (0..rec.len())
                .map(|k| field(path, &rec, k))
                .collect::<Result<Vec<f64>, _>>()?,
        );
    }
    Ok((header, rows))
}
