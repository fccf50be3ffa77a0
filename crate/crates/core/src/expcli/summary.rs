//! Last-window statistics over `train_log.csv` rows.

use std::collections::BTreeMap;

use super::csvio::{CurveRow, SummaryRow, TrainRow, STATUS_OK};
use super::ExpError;

pub const DEFAULT_WINDOW: usize = 50;

/// Per-setting statistics of `|f_final - f_nominal|` over each run's last
/// `window` episodes, pooled across runs, plus per-episode cross-run curves
/// of `f_final`.
///
/// Only runs whose rows are all `ok` contribute. Settings keep the order in
/// which they first appear. Standard deviations are population values.
pub fn summarize(
    rows: &[TrainRow],
    window: usize,
) -> Result<(Vec<SummaryRow>, Vec<CurveRow>), ExpError> {
    if window == 0 {
        return Err(ExpError::Config("window must be positive".into()));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut runs: BTreeMap<(&str, usize), Vec<&TrainRow>> = BTreeMap::new();
    for r in rows {
        if !order.contains(&r.setting.as_str()) {
            order.push(&r.setting);
        }
        runs.entry((r.setting.as_str(), r.run)).or_default().push(r);
    }

    let mut summary = Vec::new();
    let mut curves = Vec::new();
    for setting in order {
        let mut complete: Vec<Vec<(usize, f64, f64)>> = Vec::new();
        for ((s, run), rs) in &runs {
            if *s != setting || rs.iter().any(|r| r.status != STATUS_OK) {
                continue;
            }
            let mut eps = rs
                .iter()
                .map(|r| match (r.f_final_hz, r.dev_hz) {
                    (Some(f), Some(d)) => Ok((r.episode, f, d)),
                    _ => Err(ExpError::Config(format!(
                        "{setting} run {run}: ok row without values"
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            eps.sort_by_key(|e| e.0);
            if eps.len() < window {
                return Err(ExpError::WindowTooLarge {
                    setting: setting.to_string(),
                    run: *run,
                    episodes: eps.len(),
                    window,
                });
            }
            complete.push(eps);
        }
        if complete.is_empty() {
            continue;
        }
        let pooled: Vec<f64> = complete
            .iter()
            .flat_map(|eps| eps[eps.len() - window..].iter().map(|e| e.2))
            .collect();
        let (mean, std) = mean_std(&pooled);
        summary.push(SummaryRow {
            setting: setting.to_string(),
            mean_dev_hz: mean,
            std_dev_hz: std,
            runs: complete.len(),
            window,
        });

        let n_eps = complete.iter().map(Vec::len).min().unwrap_or(0);
        for k in 0..n_eps {
            let fs: Vec<f64> = complete.iter().map(|eps| eps[k].1).collect();
            let (m, s) = mean_std(&fs);
            curves.push(CurveRow {
                setting: setting.to_string(),
                episode: complete[0][k].0,
                mean_f_final_hz: m,
                std_f_final_hz: s,
                runs: fs.len(),
            });
        }
    }
    Ok((summary, curves))
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
