//! Plain-text `(x, y, yerr)` data for external plotting.

use std::path::Path;

use crate::experiment::RunSummary;
use crate::io::{fmt_f64, write_text, SCHEMA_HEADER};
use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YAxis {
    MeanRegret,
    /// Mean regret divided by `T`.
    NormalizedRegret,
    /// `log_T(mean regret)`.
    LogTRegret,
    MeanSwitches,
}

impl YAxis {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "regret" => Ok(YAxis::MeanRegret),
            "normalized" => Ok(YAxis::NormalizedRegret),
            "logt" => Ok(YAxis::LogTRegret),
            "switches" => Ok(YAxis::MeanSwitches),
            _ => Err(HarnessError::validation(format!("unknown y axis '{name}' (regret, normalized, logt, switches)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    /// Standard error of the mean, propagated through the axis transform.
    pub yerr: f64,
}

/// One point per summary, sorted by `x` (stable). All summaries must come
/// from the same algorithm.
pub fn plot_points(series: &[(f64, &RunSummary)], y: YAxis) -> Result<Vec<PlotPoint>> {
    let first = series.first().ok_or_else(|| HarnessError::validation("cannot plot an empty sweep"))?;
    if series.iter().any(|(_, s)| s.algorithm != first.1.algorithm) {
        return Err(HarnessError::validation("summaries in one plot must share the algorithm axis"));
    }
    let mut points: Vec<PlotPoint> = series
        .iter()
        .map(|&(x, s)| {
            let agg = s.aggregate();
            let (stats, n) = match y {
                YAxis::MeanSwitches => (agg.switches, s.rows.len() as f64),
                _ => (agg.regret, s.rows.len() as f64),
            };
            let se = stats.std / n.sqrt();
            let t = s.horizon as f64;
            let (y, yerr) = match y {
                YAxis::MeanRegret | YAxis::MeanSwitches => (stats.mean, se),
                YAxis::NormalizedRegret => (stats.mean / t, se / t),
                YAxis::LogTRegret => (stats.mean.ln() / t.ln(), se / (stats.mean * t.ln())),
            };
            PlotPoint { x, y, yerr }
        })
        .collect();
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(points)
}

pub fn plot_text(points: &[PlotPoint]) -> String {
    let mut s = String::from(SCHEMA_HEADER);
    s.push_str("\n# x y yerr\n");
    for p in points {
        s.push_str(&format!("{} {} {}\n", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.yerr)));
    }
    s
}

pub fn emit_plot_data(series: &[(f64, &RunSummary)], y: YAxis, path: impl AsRef<Path>) -> Result<Vec<PlotPoint>> {
    let points = plot_points(series, y)?;
    write_text(path.as_ref(), &plot_text(&points))?;
    Ok(points)
}

/// Least-squares slope of `ln y` against `ln x` and its standard error
/// (0 with only two points).
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(HarnessError::validation("slope fit needs at least two paired points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(HarnessError::validation("log-log fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let se = if lx.len() > 2 {
        let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, se))
}
