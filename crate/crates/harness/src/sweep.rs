//! `sweep --config`: a line-oriented grid of `run` invocations.
//!
//! ```text
//! alg=sd
//! T=1000
//! d=8
//! eps=1
//! adversary=builtin:uniform
//! runs=20
//! seed=7
//! out=results/eps
//! x=eps
//! y=regret
//! point.eps=0.25
//! point.eps=0.5
//! point.eps=1
//! ```
//!
//! Unprefixed keys are shared. A `point.<key>` line sets `key` for the
//! current grid point; repeating a key already set starts the next point.
//! Blank lines and `#` comments are ignored. Each point writes to
//! `out/point_NNN/`, and the plot data goes to `out/sweep.dat`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::cli::{build_experiment, AlgName, ParamsArgs, RunArgs};
use crate::experiment::{run_experiment, RunSummary};
use crate::plot::{emit_plot_data, fit_loglog_slope, YAxis};
use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepConfig {
    pub shared: BTreeMap<String, String>,
    pub points: Vec<BTreeMap<String, String>>,
}

pub fn parse_sweep(text: &str) -> Result<SweepConfig> {
    let mut cfg = SweepConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::validation(format!("sweep config line {}: expected key=value", i + 1)))?;
        let (key, value) = (key.trim(), value.trim().to_string());
        if let Some(k) = key.strip_prefix("point.") {
            if cfg.points.last().is_none_or(|p| p.contains_key(k)) {
                cfg.points.push(BTreeMap::new());
            }
            cfg.points.last_mut().expect("pushed above").insert(k.to_string(), value);
        } else if cfg.shared.insert(key.to_string(), value).is_some() {
            return Err(HarnessError::validation(format!("sweep config line {}: duplicate key '{key}'", i + 1)));
        }
    }
    if cfg.points.is_empty() {
        return Err(HarnessError::validation("sweep config has no point.* lines"));
    }
    Ok(cfg)
}

fn get<'a>(m: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    m.get(key).map(String::as_str).ok_or_else(|| HarnessError::validation(format!("sweep point is missing '{key}'")))
}

fn num<T: std::str::FromStr>(m: &BTreeMap<String, String>, key: &str) -> Result<T> {
    get(m, key)?.parse().map_err(|_| HarnessError::validation(format!("sweep key '{key}' is not a number")))
}

fn opt<T: std::str::FromStr>(m: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
    if m.contains_key(key) {
        num(m, key)
    } else {
        Ok(default)
    }
}

fn run_args(m: &BTreeMap<String, String>, out: PathBuf) -> Result<RunArgs> {
    let eta = if m.contains_key("eta") { Some(num(m, "eta")?) } else { None };
    Ok(RunArgs {
        params: ParamsArgs {
            alg: AlgName::parse(get(m, "alg")?)?,
            t: num(m, "T")?,
            d: num(m, "d")?,
            eps: num(m, "eps")?,
            delta: opt(m, "delta", 0.0)?,
            beta: opt(m, "beta", 0.05)?,
            lstar: opt(m, "lstar", 0.0)?,
            eta,
        },
        adversary: get(m, "adversary")?.to_string(),
        seed: num(m, "seed")?,
        runs: num(m, "runs")?,
        out,
        summary_only: true,
    })
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub summaries: Vec<(f64, RunSummary)>,
    /// Log-log slope of normalized regret against `T` (only when `x=T`).
    pub slope: Option<(f64, f64)>,
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    let out = PathBuf::from(get(&cfg.shared, "out")?);
    let x_key = get(&cfg.shared, "x")?.to_string();
    let y = YAxis::parse(cfg.shared.get("y").map_or("regret", String::as_str))?;
    let mut summaries = Vec::with_capacity(cfg.points.len());
    for (i, point) in cfg.points.iter().enumerate() {
        let mut merged = cfg.shared.clone();
        merged.extend(point.iter().map(|(k, v)| (k.clone(), v.clone())));
        let x: f64 = num(&merged, &x_key)?;
        let args = run_args(&merged, out.join(format!("point_{i:03}")))?;
        summaries.push((x, run_experiment(&build_experiment(&args)?)?));
    }
    let series: Vec<(f64, &RunSummary)> = summaries.iter().map(|(x, s)| (*x, s)).collect();
    emit_plot_data(&series, y, out.join("sweep.dat"))?;
    let slope = if x_key == "T" && summaries.len() >= 2 {
        let xs: Vec<f64> = summaries.iter().map(|(x, _)| *x).collect();
        let ys: Vec<f64> = summaries.iter().map(|(_, s)| s.mean_regret() / s.horizon as f64).collect();
        fit_loglog_slope(&xs, &ys).ok()
    } else {
        None
    };
    Ok(SweepOutput { summaries, slope })
}
