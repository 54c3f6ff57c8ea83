//! File formats: loss matrices in, trace and summary CSVs out.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use dpope_core::adversaries::{parse_loss_matrix, AdversarySpec};
use dpope_core::algorithms::GameTrace;

use crate::experiment::RunSummary;
use crate::{HarnessError, Result};

/// First line of every file the harness writes.
pub const SCHEMA_HEADER: &str = "# dpope-trace v1";

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn load_loss_matrix(path: impl AsRef<Path>) -> Result<AdversarySpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let load = |source| HarnessError::Load { path: path.display().to_string(), source };
    let rows = parse_loss_matrix(&text).map_err(load)?;
    AdversarySpec::oblivious(rows).map_err(load)
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(BufWriter::new(file))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
}

pub fn trace_csv(trace: &GameTrace) -> String {
    let mut out = String::with_capacity(32 * trace.rounds.len() + 64);
    out.push_str(SCHEMA_HEADER);
    out.push_str("\nt,expert,loss,switch,mechanism\n");
    for r in &trace.rounds {
        out.push_str(&format!("{},{},{},{},{}\n", r.t, r.expert, fmt_f64(r.loss), r.switched as u8, r.mechanism.as_str()));
    }
    out
}

pub fn write_trace(path: impl AsRef<Path>, trace: &GameTrace) -> Result<()> {
    write_text(path.as_ref(), &trace_csv(trace))
}

pub fn summary_csv(summary: &RunSummary) -> String {
    let mut out = String::from(SCHEMA_HEADER);
    out.push_str("\nrun,regret,switches,eps_composed,delta_composed\n");
    for r in &summary.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.run,
            fmt_f64(r.regret),
            r.switches,
            fmt_f64(r.eps_composed),
            fmt_f64(r.delta_composed)
        ));
    }
    out
}

/// Aggregates and theoretical values as `name=value` lines.
pub fn aggregate_text(summary: &RunSummary) -> String {
    let mut out = String::from(SCHEMA_HEADER);
    out.push('\n');
    let agg = summary.aggregate();
    let mut line = |k: &str, v: String| out.push_str(&format!("{k}={v}\n"));
    line("algorithm", summary.algorithm.clone());
    line("runs", summary.rows.len().to_string());
    line("horizon", summary.horizon.to_string());
    line("d", summary.d.to_string());
    for (name, s) in [("regret", &agg.regret), ("switches", &agg.switches)] {
        line(&format!("{name}_mean"), fmt_f64(s.mean));
        line(&format!("{name}_std"), fmt_f64(s.std));
        for (q, v) in &s.quantiles {
            line(&format!("{name}_q{q:02}"), fmt_f64(*v));
        }
    }
    for (k, v) in &summary.theory {
        line(k, fmt_f64(*v));
    }
    out
}

pub fn write_summary(dir: impl AsRef<Path>, summary: &RunSummary) -> Result<()> {
    let dir = dir.as_ref();
    write_text(&dir.join("summary.csv"), &summary_csv(summary))?;
    write_text(&dir.join("aggregate.txt"), &aggregate_text(summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e10] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn load_errors_carry_path_and_location() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("m.csv");
        fs::write(&good, "0,1\n1,0\n").unwrap();
        let spec = load_loss_matrix(&good).unwrap();
        assert_eq!((spec.horizon(), spec.d()), (2, 2));

        let bad = dir.path().join("bad.csv");
        fs::write(&bad, "0,1\n1.5,0\n").unwrap();
        let err = load_loss_matrix(&bad).unwrap_err().to_string();
        assert!(err.contains("bad.csv") && err.contains('2'), "{err}");

        let empty = dir.path().join("empty.csv");
        fs::write(&empty, "").unwrap();
        assert_eq!(load_loss_matrix(&empty).unwrap_err().exit_code(), 1);
        assert_eq!(load_loss_matrix(dir.path().join("missing.csv")).unwrap_err().exit_code(), 2);
    }
}
