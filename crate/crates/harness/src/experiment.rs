//! Seeded Monte-Carlo experiments.

use std::path::PathBuf;

use dpope_core::adversaries::AdversarySpec;
use dpope_core::algorithms::{
    regret, run_limited_updates, run_multiplicative_weights, run_shrinking_dartboard, run_svt_adaptive,
    run_svt_realizable, AdaptiveParams, GameTrace, SDConfig, SVTRealizableConfig,
};
use dpope_core::dp::{compose_advanced_heterogeneous, compose_basic, NoiseMode, PrivacyLedger, PrivacyParams};
use dpope_core::oco::{run_dp_ftrl, run_oco_via_experts, ExpertsBackend, OCOConfig, SmoothLoss};
use dpope_core::rng::{derive, StreamRng};
use rayon::prelude::*;

use crate::io::{fmt_f64, write_summary, write_text, SCHEMA_HEADER};
use crate::{HarnessError, Result};

/// Experts algorithms with their derived parameters.
#[derive(Debug, Clone)]
pub enum Algorithm {
    Mw { eta: f64 },
    /// Plain or batched shrinking dartboard, depending on the batch size.
    Sd(SDConfig),
    Limited(PrivacyParams),
    Svt(SVTRealizableConfig),
    SvtAda { epsilon: f64, beta: f64 },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Mw { .. } => "mw",
            Algorithm::Sd(c) if c.batch_size() > 1 => "sd-batch",
            Algorithm::Sd(_) => "sd",
            Algorithm::Limited(_) => "limited",
            Algorithm::Svt(_) => "svt",
            Algorithm::SvtAda { .. } => "svt-ada",
        }
    }

    fn play(&self, adversary: &AdversarySpec, run: u64, rng: &mut StreamRng) -> Result<GameTrace> {
        let trace = match self {
            Algorithm::Mw { eta } => run_multiplicative_weights(*eta, adversary, run, rng)?,
            Algorithm::Sd(c) => run_shrinking_dartboard(c, adversary, run, rng)?,
            Algorithm::Limited(p) => run_limited_updates(adversary, *p, run, rng)?,
            Algorithm::Svt(c) => run_svt_realizable(c, adversary, run, rng)?,
            Algorithm::SvtAda { epsilon, beta } => {
                run_svt_adaptive(adversary.horizon(), adversary.d(), *epsilon, *beta, adversary, run, rng)?
            }
        };
        Ok(trace)
    }

    /// Privacy parameters the ledger is composed against; `None` for MW.
    fn target(&self) -> Option<PrivacyParams> {
        match self {
            Algorithm::Mw { .. } => None,
            Algorithm::Sd(c) => Some(c.params()),
            Algorithm::Limited(p) => Some(*p),
            Algorithm::Svt(c) => Some(c.params),
            Algorithm::SvtAda { epsilon, .. } => PrivacyParams::pure(*epsilon).ok(),
        }
    }

    fn theory(&self, horizon: u64, d: usize) -> Vec<(String, f64)> {
        let kv = |k: &str, v: f64| (k.to_string(), v);
        match self {
            Algorithm::Mw { eta } => vec![kv("eta", *eta), kv("regret_slack", (d as f64).ln() / eta)],
            Algorithm::Sd(c) => vec![
                kv("eta", c.eta()),
                kv("p", c.p_switch()),
                kv("K", c.k_budget() as f64),
                kv("B", c.batch_size() as f64),
                kv("eps_theorem", c.theorem_epsilon(horizon)),
            ],
            Algorithm::Limited(p) => vec![kv("eps", p.epsilon()), kv("delta", p.delta())],
            Algorithm::Svt(c) => vec![
                kv("K", c.k_switches as f64),
                kv("eta", c.eta),
                kv("L", c.threshold),
                kv("B", c.svt_log_term),
                kv("regret_bound", (c.k_switches + 1) as f64 * (c.threshold + 8.0 * c.svt_log_term / c.params.epsilon())),
            ],
            Algorithm::SvtAda { epsilon, beta } => match AdaptiveParams::new(horizon, d, *epsilon, *beta) {
                Ok(a) => vec![
                    kv("eps0", a.epsilon0),
                    kv("K", a.k_switches as f64),
                    kv("eta", a.eta),
                    kv("doubling_margin", a.doubling_margin),
                    kv("max_epochs", a.max_epochs as f64),
                ],
                Err(_) => Vec::new(),
            },
        }
    }
}

/// Continuous-action algorithms over the unit-radius ball of the configuration.
#[derive(Debug, Clone)]
pub enum OcoAlgorithm {
    Ftrl { config: OCOConfig, noise: NoiseMode },
    Experts { config: OCOConfig, backend: ExpertsBackend },
}

impl OcoAlgorithm {
    fn config(&self) -> &OCOConfig {
        match self {
            OcoAlgorithm::Ftrl { config, .. } | OcoAlgorithm::Experts { config, .. } => config,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Workload {
    Experts { algorithm: Algorithm, adversary: AdversarySpec },
    Oco { algorithm: OcoAlgorithm, losses: Vec<SmoothLoss>, comparator: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub workload: Workload,
    pub runs: u64,
    pub master_seed: u64,
    /// Output directory; nothing is written when `None`.
    pub out: Option<PathBuf>,
    /// Write one trace CSV per run under `out/traces/`.
    pub write_traces: bool,
}

impl ExperimentConfig {
    pub fn new(workload: Workload, runs: u64, master_seed: u64) -> Self {
        Self { workload, runs, master_seed, out: None, write_traces: false }
    }

    pub fn with_output(mut self, dir: impl Into<PathBuf>, traces: bool) -> Self {
        self.out = Some(dir.into());
        self.write_traces = traces;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(HarnessError::validation("runs must be at least 1"));
        }
        match &self.workload {
            Workload::Experts { algorithm: Algorithm::Svt(c), .. } => c.validate()?,
            Workload::Oco { algorithm, losses, comparator } => {
                algorithm.config().validate()?;
                if losses.is_empty() || comparator.len() != algorithm.config().dim {
                    return Err(HarnessError::validation("OCO workload needs losses and a comparator of dimension d"));
                }
            }
            Workload::Experts { .. } => {}
        }
        Ok(())
    }

    pub fn horizon(&self) -> u64 {
        match &self.workload {
            Workload::Experts { adversary, .. } => adversary.horizon(),
            Workload::Oco { losses, .. } => losses.len() as u64,
        }
    }

    pub fn d(&self) -> usize {
        match &self.workload {
            Workload::Experts { adversary, .. } => adversary.d(),
            Workload::Oco { algorithm, .. } => algorithm.config().dim,
        }
    }
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub run: u64,
    pub regret: f64,
    pub switches: u64,
    pub eps_composed: f64,
    pub delta_composed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    /// `(percent, value)` pairs, nearest-rank.
    pub quantiles: Vec<(u8, f64)>,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantiles = [5u8, 50, 95]
            .into_iter()
            .map(|q| {
                let rank = ((q as f64 / 100.0) * n).ceil().max(1.0) as usize;
                (q, sorted[rank.min(sorted.len()) - 1])
            })
            .collect();
        Stats { mean, std: var.sqrt(), quantiles }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub regret: Stats,
    pub switches: Stats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algorithm: String,
    pub horizon: u64,
    pub d: usize,
    pub rows: Vec<RunRow>,
    /// Closed-form parameter and bound values at this configuration.
    pub theory: Vec<(String, f64)>,
}

impl RunSummary {
    /// Recomputed from the rows on every call.
    pub fn aggregate(&self) -> Aggregate {
        let regrets: Vec<f64> = self.rows.iter().map(|r| r.regret).collect();
        let switches: Vec<f64> = self.rows.iter().map(|r| r.switches as f64).collect();
        Aggregate { regret: Stats::of(&regrets), switches: Stats::of(&switches) }
    }

    pub fn mean_regret(&self) -> f64 {
        self.aggregate().regret.mean
    }

    pub fn theory_value(&self, key: &str) -> Option<f64> {
        self.theory.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Basic composition for pure targets and single releases; otherwise the
/// heterogeneous advanced bound at the target δ.
pub fn compose_for(ledger: &PrivacyLedger, target: Option<PrivacyParams>) -> (f64, f64) {
    match target {
        Some(p) if !p.is_pure() && ledger.len() > 1 && ledger.events().iter().all(|e| e.delta == 0.0) => {
            match compose_advanced_heterogeneous(ledger, (1.0 / p.delta()).ln()) {
                Ok(l) => (l.epsilon, l.delta),
                Err(_) => {
                    let b = compose_basic(ledger);
                    (b.epsilon, b.delta)
                }
            }
        }
        _ => {
            let b = compose_basic(ledger);
            (b.epsilon, b.delta)
        }
    }
}

/// Stream of run `i`: `derive(master_seed, i)`.
pub fn run_rng(master_seed: u64, run: u64) -> StreamRng {
    derive(master_seed, run)
}

fn trace_path(dir: &std::path::Path, run: u64) -> PathBuf {
    dir.join("traces").join(format!("run_{run:05}.csv"))
}

fn oco_trace_csv(losses: &[f64], points: &[Vec<f64>], switches: Option<&GameTrace>) -> String {
    let mut out = String::from(SCHEMA_HEADER);
    out.push_str("\nt,expert,loss,switch,mechanism\n");
    for (i, l) in losses.iter().enumerate() {
        let (expert, switched, mech) = match switches {
            Some(tr) => {
                let r = &tr.rounds[i];
                (r.expert, r.switched as u8, r.mechanism.as_str())
            }
            None => (0, 0, "ftrl"),
        };
        out.push_str(&format!("{},{expert},{},{switched},{mech}\n", i + 1, fmt_f64(*l)));
    }
    out.push_str("# points\n");
    for (i, p) in points.iter().enumerate() {
        let coords: Vec<String> = p.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&format!("# x,{},{}\n", i + 1, coords.join(",")));
    }
    out
}

fn run_one(config: &ExperimentConfig, run: u64) -> Result<RunRow> {
    let mut rng = run_rng(config.master_seed, run);
    let trace_file = match (&config.out, config.write_traces) {
        (Some(dir), true) => Some(trace_path(dir, run)),
        _ => None,
    };
    match &config.workload {
        Workload::Experts { algorithm, adversary } => {
            let trace = algorithm.play(adversary, run, &mut rng)?;
            if let Some(path) = trace_file {
                crate::io::write_trace(path, &trace)?;
            }
            let (eps, delta) = compose_for(&trace.ledger, algorithm.target());
            Ok(RunRow { run, regret: regret(&trace), switches: trace.switches(), eps_composed: eps, delta_composed: delta })
        }
        Workload::Oco { algorithm, losses, comparator } => {
            let best: f64 = losses.iter().map(|f| f.value(comparator)).sum();
            let (incurred, switches, ledger, text) = match algorithm {
                OcoAlgorithm::Ftrl { config: c, noise } => {
                    let tr = run_dp_ftrl(c, losses, noise.clone(), &mut rng)?;
                    let text = trace_file.as_ref().map(|_| oco_trace_csv(&tr.losses, &tr.points, None));
                    (tr.total_loss(), 0, tr.ledger, text)
                }
                OcoAlgorithm::Experts { config: c, backend } => {
                    let res = run_oco_via_experts(c, losses, backend, &mut rng)?;
                    let text = trace_file.as_ref().map(|_| {
                        let losses: Vec<f64> = res.trace.rounds.iter().map(|r| r.loss).collect();
                        let points: Vec<Vec<f64>> = res.played_points().into_iter().map(<[f64]>::to_vec).collect();
                        oco_trace_csv(&losses, &points, Some(&res.trace))
                    });
                    (res.trace.incurred(), res.trace.switches(), res.trace.ledger, text)
                }
            };
            if let (Some(path), Some(text)) = (trace_file, text) {
                write_text(&path, &text)?;
            }
            let (eps, delta) = compose_for(&ledger, Some(algorithm.config().params));
            Ok(RunRow { run, regret: incurred - best, switches, eps_composed: eps, delta_composed: delta })
        }
    }
}

fn label_and_theory(config: &ExperimentConfig) -> (String, Vec<(String, f64)>) {
    let (horizon, d) = (config.horizon(), config.d());
    match &config.workload {
        Workload::Experts { algorithm, .. } => (algorithm.name().to_string(), algorithm.theory(horizon, d)),
        Workload::Oco { algorithm, .. } => {
            let c = algorithm.config();
            match algorithm {
                OcoAlgorithm::Ftrl { .. } => ("ftrl".into(), vec![("lambda".into(), c.lambda), ("L".into(), c.lipschitz)]),
                OcoAlgorithm::Experts { .. } => (
                    "oco-experts".into(),
                    vec![("rho".into(), c.cover_rho), ("discretization".into(), horizon as f64 * c.lipschitz * c.cover_rho)],
                ),
            }
        }
    }
}

/// Plays `runs` independent games in parallel. Run `i` uses the stream
/// `derive(master_seed, i)` and the adversary's run-`i` source, so the
/// result does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let rows = (0..config.runs).into_par_iter().map(|run| run_one(config, run)).collect::<Result<Vec<_>>>()?;
    let (algorithm, theory) = label_and_theory(config);
    let summary = RunSummary { algorithm, horizon: config.horizon(), d: config.d(), rows, theory };
    if let Some(dir) = &config.out {
        write_summary(dir, &summary)?;
    }
    Ok(summary)
}
