//! The `dpope` command line.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpope_core::adversaries::AdversarySpec;
use dpope_core::algorithms::{svt_params, AdaptiveParams, SDConfig};
use dpope_core::dp::{NoiseMode, PrivacyParams};
use dpope_core::oco::{ftrl_lambda, ExpertsBackend, OCOConfig};

use crate::audit::{audit_all_neighbours, pure_claim, AuditParams};
use crate::builtin::{expert_adversary, oco_workload};
use crate::experiment::{run_experiment, Algorithm, ExperimentConfig, OcoAlgorithm, RunSummary, Workload};
use crate::io::{fmt_f64, load_loss_matrix, write_text};
use crate::lemmas::check_concentration_lemmas;
use crate::verify::verify_marginal;
use crate::{HarnessError, Result};

/// Exit code of a verification subcommand whose check failed.
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dpope", version, about = "Differentially private prediction from experts: experiments and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play seeded games and write traces and a summary.
    Run(RunArgs),
    /// Print derived parameters as name=value lines.
    Params(ParamsArgs),
    /// Compare shrinking-dartboard marginals with exact MW marginals.
    VerifyMarginal(VerifyArgs),
    /// Exact privacy audit of the shrinking dartboard on tiny instances.
    Audit(AuditArgs),
    /// Monte-Carlo checks of the Chernoff and geometric tail bounds.
    CheckLemmas(LemmaArgs),
    /// Run a grid of experiments from a key=value config file.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgName {
    Mw,
    Sd,
    SdBatch,
    Limited,
    Svt,
    SvtAda,
    Ftrl,
    OcoExperts,
}

impl AlgName {
    pub fn parse(s: &str) -> Result<Self> {
        <AlgName as ValueEnum>::from_str(s, false).map_err(|_| HarnessError::validation(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Args)]
pub struct ParamsArgs {
    #[arg(long, value_enum)]
    pub alg: AlgName,
    #[arg(long = "T")]
    pub t: u64,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Failure probability of the sparse-vector algorithms.
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    /// Bound on the best expert's loss (svt, oco-experts).
    #[arg(long, default_value_t = 0.0)]
    pub lstar: f64,
    /// Learning rate for mw; defaults to min(1/2, √(ln d / T)).
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub params: ParamsArgs,
    /// Loss matrix CSV or `builtin:<name>`.
    #[arg(long)]
    pub adversary: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub runs: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip the per-run trace files.
    #[arg(long)]
    pub summary_only: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long = "T")]
    pub t: u64,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub eta: f64,
    /// Switching budget; defaults to T + 1 (never binds).
    #[arg(long = "K")]
    pub k: Option<u64>,
    #[arg(long)]
    pub runs: u64,
    #[arg(long)]
    pub seed: u64,
    /// Oblivious sequence; defaults to a seeded uniform random matrix.
    #[arg(long, default_value = "builtin:random")]
    pub adversary: String,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[arg(long = "T")]
    pub t: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub eta: f64,
    #[arg(long)]
    pub p: f64,
    /// 1-based round in which the neighbouring sequences differ.
    #[arg(long)]
    pub diff_round: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "K")]
    pub k: Option<u64>,
    /// Defaults to η/p + 16Tpη.
    #[arg(long)]
    pub claimed_eps: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct LemmaArgs {
    #[arg(long)]
    pub runs: u64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
}

fn default_mw_eta(d: usize, horizon: u64) -> f64 {
    ((d as f64).ln() / horizon as f64).sqrt().clamp(1e-6, 0.5)
}

fn privacy(p: &ParamsArgs) -> Result<PrivacyParams> {
    Ok(PrivacyParams::new(p.eps, p.delta)?)
}

fn experts_algorithm(p: &ParamsArgs) -> Result<Algorithm> {
    let alg = match p.alg {
        AlgName::Mw => Algorithm::Mw { eta: p.eta.unwrap_or_else(|| default_mw_eta(p.d, p.t)) },
        AlgName::Sd if p.delta == 0.0 => Algorithm::Sd(SDConfig::pure(p.t, p.d, p.eps)?),
        AlgName::Sd => Algorithm::Sd(SDConfig::approx(p.t, p.d, p.eps, p.delta)?),
        AlgName::SdBatch => Algorithm::Sd(SDConfig::batched(p.t, p.d, p.eps, p.delta)?),
        AlgName::Limited => Algorithm::Limited(privacy(p)?),
        AlgName::Svt => Algorithm::Svt(svt_params(p.t, p.d, p.eps, p.delta, p.beta, p.lstar)?),
        AlgName::SvtAda => {
            AdaptiveParams::new(p.t, p.d, p.eps, p.beta)?;
            Algorithm::SvtAda { epsilon: p.eps, beta: p.beta }
        }
        AlgName::Ftrl | AlgName::OcoExperts => unreachable!("continuous algorithms are built separately"),
    };
    Ok(alg)
}

fn oco_config(p: &ParamsArgs, lipschitz: f64, smooth_beta: f64) -> Result<OCOConfig> {
    let params = privacy(p)?;
    let lambda = if params.is_pure() {
        32.0 * smooth_beta.max(f64::MIN_POSITIVE)
    } else {
        ftrl_lambda(smooth_beta, lipschitz, 1.0, p.t as f64, p.d, p.eps, p.delta)?
    };
    let config = OCOConfig {
        dim: p.d,
        radius: 1.0,
        lipschitz,
        smooth_beta,
        lambda,
        params,
        cover_rho: (1.0 / (lipschitz * p.t as f64)).min(1.0),
    };
    config.validate()?;
    Ok(config)
}

fn builtin_name(adversary: &str) -> Option<&str> {
    adversary.strip_prefix("builtin:")
}

/// Builds the experiment for `run` (also used by `sweep`).
pub fn build_experiment(args: &RunArgs) -> Result<ExperimentConfig> {
    let p = &args.params;
    let workload = match p.alg {
        AlgName::Ftrl | AlgName::OcoExperts => {
            let name = builtin_name(&args.adversary)
                .ok_or_else(|| HarnessError::validation("ftrl and oco-experts take builtin:<name> loss families"))?;
            let w = oco_workload(name, p.d, p.t, args.seed)?;
            let config = oco_config(p, w.lipschitz, w.smooth_beta)?;
            let algorithm = if p.alg == AlgName::Ftrl {
                if config.params.is_pure() {
                    return Err(HarnessError::validation("ftrl needs --delta in (0, 1)"));
                }
                OcoAlgorithm::Ftrl { config, noise: NoiseMode::Calibrated }
            } else {
                OcoAlgorithm::Experts { config, backend: ExpertsBackend::Svt { beta: p.beta, l_star: p.lstar } }
            };
            Workload::Oco { algorithm, losses: w.losses, comparator: w.comparator }
        }
        _ => {
            let adversary: AdversarySpec = match builtin_name(&args.adversary) {
                Some(name) => expert_adversary(name, p.d, p.t, p.eps, args.seed)?,
                None => load_loss_matrix(&args.adversary)?,
            };
            if adversary.horizon() != p.t || adversary.d() != p.d {
                return Err(HarnessError::validation(format!(
                    "adversary is {}×{} but --T {} --d {} were given",
                    adversary.horizon(),
                    adversary.d(),
                    p.t,
                    p.d
                )));
            }
            Workload::Experts { algorithm: experts_algorithm(p)?, adversary }
        }
    };
    Ok(ExperimentConfig::new(workload, args.runs, args.seed).with_output(&args.out, !args.summary_only))
}

/// `name=value` lines for the derived parameters.
pub fn params_lines(p: &ParamsArgs) -> Result<Vec<(String, f64)>> {
    let kv = |k: &str, v: f64| (k.to_string(), v);
    let lines = match p.alg {
        AlgName::Mw => vec![kv("eta", p.eta.unwrap_or_else(|| default_mw_eta(p.d, p.t)))],
        AlgName::Sd | AlgName::SdBatch => {
            let Algorithm::Sd(c) = experts_algorithm(p)? else { unreachable!() };
            let mut v = vec![
                kv("eta", c.eta()),
                kv("p", c.p_switch()),
                kv("K", c.k_budget() as f64),
                kv("B", c.batch_size() as f64),
                kv("eps0", c.epsilon0()),
                kv("eps_theorem", c.theorem_epsilon(p.t)),
            ];
            if p.alg == AlgName::SdBatch {
                let (lo, hi) = SDConfig::batched_window(p.t, p.d, p.delta);
                v.push(kv("eps_window_lo", lo));
                v.push(kv("eps_window_hi", hi));
            }
            v
        }
        AlgName::Limited => {
            let pp = privacy(p)?;
            vec![kv("eps", pp.epsilon()), kv("delta", pp.delta())]
        }
        AlgName::Svt => {
            let c = svt_params(p.t, p.d, p.eps, p.delta, p.beta, p.lstar)?;
            vec![kv("K", c.k_switches as f64), kv("eta", c.eta), kv("B", c.svt_log_term), kv("L", c.threshold)]
        }
        AlgName::SvtAda => {
            let a = AdaptiveParams::new(p.t, p.d, p.eps, p.beta)?;
            vec![
                kv("eps0", a.epsilon0),
                kv("K", a.k_switches as f64),
                kv("eta", a.eta),
                kv("B", a.log_term),
                kv("doubling_margin", a.doubling_margin),
                kv("max_epochs", a.max_epochs as f64),
            ]
        }
        AlgName::Ftrl => {
            if !(p.delta > 0.0) {
                return Err(HarnessError::validation("ftrl needs --delta in (0, 1)"));
            }
            let lambda = ftrl_lambda(1.0, 1.0, 1.0, p.t as f64, p.d, p.eps, p.delta)?;
            let levels = dpope_core::dp::BinaryTree::levels_for(p.t);
            vec![kv("lambda", lambda), kv("tree_levels", levels as f64)]
        }
        AlgName::OcoExperts => {
            let rho = 1.0 / p.t as f64;
            let h = dpope_core::oco::cover_spacing(p.d, rho);
            vec![kv("rho", rho), kv("grid_spacing", h), kv("discretization", 1.0)]
        }
    };
    Ok(lines)
}

fn print_summary(summary: &RunSummary) {
    let agg = summary.aggregate();
    println!("algorithm={}", summary.algorithm);
    println!("runs={}", summary.rows.len());
    println!("regret_mean={}", agg.regret.mean);
    println!("regret_std={}", agg.regret.std);
    println!("switches_mean={}", agg.switches.mean);
}

fn run_command(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run(args) => {
            let summary = run_experiment(&build_experiment(&args)?)?;
            print_summary(&summary);
            Ok(0)
        }
        Command::Params(p) => {
            for (k, v) in params_lines(&p)? {
                println!("{k}={v}");
            }
            Ok(0)
        }
        Command::VerifyMarginal(v) => {
            let k = v.k.unwrap_or(v.t + 1);
            // Any ε with η ≤ pε is fine here; the verifier never charges it.
            let eps = v.eta / v.p + 16.0 * v.t as f64 * v.p * v.eta;
            let cfg = SDConfig::new(v.eta, v.p, k, 1, PrivacyParams::pure(eps.max(f64::MIN_POSITIVE))?, eps)?;
            let adversary = match builtin_name(&v.adversary) {
                Some(name) => expert_adversary(name, v.d, v.t, 1.0, v.seed)?,
                None => load_loss_matrix(&v.adversary)?,
            };
            if (adversary.horizon(), adversary.d()) != (v.t, v.d) {
                return Err(HarnessError::validation("adversary shape differs from --T/--d"));
            }
            let r = verify_marginal(&cfg, &adversary, v.runs, v.seed)?;
            println!("max_tv={}", r.max_tv);
            println!("bound={}", r.bound);
            println!("slack={}", r.slack);
            println!("vacuous={}", r.vacuous);
            println!("passed={}", r.passed);
            Ok(if r.passed { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Audit(a) => {
            let params = AuditParams { eta: a.eta, p: a.p, k_budget: a.k.unwrap_or(a.t as u64 + 1) };
            let claim = a.claimed_eps.unwrap_or_else(|| pure_claim(&params, a.t));
            let report = audit_all_neighbours(&params, a.t, a.d, Some(a.diff_round), claim)?;
            write_text(&a.out, &report.report_text())?;
            println!("max_log_ratio={}", fmt_f64(report.max_log_ratio));
            println!("claimed_epsilon={}", fmt_f64(claim));
            println!("passed={}", report.passed);
            Ok(if report.passed { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::CheckLemmas(l) => {
            let report = check_concentration_lemmas(l.runs, l.seed)?;
            print!("{}", report.text());
            Ok(if report.passed() { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Sweep(s) => {
            let text = std::fs::read_to_string(&s.config).map_err(|e| HarnessError::io(&s.config, e))?;
            let sweep = crate::sweep::parse_sweep(&text)?;
            let out = crate::sweep::run_sweep(&sweep)?;
            for (x, summary) in &out.summaries {
                println!("x={x} regret_mean={}", summary.mean_regret());
            }
            if let Some((slope, se)) = out.slope {
                println!("loglog_slope={slope}");
                println!("loglog_slope_se={se}");
            }
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
