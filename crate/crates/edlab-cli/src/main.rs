//! `edlab`: runs verification suites, classifies deformations and prints constants.
//!
//! Exit codes: 0 every check passed (or a determinate verdict), 1 a check
//! failed (or the verdict is inconclusive), 2 usage or input error.

mod render;

use clap::{Args, Parser, Subcommand};
use edlab::chart_calc::Fixture;
use edlab::integrate::HaarSampler;
use edlab::lie_core::MatrixJson;
use edlab::obstruct::{classify, ObstructionVerdict, Verdict};
use edlab::suites::{constants_row, run_suite, ConstantsRow, Suite, SuiteConfig, CLASSIFY_MC_SAMPLES, OBSTRUCTION_TOL};
use edlab::{Error, GrassmannModel};
use render::{Report, RunEcho};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable holding the default worker count.
const JOBS_ENV: &str = "EDLAB_JOBS";

#[derive(Parser, Debug)]
#[command(name = "edlab", version, about = "Numerical verification of second-order Einstein deformation identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run verification suites and write a JSON report.
    Verify(VerifyArgs),
    /// Second-order verdict for the deformation generated by a matrix in su(n+2).
    Classify(ClassifyArgs),
    /// Curvature and obstruction constants of Gr₂(ℂ^{n+2}).
    Constants(ConstantsArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Worker threads; defaults to the EDLAB_JOBS environment variable, then to all cores.
    #[arg(long, env = JOBS_ENV)]
    jobs: Option<usize>,
    /// Write JSON here and print an aligned table to stdout instead of JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// One of algebra, chart, grassmann, integrals, obstruction, all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Grassmannian parameter (N = n + 2), at least 2.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Override every residual tolerance; Monte Carlo z thresholds are fixed.
    #[arg(long)]
    tol: Option<f64>,
    /// Monte Carlo samples per estimate (default: 100000, or 10000 per verdict).
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Quadrature points per axis on torus3.
    #[arg(long, default_value_t = 9)]
    grid: usize,
    /// Chart fixtures (torus3, sphere3, cp2); repeat or comma-separate. Default: all.
    #[arg(long, value_delimiter = ',')]
    fixture: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// Matrix JSON file {"n", "re", "im"}.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Tolerance of the pointwise Killing-potential test.
    #[arg(long, default_value_t = OBSTRUCTION_TOL)]
    tol: f64,
    #[arg(long, default_value_t = CLASSIFY_MC_SAMPLES)]
    mc_samples: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    /// Values of n: repeat, comma-separate, or give a range such as 2-6.
    #[arg(long, value_delimiter = ',', default_value = "2-6")]
    n: Vec<String>,
    #[command(flatten)]
    common: Common,
}

/// Failure to run at all; maps to exit code 2.
struct UsageError(String);

impl From<Error> for UsageError {
    fn from(e: Error) -> Self {
        UsageError(e.to_string())
    }
}

type CliResult<T> = Result<T, UsageError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Constants(a) => constants(a),
    };
    match outcome {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn init_jobs(jobs: Option<usize>) -> CliResult<()> {
    match jobs {
        None => Ok(()),
        Some(0) => Err(UsageError("--jobs must be positive".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| UsageError(format!("thread pool: {e}"))),
    }
}

/// Writes JSON to `out` and the table to stdout, or JSON to stdout.
fn emit<T: Serialize>(value: &T, table: impl FnOnce() -> String, out: Option<&Path>) -> CliResult<()> {
    let json = serde_json::to_string_pretty(value).map_err(|e| UsageError(format!("serialize: {e}")))?;
    match out {
        Some(path) => {
            std::fs::write(path, json + "\n").map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
            print!("{}", table());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> CliResult<ExitCode> {
    init_jobs(a.common.jobs)?;
    let suite: Suite = a.suite.parse()?;
    let fixtures = if a.fixture.is_empty() {
        Fixture::ALL.to_vec()
    } else {
        a.fixture.iter().map(|f| Fixture::parse(f.trim())).collect::<edlab::Result<Vec<_>>>()?
    };
    let cfg = SuiteConfig { n: a.n, seed: a.seed, tol: a.tol, mc_samples: a.mc_samples, grid: a.grid, fixtures, ..SuiteConfig::default() };
    cfg.validate()?;
    let checks = run_suite(suite, &cfg)?;
    let report = Report::new(RunEcho::verify(suite, &cfg), checks.checks);
    emit(&report, || render::report_table(&report), a.common.out.as_deref())?;
    Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Verdict JSON: the matrix path followed by the verdict fields.
#[derive(Serialize)]
struct VerdictOutput<'a> {
    matrix_file: String,
    #[serde(flatten)]
    verdict: &'a ObstructionVerdict,
    seed: u64,
    mc_samples: usize,
    tol: f64,
}

fn classify_cmd(a: ClassifyArgs) -> CliResult<ExitCode> {
    init_jobs(a.common.jobs)?;
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(UsageError(format!("--tol must be positive and finite, got {}", a.tol)));
    }
    if a.mc_samples < 2 {
        return Err(UsageError("--mc-samples must be at least 2".into()));
    }
    let text = std::fs::read_to_string(&a.matrix).map_err(|e| UsageError(format!("{}: {e}", a.matrix.display())))?;
    let m = MatrixJson::parse(&text)?;
    let model = GrassmannModel::build(m.n())?;
    let sampler = HaarSampler::for_model(&model, a.seed);
    let v = classify(&model, &m, &sampler, a.mc_samples, a.tol)?;
    let out = VerdictOutput { matrix_file: a.matrix.display().to_string(), verdict: &v, seed: a.seed, mc_samples: a.mc_samples, tol: a.tol };
    emit(&out, || render::verdict_table(&out.matrix_file, &v), a.common.out.as_deref())?;
    Ok(if v.verdict == Verdict::Inconclusive { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

/// Parses `2`, `2,3` and `2-6` into a list of `n`.
fn parse_ns(specs: &[String]) -> CliResult<Vec<usize>> {
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| UsageError(format!("invalid n {s:?}")));
    let mut ns = Vec::new();
    for s in specs {
        match s.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(UsageError(format!("empty range {s:?}")));
                }
                ns.extend(lo..=hi);
            }
            None => ns.push(num(s)?),
        }
    }
    if let Some(bad) = ns.iter().find(|&&n| n < 2) {
        return Err(UsageError(format!("n must be at least 2, got {bad}")));
    }
    Ok(ns)
}

#[derive(Serialize)]
struct ConstantsOutput {
    tool: &'static str,
    version: &'static str,
    rows: Vec<ConstantsRow>,
}

fn constants(a: ConstantsArgs) -> CliResult<ExitCode> {
    init_jobs(a.common.jobs)?;
    let ns = parse_ns(&a.n)?;
    let rows = ns.into_iter().map(constants_row).collect::<edlab::Result<Vec<_>>>()?;
    let out = ConstantsOutput { tool: render::TOOL, version: render::VERSION, rows };
    // Without --out stdout carries the JSON, so the table goes to stderr.
    if a.common.out.is_none() {
        eprint!("{}", render::constants_table(&out.rows));
    }
    emit(&out, || render::constants_table(&out.rows), a.common.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_lists_and_ranges() {
        assert_eq!(parse_ns(&["2-4".into(), "7".into()]).ok().unwrap(), vec![2, 3, 4, 7]);
        assert!(parse_ns(&["1".into()]).is_err());
        assert!(parse_ns(&["4-2".into()]).is_err());
        assert!(parse_ns(&["x".into()]).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
