//! The `conemetric` command-line frontend.
//!
//! Every subcommand writes one JSON (or CSV, for `report`) document, either
//! to `--output` or to standard output. Reports carry no timestamps or host
//! data, so identical arguments give byte-identical files.
//!
//! Exit codes: `0` success, `1` usage or input error, `2` an axiom or
//! hypothesis failed (a finding, not a crash), `3` the requested contraction
//! family is infeasible for the map.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contraction::{self, ContractionEstimate, Family, PairSample, Params, DEFAULT_GRID_STEP};
use crate::error::{Error, Result};
use crate::ordered_space::verify_cone_axioms;
use crate::report::{real, to_json};
use crate::sampling::seeded;
use crate::solver::{self, check_hypothesis, Horizons, HypothesisReport, Orbit, SolveConfig, SolveResult};
use crate::spaces::{make_map, Point, Space, SpaceId};
use crate::verification::{self, shrink_witness, AxiomReport, Mode, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FINDING: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "conemetric",
    version,
    about = "Double controlled cone metric spaces: axiom falsification and fixed-point audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Falsify the cone and metric axioms of a space.
    Verify(VerifyArgs),
    /// Fit a contraction family, iterate the map, and audit the hypotheses.
    Solve(SolveArgs),
    /// Audit the fixed-point hypotheses on a precomputed orbit.
    Hypotheses(HypothesesArgs),
    /// Merge solve reports into a CSV summary table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Random,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Space id: halfline, cross, cross-unit, interval.
    #[arg(long)]
    space: String,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: ModeArg,
    /// Random samples (random mode and cone axioms).
    #[arg(long, default_value_t = 10_000)]
    n_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HorizonArgs {
    #[arg(long, default_value_t = 64)]
    i_horizon: usize,
    #[arg(long, default_value_t = 64)]
    m_horizon: usize,
    #[arg(long, default_value_t = 8)]
    stab_window: usize,
    #[arg(long, default_value_t = 1e-9)]
    stab_tol: f64,
}

impl HorizonArgs {
    fn horizons(&self) -> Horizons {
        Horizons {
            i_horizon: self.i_horizon,
            m_horizon: self.m_horizon,
            stab_window: self.stab_window,
            stab_tol: self.stab_tol,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    space: String,
    /// Map id: halving, quartering, identity, const:<point>.
    #[arg(long)]
    map: String,
    /// Contraction family: banach, kannan, reich.
    #[arg(long)]
    family: String,
    /// Start point (`H:0.5` / `V:0.25` on the cross, a decimal elsewhere).
    #[arg(long)]
    x0: Option<String>,
    /// Random pairs added to the grid pairs for the contraction fit.
    #[arg(long, default_value_t = 10_000)]
    n_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid step of the Kannan/Reich search (a fraction like `1/48` is accepted).
    #[arg(long, value_parser = parse_real)]
    grid_step: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[command(flatten)]
    horizons: HorizonArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HypothesesArgs {
    #[arg(long)]
    space: String,
    /// A solve report (its `audit_orbit`, else `orbit`) or a bare orbit.
    #[arg(long)]
    orbit: PathBuf,
    #[arg(long)]
    family: String,
    /// Comma-separated constants, e.g. `0.5` or `1/3,1/3`.
    #[arg(long)]
    params: String,
    #[command(flatten)]
    horizons: HorizonArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Solve reports to merge.
    files: Vec<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses a decimal or a fraction `p/q`.
fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
            p / q
        }
        None => s.parse().map_err(|_| format!("not a number: `{s}`"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("not a finite number: `{s}`"))
    }
}

fn parse_params(family: Family, s: &str) -> Result<Params> {
    let values = s.split(',').map(parse_real).collect::<std::result::Result<Vec<_>, _>>().map_err(Error::Parse)?;
    let params = Params::from_values(family, &values)?;
    params.validate()?;
    Ok(params)
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Verify(a) => cmd_verify(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Hypotheses(a) => cmd_hypotheses(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn space(id: &str) -> Result<Space> {
    Ok(Space::from_id(id.parse::<SpaceId>()?))
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub space: SpaceId,
    pub mode: Mode,
    pub seed: u64,
    pub n_samples: usize,
    pub verdict: Verdict,
    pub total_violations: usize,
    pub axioms: Vec<AxiomReport>,
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let s = space(&a.space)?;
    let mode = match a.mode {
        ModeArg::Exhaustive => Mode::Exhaustive,
        ModeArg::Random => Mode::Random { n: a.n_samples, seed: a.seed },
    };
    let mut suite = verify_cone_axioms(&s.target().cone, &mut seeded(a.seed), a.n_samples);
    suite.extend(verification::verify_dcm(&s, mode));
    suite.push(verification::verify_controlled(&s, mode));
    suite.push(verification::verify_cm(&s, mode));
    let axioms: Vec<AxiomReport> = suite.into_reports().iter().map(|r| shrink_witness(r, &s)).collect();

    let verdict = if axioms.iter().any(|r| r.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if axioms.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    let report = VerifyReport {
        command: "verify",
        space: s.id(),
        mode,
        seed: a.seed,
        n_samples: a.n_samples,
        verdict,
        total_violations: axioms.iter().map(|r| r.violations.len()).sum(),
        axioms,
    };
    emit(a.output.as_deref(), &to_json(&report))?;
    for r in &report.axioms {
        eprintln!("{:?}: {:?} ({} checked, {} violations)", r.axiom, r.verdict, r.checked, r.violations.len());
    }
    Ok(if verdict == Verdict::Fail { EXIT_FINDING } else { EXIT_OK })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRunConfig {
    pub n_samples: usize,
    pub seed: u64,
    #[serde(with = "real")]
    pub grid_step: f64,
    #[serde(with = "real")]
    pub tol: f64,
    pub max_iter: usize,
    pub horizons: Horizons,
}

/// The full chain of a `solve` run: fit → iterate → audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub command: String,
    pub space: SpaceId,
    pub map: String,
    pub family: Family,
    pub x0: Point,
    pub config: SolveRunConfig,
    pub contraction: ContractionEstimate,
    /// Absent when the fit is infeasible.
    pub solve: Option<SolveResult>,
    pub orbit: Option<Orbit>,
    pub audit_orbit: Option<Orbit>,
}

fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let s = space(&a.space)?;
    let t = make_map(&a.map, &s)?;
    let family: Family = a.family.parse()?;
    let x0 = match &a.x0 {
        Some(lit) => s.parse_point(lit)?,
        None => s.default_start(),
    };
    let config = SolveConfig { max_iter: a.max_iter, tol: a.tol, horizons: a.horizons.horizons() };
    let run_config = SolveRunConfig {
        n_samples: a.n_samples,
        seed: a.seed,
        grid_step: a.grid_step.unwrap_or(DEFAULT_GRID_STEP),
        tol: a.tol,
        max_iter: a.max_iter,
        horizons: config.horizons,
    };
    let pairs = contraction::sample_pairs(&s, PairSample::GridAndRandom { n: a.n_samples, seed: a.seed });
    let estimate = contraction::estimate(&s, &t, family, &pairs, run_config.grid_step)?;

    let mut report = SolveReport {
        command: "solve".into(),
        space: s.id(),
        map: t.name(),
        family,
        x0,
        config: run_config,
        contraction: estimate.clone(),
        solve: None,
        orbit: None,
        audit_orbit: None,
    };
    let params = match estimate.params {
        Some(p) if estimate.feasible => p,
        _ => {
            emit(a.output.as_deref(), &to_json(&report))?;
            eprintln!("{family} contraction is infeasible for {} on {}", t.name(), s.id());
            return Ok(EXIT_INFEASIBLE);
        }
    };

    let mut result = solver::solve(&s, &t, x0, &params, &config)?;
    report.orbit = result.orbit.take();
    report.audit_orbit = result.audit_orbit.take();
    let converged = result.fixed_point.is_some();
    let pass = result.hypothesis.verdict == Verdict::Pass;
    eprintln!(
        "{family} {:?}: status {:?}, residual {:e}, hypothesis {:?}",
        params.values(),
        result.status,
        result.residual,
        result.hypothesis.verdict
    );
    report.solve = Some(result);
    emit(a.output.as_deref(), &to_json(&report))?;
    Ok(if converged && pass { EXIT_OK } else { EXIT_FINDING })
}

/// Extracts an orbit from a solve report or a bare orbit document.
fn read_orbit(path: &Path) -> Result<Orbit> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let doc = ["audit_orbit", "orbit"].iter().find_map(|k| value.get(*k).filter(|v| !v.is_null())).unwrap_or(&value);
    serde_json::from_value(doc.clone()).map_err(|e| Error::Parse(format!("{}: not an orbit: {e}", path.display())))
}

#[derive(Debug, Serialize)]
pub struct HypothesesReport {
    pub command: &'static str,
    pub space: SpaceId,
    pub params: Params,
    pub horizons: Horizons,
    pub orbit_len: usize,
    pub hypothesis: HypothesisReport,
}

fn cmd_hypotheses(a: &HypothesesArgs) -> Result<i32> {
    let s = space(&a.space)?;
    let family: Family = a.family.parse()?;
    let params = parse_params(family, &a.params)?;
    let orbit = read_orbit(&a.orbit)?;
    if let Some(p) = orbit.points.iter().find(|p| !s.contains(p)) {
        return Err(Error::Domain(format!("orbit point {p} is not in the {} space", s.id())));
    }
    let horizons = a.horizons.horizons();
    let hypothesis = check_hypothesis(&s, &orbit, &params, &horizons)?;
    let verdict = hypothesis.verdict;
    let report = HypothesesReport {
        command: "hypotheses",
        space: s.id(),
        params,
        horizons,
        orbit_len: orbit.points.len(),
        hypothesis,
    };
    emit(a.output.as_deref(), &to_json(&report))?;
    Ok(if verdict == Verdict::Pass { EXIT_OK } else { EXIT_FINDING })
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, PartialOrd, Serialize)]
pub struct SummaryRow {
    pub space: String,
    pub map: String,
    pub family: String,
    pub params: String,
    pub q_estimate: String,
    pub q_threshold: String,
    pub residual: String,
    pub verdict: String,
}

fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v}")
    }
}

fn summary_row(path: &Path, text: &str) -> Result<SummaryRow> {
    let report: SolveReport =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("{}: not a solve report: {e}", path.display())))?;
    if report.command != "solve" {
        return Err(Error::Parse(format!("{}: not a solve report", path.display())));
    }
    let params = report.solve.as_ref().map(|r| r.params).or(report.contraction.params);
    let params = params.map(|p| p.values().into_iter().map(fmt_real).collect::<Vec<_>>().join(";")).unwrap_or_default();
    let row = match &report.solve {
        Some(r) => SummaryRow {
            space: report.space.to_string(),
            map: report.map,
            family: report.family.to_string(),
            params,
            q_estimate: fmt_real(r.hypothesis.q_estimate),
            q_threshold: fmt_real(r.hypothesis.q_threshold),
            residual: fmt_real(r.residual),
            verdict: if r.fixed_point.is_some() {
                serde_json::to_value(r.hypothesis.verdict)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default()
            } else {
                "not-converged".into()
            },
        },
        None => SummaryRow {
            space: report.space.to_string(),
            map: report.map,
            family: report.family.to_string(),
            params,
            q_estimate: String::new(),
            q_threshold: String::new(),
            residual: String::new(),
            verdict: "infeasible".into(),
        },
    };
    Ok(row)
}

fn cmd_report(a: &ReportArgs) -> Result<i32> {
    if a.files.is_empty() {
        return Err(Error::Parse("report needs at least one input file".into()));
    }
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for path in &a.files {
        let bytes = fs::read(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        if !seen.insert(hex::encode(Sha256::digest(&bytes))) {
            continue;
        }
        let text = String::from_utf8(bytes).map_err(|_| Error::Parse(format!("{}: not UTF-8", path.display())))?;
        rows.push(summary_row(path, &text)?);
    }
    rows.sort_by(|x, y| x.partial_cmp(y).expect("rows are strings"));
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    emit(a.output.as_deref(), &String::from_utf8(bytes).expect("csv output is UTF-8"))?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_and_fractions() {
        assert_eq!(parse_real("0.5"), Ok(0.5));
        assert_eq!(parse_real("1/3"), Ok(1.0 / 3.0));
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("x").is_err());
    }

    #[test]
    fn params_are_validated() {
        assert_eq!(parse_params(Family::Kannan, "1/3,1/3").unwrap(), Params::Kannan { a: 1.0 / 3.0, b: 1.0 / 3.0 });
        assert!(parse_params(Family::Kannan, "0.5").is_err());
        assert!(parse_params(Family::Banach, "1").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["conemetric"]), EXIT_USAGE);
        assert_eq!(run(["conemetric", "verify", "--space", "nosuch"]), EXIT_USAGE);
        assert_eq!(run(["conemetric", "report"]), EXIT_USAGE);
    }

    #[test]
    fn real_formatting() {
        assert_eq!(fmt_real(f64::INFINITY), "inf");
        assert_eq!(fmt_real(0.1), "0.1");
        assert_eq!(fmt_real(2.0), "2");
    }
}
