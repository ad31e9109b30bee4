//! `intertwine` command-line runner.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails, 2 for
//! usage or configuration errors. `INTERTWINE_THREADS` caps the worker pool.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use intertwine::models::{reference_parameter_sets, Model, ModelId};
use intertwine::oracle::{default_oracle_models, run_oracle_matrix, GridConfig};
use intertwine::verify::{
    ladder_construct_spectrum, run_verification, CheckRecord, LadderLevel, Tolerances,
    VerificationReport, VerifyConfig,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "intertwine",
    version,
    about = "Certify spectral intertwining relations of exactly solvable models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification matrix.
    Verify(VerifyArgs),
    /// Build a spectrum by operator chains and compare with the closed forms.
    Spectrum(SpectrumArgs),
    /// Cross-check closed forms against the finite-difference eigensolver.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone, Debug, Default, Serialize)]
struct ParamArgs {
    /// Coupling g.
    #[arg(long)]
    g: Option<f64>,
    /// Angular momentum l (integer for hydrogen).
    #[arg(long)]
    l: Option<f64>,
    /// Mass m.
    #[arg(long)]
    m: Option<f64>,
    /// Oscillator frequency.
    #[arg(long)]
    omega: Option<f64>,
}

impl ParamArgs {
    fn any(&self) -> bool {
        self.g.is_some() || self.l.is_some() || self.m.is_some() || self.omega.is_some()
    }
}

#[derive(Args, Clone, Debug, Default, Serialize)]
struct TolArgs {
    /// Relative residual of (H - E)ψ [default: 1e-9]
    #[arg(long)]
    tol_eigenpair: Option<f64>,
    /// Norm and imaginary-part defects of eigenstates [default: 1e-10]
    #[arg(long)]
    tol_eigenstate: Option<f64>,
    /// Largest off-diagonal overlap [default: 1e-8]
    #[arg(long)]
    tol_orthogonality: Option<f64>,
    /// Operator identity residual [default: 1e-8]
    #[arg(long)]
    tol_relation: Option<f64>,
    /// Mapping fit residual [default: 1e-8]
    #[arg(long)]
    tol_mapping: Option<f64>,
    /// Hydrogen scaling residual [default: 1e-9]
    #[arg(long)]
    tol_scaling: Option<f64>,
    /// Relative energy-chain error [default: 1e-13]
    #[arg(long)]
    tol_arithmetic: Option<f64>,
    /// Lowering operator applied to the ground state [default: 1e-10]
    #[arg(long)]
    tol_annihilation: Option<f64>,
    /// Sinusoidal closure residual [default: 1e-7]
    #[arg(long)]
    tol_closure: Option<f64>,
    /// Shape-invariance residual [default: 1e-9]
    #[arg(long)]
    tol_shape: Option<f64>,
    /// Spread of the fitted shape-invariance constant [default: 1e-8]
    #[arg(long)]
    tol_epsilon_spread: Option<f64>,
    /// Ladder energy gap error [default: 1e-10]
    #[arg(long)]
    tol_gap: Option<f64>,
    /// Overlap defect of ladder-built states [default: 1e-7]
    #[arg(long)]
    tol_overlap: Option<f64>,
    /// Relative finite-difference eigenvalue error [default: 1e-5]
    #[arg(long)]
    tol_oracle: Option<f64>,
    /// Allowed distance of the observed order from 2 [default: 0.3]
    #[arg(long)]
    tol_order_band: Option<f64>,
}

impl TolArgs {
    fn resolve(&self) -> Result<Tolerances, String> {
        let mut t = Tolerances::default();
        let pairs = [
            (self.tol_eigenpair, &mut t.eigenpair),
            (self.tol_eigenstate, &mut t.eigenstate),
            (self.tol_orthogonality, &mut t.orthogonality),
            (self.tol_relation, &mut t.relation),
            (self.tol_mapping, &mut t.mapping),
            (self.tol_scaling, &mut t.scaling),
            (self.tol_arithmetic, &mut t.arithmetic),
            (self.tol_annihilation, &mut t.annihilation),
            (self.tol_closure, &mut t.closure),
            (self.tol_shape, &mut t.shape),
            (self.tol_epsilon_spread, &mut t.epsilon_spread),
            (self.tol_gap, &mut t.gap),
            (self.tol_overlap, &mut t.overlap),
            (self.tol_oracle, &mut t.oracle),
            (self.tol_order_band, &mut t.order_band),
        ];
        for (given, slot) in pairs {
            if let Some(v) = given {
                *slot = v;
            }
        }
        t.validated().map_err(|e| e.to_string())
    }
}

#[derive(Args, Clone, Debug, Serialize)]
struct Common {
    /// Model (ho, cs, hydrogen, rm-sph, rm-hyp); all models when omitted.
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelId>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    tol: TolArgs,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Highest level checked.
    #[arg(long, default_value_t = 8)]
    nmax: usize,
    /// Random combinations per test family.
    #[arg(long, default_value_t = 4)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone, Debug, Serialize)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    /// Highest level built.
    #[arg(long, default_value_t = 5)]
    nmax: usize,
}

#[derive(Args, Clone, Debug, Serialize)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Eigenvalues per model.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Interior point count of a grid level; repeat for several levels.
    #[arg(long = "grid")]
    grid: Vec<usize>,
}

fn parse_model(s: &str) -> Result<ModelId, String> {
    s.parse::<ModelId>().map_err(|e| e.to_string())
}

/// Usage or configuration problem (exit 2).
struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

fn with_overrides(base: Model, p: &ParamArgs) -> Result<Model, UsageError> {
    let reject = |name: &str| {
        Err(UsageError(format!(
            "--{name} does not apply to {}",
            base.id()
        )))
    };
    let m = match base {
        Model::HarmonicOscillator { m, omega } => {
            if p.g.is_some() {
                return reject("g");
            }
            if p.l.is_some() {
                return reject("l");
            }
            Model::HarmonicOscillator {
                m: p.m.unwrap_or(m),
                omega: p.omega.unwrap_or(omega),
            }
        }
        Model::CalogeroSutherland { g } => {
            for (name, given) in [("l", p.l), ("m", p.m), ("omega", p.omega)] {
                if given.is_some() {
                    return reject(name);
                }
            }
            Model::CalogeroSutherland {
                g: p.g.unwrap_or(g),
            }
        }
        Model::HydrogenRadial { m, g, l } => {
            if p.omega.is_some() {
                return reject("omega");
            }
            let l = match p.l {
                Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => v as u32,
                Some(v) => {
                    return Err(UsageError(format!(
                        "hydrogen needs integer l >= 0, got {v}"
                    )))
                }
                None => l,
            };
            Model::HydrogenRadial {
                m: p.m.unwrap_or(m),
                g: p.g.unwrap_or(g),
                l,
            }
        }
        Model::RosenMorseSpherical { g, l } | Model::RosenMorseHyperbolic { g, l } => {
            if p.m.is_some() {
                return reject("m");
            }
            if p.omega.is_some() {
                return reject("omega");
            }
            let (g, l) = (p.g.unwrap_or(g), p.l.unwrap_or(l));
            if matches!(base, Model::RosenMorseSpherical { .. }) {
                Model::RosenMorseSpherical { g, l }
            } else {
                Model::RosenMorseHyperbolic { g, l }
            }
        }
    };
    Ok(m.validated()?)
}

/// Models selected by `--model` and parameter overrides: every reference
/// set, or a single set when any parameter is given.
fn select_models(
    c: &Common,
    all: impl Fn(ModelId) -> Vec<Model>,
) -> Result<Vec<Model>, UsageError> {
    match c.model {
        None if c.params.any() => Err(UsageError("parameter overrides need --model".into())),
        None => Ok(ModelId::ALL.iter().flat_map(|id| all(*id)).collect()),
        Some(id) if c.params.any() => {
            let base = reference_parameter_sets(id)[0];
            Ok(vec![with_overrides(base, &c.params)?])
        }
        Some(id) => Ok(all(id)),
    }
}

#[derive(Serialize)]
struct Timing {
    wall_time_s: f64,
}

#[derive(Serialize)]
struct JsonReport<'a, C: Serialize> {
    run_config: &'a C,
    results: &'a [CheckRecord],
    summary: &'a intertwine::verify::Summary,
    timing: Timing,
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, UsageError> {
    Ok(match out {
        Some(p) => {
            Box::new(File::create(p).map_err(|e| UsageError(format!("{}: {e}", p.display())))?)
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn join_map(m: &std::collections::BTreeMap<String, f64>) -> String {
    m.iter()
        .map(|(k, v)| format!("{k}={v:e}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn fmt_opt(v: Option<&f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn write_report_csv(w: Box<dyn Write>, rows: &[CheckRecord]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "relation_id",
        "model",
        "params",
        "n",
        "pass",
        "residuals",
        "tolerances",
        "values",
        "note",
    ])?;
    for r in rows {
        out.write_record([
            r.relation_id.clone(),
            r.model.to_string(),
            join_map(&r.params),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            r.pass.to_string(),
            join_map(&r.residuals),
            join_map(&r.tolerances),
            join_map(&r.values),
            r.note.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()
}

fn write_oracle_csv(w: Box<dyn Write>, rows: &[CheckRecord]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "relation_id",
        "model",
        "params",
        "n",
        "e_exact",
        "e_oracle",
        "rel_discrepancy",
        "error_estimate",
        "overlap_defect",
        "convergence_order",
        "bound_count",
        "pass",
        "note",
    ])?;
    for r in rows {
        out.write_record([
            r.relation_id.clone(),
            r.model.to_string(),
            join_map(&r.params),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            fmt_opt(r.values.get("e_exact")),
            fmt_opt(r.values.get("e_oracle")),
            fmt_opt(r.residuals.get("eigenvalue")),
            fmt_opt(r.values.get("error_estimate")),
            fmt_opt(r.residuals.get("overlap_defect")),
            fmt_opt(r.values.get("observed_order")),
            fmt_opt(r.values.get("counted")),
            r.pass.to_string(),
            r.note.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()
}

fn emit<C: Serialize>(
    c: &Common,
    default: Format,
    run_config: &C,
    report: &VerificationReport,
    csv_rows: fn(Box<dyn Write>, &[CheckRecord]) -> io::Result<()>,
) -> Result<(), UsageError> {
    let w = sink(&c.out)?;
    match c.format.unwrap_or(default) {
        Format::Json => {
            let doc = JsonReport {
                run_config,
                results: &report.results,
                summary: &report.summary,
                timing: Timing {
                    wall_time_s: report.wall_time_s,
                },
            };
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
        Format::Csv => csv_rows(w, &report.results)?,
    }
    for note in &report.summary.notes {
        eprintln!("note: {note}");
    }
    eprintln!(
        "{} checks, {} passed, {} failed ({:.2} s)",
        report.summary.total, report.summary.passed, report.summary.failed, report.wall_time_s
    );
    Ok(())
}

#[derive(Serialize)]
struct VerifyRunConfig<'a> {
    command: &'static str,
    models: &'a [Model],
    n_max: usize,
    random: usize,
    seed: u64,
    tolerances: Tolerances,
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool, UsageError> {
    let tolerances = a.common.tol.resolve().map_err(UsageError)?;
    let models = select_models(&a.common, reference_parameter_sets)?;
    let cfg = VerifyConfig {
        models,
        n_max: a.nmax,
        random: a.random,
        seed: a.seed,
        tolerances,
    };
    let report = run_verification(&cfg);
    let rc = VerifyRunConfig {
        command: "verify",
        models: &cfg.models,
        n_max: cfg.n_max,
        random: cfg.random,
        seed: cfg.seed,
        tolerances,
    };
    emit(&a.common, Format::Json, &rc, &report, write_report_csv)?;
    Ok(report.all_pass())
}

#[derive(Serialize)]
struct SpectrumRunConfig<'a> {
    command: &'static str,
    model: &'a Model,
    n_max: usize,
    tolerances: Tolerances,
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    run_config: SpectrumRunConfig<'a>,
    levels: &'a [LadderLevel],
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<bool, UsageError> {
    let tolerances = a.common.tol.resolve().map_err(UsageError)?;
    let Some(id) = a.common.model else {
        return Err(UsageError("spectrum needs --model".into()));
    };
    let model = if a.common.params.any() {
        with_overrides(reference_parameter_sets(id)[0], &a.common.params)?
    } else {
        reference_parameter_sets(id)[0]
    };
    if !model.bound_state_count().contains(a.nmax) {
        return Err(UsageError(format!(
            "level {} is not bound for {}",
            a.nmax,
            model.label()
        )));
    }
    let levels = match ladder_construct_spectrum(&model, a.nmax, &tolerances) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("ladder construction failed: {e}");
            return Ok(false);
        }
    };
    let mut w = sink(&a.common.out)?;
    match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(["n", "E_direct", "E_chain", "overlap"])?;
            for lv in &levels {
                out.write_record([
                    lv.n.to_string(),
                    format!("{:e}", lv.e_direct),
                    format!("{:e}", lv.e_chain),
                    format!("{:e}", lv.overlap),
                ])?;
            }
            out.flush()?;
        }
        Format::Json => {
            let doc = SpectrumReport {
                run_config: SpectrumRunConfig {
                    command: "spectrum",
                    model: &model,
                    n_max: a.nmax,
                    tolerances,
                },
                levels: &levels,
            };
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    let ok = levels.iter().all(|lv| {
        1.0 - lv.overlap <= tolerances.overlap
            && (lv.e_chain - lv.e_direct).abs()
                <= tolerances.arithmetic * lv.e_direct.abs().max(1.0)
    });
    Ok(ok)
}

#[derive(Serialize)]
struct OracleRunConfig<'a> {
    command: &'static str,
    models: &'a [Model],
    k: usize,
    grid: &'a GridConfig,
    tolerances: Tolerances,
}

fn cmd_oracle(a: &OracleArgs) -> Result<bool, UsageError> {
    let tolerances = a.common.tol.resolve().map_err(UsageError)?;
    if a.k == 0 {
        return Err(UsageError("--k must be at least 1".into()));
    }
    let models = if a.common.model.is_none() && !a.common.params.any() {
        default_oracle_models()
    } else {
        select_models(&a.common, |id| {
            default_oracle_models()
                .into_iter()
                .filter(|m| m.id() == id)
                .collect()
        })?
    };
    let grid = if a.grid.is_empty() {
        GridConfig::default()
    } else {
        GridConfig::with_levels(a.grid.clone())
    };
    let report = run_oracle_matrix(&models, a.k, &grid, &tolerances)?;
    let rc = OracleRunConfig {
        command: "oracle",
        models: &models,
        k: a.k,
        grid: &grid,
        tolerances,
    };
    emit(&a.common, Format::Csv, &rc, &report, write_oracle_csv)?;
    Ok(report.all_pass())
}

fn configure_threads() -> Result<(), UsageError> {
    let Ok(v) = std::env::var("INTERTWINE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        UsageError(format!(
            "INTERTWINE_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    if n == 0 {
        return Err(UsageError("INTERTWINE_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<bool, UsageError> {
        configure_threads()?;
        match &cli.command {
            Command::Verify(a) => cmd_verify(a),
            Command::Spectrum(a) => cmd_spectrum(a),
            Command::Oracle(a) => cmd_oracle(a),
        }
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
