//! Command-line interface.
//!
//! Subcommands:
//!
//! * `synth`  — synthesize one observer for a catalog or file system and
//!   write its maps, gains, and objective to JSON.
//! * `eval`   — evaluate a maps file under a disturbance pattern.
//! * `bench`  — run the full pattern benchmark for one system.
//! * `selftest` — run the built-in oracle and invariant checks.
//!
//! Exit codes: 0 on success, 2 on solver or synthesis failure, 3 on bad
//! input.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::{
    self, discretize, render_table, resolve_system, BenchConfig, BenchError, Discretization,
    ExportFormat,
};
use crate::disturbance::{generate, worst_case_noise, PatternKind, PatternSpec};
use crate::linalg::Matrix;
use crate::model::{format_system, parse_system, CostWeights, LtvSystem, NoiseModel};
use crate::sls::{gain_matrix, recover_gains, ErrorMaps};
use crate::synthesis::{
    h2_cost, hinf_cost, synth_clairvoyant, synth_h2, synth_hinf, synth_regret, SynthesisProblem,
};

const USAGE: &str = "\
usage: obsynth <command> [options]

commands:
  synth --system <name|file> --method {h2|hinf|regret|clairvoyant}
        [--horizon T] [--ts SEC] [--euler] [--out maps.json]
        [--hv X] [--hw X] [--sigma-v X] [--sigma-w X] [--q X]
      Synthesize an observer and write its error maps, gains, and
      objective as JSON. Catalog systems: nn4, ac1, ac2, ac3. A file
      system is discretized like a catalog entry when --ts is given and
      used as an already-discrete system otherwise.

  eval --maps maps.json --pattern <name> [--realizations N] [--seed S]
      Evaluate the average quadratic estimation cost of stored maps under
      one disturbance pattern (gaussian, uniform-half, uniform-full,
      const, sin, sawtooth, step, stairs, worst).

  bench --system <name|file> [--config FILE] [--format {csv|json|markdown}]
        [--out PATH] [--threads N]
      Reproduce the full pattern-by-observer benchmark table.

  selftest
      Run the built-in oracle and invariant suites.
";

enum CliError {
    /// Wrong arguments, unreadable input, malformed files: exit code 3.
    BadInput(String),
    /// Solver, synthesis, or output failures: exit code 2.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::BadInput(_) => 3,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::BadInput(m) | CliError::Runtime(m) => m,
        }
    }
}

fn bad(e: impl std::fmt::Display) -> CliError {
    CliError::BadInput(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Classify a bench-layer error by its origin.
fn classify(e: BenchError) -> CliError {
    match e {
        BenchError::BadInput(_) | BenchError::Model(_) => bad(e),
        BenchError::Synthesis(_) => runtime(e),
        BenchError::Io(_) => runtime(e),
    }
}

/// Run the CLI; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let result = match args.first().map(String::as_str) {
        Some("synth") => cmd_synth(&args[1..]),
        Some("eval") => cmd_eval(&args[1..]),
        Some("bench") => cmd_bench(&args[1..]),
        Some("selftest") => cmd_selftest(&args[1..]),
        Some("--help") | Some("-h") | Some("help") => {
            print!("{USAGE}");
            return 0;
        }
        Some(other) => Err(bad(format!("unknown command `{other}`\n\n{USAGE}"))),
        None => Err(bad(format!("missing command\n\n{USAGE}"))),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

// ── argument scanning ───────────────────────────────────────────────

struct Args {
    remaining: Vec<String>,
}

impl Args {
    fn new(args: &[String]) -> Self {
        Self { remaining: args.to_vec() }
    }

    fn take_flag(&mut self, name: &str) -> bool {
        if let Some(pos) = self.remaining.iter().position(|a| a == name) {
            self.remaining.remove(pos);
            true
        } else {
            false
        }
    }

    fn take_value(&mut self, name: &str) -> Result<Option<String>, CliError> {
        if let Some(pos) = self.remaining.iter().position(|a| a == name) {
            if pos + 1 >= self.remaining.len() {
                return Err(bad(format!("{name} needs a value")));
            }
            let value = self.remaining.remove(pos + 1);
            self.remaining.remove(pos);
            Ok(Some(value))
        } else {
            Ok(None)
        }
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, name: &str) -> Result<Option<T>, CliError> {
        match self.take_value(name)? {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| bad(format!("{name}: cannot parse `{raw}`"))),
            None => Ok(None),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        if self.remaining.is_empty() {
            Ok(())
        } else {
            Err(bad(format!("unexpected arguments: {}", self.remaining.join(" "))))
        }
    }
}

// ── maps file ───────────────────────────────────────────────────────

/// On-disk schema for synthesized observers (`synth` output, `eval` input).
#[derive(Debug, Serialize, Deserialize)]
pub struct MapsFile {
    pub system: String,
    pub method: String,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub horizon: usize,
    pub ts: Option<f64>,
    pub discretization: Option<String>,
    pub hv: f64,
    pub hw: f64,
    pub sigma_v: f64,
    pub sigma_w: f64,
    pub q: f64,
    /// Optimal objective of the synthesis problem that produced the maps.
    pub objective: f64,
    pub causal: bool,
    pub phi_v: Vec<Vec<f64>>,
    pub phi_w: Vec<Vec<f64>>,
    /// Gain operator; dense (non-triangular) for the clairvoyant.
    pub gains: Vec<Vec<f64>>,
    /// The discretized system in the plain-text system format, so the file
    /// is self-contained for evaluation.
    pub system_text: String,
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flat_map(|row| row.iter().copied()).collect();
    Matrix::from_vec(r, c, flat).map_err(bad)
}

// ── synth ───────────────────────────────────────────────────────────

struct NoiseScalars {
    hv: f64,
    hw: f64,
    sigma_v: f64,
    sigma_w: f64,
    q: f64,
}

fn cmd_synth(raw: &[String]) -> Result<(), CliError> {
    let mut args = Args::new(raw);
    let system = args.take_value("--system")?.ok_or_else(|| bad("--system is required"))?;
    let method = args.take_value("--method")?.ok_or_else(|| bad("--method is required"))?;
    let horizon: Option<usize> = args.take_parsed("--horizon")?;
    let ts: Option<f64> = args.take_parsed("--ts")?;
    let euler = args.take_flag("--euler");
    let out = args.take_value("--out")?.unwrap_or_else(|| "maps.json".to_string());
    let scalars = NoiseScalars {
        hv: args.take_parsed("--hv")?.unwrap_or(1.0),
        hw: args.take_parsed("--hw")?.unwrap_or(1.0),
        sigma_v: args.take_parsed("--sigma-v")?.unwrap_or(1.0),
        sigma_w: args.take_parsed("--sigma-w")?.unwrap_or(1.0),
        q: args.take_parsed("--q")?.unwrap_or(1.0),
    };
    args.finish()?;

    let discretization = if euler { Discretization::Euler } else { Discretization::Zoh };
    let from_catalog = bench::catalog_system(&system).is_some();
    let (sys, ts_used) = if from_catalog || ts.is_some() {
        let ts = ts.unwrap_or(0.005);
        let cs = resolve_system(&system).map_err(classify)?;
        let sys = discretize(&cs, ts, horizon.unwrap_or(10), discretization).map_err(classify)?;
        (sys, Some(ts))
    } else {
        // A file without --ts is an already-discrete system.
        let text = std::fs::read_to_string(&system).map_err(bad)?;
        let parsed = parse_system(&text).map_err(bad)?;
        let sys = match horizon {
            Some(t) if t != parsed.horizon() => {
                if !parsed.is_time_invariant() {
                    return Err(bad("--horizon can only override time-invariant files"));
                }
                LtvSystem::time_invariant(parsed.a(0), parsed.b(0), parsed.c(0), t)
            }
            _ => parsed,
        };
        (sys, None)
    };

    let (maps, objective, prob) = synthesize(&sys, &method, &scalars)?;
    let gains = if maps.causal {
        recover_gains(&maps).map_err(runtime)?.matrix().clone()
    } else {
        gain_matrix(&maps).map_err(runtime)?
    };

    let file = MapsFile {
        system,
        method,
        n: sys.state_dim(),
        m: sys.output_dim(),
        p: sys.input_dim(),
        horizon: sys.horizon(),
        ts: ts_used,
        discretization: ts_used.map(|_| discretization.name().to_string()),
        hv: scalars.hv,
        hw: scalars.hw,
        sigma_v: scalars.sigma_v,
        sigma_w: scalars.sigma_w,
        q: scalars.q,
        objective,
        causal: maps.causal,
        phi_v: matrix_to_rows(&maps.phi_v),
        phi_w: matrix_to_rows(&maps.phi_w),
        gains: matrix_to_rows(&gains),
        system_text: format_system(&sys),
    };
    let json = serde_json::to_string_pretty(&file).map_err(runtime)?;
    std::fs::write(Path::new(&out), json + "\n").map_err(runtime)?;
    println!("method = {}", file.method);
    println!("objective = {}", objective);
    println!("out = {out}");
    let _ = prob;
    Ok(())
}

fn synthesize(
    sys: &LtvSystem,
    method: &str,
    scalars: &NoiseScalars,
) -> Result<(ErrorMaps, f64, SynthesisProblem), CliError> {
    let noise = NoiseModel::uniform_scalars(sys, scalars.hv, scalars.hw, scalars.sigma_v, scalars.sigma_w)
        .map_err(bad)?;
    let weights = CostWeights::uniform_scalar(sys, scalars.q).map_err(bad)?;
    let prob = SynthesisProblem::new(sys, &noise, &weights).map_err(runtime)?;
    let opts = crate::sdp::SolverOptions::default();
    let (maps, objective) = match method {
        "h2" => {
            let maps = synth_h2(&prob).map_err(runtime)?;
            let cost = h2_cost(&maps, &prob);
            (maps, cost)
        }
        "clairvoyant" => {
            let maps = synth_clairvoyant(&prob).map_err(runtime)?;
            let cost = h2_cost(&maps, &prob);
            (maps, cost)
        }
        "hinf" => {
            let maps = synth_hinf(&prob, &opts).map_err(runtime)?;
            let cost = hinf_cost(&maps, &prob);
            (maps, cost)
        }
        "regret" => {
            let nc = synth_clairvoyant(&prob).map_err(runtime)?;
            let (maps, cert) = synth_regret(&prob, &nc, &opts).map_err(runtime)?;
            (maps, cert.lambda_star)
        }
        other => return Err(bad(format!("unknown method `{other}`"))),
    };
    Ok((maps, objective, prob))
}

// ── eval ────────────────────────────────────────────────────────────

fn cmd_eval(raw: &[String]) -> Result<(), CliError> {
    let mut args = Args::new(raw);
    let maps_path = args.take_value("--maps")?.ok_or_else(|| bad("--maps is required"))?;
    let pattern = args.take_value("--pattern")?.ok_or_else(|| bad("--pattern is required"))?;
    let realizations: usize = args.take_parsed("--realizations")?.unwrap_or(1000);
    let seed: u64 = args.take_parsed("--seed")?.unwrap_or(1);
    args.finish()?;

    let kind = PatternKind::from_cli_name(&pattern)
        .ok_or_else(|| bad(format!("unknown pattern `{pattern}`")))?;
    if realizations == 0 {
        return Err(bad("--realizations must be at least 1"));
    }

    let text = std::fs::read_to_string(&maps_path).map_err(bad)?;
    let file: MapsFile = serde_json::from_str(&text).map_err(bad)?;
    let sys = parse_system(&file.system_text).map_err(bad)?;
    let scalars = NoiseScalars {
        hv: file.hv,
        hw: file.hw,
        sigma_v: file.sigma_v,
        sigma_w: file.sigma_w,
        q: file.q,
    };
    let noise = NoiseModel::uniform_scalars(&sys, scalars.hv, scalars.hw, scalars.sigma_v, scalars.sigma_w)
        .map_err(bad)?;
    let weights = CostWeights::uniform_scalar(&sys, scalars.q).map_err(bad)?;
    let prob = SynthesisProblem::new(&sys, &noise, &weights).map_err(runtime)?;
    let maps = ErrorMaps::from_parts(
        matrix_from_rows(&file.phi_v)?,
        matrix_from_rows(&file.phi_w)?,
        file.causal,
        file.n,
        file.m,
    )
    .map_err(bad)?;

    let (avg_cost, evaluated) = match kind {
        PatternKind::WorstCase => {
            let noise = worst_case_noise(&maps, &prob);
            (bench::weighted_cost(&prob, &maps, &noise.v_stack, &noise.w_stack), 1)
        }
        kind if kind.is_stochastic() => {
            let spec = PatternSpec::new(kind, seed);
            let mut total = 0.0;
            for idx in 0..realizations {
                let noise = generate(&spec, file.n, file.m, file.horizon, idx as u64)
                    .map_err(bad)?;
                total += bench::weighted_cost(&prob, &maps, &noise.v_stack, &noise.w_stack);
            }
            (total / realizations as f64, realizations)
        }
        deterministic => {
            let spec = PatternSpec::new(deterministic, seed);
            let noise = generate(&spec, file.n, file.m, file.horizon, 0).map_err(bad)?;
            (bench::weighted_cost(&prob, &maps, &noise.v_stack, &noise.w_stack), 1)
        }
    };

    println!("maps = {maps_path}");
    println!("method = {}", file.method);
    println!("pattern = {pattern}");
    println!("realizations = {evaluated}");
    println!("avg_cost = {avg_cost}");
    Ok(())
}

// ── bench ───────────────────────────────────────────────────────────

fn cmd_bench(raw: &[String]) -> Result<(), CliError> {
    let mut args = Args::new(raw);
    let system = args.take_value("--system")?;
    let config_path = args.take_value("--config")?;
    let format = match args.take_value("--format")? {
        Some(name) => {
            ExportFormat::parse(&name).ok_or_else(|| bad(format!("unknown format `{name}`")))?
        }
        None => ExportFormat::Markdown,
    };
    let out = args.take_value("--out")?;
    let threads: Option<usize> = args.take_parsed("--threads")?;
    args.finish()?;

    let mut config = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(bad)?;
            BenchConfig::from_config_str(&text).map_err(classify)?
        }
        None => BenchConfig::default(),
    };
    if let Some(system) = system {
        config.system = system;
    }

    let table = bench::run_benchmark(&config, threads).map_err(classify)?;
    let rendered = render_table(&table, format);
    match out {
        Some(path) => std::fs::write(Path::new(&path), &rendered).map_err(runtime)?,
        None => print!("{rendered}"),
    }

    // One status line per row on stderr for quick reading.
    let mut summary = String::new();
    for row in &table.rows {
        let best = row.best_observer().unwrap_or("none");
        let _ = writeln!(summary, "{}: best = {best}", row.pattern);
    }
    eprint!("{summary}");
    Ok(())
}

fn cmd_selftest(raw: &[String]) -> Result<(), CliError> {
    Args::new(raw).finish()?;
    if crate::selftest::run_selftest() {
        Ok(())
    } else {
        Err(runtime("selftest failed"))
    }
}
