//! System catalog, discretization, and the pattern benchmark harness.
//!
//! The harness synthesizes the three causal observers (plus the clairvoyant
//! baseline the regret observer needs), evaluates the stacked quadratic
//! error cost per disturbance pattern — averaging the stochastic patterns
//! over many realizations, taking a single realization for deterministic
//! signals, and the per-observer worst case for the `worst` row — and
//! renders a table of average costs with relative percentages against each
//! row's best observer.
//!
//! Stochastic rows reduce realization costs in index order regardless of
//! worker count, so a fixed config and seed produce byte-identical output.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::disturbance::{generate, worst_case_noise, PatternKind, PatternSpec};
use crate::linalg::Matrix;
use crate::model::{parse_system, CostWeights, LtvSystem, ModelError, NoiseModel};
use crate::sls::{error_trajectory, ErrorMaps};
use crate::synthesis::{
    synth_clairvoyant, synth_h2, synth_hinf, synth_regret, SynthesisError, SynthesisProblem,
};

#[derive(Debug)]
pub enum BenchError {
    BadInput(String),
    Model(ModelError),
    Synthesis(SynthesisError),
    Io(std::io::Error),
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::BadInput(what) => write!(f, "bad input: {what}"),
            BenchError::Model(e) => write!(f, "{e}"),
            BenchError::Synthesis(e) => write!(f, "{e}"),
            BenchError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BenchError {}

impl From<ModelError> for BenchError {
    fn from(e: ModelError) -> Self {
        BenchError::Model(e)
    }
}
impl From<SynthesisError> for BenchError {
    fn from(e: SynthesisError) -> Self {
        BenchError::Synthesis(e)
    }
}
impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e)
    }
}

// ── catalog and discretization ──────────────────────────────────────

/// A continuous-time LTI system `(A, B, C)` with a provenance note.
#[derive(Debug, Clone)]
pub struct ContinuousSystem {
    pub name: String,
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub note: String,
}

impl ContinuousSystem {
    /// Read from the system file format; the file must be time-invariant
    /// (wildcard or repeated blocks). Leading `#` comments become the note.
    pub fn from_system_text(name: &str, text: &str) -> Result<Self, BenchError> {
        let sys = parse_system(text)?;
        if !sys.is_time_invariant() {
            return Err(BenchError::BadInput(format!(
                "system `{name}` is time-varying; continuous catalog entries must be time-invariant"
            )));
        }
        let note = text
            .lines()
            .take_while(|line| line.starts_with('#'))
            .map(|line| line.trim_start_matches('#').trim())
            .collect::<Vec<_>>()
            .join(" ");
        Ok(ContinuousSystem {
            name: name.to_string(),
            a: sys.a(0).clone(),
            b: sys.b(0).clone(),
            c: sys.c(0).clone(),
            note,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }
}

/// Names of the built-in benchmark systems.
pub fn catalog_names() -> [&'static str; 4] {
    ["nn4", "ac1", "ac2", "ac3"]
}

/// Look up a built-in benchmark system by name (case-insensitive).
pub fn catalog_system(name: &str) -> Option<ContinuousSystem> {
    let text = match name.to_ascii_lowercase().as_str() {
        "nn4" => include_str!("../data/nn4.sys"),
        "ac1" => include_str!("../data/ac1.sys"),
        "ac2" => include_str!("../data/ac2.sys"),
        "ac3" => include_str!("../data/ac3.sys"),
        _ => return None,
    };
    Some(
        ContinuousSystem::from_system_text(&name.to_ascii_lowercase(), text)
            .expect("catalog data files are well-formed"),
    )
}

/// Resolve a catalog name or a path to a system file.
pub fn resolve_system(name_or_path: &str) -> Result<ContinuousSystem, BenchError> {
    if let Some(sys) = catalog_system(name_or_path) {
        return Ok(sys);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(BenchError::BadInput(format!(
            "`{name_or_path}` is neither a catalog system ({}) nor a readable file",
            catalog_names().join(", ")
        )));
    }
    let text = fs::read_to_string(path)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name_or_path);
    ContinuousSystem::from_system_text(name, &text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Discretization {
    Zoh,
    Euler,
}

impl Discretization {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zoh" => Some(Discretization::Zoh),
            "euler" => Some(Discretization::Euler),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Discretization::Zoh => "zoh",
            Discretization::Euler => "euler",
        }
    }
}

/// Discretize a continuous system at sampling period `ts` over `horizon`
/// prediction steps.
///
/// Zero-order hold computes `A_d = exp(A·ts)` and `B_d = (∫ exp(Aτ)dτ)·B`
/// through the exponential of the augmented matrix `[[A, B], [0, 0]]·ts`;
/// Euler uses the first-order approximations `I + ts·A` and `ts·B`.
pub fn discretize(
    cs: &ContinuousSystem,
    ts: f64,
    horizon: usize,
    method: Discretization,
) -> Result<LtvSystem, BenchError> {
    if ts <= 0.0 || !ts.is_finite() {
        return Err(BenchError::BadInput(format!("sampling period {ts} must be positive")));
    }
    let n = cs.a.rows();
    let p = cs.b.cols();
    let (a_d, b_d) = match method {
        Discretization::Zoh => {
            let mut aug = Matrix::zeros(n + p, n + p);
            aug.set_block(0, 0, &cs.a);
            aug.set_block(0, n, &cs.b);
            let exp = aug.scaled(ts).expm();
            (exp.block(0, 0, n, n), exp.block(0, n, n, p))
        }
        Discretization::Euler => {
            (Matrix::identity(n).add(&cs.a.scaled(ts)), cs.b.scaled(ts))
        }
    };
    Ok(LtvSystem::time_invariant(&a_d, &b_d, &cs.c, horizon))
}

// ── configuration ───────────────────────────────────────────────────

/// Benchmark configuration; the config file is flat `key = value` text with
/// these fields as keys (`#` comments allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub system: String,
    pub ts: f64,
    pub horizon: usize,
    pub discretization: Discretization,
    pub patterns: Vec<PatternKind>,
    pub realizations: usize,
    pub seed: u64,
    /// Noise bound matrices `H_v = hv·I`, `H_w = hw·I`.
    pub hv: f64,
    pub hw: f64,
    /// Covariances `Σ_v = sigma_v·I`, `Σ_w = sigma_w·I`.
    pub sigma_v: f64,
    pub sigma_w: f64,
    /// State weighting `Q_t = q·I`.
    pub q: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            system: "nn4".to_string(),
            ts: 0.005,
            horizon: 10,
            discretization: Discretization::Zoh,
            patterns: PatternKind::all().to_vec(),
            realizations: 1000,
            seed: 1,
            hv: 1.0,
            hw: 1.0,
            sigma_v: 1.0,
            sigma_w: 1.0,
            q: 1.0,
        }
    }
}

impl BenchConfig {
    pub fn from_config_str(text: &str) -> Result<Self, BenchError> {
        let mut config = BenchConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                BenchError::BadInput(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| BenchError::BadInput(format!("config key {key}: {what}"));
            match key {
                "system" => config.system = value.to_string(),
                "ts" => config.ts = value.parse().map_err(|_| bad("not a number"))?,
                "horizon" => config.horizon = value.parse().map_err(|_| bad("not an integer"))?,
                "discretization" => {
                    config.discretization =
                        Discretization::parse(value).ok_or_else(|| bad("expected zoh or euler"))?
                }
                "patterns" => {
                    config.patterns = value
                        .split(',')
                        .map(|p| {
                            PatternKind::from_cli_name(p.trim())
                                .ok_or_else(|| bad(&format!("unknown pattern `{}`", p.trim())))
                        })
                        .collect::<Result<_, _>>()?
                }
                "realizations" => {
                    config.realizations = value.parse().map_err(|_| bad("not an integer"))?
                }
                "seed" => config.seed = value.parse().map_err(|_| bad("not an integer"))?,
                "hv" => config.hv = value.parse().map_err(|_| bad("not a number"))?,
                "hw" => config.hw = value.parse().map_err(|_| bad("not a number"))?,
                "sigma_v" => config.sigma_v = value.parse().map_err(|_| bad("not a number"))?,
                "sigma_w" => config.sigma_w = value.parse().map_err(|_| bad("not a number"))?,
                "q" => config.q = value.parse().map_err(|_| bad("not a number"))?,
                other => {
                    return Err(BenchError::BadInput(format!("unknown config key `{other}`")));
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.ts <= 0.0 {
            return Err(BenchError::BadInput("ts must be positive".into()));
        }
        if self.horizon < 1 {
            return Err(BenchError::BadInput("horizon must be at least 1".into()));
        }
        if self.realizations < 1 {
            return Err(BenchError::BadInput("realizations must be at least 1".into()));
        }
        for value in [self.hv, self.hw, self.sigma_v, self.sigma_w, self.q] {
            if value <= 0.0 || !value.is_finite() {
                return Err(BenchError::BadInput("noise and weight scalars must be positive".into()));
            }
        }
        Ok(())
    }
}

// ── result table ────────────────────────────────────────────────────

pub const OBSERVER_NAMES: [&str; 3] = ["h2", "hinf", "regret"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverCell {
    pub observer: String,
    pub avg_cost: Option<f64>,
    /// Percent increase over the row's best observer; 0 for the best.
    pub relative_pct: Option<f64>,
    pub is_best: bool,
    /// Synthesis or evaluation failure, if any.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub pattern: String,
    pub cells: Vec<ObserverCell>,
}

impl PatternRow {
    pub fn cell(&self, observer: &str) -> Option<&ObserverCell> {
        self.cells.iter().find(|c| c.observer == observer)
    }

    pub fn best_observer(&self) -> Option<&str> {
        self.cells.iter().find(|c| c.is_best).map(|c| c.observer.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub system: String,
    pub realizations: usize,
    pub seed: u64,
    pub rows: Vec<PatternRow>,
}

// ── harness ─────────────────────────────────────────────────────────

/// Resolve, discretize, synthesize, and evaluate per the configuration.
pub fn run_benchmark(config: &BenchConfig, workers: Option<usize>) -> Result<ResultTable, BenchError> {
    config.validate()?;
    let cs = resolve_system(&config.system)?;
    let sys = discretize(&cs, config.ts, config.horizon, config.discretization)?;
    run_benchmark_on_system(&sys, config, workers)
}

/// The harness on an already-discretized system (the synthesis and
/// evaluation half of [`run_benchmark`]).
pub fn run_benchmark_on_system(
    sys: &LtvSystem,
    config: &BenchConfig,
    workers: Option<usize>,
) -> Result<ResultTable, BenchError> {
    let observers = synthesize_observers(sys, config)?;
    Ok(evaluate_observers(sys, config, &observers, workers))
}

/// The three causal observers of the benchmark, each synthesis outcome kept
/// separately so one failure does not abort the others.
pub struct BenchObservers {
    pub prob: SynthesisProblem,
    pub maps: Vec<(String, Result<ErrorMaps, String>)>,
}

pub fn synthesize_observers(sys: &LtvSystem, config: &BenchConfig) -> Result<BenchObservers, BenchError> {
    let noise = NoiseModel::uniform_scalars(sys, config.hv, config.hw, config.sigma_v, config.sigma_w)?;
    let weights = CostWeights::uniform_scalar(sys, config.q)?;
    let prob = SynthesisProblem::new(sys, &noise, &weights)?;

    let opts = crate::sdp::SolverOptions::default();
    let h2 = synth_h2(&prob).map_err(|e| e.to_string());
    let hinf = synth_hinf(&prob, &opts).map_err(|e| e.to_string());
    let regret = synth_clairvoyant(&prob)
        .map_err(|e| e.to_string())
        .and_then(|nc| synth_regret(&prob, &nc, &opts).map(|(maps, _)| maps).map_err(|e| e.to_string()));

    Ok(BenchObservers {
        prob,
        maps: vec![
            (OBSERVER_NAMES[0].to_string(), h2),
            (OBSERVER_NAMES[1].to_string(), hinf),
            (OBSERVER_NAMES[2].to_string(), regret),
        ],
    })
}

/// Evaluate per-pattern average costs; deterministic for a fixed config and
/// seed regardless of `workers`.
pub fn evaluate_observers(
    sys: &LtvSystem,
    config: &BenchConfig,
    observers: &BenchObservers,
    workers: Option<usize>,
) -> ResultTable {
    let rows = config
        .patterns
        .iter()
        .map(|&kind| evaluate_pattern(sys, config, observers, kind, workers))
        .collect();
    ResultTable {
        system: config.system.clone(),
        realizations: config.realizations,
        seed: config.seed,
        rows,
    }
}

fn evaluate_pattern(
    sys: &LtvSystem,
    config: &BenchConfig,
    observers: &BenchObservers,
    kind: PatternKind,
    workers: Option<usize>,
) -> PatternRow {
    let prob = &observers.prob;
    let costs: Vec<(String, Result<f64, String>)> = observers
        .maps
        .iter()
        .map(|(name, maps)| {
            let cost = maps.as_ref().map_err(Clone::clone).and_then(|maps| {
                average_pattern_cost(sys, config, prob, maps, kind, workers).map_err(|e| e.to_string())
            });
            (name.clone(), cost)
        })
        .collect();

    let best = costs
        .iter()
        .filter_map(|(_, c)| c.as_ref().ok())
        .fold(f64::INFINITY, |acc, &c| acc.min(c));
    let mut best_marked = false;
    let cells = costs
        .into_iter()
        .map(|(observer, outcome)| match outcome {
            Ok(cost) => {
                let is_best = !best_marked && cost <= best;
                best_marked |= is_best;
                ObserverCell {
                    observer,
                    avg_cost: Some(cost),
                    relative_pct: Some(if best > 0.0 { (cost / best - 1.0) * 100.0 } else { 0.0 }),
                    is_best,
                    error: None,
                }
            }
            Err(error) => ObserverCell {
                observer,
                avg_cost: None,
                relative_pct: None,
                is_best: false,
                error: Some(error),
            },
        })
        .collect();
    PatternRow { pattern: kind.cli_name().to_string(), cells }
}

fn average_pattern_cost(
    sys: &LtvSystem,
    config: &BenchConfig,
    prob: &SynthesisProblem,
    maps: &ErrorMaps,
    kind: PatternKind,
    workers: Option<usize>,
) -> Result<f64, BenchError> {
    let (n, m, horizon) = (sys.state_dim(), sys.output_dim(), sys.horizon());
    match kind {
        PatternKind::WorstCase => {
            let noise = worst_case_noise(maps, prob);
            Ok(weighted_cost(prob, maps, &noise.v_stack, &noise.w_stack))
        }
        kind if kind.is_stochastic() => {
            let spec = PatternSpec::new(kind, config.seed);
            let count = config.realizations;
            let threads = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()))
                .clamp(1, count);

            let mut costs = vec![0.0f64; count];
            if threads <= 1 {
                for (idx, slot) in costs.iter_mut().enumerate() {
                    let noise = generate(&spec, n, m, horizon, idx as u64)
                        .map_err(|e| BenchError::BadInput(e.to_string()))?;
                    *slot = weighted_cost(prob, maps, &noise.v_stack, &noise.w_stack);
                }
            } else {
                let chunk = count.div_ceil(threads);
                std::thread::scope(|scope| {
                    for (worker, slots) in costs.chunks_mut(chunk).enumerate() {
                        let spec = spec.clone();
                        scope.spawn(move || {
                            for (offset, slot) in slots.iter_mut().enumerate() {
                                let idx = (worker * chunk + offset) as u64;
                                let noise = generate(&spec, n, m, horizon, idx)
                                    .expect("stochastic pattern");
                                *slot = weighted_cost(prob, maps, &noise.v_stack, &noise.w_stack);
                            }
                        });
                    }
                });
            }
            // Ordered reduction: identical bytes for any worker count.
            let total: f64 = costs.iter().sum();
            Ok(total / count as f64)
        }
        deterministic => {
            let spec = PatternSpec::new(deterministic, config.seed);
            let noise = generate(&spec, n, m, horizon, 0)
                .map_err(|e| BenchError::BadInput(e.to_string()))?;
            Ok(weighted_cost(prob, maps, &noise.v_stack, &noise.w_stack))
        }
    }
}

/// Quadratic cost `‖Q^{1/2} e‖²` of one realization through the maps.
pub fn weighted_cost(prob: &SynthesisProblem, maps: &ErrorMaps, v: &[f64], w: &[f64]) -> f64 {
    let e = error_trajectory(maps, v, w);
    let qe = prob.q_half.matvec(&e);
    crate::linalg::dot(&qe, &qe)
}

/// Average several result tables cell-wise (same patterns and observers),
/// recomputing best markers and percentages.
pub fn average_tables(tables: &[ResultTable]) -> Result<ResultTable, BenchError> {
    let first = tables.first().ok_or_else(|| BenchError::BadInput("no tables to average".into()))?;
    let mut out = first.clone();
    out.system = tables.iter().map(|t| t.system.as_str()).collect::<Vec<_>>().join("+");
    for (row_idx, row) in out.rows.iter_mut().enumerate() {
        for (cell_idx, cell) in row.cells.iter_mut().enumerate() {
            let mut sum = 0.0;
            for table in tables {
                let other = table
                    .rows
                    .get(row_idx)
                    .and_then(|r| r.cells.get(cell_idx))
                    .ok_or_else(|| BenchError::BadInput("table shapes differ".into()))?;
                match other.avg_cost {
                    Some(c) => sum += c,
                    None => {
                        cell.avg_cost = None;
                        cell.error = other.error.clone();
                    }
                }
            }
            if cell.avg_cost.is_some() {
                cell.avg_cost = Some(sum / tables.len() as f64);
            }
        }
        remark_best(row);
    }
    Ok(out)
}

fn remark_best(row: &mut PatternRow) {
    let best = row
        .cells
        .iter()
        .filter_map(|c| c.avg_cost)
        .fold(f64::INFINITY, f64::min);
    let mut marked = false;
    for cell in &mut row.cells {
        match cell.avg_cost {
            Some(cost) => {
                cell.is_best = !marked && cost <= best;
                marked |= cell.is_best;
                cell.relative_pct = Some(if best > 0.0 { (cost / best - 1.0) * 100.0 } else { 0.0 });
            }
            None => {
                cell.is_best = false;
                cell.relative_pct = None;
            }
        }
    }
}

// ── export ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
    Markdown,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Some(ExportFormat::Csv),
            "json" => Some(ExportFormat::Json),
            "markdown" | "md" => Some(ExportFormat::Markdown),
            _ => None,
        }
    }
}

pub fn render_table(table: &ResultTable, format: ExportFormat) -> String {
    match format {
        ExportFormat::Csv => to_csv(table),
        ExportFormat::Json => {
            let mut s = serde_json::to_string_pretty(table).expect("table serializes");
            s.push('\n');
            s
        }
        ExportFormat::Markdown => to_markdown(table),
    }
}

/// Write the table to a file.
pub fn export_results(table: &ResultTable, format: ExportFormat, path: &Path) -> Result<(), BenchError> {
    fs::write(path, render_table(table, format))?;
    Ok(())
}

fn to_csv(table: &ResultTable) -> String {
    let mut out = String::from("pattern,observer,avg_cost,relative_pct,is_best\n");
    for row in &table.rows {
        for cell in &row.cells {
            let cost = cell.avg_cost.map(|c| c.to_string()).unwrap_or_default();
            let pct = cell.relative_pct.map(|p| p.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.pattern, cell.observer, cost, pct, cell.is_best
            ));
        }
    }
    out
}

/// Markdown layout mirroring the benchmark table: one row per pattern, one
/// column per observer, `**1**` marking the row's best.
fn to_markdown(table: &ResultTable) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# Average estimation cost: {} ({} realizations, seed {})\n\n",
        table.system, table.realizations, table.seed
    ));
    out.push_str("| v, w | H2 | Hinf | R |\n|---|---|---|---|\n");
    for row in &table.rows {
        let cells: Vec<String> = row
            .cells
            .iter()
            .map(|cell| {
                if let Some(err) = &cell.error {
                    format!("error: {err}")
                } else if cell.is_best {
                    "**1**".to_string()
                } else {
                    format!("+{:.2}%", cell.relative_pct.unwrap_or(f64::NAN))
                }
            })
            .collect();
        out.push_str(&format!("| {} | {} |\n", row.pattern, cells.join(" | ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    #[test]
    fn catalog_entries_load() {
        for name in catalog_names() {
            let cs = catalog_system(name).unwrap();
            assert!(!cs.note.is_empty(), "{name} carries a provenance note");
            assert!(cs.state_dim() >= 4);
        }
        assert_eq!(catalog_system("nn4").unwrap().state_dim(), 4);
        assert_eq!(catalog_system("AC3").unwrap().c.rows(), 4);
        assert!(catalog_system("zz9").is_none());
    }

    #[test]
    fn discretization_examples() {
        // A = 0: both methods give A_d = I, B_d = ts·B.
        let cs = ContinuousSystem {
            name: "static".into(),
            a: Matrix::zeros(2, 2),
            b: Matrix::from_rows(&[&[1.0], &[2.0]]),
            c: Matrix::identity(2),
            note: String::new(),
        };
        for method in [Discretization::Zoh, Discretization::Euler] {
            let sys = discretize(&cs, 0.1, 2, method).unwrap();
            assert!(sys.a(0).sub(&Matrix::identity(2)).max_abs() < 1e-12);
            assert!(sys.b(0).sub(&cs.b.scaled(0.1)).max_abs() < 1e-12);
        }

        // Scalar a: A_d = exp(a·ts) under zero-order hold.
        let cs = ContinuousSystem {
            name: "scalar".into(),
            a: Matrix::from_rows(&[&[1.0]]),
            b: Matrix::from_rows(&[&[1.0]]),
            c: Matrix::identity(1),
            note: String::new(),
        };
        let zoh = discretize(&cs, 0.005, 1, Discretization::Zoh).unwrap();
        assert!((zoh.a(0)[(0, 0)] - 0.005f64.exp()).abs() < 1e-12);

        // Euler differs from the hold by the Taylor remainder, which for
        // a = 1, ts = 0.005 is exp(0.005) − 1.005 ≤ 1.3e-5.
        let euler = discretize(&cs, 0.005, 1, Discretization::Euler).unwrap();
        let gap = (zoh.a(0)[(0, 0)] - euler.a(0)[(0, 0)]).abs();
        assert!(gap <= 1.3e-5, "gap {gap:e}");
        assert!(gap > 0.0);

        assert!(discretize(&cs, 0.0, 1, Discretization::Zoh).is_err());
    }

    #[test]
    fn config_parsing() {
        let config = BenchConfig::from_config_str(
            "# comment\nsystem = ac1\nts = 0.01\nhorizon = 4\npatterns = const, sin\nrealizations = 10\nseed = 9\nsigma_w = 2.0\ndiscretization = euler\n",
        )
        .unwrap();
        assert_eq!(config.system, "ac1");
        assert_eq!(config.horizon, 4);
        assert_eq!(config.patterns, vec![PatternKind::ConstantOne, PatternKind::Sine]);
        assert_eq!(config.seed, 9);
        assert_eq!(config.discretization, Discretization::Euler);
        assert_eq!(config.sigma_w, 2.0);

        assert!(BenchConfig::from_config_str("bogus = 1\n").is_err());
        assert!(BenchConfig::from_config_str("ts = fast\n").is_err());
        assert!(BenchConfig::from_config_str("realizations = 0\n").is_err());
    }

    fn toy_config(patterns: Vec<PatternKind>, realizations: usize) -> BenchConfig {
        BenchConfig {
            system: "toy".into(),
            horizon: 1,
            patterns,
            realizations,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn single_pattern_table_structure() {
        let sys = testkit::toy_scalar_system();
        let config = toy_config(vec![PatternKind::ConstantOne], 3);
        let table = run_benchmark_on_system(&sys, &config, Some(1)).unwrap();
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        assert_eq!(row.cells.len(), 3);
        let best: Vec<_> = row.cells.iter().filter(|c| c.is_best).collect();
        assert_eq!(best.len(), 1, "exactly one best per row");
        assert_eq!(best[0].relative_pct, Some(0.0));
        assert!(row.cells.iter().all(|c| c.relative_pct.unwrap() >= 0.0));
    }

    #[test]
    fn csv_is_deterministic_across_worker_counts() {
        let sys = testkit::toy_scalar_system();
        let config = toy_config(
            vec![PatternKind::Gaussian, PatternKind::UniformFull, PatternKind::WorstCase],
            64,
        );
        let observers = synthesize_observers(&sys, &config).unwrap();
        let a = render_table(&evaluate_observers(&sys, &config, &observers, Some(1)), ExportFormat::Csv);
        let b = render_table(&evaluate_observers(&sys, &config, &observers, Some(4)), ExportFormat::Csv);
        let c = render_table(&evaluate_observers(&sys, &config, &observers, Some(7)), ExportFormat::Csv);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn export_formats() {
        let sys = testkit::toy_scalar_system();
        let config = toy_config(vec![PatternKind::ConstantOne, PatternKind::Sine], 2);
        let table = run_benchmark_on_system(&sys, &config, Some(1)).unwrap();

        let csv = render_table(&table, ExportFormat::Csv);
        assert_eq!(csv.lines().count(), 1 + 2 * 3);

        let json = render_table(&table, ExportFormat::Json);
        let parsed: ResultTable = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, table, "JSON round trip is exact");

        let md = render_table(&table, ExportFormat::Markdown);
        let data_rows = md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| v, w")).count();
        assert_eq!(data_rows, 2, "one markdown row per pattern");

        // Empty pattern list: header-only CSV.
        let empty = toy_config(vec![], 2);
        let table = run_benchmark_on_system(&sys, &empty, Some(1)).unwrap();
        assert_eq!(render_table(&table, ExportFormat::Csv), "pattern,observer,avg_cost,relative_pct,is_best\n");
    }

    #[test]
    fn averaging_tables_recomputes_best() {
        let sys = testkit::toy_scalar_system();
        let config = toy_config(vec![PatternKind::Sine], 2);
        let t1 = run_benchmark_on_system(&sys, &config, Some(1)).unwrap();
        let avg = average_tables(&[t1.clone(), t1.clone()]).unwrap();
        assert_eq!(avg.rows[0].best_observer(), t1.rows[0].best_observer());
        for (a, b) in avg.rows[0].cells.iter().zip(&t1.rows[0].cells) {
            assert!((a.avg_cost.unwrap() - b.avg_cost.unwrap()).abs() < 1e-15);
        }
    }
}
