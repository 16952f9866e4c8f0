//! The `dephase` command-line front end.
//!
//! Every command reads an optional TOML file with one table per command,
//! applies `--set key=value` overrides and the `--seed`/`--out`/`--format`
//! flags, validates everything, computes all outputs in memory, and only then
//! writes files. Numbers are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{member_seed, simulate_ensemble, simulate_member, BlochTrajectory, StochasticFieldParams};
use crate::encoding::{decode, encode_with, physical_index};
use crate::error::Error;
use crate::linalg::{self, CMatrix};
use crate::register::{self, gamma_pm, Branch, RegisterState, Topology, MAX_QUBITS};
use crate::scaling::{runs_vs_size, ExponentMode, GammaModel, ScalingInput, ScalingReport};
use crate::spectral::{self, classify_regime, gamma_quadrature, log_grid, Dimension, Method, ReservoirSpec};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "DEPHASE_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{failed} of {total} rows failed")]
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(e) if e.is_numerical() => 3,
            CliError::Model(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Partial { .. } => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "dephase",
    version,
    about = "Dephasing of qubits and registers in a thermal bosonic reservoir"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Format of tabular output
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Override a configuration value, e.g. `--set reservoir.eta=10` or `--set gamma.grid.points=50`
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Stochastic-field Bloch trajectories and ensemble means
    Semiclassical,
    /// Single-qubit Γ(t) by quadrature and closed form
    Gamma,
    /// Collective exponents Γ± for a list of transit times
    Collective,
    /// Register evolution, optionally with the pair encoding
    Register,
    /// Run counts against register size
    Scaling,
}

impl Command {
    fn section(self) -> &'static str {
        match self {
            Command::Semiclassical => "semiclassical",
            Command::Gamma => "gamma",
            Command::Collective => "collective",
            Command::Register => "register",
            Command::Scaling => "scaling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

// ---------------------------------------------------------------- config

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
    pub semiclassical: SemiclassicalConfig,
    pub gamma: GammaConfig,
    pub collective: CollectiveConfig,
    pub register: RegisterConfig,
    pub scaling: ScalingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out: PathBuf::from("out"),
            format: Format::Csv,
            semiclassical: Default::default(),
            gamma: Default::default(),
            collective: Default::default(),
            register: Default::default(),
            scaling: Default::default(),
        }
    }
}

/// Reservoir settings shared by several commands; `ω_c = η·T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReservoirConfig {
    pub dimension: u8,
    pub eta: f64,
    pub temperature: f64,
    pub prefactor: f64,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        ReservoirConfig {
            dimension: 1,
            eta: 100.0,
            temperature: 1.0,
            prefactor: spectral::DEFAULT_PREFACTOR,
        }
    }
}

impl ReservoirConfig {
    fn spec(&self) -> CliResult<ReservoirSpec> {
        self.spec_for(Dimension::try_from(self.dimension)?, self.eta)
    }

    fn spec_for(&self, dimension: Dimension, eta: f64) -> CliResult<ReservoirSpec> {
        // checked even where a command sweeps dimensions itself
        Dimension::try_from(self.dimension)?;
        if !(eta.is_finite() && eta > 0.0) {
            return Err(CliError::Config(format!("eta must be positive, got {eta}")));
        }
        Ok(ReservoirSpec::new(
            dimension,
            eta * self.temperature,
            self.temperature,
            self.prefactor,
        )?)
    }
}

/// Time samples in units of 1/T: explicit `times`, or a log grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub times: Option<Vec<f64>>,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            t_min: 0.01,
            t_max: 100.0,
            points: 100,
            times: None,
        }
    }
}

impl TimeGrid {
    fn samples(&self) -> CliResult<Vec<f64>> {
        let times = match &self.times {
            Some(t) => t.clone(),
            None => {
                if !(self.t_min > 0.0 && self.t_max >= self.t_min && self.t_max.is_finite()) {
                    return Err(CliError::Config(format!(
                        "time grid needs 0 < t_min <= t_max, got [{}, {}]",
                        self.t_min, self.t_max
                    )));
                }
                log_grid(self.t_min, self.t_max, self.points)
            }
        };
        if times.is_empty() {
            return Err(CliError::Config("time grid is empty".into()));
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::Config("times must be finite and non-negative".into()));
        }
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(CliError::Config("times must be ordered".into()));
        }
        Ok(times)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemiclassicalConfig {
    pub field: StochasticFieldParams,
    pub s0: [f64; 3],
    /// Duration in units of 1/ω₀.
    pub t_max: f64,
    /// Indices of single members to write.
    pub members: Vec<u64>,
    /// Ensemble sizes to write.
    pub ensembles: Vec<usize>,
}

impl Default for SemiclassicalConfig {
    fn default() -> Self {
        SemiclassicalConfig {
            field: StochasticFieldParams::default(),
            s0: [1.0, 0.0, 0.0],
            t_max: 100.0,
            members: vec![0, 1],
            ensembles: vec![100, 500],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GammaConfig {
    pub reservoir: ReservoirConfig,
    pub grid: TimeGrid,
    /// η values for the surface output; empty disables it.
    pub eta_sweep: Vec<f64>,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig {
            reservoir: ReservoirConfig::default(),
            grid: TimeGrid {
                points: 200,
                ..TimeGrid::default()
            },
            eta_sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollectiveConfig {
    pub dimensions: Vec<u8>,
    pub reservoir: ReservoirConfig,
    /// Transit times in units of 1/T.
    pub transits: Vec<f64>,
    pub grid: TimeGrid,
}

impl Default for CollectiveConfig {
    fn default() -> Self {
        CollectiveConfig {
            dimensions: vec![1, 3],
            reservoir: ReservoirConfig::default(),
            transits: vec![0.0, 0.1, 1.0, 10.0],
            grid: TimeGrid::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// (|0…0⟩ + |1…1⟩)/√2
    Ghz,
    /// |+⟩^⊗L
    Plus,
    /// Random full-rank density matrix from the master seed
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncodingConfig {
    pub enabled: bool,
    pub logical_qubits: usize,
    pub logical_state: InitialState,
    /// One coordinate per pair; defaults to all pairs at 0.
    pub pair_positions: Option<Vec<f64>>,
    pub intra_pair_offset: f64,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig {
            enabled: false,
            logical_qubits: 1,
            logical_state: InitialState::Plus,
            pair_positions: None,
            intra_pair_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegisterConfig {
    pub reservoir: ReservoirConfig,
    pub n_qubits: usize,
    pub topology: Topology,
    /// One coordinate per qubit (transit time from the origin); defaults to co-located.
    pub positions: Option<Vec<f64>>,
    pub initial: InitialState,
    /// Basis index pairs `[i, j]` whose |ρ_ij| is written; defaults to `[2^L − 1, 0]`,
    /// or to the image of the logical `[2^ℓ − 1, 0]` when encoding.
    pub elements: Option<Vec<[usize; 2]>>,
    pub grid: TimeGrid,
    pub encoding: EncodingConfig,
}

impl Default for RegisterConfig {
    fn default() -> Self {
        RegisterConfig {
            reservoir: ReservoirConfig::default(),
            n_qubits: 3,
            topology: Topology::Shared,
            positions: None,
            initial: InitialState::Ghz,
            elements: None,
            grid: TimeGrid {
                times: None,
                t_min: 0.001,
                t_max: 10.0,
                points: 50,
            },
            encoding: EncodingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Reservoir,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub model: ModelKind,
    pub reservoir: ReservoirConfig,
    /// Slope of Γ(t) = rate·t for the linear model.
    pub rate: f64,
    pub topology: Topology,
    pub spacing: f64,
    /// Time per elementary step, in units of 1/T; a run of L qubits lasts τL².
    pub tau: f64,
    pub target_p: f64,
    pub l_min: usize,
    pub l_max: usize,
    pub mode: ExponentMode,
    /// Available coherence time over τ.
    pub t_ratio: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            model: ModelKind::Reservoir,
            reservoir: ReservoirConfig::default(),
            rate: 0.0,
            topology: Topology::Independent,
            spacing: 0.0,
            tau: 1.0,
            target_p: 0.99,
            l_min: 1,
            l_max: 20,
            mode: ExponentMode::ClosedForm,
            t_ratio: 1e6,
        }
    }
}

const SECTIONS: [&str; 5] = ["semiclassical", "gamma", "collective", "register", "scaling"];

/// Parse `KEY=VALUE`; keys without a known top-level prefix go into the command's table.
fn apply_override(root: &mut toml::Table, command: Command, item: &str) -> CliResult<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {item:?} is not KEY=VALUE")))?;
    let key = key.trim();
    let mut path: Vec<&str> = key.split('.').collect();
    let top_level = ["seed", "out", "format"];
    if !(SECTIONS.contains(&path[0]) || (path.len() == 1 && top_level.contains(&path[0]))) {
        path.insert(0, command.section());
    }
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed key {key:?}")));
    }
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut table = root;
    for p in parents {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("{key:?}: {p:?} is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Merge file, overrides and flags into a validated-by-type configuration.
pub fn load_config(common: &CommonArgs, command: Command) -> CliResult<RunConfig> {
    let mut root = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    for item in &common.overrides {
        apply_override(&mut root, command, item)?;
    }
    let mut config: RunConfig = toml::Value::Table(root)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    if let Some(format) = common.format {
        config.format = format;
    }
    Ok(config)
}

// ---------------------------------------------------------------- tables

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Num(_) | Cell::Empty => s.serialize_none(),
            Cell::Int(v) => s.serialize_u64(*v),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(v) => format!("{v:.16e}"),
                Cell::Int(v) => v.to_string(),
                Cell::Text(t) => t.clone(),
                Cell::Empty => String::new(),
            }))
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("tables serialize");
        out.push(b'\n');
        out
    }
}

/// Files produced by a command, written only after everything succeeded.
#[derive(Debug, Default)]
pub struct Output {
    pub files: Vec<(String, Vec<u8>)>,
    pub messages: Vec<String>,
    pub failed_rows: usize,
    pub total_rows: usize,
}

impl Output {
    fn table(&mut self, stem: &str, table: &Table, format: Format) {
        let (name, bytes) = match format {
            Format::Csv => (format!("{stem}.csv"), table.to_csv()),
            Format::Json => (format!("{stem}.json"), table.to_json()),
        };
        self.files.push((name, bytes));
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io_err(&path))?;
        }
        Ok(())
    }
}

fn num_or_fail(value: crate::Result<f64>, failed: &mut usize, what: &str) -> Cell {
    match value {
        Ok(v) => Cell::Num(v),
        Err(e) => {
            *failed += 1;
            eprintln!("warning: {what}: {e}");
            Cell::Empty
        }
    }
}

// ---------------------------------------------------------------- commands

fn trajectory_table(tr: &BlochTrajectory) -> Table {
    let mut table = Table::new(&["t", "sx", "sy", "sz"]);
    for k in 0..tr.len() {
        table.rows.push(vec![
            Cell::Num(tr.times[k]),
            Cell::Num(tr.sx[k]),
            Cell::Num(tr.sy[k]),
            Cell::Num(tr.sz[k]),
        ]);
    }
    table
}

pub fn cmd_semiclassical(config: &RunConfig) -> CliResult<Output> {
    let c = &config.semiclassical;
    let s0 = c.s0.into();
    if c.members.is_empty() && c.ensembles.is_empty() {
        return Err(CliError::Config(
            "nothing to simulate: members and ensembles are empty".into(),
        ));
    }
    if c.ensembles.contains(&0) {
        return Err(CliError::Config("ensemble sizes must be positive".into()));
    }
    let mut out = Output::default();
    let members = c
        .members
        .par_iter()
        .map(|&k| simulate_member(&c.field, s0, c.t_max, member_seed(config.seed, k)))
        .collect::<crate::Result<Vec<_>>>()?;
    for (k, tr) in c.members.iter().zip(&members) {
        out.table(&format!("member_{k}"), &trajectory_table(tr), config.format);
    }
    for &n in &c.ensembles {
        let tr = simulate_ensemble(&c.field, s0, c.t_max, n, config.seed)?;
        out.table(&format!("ensemble_{n}"), &trajectory_table(&tr), config.format);
    }
    out.messages.push(format!("seed = {}", config.seed));
    Ok(out)
}

fn regime_cell(spec: &ReservoirSpec, t: f64) -> Cell {
    if t > 0.0 {
        Cell::Text(classify_regime(spec, t).as_str().to_string())
    } else {
        Cell::Empty
    }
}

pub fn cmd_gamma(config: &RunConfig) -> CliResult<Output> {
    let c = &config.gamma;
    let spec = c.reservoir.spec()?;
    let times = c.grid.samples()?;
    let sweep = c
        .eta_sweep
        .iter()
        .map(|&eta| c.reservoir.spec_for(spec.dimension, eta))
        .collect::<CliResult<Vec<_>>>()?;
    let closed = Method::closed_form_for(spec.dimension);
    let mut out = Output::default();
    let mut failed = 0;

    let mut table = Table::new(&["t", "gamma_quadrature", "closed_form", "regime"]);
    let rows: Vec<_> = times
        .par_iter()
        .map(|&t| {
            let tp = t / spec.temperature;
            (
                gamma_quadrature(&spec, tp),
                spectral::gamma(&spec, tp, closed),
                regime_cell(&spec, tp),
            )
        })
        .collect();
    for (&t, (q, cf, regime)) in times.iter().zip(rows) {
        let q = num_or_fail(q, &mut failed, &format!("gamma_quadrature at t={t}"));
        let cf = num_or_fail(cf, &mut failed, &format!("closed form at t={t}"));
        table.rows.push(vec![Cell::Num(t), q, cf, regime]);
    }
    out.total_rows += table.rows.len();
    out.table("gamma", &table, config.format);

    if !sweep.is_empty() {
        let mut surface = Table::new(&["eta", "t", "gamma_quadrature", "closed_form"]);
        let jobs: Vec<(f64, &ReservoirSpec, f64)> = c
            .eta_sweep
            .iter()
            .zip(&sweep)
            .flat_map(|(&eta, s)| times.iter().map(move |&t| (eta, s, t)))
            .collect();
        let values: Vec<_> = jobs
            .par_iter()
            .map(|&(_, s, t)| {
                let tp = t / s.temperature;
                (gamma_quadrature(s, tp), spectral::gamma(s, tp, closed))
            })
            .collect();
        for (&(eta, _, t), (q, cf)) in jobs.iter().zip(values) {
            let what = format!("eta={eta} t={t}");
            let q = num_or_fail(q, &mut failed, &what);
            let cf = num_or_fail(cf, &mut failed, &what);
            surface.rows.push(vec![Cell::Num(eta), Cell::Num(t), q, cf]);
        }
        out.total_rows += surface.rows.len();
        out.table("gamma_surface", &surface, config.format);
    }
    out.failed_rows = failed;
    Ok(out)
}

pub fn cmd_collective(config: &RunConfig) -> CliResult<Output> {
    let c = &config.collective;
    let times = c.grid.samples()?;
    if c.dimensions.is_empty() || c.transits.is_empty() {
        return Err(CliError::Config("dimensions and transits must be non-empty".into()));
    }
    if c.transits.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(CliError::Config("transit times must be finite and non-negative".into()));
    }
    let specs = c
        .dimensions
        .iter()
        .map(|&d| c.reservoir.spec_for(Dimension::try_from(d)?, c.reservoir.eta))
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = Output::default();
    let mut failed = 0;
    for spec in &specs {
        let jobs: Vec<(f64, f64)> = c
            .transits
            .iter()
            .flat_map(|&ts| times.iter().map(move |&t| (ts, t)))
            .collect();
        let values: Vec<_> = jobs
            .par_iter()
            .map(|&(ts, t)| {
                let (tp, tsp) = (t / spec.temperature, ts / spec.temperature);
                (
                    gamma_quadrature(spec, tp),
                    gamma_pm(spec, tsp, Branch::Plus, tp),
                    gamma_pm(spec, tsp, Branch::Minus, tp),
                )
            })
            .collect();
        let mut table = Table::new(&["ts", "t", "gamma_single", "gamma_plus", "gamma_minus"]);
        for (&(ts, t), (g, p, m)) in jobs.iter().zip(values) {
            let what = format!("{} ts={ts} t={t}", spec.dimension);
            table.rows.push(vec![
                Cell::Num(ts),
                Cell::Num(t),
                num_or_fail(g, &mut failed, &what),
                num_or_fail(p, &mut failed, &what),
                num_or_fail(m, &mut failed, &what),
            ]);
        }
        out.total_rows += table.rows.len();
        out.table(&format!("collective_{}", spec.dimension), &table, config.format);
    }
    out.failed_rows = failed;
    Ok(out)
}

fn initial_density(kind: InitialState, n_qubits: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    match kind {
        InitialState::Ghz => linalg::pure_state(&register::ghz_amplitudes(n_qubits)),
        InitialState::Plus => linalg::pure_state(&register::plus_amplitudes(n_qubits)),
        InitialState::Random => linalg::random_density_matrix(1 << n_qubits, rng),
    }
}

pub fn cmd_register(config: &RunConfig) -> CliResult<Output> {
    let c = &config.register;
    let spec = c.reservoir.spec()?;
    let times = c.grid.samples()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let enc = &c.encoding;
    let (state, logical) = if enc.enabled {
        if enc.logical_qubits == 0 || enc.logical_qubits > crate::encoding::MAX_LOGICAL_QUBITS {
            return Err(CliError::Config(format!(
                "logical_qubits must be 1..={}",
                crate::encoding::MAX_LOGICAL_QUBITS
            )));
        }
        let logical = initial_density(enc.logical_state, enc.logical_qubits, &mut rng);
        let pairs = enc
            .pair_positions
            .clone()
            .unwrap_or_else(|| vec![0.0; enc.logical_qubits]);
        let reg = encode_with(&logical, &pairs, enc.intra_pair_offset, c.topology)?;
        (reg.into_physical(), Some(logical))
    } else {
        if c.n_qubits == 0 || c.n_qubits > MAX_QUBITS {
            return Err(CliError::Config(format!("n_qubits must be 1..={MAX_QUBITS}")));
        }
        let rho = initial_density(c.initial, c.n_qubits, &mut rng);
        let positions = c.positions.clone().unwrap_or_else(|| vec![0.0; c.n_qubits]);
        (RegisterState::new(rho, positions, c.topology)?, None)
    };

    let dim = state.dim();
    let default_element = match &logical {
        // coherence between the logical all-ones and all-zeros code words
        Some(_) => {
            let l = enc.logical_qubits;
            [physical_index((1 << l) - 1, l), physical_index(0, l)]
        }
        None => [dim - 1, 0],
    };
    let elements = c.elements.clone().unwrap_or_else(|| vec![default_element]);
    if let Some(bad) = elements.iter().find(|[i, j]| *i >= dim || *j >= dim) {
        return Err(CliError::Config(format!(
            "element {bad:?} outside a {dim}-dimensional register"
        )));
    }

    let mut columns = vec!["t".to_string(), "gamma".to_string()];
    columns.extend(elements.iter().map(|[i, j]| format!("abs_rho_{i}_{j}")));
    if logical.is_some() {
        columns.push("fidelity".to_string());
    }

    let rows = times
        .par_iter()
        .map(|&t| -> CliResult<Vec<Cell>> {
            let tp = t / spec.temperature;
            let evolved = register::evolve(&state, &spec, tp)?;
            let mut row = vec![Cell::Num(t), Cell::Num(gamma_quadrature(&spec, tp)?)];
            row.extend(elements.iter().map(|&[i, j]| Cell::Num(evolved.element(i, j).norm())));
            if let Some(target) = &logical {
                let reg = crate::encoding::LogicalRegister::from_physical(evolved)?;
                let decoded = decode(&reg)?;
                row.push(Cell::Num(linalg::fidelity(&decoded.rho, target)));
            }
            Ok(row)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut out = Output::default();
    let table = Table { columns, rows };
    out.total_rows = table.rows.len();
    out.table("register", &table, config.format);
    Ok(out)
}

pub fn scaling_input(c: &ScalingConfig) -> CliResult<ScalingInput> {
    if c.l_min == 0 || c.l_max < c.l_min {
        return Err(CliError::Config(format!(
            "need 1 <= l_min <= l_max, got {}..{}",
            c.l_min, c.l_max
        )));
    }
    let model = match c.model {
        ModelKind::Reservoir => GammaModel::Reservoir(c.reservoir.spec()?),
        ModelKind::Linear => GammaModel::Linear { rate: c.rate },
    };
    let input = ScalingInput {
        model,
        topology: c.topology,
        spacing: c.spacing,
        tau: c.tau,
        target_p: c.target_p,
        sizes: (c.l_min..=c.l_max).collect(),
        mode: c.mode,
        t_ratio: Some(c.t_ratio),
    };
    input.validate()?;
    Ok(input)
}

fn scaling_table(report: &ScalingReport) -> Table {
    let mut table = Table::new(&["L", "eps", "k"]);
    for (n, &l) in report.input_sizes.iter().enumerate() {
        table.rows.push(vec![
            Cell::Int(l as u64),
            Cell::Num(report.epsilon[n]),
            report.runs[n].map_or(Cell::Empty, Cell::Int),
        ]);
    }
    table
}

pub fn cmd_scaling(config: &RunConfig) -> CliResult<Output> {
    let input = scaling_input(&config.scaling)?;
    let report = runs_vs_size(&input)?;
    let mut out = Output::default();
    let mut json = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    json.push(b'\n');
    out.files.push(("scaling.json".into(), json));
    out.files.push(("scaling.csv".into(), scaling_table(&report).to_csv()));
    out.total_rows = report.input_sizes.len();
    if let Some(l_max) = report.l_max {
        out.messages.push(format!("L_max = {l_max}"));
    }
    let mut fit = String::from("fitted exponent of ln k vs L = ");
    match report.fitted_exponent {
        Some(x) => write!(fit, "{x:.6}").expect("string write"),
        None => fit.push_str("n/a (k = 1 throughout)"),
    }
    out.messages.push(fit);
    Ok(out)
}

pub fn execute(command: Command, config: &RunConfig) -> CliResult<Output> {
    match command {
        Command::Semiclassical => cmd_semiclassical(config),
        Command::Gamma => cmd_gamma(config),
        Command::Collective => cmd_collective(config),
        Command::Register => cmd_register(config),
        Command::Scaling => cmd_scaling(config),
    }
}

fn run_parsed(cli: &Cli) -> CliResult<()> {
    let config = load_config(&cli.common, cli.command)?;
    let output = execute(cli.command, &config)?;
    output.write(&config.out)?;
    for m in &output.messages {
        println!("{m}");
    }
    if output.failed_rows > 0 {
        return Err(CliError::Partial {
            failed: output.failed_rows,
            total: output.total_rows,
        });
    }
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a second initialization in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match configure_threads().and_then(|()| run_parsed(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(overrides: &[&str]) -> CommonArgs {
        CommonArgs {
            config: None,
            out: None,
            seed: None,
            format: None,
            overrides: overrides.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn overrides_land_in_command_table() {
        let c = load_config(
            &args(&["grid.points=7", "register.n_qubits=2", "seed=9"]),
            Command::Gamma,
        )
        .unwrap();
        assert_eq!(c.gamma.reservoir.eta, 100.0);
        assert_eq!(c.gamma.grid.points, 7);
        assert_eq!(c.register.n_qubits, 2);
        assert_eq!(c.seed, 9);
        let c = load_config(&args(&["reservoir.eta=10"]), Command::Gamma).unwrap();
        assert_eq!(c.gamma.reservoir.eta, 10.0);
        let c = load_config(&args(&["topology=shared"]), Command::Scaling).unwrap();
        assert_eq!(c.scaling.topology, Topology::Shared);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load_config(&args(&["gamma.bogus=1"]), Command::Gamma).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(load_config(&args(&["noequals"]), Command::Gamma).is_err());
        assert!(load_config(&args(&["eta=10"]), Command::Gamma).is_err());
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let mut t = Table::new(&["a", "b"]);
        t.rows.push(vec![Cell::Num(0.1), Cell::Text("x".into())]);
        let text = String::from_utf8(t.to_csv()).unwrap();
        assert_eq!(text, "a,b\n1.0000000000000001e-1,x\n");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Model(Error::UnachievableTarget).exit_code(), 2);
        assert_eq!(CliError::Model(Error::DecodeLeakage { mass: 1.0 }).exit_code(), 3);
        let io = CliError::Io {
            path: PathBuf::from("x"),
            source: io::Error::other("x"),
        };
        assert_eq!(io.exit_code(), 4);
    }

    #[test]
    fn scaling_default_prints_size_bound() {
        let out = cmd_scaling(&RunConfig::default()).unwrap();
        assert!(out.messages.contains(&"L_max = 99".to_string()));
    }
}
