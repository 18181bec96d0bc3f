//! Experiment configuration, presets and the sweep runner behind the
//! command line interface.
//!
//! A sweep is a Cartesian grid over offline dataset sizes, side-information
//! modes, visibility levels, exploration scalings and seeds. Every cell
//! shares one environment (weights and behavior policy fixed by the master
//! seed) and one offline log; runs differ only in their online streams.
//! Results land in a CSV with one row per round per cell, written in a
//! deterministic order so repeat runs reproduce the file bitwise.

use crate::bandit::{
    run_doubling_oful, run_projected_oful, ArmSideInfo, BanditError, ConfidenceParams, CrossSource,
    DoublingMode, RegretTrace, SideInformation,
};
use crate::env::{
    stream_rng, streams, BanditEnvironment, EnvError, OfflineDataset, SimStreams,
    MIN_MOMENT_SAMPLES,
};
use crate::estimation::{offline_least_squares_narrowed, EstimationError, OfflineSideInfo};
use rayon::prelude::*;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {what}")]
    Config { what: String },
    #[error("unknown preset '{name}' (expected fig2a, fig2b or fig2c)")]
    UnknownPreset { name: String },
    #[error(
        "no behavior policy covered every arm within {attempts} attempts \
         (K = {n_arms}, smallest dataset {min_rows} rows)"
    )]
    PolicySearchExhausted {
        attempts: u32,
        n_arms: usize,
        min_rows: usize,
    },
    #[error("config file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
}

impl CliError {
    /// Process exit code: 2 for configuration mistakes the user can fix in
    /// the config file or flags, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::UnknownPreset { .. } | CliError::Parse(_) => 2,
            _ => 1,
        }
    }
}

/// How the learner obtains the cross moments behind each deconfounder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Cross moments from a Monte Carlo oracle; deconfounders fixed up front.
    KnownR12,
    /// Cross moments re-estimated online from behavior policy queries.
    EstimatedR12,
    /// Both of the above, as separate cells.
    Both,
}

/// Per-cell mode label, also the CSV `mode` column value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabel {
    KnownR12,
    EstimatedR12,
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeLabel::KnownR12 => "known_r12",
            ModeLabel::EstimatedR12 => "estimated_r12",
        })
    }
}

/// Refit schedule for the estimated mode. `continuous` (the default)
/// re-estimates the deconfounders every round without resets; `faithful`
/// refits only at power-of-two rounds and restarts the regressions there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    Faithful,
    Continuous,
}

impl From<ScheduleMode> for DoublingMode {
    fn from(s: ScheduleMode) -> Self {
        match s {
            ScheduleMode::Faithful => DoublingMode::Faithful,
            ScheduleMode::Continuous => DoublingMode::Continuous,
        }
    }
}

/// Fully resolved experiment description. Build one from a preset, a config
/// file, command line overrides, or [`ExperimentConfig::default`] plus field
/// edits.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Label written to the CSV `preset` column.
    pub preset: String,
    /// Context dimension.
    pub d: usize,
    /// Number of arms.
    pub k: usize,
    /// Online horizon.
    pub t: usize,
    /// Visibility levels; 0 runs the no-side-information baseline.
    pub l_values: Vec<usize>,
    /// Exploration width multipliers.
    pub alpha_values: Vec<f64>,
    /// Offline dataset sizes.
    pub n_offline: Vec<usize>,
    /// Reward noise standard deviation.
    pub sigma: f64,
    /// Confidence level.
    pub delta: f64,
    /// Ridge weight.
    pub lambda: f64,
    pub mode: RunMode,
    pub doubling_mode: ScheduleMode,
    /// Online seeds; one independent run per seed.
    pub seeds: Vec<u64>,
    /// Seed fixing the environment, the offline log and the moment oracle.
    pub master_seed: u64,
    /// Monte Carlo draws for oracle cross moments (known mode).
    pub oracle_samples: u64,
    pub output_path: PathBuf,
    /// Worker threads; 0 uses all cores, 1 forces serial execution.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: "custom".into(),
            d: 30,
            k: 30,
            t: 20_000,
            l_values: vec![0, 10, 20, 25],
            alpha_values: vec![1.0],
            n_offline: vec![1_000_000],
            sigma: 0.1,
            delta: 0.01,
            lambda: 1.0,
            mode: RunMode::Both,
            doubling_mode: ScheduleMode::Continuous,
            seeds: vec![1, 2, 3, 4, 5],
            master_seed: 1729,
            oracle_samples: 2_000_000,
            output_path: PathBuf::from("traces.csv"),
            threads: 0,
        }
    }
}

/// Named preset grids. `fig2a` sweeps the visibility level under both modes;
/// `fig2b` sweeps the exploration multiplier at high visibility; `fig2c`
/// sweeps the offline dataset size.
pub fn preset_config(name: &str) -> Result<ExperimentConfig, CliError> {
    let base = ExperimentConfig {
        preset: name.to_string(),
        ..ExperimentConfig::default()
    };
    match name {
        "custom" => Ok(base),
        "fig2a" => Ok(ExperimentConfig {
            l_values: vec![0, 10, 20, 25],
            alpha_values: vec![1.0],
            n_offline: vec![1_000_000],
            mode: RunMode::Both,
            ..base
        }),
        "fig2b" => Ok(ExperimentConfig {
            l_values: vec![25],
            alpha_values: vec![0.01, 0.1, 0.5, 1.0, 2.0],
            n_offline: vec![1_000_000],
            mode: RunMode::EstimatedR12,
            ..base
        }),
        // The smallest grid point must still give every arm enough rows for
        // an L = 25 regression (K = 30 arms need > 26 rows each), which a
        // thousand-row log cannot reliably provide.
        "fig2c" => Ok(ExperimentConfig {
            l_values: vec![25],
            alpha_values: vec![1.0],
            n_offline: vec![3_000, 10_000, 100_000, 1_000_000],
            mode: RunMode::EstimatedR12,
            ..base
        }),
        _ => Err(CliError::UnknownPreset { name: name.into() }),
    }
}

/// Scalar-or-list convenience for `n_offline` in config files.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl From<OneOrMany> for Vec<usize> {
    fn from(v: OneOrMany) -> Self {
        match v {
            OneOrMany::One(n) => vec![n],
            OneOrMany::Many(ns) => ns,
        }
    }
}

/// Config-file shape: every field optional, unknown keys rejected. Fields
/// that are present override the base config (default or preset).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub preset: Option<String>,
    pub d: Option<usize>,
    pub k: Option<usize>,
    pub t: Option<usize>,
    pub l_values: Option<Vec<usize>>,
    pub alpha_values: Option<Vec<f64>>,
    pub n_offline: Option<OneOrMany>,
    pub sigma: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub mode: Option<RunMode>,
    pub doubling_mode: Option<ScheduleMode>,
    pub seeds: Option<Vec<u64>>,
    pub master_seed: Option<u64>,
    pub oracle_samples: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl PartialConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        Ok(toml::from_str(text)?)
    }

    /// Overlays the fields that are present onto `base`. The `preset` field
    /// is ignored here; resolution handles it first.
    pub fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut cfg = base.clone();
        if let Some(v) = &self.d {
            cfg.d = *v;
        }
        if let Some(v) = &self.k {
            cfg.k = *v;
        }
        if let Some(v) = &self.t {
            cfg.t = *v;
        }
        if let Some(v) = &self.l_values {
            cfg.l_values = v.clone();
        }
        if let Some(v) = &self.alpha_values {
            cfg.alpha_values = v.clone();
        }
        if let Some(v) = &self.n_offline {
            cfg.n_offline = v.clone().into();
        }
        if let Some(v) = &self.sigma {
            cfg.sigma = *v;
        }
        if let Some(v) = &self.delta {
            cfg.delta = *v;
        }
        if let Some(v) = &self.lambda {
            cfg.lambda = *v;
        }
        if let Some(v) = &self.mode {
            cfg.mode = *v;
        }
        if let Some(v) = &self.doubling_mode {
            cfg.doubling_mode = *v;
        }
        if let Some(v) = &self.seeds {
            cfg.seeds = v.clone();
        }
        if let Some(v) = &self.master_seed {
            cfg.master_seed = *v;
        }
        if let Some(v) = &self.oracle_samples {
            cfg.oracle_samples = *v;
        }
        if let Some(v) = &self.output_path {
            cfg.output_path = v.clone();
        }
        if let Some(v) = &self.threads {
            cfg.threads = *v;
        }
        cfg
    }
}

/// Command line overrides applied on top of file and preset.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub master_seed: Option<u64>,
}

/// Resolution order: defaults, then the preset (from the flag, else the
/// config file's `preset` key), then explicit config file fields, then
/// command line flags.
pub fn resolve_config(
    file: Option<&Path>,
    overrides: &CliOverrides,
) -> Result<ExperimentConfig, CliError> {
    let partial = match file {
        Some(path) => PartialConfig::parse(&std::fs::read_to_string(path)?)?,
        None => PartialConfig::default(),
    };
    let preset_name = overrides
        .preset
        .clone()
        .or_else(|| partial.preset.clone())
        .unwrap_or_else(|| "custom".into());
    let base = preset_config(&preset_name)?;
    let mut cfg = partial.apply(&base);
    if let Some(out) = &overrides.out {
        cfg.output_path = out.clone();
    }
    if let Some(threads) = overrides.threads {
        cfg.threads = threads;
    }
    if let Some(seed) = overrides.master_seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

/// Non-fatal configuration diagnostics; an empty list means the config can
/// run. Each entry is one human-readable problem.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut issues = Vec::new();
    if cfg.d == 0 {
        issues.push("d must be at least 1".into());
    }
    if cfg.k == 0 {
        issues.push("k must be at least 1".into());
    }
    if cfg.t == 0 {
        issues.push("t must be at least 1".into());
    }
    if cfg.l_values.is_empty() {
        issues.push("l_values must not be empty".into());
    }
    for &l in &cfg.l_values {
        if l >= cfg.d && cfg.d > 0 {
            issues.push(format!("visibility level {l} must be below d = {}", cfg.d));
        }
    }
    let mut sorted_l = cfg.l_values.clone();
    sorted_l.sort_unstable();
    sorted_l.dedup();
    if sorted_l.len() != cfg.l_values.len() {
        issues.push("l_values contains duplicates".into());
    }
    if cfg.alpha_values.is_empty() {
        issues.push("alpha_values must not be empty".into());
    }
    for &a in &cfg.alpha_values {
        if !a.is_finite() || a < 0.0 {
            issues.push(format!("alpha {a} must be finite and nonnegative"));
        }
    }
    if cfg.n_offline.is_empty() {
        issues.push("n_offline must not be empty".into());
    }
    for &n in &cfg.n_offline {
        if n == 0 {
            issues.push("n_offline entries must be positive".into());
        }
    }
    let mut sorted_n = cfg.n_offline.clone();
    sorted_n.sort_unstable();
    sorted_n.dedup();
    if sorted_n.len() != cfg.n_offline.len() {
        issues.push("n_offline contains duplicates".into());
    }
    if !cfg.sigma.is_finite() || cfg.sigma < 0.0 {
        issues.push(format!(
            "sigma {} must be finite and nonnegative",
            cfg.sigma
        ));
    }
    if !cfg.delta.is_finite() || cfg.delta <= 0.0 || cfg.delta >= 1.0 {
        issues.push(format!("delta {} must lie in (0, 1)", cfg.delta));
    }
    if !cfg.lambda.is_finite() || cfg.lambda <= 0.0 {
        issues.push(format!("lambda {} must be positive", cfg.lambda));
    }
    if cfg.seeds.is_empty() {
        issues.push("seeds must not be empty".into());
    }
    let needs_dataset = cfg.l_values.iter().any(|&l| l > 0);
    if needs_dataset {
        let max_l = *cfg.l_values.iter().max().unwrap_or(&0);
        for &n in &cfg.n_offline {
            if n > 0 && n < cfg.k * (max_l + 1) {
                issues.push(format!(
                    "n_offline = {n} cannot give all {} arms the {} rows needed at L = {max_l}",
                    cfg.k,
                    max_l + 1
                ));
            }
        }
        if uses_known_mode(cfg) && cfg.oracle_samples < MIN_MOMENT_SAMPLES {
            issues.push(format!(
                "oracle_samples {} is below the minimum {MIN_MOMENT_SAMPLES}",
                cfg.oracle_samples
            ));
        }
    }
    issues
}

fn uses_known_mode(cfg: &ExperimentConfig) -> bool {
    matches!(cfg.mode, RunMode::KnownR12 | RunMode::Both)
}

/// One grid point of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub n_offline: usize,
    pub mode: ModeLabel,
    pub l: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// Full Cartesian grid in the order the CSV is written:
/// `n_offline -> mode -> l -> alpha -> seed`, each in config order. `l = 0`
/// cells appear under every requested mode label so both series stay
/// complete in downstream plots.
pub fn plan_cells(cfg: &ExperimentConfig) -> Vec<CellSpec> {
    let modes: &[ModeLabel] = match cfg.mode {
        RunMode::KnownR12 => &[ModeLabel::KnownR12],
        RunMode::EstimatedR12 => &[ModeLabel::EstimatedR12],
        RunMode::Both => &[ModeLabel::KnownR12, ModeLabel::EstimatedR12],
    };
    let mut cells = Vec::new();
    for &n_offline in &cfg.n_offline {
        for &mode in modes {
            for &l in &cfg.l_values {
                for &alpha in &cfg.alpha_values {
                    for &seed in &cfg.seeds {
                        cells.push(CellSpec {
                            n_offline,
                            mode,
                            l,
                            alpha,
                            seed,
                        });
                    }
                }
            }
        }
    }
    cells
}

/// Confidence parameters every cell derives from the config. Contexts and
/// weight rows both live on the unit sphere, so every norm bound is 1.
/// Cross-error coefficients stay at zero: runs plug the current estimate in
/// directly and leave the radius inflation to the error-budget API.
pub fn cell_params(cfg: &ExperimentConfig, alpha: f64) -> ConfidenceParams {
    ConfidenceParams {
        ridge: cfg.lambda,
        delta: cfg.delta,
        noise_sd: cfg.sigma,
        context_bound: 1.0,
        weight_bound: 1.0,
        offline_context_bound: 1.0,
        offline_weight_bound: 1.0,
        width_scale: alpha,
        cross_sqrt_coeff: 0.0,
        cross_inv_coeff: 0.0,
        horizon: cfg.t,
    }
}

const MAX_POLICY_ATTEMPTS: u32 = 16;

/// Environment plus offline log satisfying every cell's sampling needs: all
/// arms covered, and within the smallest requested prefix each arm has
/// strictly more rows than the largest visibility level. Retries with a
/// fresh behavior policy (same weights) until the log qualifies.
pub fn prepare_environment(
    cfg: &ExperimentConfig,
) -> Result<(BanditEnvironment, Option<OfflineDataset>), CliError> {
    let max_l = cfg.l_values.iter().copied().max().unwrap_or(0);
    if max_l == 0 {
        let env = BanditEnvironment::generate(cfg.d, cfg.k, cfg.sigma, cfg.master_seed)?;
        return Ok((env, None));
    }
    let max_n = *cfg.n_offline.iter().max().expect("validated nonempty");
    let min_n = *cfg.n_offline.iter().min().expect("validated nonempty");
    for attempt in 0..MAX_POLICY_ATTEMPTS {
        let env = BanditEnvironment::generate_with_policy_attempt(
            cfg.d,
            cfg.k,
            cfg.sigma,
            cfg.master_seed,
            attempt,
        )?;
        let mut rng = stream_rng(cfg.master_seed, streams::OFFLINE);
        match env.generate_offline_dataset(max_l, max_n, &mut rng) {
            Ok(data) => {
                if prefix_covers_arms(&data, min_n, cfg.k, max_l + 1) {
                    return Ok((env, Some(data)));
                }
            }
            Err(EnvError::ArmNeverSampled { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Err(CliError::PolicySearchExhausted {
        attempts: MAX_POLICY_ATTEMPTS,
        n_arms: cfg.k,
        min_rows: min_n,
    })
}

fn prefix_covers_arms(data: &OfflineDataset, prefix: usize, k: usize, need: usize) -> bool {
    let mut counts = vec![0usize; k];
    for i in 0..prefix.min(data.len()) {
        counts[data.action(i)] += 1;
    }
    counts.iter().all(|&c| c >= need)
}

/// One executed cell: its grid point and regret trace.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub spec: CellSpec,
    pub trace: RegretTrace,
}

/// Runs the whole grid. Heavy shared work (environment, offline log, side
/// information per dataset size and visibility level, oracle moments) is
/// done once up front; cells then run independently, in parallel unless
/// `threads == 1`. Results come back in grid order regardless of thread
/// count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<CellRun>, CliError> {
    let issues = validate(cfg);
    if !issues.is_empty() {
        return Err(CliError::Config {
            what: issues.join("; "),
        });
    }
    let (env, dataset) = prepare_environment(cfg)?;

    // Side information per (dataset size, visibility level). Narrowed reads
    // reuse the one stored log; smaller sizes are prefixes of it.
    let mut side_infos: BTreeMap<(usize, usize), OfflineSideInfo> = BTreeMap::new();
    let mut known_infos: BTreeMap<(usize, usize), Vec<ArmSideInfo>> = BTreeMap::new();
    if let Some(data) = &dataset {
        let oracle = if uses_known_mode(cfg) {
            let mut rng = stream_rng(cfg.master_seed, streams::MOMENTS);
            Some(env.full_conditional_moments(cfg.oracle_samples, &mut rng)?)
        } else {
            None
        };
        let positive_l: Vec<usize> = cfg.l_values.iter().copied().filter(|&l| l > 0).collect();
        for &n in &cfg.n_offline {
            let trunc;
            let view = if n == data.len() {
                data
            } else {
                trunc = data.truncated(n)?;
                &trunc
            };
            for &l in &positive_l {
                let side = offline_least_squares_narrowed(view, l)?;
                if let Some(moments) = &oracle {
                    let infos = moments
                        .slice(l)
                        .iter()
                        .enumerate()
                        .map(|(a, arm_moments)| {
                            // Known mode keeps the empirical visible moment
                            // and coefficients; only the cross block comes
                            // from the oracle.
                            let coupling = side.solve_visible(a, &arm_moments.cross);
                            Ok(ArmSideInfo {
                                deconfounder: crate::linalg::build_deconfounder(
                                    l, cfg.d, coupling,
                                )?,
                                coeffs: side.coeffs(a),
                            })
                        })
                        .collect::<Result<Vec<_>, CliError>>()?;
                    known_infos.insert((n, l), infos);
                }
                side_infos.insert((n, l), side);
            }
        }
    }

    let cells = plan_cells(cfg);
    let run_cell = |spec: &CellSpec| -> Result<CellRun, CliError> {
        let params = cell_params(cfg, spec.alpha);
        let mut streams = SimStreams::for_seed(spec.seed);
        let trace = if spec.l == 0 {
            run_projected_oful(&env, &SideInformation::None, &params, cfg.t, &mut streams)?
        } else {
            match spec.mode {
                ModeLabel::KnownR12 => {
                    let infos = known_infos
                        .get(&(spec.n_offline, spec.l))
                        .expect("side info precomputed for every grid point")
                        .clone();
                    run_projected_oful(
                        &env,
                        &SideInformation::Known(infos),
                        &params,
                        cfg.t,
                        &mut streams,
                    )?
                }
                ModeLabel::EstimatedR12 => {
                    let side = side_infos
                        .get(&(spec.n_offline, spec.l))
                        .expect("side info precomputed for every grid point");
                    run_doubling_oful(
                        &env,
                        side,
                        &params,
                        cfg.t,
                        cfg.doubling_mode.into(),
                        &CrossSource::Queries,
                        &mut streams,
                    )?
                }
            }
        };
        Ok(CellRun {
            spec: spec.clone(),
            trace,
        })
    };

    if cfg.threads == 1 {
        cells.iter().map(run_cell).collect()
    } else if cfg.threads == 0 {
        cells.par_iter().map(run_cell).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| CliError::Config {
                what: format!("thread pool: {e}"),
            })?;
        pool.install(|| cells.par_iter().map(run_cell).collect())
    }
}

/// CSV header, kept in one place so readers and writers agree.
pub const CSV_HEADER: &str = "preset,mode,l,alpha,n_offline,seed,t,inst_regret,cum_regret";

/// Writes one row per round per cell, in cell order. Floats use the
/// shortest representation that round-trips, so identical runs serialize
/// identically.
pub fn write_csv(cfg: &ExperimentConfig, cells: &[CellRun], path: &Path) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for cell in cells {
        let s = &cell.spec;
        for (i, (inst, cum)) in cell.trace.inst().iter().zip(cell.trace.cum()).enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                cfg.preset,
                s.mode,
                s.l,
                s.alpha,
                s.n_offline,
                s.seed,
                i + 1,
                inst,
                cum
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Summary handed back to the command line layer.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub cells: usize,
    pub rows: usize,
    pub output_path: PathBuf,
}

/// Runs the grid and persists the CSV at the configured output path.
pub fn run_to_csv(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let cells = run_experiment(cfg)?;
    write_csv(cfg, &cells, &cfg.output_path)?;
    Ok(RunSummary {
        cells: cells.len(),
        rows: cells.iter().map(|c| c.trace.len()).sum(),
        output_path: cfg.output_path.clone(),
    })
}

/// Generates the offline log for `cfg` and writes it to `out` in the
/// binary dataset format. The log covers the largest requested size and
/// visibility level.
pub fn generate_dataset_file(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let issues = validate(cfg);
    if !issues.is_empty() {
        return Err(CliError::Config {
            what: issues.join("; "),
        });
    }
    let (_, dataset) = prepare_environment(cfg)?;
    let data = dataset.ok_or_else(|| CliError::Config {
        what: "no positive visibility level, nothing to log".into(),
    })?;
    data.write_to(out)?;
    Ok(RunSummary {
        cells: 0,
        rows: data.len(),
        output_path: out.to_path_buf(),
    })
}
