//! Scenario configuration and experiment orchestration.
//!
//! A [`Scenario`] is a single JSON document with explicit units in its key
//! names (`isd_m`, `noise_dbm`, `t_interval_ms`, ...) describing the
//! deployment, the group population, mobility, radio parameters, and which
//! policies and seeds to run. [`run_suite`] executes every (policy, seed)
//! pair concurrently and writes per-run time series, summary tables with
//! 95% confidence intervals, and a manifest that suffices to reproduce the
//! experiment. [`analyze`], [`optimize_scenario`], and [`validate_scenario`]
//! cover the per-state analysis, probability/pattern emission, and
//! model-vs-simulation comparison workflows.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::deploy::{BaseStation, Deployment, Point, Rect};
use crate::error::{Error, Result};
use crate::mcs::McsTable;
use crate::optimizer::{
    build_pattern, solve_asymptotic_pf, solve_max_throughput, AbsPattern, SolveOptions,
    StateProbabilities, STANDARD_PATTERN_SUBFRAMES,
};
use crate::radio::PathlossModel;
use crate::seeding::sub_seed;
use crate::sim::{
    self, run_experiment, run_with_pattern, MetricsReport, OptimizerSetup, Policy, RunSpec,
    SimConfig,
};
use crate::states::{
    enumerate_states, instantaneous_throughput, AbsState, EfficiencyMode, GroupPlacement,
    NetworkEnv, Snapshot,
};
use crate::{dbm_to_watts, watts_to_dbm, DEFAULT_SYMBOL_RATE};

// ---------------------------------------------------------------------------
// Scenario schema
// ---------------------------------------------------------------------------

/// Service-area rectangle `[0, width] x [0, height]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub width_m: f64,
    pub height_m: f64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            width_m: 150.0,
            height_m: 150.0,
        }
    }
}

/// Where the base stations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeploymentSpec {
    /// Hexagonal grid centered in the world rectangle.
    Grid {
        #[serde(default = "default_grid_n")]
        n: usize,
        #[serde(default = "default_isd_m")]
        isd_m: f64,
        #[serde(default = "default_power_dbm")]
        power_dbm: f64,
    },
    /// CSV file with `id,x_m,y_m,tx_power_dbm` rows.
    File { path: String },
}

fn default_grid_n() -> usize {
    7
}
fn default_isd_m() -> f64 {
    50.0
}
fn default_power_dbm() -> f64 {
    watts_to_dbm(0.25)
}

impl Default for DeploymentSpec {
    fn default() -> Self {
        DeploymentSpec::Grid {
            n: default_grid_n(),
            isd_m: default_isd_m(),
            power_dbm: default_power_dbm(),
        }
    }
}

/// How group sizes are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizesSpec {
    /// Every group has exactly `users` members.
    Fixed { users: usize },
    /// Uniform integer in `min..=max`.
    Uniform { min: usize, max: usize },
}

impl Default for SizesSpec {
    fn default() -> Self {
        SizesSpec::Uniform { min: 1, max: 5 }
    }
}

/// Group population: either a group count or a total user budget
/// (exactly one must be set), plus the size distribution and the radius of
/// the disc members are scattered in around the centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_users: Option<usize>,
    #[serde(default)]
    pub sizes: SizesSpec,
    #[serde(default = "default_offset_radius_m")]
    pub offset_radius_m: f64,
}

fn default_offset_radius_m() -> f64 {
    5.0
}

impl Default for GroupsSpec {
    fn default() -> Self {
        GroupsSpec {
            count: None,
            total_users: Some(150),
            sizes: SizesSpec::default(),
            offset_radius_m: default_offset_radius_m(),
        }
    }
}

/// Group centroid mobility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MobilitySpec {
    /// Groups stay where they spawn.
    Static,
    /// Random-waypoint walk inside the world rectangle.
    Rwp {
        #[serde(default = "default_speed_min_mps")]
        speed_min_mps: f64,
        #[serde(default = "default_speed_max_mps")]
        speed_max_mps: f64,
        #[serde(default)]
        pause_s: f64,
    },
}

fn default_speed_min_mps() -> f64 {
    1.0
}
fn default_speed_max_mps() -> f64 {
    10.0
}

impl Default for MobilitySpec {
    fn default() -> Self {
        MobilitySpec::Static
    }
}

/// Physical-layer parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSpec {
    #[serde(default)]
    pub pathloss: PathlossModel,
    #[serde(default = "default_noise_dbm")]
    pub noise_dbm: f64,
    /// Optional MCS CSV (`t_min_db,t_max_db,bits_per_symbol`); the built-in
    /// table is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcs_file: Option<String>,
    #[serde(default = "default_symbol_rate_sps")]
    pub symbol_rate_sps: f64,
}

fn default_noise_dbm() -> f64 {
    -101.0
}
fn default_symbol_rate_sps() -> f64 {
    DEFAULT_SYMBOL_RATE
}

impl Default for RadioSpec {
    fn default() -> Self {
        RadioSpec {
            pathloss: PathlossModel::default(),
            noise_dbm: default_noise_dbm(),
            mcs_file: None,
            symbol_rate_sps: default_symbol_rate_sps(),
        }
    }
}

/// Simulation horizon and accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_duration_s")]
    pub duration_s: f64,
    #[serde(default = "default_t_interval_ms")]
    pub t_interval_ms: u64,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_duration_s() -> f64 {
    500.0
}
fn default_t_interval_ms() -> u64 {
    500
}
fn default_batches() -> usize {
    20
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            duration_s: default_duration_s(),
            t_interval_ms: default_t_interval_ms(),
            batches: default_batches(),
        }
    }
}

/// Optimizer knobs shared by the pattern-based policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    /// Cap on the enumerated ABS state space; capped spaces always keep the
    /// all-active and every one-blanked state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_states: Option<usize>,
    #[serde(default = "default_efficiency_mode")]
    pub efficiency_mode: EfficiencyMode,
    /// Force Monte-Carlo expected shares with this trial count (mobile
    /// planning only); automatic when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo_share_trials: Option<usize>,
    #[serde(default = "default_raster_cell_m")]
    pub raster_cell_m: f64,
    /// History smoothing coefficients, newest first.
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub open_loop: bool,
    #[serde(default = "default_pattern_subframes")]
    pub pattern_subframes: usize,
    #[serde(default = "default_kkt_tol")]
    pub kkt_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub strict_infeasible: bool,
}

fn default_efficiency_mode() -> EfficiencyMode {
    EfficiencyMode::Exact
}
fn default_raster_cell_m() -> f64 {
    2.0
}
fn default_alphas() -> Vec<f64> {
    vec![1.0; 21]
}
fn default_pattern_subframes() -> usize {
    STANDARD_PATTERN_SUBFRAMES
}
fn default_kkt_tol() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    10_000
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec {
            max_states: None,
            efficiency_mode: default_efficiency_mode(),
            monte_carlo_share_trials: None,
            raster_cell_m: default_raster_cell_m(),
            alphas: default_alphas(),
            open_loop: false,
            pattern_subframes: default_pattern_subframes(),
            kkt_tol: default_kkt_tol(),
            max_iters: default_max_iters(),
            strict_infeasible: false,
        }
    }
}

/// A complete experiment description. Every field has a default, so `{}` is
/// a valid scenario (homogeneous grid, 150 users, static groups).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub world: WorldSpec,
    pub deployment: DeploymentSpec,
    pub groups: GroupsSpec,
    pub mobility: MobilitySpec,
    pub radio: RadioSpec,
    pub sim: SimSpec,
    pub optimizer: OptimizerSpec,
    pub policies: Vec<String>,
    pub seeds: Vec<u64>,
    /// ABS state ids compared by the validation workflow; defaults to the
    /// all-active state plus every one-blanked state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_state_ids: Option<Vec<u32>>,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Scenario> {
        let mut s: Scenario = serde_json::from_str(text)?;
        if s.policies.is_empty() {
            s.policies = default_policies();
        }
        if s.seeds.is_empty() {
            s.seeds = vec![0];
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        Scenario::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.world.width_m > 0.0) || !(self.world.height_m > 0.0) {
            return Err(Error::config("world dimensions must be positive"));
        }
        match (self.groups.count, self.groups.total_users) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(Error::config(
                    "set exactly one of groups.count and groups.total_users",
                ));
            }
            (Some(0), _) | (_, Some(0)) => {
                return Err(Error::config("group population must be positive"));
            }
            _ => {}
        }
        match self.groups.sizes {
            SizesSpec::Fixed { users } if users == 0 => {
                return Err(Error::config("group size must be at least 1"));
            }
            SizesSpec::Uniform { min, max } if min == 0 || max < min => {
                return Err(Error::config(format!(
                    "size range must satisfy 1 <= min <= max, got {min}..{max}"
                )));
            }
            _ => {}
        }
        if !(self.groups.offset_radius_m >= 0.0) {
            return Err(Error::config("member offset radius must be non-negative"));
        }
        if let MobilitySpec::Rwp {
            speed_min_mps,
            speed_max_mps,
            pause_s,
        } = self.mobility
        {
            if !(speed_min_mps > 0.0) || speed_max_mps < speed_min_mps || !(pause_s >= 0.0) {
                return Err(Error::config(
                    "rwp mobility needs 0 < speed_min <= speed_max and pause >= 0",
                ));
            }
        }
        self.radio.pathloss.validate()?;
        if !(self.radio.symbol_rate_sps > 0.0) {
            return Err(Error::config("symbol rate must be positive"));
        }
        for p in &self.policies {
            p.parse::<Policy>()?;
        }
        self.sim_config(0).validate()?;
        Ok(())
    }

    pub fn world_rect(&self) -> Result<Rect> {
        Rect::from_size(self.world.width_m, self.world.height_m)
    }

    /// Parsed policy list, in config order.
    pub fn policy_list(&self) -> Result<Vec<Policy>> {
        self.policies.iter().map(|p| p.parse()).collect()
    }

    /// Build the physical-layer environment; `base_dir` anchors relative
    /// file references.
    pub fn build_env(&self, base_dir: &Path) -> Result<NetworkEnv> {
        let deployment = match &self.deployment {
            DeploymentSpec::Grid { n, isd_m, power_dbm } => {
                generate_grid_deployment(*n, *isd_m, dbm_to_watts(*power_dbm), self.world_rect()?)?
            }
            DeploymentSpec::File { path } => {
                Deployment::from_csv_path(&resolve(base_dir, path))?
            }
        };
        let mcs = match &self.radio.mcs_file {
            Some(path) => McsTable::from_csv_path(&resolve(base_dir, path))?,
            None => McsTable::default_table().clone(),
        };
        NetworkEnv::new(
            deployment,
            self.radio.pathloss,
            dbm_to_watts(self.radio.noise_dbm),
            mcs,
            self.radio.symbol_rate_sps,
        )
    }

    /// Draw the group population for one run seed: sizes per the size spec,
    /// centroids uniform in the world, members uniform in the offset disc.
    pub fn build_groups(&self, seed: u64) -> Result<Vec<GroupPlacement>> {
        let world = self.world_rect()?;
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, "groups"));
        let draw_size = |rng: &mut ChaCha8Rng| match self.groups.sizes {
            SizesSpec::Fixed { users } => users,
            SizesSpec::Uniform { min, max } => rng.random_range(min..=max),
        };
        let mut sizes = Vec::new();
        match (self.groups.count, self.groups.total_users) {
            (Some(n), None) => {
                for _ in 0..n {
                    sizes.push(draw_size(&mut rng));
                }
            }
            (None, Some(total)) => {
                let mut remaining = total;
                while remaining > 0 {
                    let s = draw_size(&mut rng).min(remaining);
                    sizes.push(s);
                    remaining -= s;
                }
            }
            _ => return Err(Error::config("set exactly one of groups.count and groups.total_users")),
        }
        let r = self.groups.offset_radius_m;
        let groups = sizes
            .into_iter()
            .map(|size| {
                let centroid = Point::new(
                    rng.random_range(world.x_min_m..=world.x_max_m),
                    rng.random_range(world.y_min_m..=world.y_max_m),
                );
                let offsets = (0..size)
                    .map(|_| {
                        if r == 0.0 {
                            return Point::new(0.0, 0.0);
                        }
                        let radius = r * rng.random::<f64>().sqrt();
                        let angle = rng.random::<f64>() * std::f64::consts::TAU;
                        Point::new(radius * angle.cos(), radius * angle.sin())
                    })
                    .collect();
                GroupPlacement::with_offsets(centroid, offsets)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(groups)
    }

    /// The ABS state space the optimizing policies consider.
    pub fn states(&self, n_stations: usize) -> Result<Vec<AbsState>> {
        enumerate_states(n_stations, self.optimizer.max_states)
    }

    pub fn sim_config(&self, seed: u64) -> SimConfig {
        let (speed_min_mps, speed_max_mps, pause_s) = match self.mobility {
            MobilitySpec::Static => (1.0, 10.0, 0.0),
            MobilitySpec::Rwp {
                speed_min_mps,
                speed_max_mps,
                pause_s,
            } => (speed_min_mps, speed_max_mps, pause_s),
        };
        SimConfig {
            duration_s: self.sim.duration_s,
            t_interval_ms: self.sim.t_interval_ms,
            seed,
            speed_min_mps,
            speed_max_mps,
            pause_s,
            batches: self.sim.batches,
        }
    }

    pub fn optimizer_setup(&self, states: Vec<AbsState>, seed: u64) -> OptimizerSetup {
        OptimizerSetup {
            states,
            efficiency_mode: self.optimizer.efficiency_mode,
            share_mode: self
                .optimizer
                .monte_carlo_share_trials
                .map(|trials| crate::asymptotic::ShareMode::MonteCarlo {
                    trials,
                    seed: sub_seed(seed, "share"),
                }),
            raster_cell_m: self.optimizer.raster_cell_m,
            solve: SolveOptions {
                max_iters: self.optimizer.max_iters,
                kkt_tol: self.optimizer.kkt_tol,
                strict_infeasible: self.optimizer.strict_infeasible,
                init: None,
            },
            alphas: self.optimizer.alphas.clone(),
            open_loop: self.optimizer.open_loop,
            pattern_subframes: self.optimizer.pattern_subframes,
        }
    }

    /// Everything one run needs, for the given seed.
    pub fn run_spec<'e>(&self, env: &'e NetworkEnv, seed: u64) -> Result<RunSpec<'e>> {
        let states = self.states(env.n_stations())?;
        Ok(RunSpec {
            env,
            world: self.world_rect()?,
            groups: self.build_groups(seed)?,
            mobile: matches!(self.mobility, MobilitySpec::Rwp { .. }),
            config: self.sim_config(seed),
            optimizer: self.optimizer_setup(states, seed),
        })
    }

    /// States compared by the validation workflow.
    pub fn validation_states(&self, n_stations: usize) -> Result<Vec<AbsState>> {
        match &self.validation_state_ids {
            Some(ids) => ids
                .iter()
                .map(|id| AbsState::from_mask(*id, n_stations))
                .collect(),
            None => {
                let all = AbsState::all_active(n_stations)?;
                let mut states = vec![all];
                for b in 0..n_stations {
                    let s = all.with_blanked(b);
                    if s.active_count() > 0 {
                        states.push(s);
                    }
                }
                Ok(states)
            }
        }
    }
}

fn default_policies() -> Vec<String> {
    [
        "legacy",
        "fixed-4/8",
        "fixed-5/8",
        "fixed-6/8",
        "max-throughput",
        "asymptotic-pf",
        "dynamic-pf",
    ]
    .map(str::to_string)
    .to_vec()
}

fn resolve(base_dir: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

// ---------------------------------------------------------------------------
// Deployment generation
// ---------------------------------------------------------------------------

/// Place `n` equal-power stations on a hexagonal lattice with the given
/// inter-site distance, centered in `area` and filled outward ring by ring.
/// Fails when any selected site would fall outside the area.
pub fn generate_grid_deployment(
    n: usize,
    isd_m: f64,
    tx_power_w: f64,
    area: Rect,
) -> Result<Deployment> {
    if n == 0 {
        return Err(Error::config("need at least one station"));
    }
    if !(isd_m > 0.0) || !(tx_power_w > 0.0) {
        return Err(Error::config(format!(
            "inter-site distance and power must be positive, got {isd_m} m / {tx_power_w} W"
        )));
    }
    let center = area.center();
    let mut sites = vec![center];
    let mut ring = 1i64;
    while sites.len() < n {
        // axial hex coordinates at exact lattice distance `ring`
        let mut ring_sites = Vec::new();
        for q in -ring..=ring {
            for r in -ring..=ring {
                let dist = (q.abs() + r.abs() + (q + r).abs()) / 2;
                if dist == ring {
                    let x = isd_m * (q as f64 + r as f64 / 2.0);
                    let y = isd_m * (r as f64 * 3f64.sqrt() / 2.0);
                    ring_sites.push(Point::new(center.x_m + x, center.y_m + y));
                }
            }
        }
        ring_sites.sort_by(|a, b| {
            let ang = |p: &Point| (p.y_m - center.y_m).atan2(p.x_m - center.x_m);
            ang(a).partial_cmp(&ang(b)).expect("finite angles")
        });
        sites.extend(ring_sites);
        ring += 1;
    }
    sites.truncate(n);
    for p in &sites {
        if !area.contains(*p) {
            return Err(Error::config(format!(
                "{n} stations at {isd_m} m spacing do not fit the {:.0}x{:.0} m area",
                area.width_m(),
                area.height_m()
            )));
        }
    }
    Deployment::new(
        sites
            .into_iter()
            .enumerate()
            .map(|(id, position)| BaseStation {
                id,
                position,
                tx_power_w,
            })
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Experiment suite
// ---------------------------------------------------------------------------

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub system_throughput_bps: f64,
    pub jfi: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Outcome of one (policy, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy: String,
    pub seed: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Relative path of the per-run time-series CSV.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_file: Option<String>,
}

/// Everything needed to reproduce and audit a suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the canonical (compact JSON) scenario serialization.
    pub config_sha256: String,
    pub scenario: Scenario,
    pub runs: Vec<RunRecord>,
}

/// In-memory result of [`run_suite`].
#[derive(Debug, Clone)]
pub struct SuiteReport {
    /// One row per successful (policy, seed) run, in config order.
    pub rows: Vec<SummaryRow>,
    /// One row per policy, pooled across seeds.
    pub pooled: Vec<SummaryRow>,
    pub records: Vec<RunRecord>,
    pub reports: Vec<MetricsReport>,
    pub failures: usize,
}

/// SHA-256 hex digest of the compact scenario JSON.
pub fn scenario_hash(scenario: &Scenario) -> Result<String> {
    let canonical = serde_json::to_string(scenario)?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn file_stem(policy: &str, seed: u64) -> String {
    format!("{}_seed{}", policy.replace('/', "-"), seed)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Execute every (policy, seed) pair of the scenario and write the result
/// tree under `out_dir`:
///
/// - `runs/<policy>_seed<seed>.csv` — per-interval `time_s,group_id,throughput_bps`
/// - `summary.csv` — one `policy,system_throughput,jfi,ci_low,ci_high` row
///   per run (batch-means CI within the run)
/// - `summary_pooled.csv` — same columns, one row per policy pooled over
///   seeds (CI over per-seed system throughputs when two or more seeds ran)
/// - `manifest.json` — tool version, config hash, inline scenario, and
///   per-run status
///
/// Failing runs are recorded in the manifest and skipped in the tables; the
/// report counts them so callers can exit nonzero.
pub fn run_suite(scenario: &Scenario, base_dir: &Path, out_dir: &Path) -> Result<SuiteReport> {
    use rayon::prelude::*;
    scenario.validate()?;
    if scenario.policies.is_empty() {
        return Err(Error::config("policy list is empty"));
    }
    if scenario.seeds.is_empty() {
        return Err(Error::config("seed list is empty"));
    }
    let policies = scenario.policy_list()?;
    let env = scenario.build_env(base_dir)?;

    let pairs: Vec<(Policy, u64)> = policies
        .iter()
        .flat_map(|p| scenario.seeds.iter().map(move |s| (p.clone(), *s)))
        .collect();
    let outcomes: Vec<(Policy, u64, Result<MetricsReport>)> = pairs
        .into_par_iter()
        .map(|(policy, seed)| {
            let result = scenario
                .run_spec(&env, seed)
                .and_then(|spec| run_experiment(&spec, &policy));
            (policy, seed, result)
        })
        .collect();

    fs::create_dir_all(out_dir.join("runs"))?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut reports = Vec::new();
    let mut failures = 0;
    for (policy, seed, outcome) in outcomes {
        let name = policy.name();
        match outcome {
            Ok(report) => {
                log::info!(
                    "run {name} seed {seed}: {:.3e} bit/s, per-user fairness {:.4} \
                     (batch mean {:.4})",
                    report.system_throughput_bps,
                    report.jfi_users,
                    report.jfi_batch_ci95.mean
                );
                let rel = format!("runs/{}.csv", file_stem(&name, seed));
                write_text(&out_dir.join(&rel), &report.series_csv())?;
                rows.push(SummaryRow {
                    policy: name.clone(),
                    seed: Some(seed),
                    system_throughput_bps: report.system_throughput_bps,
                    jfi: report.jfi_users,
                    ci_low: report.ci95.low,
                    ci_high: report.ci95.high,
                });
                records.push(RunRecord {
                    policy: name,
                    seed,
                    ok: true,
                    error: None,
                    series_file: Some(rel),
                });
                reports.push(report);
            }
            Err(e) => {
                failures += 1;
                log::error!("run {name} seed {seed} failed: {e}");
                records.push(RunRecord {
                    policy: name,
                    seed,
                    ok: false,
                    error: Some(e.to_string()),
                    series_file: None,
                });
            }
        }
    }

    let pooled = pool_rows(&scenario.policies, &rows)?;
    write_text(&out_dir.join("summary.csv"), &summary_csv(&rows))?;
    write_text(&out_dir.join("summary_pooled.csv"), &summary_csv(&pooled))?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: scenario_hash(scenario)?,
        scenario: scenario.clone(),
        runs: records.clone(),
    };
    write_text(
        &out_dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest)?,
    )?;

    Ok(SuiteReport {
        rows,
        pooled,
        records,
        reports,
        failures,
    })
}

/// Render summary rows as `policy,system_throughput,jfi,ci_low,ci_high` CSV.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("policy,system_throughput,jfi,ci_low,ci_high\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.policy, r.system_throughput_bps, r.jfi, r.ci_low, r.ci_high
        ));
    }
    out
}

/// Pool per-run rows into one row per policy: means over seeds, CI over the
/// per-seed system throughputs (the single run's own CI when only one seed
/// succeeded).
fn pool_rows(policy_order: &[String], rows: &[SummaryRow]) -> Result<Vec<SummaryRow>> {
    let mut pooled = Vec::new();
    for name in policy_order {
        let of_policy: Vec<&SummaryRow> = rows.iter().filter(|r| &r.policy == name).collect();
        if of_policy.is_empty() {
            continue;
        }
        let n = of_policy.len() as f64;
        let system = of_policy.iter().map(|r| r.system_throughput_bps).sum::<f64>() / n;
        let jfi = of_policy.iter().map(|r| r.jfi).sum::<f64>() / n;
        let (ci_low, ci_high) = if of_policy.len() >= 2 {
            let samples: Vec<f64> = of_policy.iter().map(|r| r.system_throughput_bps).collect();
            let ci = crate::sim::metrics::batch_means_ci95(&samples)?;
            (ci.low, ci.high)
        } else {
            (of_policy[0].ci_low, of_policy[0].ci_high)
        };
        pooled.push(SummaryRow {
            policy: name.clone(),
            seed: None,
            system_throughput_bps: system,
            jfi,
            ci_low,
            ci_high,
        });
    }
    Ok(pooled)
}

// ---------------------------------------------------------------------------
// Analysis / optimization / validation workflows
// ---------------------------------------------------------------------------

/// Per-state throughput of one group in the analysis table.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeRow {
    pub state_id: u32,
    pub group_id: usize,
    pub throughput_bps: f64,
}

/// Output of [`analyze`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeReport {
    pub rows: Vec<AnalyzeRow>,
    /// `(state_id, system throughput)` per state.
    pub totals: Vec<(u32, f64)>,
}

/// Evaluate every considered ABS state on the first-seed snapshot and write
/// `state_throughput.csv` (`state_id,group_id,throughput_bps`) and
/// `state_totals.csv` (`state_id,total_bps`).
pub fn analyze(scenario: &Scenario, base_dir: &Path, out_dir: &Path) -> Result<AnalyzeReport> {
    scenario.validate()?;
    let env = scenario.build_env(base_dir)?;
    let seed = scenario.seeds.first().copied().unwrap_or(0);
    let snapshot = Snapshot::new(scenario.build_groups(seed)?, 0.0);
    let states = scenario.states(env.n_stations())?;
    let mut rows = Vec::new();
    let mut totals = Vec::new();
    for state in &states {
        let t = instantaneous_throughput(&snapshot, *state, &env, scenario.optimizer.efficiency_mode);
        for (c, bps) in t.per_group_bps.iter().enumerate() {
            rows.push(AnalyzeRow {
                state_id: state.id(),
                group_id: c,
                throughput_bps: *bps,
            });
        }
        totals.push((state.id(), t.total_bps));
    }
    let mut per_group = String::from("state_id,group_id,throughput_bps\n");
    for r in &rows {
        per_group.push_str(&format!("{},{},{}\n", r.state_id, r.group_id, r.throughput_bps));
    }
    let mut per_state = String::from("state_id,total_bps\n");
    for (id, total) in &totals {
        per_state.push_str(&format!("{id},{total}\n"));
    }
    write_text(&out_dir.join("state_throughput.csv"), &per_group)?;
    write_text(&out_dir.join("state_totals.csv"), &per_state)?;
    Ok(AnalyzeReport { rows, totals })
}

/// Output of [`optimize_scenario`].
#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub states: Vec<AbsState>,
    pub probabilities: StateProbabilities,
    pub pattern: AbsPattern,
    /// Proportional-fairness objective (absent for max-throughput).
    pub objective: Option<f64>,
    pub kkt_residual: Option<f64>,
    pub excluded_groups: Vec<usize>,
}

/// Solve the planning problem of `policy` (proportional fairness by
/// default, the weighted-sum maximizer for `max-throughput`) and write
/// `probabilities.csv` (`state_id,prob`) and `pattern.txt` (one line per
/// subframe, comma-separated per-station activity bits).
pub fn optimize_scenario(
    scenario: &Scenario,
    base_dir: &Path,
    out_dir: &Path,
    policy: &Policy,
) -> Result<OptimizeReport> {
    scenario.validate()?;
    let env = scenario.build_env(base_dir)?;
    let seed = scenario.seeds.first().copied().unwrap_or(0);
    let spec = scenario.run_spec(&env, seed)?;
    let matrix = sim::planning_matrix(&spec)?;
    let states = spec.optimizer.states.clone();
    let (probabilities, objective, kkt_residual, excluded) = match policy {
        Policy::MaxThroughput => (solve_max_throughput(&matrix)?, None, None, Vec::new()),
        _ => {
            let sol = solve_asymptotic_pf(&matrix, &spec.optimizer.solve)?;
            (
                sol.probabilities,
                Some(sol.objective),
                Some(sol.kkt_residual),
                sol.excluded_groups,
            )
        }
    };
    let pattern = build_pattern(
        &probabilities,
        &states,
        env.n_stations(),
        scenario.optimizer.pattern_subframes,
        sub_seed(seed, "pattern"),
    )?;
    write_text(
        &out_dir.join("probabilities.csv"),
        &probabilities.to_csv_string(&states)?,
    )?;
    write_text(&out_dir.join("pattern.txt"), &pattern.to_activity_text())?;
    Ok(OptimizeReport {
        states,
        probabilities,
        pattern,
        objective,
        kkt_residual,
        excluded_groups: excluded,
    })
}

/// Model-vs-simulation comparison of one group in one pinned state.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupValidation {
    pub state_id: u32,
    pub group_id: usize,
    pub analytic_bps: f64,
    pub sim_bps: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl GroupValidation {
    pub fn within(&self) -> bool {
        self.analytic_bps >= self.ci_low && self.analytic_bps <= self.ci_high
    }
}

/// Model-vs-simulation comparison of the system throughput in one state.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemValidation {
    pub state_id: u32,
    pub analytic_bps: f64,
    pub sim_bps: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SystemValidation {
    pub fn within(&self) -> bool {
        self.analytic_bps >= self.ci_low && self.analytic_bps <= self.ci_high
    }
}

/// Output of [`validate_scenario`] / [`validate_states`].
#[derive(Debug, Clone)]
pub struct ValidateReport {
    pub groups: Vec<GroupValidation>,
    pub system: Vec<SystemValidation>,
}

impl ValidateReport {
    /// Every per-state analytic system throughput inside its simulated CI.
    pub fn all_system_within(&self) -> bool {
        self.system.iter().all(SystemValidation::within)
    }

    pub fn groups_csv(&self) -> String {
        let mut out = String::from("state_id,group_id,analytic_bps,sim_bps,ci_low,ci_high,within\n");
        for r in &self.groups {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.state_id,
                r.group_id,
                r.analytic_bps,
                r.sim_bps,
                r.ci_low,
                r.ci_high,
                r.within()
            ));
        }
        out
    }

    pub fn system_csv(&self) -> String {
        let mut out = String::from("state_id,analytic_bps,sim_bps,ci_low,ci_high,within\n");
        for r in &self.system {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.state_id, r.analytic_bps, r.sim_bps, r.ci_low, r.ci_high, r.within()
            ));
        }
        out
    }
}

/// Hold each state for the whole horizon with static groups and compare the
/// simulated throughput against the analytic share-times-efficiency value.
/// Per-group confidence intervals come from batch means over the reporting
/// intervals; the system-level interval is the run's batch-means CI.
pub fn validate_states(
    env: &NetworkEnv,
    world: Rect,
    groups: &[GroupPlacement],
    states: &[AbsState],
    config: &SimConfig,
    efficiency_mode: EfficiencyMode,
) -> Result<ValidateReport> {
    use rayon::prelude::*;
    let snapshot = Snapshot::new(groups.to_vec(), 0.0);
    let per_state: Vec<(u32, Vec<GroupValidation>, SystemValidation)> = states
        .par_iter()
        .map(|state| -> Result<_> {
            let spec = RunSpec {
                env,
                world,
                groups: groups.to_vec(),
                mobile: false,
                config: config.clone(),
                optimizer: OptimizerSetup::new(vec![*state]),
            };
            let pattern = AbsPattern::new(vec![state.id()], env.n_stations())?;
            let report = run_with_pattern(&spec, &pattern, "validate")?;
            let analytic = instantaneous_throughput(&snapshot, *state, env, efficiency_mode);
            let mut group_rows = Vec::with_capacity(groups.len());
            for c in 0..groups.len() {
                let ci = group_interval_ci(&report, c, config.batches)?;
                group_rows.push(GroupValidation {
                    state_id: state.id(),
                    group_id: c,
                    analytic_bps: analytic.per_group_bps[c],
                    sim_bps: report.per_group_bps[c],
                    ci_low: ci.low,
                    ci_high: ci.high,
                });
            }
            let system = SystemValidation {
                state_id: state.id(),
                analytic_bps: analytic.total_bps,
                sim_bps: report.system_throughput_bps,
                ci_low: report.ci95.low,
                ci_high: report.ci95.high,
            };
            Ok((state.id(), group_rows, system))
        })
        .collect::<Result<_>>()?;
    let mut report = ValidateReport {
        groups: Vec::new(),
        system: Vec::new(),
    };
    for (_, group_rows, system) in per_state {
        report.groups.extend(group_rows);
        report.system.push(system);
    }
    Ok(report)
}

/// Batch-means CI of one group's throughput over the run's reporting
/// intervals.
fn group_interval_ci(
    report: &MetricsReport,
    group: usize,
    batches: usize,
) -> Result<crate::sim::metrics::Ci95> {
    let samples: Vec<f64> = report
        .series
        .iter()
        .filter(|row| row.group_id == group)
        .map(|row| row.throughput_bps)
        .collect();
    let n = samples.len();
    if n < 2 {
        return Err(Error::domain(
            "per-group validation needs at least two reporting intervals",
        ));
    }
    let k = batches.clamp(2, n);
    let means: Vec<f64> = (0..k)
        .map(|b| {
            let lo = b * n / k;
            let hi = ((b + 1) * n / k).max(lo + 1);
            samples[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    crate::sim::metrics::batch_means_ci95(&means)
}

/// Run [`validate_states`] on the scenario's deployment, first-seed group
/// placement, and validation state list; write `validate_groups.csv` and
/// `validate_system.csv` under `out_dir`.
pub fn validate_scenario(
    scenario: &Scenario,
    base_dir: &Path,
    out_dir: &Path,
) -> Result<ValidateReport> {
    scenario.validate()?;
    let env = scenario.build_env(base_dir)?;
    let seed = scenario.seeds.first().copied().unwrap_or(0);
    let groups = scenario.build_groups(seed)?;
    let states = scenario.validation_states(env.n_stations())?;
    let report = validate_states(
        &env,
        scenario.world_rect()?,
        &groups,
        &states,
        &scenario.sim_config(seed),
        scenario.optimizer.efficiency_mode,
    )?;
    write_text(&out_dir.join("validate_groups.csv"), &report.groups_csv())?;
    write_text(&out_dir.join("validate_system.csv"), &report.system_csv())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tiny_scenario() -> Scenario {
        Scenario::from_json_str(
            r#"{
                "deployment": {"kind": "grid", "n": 3, "isd_m": 50.0},
                "groups": {"count": 4, "sizes": {"kind": "fixed", "users": 2}},
                "sim": {"duration_s": 2.0, "t_interval_ms": 500, "batches": 4},
                "policies": ["legacy", "fixed-4/8"],
                "seeds": [1, 2]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn default_grid_matches_the_seven_station_layout() {
        let area = Rect::from_size(150.0, 150.0).unwrap();
        let dep = generate_grid_deployment(7, 50.0, 0.25, area).unwrap();
        assert_eq!(dep.n_stations(), 7);
        let stations = dep.stations();
        assert_relative_eq!(stations[0].position.x_m, 75.0);
        assert_relative_eq!(stations[0].position.y_m, 75.0);
        let mut min_pairwise = f64::INFINITY;
        for i in 0..7 {
            assert_eq!(stations[i].tx_power_w, 0.25);
            assert!(area.contains(stations[i].position));
            for j in 0..i {
                min_pairwise = min_pairwise.min(stations[i].position.dist(stations[j].position));
            }
        }
        assert_relative_eq!(min_pairwise, 50.0, max_relative = 1e-12);
        // ring of six, all at exactly one ISD from the center
        for s in &stations[1..] {
            assert_relative_eq!(s.position.dist(stations[0].position), 50.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_station_grid_is_centered() {
        let area = Rect::from_size(100.0, 60.0).unwrap();
        let dep = generate_grid_deployment(1, 50.0, 0.1, area).unwrap();
        assert_eq!(dep.n_stations(), 1);
        assert_relative_eq!(dep.stations()[0].position.x_m, 50.0);
        assert_relative_eq!(dep.stations()[0].position.y_m, 30.0);
    }

    #[test]
    fn oversized_grid_is_rejected() {
        let area = Rect::from_size(60.0, 60.0).unwrap();
        let err = generate_grid_deployment(7, 50.0, 0.25, area).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err:?}");
        // a single station always fits
        assert!(generate_grid_deployment(1, 50.0, 0.25, area).is_ok());
    }

    #[test]
    fn scenario_json_round_trips_and_applies_defaults() {
        let s = Scenario::from_json_str("{}").unwrap();
        assert_eq!(s.world, WorldSpec::default());
        assert_eq!(s.seeds, vec![0]);
        assert_eq!(s.policies.len(), 7);
        let text = s.to_json_string().unwrap();
        let again = Scenario::from_json_str(&text).unwrap();
        assert_eq!(s, again);

        let custom = tiny_scenario();
        let round = Scenario::from_json_str(&custom.to_json_string().unwrap()).unwrap();
        assert_eq!(custom, round);
    }

    #[test]
    fn scenario_validation_rejects_bad_configs() {
        // both population fields set
        assert!(Scenario::from_json_str(
            r#"{"groups": {"count": 3, "total_users": 9}}"#
        )
        .is_err());
        // neither population field set
        assert!(Scenario::from_json_str(r#"{"groups": {"sizes": {"kind": "fixed", "users": 2}, "count": null, "total_users": null}}"#).is_err());
        // zero group size
        assert!(Scenario::from_json_str(
            r#"{"groups": {"count": 3, "sizes": {"kind": "fixed", "users": 0}}}"#
        )
        .is_err());
        // unknown policy name
        assert!(Scenario::from_json_str(r#"{"policies": ["round-robin"]}"#).is_err());
        // unknown key (typo safety)
        assert!(Scenario::from_json_str(r#"{"wrold": {"width_m": 10.0, "height_m": 10.0}}"#).is_err());
        // bad mobility speeds
        assert!(Scenario::from_json_str(
            r#"{"mobility": {"kind": "rwp", "speed_min_mps": 5.0, "speed_max_mps": 1.0}}"#
        )
        .is_err());
    }

    #[test]
    fn group_population_honors_budget_and_seeds() {
        let mut s = Scenario::from_json_str("{}").unwrap();
        s.groups.total_users = Some(150);
        let groups = s.build_groups(7).unwrap();
        let total: usize = groups.iter().map(GroupPlacement::size).sum();
        assert_eq!(total, 150);
        for g in &groups {
            assert!(g.size() >= 1 && g.size() <= 5);
            for o in &g.offsets {
                assert!(Point::new(0.0, 0.0).dist(*o) <= s.groups.offset_radius_m + 1e-12);
            }
        }
        // roughly total/mean-size groups
        assert!(groups.len() >= 30 && groups.len() <= 75, "{}", groups.len());
        // deterministic per seed, different across seeds
        assert_eq!(groups, s.build_groups(7).unwrap());
        assert_ne!(groups, s.build_groups(8).unwrap());

        s.groups.count = Some(12);
        s.groups.total_users = None;
        assert_eq!(s.build_groups(1).unwrap().len(), 12);
    }

    #[test]
    fn suite_writes_tables_runs_and_manifest() {
        let scenario = tiny_scenario();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let report = run_suite(&scenario, dir.path(), &out).unwrap();
        assert_eq!(report.failures, 0);
        // 2 policies x 2 seeds
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.pooled.len(), 2);
        for record in &report.records {
            assert!(record.ok);
            let series = out.join(record.series_file.as_ref().unwrap());
            let text = fs::read_to_string(series).unwrap();
            assert!(text.starts_with("time_s,group_id,throughput_bps\n"));
            // 4 intervals x 4 groups + header
            assert_eq!(text.lines().count(), 17);
        }
        let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
        assert!(summary.starts_with("policy,system_throughput,jfi,ci_low,ci_high\n"));
        assert_eq!(summary.lines().count(), 5);
        let pooled = fs::read_to_string(out.join("summary_pooled.csv")).unwrap();
        assert_eq!(pooled.lines().count(), 3);

        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.scenario, scenario);
        assert_eq!(manifest.config_sha256, scenario_hash(&scenario).unwrap());
        assert_eq!(manifest.runs.len(), 4);
        // the manifest alone reproduces the runs bit-for-bit
        let rerun = run_suite(&manifest.scenario, dir.path(), &dir.path().join("out2")).unwrap();
        assert_eq!(rerun.rows, report.rows);
    }

    #[test]
    fn suite_records_partial_failures() {
        let mut scenario = tiny_scenario();
        // used > total makes the fixed-ratio pattern unconstructible
        scenario.policies = vec!["legacy".into(), "fixed-9/8".into()];
        scenario.seeds = vec![1];
        let dir = tempfile::tempdir().unwrap();
        let report = run_suite(&scenario, dir.path(), &dir.path().join("out")).unwrap();
        assert_eq!(report.failures, 1);
        assert_eq!(report.rows.len(), 1);
        let failed: Vec<_> = report.records.iter().filter(|r| !r.ok).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].policy, "fixed-9/8");
        assert!(failed[0].error.as_ref().unwrap().contains("ratio"));
    }

    #[test]
    fn empty_policy_list_is_a_validation_error() {
        let mut scenario = tiny_scenario();
        scenario.policies.clear();
        let dir = tempfile::tempdir().unwrap();
        let err = run_suite(&scenario, dir.path(), &dir.path().join("out")).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err:?}");
    }

    #[test]
    fn analyze_emits_per_state_tables() {
        let scenario = tiny_scenario();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let report = analyze(&scenario, dir.path(), &out).unwrap();
        // 3 stations -> 8 states x 4 groups
        assert_eq!(report.rows.len(), 32);
        assert_eq!(report.totals.len(), 8);
        let all_blank = report.totals.iter().find(|(id, _)| *id == 0).unwrap();
        assert_eq!(all_blank.1, 0.0);
        let all_active = report.totals.iter().find(|(id, _)| *id == 0b111).unwrap();
        assert!(all_active.1 > 0.0);
        let text = fs::read_to_string(out.join("state_throughput.csv")).unwrap();
        assert_eq!(text.lines().count(), 33);
        assert!(fs::read_to_string(out.join("state_totals.csv"))
            .unwrap()
            .starts_with("state_id,total_bps\n"));
    }

    #[test]
    fn optimize_emits_probabilities_and_pattern() {
        let scenario = tiny_scenario();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let report =
            optimize_scenario(&scenario, dir.path(), &out, &Policy::AsymptoticPf).unwrap();
        assert!(report.objective.is_some());
        assert!(report.kkt_residual.unwrap() <= scenario.optimizer.kkt_tol * 10.0);
        let probs = fs::read_to_string(out.join("probabilities.csv")).unwrap();
        assert!(probs.starts_with("state_id,prob\n"));
        assert_eq!(probs.lines().count(), 9);
        let parsed =
            StateProbabilities::from_csv_str(&probs, &report.states, "probabilities.csv").unwrap();
        assert_eq!(parsed, report.probabilities);
        let pattern = fs::read_to_string(out.join("pattern.txt")).unwrap();
        assert_eq!(pattern.lines().count(), scenario.optimizer.pattern_subframes);
        let parsed = AbsPattern::from_activity_text(&pattern, "pattern.txt").unwrap();
        assert_eq!(parsed, report.pattern);

        let mt = optimize_scenario(&scenario, dir.path(), &out, &Policy::MaxThroughput).unwrap();
        assert!(mt.objective.is_none());
        let ones = mt
            .probabilities
            .as_slice()
            .iter()
            .filter(|p| **p > 0.0)
            .count();
        assert!(ones >= 1);
    }

    #[test]
    fn validation_compares_model_and_simulation() {
        let mut scenario = tiny_scenario();
        scenario.sim.duration_s = 20.0;
        scenario.seeds = vec![3];
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let report = validate_scenario(&scenario, dir.path(), &out).unwrap();
        // all-active + three one-blanked states, 4 groups each
        assert_eq!(report.system.len(), 4);
        assert_eq!(report.groups.len(), 16);
        assert!(
            report.all_system_within(),
            "system rows: {:?}",
            report.system
        );
        let text = fs::read_to_string(out.join("validate_system.csv")).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(fs::read_to_string(out.join("validate_groups.csv"))
            .unwrap()
            .starts_with("state_id,group_id,analytic_bps,sim_bps,ci_low,ci_high,within\n"));
    }

    #[test]
    fn file_deployment_and_mcs_are_loaded_relative_to_base_dir() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("sites.csv"),
            "id,x_m,y_m,tx_power_dbm\n0,10.0,20.0,24.0\n1,90.0,20.0,24.0\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("mcs.csv"),
            "t_min_db,t_max_db,bits_per_symbol\n0.0,10.0,2.0\n10.0,inf,4.0\n",
        )
        .unwrap();
        let scenario = Scenario::from_json_str(
            r#"{
                "deployment": {"kind": "file", "path": "sites.csv"},
                "radio": {"mcs_file": "mcs.csv"},
                "groups": {"count": 2}
            }"#,
        )
        .unwrap();
        let env = scenario.build_env(dir.path()).unwrap();
        assert_eq!(env.n_stations(), 2);
        assert_eq!(env.mcs().len(), 2);
        assert_relative_eq!(env.mcs().max_bits_per_symbol(), 4.0);
        // missing file propagates a readable error
        let missing = Scenario::from_json_str(
            r#"{"deployment": {"kind": "file", "path": "nope.csv"}, "groups": {"count": 2}}"#,
        )
        .unwrap();
        assert!(missing.build_env(dir.path()).is_err());
    }
}
