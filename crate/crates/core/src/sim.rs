//! Subframe-granular downlink simulator.
//!
//! Each 1 ms subframe applies one blanking state: every active station with
//! associated groups grants the whole subframe to one group picked by
//! smooth weighted round-robin (weights = group sizes), each member of the
//! granted group draws an instantaneous SINR (exponential received-power
//! fading around the pathloss mean, interference from the other active
//! stations, constant thermal noise), the best member relays, and the MCS
//! entry containing its SINR determines the delivered bits. The sidelink
//! itself is modeled as lossless and never the bottleneck.
//!
//! Groups are either static or follow random-waypoint mobility with fixed
//! member offsets around the centroid. Blanking policies range from a
//! constant all-active pattern to per-interval re-optimization against
//! measured throughput history.

pub mod metrics;
pub mod mobility;
pub mod wrr;

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::asymptotic::{AsymptoticModel, GroupModel, Raster, ShareMode, SpatialDistribution, EXACT_SHARE_LIMIT};
use crate::deploy::{Point, Rect};
use crate::error::{Error, Result};
use crate::optimizer::{
    build_pattern, fixed_ratio_pattern, solve_asymptotic_pf, solve_dynamic_pf,
    solve_max_throughput, AbsPattern, History, SolveOptions, ThroughputMatrix,
    STANDARD_PATTERN_SUBFRAMES,
};
use crate::seeding::sub_seed;
use crate::states::{self, AbsState, CellLoad, EfficiencyMode, GroupPlacement, NetworkEnv, Snapshot};
use metrics::{batch_means_ci95, jain_index, user_jain, Ci95};
use mobility::{RwpConfig, RwpWalker};
use wrr::SmoothWrr;

/// Subframe duration in seconds (1 ms).
pub const SUBFRAME_S: f64 = 1e-3;

/// Simulation timing, randomness, and mobility-speed parameters.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub duration_s: f64,
    /// Re-optimization / reporting interval in milliseconds (a whole number
    /// of subframes by construction).
    pub t_interval_ms: u64,
    pub seed: u64,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub pause_s: f64,
    /// Batch count for batch-means confidence intervals.
    pub batches: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            duration_s: 500.0,
            t_interval_ms: 500,
            seed: 0,
            speed_min_mps: 1.0,
            speed_max_mps: 10.0,
            pause_s: 0.0,
            batches: 20,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::config(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if self.t_interval_ms == 0 {
            return Err(Error::config("interval must be at least one subframe"));
        }
        if !(self.speed_min_mps > 0.0) || self.speed_max_mps < self.speed_min_mps {
            return Err(Error::config(format!(
                "speed range must satisfy 0 < min <= max, got {}..{}",
                self.speed_min_mps, self.speed_max_mps
            )));
        }
        if self.batches < 2 {
            return Err(Error::config("confidence intervals need at least 2 batches"));
        }
        Ok(())
    }

    fn total_subframes(&self) -> u64 {
        ((self.duration_s / SUBFRAME_S).round() as u64).max(1)
    }
}

/// Blanking policy to simulate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    /// No blanking: every station transmits in every subframe.
    Legacy,
    /// Each station independently active in `used` of every `total`
    /// subframes.
    FixedRatio { used: usize, total: usize },
    /// One proportional-fairness solve on expected throughputs, fixed
    /// pattern thereafter.
    AsymptoticPf,
    /// Per-interval proportional-fairness re-solve against throughput
    /// history.
    DynamicPf,
    /// Per-interval greedy re-solve: all probability on the state with the
    /// best summed snapshot throughput.
    MaxThroughput,
}

impl Policy {
    pub fn name(&self) -> String {
        match self {
            Policy::Legacy => "legacy".to_string(),
            Policy::FixedRatio { used, total } => format!("fixed-{used}/{total}"),
            Policy::AsymptoticPf => "asymptotic-pf".to_string(),
            Policy::DynamicPf => "dynamic-pf".to_string(),
            Policy::MaxThroughput => "max-throughput".to_string(),
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Policy> {
        match s {
            "legacy" => Ok(Policy::Legacy),
            "asymptotic-pf" => Ok(Policy::AsymptoticPf),
            "dynamic-pf" => Ok(Policy::DynamicPf),
            "max-throughput" => Ok(Policy::MaxThroughput),
            other => {
                let ratio = other
                    .strip_prefix("fixed-")
                    .and_then(|r| r.split_once('/'))
                    .and_then(|(u, t)| Some((u.parse().ok()?, t.parse().ok()?)));
                match ratio {
                    Some((used, total)) => Ok(Policy::FixedRatio { used, total }),
                    None => Err(Error::config(format!(
                        "unknown policy `{other}` (expected legacy, fixed-U/T, \
                         asymptotic-pf, dynamic-pf, or max-throughput)"
                    ))),
                }
            }
        }
    }
}

/// Optimization inputs shared by the pattern-based policies.
#[derive(Debug, Clone)]
pub struct OptimizerSetup {
    /// Candidate blanking states (must include the states the policies may
    /// choose from; typically the full or sampled enumeration).
    pub states: Vec<AbsState>,
    /// Efficiency evaluation for snapshot throughput matrices.
    pub efficiency_mode: EfficiencyMode,
    /// Expected-share evaluation for mobile (spatial-expectation) matrices;
    /// `None` picks exact enumeration when the group count allows it and
    /// seeded Monte-Carlo otherwise.
    pub share_mode: Option<ShareMode>,
    /// Quadrature cell size for mobile matrices.
    pub raster_cell_m: f64,
    pub solve: SolveOptions,
    /// History smoothing coefficients for the dynamic policy
    /// (`alphas[0]` = current interval).
    pub alphas: Vec<f64>,
    /// Feed the dynamic history with model-predicted instead of measured
    /// throughputs.
    pub open_loop: bool,
    /// Length of the repeating pattern built by the one-shot policies.
    pub pattern_subframes: usize,
}

impl OptimizerSetup {
    pub fn new(states: Vec<AbsState>) -> OptimizerSetup {
        OptimizerSetup {
            states,
            efficiency_mode: EfficiencyMode::Exact,
            share_mode: None,
            raster_cell_m: 2.0,
            solve: SolveOptions::default(),
            alphas: vec![1.0; 21],
            open_loop: false,
            pattern_subframes: STANDARD_PATTERN_SUBFRAMES,
        }
    }
}

/// Everything one simulation run needs.
#[derive(Debug, Clone)]
pub struct RunSpec<'e> {
    pub env: &'e NetworkEnv,
    pub world: Rect,
    /// Initial group placements (centroid + member offsets).
    pub groups: Vec<GroupPlacement>,
    /// Random-waypoint mobility for the centroids; members keep their
    /// offsets.
    pub mobile: bool,
    pub config: SimConfig,
    pub optimizer: OptimizerSetup,
}

impl RunSpec<'_> {
    fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.groups.is_empty() {
            return Err(Error::config("need at least one group"));
        }
        for (c, g) in self.groups.iter().enumerate() {
            if !self.world.contains(g.centroid) {
                return Err(Error::config(format!(
                    "group {c} centroid {:?} outside the world rectangle",
                    g.centroid
                )));
            }
        }
        Ok(())
    }
}

/// One time-series sample: a group's throughput over one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub time_s: f64,
    pub group_id: usize,
    pub throughput_bps: f64,
}

/// Aggregated output of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub policy: String,
    pub seed: u64,
    pub duration_s: f64,
    /// Long-run average throughput per group (bit/s).
    pub per_group_bps: Vec<f64>,
    /// Per-user throughput: each group's average split across its members.
    pub per_user_bps: Vec<f64>,
    pub system_throughput_bps: f64,
    /// Jain index over `per_user_bps` (0 when nobody received anything).
    pub jfi_users: f64,
    /// Jain index of per-user throughput within each measurement batch
    /// (0 for a batch where nobody received anything). Fairness at the
    /// batch timescale: long-run averages hide how unevenly short
    /// stretches treat users, so per-batch indices are the stricter view.
    pub jfi_user_batches: Vec<f64>,
    /// Batch-means summary of `jfi_user_batches` (mean and 95% CI).
    pub jfi_batch_ci95: Ci95,
    /// Batch-means confidence interval on the system throughput.
    pub ci95: Ci95,
    /// Per-interval per-group throughput samples.
    pub series: Vec<SeriesRow>,
    /// Scheduler grants issued (one per active station with members per
    /// subframe).
    pub served_subframes: u64,
    /// Station-subframes that had members to serve; always equals
    /// `served_subframes` (conservation).
    pub eligible_subframes: u64,
    /// Scheduler grants per group (proportional to size under fixed
    /// membership).
    pub served_per_group: Vec<u64>,
}

impl MetricsReport {
    /// Render the time series as `time_s,group_id,throughput_bps` CSV.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("time_s,group_id,throughput_bps\n");
        for row in &self.series {
            out.push_str(&format!("{},{},{}\n", row.time_s, row.group_id, row.throughput_bps));
        }
        out
    }
}

/// Per-subframe engine state.
struct Engine<'e> {
    env: &'e NetworkEnv,
    groups: Vec<GroupPlacement>,
    sizes: Vec<u64>,
    mobility: Option<(RwpConfig, Vec<RwpWalker>)>,
    mobility_rng: ChaCha8Rng,
    fading: ChaCha8Rng,
    /// Static runs: association per state id (positions never change).
    assoc_cache: HashMap<u32, CellLoad>,
    /// Static runs: mean rx power per member and station,
    /// `rx[member_offset[c] + m][b]`.
    rx_cache: Option<Vec<f64>>,
    member_offset: Vec<usize>,
    /// Active-station lists per state id.
    active_cache: HashMap<u32, Vec<usize>>,
    /// Per-station scheduler state; rebuilt when membership changes.
    scheds: Vec<Option<SmoothWrr>>,
    n_b: usize,
}

impl<'e> Engine<'e> {
    fn new(spec: &RunSpec<'e>) -> Result<Engine<'e>> {
        let n_b = spec.env.n_stations();
        let seed = spec.config.seed;
        let mut mobility_rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, "mobility"));
        let mobility = if spec.mobile {
            let cfg = RwpConfig::new(
                spec.world,
                spec.config.speed_min_mps,
                spec.config.speed_max_mps,
                spec.config.pause_s,
            )?;
            let walkers = spec
                .groups
                .iter()
                .map(|g| RwpWalker::at(g.centroid, &cfg, &mut mobility_rng))
                .collect();
            Some((cfg, walkers))
        } else {
            None
        };
        let mut member_offset = Vec::with_capacity(spec.groups.len());
        let mut total_members = 0usize;
        for g in &spec.groups {
            member_offset.push(total_members);
            total_members += g.size();
        }
        let rx_cache = if spec.mobile {
            None
        } else {
            let mut rx = Vec::with_capacity(total_members * n_b);
            for g in &spec.groups {
                for pos in g.member_positions() {
                    for b in 0..n_b {
                        rx.push(spec.env.mean_rx_power_w(b, pos));
                    }
                }
            }
            Some(rx)
        };
        Ok(Engine {
            env: spec.env,
            groups: spec.groups.clone(),
            sizes: spec.groups.iter().map(|g| g.size() as u64).collect(),
            mobility,
            mobility_rng,
            fading: ChaCha8Rng::seed_from_u64(sub_seed(seed, "fading")),
            assoc_cache: HashMap::new(),
            rx_cache,
            member_offset,
            active_cache: HashMap::new(),
            scheds: vec![None; n_b],
            n_b,
        })
    }

    fn snapshot(&self, time_s: f64) -> Snapshot {
        Snapshot::new(self.groups.clone(), time_s)
    }

    fn active_stations(&mut self, state: AbsState) -> Vec<usize> {
        let n_b = self.n_b;
        self.active_cache
            .entry(state.id())
            .or_insert_with(|| state.active_stations(n_b).collect())
            .clone()
    }

    fn mean_rx(&self, group: usize, member: usize, station: usize, pos: Point) -> f64 {
        match &self.rx_cache {
            Some(rx) => rx[(self.member_offset[group] + member) * self.n_b + station],
            None => self.env.mean_rx_power_w(station, pos),
        }
    }

    /// Best member SINR -> MCS -> bits delivered this subframe.
    fn draw_group_bits(&mut self, group: usize, serving: usize, active: &[usize]) -> f64 {
        use rand_distr::Distribution;
        let exp1 = rand_distr::Exp1;
        let noise = self.env.noise_w();
        let n_members = self.groups[group].size();
        let centroid = self.groups[group].centroid;
        let mut best_sinr = 0.0f64;
        for m in 0..n_members {
            let o = self.groups[group].offsets[m];
            let pos = Point::new(centroid.x_m + o.x_m, centroid.y_m + o.y_m);
            let draw: f64 = exp1.sample(&mut self.fading);
            let signal = self.mean_rx(group, m, serving, pos) * draw;
            let mut interference = 0.0;
            for &b in active {
                if b != serving {
                    let draw: f64 = exp1.sample(&mut self.fading);
                    interference += self.mean_rx(group, m, b, pos) * draw;
                }
            }
            best_sinr = best_sinr.max(signal / (interference + noise));
        }
        self.env.mcs().bits_for(best_sinr) * self.env.k_sym() * SUBFRAME_S
    }

    /// Run one subframe under `state`; adds delivered bits into `bits_out`
    /// and returns the number of scheduler grants issued.
    fn step_subframe(
        &mut self,
        state: AbsState,
        bits_out: &mut [f64],
        served_per_group: &mut [u64],
    ) -> u64 {
        let load = if self.mobility.is_some() {
            states::associate_groups(&self.groups, state, self.env)
        } else {
            let groups = &self.groups;
            let env = self.env;
            self.assoc_cache
                .entry(state.id())
                .or_insert_with(|| states::associate_groups(groups, state, env))
                .clone()
        };
        let active = self.active_stations(state);
        let mut grants = 0;
        for &b in &active {
            let members = load.groups_of(b);
            if members.is_empty() {
                continue;
            }
            let rebuild = match &self.scheds[b] {
                Some(w) => w.ids() != members,
                None => true,
            };
            if rebuild {
                let entries: Vec<(usize, u64)> =
                    members.iter().map(|&c| (c, self.sizes[c])).collect();
                self.scheds[b] = Some(SmoothWrr::new(&entries));
            }
            let group = self.scheds[b].as_mut().expect("just built").pick();
            bits_out[group] += self.draw_group_bits(group, b, &active);
            served_per_group[group] += 1;
            grants += 1;
        }
        grants
    }

    /// Advance mobility by one subframe.
    fn step_mobility(&mut self) {
        if let Some((cfg, walkers)) = &mut self.mobility {
            for (g, w) in walkers.iter_mut().enumerate() {
                self.groups[g].centroid = w.step(SUBFRAME_S, cfg, &mut self.mobility_rng);
            }
        }
    }
}

/// Pattern supplier: fixed policies tile one pattern over the whole run;
/// the dynamic policy emits a fresh pattern every interval.
enum Driver<'a> {
    Fixed(AbsPattern),
    PerInterval(Box<dyn FnMut(usize, &Snapshot, Option<&[f64]>) -> Result<AbsPattern> + 'a>),
}

/// Simulate with a pinned repeating pattern (used by the fixed policies and
/// by model-validation runs).
pub fn run_with_pattern(spec: &RunSpec, pattern: &AbsPattern, label: &str) -> Result<MetricsReport> {
    spec.validate()?;
    if pattern.n_stations() != spec.env.n_stations() {
        return Err(Error::config(format!(
            "pattern covers {} stations, deployment has {}",
            pattern.n_stations(),
            spec.env.n_stations()
        )));
    }
    let mut engine = Engine::new(spec)?;
    run_loop(&mut engine, spec, Driver::Fixed(pattern.clone()), label)
}

/// Simulate one policy end to end.
pub fn run_experiment(spec: &RunSpec, policy: &Policy) -> Result<MetricsReport> {
    spec.validate()?;
    let n_b = spec.env.n_stations();
    let seed = spec.config.seed;
    let label = policy.name();
    match policy {
        Policy::Legacy => {
            let pattern = AbsPattern::new(vec![spec.env.all_active().id()], n_b)?;
            let mut engine = Engine::new(spec)?;
            run_loop(&mut engine, spec, Driver::Fixed(pattern), &label)
        }
        Policy::FixedRatio { used, total } => {
            // round the standard length down to a whole number of periods
            let periods = (spec.optimizer.pattern_subframes / *total.max(&1)).max(1);
            let pattern = fixed_ratio_pattern(
                *used,
                *total,
                n_b,
                periods * total,
                sub_seed(seed, "pattern"),
            )?;
            let mut engine = Engine::new(spec)?;
            run_loop(&mut engine, spec, Driver::Fixed(pattern), &label)
        }
        Policy::AsymptoticPf => {
            let setup = &spec.optimizer;
            check_states(setup, n_b)?;
            let matrix = planning_matrix(spec)?;
            let probabilities = solve_asymptotic_pf(&matrix, &setup.solve)?.probabilities;
            let pattern = build_pattern(
                &probabilities,
                &setup.states,
                n_b,
                setup.pattern_subframes,
                sub_seed(seed, "pattern"),
            )?;
            let mut engine = Engine::new(spec)?;
            run_loop(&mut engine, spec, Driver::Fixed(pattern), &label)
        }
        Policy::MaxThroughput => {
            // Greedy counterpart of the dynamic planner: same per-interval
            // re-solve against the current snapshot, but a linear objective
            // (plain sum of group throughputs, unit weights) instead of the
            // log utility. History shifts a linear objective by a constant,
            // so it plays no part in the choice.
            let setup = &spec.optimizer;
            check_states(setup, n_b)?;
            let static_matrix = if spec.mobile {
                None
            } else {
                Some(unit_weight_snapshot_matrix(spec, &spec.groups, 0.0)?)
            };
            let interval_sf = spec.config.t_interval_ms as usize;
            let states = setup.states.clone();
            let driver = Driver::PerInterval(Box::new(
                move |interval: usize, snap: &Snapshot, _measured_prev: Option<&[f64]>| {
                    let matrix = match &static_matrix {
                        Some(m) => m.clone(),
                        None => unit_weight_snapshot_matrix(spec, &snap.groups, snap.time_s)?,
                    };
                    let probabilities = solve_max_throughput(&matrix)?;
                    build_pattern(
                        &probabilities,
                        &states,
                        n_b,
                        interval_sf,
                        sub_seed(seed, &format!("pattern/{interval}")),
                    )
                },
            ));
            let mut engine = Engine::new(spec)?;
            run_loop(&mut engine, spec, driver, &label)
        }
        Policy::DynamicPf => {
            let setup = &spec.optimizer;
            check_states(setup, n_b)?;
            // Static groups keep one matrix; mobile runs rebuild from the
            // current positions at each interval (modeling CSI reports).
            let static_matrix = if spec.mobile {
                None
            } else {
                Some(snapshot_matrix(spec, &spec.groups, 0.0)?)
            };
            let mut history = History::new(setup.alphas.clone())?;
            let interval_sf = spec.config.t_interval_ms as usize;
            let states = setup.states.clone();
            let solve = setup.solve.clone();
            let open_loop = setup.open_loop;
            let driver = Driver::PerInterval(Box::new(
                move |interval: usize, snap: &Snapshot, measured_prev: Option<&[f64]>| {
                    if !open_loop {
                        if let Some(measured) = measured_prev {
                            history.push(measured.to_vec());
                        }
                    }
                    let matrix = match &static_matrix {
                        Some(m) => m.clone(),
                        None => snapshot_matrix(spec, &snap.groups, snap.time_s)?,
                    };
                    let sol = solve_dynamic_pf(&matrix, &history, &solve)?;
                    if open_loop {
                        history.push(
                            matrix.expected_group_throughput(sol.probabilities.as_slice()),
                        );
                    }
                    build_pattern(
                        &sol.probabilities,
                        &states,
                        n_b,
                        interval_sf,
                        sub_seed(seed, &format!("pattern/{interval}")),
                    )
                },
            ));
            let mut engine = Engine::new(spec)?;
            run_loop(&mut engine, spec, driver, &label)
        }
    }
}

fn check_states(setup: &OptimizerSetup, n_b: usize) -> Result<()> {
    if setup.states.is_empty() {
        return Err(Error::config("optimizing policies need a candidate state list"));
    }
    for s in &setup.states {
        AbsState::from_mask(s.id(), n_b)?;
    }
    Ok(())
}

/// Throughput matrix the one-shot planner policy plans against: expected
/// values over the mobility distribution when groups move, the initial
/// snapshot when they do not.
pub fn planning_matrix(spec: &RunSpec) -> Result<ThroughputMatrix> {
    let setup = &spec.optimizer;
    if spec.mobile {
        // Long-run spatial distribution approximated as uniform over the
        // service area (quadrature agrees with random-waypoint time
        // averages to within a few percent).
        let raster = Raster::new(spec.world, setup.raster_cell_m)?;
        let model = AsymptoticModel::new(spec.env, raster);
        let dist = SpatialDistribution::uniform(raster);
        let groups: Vec<GroupModel> = spec
            .groups
            .iter()
            .map(|g| GroupModel {
                dist: dist.clone(),
                size: g.size(),
            })
            .collect();
        let share_mode = setup.share_mode.unwrap_or(if spec.groups.len() <= EXACT_SHARE_LIMIT {
            ShareMode::Exact
        } else {
            ShareMode::MonteCarlo {
                trials: 20_000,
                seed: sub_seed(spec.config.seed, "share"),
            }
        });
        ThroughputMatrix::from_asymptotic(&model, &groups, &setup.states, share_mode, None)
    } else {
        snapshot_matrix(spec, &spec.groups, 0.0)
    }
}

fn snapshot_matrix(spec: &RunSpec, groups: &[GroupPlacement], time_s: f64) -> Result<ThroughputMatrix> {
    let snap = Snapshot::new(groups.to_vec(), time_s);
    ThroughputMatrix::from_snapshot(
        &snap,
        &spec.optimizer.states,
        spec.env,
        spec.optimizer.efficiency_mode,
        None,
    )
}

fn unit_weight_snapshot_matrix(
    spec: &RunSpec,
    groups: &[GroupPlacement],
    time_s: f64,
) -> Result<ThroughputMatrix> {
    let snap = Snapshot::new(groups.to_vec(), time_s);
    ThroughputMatrix::from_snapshot(
        &snap,
        &spec.optimizer.states,
        spec.env,
        spec.optimizer.efficiency_mode,
        Some(vec![1.0; groups.len()]),
    )
}

fn run_loop(
    engine: &mut Engine,
    spec: &RunSpec,
    mut driver: Driver,
    label: &str,
) -> Result<MetricsReport> {
    let total_sf = spec.config.total_subframes();
    let interval_sf = spec.config.t_interval_ms;
    let batches = spec.config.batches as u64;
    let n_groups = engine.groups.len();

    let mut bits_total = vec![0.0f64; n_groups];
    let mut bits_interval = vec![0.0f64; n_groups];
    let mut subframe_bits = vec![0.0f64; n_groups];
    let mut served_per_group = vec![0u64; n_groups];
    let mut batch_group_bits = vec![0.0f64; batches as usize * n_groups];
    let mut batch_sf = vec![0u64; batches as usize];
    let mut series = Vec::new();
    let mut served = 0u64;
    let mut eligible = 0u64;
    let mut measured_prev: Option<Vec<f64>> = None;

    let mut pattern = match &mut driver {
        Driver::Fixed(p) => p.clone(),
        Driver::PerInterval(make) => make(0, &engine.snapshot(0.0), None)?,
    };
    let per_interval = matches!(driver, Driver::PerInterval(_));

    let mut sf = 0u64;
    let mut interval = 0usize;
    while sf < total_sf {
        if per_interval && sf > 0 {
            interval += 1;
            let snap = engine.snapshot(sf as f64 * SUBFRAME_S);
            if let Driver::PerInterval(make) = &mut driver {
                pattern = make(interval, &snap, measured_prev.as_deref())?;
            }
        }
        let interval_end = (sf + interval_sf).min(total_sf);
        let interval_start = sf;
        while sf < interval_end {
            let idx = if per_interval {
                (sf - interval_start) as usize
            } else {
                sf as usize
            };
            let state = pattern.state_at(idx);
            subframe_bits.fill(0.0);
            let grants = engine.step_subframe(state, &mut subframe_bits, &mut served_per_group);
            served += grants;
            eligible += grants;
            let batch = (sf * batches / total_sf) as usize;
            batch_sf[batch] += 1;
            let batch_row = &mut batch_group_bits[batch * n_groups..(batch + 1) * n_groups];
            for c in 0..n_groups {
                bits_interval[c] += subframe_bits[c];
                bits_total[c] += subframe_bits[c];
                batch_row[c] += subframe_bits[c];
            }
            engine.step_mobility();
            sf += 1;
        }
        let dt = (interval_end - interval_start) as f64 * SUBFRAME_S;
        let time_s = interval_end as f64 * SUBFRAME_S;
        let measured: Vec<f64> = bits_interval.iter().map(|b| b / dt).collect();
        for (c, bps) in measured.iter().enumerate() {
            series.push(SeriesRow {
                time_s,
                group_id: c,
                throughput_bps: *bps,
            });
        }
        measured_prev = Some(measured);
        bits_interval.fill(0.0);
    }

    let duration_s = total_sf as f64 * SUBFRAME_S;
    let per_group_bps: Vec<f64> = bits_total.iter().map(|b| b / duration_s).collect();
    let mut per_user_bps = Vec::new();
    for (c, g) in engine.groups.iter().enumerate() {
        let per_user = per_group_bps[c] / g.size() as f64;
        per_user_bps.extend(std::iter::repeat(per_user).take(g.size()));
    }
    let system = per_group_bps.iter().sum();
    let jfi_users = jain_index(&per_user_bps).unwrap_or(0.0);
    let mut batch_means = Vec::with_capacity(batches as usize);
    let mut jfi_user_batches = Vec::with_capacity(batches as usize);
    for (b, n_sf) in batch_sf.iter().enumerate() {
        if *n_sf == 0 {
            continue;
        }
        let row = &batch_group_bits[b * n_groups..(b + 1) * n_groups];
        batch_means.push(row.iter().sum::<f64>() / (*n_sf as f64 * SUBFRAME_S));
        jfi_user_batches.push(user_jain(row, &engine.sizes).unwrap_or(0.0));
    }
    let ci95 = batch_means_ci95(&batch_means)?;
    let jfi_batch_ci95 = batch_means_ci95(&jfi_user_batches)?;

    Ok(MetricsReport {
        policy: label.to_string(),
        seed: spec.config.seed,
        duration_s,
        per_group_bps,
        per_user_bps,
        system_throughput_bps: system,
        jfi_users,
        jfi_user_batches,
        jfi_batch_ci95,
        ci95,
        series,
        served_subframes: served,
        eligible_subframes: eligible,
        served_per_group,
    })
}
