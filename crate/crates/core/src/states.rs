//! ABS states and per-snapshot network throughput.
//!
//! An ABS state is the subset of base stations allowed to transmit during a
//! subframe; blanked stations are fully silent (no data, no reference
//! signals), so they neither serve nor interfere. Given a concrete placement
//! of relay groups (a [`Snapshot`]), this module computes association,
//! weighted scheduler shares, per-group transmission efficiency and
//! throughput for any state.

use rand::{Rng, SeedableRng};

use crate::deploy::{BaseStation, Deployment, Point, Rect};
use crate::error::{Error, Result};
use crate::mcs::McsTable;
use crate::radio::{self, LinkBudget, PathlossModel};

/// Upper limit for full state-space enumeration without an explicit cap.
const MAX_FULL_ENUMERATION: usize = 1 << 20;

/// Internal seed for capped state-space sampling, fixed so that repeated
/// enumerations of the same space agree.
const STATE_SAMPLE_SEED: u64 = 0x0ab5_57a7_e5ee_d001;

/// One ABS state: bit `b` set means station `b` transmits in the subframe.
///
/// The state id is the bitmask value itself, so ids and masks round-trip
/// bijectively for any station count up to 32.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct AbsState {
    mask: u32,
}

impl AbsState {
    /// All stations blanked (zero throughput by construction).
    pub const ALL_BLANKED: AbsState = AbsState { mask: 0 };

    /// Validate a mask against the station count.
    pub fn from_mask(mask: u32, n_stations: usize) -> Result<Self> {
        check_station_count(n_stations)?;
        if n_stations < 32 && mask >= (1u32 << n_stations) {
            return Err(Error::domain(format!(
                "state mask {mask:#x} out of range for {n_stations} stations"
            )));
        }
        Ok(AbsState { mask })
    }

    pub fn all_active(n_stations: usize) -> Result<Self> {
        check_station_count(n_stations)?;
        let mask = if n_stations == 32 {
            u32::MAX
        } else {
            (1u32 << n_stations) - 1
        };
        Ok(AbsState { mask })
    }

    /// The id of a state is its bitmask.
    pub fn id(self) -> u32 {
        self.mask
    }

    pub fn is_active(self, station: usize) -> bool {
        station < 32 && self.mask & (1u32 << station) != 0
    }

    pub fn active_count(self) -> u32 {
        self.mask.count_ones()
    }

    pub fn with_blanked(self, station: usize) -> Self {
        AbsState {
            mask: self.mask & !(1u32 << station),
        }
    }

    pub fn active_stations(self, n_stations: usize) -> impl Iterator<Item = usize> {
        let mask = self.mask;
        (0..n_stations).filter(move |b| mask & (1u32 << b) != 0)
    }

    /// Per-station activity bits (1 = transmitting), e.g. for pattern files.
    pub fn activity_bits(self, n_stations: usize) -> Vec<u8> {
        (0..n_stations)
            .map(|b| u8::from(self.mask & (1u32 << b) != 0))
            .collect()
    }
}

fn check_station_count(n_stations: usize) -> Result<()> {
    if n_stations == 0 || n_stations > 32 {
        return Err(Error::domain(format!(
            "station count must be in 1..=32, got {n_stations}"
        )));
    }
    Ok(())
}

/// Enumerate the ABS state space of `n_stations` stations in id order.
///
/// Without a cap the full `2^n` space is returned and `n_stations` is
/// limited to 20. With `Some(cap)`, spaces larger than the cap are uniformly
/// sampled down to exactly `cap` states that always include the all-active
/// state and every all-but-one state (the states any blanking policy pivots
/// around). Sampling is deterministic.
pub fn enumerate_states(n_stations: usize, max_states: Option<usize>) -> Result<Vec<AbsState>> {
    check_station_count(n_stations)?;
    let total: u64 = 1u64 << n_stations;
    match max_states {
        None => {
            if total > MAX_FULL_ENUMERATION as u64 {
                return Err(Error::resource(format!(
                    "2^{n_stations} states exceed the full-enumeration limit of {MAX_FULL_ENUMERATION}; pass a cap"
                )));
            }
            Ok((0..total).map(|m| AbsState { mask: m as u32 }).collect())
        }
        Some(cap) => {
            if total <= cap as u64 {
                return Ok((0..total).map(|m| AbsState { mask: m as u32 }).collect());
            }
            let mandatory = n_stations + 1; // all-active + each all-but-one
            if cap < mandatory {
                return Err(Error::domain(format!(
                    "cap {cap} cannot hold the {mandatory} mandatory states (all-active, all-but-one)"
                )));
            }
            let all = AbsState::all_active(n_stations)?;
            let mut picked: std::collections::BTreeSet<u32> = std::collections::BTreeSet::new();
            picked.insert(all.mask);
            for b in 0..n_stations {
                picked.insert(all.with_blanked(b).mask);
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(STATE_SAMPLE_SEED);
            while picked.len() < cap {
                let m = rng.random_range(0..total) as u32;
                picked.insert(m);
            }
            Ok(picked.into_iter().map(|mask| AbsState { mask }).collect())
        }
    }
}

/// Everything the multi-cell model needs about the physical layer:
/// deployment, pathloss, constant receiver noise (watts, > 0), MCS table,
/// and the scheduler symbol rate (symbols/s).
#[derive(Debug, Clone)]
pub struct NetworkEnv {
    deployment: Deployment,
    pathloss: PathlossModel,
    noise_w: f64,
    mcs: McsTable,
    k_sym: f64,
    /// Precomputed `tx_power^(2/exponent)` per station: comparing
    /// `d_clamped^2 / that` orders stations exactly like mean received
    /// power under the log-distance model, without logarithms.
    assoc_k: Vec<f64>,
    min_d2: f64,
}

impl NetworkEnv {
    pub fn new(
        deployment: Deployment,
        pathloss: PathlossModel,
        noise_w: f64,
        mcs: McsTable,
        k_sym: f64,
    ) -> Result<Self> {
        pathloss.validate()?;
        if !(noise_w > 0.0) || !noise_w.is_finite() {
            return Err(Error::domain(format!(
                "receiver noise power must be positive, got {noise_w} W"
            )));
        }
        if !(k_sym > 0.0) || !k_sym.is_finite() {
            return Err(Error::domain(format!("symbol rate must be positive, got {k_sym}")));
        }
        let assoc_k = deployment
            .stations()
            .iter()
            .map(|s| s.tx_power_w.powf(2.0 / pathloss.exponent))
            .collect();
        let min_d2 = pathloss.min_distance_m * pathloss.min_distance_m;
        Ok(NetworkEnv {
            deployment,
            pathloss,
            noise_w,
            mcs,
            k_sym,
            assoc_k,
            min_d2,
        })
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    pub fn pathloss(&self) -> &PathlossModel {
        &self.pathloss
    }

    pub fn noise_w(&self) -> f64 {
        self.noise_w
    }

    pub fn mcs(&self) -> &McsTable {
        &self.mcs
    }

    pub fn k_sym(&self) -> f64 {
        self.k_sym
    }

    pub fn n_stations(&self) -> usize {
        self.deployment.n_stations()
    }

    pub fn all_active(&self) -> AbsState {
        AbsState::all_active(self.n_stations()).expect("validated deployment")
    }

    /// Station with the strongest mean received power at `p` among the
    /// active set of `state`; ties broken toward the lowest station id.
    /// `None` when every station is blanked.
    pub fn strongest_active(&self, p: Point, state: AbsState) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for s in self.deployment.stations() {
            if !state.is_active(s.id) {
                continue;
            }
            let metric = s.position.dist2(p).max(self.min_d2) / self.assoc_k[s.id];
            match best {
                Some((_, m)) if m <= metric => {}
                _ => best = Some((s.id, metric)),
            }
        }
        best.map(|(id, _)| id)
    }

    /// Mean received power (watts) from station `b` at point `p`.
    pub fn mean_rx_power_w(&self, b: usize, p: Point) -> f64 {
        radio::rx_power_w(&self.deployment.stations()[b], p, &self.pathloss)
    }

    /// Collect the active stations of a state (by value; stations are small).
    pub fn active_stations(&self, state: AbsState) -> Vec<BaseStation> {
        self.deployment
            .stations()
            .iter()
            .filter(|s| state.is_active(s.id))
            .copied()
            .collect()
    }
}

/// A relay group frozen in place: centroid plus per-member offsets.
/// The group size is the number of members (>= 1).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GroupPlacement {
    pub centroid: Point,
    pub offsets: Vec<Point>,
}

impl GroupPlacement {
    /// Group of `size` members co-located at the centroid.
    pub fn at(centroid: Point, size: usize) -> Result<Self> {
        GroupPlacement::with_offsets(centroid, vec![Point::new(0.0, 0.0); size])
    }

    pub fn with_offsets(centroid: Point, offsets: Vec<Point>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::domain("group must have at least one member"));
        }
        Ok(GroupPlacement { centroid, offsets })
    }

    pub fn size(&self) -> usize {
        self.offsets.len()
    }

    pub fn member_positions(&self) -> impl Iterator<Item = Point> + '_ {
        self.offsets
            .iter()
            .map(move |o| Point::new(self.centroid.x_m + o.x_m, self.centroid.y_m + o.y_m))
    }
}

/// Positions of all groups at one instant.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Snapshot {
    pub groups: Vec<GroupPlacement>,
    pub time_s: f64,
}

impl Snapshot {
    pub fn new(groups: Vec<GroupPlacement>, time_s: f64) -> Self {
        Snapshot { groups, time_s }
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(GroupPlacement::size).collect()
    }

    /// Check that all centroids and members lie inside the service area.
    pub fn validate_within(&self, world: &Rect) -> Result<()> {
        for (c, g) in self.groups.iter().enumerate() {
            if !world.contains(g.centroid) {
                return Err(Error::domain(format!("group {c} centroid outside the world rectangle")));
            }
            for m in g.member_positions() {
                if !world.contains(m) {
                    return Err(Error::domain(format!("group {c} member outside the world rectangle")));
                }
            }
        }
        Ok(())
    }
}

/// Association of every group to at most one active station, with the
/// per-station load needed for scheduler shares.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLoad {
    serving: Vec<Option<usize>>,
    station_groups: Vec<Vec<usize>>,
    station_weight: Vec<u64>,
    group_size: Vec<u64>,
}

impl CellLoad {
    /// Station serving group `g`, `None` if unassociated.
    pub fn serving_of(&self, group: usize) -> Option<usize> {
        self.serving.get(group).copied().flatten()
    }

    /// Groups associated with station `b`, ascending by group index.
    pub fn groups_of(&self, station: usize) -> &[usize] {
        &self.station_groups[station]
    }

    /// Total member count over the groups served by station `b`.
    pub fn weight_of(&self, station: usize) -> u64 {
        self.station_weight[station]
    }

    pub fn n_groups(&self) -> usize {
        self.serving.len()
    }

    pub fn group_size(&self, group: usize) -> u64 {
        self.group_size[group]
    }
}

/// Associate each group with the active station offering the strongest mean
/// received power at the group centroid (ties toward the lowest station id).
/// With every station blanked, all groups are unassociated.
pub fn associate(snapshot: &Snapshot, state: AbsState, env: &NetworkEnv) -> CellLoad {
    associate_groups(&snapshot.groups, state, env)
}

/// [`associate`] over a bare placement slice (avoids building a snapshot in
/// per-subframe loops).
pub(crate) fn associate_groups(groups: &[GroupPlacement], state: AbsState, env: &NetworkEnv) -> CellLoad {
    let n_b = env.n_stations();
    let mut serving = Vec::with_capacity(groups.len());
    let mut station_groups = vec![Vec::new(); n_b];
    let mut station_weight = vec![0u64; n_b];
    let mut group_size = Vec::with_capacity(groups.len());
    for (c, g) in groups.iter().enumerate() {
        let sb = env.strongest_active(g.centroid, state);
        serving.push(sb);
        group_size.push(g.size() as u64);
        if let Some(b) = sb {
            station_groups[b].push(c);
            station_weight[b] += g.size() as u64;
        }
    }
    CellLoad {
        serving,
        station_groups,
        station_weight,
        group_size,
    }
}

/// Long-run share of the serving station's symbol rate granted to `group`
/// by a weighted scheduler: `k_sym * U_c / sum of co-served member counts`
/// (symbols/s). Zero for unassociated groups.
pub fn scheduler_share(group: usize, load: &CellLoad, k_sym: f64) -> f64 {
    match load.serving_of(group) {
        None => 0.0,
        Some(b) => k_sym * load.group_size(group) as f64 / load.weight_of(b) as f64,
    }
}

/// How member SINR distributions are aggregated into a group CDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyMode {
    /// Per-member budgets at the true member positions (max-CDF product).
    Exact,
    /// All members share the centroid budget (`F^U`).
    Centroid,
}

/// Transmission efficiency (expected bits/symbol through the elected relay)
/// of one group in one state; 0 when the group is unassociated.
pub fn state_efficiency(
    group: usize,
    snapshot: &Snapshot,
    state: AbsState,
    env: &NetworkEnv,
    mode: EfficiencyMode,
) -> f64 {
    let load = associate(snapshot, state, env);
    let active = env.active_stations(state);
    efficiency_served(group, snapshot, load.serving_of(group), &active, env, mode)
}

/// Efficiency of `group` given its serving station and the active set.
pub(crate) fn efficiency_served(
    group: usize,
    snapshot: &Snapshot,
    serving: Option<usize>,
    active: &[BaseStation],
    env: &NetworkEnv,
    mode: EfficiencyMode,
) -> f64 {
    let Some(b) = serving else {
        return 0.0;
    };
    let g = &snapshot.groups[group];
    let serving_station = env.deployment().stations()[b];
    let budget_at = |p: Point| -> LinkBudget {
        radio::link_budget_at(p, &serving_station, active, env.pathloss(), env.noise_w())
            .expect("active serving station and positive noise give a valid budget")
    };
    match mode {
        EfficiencyMode::Exact => {
            let budgets: Vec<LinkBudget> = g.member_positions().map(budget_at).collect();
            radio::group_efficiency_exact(&budgets, env.mcs()).expect("non-empty group")
        }
        EfficiencyMode::Centroid => {
            let budget = budget_at(g.centroid);
            radio::group_efficiency_centroid(&budget, g.size(), env.mcs()).expect("size >= 1")
        }
    }
}

/// Per-group and total throughput of a snapshot under one ABS state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateThroughput {
    /// Bits/s delivered to each group (share x efficiency).
    pub per_group_bps: Vec<f64>,
    /// System throughput: sum over groups, bits/s.
    pub total_bps: f64,
}

/// Throughput of every group in `snapshot` when the network holds `state`
/// for a long interval: scheduler share times transmission efficiency.
pub fn instantaneous_throughput(
    snapshot: &Snapshot,
    state: AbsState,
    env: &NetworkEnv,
    mode: EfficiencyMode,
) -> StateThroughput {
    let load = associate(snapshot, state, env);
    let active = env.active_stations(state);
    let mut per_group_bps = Vec::with_capacity(snapshot.n_groups());
    for c in 0..snapshot.n_groups() {
        let share = scheduler_share(c, &load, env.k_sym());
        let gamma = if share > 0.0 {
            share * efficiency_served(c, snapshot, load.serving_of(c), &active, env, mode)
        } else {
            0.0
        };
        per_group_bps.push(gamma);
    }
    let total_bps = per_group_bps.iter().sum();
    StateThroughput {
        per_group_bps,
        total_bps,
    }
}
