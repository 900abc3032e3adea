//! Long-run expectations over group positions.
//!
//! When groups move ergodically, throughput is governed by expectations of
//! the per-snapshot quantities over the stationary spatial distribution of
//! each group. This module evaluates those expectations by raster
//! quadrature over the service area:
//!
//! - expected per-state transmission efficiency (density-weighted sum of
//!   the centroid-mode efficiency over raster cells),
//! - placement probabilities per coverage region and the expected scheduler
//!   share obtained by enumerating every subset of competing groups,
//! - expected per-state throughput combining both.

use rand::{Rng, SeedableRng};

use crate::deploy::{Point, Rect};
use crate::error::{Error, Result};
use crate::states::{AbsState, NetworkEnv};

/// Largest group count for which the expected share is computed by exact
/// power-set enumeration; larger sets require Monte-Carlo.
pub const EXACT_SHARE_LIMIT: usize = 22;

/// Tolerance on probability normalization (spatial masses, state
/// probabilities).
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Rectangular quadrature grid over the service area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Raster {
    rect: Rect,
    nx: usize,
    ny: usize,
    cell_w_m: f64,
    cell_h_m: f64,
}

impl Raster {
    /// Build a grid of approximately `cell_m`-sized cells tiling `rect`
    /// exactly (the effective cell size is the rectangle divided by the
    /// rounded cell count).
    pub fn new(rect: Rect, cell_m: f64) -> Result<Self> {
        if !(cell_m > 0.0) || !cell_m.is_finite() {
            return Err(Error::domain(format!("raster cell size must be positive, got {cell_m}")));
        }
        let nx = (rect.width_m() / cell_m).round().max(1.0) as usize;
        let ny = (rect.height_m() / cell_m).round().max(1.0) as usize;
        Ok(Raster {
            rect,
            nx,
            ny,
            cell_w_m: rect.width_m() / nx as f64,
            cell_h_m: rect.height_m() / ny as f64,
        })
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_w_m(&self) -> f64 {
        self.cell_w_m
    }

    pub fn cell_h_m(&self) -> f64 {
        self.cell_h_m
    }

    pub fn cell_center(&self, idx: usize) -> Point {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        Point::new(
            self.rect.x_min_m + (ix as f64 + 0.5) * self.cell_w_m,
            self.rect.y_min_m + (iy as f64 + 0.5) * self.cell_h_m,
        )
    }

    /// Index of the cell containing `p` (points on the far edges clamp in).
    pub fn cell_index(&self, p: Point) -> usize {
        let ix = (((p.x_m - self.rect.x_min_m) / self.cell_w_m) as isize).clamp(0, self.nx as isize - 1);
        let iy = (((p.y_m - self.rect.y_min_m) / self.cell_h_m) as isize).clamp(0, self.ny as isize - 1);
        iy as usize * self.nx + ix as usize
    }

    /// Same grid up to floating-point noise in the bounds.
    pub fn compatible(&self, other: &Raster) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.rect.x_min_m - other.rect.x_min_m).abs() < 1e-6
            && (self.rect.y_min_m - other.rect.y_min_m).abs() < 1e-6
            && (self.rect.x_max_m - other.rect.x_max_m).abs() < 1e-6
            && (self.rect.y_max_m - other.rect.y_max_m).abs() < 1e-6
    }

    /// Grid with every cell split in four (for convergence checks).
    pub fn refined(&self) -> Raster {
        Raster {
            rect: self.rect,
            nx: self.nx * 2,
            ny: self.ny * 2,
            cell_w_m: self.cell_w_m / 2.0,
            cell_h_m: self.cell_h_m / 2.0,
        }
    }
}

/// Probability masses of one group's position over a raster; sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialDistribution {
    raster: Raster,
    mass: Vec<f64>,
}

impl SpatialDistribution {
    /// Uniform distribution over the raster rectangle.
    pub fn uniform(raster: Raster) -> SpatialDistribution {
        let n = raster.n_cells();
        SpatialDistribution {
            raster,
            mass: vec![1.0 / n as f64; n],
        }
    }

    /// All mass in the cell containing `at` (snapped to the grid).
    pub fn point(raster: Raster, at: Point) -> SpatialDistribution {
        let mut mass = vec![0.0; raster.n_cells()];
        mass[raster.cell_index(at)] = 1.0;
        SpatialDistribution { raster, mass }
    }

    /// Arbitrary non-negative masses; normalized to sum to 1.
    pub fn from_masses(raster: Raster, mass: Vec<f64>) -> Result<SpatialDistribution> {
        if mass.len() != raster.n_cells() {
            return Err(Error::domain(format!(
                "expected {} cell masses, got {}",
                raster.n_cells(),
                mass.len()
            )));
        }
        let mut total = 0.0;
        for m in &mass {
            if !(*m >= 0.0) || !m.is_finite() {
                return Err(Error::domain(format!("cell masses must be non-negative, got {m}")));
            }
            total += m;
        }
        if !(total > 0.0) {
            return Err(Error::domain("spatial distribution has zero total mass"));
        }
        let mass = mass.into_iter().map(|m| m / total).collect();
        Ok(SpatialDistribution { raster, mass })
    }

    /// Parse the raster CSV format: a header line
    /// `x_min_m,y_min_m,cell_size_m,nx,ny` followed by `ny` rows of `nx`
    /// comma-separated masses (row 0 at `y_min`). Masses are normalized.
    pub fn from_raster_csv(text: &str, origin: &str) -> Result<SpatialDistribution> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(origin, "empty raster file"))?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                origin,
                "expected header `x_min_m,y_min_m,cell_size_m,nx,ny`",
            ));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(origin, format!("bad number `{s}`")))
        };
        let x_min = num(fields[0])?;
        let y_min = num(fields[1])?;
        let cell = num(fields[2])?;
        let nx = num(fields[3])? as usize;
        let ny = num(fields[4])? as usize;
        if nx == 0 || ny == 0 || !(cell > 0.0) {
            return Err(Error::parse(origin, "raster dimensions must be positive"));
        }
        let rect = Rect::new(x_min, y_min, x_min + nx as f64 * cell, y_min + ny as f64 * cell)
            .map_err(|e| Error::parse(origin, e.to_string()))?;
        let raster = Raster::new(rect, cell)?;
        let mut mass = Vec::with_capacity(nx * ny);
        for (row, line) in lines.enumerate() {
            if row >= ny {
                return Err(Error::parse(origin, format!("more than {ny} mass rows")));
            }
            let vals: Vec<&str> = line.split(',').map(str::trim).collect();
            if vals.len() != nx {
                return Err(Error::parse(
                    origin,
                    format!("row {row}: expected {nx} masses, got {}", vals.len()),
                ));
            }
            for v in vals {
                mass.push(num(v)?);
            }
        }
        if mass.len() != nx * ny {
            return Err(Error::parse(origin, format!("expected {ny} mass rows")));
        }
        SpatialDistribution::from_masses(raster, mass)
    }

    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    /// Check normalization (constructors normalize; this guards hand-built
    /// or deserialized values).
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.mass.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain(format!("spatial masses sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// Density-weighted mean of a pointwise function (quadrature).
    pub fn mean_over<F: Fn(Point) -> f64>(&self, f: F) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(|(i, m)| m * f(self.raster.cell_center(i)))
            .sum()
    }

    /// Same distribution on the 4x refined raster (mass split equally).
    pub fn refined(&self) -> SpatialDistribution {
        let fine = self.raster.refined();
        let mut mass = vec![0.0; fine.n_cells()];
        for iy in 0..self.raster.ny {
            for ix in 0..self.raster.nx {
                let quarter = self.mass[iy * self.raster.nx + ix] / 4.0;
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    mass[(2 * iy + dy) * fine.nx + (2 * ix + dx)] = quarter;
                }
            }
        }
        SpatialDistribution { raster: fine, mass }
    }
}

/// Which station covers each raster cell under one ABS state.
#[derive(Debug, Clone)]
pub struct CoverageMap {
    state: AbsState,
    owner: Vec<Option<u8>>,
}

impl CoverageMap {
    pub fn state(&self) -> AbsState {
        self.state
    }

    pub fn owner_of(&self, cell: usize) -> Option<usize> {
        self.owner[cell].map(usize::from)
    }

    /// Probability that a group with distribution `dist` falls in each
    /// station's coverage region.
    pub fn region_masses(&self, dist: &SpatialDistribution, n_stations: usize) -> Vec<f64> {
        let mut p = vec![0.0; n_stations];
        for (cell, m) in dist.masses().iter().enumerate() {
            if let Some(b) = self.owner[cell] {
                p[usize::from(b)] += m;
            }
        }
        p
    }
}

/// A group described by its stationary spatial distribution and size.
#[derive(Debug, Clone)]
pub struct GroupModel {
    pub dist: SpatialDistribution,
    pub size: usize,
}

/// Quadrature engine: precomputed mean received powers on a raster over a
/// network environment.
pub struct AsymptoticModel<'e> {
    env: &'e NetworkEnv,
    raster: Raster,
    /// Mean rx power, cell-major: `rx[cell * n_stations + b]`.
    rx: Vec<f64>,
    /// Finite MCS interval lower bounds and their bits/symbol.
    thresholds: Vec<f64>,
    bits: Vec<f64>,
}

impl<'e> AsymptoticModel<'e> {
    pub fn new(env: &'e NetworkEnv, raster: Raster) -> AsymptoticModel<'e> {
        let spacing = env.deployment().min_spacing_m();
        let cell = raster.cell_w_m.max(raster.cell_h_m);
        if cell > spacing {
            log::warn!(
                "raster cell {cell:.1} m is coarser than the minimum station spacing {spacing:.1} m; \
                 coverage regions will be poorly resolved"
            );
        }
        let n_b = env.n_stations();
        let mut rx = Vec::with_capacity(raster.n_cells() * n_b);
        for cell in 0..raster.n_cells() {
            let p = raster.cell_center(cell);
            for b in 0..n_b {
                rx.push(env.mean_rx_power_w(b, p));
            }
        }
        let thresholds: Vec<f64> = env.mcs().entries().iter().map(|e| e.t_min).collect();
        let bits: Vec<f64> = env.mcs().entries().iter().map(|e| e.bits_per_symbol).collect();
        AsymptoticModel {
            env,
            raster,
            rx,
            thresholds,
            bits,
        }
    }

    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    pub fn env(&self) -> &NetworkEnv {
        self.env
    }

    /// Model on the 4x refined raster (convergence diagnostics).
    pub fn refined(&self) -> AsymptoticModel<'e> {
        AsymptoticModel::new(self.env, self.raster.refined())
    }

    /// Coverage of every raster cell under `state` (strongest active
    /// station at the cell center, ties toward the lowest id).
    pub fn coverage(&self, state: AbsState) -> CoverageMap {
        let owner = (0..self.raster.n_cells())
            .map(|cell| {
                self.env
                    .strongest_active(self.raster.cell_center(cell), state)
                    .map(|b| b as u8)
            })
            .collect();
        CoverageMap { state, owner }
    }

    fn check_dist(&self, dist: &SpatialDistribution) -> Result<()> {
        if !dist.raster().compatible(&self.raster) {
            return Err(Error::domain(
                "spatial distribution raster does not match the model raster",
            ));
        }
        Ok(())
    }

    /// Centroid-mode efficiency at one cell for each requested group size,
    /// appended to `out` (one value per size).
    fn cell_efficiencies(&self, cell: usize, owner: usize, state: AbsState, sizes: &[u32], out: &mut [f64]) {
        let rx = &self.rx[cell * self.env.n_stations()..(cell + 1) * self.env.n_stations()];
        let rx_s = rx[owner];
        let noise = self.env.noise_w();
        // F(t) at each finite MCS boundary, then 1 at +inf.
        let mut cdfs = [0.0f64; 64];
        let k = self.thresholds.len();
        assert!(k < 64, "MCS tables with more than 63 intervals are not supported");
        for (i, t) in self.thresholds.iter().enumerate() {
            let mut tail = (1.0 + 2.0 * noise * t / rx_s).powf(-0.5);
            for b in state.active_stations(self.env.n_stations()) {
                if b != owner {
                    tail *= 1.0 / (1.0 + t * rx[b] / rx_s);
                }
            }
            cdfs[i] = 1.0 - tail;
        }
        cdfs[k] = 1.0;
        for (si, size) in sizes.iter().enumerate() {
            let mut eff = 0.0;
            let mut prev = cdfs[0].powi(*size as i32);
            for i in 0..k {
                let next = cdfs[i + 1].powi(*size as i32);
                eff += self.bits[i] * (next - prev);
                prev = next;
            }
            out[si] = eff;
        }
    }

    /// Expected per-state transmission efficiency of a group of `size`
    /// whose position follows `dist` (quadrature of the centroid-mode
    /// efficiency over the raster).
    pub fn expected_state_efficiency(
        &self,
        dist: &SpatialDistribution,
        size: usize,
        state: AbsState,
    ) -> Result<f64> {
        self.check_dist(dist)?;
        if size == 0 {
            return Err(Error::domain("group size must be >= 1"));
        }
        let cov = self.coverage(state);
        let sizes = [size as u32];
        let mut eff = [0.0f64];
        let mut acc = 0.0;
        for (cell, m) in dist.masses().iter().enumerate() {
            if *m <= 0.0 {
                continue;
            }
            if let Some(b) = cov.owner_of(cell) {
                self.cell_efficiencies(cell, b, state, &sizes, &mut eff);
                acc += m * eff[0];
            }
        }
        Ok(acc)
    }

    /// Expected efficiency under a distribution over states:
    /// `sum_s P_s * E[efficiency | s]`. Linear in `probs`.
    pub fn asymptotic_efficiency(
        &self,
        dist: &SpatialDistribution,
        size: usize,
        states: &[AbsState],
        probs: &[f64],
    ) -> Result<f64> {
        if states.len() != probs.len() {
            return Err(Error::domain(format!(
                "{} states but {} probabilities",
                states.len(),
                probs.len()
            )));
        }
        check_simplex(probs)?;
        let mut acc = 0.0;
        for (s, p) in states.iter().zip(probs) {
            if *p > 0.0 {
                acc += p * self.expected_state_efficiency(dist, size, *s)?;
            }
        }
        Ok(acc)
    }

    /// Placement probability of `dist` over each station's coverage region
    /// under the all-active state (the region split used for expected
    /// scheduler shares).
    pub fn placement_probabilities(&self, dist: &SpatialDistribution) -> Result<Vec<f64>> {
        self.check_dist(dist)?;
        let cov = self.coverage(self.env.all_active());
        Ok(cov.region_masses(dist, self.env.n_stations()))
    }

    /// Expected scheduler share of every group at every station:
    /// `shares[c][b] = E[D_c | group c at station b]` (symbols/s).
    ///
    /// Placement probabilities come from the all-active coverage regions;
    /// blanking is accounted for in the throughput integral, not here.
    pub fn expected_shares(&self, groups: &[GroupModel], mode: ShareMode) -> Result<Vec<Vec<f64>>> {
        let n_b = self.env.n_stations();
        let placement: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| {
                self.check_dist(&g.dist)?;
                self.placement_probabilities(&g.dist)
            })
            .collect::<Result<_>>()?;
        let sizes: Vec<usize> = groups.iter().map(|g| g.size).collect();
        let mut shares = vec![vec![0.0; n_b]; groups.len()];
        let mut p_at_b = vec![0.0; groups.len()];
        for b in 0..n_b {
            for (i, p) in placement.iter().enumerate() {
                p_at_b[i] = p[b];
            }
            for c in 0..groups.len() {
                shares[c][b] =
                    expected_share(c, &p_at_b, &sizes, self.env.k_sym(), mode.for_pair(c, b))?.value;
            }
        }
        Ok(shares)
    }

    /// Expected throughput of every group in one state, given precomputed
    /// expected shares (bits/s):
    /// `E[Gamma_c^s] = sum_{b active in s} E[D_c|b] * integral of density x
    /// efficiency over b's all-active coverage region`.
    ///
    /// Ownership is the all-active association — the same split that defines
    /// the placement probabilities inside the shares — so a blanked
    /// station's region is silent for the state instead of being re-served
    /// by neighbours. That keeps shares and regions consistent: mixing
    /// per-state regions with all-active competition would credit
    /// heavily-blanked states with far more service than any scheduler can
    /// deliver. The efficiency integrand does depend on the state: fewer
    /// active stations means less interference inside the regions that
    /// remain.
    pub fn expected_state_throughput_batch(
        &self,
        groups: &[GroupModel],
        state: AbsState,
        shares: &[Vec<f64>],
    ) -> Result<Vec<f64>> {
        if shares.len() != groups.len() {
            return Err(Error::domain("share table does not match the group list"));
        }
        for g in groups {
            self.check_dist(&g.dist)?;
            if g.size == 0 {
                return Err(Error::domain("group size must be >= 1"));
            }
        }
        // Distinct sizes share the per-cell efficiency evaluation.
        let mut distinct: Vec<u32> = groups.iter().map(|g| g.size as u32).collect();
        distinct.sort_unstable();
        distinct.dedup();
        let size_slot: Vec<usize> = groups
            .iter()
            .map(|g| distinct.binary_search(&(g.size as u32)).unwrap())
            .collect();
        let cov = self.coverage(self.env.all_active());
        let mut eff = vec![0.0f64; distinct.len()];
        let mut acc = vec![0.0f64; groups.len()];
        for cell in 0..self.raster.n_cells() {
            let Some(b) = cov.owner_of(cell) else { continue };
            if !state.is_active(b) {
                continue;
            }
            let mut computed = false;
            for (c, g) in groups.iter().enumerate() {
                let m = g.dist.masses()[cell];
                if m <= 0.0 {
                    continue;
                }
                if !computed {
                    self.cell_efficiencies(cell, b, state, &distinct, &mut eff);
                    computed = true;
                }
                acc[c] += m * eff[size_slot[c]] * shares[c][b];
            }
        }
        Ok(acc)
    }

    /// Expected throughput of one group in one state (bits/s); convenience
    /// wrapper over [`Self::expected_shares`] +
    /// [`Self::expected_state_throughput_batch`].
    pub fn expected_state_throughput(
        &self,
        group: usize,
        groups: &[GroupModel],
        state: AbsState,
        mode: ShareMode,
    ) -> Result<f64> {
        if group >= groups.len() {
            return Err(Error::domain(format!("group index {group} out of range")));
        }
        let shares = self.expected_shares(groups, mode)?;
        Ok(self.expected_state_throughput_batch(groups, state, &shares)?[group])
    }
}

/// How expected shares are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShareMode {
    /// Exact power-set enumeration; limited to [`EXACT_SHARE_LIMIT`] groups.
    Exact,
    /// Monte-Carlo placement sampling with the given trial count; the seed
    /// is mixed per (group, station) so estimates are deterministic.
    MonteCarlo { trials: usize, seed: u64 },
}

impl ShareMode {
    fn for_pair(self, group: usize, station: usize) -> ShareMode {
        match self {
            ShareMode::Exact => self,
            ShareMode::MonteCarlo { trials, seed } => ShareMode::MonteCarlo {
                trials,
                seed: crate::seeding::sub_seed(seed, &format!("share/{group}/{station}")),
            },
        }
    }
}

/// An expected-share value with its sampling error (0 for exact modes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Expected scheduler share of `group` at a station where it is placed,
/// over random placements of all other groups:
///
/// each other group `i` independently lands in the same region with
/// probability `placement_p[i]`; the share is `k_sym * U_c / (U_c + sum of
/// present members)` averaged over all subsets.
pub fn expected_share(
    group: usize,
    placement_p: &[f64],
    sizes: &[usize],
    k_sym: f64,
    mode: ShareMode,
) -> Result<ShareEstimate> {
    if sizes.len() != placement_p.len() {
        return Err(Error::domain("placement probabilities and sizes differ in length"));
    }
    if group >= sizes.len() {
        return Err(Error::domain(format!("group index {group} out of range")));
    }
    for (i, p) in placement_p.iter().enumerate() {
        // quadrature masses may overshoot 1 by accumulated rounding
        if !(0.0..=1.0 + SIMPLEX_TOL).contains(p) {
            return Err(Error::domain(format!("placement probability {i} out of [0,1]: {p}")));
        }
        if sizes[i] == 0 {
            return Err(Error::domain(format!("group {i} has size 0")));
        }
    }
    if !(k_sym > 0.0) {
        return Err(Error::domain(format!("symbol rate must be positive, got {k_sym}")));
    }
    let u_c = sizes[group] as f64;
    // Competitors with probability 0 never contribute and those with
    // probability 1 always do; only the genuinely random ones need
    // enumeration or sampling.
    let mut base_load = u_c;
    let mut uncertain: Vec<(f64, f64)> = Vec::new();
    for i in (0..sizes.len()).filter(|i| *i != group) {
        if placement_p[i] >= 1.0 {
            base_load += sizes[i] as f64;
        } else if placement_p[i] > 0.0 {
            uncertain.push((placement_p[i], sizes[i] as f64));
        }
    }
    match mode {
        ShareMode::Exact => {
            if uncertain.len() >= EXACT_SHARE_LIMIT {
                return Err(Error::resource(format!(
                    "exact expected share limited to {EXACT_SHARE_LIMIT} randomly placed competitors, \
                     got {}; use Monte-Carlo",
                    uncertain.len()
                )));
            }
            let m = uncertain.len();
            let mut acc = 0.0;
            for subset in 0u64..(1u64 << m) {
                let mut prob = 1.0;
                let mut load = base_load;
                for (j, (p, u)) in uncertain.iter().enumerate() {
                    if subset & (1 << j) != 0 {
                        prob *= p;
                        load += u;
                    } else {
                        prob *= 1.0 - p;
                    }
                }
                acc += prob * u_c / load;
            }
            Ok(ShareEstimate {
                value: k_sym * acc,
                std_error: 0.0,
            })
        }
        ShareMode::MonteCarlo { trials, seed } => {
            if trials == 0 {
                return Err(Error::domain("Monte-Carlo share estimation needs trials > 0"));
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..trials {
                let mut load = base_load;
                for (p, u) in &uncertain {
                    if rng.random::<f64>() < *p {
                        load += u;
                    }
                }
                let x = u_c / load;
                sum += x;
                sum_sq += x * x;
            }
            let n = trials as f64;
            let mean = sum / n;
            let var = ((sum_sq - sum * sum / n) / (n - 1.0).max(1.0)).max(0.0);
            Ok(ShareEstimate {
                value: k_sym * mean,
                std_error: k_sym * (var / n).sqrt(),
            })
        }
    }
}

/// Closed-form expected share when all `n_groups` groups are statistically
/// identical (equal sizes, equal placement probability `p`):
/// `sum_k C(n-1, k) k_sym/(k+1) p^k (1-p)^(n-1-k)`.
pub fn expected_share_homogeneous(n_groups: usize, p: f64, k_sym: f64) -> Result<f64> {
    if n_groups == 0 {
        return Err(Error::domain("need at least one group"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("placement probability out of [0,1]: {p}")));
    }
    if !(k_sym > 0.0) {
        return Err(Error::domain(format!("symbol rate must be positive, got {k_sym}")));
    }
    let m = n_groups - 1;
    let mut acc = 0.0;
    let mut binom = 1.0; // C(m, k), updated multiplicatively
    for k in 0..=m {
        acc += binom / (k as f64 + 1.0) * p.powi(k as i32) * (1.0 - p).powi((m - k) as i32);
        if k < m {
            binom *= (m - k) as f64 / (k as f64 + 1.0);
        }
    }
    Ok(k_sym * acc)
}

pub(crate) fn check_simplex(p: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for (i, v) in p.iter().enumerate() {
        if !(*v >= -SIMPLEX_TOL) || !v.is_finite() {
            return Err(Error::domain(format!("probability {i} must be in [0,1], got {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::domain(format!("probabilities sum to {sum}, expected 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbm_to_watts;
    use crate::deploy::{BaseStation, Deployment};
    use crate::mcs::McsTable;
    use crate::radio::PathlossModel;
    use crate::states::{self, EfficiencyMode, GroupPlacement, Snapshot};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};

    fn hex7_env() -> NetworkEnv {
        let center = Point::new(75.0, 75.0);
        let mut stations = vec![BaseStation {
            id: 0,
            position: center,
            tx_power_w: 0.25,
        }];
        for k in 0..6 {
            let a = k as f64 * std::f64::consts::FRAC_PI_3;
            stations.push(BaseStation {
                id: k + 1,
                position: Point::new(center.x_m + 50.0 * a.cos(), center.y_m + 50.0 * a.sin()),
                tx_power_w: 0.25,
            });
        }
        NetworkEnv::new(
            Deployment::new(stations).unwrap(),
            PathlossModel::default(),
            dbm_to_watts(-101.0),
            McsTable::default_table().clone(),
            crate::DEFAULT_SYMBOL_RATE,
        )
        .unwrap()
    }

    fn world_150() -> Rect {
        Rect::from_size(150.0, 150.0).unwrap()
    }

    /// Exact distribution-of-load oracle for expected shares: dynamic
    /// programming over the sum of independently placed group sizes.
    fn dp_share_oracle(group: usize, p: &[f64], sizes: &[usize], k_sym: f64) -> f64 {
        let mut load_pmf = vec![1.0f64];
        for i in 0..sizes.len() {
            if i == group {
                continue;
            }
            let u = sizes[i];
            let mut next = vec![0.0; load_pmf.len() + u];
            for (s, q) in load_pmf.iter().enumerate() {
                next[s] += q * (1.0 - p[i]);
                next[s + u] += q * p[i];
            }
            load_pmf = next;
        }
        let u_c = sizes[group] as f64;
        k_sym
            * load_pmf
                .iter()
                .enumerate()
                .map(|(s, q)| q * u_c / (u_c + s as f64))
                .sum::<f64>()
    }

    #[test]
    fn point_mass_reduces_to_snapshot_efficiency() {
        let env = hex7_env();
        let raster = Raster::new(world_150(), 2.0).unwrap();
        let model = AsymptoticModel::new(&env, raster);
        // Place the point exactly at a cell center so the snap is lossless.
        let at = raster.cell_center(raster.cell_index(Point::new(40.0, 90.0)));
        let dist = SpatialDistribution::point(raster, at);
        let state = AbsState::all_active(7).unwrap();
        let expected = states::state_efficiency(
            0,
            &Snapshot::new(vec![GroupPlacement::at(at, 4).unwrap()], 0.0),
            state,
            &env,
            EfficiencyMode::Centroid,
        );
        let quad = model.expected_state_efficiency(&dist, 4, state).unwrap();
        assert_relative_eq!(quad, expected, max_relative = 1e-12);
    }

    #[test]
    fn uniform_quadrature_matches_mobility_time_average() {
        // Independent route: time-average the per-position efficiency along
        // a long random-waypoint trajectory (uniform waypoints, uniform
        // speed 1-10 m/s) and compare with the uniform-density quadrature.
        let env = hex7_env();
        let world = world_150();
        let raster = Raster::new(world, 2.0).unwrap();
        let model = AsymptoticModel::new(&env, raster);
        let state = AbsState::all_active(7).unwrap();
        let quad = model
            .expected_state_efficiency(&SpatialDistribution::uniform(raster), 5, state)
            .unwrap();

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_2001);
        let mut pos = Point::new(
            rng.random_range(0.0..world.width_m()),
            rng.random_range(0.0..world.height_m()),
        );
        let mut waypoint = pos;
        let mut speed = 0.0;
        let dt = 0.01;
        let mut acc = 0.0;
        let steps = 50_000; // 500 s at 10 ms sampling
        for _ in 0..steps {
            let mut remaining = speed * dt;
            while remaining > 0.0 {
                let d = pos.dist(waypoint);
                if d <= remaining {
                    pos = waypoint;
                    remaining -= d;
                    waypoint = Point::new(
                        rng.random_range(0.0..world.width_m()),
                        rng.random_range(0.0..world.height_m()),
                    );
                    speed = rng.random_range(1.0..10.0);
                    if speed * dt <= 0.0 {
                        break;
                    }
                } else {
                    let f = remaining / d;
                    pos = Point::new(pos.x_m + f * (waypoint.x_m - pos.x_m), pos.y_m + f * (waypoint.y_m - pos.y_m));
                    remaining = 0.0;
                }
            }
            if speed == 0.0 {
                // initialize first leg
                waypoint = Point::new(
                    rng.random_range(0.0..world.width_m()),
                    rng.random_range(0.0..world.height_m()),
                );
                speed = rng.random_range(1.0..10.0);
            }
            let snap = Snapshot::new(vec![GroupPlacement::at(pos, 5).unwrap()], 0.0);
            acc += states::state_efficiency(0, &snap, state, &env, EfficiencyMode::Centroid);
        }
        let time_avg = acc / steps as f64;
        let rel = (time_avg - quad).abs() / quad;
        assert!(
            rel < 0.05,
            "uniform quadrature {quad} vs mobility time-average {time_avg} (rel {rel:.4})"
        );
    }

    #[test]
    fn quadrature_converges_under_refinement() {
        let env = hex7_env();
        let raster = Raster::new(world_150(), 2.0).unwrap();
        let model = AsymptoticModel::new(&env, raster);
        let dist = SpatialDistribution::uniform(raster);
        let state = AbsState::from_mask(0b1010111, 7).unwrap();
        let coarse = model.expected_state_efficiency(&dist, 3, state).unwrap();
        let fine = model
            .refined()
            .expected_state_efficiency(&dist.refined(), 3, state)
            .unwrap();
        assert!(
            (coarse - fine).abs() / fine < 0.01,
            "2 m raster not converged: {coarse} vs {fine}"
        );
    }

    #[test]
    fn single_competitor_half_probability_share() {
        // One other group, same size, p = 0.5: E[D] = (0.5*1 + 0.5*0.5) K.
        let est = expected_share(0, &[0.0, 0.5], &[3, 3], 16.8e6, ShareMode::Exact).unwrap();
        assert_relative_eq!(est.value, 0.75 * 16.8e6, max_relative = 1e-12);
        // Monte-Carlo route agrees within 3 standard errors.
        let mc = expected_share(
            0,
            &[0.0, 0.5],
            &[3, 3],
            16.8e6,
            ShareMode::MonteCarlo {
                trials: 200_000,
                seed: 0x5eed_2002,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(mc.value, est.value, epsilon = 3.0 * mc.std_error);
    }

    #[test]
    fn exact_share_matches_dp_oracle() {
        let p = [0.3, 0.7, 0.1, 0.9, 0.45, 0.2, 0.55, 0.8, 0.05, 0.65, 0.35, 0.5];
        let sizes = [2usize, 1, 5, 3, 4, 1, 2, 5, 3, 1, 4, 2];
        for group in [0usize, 5, 11] {
            let exact = expected_share(group, &p, &sizes, 1.0, ShareMode::Exact).unwrap();
            let oracle = dp_share_oracle(group, &p, &sizes, 1.0);
            assert_relative_eq!(exact.value, oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn monte_carlo_share_within_three_sigma_of_dp_oracle() {
        // 30 groups: beyond the exact power-set limit.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_2003);
        let p: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
        let sizes: Vec<usize> = (0..30).map(|_| rng.random_range(1..=5)).collect();
        assert!(matches!(
            expected_share(0, &p, &sizes, 1.0, ShareMode::Exact),
            Err(Error::Resource(_))
        ));
        let mc = expected_share(
            0,
            &p,
            &sizes,
            1.0,
            ShareMode::MonteCarlo {
                trials: 400_000,
                seed: 0x5eed_2004,
            },
        )
        .unwrap();
        let oracle = dp_share_oracle(0, &p, &sizes, 1.0);
        assert!(mc.std_error > 0.0);
        assert_abs_diff_eq!(mc.value, oracle, epsilon = 3.0 * mc.std_error);
    }

    #[test]
    fn homogeneous_closed_form_matches_exact_enumeration() {
        for n in 2..=10usize {
            for p in [0.1, 0.3, 0.5, 0.9] {
                let probs = vec![p; n];
                let sizes = vec![3usize; n];
                let exact = expected_share(0, &probs, &sizes, 16.8e6, ShareMode::Exact).unwrap();
                let closed = expected_share_homogeneous(n, p, 16.8e6).unwrap();
                assert_relative_eq!(closed, exact.value, max_relative = 1e-12);
                // algebraic identity: E[1/(1+Bin(n-1,p))] = (1-(1-p)^n)/(n p)
                let identity = 16.8e6 * (1.0 - (1.0 - p).powi(n as i32)) / (n as f64 * p);
                assert_relative_eq!(closed, identity, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn share_is_symmetric_and_monotone_in_competition() {
        let p = [0.0, 0.4, 0.6];
        let sizes = [2usize, 3, 4];
        let base = expected_share(0, &p, &sizes, 1.0, ShareMode::Exact).unwrap().value;
        // relabeling the two competitors leaves the share unchanged
        let swapped = expected_share(0, &[0.0, 0.6, 0.4], &[2, 4, 3], 1.0, ShareMode::Exact)
            .unwrap()
            .value;
        assert_relative_eq!(base, swapped, max_relative = 1e-12);
        // raising any competitor's placement probability lowers the share
        let heavier = expected_share(0, &[0.0, 0.7, 0.6], &sizes, 1.0, ShareMode::Exact)
            .unwrap()
            .value;
        assert!(heavier < base);
        // no competition at all: the full symbol rate
        let alone = expected_share(0, &[0.3, 0.0, 0.0], &sizes, 1.0, ShareMode::Exact)
            .unwrap()
            .value;
        assert_relative_eq!(alone, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn expected_throughput_matches_resampling_oracle() {
        // Three stations, four groups on concentrated distributions. Groups
        // sit near stations 0/1 so blanking station 2 does not reassign any
        // occupied cell, keeping the share model exact in both states.
        let stations = vec![
            BaseStation {
                id: 0,
                position: Point::new(30.0, 50.0),
                tx_power_w: 0.25,
            },
            BaseStation {
                id: 1,
                position: Point::new(120.0, 50.0),
                tx_power_w: 0.25,
            },
            BaseStation {
                id: 2,
                position: Point::new(75.0, 130.0),
                tx_power_w: 0.25,
            },
        ];
        let env = NetworkEnv::new(
            Deployment::new(stations).unwrap(),
            PathlossModel::default(),
            dbm_to_watts(-101.0),
            McsTable::default_table().clone(),
            crate::DEFAULT_SYMBOL_RATE,
        )
        .unwrap();
        let world = Rect::from_size(150.0, 150.0).unwrap();
        let raster = Raster::new(world, 2.0).unwrap();
        let model = AsymptoticModel::new(&env, raster);

        // concentrated rectangular patches of support
        let patch = |x0: f64, y0: f64, x1: f64, y1: f64| {
            let mass: Vec<f64> = (0..raster.n_cells())
                .map(|i| {
                    let c = raster.cell_center(i);
                    if c.x_m >= x0 && c.x_m <= x1 && c.y_m >= y0 && c.y_m <= y1 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            SpatialDistribution::from_masses(raster, mass).unwrap()
        };
        let groups = vec![
            GroupModel {
                dist: patch(10.0, 30.0, 50.0, 70.0),
                size: 1,
            },
            GroupModel {
                dist: patch(20.0, 40.0, 60.0, 60.0),
                size: 4,
            },
            GroupModel {
                dist: patch(100.0, 30.0, 140.0, 70.0),
                size: 2,
            },
            GroupModel {
                dist: patch(95.0, 45.0, 130.0, 65.0),
                size: 5,
            },
        ];
        let shares = model.expected_shares(&groups, ShareMode::Exact).unwrap();

        for state in [
            AbsState::all_active(3).unwrap(),
            AbsState::all_active(3).unwrap().with_blanked(2),
        ] {
            let predicted = model
                .expected_state_throughput_batch(&groups, state, &shares)
                .unwrap();

            // Resampling oracle: draw placements from each distribution,
            // evaluate the snapshot throughput, average.
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_2005 + state.id() as u64);
            let n = 10_000;
            let mut sum = vec![0.0; groups.len()];
            let mut sum_sq = vec![0.0; groups.len()];
            let cum: Vec<Vec<f64>> = groups
                .iter()
                .map(|g| {
                    let mut acc = 0.0;
                    g.dist
                        .masses()
                        .iter()
                        .map(|m| {
                            acc += m;
                            acc
                        })
                        .collect()
                })
                .collect();
            for _ in 0..n {
                let placements: Vec<GroupPlacement> = groups
                    .iter()
                    .enumerate()
                    .map(|(c, g)| {
                        let u = rng.random::<f64>();
                        let cell = cum[c].partition_point(|x| *x < u).min(raster.n_cells() - 1);
                        GroupPlacement::at(raster.cell_center(cell), g.size).unwrap()
                    })
                    .collect();
                let snap = Snapshot::new(placements, 0.0);
                let t = states::instantaneous_throughput(&snap, state, &env, EfficiencyMode::Centroid);
                for c in 0..groups.len() {
                    sum[c] += t.per_group_bps[c];
                    sum_sq[c] += t.per_group_bps[c] * t.per_group_bps[c];
                }
            }
            for c in 0..groups.len() {
                let mean = sum[c] / n as f64;
                let var = ((sum_sq[c] - sum[c] * sum[c] / n as f64) / (n as f64 - 1.0)).max(0.0);
                let se = (var / n as f64).sqrt();
                assert!(
                    (predicted[c] - mean).abs() <= 3.0 * se,
                    "state {} group {c}: model {} vs resampled {mean} +/- {se}",
                    state.id(),
                    predicted[c]
                );
            }
        }
    }

    #[test]
    fn asymptotic_efficiency_is_linear_in_probabilities() {
        let env = hex7_env();
        let raster = Raster::new(world_150(), 5.0).unwrap();
        let model = AsymptoticModel::new(&env, raster);
        let dist = SpatialDistribution::uniform(raster);
        let states_v: Vec<AbsState> = [0b1111111u32, 0b0111110, 0b1010101]
            .iter()
            .map(|m| AbsState::from_mask(*m, 7).unwrap())
            .collect();
        let p1 = [0.6, 0.3, 0.1];
        let p2 = [0.1, 0.2, 0.7];
        let alpha = 0.37;
        let mix: Vec<f64> = p1
            .iter()
            .zip(&p2)
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        let f1 = model.asymptotic_efficiency(&dist, 3, &states_v, &p1).unwrap();
        let f2 = model.asymptotic_efficiency(&dist, 3, &states_v, &p2).unwrap();
        let fm = model.asymptotic_efficiency(&dist, 3, &states_v, &mix).unwrap();
        let expect = alpha * f1 + (1.0 - alpha) * f2;
        assert!(
            (fm - expect).abs() <= 1e-12 * expect.abs().max(1.0),
            "linearity violated: {fm} vs {expect}"
        );
        // off-simplex probabilities are rejected
        assert!(model
            .asymptotic_efficiency(&dist, 3, &states_v, &[0.5, 0.5, 0.5])
            .is_err());
    }

    #[test]
    fn region_masses_partition_under_any_active_state() {
        let env = hex7_env();
        let raster = Raster::new(world_150(), 3.0).unwrap();
        let model = AsymptoticModel::new(&env, raster);
        let dist = SpatialDistribution::uniform(raster);
        for mask in [0b1111111u32, 0b0000001, 0b1110000, 0b0101010] {
            let cov = model.coverage(AbsState::from_mask(mask, 7).unwrap());
            let masses = cov.region_masses(&dist, 7);
            let total: f64 = masses.iter().sum();
            assert_relative_eq!(total, 1.0, max_relative = 1e-9);
            for (b, m) in masses.iter().enumerate() {
                if mask & (1 << b) == 0 {
                    assert_eq!(*m, 0.0, "blanked station {b} owns mass");
                }
            }
        }
        // all blanked: nothing is covered
        let cov = model.coverage(AbsState::ALL_BLANKED);
        let masses = cov.region_masses(&dist, 7);
        assert_eq!(masses.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn raster_csv_round_trip_and_errors() {
        let text = "0,0,10,3,2\n0.1,0.2,0.3\n0.1,0.2,0.1\n";
        let d = SpatialDistribution::from_raster_csv(text, "<test>").unwrap();
        assert_eq!(d.raster().nx(), 3);
        assert_eq!(d.raster().ny(), 2);
        assert_relative_eq!(d.masses().iter().sum::<f64>(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(d.masses()[1], 0.2, max_relative = 1e-12);
        assert!(SpatialDistribution::from_raster_csv("0,0,10,3\n", "<t>").is_err());
        assert!(SpatialDistribution::from_raster_csv("0,0,10,3,1\n0.1,0.2\n", "<t>").is_err());
        assert!(SpatialDistribution::from_raster_csv("0,0,10,2,1\n0,0\n", "<t>").is_err());
    }

    #[test]
    fn incompatible_raster_is_rejected() {
        let env = hex7_env();
        let model = AsymptoticModel::new(&env, Raster::new(world_150(), 2.0).unwrap());
        let other = SpatialDistribution::uniform(Raster::new(world_150(), 3.0).unwrap());
        assert!(model
            .expected_state_efficiency(&other, 2, AbsState::all_active(7).unwrap())
            .is_err());
    }
}
