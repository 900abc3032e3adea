//! Proportional-fair selection of ABS state probabilities.
//!
//! Given a matrix of expected per-state group throughputs, pick the
//! probability with which each state should appear in the blanking pattern:
//!
//! - [`solve_asymptotic_pf`] maximizes the weighted log-throughput sum
//!   `sum_c w_c ln(sum_s P_s g_cs)` over the probability simplex,
//! - [`solve_dynamic_pf`] adds a per-group history offset inside the log so
//!   recently starved groups pull probability mass toward states that serve
//!   them,
//! - [`solve_max_throughput`] maximizes the plain weighted sum instead
//!   (a vertex of the simplex).
//!
//! The concave problems are solved by exponentiated-gradient (mirror)
//! ascent with backtracking line search — multiplicative updates keep the
//! iterate strictly inside the simplex, so no projection step is needed.
//! Solutions are realized as per-subframe blanking patterns by
//! [`build_pattern`] (i.i.d. state draws) or [`fixed_ratio_pattern`]
//! (per-station duty cycles).

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};

use crate::asymptotic::{check_simplex, AsymptoticModel, GroupModel, ShareMode};
use crate::error::{Error, Result};
use crate::states::{AbsState, EfficiencyMode, NetworkEnv, Snapshot};

/// Subframes in a standard blanking pattern.
pub const STANDARD_PATTERN_SUBFRAMES: usize = 80;

/// Relative tolerance for treating weighted column sums as tied in
/// [`solve_max_throughput`].
const TIE_REL_TOL: f64 = 1e-12;

/// Expected group throughput per ABS state: rows are groups, columns are
/// states, entries in bit/s, plus per-group fairness weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputMatrix {
    g: Vec<f64>,
    n_groups: usize,
    n_states: usize,
    weights: Vec<f64>,
}

impl ThroughputMatrix {
    pub fn new(rows: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<ThroughputMatrix> {
        let n_groups = rows.len();
        if n_groups == 0 {
            return Err(Error::domain("throughput matrix needs at least one group"));
        }
        let n_states = rows[0].len();
        if n_states == 0 {
            return Err(Error::domain("throughput matrix needs at least one state"));
        }
        if weights.len() != n_groups {
            return Err(Error::domain(format!(
                "{} weights for {n_groups} groups",
                weights.len()
            )));
        }
        for w in &weights {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::domain(format!("group weights must be positive, got {w}")));
            }
        }
        let mut g = Vec::with_capacity(n_groups * n_states);
        for (c, row) in rows.iter().enumerate() {
            if row.len() != n_states {
                return Err(Error::domain(format!(
                    "group {c} has {} entries, expected {n_states}",
                    row.len()
                )));
            }
            for v in row {
                if !(*v >= 0.0) || !v.is_finite() {
                    return Err(Error::domain(format!(
                        "throughput entries must be finite and non-negative, got {v}"
                    )));
                }
            }
            g.extend_from_slice(row);
        }
        Ok(ThroughputMatrix {
            g,
            n_groups,
            n_states,
            weights,
        })
    }

    /// Matrix of instantaneous throughputs for a fixed snapshot (static
    /// groups). Weights default to the group sizes.
    pub fn from_snapshot(
        snap: &Snapshot,
        states: &[AbsState],
        env: &NetworkEnv,
        mode: EfficiencyMode,
        weights: Option<Vec<f64>>,
    ) -> Result<ThroughputMatrix> {
        use rayon::prelude::*;
        if states.is_empty() {
            return Err(Error::domain("need at least one state"));
        }
        let columns: Vec<Vec<f64>> = states
            .par_iter()
            .map(|s| crate::states::instantaneous_throughput(snap, *s, env, mode).per_group_bps)
            .collect();
        let rows = (0..snap.n_groups())
            .map(|c| columns.iter().map(|col| col[c]).collect())
            .collect();
        let weights =
            weights.unwrap_or_else(|| snap.sizes().iter().map(|u| *u as f64).collect());
        ThroughputMatrix::new(rows, weights)
    }

    /// Matrix of expected throughputs for groups described by spatial
    /// distributions (mobile groups). Weights default to the group sizes.
    pub fn from_asymptotic(
        model: &AsymptoticModel,
        groups: &[GroupModel],
        states: &[AbsState],
        share_mode: ShareMode,
        weights: Option<Vec<f64>>,
    ) -> Result<ThroughputMatrix> {
        use rayon::prelude::*;
        if states.is_empty() {
            return Err(Error::domain("need at least one state"));
        }
        let shares = model.expected_shares(groups, share_mode)?;
        let columns: Vec<Vec<f64>> = states
            .par_iter()
            .map(|s| model.expected_state_throughput_batch(groups, *s, &shares))
            .collect::<Result<_>>()?;
        let rows = (0..groups.len())
            .map(|c| columns.iter().map(|col| col[c]).collect())
            .collect();
        let weights = weights.unwrap_or_else(|| groups.iter().map(|g| g.size as f64).collect());
        ThroughputMatrix::new(rows, weights)
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, group: usize, state: usize) -> f64 {
        self.g[group * self.n_states + state]
    }

    pub fn row(&self, group: usize) -> &[f64] {
        &self.g[group * self.n_states..(group + 1) * self.n_states]
    }

    /// `sum_c w_c g_cs` for one state column.
    pub fn weighted_column_sum(&self, state: usize) -> f64 {
        (0..self.n_groups)
            .map(|c| self.weights[c] * self.get(c, state))
            .sum()
    }

    /// Expected throughput of every group under state probabilities `p`.
    pub fn expected_group_throughput(&self, p: &[f64]) -> Vec<f64> {
        (0..self.n_groups)
            .map(|c| dot(self.row(c), p))
            .collect()
    }

    /// A group is feasible if some state gives it positive throughput.
    pub fn is_group_feasible(&self, group: usize) -> bool {
        self.row(group).iter().any(|v| *v > 0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A probability vector over ABS states (sums to 1 within 1e-9).
#[derive(Debug, Clone, PartialEq)]
pub struct StateProbabilities(Vec<f64>);

impl StateProbabilities {
    pub fn new(p: Vec<f64>) -> Result<StateProbabilities> {
        check_simplex(&p)?;
        Ok(StateProbabilities(p))
    }

    pub fn uniform(n: usize) -> StateProbabilities {
        StateProbabilities(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, s: usize) -> f64 {
        self.0[s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Render as `state_id,prob` CSV, one row per state.
    pub fn to_csv_string(&self, states: &[AbsState]) -> Result<String> {
        if states.len() != self.0.len() {
            return Err(Error::domain(format!(
                "{} states for {} probabilities",
                states.len(),
                self.0.len()
            )));
        }
        let mut out = String::from("state_id,prob\n");
        for (s, p) in states.iter().zip(&self.0) {
            // Exponent form round-trips exactly and keeps near-zero
            // probabilities from expanding into hundreds of digits.
            out.push_str(&format!("{},{:e}\n", s.id(), p));
        }
        Ok(out)
    }

    /// Parse `state_id,prob` CSV against a known state list; states absent
    /// from the file get probability 0.
    pub fn from_csv_str(text: &str, states: &[AbsState], origin: &str) -> Result<StateProbabilities> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("state_id,prob") => {}
            _ => return Err(Error::parse(origin, "expected header `state_id,prob`")),
        }
        let mut p = vec![0.0; states.len()];
        for line in lines {
            let (id_str, p_str) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(origin, format!("bad row `{line}`")))?;
            let id: u32 = id_str
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, format!("bad state id `{id_str}`")))?;
            let prob: f64 = p_str
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, format!("bad probability `{p_str}`")))?;
            let idx = states
                .iter()
                .position(|s| s.id() == id)
                .ok_or_else(|| Error::parse(origin, format!("unknown state id {id}")))?;
            p[idx] = prob;
        }
        StateProbabilities::new(p).map_err(|e| Error::parse(origin, e.to_string()))
    }
}

/// Ring buffer of past per-group interval throughputs with smoothing
/// coefficients.
///
/// `alphas[0]` scales the current interval; `alphas[k]` weights the
/// throughput measured `k` intervals ago. Coefficients must be
/// non-negative and non-increasing with age, so the window length is
/// `alphas.len() - 1`.
#[derive(Debug, Clone)]
pub struct History {
    alphas: Vec<f64>,
    past: VecDeque<Vec<f64>>,
}

impl History {
    pub fn new(alphas: Vec<f64>) -> Result<History> {
        if alphas.is_empty() {
            return Err(Error::domain("need at least the current-interval coefficient"));
        }
        for (k, a) in alphas.iter().enumerate() {
            if !(*a >= 0.0) || !a.is_finite() {
                return Err(Error::domain(format!(
                    "history coefficients must be non-negative, alpha[{k}] = {a}"
                )));
            }
        }
        if !(alphas[0] > 0.0) {
            return Err(Error::domain("the current-interval coefficient must be positive"));
        }
        if alphas.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::domain(
                "history coefficients must be non-increasing with age",
            ));
        }
        Ok(History {
            alphas,
            past: VecDeque::new(),
        })
    }

    /// Number of past intervals the window can hold.
    pub fn window(&self) -> usize {
        self.alphas.len() - 1
    }

    pub fn alpha0(&self) -> f64 {
        self.alphas[0]
    }

    pub fn len(&self) -> usize {
        self.past.len()
    }

    pub fn is_empty(&self) -> bool {
        self.past.is_empty()
    }

    /// Record the newest interval's per-group throughputs, dropping
    /// anything older than the window.
    pub fn push(&mut self, per_group_bps: Vec<f64>) {
        self.past.push_front(per_group_bps);
        while self.past.len() > self.window() {
            self.past.pop_back();
        }
    }

    /// Per-group offsets `h_c = sum_k alphas[k] * throughput k intervals
    /// ago` (only the intervals recorded so far contribute).
    pub fn offsets(&self, n_groups: usize) -> Result<Vec<f64>> {
        let mut h = vec![0.0; n_groups];
        for (age, t) in self.past.iter().enumerate() {
            if t.len() != n_groups {
                return Err(Error::domain(format!(
                    "history entry has {} groups, expected {n_groups}",
                    t.len()
                )));
            }
            let a = self.alphas[age + 1];
            for c in 0..n_groups {
                h[c] += a * t[c];
            }
        }
        Ok(h)
    }
}

/// Solver knobs; the defaults match the documented stopping rule
/// (KKT residual below 1e-6 or 10^4 iterations).
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub kkt_tol: f64,
    /// Fail on infeasible groups instead of excluding them with a warning.
    pub strict_infeasible: bool,
    /// Starting point (defaults to uniform).
    pub init: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 10_000,
            kkt_tol: 1e-6,
            strict_infeasible: false,
            init: None,
        }
    }
}

/// Result of a proportional-fairness solve.
#[derive(Debug, Clone)]
pub struct PfSolution {
    pub probabilities: StateProbabilities,
    /// Final objective `sum_c w_c ln(h_c + alpha0 * sum_s P_s g_cs)` over
    /// the retained groups.
    pub objective: f64,
    /// Scale-free KKT residual at the returned point.
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Groups dropped from the objective (no positive entry and no
    /// history).
    pub excluded_groups: Vec<usize>,
}

/// Maximize `sum_c w_c ln(sum_s P_s g_cs)` over state probabilities.
pub fn solve_asymptotic_pf(m: &ThroughputMatrix, opts: &SolveOptions) -> Result<PfSolution> {
    solve_pf_internal(m, &vec![0.0; m.n_groups()], 1.0, opts)
}

/// Maximize `sum_c w_c ln(h_c + alpha0 * sum_s P_s g_cs)` where `h_c`
/// aggregates the recorded history. With an empty history this is exactly
/// the asymptotic problem on `m_now`.
pub fn solve_dynamic_pf(
    m_now: &ThroughputMatrix,
    hist: &History,
    opts: &SolveOptions,
) -> Result<PfSolution> {
    let h = hist.offsets(m_now.n_groups())?;
    solve_pf_internal(m_now, &h, hist.alpha0(), opts)
}

/// Put all probability on the state(s) with the best weighted column sum;
/// exact ties split uniformly.
pub fn solve_max_throughput(m: &ThroughputMatrix) -> Result<StateProbabilities> {
    let sums: Vec<f64> = (0..m.n_states()).map(|s| m.weighted_column_sum(s)).collect();
    let best = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..m.n_states())
        .filter(|s| sums[*s] >= best - TIE_REL_TOL * best.abs())
        .collect();
    let mut p = vec![0.0; m.n_states()];
    for s in &tied {
        p[*s] = 1.0 / tied.len() as f64;
    }
    StateProbabilities::new(p)
}

fn solve_pf_internal(
    m: &ThroughputMatrix,
    h: &[f64],
    alpha0: f64,
    opts: &SolveOptions,
) -> Result<PfSolution> {
    if h.len() != m.n_groups() {
        return Err(Error::domain("history offsets do not match the group count"));
    }
    if !(alpha0 > 0.0) || !alpha0.is_finite() {
        return Err(Error::domain(format!(
            "current-interval coefficient must be positive, got {alpha0}"
        )));
    }
    for (c, v) in h.iter().enumerate() {
        if !(*v >= 0.0) || !v.is_finite() {
            return Err(Error::domain(format!(
                "history offset for group {c} must be non-negative, got {v}"
            )));
        }
    }

    // Partition groups: those whose row can move the objective, those that
    // only add a constant (zero row but positive history), and infeasible
    // ones (zero row, zero history — their log term is unbounded below).
    let mut active: Vec<usize> = Vec::new();
    let mut constant_term = 0.0;
    let mut excluded: Vec<usize> = Vec::new();
    for c in 0..m.n_groups() {
        if m.is_group_feasible(c) {
            active.push(c);
        } else if h[c] > 0.0 {
            constant_term += m.weights()[c] * h[c].ln();
        } else if opts.strict_infeasible {
            return Err(Error::Infeasible {
                group: c,
                reason: "no state gives this group positive throughput and it has no history"
                    .to_string(),
            });
        } else {
            log::warn!(
                "group {c} has no positive throughput in any state and no history; \
                 excluding it from the fairness objective"
            );
            excluded.push(c);
        }
    }
    if active.is_empty() && excluded.len() == m.n_groups() {
        return Err(Error::Infeasible {
            group: 0,
            reason: "every group has an all-zero throughput row".to_string(),
        });
    }

    let n = m.n_states();
    let objective = |p: &[f64]| -> f64 {
        let mut f = constant_term;
        for &c in &active {
            let x = h[c] + alpha0 * dot(m.row(c), p);
            if x <= 0.0 {
                return f64::NEG_INFINITY;
            }
            f += m.weights()[c] * x.ln();
        }
        f
    };
    // Weight mass behind the gradient, used to normalize the KKT residual.
    let w_total: f64 = active.iter().map(|&c| m.weights()[c]).sum();

    let mut p = match &opts.init {
        Some(v) => {
            if v.len() != n {
                return Err(Error::domain(format!(
                    "initial point has {} states, expected {n}",
                    v.len()
                )));
            }
            check_simplex(v)?;
            v.clone()
        }
        None => vec![1.0 / n as f64; n],
    };

    if n == 1 || active.is_empty() {
        // Nothing to optimize: a single state, or only constant terms.
        let p = vec![1.0 / n as f64; n];
        let f = objective(&p);
        return Ok(PfSolution {
            probabilities: StateProbabilities::new(p)?,
            objective: f,
            kkt_residual: 0.0,
            iterations: 0,
            excluded_groups: excluded,
        });
    }

    let mut grad = vec![0.0; n];
    let kkt = |p: &[f64], grad: &mut [f64]| -> f64 {
        grad.fill(0.0);
        for &c in &active {
            let row = m.row(c);
            let x = h[c] + alpha0 * dot(row, p);
            let scale = m.weights()[c] * alpha0 / x;
            for s in 0..n {
                grad[s] += scale * row[s];
            }
        }
        // At the optimum grad_s = mu wherever p_s > 0 and grad_s <= mu
        // elsewhere; measure the worst violation of both conditions.
        let mu: f64 = p.iter().zip(grad.iter()).map(|(a, b)| a * b).sum();
        let mut res: f64 = 0.0;
        for s in 0..n {
            let d = grad[s] - mu;
            res = res.max(d.max(0.0)).max(p[s] * d.abs());
        }
        res / w_total
    };

    let mut f = objective(&p);
    let mut eta = 0.0;
    let mut iterations = 0;
    let mut residual = kkt(&p, &mut grad);
    let mut next = vec![0.0; n];
    for it in 0..opts.max_iters {
        iterations = it;
        if residual <= opts.kkt_tol {
            break;
        }
        let grad_max = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if eta == 0.0 {
            eta = 1.0 / grad_max.max(f64::MIN_POSITIVE);
        }
        // Backtracking multiplicative update: shrink the step until the
        // objective stops decreasing (equality is fine — at a symmetric
        // stationary point the update is a no-op).
        let mut accepted = false;
        for _ in 0..80 {
            let mut z = 0.0;
            for s in 0..n {
                // subtract the max so the exponent never overflows
                let t = (eta * (grad[s] - grad_max)).max(-60.0);
                next[s] = (p[s] * t.exp()).max(1e-300);
                z += next[s];
            }
            for v in next.iter_mut() {
                *v /= z;
            }
            let f_next = objective(&next);
            if f_next >= f {
                std::mem::swap(&mut p, &mut next);
                f = f_next;
                accepted = true;
                eta *= 2.0;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            // Step size underflowed without finding ascent: numerically
            // stationary.
            break;
        }
        residual = kkt(&p, &mut grad);
    }

    let z: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= z;
    }
    let f = objective(&p);
    let residual = kkt(&p, &mut grad);
    Ok(PfSolution {
        probabilities: StateProbabilities::new(p)?,
        objective: f,
        kkt_residual: residual,
        iterations,
        excluded_groups: excluded,
    })
}

/// A blanking pattern: one ABS state per subframe, stored as activity
/// bitmasks.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsPattern {
    masks: Vec<u32>,
    n_stations: usize,
}

impl AbsPattern {
    pub fn new(masks: Vec<u32>, n_stations: usize) -> Result<AbsPattern> {
        if masks.is_empty() {
            return Err(Error::domain("a pattern needs at least one subframe"));
        }
        for m in &masks {
            AbsState::from_mask(*m, n_stations)?;
        }
        Ok(AbsPattern { masks, n_stations })
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    /// State for subframe `i`, tiling the pattern periodically.
    pub fn state_at(&self, i: usize) -> AbsState {
        AbsState::from_mask(self.masks[i % self.masks.len()], self.n_stations)
            .expect("masks validated at construction")
    }

    /// Subframes (within one period) during which `station` transmits.
    pub fn station_active_count(&self, station: usize) -> usize {
        self.masks.iter().filter(|m| *m & (1 << station) != 0).count()
    }

    /// Render one line per subframe of comma-separated per-station activity
    /// bits (1 = transmitting, 0 = blanked).
    pub fn to_activity_text(&self) -> String {
        let mut out = String::new();
        for mask in &self.masks {
            let state = AbsState::from_mask(*mask, self.n_stations).expect("validated");
            let bits: Vec<String> = state
                .activity_bits(self.n_stations)
                .iter()
                .map(|b| b.to_string())
                .collect();
            out.push_str(&bits.join(","));
            out.push('\n');
        }
        out
    }

    /// Parse the activity-bit text format.
    pub fn from_activity_text(text: &str, origin: &str) -> Result<AbsPattern> {
        let mut masks = Vec::new();
        let mut n_stations = 0usize;
        for (row, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bits: Vec<&str> = line.split(',').map(str::trim).collect();
            if row == 0 {
                n_stations = bits.len();
                if n_stations == 0 || n_stations > 32 {
                    return Err(Error::parse(origin, "station count must be 1..=32"));
                }
            } else if bits.len() != n_stations {
                return Err(Error::parse(
                    origin,
                    format!("line {row}: expected {n_stations} activity bits, got {}", bits.len()),
                ));
            }
            let mut mask = 0u32;
            for (b, bit) in bits.iter().enumerate() {
                match *bit {
                    "1" => mask |= 1 << b,
                    "0" => {}
                    other => {
                        return Err(Error::parse(
                            origin,
                            format!("line {row}: activity bit must be 0 or 1, got `{other}`"),
                        ))
                    }
                }
            }
            masks.push(mask);
        }
        AbsPattern::new(masks, n_stations)
    }
}

/// Draw a pattern of `length` subframes i.i.d. from the state
/// probabilities. Deterministic for a given seed.
pub fn build_pattern(
    p: &StateProbabilities,
    states: &[AbsState],
    n_stations: usize,
    length: usize,
    seed: u64,
) -> Result<AbsPattern> {
    if states.len() != p.len() {
        return Err(Error::domain(format!(
            "{} states for {} probabilities",
            states.len(),
            p.len()
        )));
    }
    if length == 0 {
        return Err(Error::domain("pattern length must be >= 1"));
    }
    for s in states {
        AbsState::from_mask(s.id(), n_stations)?;
    }
    let mut cum = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for s in 0..p.len() {
        acc += p.get(s);
        cum.push(acc);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let masks = (0..length)
        .map(|_| {
            let u: f64 = rng.random();
            let idx = cum.partition_point(|x| *x < u).min(states.len() - 1);
            states[idx].id()
        })
        .collect();
    AbsPattern::new(masks, n_stations)
}

/// Duty-cycle pattern: every station is active in exactly `used` of each
/// `total` consecutive subframes, at positions drawn uniformly and
/// independently per station, tiled to `length` subframes.
pub fn fixed_ratio_pattern(
    used: usize,
    total: usize,
    n_stations: usize,
    length: usize,
    seed: u64,
) -> Result<AbsPattern> {
    if used == 0 || used > total {
        return Err(Error::domain(format!(
            "subframe ratio must be in (0,1], got {used}/{total}"
        )));
    }
    if length == 0 {
        return Err(Error::domain("pattern length must be >= 1"));
    }
    if n_stations == 0 || n_stations > 32 {
        return Err(Error::domain(format!("station count must be 1..=32, got {n_stations}")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut period = vec![0u32; total];
    for b in 0..n_stations {
        // partial Fisher-Yates: a uniform `used`-subset of 0..total
        let mut positions: Vec<usize> = (0..total).collect();
        for i in 0..used {
            let j = rng.random_range(i..total);
            positions.swap(i, j);
        }
        for pos in &positions[..used] {
            period[*pos] |= 1 << b;
        }
    }
    let masks = (0..length).map(|i| period[i % total]).collect();
    AbsPattern::new(masks, n_stations)
}
