//! Link-level model: log-distance pathloss, the closed-form SINR
//! distribution of one downlink, and MCS-table transmission efficiency.
//!
//! The received signal power is exponentially distributed (Rayleigh fading)
//! around its pathloss mean, each interferer is independently exponential,
//! and the noise term is the square of a zero-mean Gaussian. For rates
//! `lambda_s` (signal), `lambda_j` (interferers) and noise variance `N`,
//! the SINR CDF has the closed form
//!
//! ```text
//! F(x) = 1 - (1 + 2 lambda_s N x)^(-1/2) * prod_j lambda_j / (lambda_j + x lambda_s)
//! ```
//!
//! All quantities are linear; decibels only exist at IO boundaries.

use crate::deploy::{BaseStation, Point};
use crate::error::{Error, Result};
use crate::mcs::McsTable;

/// Log-distance pathloss: `loss_db(d) = ref_loss_db + 10 * exponent *
/// log10(d / ref_distance_m)`, with `d` clamped below by `min_distance_m`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PathlossModel {
    #[serde(default = "default_ref_loss_db")]
    pub ref_loss_db: f64,
    #[serde(default = "default_ref_distance_m")]
    pub ref_distance_m: f64,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    #[serde(default = "default_min_distance_m")]
    pub min_distance_m: f64,
}

fn default_ref_loss_db() -> f64 {
    128.1
}
fn default_ref_distance_m() -> f64 {
    1000.0
}
fn default_exponent() -> f64 {
    3.76
}
fn default_min_distance_m() -> f64 {
    10.0
}

impl Default for PathlossModel {
    /// Macro-cell urban defaults: 128.1 dB at 1 km, exponent 3.76,
    /// receivers clamped to >= 10 m from the mast.
    fn default() -> Self {
        PathlossModel {
            ref_loss_db: default_ref_loss_db(),
            ref_distance_m: default_ref_distance_m(),
            exponent: default_exponent(),
            min_distance_m: default_min_distance_m(),
        }
    }
}

impl PathlossModel {
    pub fn validate(&self) -> Result<()> {
        if !self.ref_loss_db.is_finite()
            || !(self.ref_distance_m > 0.0)
            || !(self.exponent > 0.0)
            || !(self.min_distance_m > 0.0)
        {
            return Err(Error::domain(format!("invalid pathloss parameters {self:?}")));
        }
        Ok(())
    }

    pub fn loss_db(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(self.min_distance_m);
        self.ref_loss_db + 10.0 * self.exponent * (d / self.ref_distance_m).log10()
    }

    /// Linear power gain (including the clamp), always in `(0, +inf)`.
    pub fn gain(&self, distance_m: f64) -> f64 {
        crate::db_to_linear(-self.loss_db(distance_m))
    }
}

/// Mean received power at `at` from `station`, watts.
pub fn rx_power_w(station: &BaseStation, at: Point, pathloss: &PathlossModel) -> f64 {
    station.tx_power_w * pathloss.gain(station.position.dist(at))
}

/// Fading rates of one link: signal rate, interferer rates, noise variance.
///
/// Rates are reciprocals of mean received powers, so every rate must be
/// positive. `noise_var = 0` together with an empty interferer set is
/// rejected: the SINR would be almost surely infinite and the CDF above
/// degenerates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    lambda_s: f64,
    interferers: Vec<f64>,
    noise_var: f64,
}

impl LinkBudget {
    pub fn new(lambda_s: f64, interferers: Vec<f64>, noise_var: f64) -> Result<Self> {
        if !(lambda_s > 0.0) || !lambda_s.is_finite() {
            return Err(Error::domain(format!("signal rate must be positive, got {lambda_s}")));
        }
        for (j, l) in interferers.iter().enumerate() {
            if !(*l > 0.0) || !l.is_finite() {
                return Err(Error::domain(format!(
                    "interferer rate {j} must be positive, got {l}"
                )));
            }
        }
        if !(noise_var >= 0.0) || !noise_var.is_finite() {
            return Err(Error::domain(format!(
                "noise variance must be non-negative, got {noise_var}"
            )));
        }
        if noise_var == 0.0 && interferers.is_empty() {
            return Err(Error::domain(
                "degenerate link: no noise and no interferers (SINR is a.s. infinite)",
            ));
        }
        Ok(LinkBudget {
            lambda_s,
            interferers,
            noise_var,
        })
    }

    /// Budget from mean received powers (watts) instead of rates.
    pub fn from_mean_powers(signal_w: f64, interferer_w: &[f64], noise_var: f64) -> Result<Self> {
        if !(signal_w > 0.0) {
            return Err(Error::domain(format!("mean signal power must be positive, got {signal_w}")));
        }
        let interferers = interferer_w
            .iter()
            .map(|p| {
                if *p > 0.0 {
                    Ok(1.0 / p)
                } else {
                    Err(Error::domain(format!("mean interferer power must be positive, got {p}")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        LinkBudget::new(1.0 / signal_w, interferers, noise_var)
    }

    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }

    pub fn interferers(&self) -> &[f64] {
        &self.interferers
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// CDF value at `x >= 0` (unchecked fast path; `sinr_cdf` validates).
    pub(crate) fn cdf(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        if x == f64::INFINITY {
            return 1.0;
        }
        let mut tail = if self.noise_var > 0.0 {
            (1.0 + 2.0 * self.lambda_s * self.noise_var * x).powf(-0.5)
        } else {
            1.0
        };
        for lj in &self.interferers {
            tail *= lj / (lj + x * self.lambda_s);
        }
        1.0 - tail
    }
}

/// Closed-form SINR CDF `P(SINR <= x)` for one link.
pub fn sinr_cdf(x: f64, budget: &LinkBudget) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("SINR threshold must be >= 0, got {x}")));
    }
    Ok(budget.cdf(x))
}

/// CDF of the best (max) SINR across group members with per-member budgets:
/// the product of the member CDFs.
pub fn group_cdf_exact(x: f64, members: &[LinkBudget]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::domain("group must have at least one member"));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("SINR threshold must be >= 0, got {x}")));
    }
    Ok(members.iter().map(|b| b.cdf(x)).product())
}

/// Centroid approximation of the group-max CDF: all members share the
/// centroid budget, so the max CDF is `F(x)^group_size`.
pub fn group_cdf_centroid(x: f64, budget: &LinkBudget, group_size: usize) -> Result<f64> {
    if group_size == 0 {
        return Err(Error::domain("group size must be >= 1"));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("SINR threshold must be >= 0, got {x}")));
    }
    Ok(budget.cdf(x).powi(group_size as i32))
}

/// Expected bits per symbol delivered through `mcs` when the decision SINR
/// has distribution `cdf`: `sum_k bits_k * (F(t_{k+1}) - F(t_k))`.
///
/// `cdf` must be a CDF evaluatable on `[0, +inf]` (with `cdf(inf) = 1` for
/// proper distributions); mass below the first threshold contributes zero.
pub fn transmission_efficiency<F: Fn(f64) -> f64>(cdf: F, mcs: &McsTable) -> f64 {
    let mut eff = 0.0;
    let mut prev = None;
    for (entry, t) in mcs.entries().iter().zip(mcs.boundaries()) {
        debug_assert_eq!(entry.t_min, t);
        let f = cdf(t);
        if let Some((bits, f_lo)) = prev {
            let bits: f64 = bits;
            eff += bits * (f - f_lo);
        }
        prev = Some((entry.bits_per_symbol, f));
    }
    if let Some((bits, f_lo)) = prev {
        eff += bits * (cdf(f64::INFINITY) - f_lo);
    }
    eff
}

/// Group efficiency with per-member budgets (exact max-CDF).
pub fn group_efficiency_exact(members: &[LinkBudget], mcs: &McsTable) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::domain("group must have at least one member"));
    }
    Ok(transmission_efficiency(
        |x| members.iter().map(|b| b.cdf(x)).product(),
        mcs,
    ))
}

/// Group efficiency under the centroid approximation.
pub fn group_efficiency_centroid(budget: &LinkBudget, group_size: usize, mcs: &McsTable) -> Result<f64> {
    if group_size == 0 {
        return Err(Error::domain("group size must be >= 1"));
    }
    Ok(transmission_efficiency(
        |x| budget.cdf(x).powi(group_size as i32),
        mcs,
    ))
}

/// Link budget of a receiver at `point` served by `serving`, with every
/// other station in `active` acting as an exponential interferer.
///
/// `serving` must be a member of `active` (a blanked station cannot serve).
pub fn link_budget_at(
    point: Point,
    serving: &BaseStation,
    active: &[BaseStation],
    pathloss: &PathlossModel,
    noise_var: f64,
) -> Result<LinkBudget> {
    if !active.iter().any(|s| s.id == serving.id) {
        return Err(Error::domain(format!(
            "serving station {} is not in the active set",
            serving.id
        )));
    }
    let signal_w = rx_power_w(serving, point, pathloss);
    let interferer_w: Vec<f64> = active
        .iter()
        .filter(|s| s.id != serving.id)
        .map(|s| rx_power_w(s, point, pathloss))
        .collect();
    LinkBudget::from_mean_powers(signal_w, &interferer_w, noise_var)
}
