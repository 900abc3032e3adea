//! Fairness and confidence-interval statistics for simulation output.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Jain's fairness index `(sum x)^2 / (n * sum x^2)`: 1 for perfectly equal
/// allocations, `1/n` when a single member gets everything.
pub fn jain_index(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("fairness index needs at least one value"));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for v in values {
        if !(*v >= 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("throughputs must be non-negative, got {v}")));
        }
        sum += v;
        sum_sq += v * v;
    }
    if sum_sq == 0.0 {
        return Err(Error::domain("fairness index undefined for an all-zero allocation"));
    }
    Ok(sum * sum / (values.len() as f64 * sum_sq))
}

/// Jain index of the per-user allocation implied by splitting each group's
/// total evenly across its members: a group with total `x` and `u` members
/// contributes `u` users at `x / u` each. Equivalent to [`jain_index`] on
/// the expanded per-user vector, without materializing it.
pub fn user_jain(group_totals: &[f64], sizes: &[u64]) -> Result<f64> {
    if group_totals.len() != sizes.len() {
        return Err(Error::domain(format!(
            "{} group totals vs {} group sizes",
            group_totals.len(),
            sizes.len()
        )));
    }
    if group_totals.is_empty() {
        return Err(Error::domain("fairness index needs at least one group"));
    }
    let mut users = 0.0;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (x, u) in group_totals.iter().zip(sizes) {
        if !(*x >= 0.0) || !x.is_finite() {
            return Err(Error::domain(format!("throughputs must be non-negative, got {x}")));
        }
        if *u == 0 {
            return Err(Error::domain("every group needs at least one member"));
        }
        users += *u as f64;
        sum += x;
        sum_sq += x * x / *u as f64;
    }
    if sum_sq == 0.0 {
        return Err(Error::domain("fairness index undefined for an all-zero allocation"));
    }
    Ok(sum * sum / (users * sum_sq))
}

/// A mean with its 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ci95 {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

impl Ci95 {
    pub fn contains(&self, x: f64) -> bool {
        (self.low..=self.high).contains(&x)
    }

    pub fn half_width(&self) -> f64 {
        (self.high - self.low) / 2.0
    }
}

/// Batch-means 95% confidence interval: treat per-batch means as
/// approximately independent samples and apply the Student-t quantile.
pub fn batch_means_ci95(batch_means: &[f64]) -> Result<Ci95> {
    let n = batch_means.len();
    if n < 2 {
        return Err(Error::domain(format!(
            "confidence interval needs at least 2 batches, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = batch_means.iter().sum::<f64>() / nf;
    let var = batch_means.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    let t = StudentsT::new(0.0, 1.0, nf - 1.0)
        .expect("valid dof")
        .inverse_cdf(0.975);
    let half = t * (var / nf).sqrt();
    Ok(Ci95 {
        mean,
        low: mean - half,
        high: mean + half,
    })
}
