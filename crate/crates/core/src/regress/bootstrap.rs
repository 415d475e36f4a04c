use super::ols::log_points;
use super::FitError;
use crate::exec::Execution;
use crate::numfmt::{de_f64, ser_f64};
use crate::rng::CounterRng;
use serde::{Deserialize, Serialize};

pub const MIN_REPLICATES: usize = 100;

/// Percentile bootstrap interval for the scaling exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub low: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub high: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Resamples whose sizes were all identical (no slope); excluded from the percentiles.
    pub degenerate: usize,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.low <= value && value <= self.high
    }
}

/// Case-resampling percentile bootstrap of the slope.
///
/// Replicate `r` draws its indices from `CounterRng::new(seed).substream(r)`,
/// so replicates are independent of evaluation order.
pub fn bootstrap_ci(
    points: &[(f64, f64)],
    level: f64,
    replicates: usize,
    seed: u64,
    exec: Execution,
) -> Result<ConfidenceInterval, FitError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(FitError::InvalidArgument(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    if replicates < MIN_REPLICATES {
        return Err(FitError::InvalidArgument(format!(
            "at least {MIN_REPLICATES} bootstrap replicates are required, got {replicates}"
        )));
    }
    let (xs, ys) = log_points(points)?;
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(FitError::DegenerateInput);
    }
    let root = CounterRng::new(seed);
    let slopes = exec.map_range(replicates, |r| resampled_slope(&xs, &ys, root.substream(r as u64)));
    let mut betas: Vec<f64> = slopes.into_iter().flatten().collect();
    let degenerate = replicates - betas.len();
    if 2 * degenerate > replicates {
        return Err(FitError::DegenerateResamples { degenerate, replicates });
    }
    betas.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(ConfidenceInterval {
        low: quantile_sorted(&betas, tail),
        high: quantile_sorted(&betas, 1.0 - tail),
        level,
        replicates,
        seed,
        degenerate,
    })
}

fn resampled_slope(xs: &[f64], ys: &[f64], rng: CounterRng) -> Option<f64> {
    let n = xs.len();
    let nf = n as f64;
    let first = xs[rng.index_at(0, n)];
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut varied = false;
    for j in 0..n as u64 {
        let i = rng.index_at(j, n);
        sx += xs[i];
        sy += ys[i];
        varied |= xs[i] != first;
    }
    if !varied {
        return None;
    }
    let (mx, my) = (sx / nf, sy / nf);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for j in 0..n as u64 {
        let i = rng.index_at(j, n);
        let dx = xs[i] - mx;
        sxx += dx * dx;
        sxy += dx * (ys[i] - my);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Linear-interpolation quantile (Hyndman–Fan type 7) of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
