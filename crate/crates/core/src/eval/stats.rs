use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Method, MetricReport};
use crate::error::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 2000;
pub const DEFAULT_Z: f64 = 1.96;
const BLOCK: usize = 250;

/// Wilson score interval for a binomial proportion, clipped to [0, 1].
pub fn wilson(successes: usize, n: usize, z: f64) -> Result<(f64, f64)> {
    if n == 0 || successes > n {
        return Err(Error::InvalidInput(format!("wilson needs 0 <= successes <= n and n >= 1, got {successes}/{n}")));
    }
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::InvalidInput(format!("z must be positive, got {z}")));
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let low = if successes == 0 { 0.0 } else { (center - half).clamp(0.0, 1.0) };
    let high = if successes == n { 1.0 } else { (center + half).clamp(0.0, 1.0) };
    Ok((low, high))
}

/// Proportion with its Wilson interval.
pub fn proportion_report(name: &str, successes: usize, n: usize) -> Result<MetricReport> {
    let (lo, hi) = wilson(successes, n, DEFAULT_Z)?;
    Ok(MetricReport {
        name: name.to_string(),
        value: successes as f64 / n as f64,
        ci_low: Some(lo),
        ci_high: Some(hi),
        n,
        method: Method::Wilson,
    })
}

/// Linear-interpolated empirical quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Mean paired difference `mean(a - b)` with a percentile bootstrap 95%
/// interval. Resamples are drawn in fixed-size blocks, each from its own
/// ChaCha stream of `seed`, so the result does not depend on threading.
pub fn paired_bootstrap(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<MetricReport> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::InvalidInput("paired bootstrap needs at least 2 pairs".into()));
    }
    if resamples < 1 {
        return Err(Error::InvalidInput("resamples must be at least 1".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let blocks = resamples.div_ceil(BLOCK);
    let mut means: Vec<f64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|blk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(blk as u64);
            let count = BLOCK.min(resamples - blk * BLOCK);
            let diffs = &diffs;
            (0..count)
                .map(move |_| (0..n).map(|_| diffs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
                .collect::<Vec<_>>()
        })
        .collect();
    means.sort_by(f64::total_cmp);
    Ok(MetricReport {
        name: "mean_difference".into(),
        value: diffs.iter().sum::<f64>() / n as f64,
        ci_low: Some(quantile(&means, 0.025)),
        ci_high: Some(quantile(&means, 0.975)),
        n,
        method: Method::Bootstrap,
    })
}
