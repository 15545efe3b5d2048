use serde::{Deserialize, Serialize};

/// Summary of one category's AIH across scenarios or trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub mean_aih: f64,
    pub std_aih: f64,
    /// 2.5th percentile.
    pub lo: f64,
    /// 97.5th percentile.
    pub hi: f64,
    pub mean_ci: f64,
    /// Scenarios in which the category was non-degenerate.
    pub samples: usize,
}

/// Mean anchored at the first value, so identical inputs return that value
/// bit-for-bit.
pub(crate) fn mean(xs: &[f64]) -> f64 {
    let first = xs[0];
    first + xs.iter().map(|x| x - first).sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub(crate) fn std_dev(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Percentile with linear interpolation between order statistics.
pub(crate) fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let w = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * w
}

impl CategoryStats {
    /// `aih` and `ci` are paired samples; at least one is required.
    pub(crate) fn from_samples(aih: &[f64], ci: &[f64]) -> Self {
        let mean_aih = mean(aih);
        let mut sorted = aih.to_vec();
        sorted.sort_by(f64::total_cmp);
        // interpolation can land an ulp away from a mean of near-equal values
        let lo = percentile(&sorted, 0.025).min(mean_aih);
        let hi = percentile(&sorted, 0.975).max(mean_aih);
        CategoryStats {
            mean_aih,
            std_aih: std_dev(aih, mean_aih),
            lo,
            hi,
            mean_ci: mean(ci),
            samples: aih.len(),
        }
    }
}
