use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ f = 1` for input frequency vectors.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Piecewise-linear curve through ordered `(x, y)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polyline {
    points: Vec<[f64; 2]>,
}

impl Polyline {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.windows(2).any(|w| w[1][0] < w[0][0]) {
            return Err(Error::InvalidArgument("polyline x values must be non-decreasing".into()));
        }
        Ok(Polyline { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Exact area under the piecewise-linear curve (trapezoid rule on each
    /// segment). Vertical steps contribute nothing.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]) * (w[0][1] + w[1][1]) / 2.0)
            .sum()
    }
}

/// Validates a frequency vector ordered by ascending severity.
pub fn check_frequencies(f: &[f64]) -> Result<()> {
    if f.len() < 2 {
        return Err(Error::Frequencies(format!("need at least two units, got {}", f.len())));
    }
    if let Some(x) = f.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::Frequencies(format!("entries must be finite and non-negative, got {x}")));
    }
    let sum: f64 = f.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Frequencies(format!("entries sum to {sum}, not 1")));
    }
    Ok(())
}

fn cumulative(f: &[f64]) -> impl Iterator<Item = f64> + '_ {
    std::iter::once(0.0).chain(f.iter().scan(0.0, |acc, x| {
        *acc += x;
        Some(*acc)
    }))
}

/// The ordinal Lorenz curve: point `k` is (cumulative frequency of the `k`
/// least severe units, `k / M`). Zero-frequency units leave vertical steps.
pub fn derivative_lorenz(f: &[f64]) -> Result<Polyline> {
    check_frequencies(f)?;
    let m = f.len() as f64;
    let points = cumulative(f)
        .enumerate()
        .map(|(k, x)| [x, k as f64 / m])
        .collect();
    Ok(Polyline { points })
}

/// How strictly numeric severities are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeverityCheck {
    /// Strictly increasing and positive.
    Strict,
    /// Non-decreasing and non-negative; enough for the Gini coefficient.
    Relaxed,
}

fn check_severities(f: &[f64], s: &[f64], mode: SeverityCheck) -> Result<()> {
    if s.len() != f.len() {
        return Err(Error::Severities(format!(
            "{} severities for {} frequencies",
            s.len(),
            f.len()
        )));
    }
    if let Some(x) = s.iter().find(|x| !x.is_finite()) {
        return Err(Error::Severities(format!("severity {x} is not finite")));
    }
    let ok = match mode {
        SeverityCheck::Strict => s.iter().all(|&x| x > 0.0) && s.windows(2).all(|w| w[0] < w[1]),
        SeverityCheck::Relaxed => s.iter().all(|&x| x >= 0.0) && s.windows(2).all(|w| w[0] <= w[1]),
    };
    if !ok {
        return Err(Error::Severities(match mode {
            SeverityCheck::Strict => "severities must be positive and strictly increasing".into(),
            SeverityCheck::Relaxed => "severities must be non-negative and non-decreasing".into(),
        }));
    }
    Ok(())
}

/// Classic Lorenz curve over numeric severities `s` (strict checking).
pub fn classic_lorenz(f: &[f64], s: &[f64]) -> Result<Polyline> {
    classic_lorenz_with(f, s, SeverityCheck::Strict)
}

pub fn classic_lorenz_with(f: &[f64], s: &[f64], mode: SeverityCheck) -> Result<Polyline> {
    check_frequencies(f)?;
    check_severities(f, s, mode)?;
    let mass: f64 = f.iter().zip(s).map(|(a, b)| a * b).sum();
    if mass <= 0.0 {
        return Err(Error::Severities("total severity mass is zero".into()));
    }
    let shares = f.iter().zip(s).map(|(a, b)| a * b / mass).collect::<Vec<_>>();
    let points = cumulative(f)
        .zip(cumulative(&shares))
        .map(|(x, y)| [x, y])
        .collect();
    Ok(Polyline { points })
}

/// Gini coefficient `1 − 2·area` under the classic Lorenz curve. Units are
/// sorted by severity first, and ties are allowed.
pub fn numeric_gini(f: &[f64], s: &[f64]) -> Result<f64> {
    if s.len() != f.len() {
        return Err(Error::Severities(format!(
            "{} severities for {} frequencies",
            s.len(),
            f.len()
        )));
    }
    let mut idx: Vec<usize> = (0..f.len()).collect();
    idx.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let f: Vec<f64> = idx.iter().map(|&i| f[i]).collect();
    let s: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
    let curve = classic_lorenz_with(&f, &s, SeverityCheck::Relaxed)?;
    Ok((1.0 - 2.0 * curve.area()).max(0.0))
}
