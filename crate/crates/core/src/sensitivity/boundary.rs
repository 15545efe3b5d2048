use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{aih, check_frequencies};

/// Extremes of AIH over every assignment of the same frequencies to ranks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    /// Largest frequencies on the least severe units.
    pub best: f64,
    /// Largest frequencies on the most severe units.
    pub worst: f64,
}

pub fn boundary_aih(f: &[f64]) -> Result<Boundary> {
    check_frequencies(f)?;
    let mut sorted = f.to_vec();
    sorted.sort_by(f64::total_cmp);
    let worst = aih(&sorted)?;
    sorted.reverse();
    let best = aih(&sorted)?;
    Ok(Boundary { best, worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_units() {
        let b = boundary_aih(&[0.5, 0.3, 0.2]).unwrap();
        assert!((b.best - 0.4).abs() < 1e-15);
        assert!((b.worst - 0.6).abs() < 1e-15);
    }

    #[test]
    fn uniform_has_no_spread() {
        let b = boundary_aih(&[0.25; 4]).unwrap();
        assert_eq!((b.best, b.worst), (0.5, 0.5));
    }

    #[test]
    fn rejects_invalid() {
        assert!(boundary_aih(&[0.7, 0.7]).is_err());
    }
}
