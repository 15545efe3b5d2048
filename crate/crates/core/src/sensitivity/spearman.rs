use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based ranks with tied values sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's ρ: Pearson correlation of average ranks. Inputs may be scores
/// or ranks. Returns `None` when either side has no variance.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "rankings differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument("need at least two ranked items".into()));
    }
    Ok(pearson(&average_ranks(a), &average_ranks(b)))
}

/// Symmetric matrix of pairwise Spearman correlations with a unit
/// diagonal. Undefined entries are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl RhoMatrix {
    /// Correlates every pair of score vectors. Each vector is aligned with
    /// `items`; `None` scores (e.g. a category emptied in one trial) drop
    /// that item from the pairs it takes part in.
    pub fn from_scores(labels: Vec<String>, scores: &[Vec<Option<f64>>]) -> Self {
        let n = scores.len();
        let mut values = vec![vec![None; n]; n];
        for i in 0..n {
            values[i][i] = Some(1.0);
            for j in i + 1..n {
                let (a, b): (Vec<f64>, Vec<f64>) = scores[i]
                    .iter()
                    .zip(&scores[j])
                    .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
                    .unzip();
                let rho = spearman_rho(&a, &b).ok().flatten();
                values[i][j] = rho;
                values[j][i] = rho;
            }
        }
        RhoMatrix { labels, values }
    }

    /// Row of correlations against the first entry (the baseline).
    pub fn against_first(&self) -> &[Option<f64>] {
        &self.values[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_reversed() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman_rho(&a, &a).unwrap(), Some(1.0));
        assert_eq!(spearman_rho(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap(), Some(-1.0));
    }

    #[test]
    fn one_adjacent_swap_of_four() {
        let rho = spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 3.0, 4.0]).unwrap().unwrap();
        assert!((rho - 0.8).abs() < 1e-12);
    }

    #[test]
    fn ties_use_average_ranks() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), [2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn errors_and_undefined() {
        assert!(spearman_rho(&[1.0, 2.0], &[1.0]).is_err());
        assert!(spearman_rho(&[1.0], &[1.0]).is_err());
        assert_eq!(spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), None);
    }

    #[test]
    fn matrix_is_symmetric() {
        let m = RhoMatrix::from_scores(
            vec!["a".into(), "b".into(), "c".into()],
            &[
                vec![Some(0.1), Some(0.2), Some(0.3)],
                vec![Some(0.2), Some(0.1), Some(0.3)],
                vec![None, Some(0.5), Some(0.1)],
            ],
        );
        for i in 0..3 {
            assert_eq!(m.values[i][i], Some(1.0));
            for j in 0..3 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
        assert_eq!(m.values[0][2], Some(-1.0));
    }
}
