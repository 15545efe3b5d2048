use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One agglomeration step. Leaves are `0..n`; the cluster formed at step
/// `s` gets id `n + s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    /// Leaves under the new cluster.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub labels: Vec<String>,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Leaves in drawing order: depth-first, left child first.
    pub fn leaf_order(&self) -> Vec<usize> {
        let n = self.labels.len();
        let mut out = Vec::with_capacity(n);
        let mut stack = vec![n + self.merges.len() - 1];
        while let Some(id) = stack.pop() {
            if id < n {
                out.push(id);
            } else {
                let m = &self.merges[id - n];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Agglomerative clustering of the rows of `rows` with Euclidean distance
/// and Ward linkage, updated by the Lance–Williams recurrence.
///
/// Among equally close pairs the one with the lexicographically smallest
/// `(left, right)` id pair merges first.
pub fn ward_cluster(rows: &[Vec<f64>], labels: &[String]) -> Result<Dendrogram> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("clustering needs at least two rows, got {n}")));
    }
    if labels.len() != n {
        return Err(Error::InvalidArgument(format!("{} labels for {n} rows", labels.len())));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width || r.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidArgument("rows must have equal length and finite entries".into()));
    }

    // dist[a][b] for cluster ids a < b; ids beyond n are filled as merges happen
    let total = 2 * n - 1;
    let mut dist = vec![vec![f64::NAN; total]; total];
    for i in 0..n {
        for j in i + 1..n {
            dist[i][j] = euclidean(&rows[i], &rows[j]);
        }
    }
    let d = |dist: &Vec<Vec<f64>>, a: usize, b: usize| if a < b { dist[a][b] } else { dist[b][a] };

    let mut size = vec![0usize; total];
    size[..n].fill(1);
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                let dab = dist[a][b];
                if best.map_or(true, |(bd, ..)| dab < bd) {
                    best = Some((dab, a, b));
                }
            }
        }
        let (dij, i, j) = best.expect("at least two active clusters");
        let new = n + step;
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        active.retain(|&c| c != i && c != j);
        for &k in &active {
            let nk = size[k] as f64;
            let (dik, djk) = (d(&dist, i, k), d(&dist, j, k));
            let sq = ((ni + nk) * dik * dik + (nj + nk) * djk * djk - nk * dij * dij) / (ni + nj + nk);
            dist[k][new] = sq.max(0.0).sqrt();
        }
        size[new] = size[i] + size[j];
        active.push(new);
        merges.push(Merge {
            left: i,
            right: j,
            distance: dij,
            size: size[new],
        });
    }

    Ok(Dendrogram {
        labels: labels.to_vec(),
        merges,
    })
}
