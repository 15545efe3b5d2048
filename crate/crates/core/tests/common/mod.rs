#![allow(dead_code)]

use std::path::PathBuf;

use harmrank_core::ingest::{build_frequency_table, parse_annotations, FrequencyTable, Granularity, Schema};
use harmrank_core::SeverityOrdering;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// The shipped nine-category table over the default stakeholder ordering.
pub fn aiaaic_table() -> FrequencyTable {
    let parsed = parse_annotations(&read_fixture("aiaaic_aggregated.csv"), Schema::AggregatedTriplets).unwrap();
    build_frequency_table(&parsed.records, &SeverityOrdering::default_stakeholders(), Granularity::Category).unwrap()
}

/// Closed form `(Σ f_j·j − ½)/M` with 1-based ranks.
pub fn closed_form_aih(f: &[f64]) -> f64 {
    let m = f.len() as f64;
    let mean_rank: f64 = f.iter().enumerate().map(|(j, x)| x * (j + 1) as f64).sum();
    (mean_rank - 0.5) / m
}

/// Normalizes non-negative weights with a positive sum.
pub fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Gini mean-difference oracle: Σ_i Σ_j f_i f_j |s_i − s_j| / (2μ).
pub fn pairwise_gini(f: &[f64], s: &[f64]) -> f64 {
    let mu: f64 = f.iter().zip(s).map(|(a, b)| a * b).sum();
    let mut acc = 0.0;
    for i in 0..f.len() {
        for j in 0..f.len() {
            acc += f[i] * f[j] * (s[i] - s[j]).abs();
        }
    }
    acc / (2.0 * mu)
}

/// Every permutation of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}
