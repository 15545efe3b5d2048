//! Inputs shared by the benchmarks.

use harmrank_core::FrequencyTable;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible count table with `categories` rows over `units` columns.
pub fn synthetic_table(categories: usize, units: usize, seed: u64) -> FrequencyTable {
    let mut state = seed;
    let counts = (0..categories)
        .map(|_| (0..units).map(|_| 1 + splitmix(&mut state) % 60).collect())
        .collect();
    FrequencyTable::from_counts(
        (0..categories).map(|i| format!("category {i:03}")).collect(),
        (0..units).map(|j| format!("unit {j:02}")).collect(),
        counts,
    )
    .expect("synthetic counts are positive")
}

/// The row-normalized frequencies of a table's first row.
pub fn first_row(table: &FrequencyTable) -> Vec<f64> {
    table.freqs[0].clone().expect("synthetic rows are live")
}
