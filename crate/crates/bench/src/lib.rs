//! Shared fixtures for the benchmarks in `benches/`.

use fbound::{generate_synthetic, Dims, Instance};

/// Seeded instances of increasing size, labelled by their dimensions.
pub fn ladder() -> Vec<(String, Instance)> {
    [Dims::new(1, 1, 1, 1, 8, 4), Dims::new(2, 2, 2, 2, 16, 4), Dims::new(3, 2, 2, 2, 24, 6)]
        .into_iter()
        .map(|d| (d.to_string(), generate_synthetic(11, d).expect("valid dimensions")))
        .collect()
}
