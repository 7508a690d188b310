//! Shared fixtures for the criterion benchmarks.

use aosa_core::geometry::{expand_super_array, ElementLayout, SuperArrayConfig};

pub fn layout_4x4() -> ElementLayout {
    ElementLayout::rectangular(4, 4, 0.5, 0.6).unwrap()
}

/// Eight-module spread configuration used across benches.
pub fn spread_config() -> SuperArrayConfig {
    SuperArrayConfig::all_up(vec![
        [8.0, 7.0],
        [-8.0, 7.0],
        [8.0, -7.0],
        [-8.0, -7.0],
        [8.0, 0.0],
        [-8.0, 0.0],
        [0.0, 7.0],
        [0.0, -7.0],
    ])
    .unwrap()
}

pub fn spread_positions() -> Vec<[f64; 2]> {
    expand_super_array(&spread_config(), &layout_4x4()).unwrap()
}
