#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tensor_train::cross::{CrossConfig, CrossVariant};
use ttinfer::posterior::InferenceSettings;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Every multi-index of the grid, last index fastest.
pub fn grid(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in dims {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

/// Marginals of `exp(values)` over a grid, computed without shifting.
pub fn brute_marginals(values: &[f64], dims: &[usize]) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = dims.iter().map(|&n| vec![0.0; n]).collect();
    for (idx, v) in grid(dims).iter().zip(values) {
        for (row, &k) in rows.iter_mut().zip(idx) {
            row[k] += v.exp();
        }
    }
    for row in &mut rows {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    rows
}

pub fn generous(variant: CrossVariant, seed: u64) -> InferenceSettings {
    InferenceSettings {
        cross: CrossConfig {
            max_rank: 64,
            rng_seed: seed,
            ..CrossConfig::default()
        },
        taylor_p: 10,
        taylor_max_rank: 64,
        variant,
    }
}
