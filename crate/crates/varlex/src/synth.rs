//! Synthetic benchmark generator: a shared low-rank background plus
//! class-specific sparse signatures plus dense noise. Used by the smoke
//! config, the end-to-end tests and the `synth` CLI subcommand.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::ExpressionDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticOptions {
    pub n_genes: usize,
    /// samples per class (balanced, two classes)
    pub per_class: usize,
    pub background_rank: usize,
    /// signature rows per class (disjoint between classes)
    pub signature_rows: usize,
    pub signature_magnitude: f64,
    /// probability that a signature row is active in a given sample;
    /// below 1 the signatures are not themselves low-rank
    pub signature_activation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions {
            n_genes: 500,
            per_class: 30,
            background_rank: 2,
            signature_rows: 25,
            signature_magnitude: 6.0,
            signature_activation: 0.7,
            noise_sigma: 0.2,
            seed: 0,
        }
    }
}

/// Generates a balanced two-class dataset. Every sample is
/// `background + jittered class signature + noise`; the signatures live on
/// disjoint gene rows so the sparse parts of a low-rank decomposition
/// separate the classes.
pub fn generate(opts: &SyntheticOptions) -> Result<ExpressionDataset> {
    if opts.n_genes < 2 * opts.signature_rows {
        return Err(Error::config(
            "n_genes must be at least twice signature_rows",
        ));
    }
    if opts.per_class == 0 || opts.background_rank == 0 {
        return Err(Error::config("per_class and background_rank must be positive"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let m = opts.n_genes;
    let n = 2 * opts.per_class;
    let background = DMatrix::from_fn(m, opts.background_rank, |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    });

    // fixed signed signature per class on disjoint row ranges
    let mut signatures = Vec::new();
    for c in 0..2usize {
        let rows: Vec<usize> = (c * opts.signature_rows..(c + 1) * opts.signature_rows).collect();
        let signs: Vec<f64> = rows
            .iter()
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        signatures.push((rows, signs));
    }

    let mut values = DMatrix::zeros(m, n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let class = j / opts.per_class;
        labels.push(class);
        let coeff = DMatrix::from_fn(opts.background_rank, 1, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        });
        let col = &background * coeff;
        for i in 0..m {
            values[(i, j)] = col[(i, 0)] + opts.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
        let (rows, signs) = &signatures[class];
        for (r, s) in rows.iter().zip(signs) {
            if rng.gen::<f64>() < opts.signature_activation {
                values[(*r, j)] += opts.signature_magnitude * s * (0.6 + 0.8 * rng.gen::<f64>());
            }
        }
    }

    Ok(ExpressionDataset {
        gene_ids: (0..m).map(|i| format!("g{i:04}")).collect(),
        sample_ids: (0..n).map(|j| format!("s{j:03}")).collect(),
        values,
        labels,
        class_names: vec!["class_a".into(), "class_b".into()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_balance() {
        let ds = generate(&SyntheticOptions {
            n_genes: 100,
            per_class: 5,
            ..SyntheticOptions::default()
        })
        .unwrap();
        assert_eq!(ds.n_genes(), 100);
        assert_eq!(ds.n_samples(), 10);
        assert_eq!(ds.class_counts(), vec![5, 5]);
        ds.validate().unwrap();
        assert!(!ds.has_missing());
    }

    #[test]
    fn deterministic_per_seed() {
        let opts = SyntheticOptions {
            n_genes: 80,
            per_class: 4,
            seed: 9,
            ..SyntheticOptions::default()
        };
        let a = generate(&opts).unwrap();
        let b = generate(&opts).unwrap();
        assert_eq!(a.values, b.values);
        let c = generate(&SyntheticOptions { seed: 10, ..opts }).unwrap();
        assert_ne!(a.values, c.values);
    }
}
