//! Uniform message datasets split into training and test parts.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::modem::SymbolIndex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub seed: u64,
    pub order: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Dataset {
    pub fn train_symbols(&self) -> Vec<SymbolIndex> {
        self.train.iter().map(|&s| SymbolIndex(s)).collect()
    }

    pub fn test_symbols(&self) -> Vec<SymbolIndex> {
        self.test.iter().map(|&s| SymbolIndex(s)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let d: Dataset = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if d.train.iter().chain(&d.test).any(|&s| s >= d.order) {
            return Err(Error::InvalidConfig(format!(
                "dataset {} holds symbols outside 0..{}",
                path.display(),
                d.order
            )));
        }
        Ok(d)
    }

    /// Regenerates from the stored seed and checks the contents match.
    pub fn verify_replay(&self) -> bool {
        generate_with_seed(self.train.len(), self.test.len(), self.order, self.seed) == *self
    }
}

pub fn generate_with_seed(n_train: usize, n_test: usize, order: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<usize> = (0..n_train + n_test).map(|_| rng.random_range(0..order)).collect();
    let test = all.split_off(n_train);
    Dataset {
        seed,
        order,
        train: all,
        test,
    }
}

/// Dataset for an experiment; the seed is derived from the master seed.
pub fn generate_dataset(cfg: &ExperimentConfig) -> Dataset {
    let seed = super::seeds::derive(cfg.master_seed, &["dataset"]);
    generate_with_seed(cfg.n_train, cfg.n_test, cfg.order, seed)
}

/// Pearson statistic of the symbol histogram against uniform.
pub fn chi_square_uniform(symbols: &[usize], order: usize) -> f64 {
    let mut counts = vec![0u64; order];
    for &s in symbols {
        counts[s] += 1;
    }
    let expected = symbols.len() as f64 / order as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}
