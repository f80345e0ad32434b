//! Sources of uniform variates.
//!
//! Every stochastic decision in the crate pulls its randomness from a
//! [`Variates`] handed in by the caller, so traces can be replayed exactly by
//! scripting the variates.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A stream of uniform variates in `[0, 1)`.
pub trait Variates {
    fn uniform(&mut self) -> f64;

    /// Uniform index in `0..n`. `n` must be positive.
    fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

impl<V: Variates + ?Sized> Variates for &mut V {
    fn uniform(&mut self) -> f64 {
        (**self).uniform()
    }
}

/// Variates drawn from a seeded ChaCha8 generator.
#[derive(Debug, Clone)]
pub struct RngVariates {
    rng: ChaCha8Rng,
}

impl RngVariates {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl Variates for RngVariates {
    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// A fixed script of variates, consumed front to back.
///
/// Panics when the script runs dry; scripts are sized by the test that
/// writes them.
#[derive(Debug, Clone, Default)]
pub struct ScriptedVariates {
    script: VecDeque<f64>,
    consumed: usize,
}

impl ScriptedVariates {
    pub fn new(script: impl IntoIterator<Item = f64>) -> Self {
        Self {
            script: script.into_iter().collect(),
            consumed: 0,
        }
    }

    pub fn push(&mut self, u: f64) {
        self.script.push_back(u);
    }

    pub fn remaining(&self) -> usize {
        self.script.len()
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }
}

impl Variates for ScriptedVariates {
    fn uniform(&mut self) -> f64 {
        self.consumed += 1;
        self.script
            .pop_front()
            .unwrap_or_else(|| panic!("variate script exhausted after {} draws", self.consumed - 1))
    }
}
