//! Loss environments: an oblivious reset-Bernoulli adversary and a
//! multi-player congestion game.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bandit::LossSource;
use crate::error::{Error, Result};
use crate::zdd::{SuperArm, Zdd};

/// Each arm's sign is Bernoulli with a hidden mean vector that is redrawn
/// uniformly from `[0, 1]^d` with probability `reset_prob` before every round
/// after the first. Losses are `+1/d` on success and `-1/d` otherwise.
#[derive(Debug, Clone)]
pub struct ResetBernoulliAdversary {
    d: usize,
    reset_prob: f64,
    mu: Vec<f64>,
    rng: ChaCha8Rng,
    t: u64,
}

impl ResetBernoulliAdversary {
    /// Draws the initial means uniformly from `[0, 1]^d`.
    pub fn new(d: usize, reset_prob: f64, mut rng: ChaCha8Rng) -> Result<Self> {
        let mu = (0..d).map(|_| rng.random::<f64>()).collect();
        Self::with_means(d, reset_prob, mu, rng)
    }

    pub fn with_means(d: usize, reset_prob: f64, mu: Vec<f64>, rng: ChaCha8Rng) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("adversary needs at least one arm".into()));
        }
        if !(0.0..=1.0).contains(&reset_prob) {
            return Err(Error::Domain(format!("reset_prob must lie in [0, 1], got {reset_prob}")));
        }
        if mu.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: mu.len(),
            });
        }
        if mu.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::Domain("means must lie in [0, 1]".into()));
        }
        Ok(ResetBernoulliAdversary {
            d,
            reset_prob,
            mu,
            rng,
            t: 0,
        })
    }

    pub fn means(&self) -> &[f64] {
        &self.mu
    }

    /// Loss vector for the next round.
    pub fn step(&mut self) -> Vec<f64> {
        if self.t > 0 && self.rng.random::<f64>() < self.reset_prob {
            for m in &mut self.mu {
                *m = self.rng.random::<f64>();
            }
        }
        self.t += 1;
        let unit = 1.0 / self.d as f64;
        let rng = &mut self.rng;
        self.mu
            .iter()
            .map(|&m| if rng.random::<f64>() < m { unit } else { -unit })
            .collect()
    }
}

impl LossSource for ResetBernoulliAdversary {
    fn arms(&self) -> usize {
        self.d
    }

    fn next_losses(&mut self) -> Vec<f64> {
        self.step()
    }
}

/// Congestion game: player `k` pays `beta_i * kappa^n` on arm `i`, where `n`
/// is the number of other players whose choice also uses arm `i`.
#[derive(Debug, Clone)]
pub struct CongestionEnv {
    zdd: Arc<Zdd>,
    betas: Vec<f64>,
    kappa: f64,
    players: usize,
}

impl CongestionEnv {
    /// `betas` is indexed by arm (arm `i` at position `i - 1`).
    pub fn new(zdd: Arc<Zdd>, betas: Vec<f64>, kappa: f64, players: usize) -> Result<Self> {
        if betas.len() != zdd.arms() {
            return Err(Error::Dimension {
                expected: zdd.arms(),
                got: betas.len(),
            });
        }
        if players == 0 {
            return Err(Error::Domain("congestion game needs at least one player".into()));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
        }
        Ok(CongestionEnv {
            zdd,
            betas,
            kappa,
            players,
        })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Per-player loss vectors for one joint choice.
    pub fn losses(&self, choices: &[SuperArm]) -> Result<Vec<Vec<f64>>> {
        if choices.len() != self.players {
            return Err(Error::Dimension {
                expected: self.players,
                got: choices.len(),
            });
        }
        for x in choices {
            if !self.zdd.contains(x) {
                return Err(Error::Domain(format!("choice {x} is not in the decision set")));
            }
        }
        let d = self.zdd.arms();
        let mut load = vec![0i32; d];
        for x in choices {
            for &i in x.arms() {
                load[i - 1] += 1;
            }
        }
        Ok(choices
            .iter()
            .map(|x| {
                (0..d)
                    .map(|i| {
                        let others = load[i] - x.contains(i + 1) as i32;
                        self.betas[i] * self.kappa.powi(others)
                    })
                    .collect()
            })
            .collect())
    }
}
