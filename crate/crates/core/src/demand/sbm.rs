//! Exact pure-birth sampling of the stochastic Bass model.
//!
//! Only used to validate the closed-form moments; the pool size is rounded to
//! an integer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EffectiveSpec;

/// Number of adopters by time `t` for one realization, drawing from `rng`.
pub fn simulate_sbm_with<R: Rng + ?Sized>(spec: &EffectiveSpec, t: f64, rng: &mut R) -> u64 {
    let pool = spec.m_hat.round().max(0.0) as u64;
    let induction = if pool > 1 {
        spec.beta_hat / (pool - 1) as f64
    } else {
        0.0
    };
    let mut clock = 0.0;
    let mut adopted = 0u64;
    while adopted < pool {
        let j = adopted as f64;
        let rate = (pool as f64 - j) * (spec.alpha_hat + induction * j);
        if rate <= 0.0 {
            break;
        }
        // inverse-transform exponential holding time; 1 - u avoids ln(0)
        let u: f64 = rng.random();
        clock += -(1.0 - u).ln() / rate;
        if clock > t {
            break;
        }
        adopted += 1;
    }
    adopted
}

/// One seeded realization.
pub fn simulate_sbm(spec: &EffectiveSpec, t: f64, seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_sbm_with(spec, t, &mut rng)
}

/// `reps` realizations from a single seeded stream.
pub fn sbm_replications(spec: &EffectiveSpec, t: f64, reps: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..reps)
        .map(|_| simulate_sbm_with(spec, t, &mut rng))
        .collect()
}
