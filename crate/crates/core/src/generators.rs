//! Benchmark automata: random two-letter automata with a controlled number
//! of undefined transitions, and the `P_n` series.
//!
//! Randomness comes from ChaCha8 seeded with a `u64`, so a `(config, seed)`
//! pair names the same automaton on every platform.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::automaton::Pfa;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("need at least 2 states, got {0}")]
    TooFewStates(usize),
    #[error("undefined count {k} must be between 1 and {n}")]
    UndefinedCount { k: usize, n: usize },
    #[error("anchor state {0} out of range")]
    Anchor(usize),
    #[error("P_n needs n >= 3, got {0}")]
    PnTooSmall(usize),
}

/// Parameters for [`random_pfa`]. Letter `a` (1) is total and avoids the
/// state `avoid_a`; letter `b` (2) is undefined at `undefined_b` plus
/// `undefined - 1` further random states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub states: usize,
    pub undefined: usize,
    pub seed: u64,
    /// State outside the image of `a`; drawn at random when `None`.
    pub avoid_a: Option<usize>,
    /// A state where `b` is undefined; drawn at random when `None`.
    pub undefined_b: Option<usize>,
}

impl GenConfig {
    pub fn new(states: usize, undefined: usize, seed: u64) -> Self {
        GenConfig {
            states,
            undefined,
            seed,
            avoid_a: None,
            undefined_b: None,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let n = self.states;
        if n < 2 {
            return Err(GenError::TooFewStates(n));
        }
        if !(1..=n).contains(&self.undefined) {
            return Err(GenError::UndefinedCount {
                k: self.undefined,
                n,
            });
        }
        for q in [self.avoid_a, self.undefined_b].into_iter().flatten() {
            if !(1..=n).contains(&q) {
                return Err(GenError::Anchor(q));
            }
        }
        Ok(())
    }
}

/// An automaton from [`sample_pfa`] with the anchors it was drawn with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub pfa: Pfa,
    pub avoid_a: usize,
    pub undefined_b: usize,
}

/// Draws a random two-letter automaton.
pub fn random_pfa(config: &GenConfig) -> Result<Pfa, GenError> {
    sample_pfa(config).map(|s| s.pfa)
}

/// Like [`random_pfa`], also reporting the anchors.
///
/// Draw order: the `a` anchor, the `b` anchor, `δ(q, a)` for `q = 1..n`
/// (uniform over the `n − 1` states other than the anchor), the extra
/// undefined states of `b`, then `δ(q, b)` for each remaining `q` (uniform
/// over all states).
pub fn sample_pfa(config: &GenConfig) -> Result<Sample, GenError> {
    config.validate()?;
    let n = config.states;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let avoid_a = config.avoid_a.unwrap_or_else(|| rng.random_range(1..=n));
    let undefined_b = config
        .undefined_b
        .unwrap_or_else(|| rng.random_range(1..=n));

    let mut a_row = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.random_range(1..n);
        a_row.push(if r >= avoid_a { r + 1 } else { r });
    }

    let mut undefined = vec![false; n];
    undefined[undefined_b - 1] = true;
    if config.undefined > 1 {
        let others: Vec<usize> = (1..=n).filter(|&q| q != undefined_b).collect();
        for i in index::sample(&mut rng, others.len(), config.undefined - 1) {
            undefined[others[i] - 1] = true;
        }
    }
    let b_row: Vec<usize> = undefined
        .iter()
        .map(|&u| if u { 0 } else { rng.random_range(1..=n) })
        .collect();

    Ok(Sample {
        pfa: Pfa::from_letter_rows(n, &[a_row, b_row]).expect("generated table is valid"),
        avoid_a,
        undefined_b,
    })
}

/// The `P_n` automaton: `a` sends 1→2, 2→3 and fixes every other state;
/// `b` is undefined at 1, sends `q → q+1` for `2 ≤ q < n` and `n → 1`.
pub fn pn(n: usize) -> Result<Pfa, GenError> {
    if n < 3 {
        return Err(GenError::PnTooSmall(n));
    }
    let a: Vec<usize> = (1..=n).map(|q| if q <= 2 { q + 1 } else { q }).collect();
    let b: Vec<usize> = (1..=n)
        .map(|q| match q {
            1 => 0,
            q if q == n => 1,
            q => q + 1,
        })
        .collect();
    Ok(Pfa::from_letter_rows(n, &[a, b]).expect("P_n table is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pn_small_cases() {
        let p4 = pn(4).unwrap();
        assert_eq!(p4.row(1), &[2, 3, 3, 4]);
        assert_eq!(p4.row(2), &[0, 3, 4, 1]);
        let p3 = pn(3).unwrap();
        assert_eq!(p3.row(1), &[2, 3, 3]);
        assert_eq!(p3.row(2), &[0, 3, 1]);
        assert_eq!(pn(2), Err(GenError::PnTooSmall(2)));
        for n in 3..20 {
            assert_eq!(pn(n).unwrap().undefined_count(), 1);
        }
    }

    #[test]
    fn single_undefined_lies_in_b() {
        for seed in 0..200 {
            let p = random_pfa(&GenConfig::new(10, 1, seed)).unwrap();
            assert_eq!(p.undefined_count(), 1);
            assert!(p.row(1).iter().all(|&t| t != 0));
            assert_eq!(p.row(2).iter().filter(|&&t| t == 0).count(), 1);
        }
    }

    #[test]
    fn a_avoids_its_anchor() {
        for seed in 0..200 {
            let cfg = GenConfig {
                avoid_a: Some(3),
                undefined_b: Some(5),
                ..GenConfig::new(6, 2, seed)
            };
            let p = random_pfa(&cfg).unwrap();
            assert!(p.row(1).iter().all(|&t| t != 3 && t != 0));
            assert_eq!(p.row(2)[4], 0);
            assert_eq!(p.undefined_count(), 2);
        }
    }

    #[test]
    fn k_undefined_entries() {
        for k in 1..=7 {
            let p = random_pfa(&GenConfig::new(7, k, 99)).unwrap();
            assert_eq!(p.row(2).iter().filter(|&&t| t == 0).count(), k);
            assert_eq!(p.undefined_count(), k);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = GenConfig::new(10, 1, 12345);
        assert_eq!(random_pfa(&cfg).unwrap(), random_pfa(&cfg).unwrap());
        assert_ne!(
            random_pfa(&cfg).unwrap(),
            random_pfa(&GenConfig::new(10, 1, 12346)).unwrap()
        );
    }

    #[test]
    fn invalid_configs() {
        assert_eq!(
            random_pfa(&GenConfig::new(1, 1, 0)),
            Err(GenError::TooFewStates(1))
        );
        assert!(matches!(
            random_pfa(&GenConfig::new(4, 0, 0)),
            Err(GenError::UndefinedCount { .. })
        ));
        assert!(matches!(
            random_pfa(&GenConfig::new(4, 5, 0)),
            Err(GenError::UndefinedCount { .. })
        ));
        let cfg = GenConfig {
            avoid_a: Some(9),
            ..GenConfig::new(4, 1, 0)
        };
        assert_eq!(random_pfa(&cfg), Err(GenError::Anchor(9)));
    }
}
