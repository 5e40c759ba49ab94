//! Beam search with optional random score bonuses.
//!
//! The noisy variant adds `r * beta`, `r ~ U[0, 1]` drawn per hypothesis and
//! per step, to the selection key. The bonus only decides which hypotheses
//! survive pruning; the returned ranking uses the unperturbed scores.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::record_rng;
use crate::error::{Error, Result};

/// Scores a (partial or complete) hypothesis; higher is better.
pub trait HypothesisScorer<H> {
    fn score(&self, hyp: &H) -> f64;
}

impl<H, F: Fn(&H) -> f64> HypothesisScorer<H> for F {
    fn score(&self, hyp: &H) -> f64 {
        self(hyp)
    }
}

/// Successor generation.
pub trait Expander<H> {
    fn expand(&self, hyp: &H) -> Vec<H>;
    fn is_terminal(&self, hyp: &H) -> bool;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamNoiseConfig {
    pub beam_width: usize,
    pub beta: f64,
    pub seed: u64,
    /// Expansion steps before the search gives up on finishing.
    pub max_steps: usize,
}

impl Default for BeamNoiseConfig {
    fn default() -> Self {
        Self {
            beam_width: 5,
            beta: 5.0,
            seed: super::DEFAULT_SEED,
            max_steps: 256,
        }
    }
}

impl BeamNoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width < 1 {
            return Err(Error::Config("beam_width must be at least 1".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be a finite non-negative number, got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranked<H> {
    pub hyp: H,
    pub score: f64,
}

fn run<H, S, E, R>(
    initial: H,
    scorer: &S,
    expander: &E,
    beam_width: usize,
    max_steps: usize,
    mut bonus: Option<(f64, &mut R)>,
) -> Result<Vec<Ranked<H>>>
where
    H: Clone,
    S: HypothesisScorer<H> + ?Sized,
    E: Expander<H> + ?Sized,
    R: Rng,
{
    if beam_width == 0 {
        return Err(Error::Config("beam_width must be at least 1".into()));
    }
    if expander.is_terminal(&initial) {
        let score = scorer.score(&initial);
        return Ok(vec![Ranked { hyp: initial, score }]);
    }
    let mut beam = vec![initial];
    let mut finished: Vec<Ranked<H>> = Vec::new();
    for _ in 0..max_steps {
        let mut candidates: Vec<Ranked<H>> = Vec::new();
        for h in &beam {
            for next in expander.expand(h) {
                let score = scorer.score(&next);
                candidates.push(Ranked { hyp: next, score });
            }
        }
        if candidates.is_empty() {
            // every live hypothesis is a dead end
            beam.clear();
            break;
        }
        let keys: Vec<f64> = candidates
            .iter()
            .map(|c| match bonus.as_mut() {
                Some((beta, rng)) => {
                    let b = rng.gen::<f64>() * *beta;
                    if b == 0.0 {
                        c.score
                    } else {
                        c.score + b
                    }
                }
                None => c.score,
            })
            .collect();
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]));
        order.truncate(beam_width);
        let mut slots: Vec<Option<Ranked<H>>> = candidates.into_iter().map(Some).collect();
        beam = Vec::with_capacity(beam_width);
        for idx in order {
            let c = slots[idx].take().expect("each index selected once");
            if expander.is_terminal(&c.hyp) {
                finished.push(c);
            } else {
                beam.push(c.hyp);
            }
        }
        if finished.len() >= beam_width || beam.is_empty() {
            break;
        }
    }
    if finished.is_empty() {
        if beam.is_empty() {
            return Err(Error::EmptySearch);
        }
        // step budget exhausted: report the live hypotheses
        finished = beam
            .into_iter()
            .map(|hyp| {
                let score = scorer.score(&hyp);
                Ranked { hyp, score }
            })
            .collect();
    }
    finished.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(finished)
}

/// Plain beam search. Finished hypotheses are ranked by score, best first.
pub fn beam_search<H, S, E>(
    initial: H,
    scorer: &S,
    expander: &E,
    beam_width: usize,
    max_steps: usize,
) -> Result<Vec<Ranked<H>>>
where
    H: Clone,
    S: HypothesisScorer<H> + ?Sized,
    E: Expander<H> + ?Sized,
{
    run::<H, S, E, rand_chacha::ChaCha8Rng>(initial, scorer, expander, beam_width, max_steps, None)
}

/// Beam search whose pruning keys carry a fresh `r * beta` bonus per
/// hypothesis. With `beta = 0` the result equals [`beam_search`].
pub fn noisy_beam_search<H, S, E>(
    initial: H,
    scorer: &S,
    expander: &E,
    cfg: &BeamNoiseConfig,
) -> Result<Vec<Ranked<H>>>
where
    H: Clone,
    S: HypothesisScorer<H> + ?Sized,
    E: Expander<H> + ?Sized,
{
    cfg.validate()?;
    let mut rng = record_rng(cfg.seed, 0);
    run(initial, scorer, expander, cfg.beam_width, cfg.max_steps, Some((cfg.beta, &mut rng)))
}
