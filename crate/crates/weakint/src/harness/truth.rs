//! Ground-truth references for coverage experiments.
//!
//! Coverage indicators need `E[f]` and `sigma(f)`. They come, in order of
//! preference, from a closed form (sample mean over a distribution with
//! known moments), from exact enumeration when the data distribution is
//! finite and the product space fits the budget, or from a one-off Monte
//! Carlo reference with its own seed recorded in the metadata.

use rayon::prelude::*;

use super::distributions::sample_product;
use super::rng::{reference_seed, substream_seed};
use crate::diffops::{FiniteAlphabet, Point, Statistic};
use crate::error::Result;
use crate::estimator::moments_oracle;
use crate::numeric::{mean, population_variance};
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Default number of Monte Carlo reference replicates.
pub const DEFAULT_REFERENCE_REPLICATIONS: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct TruthRef {
    pub e_f: f64,
    pub sigma_f: f64,
    pub source: String,
    pub reference_seed: Option<u64>,
}

pub(super) struct TruthInputs<'a, X: Point> {
    pub stat_spec: &'a str,
    pub stat: &'a Statistic<X>,
    pub finite: Option<&'a FiniteAlphabet<X>>,
    pub dist_moments: Option<(f64, f64)>,
    pub n: usize,
    pub budget: u64,
    pub master_seed: u64,
    pub reference_replications: u64,
    /// When false, the Monte Carlo fallback is skipped and `None` returned.
    pub allow_monte_carlo: bool,
}

pub(super) fn resolve_truth<X: Point, D: Distribution<X> + Sync>(
    inputs: &TruthInputs<'_, X>,
    sampler: &D,
) -> Result<Option<TruthRef>> {
    // closed form: the sample mean inherits the data moments
    if inputs.stat_spec.split(':').next() == Some("mean") {
        if let Some((m, var)) = inputs.dist_moments {
            return Ok(Some(TruthRef {
                e_f: m,
                sigma_f: (var / inputs.n as f64).sqrt(),
                source: "closed_form".into(),
                reference_seed: None,
            }));
        }
    }

    // exact enumeration when the product space is affordable
    if let Some(alphabet) = inputs.finite {
        let size = (alphabet.len() as u128).checked_pow(inputs.n as u32);
        if alphabet.probs().is_some() && size.is_some_and(|s| s <= inputs.budget as u128) {
            let (e_f, var) = moments_oracle(inputs.stat, alphabet, inputs.budget)?;
            return Ok(Some(TruthRef {
                e_f,
                sigma_f: var.sqrt(),
                source: "enumeration".into(),
                reference_seed: None,
            }));
        }
    }

    if !inputs.allow_monte_carlo {
        return Ok(None);
    }

    // Monte Carlo reference, computed once per experiment
    let reps = inputs.reference_replications;
    let seed = reference_seed(inputs.master_seed);
    let n = inputs.n;
    let stat = inputs.stat;
    let values: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(substream_seed(seed, i));
            let sample = sample_product(sampler, n, &mut rng);
            stat.eval(&sample)
        })
        .collect();
    Ok(Some(TruthRef {
        e_f: mean(&values),
        sigma_f: population_variance(&values).sqrt(),
        source: format!("monte_carlo(replications={reps})"),
        reference_seed: Some(seed),
    }))
}
