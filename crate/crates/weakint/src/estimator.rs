//! Conditional variances, the Efron-Stein functional, the (n+1)-sample
//! variance estimator, exact-enumeration expectation oracles and the
//! self-bounding diagnostic.
//!
//! The k-th conditional variance of `f` at `x` is
//!
//! ```text
//! sigma_k^2(f)(x) = 1/2 E[(D[k; Y, Y'] f(x))^2],   (Y, Y') ~ mu_k x mu_k,
//! ```
//!
//! and `Sigma^2(f)(x) = sum_k sigma_k^2(f)(x)` is the Efron-Stein upper
//! bound functional: `sigma^2(f) <= E[Sigma^2(f)]`.
//!
//! The variance estimator acts on one additional observation. For
//! `x = (x_1, ..., x_{n+1})`:
//!
//! ```text
//! v_f(x) = 1/(2(n+1)) sum_j sum_{i != j} (f(del_j x) - f(del_j repl_{i <- x_j} x))^2
//! ```
//!
//! where `del_j` deletes coordinate j and `repl_{i <- x_j}` writes `x_j`
//! into coordinate i. The two inner vectors differ in exactly one component
//! and contain no repeated components; `v_f` is an unbiased estimator of
//! `E[Sigma^2(f)]` when the inputs are iid. `n = 1` is accepted (the formula
//! is well defined with two terms) but statistically vacuous.

use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::diffops::{for_each_assignment, FiniteAlphabet, Point, Statistic, DEFAULT_ENUM_BUDGET};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};

/// Default trial count for the Monte Carlo conditional-variance path.
pub const DEFAULT_MC_TRIALS: u64 = 10_000;

/// Per-coordinate conditional variances and their sum.
#[derive(Debug, Clone)]
pub struct ConditionalVarianceProfile {
    pub per_coordinate: Vec<f64>,
    pub total: f64,
}

/// Result of one evaluation of the variance estimator.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorEvaluation {
    /// The value of `v_f(x)`; always nonnegative.
    pub value: f64,
    /// Number of statistic evaluations performed: `(n+1) + n(n+1) = (n+1)^2`,
    /// the deleted base vectors being evaluated once per outer index.
    pub evaluations_used: u64,
}

/// Exact k-th conditional variance over a finite measure.
///
/// Sums `1/2 p(y) p(y') D^2` over all substitution pairs; the result does
/// not depend on `x_k`.
pub fn conditional_variance_exact<X: Point>(
    f: &Statistic<X>,
    x: &[X],
    k: usize,
    mu: &FiniteAlphabet<X>,
) -> Result<f64> {
    if x.len() != f.arity() {
        return Err(Error::invalid(format!(
            "point vector length {} does not match arity {}",
            x.len(),
            f.arity()
        )));
    }
    if k >= f.arity() {
        return Err(Error::invalid(format!(
            "coordinate index {k} out of range for arity {}",
            f.arity()
        )));
    }
    let probs = mu
        .probs()
        .ok_or_else(|| Error::invalid("exact conditional variance requires probabilities"))?;

    // One evaluation per alphabet point, then the weighted pair sum.
    let mut buf = x.to_vec();
    let values: Vec<f64> = mu
        .points()
        .iter()
        .map(|p| {
            buf[k] = p.clone();
            f.eval(&buf)
        })
        .collect();

    let mut acc = CompensatedSum::default();
    for (i, &vi) in values.iter().enumerate() {
        for (j, &vj) in values.iter().enumerate() {
            let d = vi - vj;
            acc.add(0.5 * probs[i] * probs[j] * d * d);
        }
    }
    Ok(acc.value().max(0.0))
}

/// Monte Carlo k-th conditional variance: averages `1/2 D^2` over
/// `trials` iid substitution pairs drawn from `sampler`.
pub fn conditional_variance_mc<X: Point, D: Distribution<X>, R: Rng>(
    f: &Statistic<X>,
    x: &[X],
    k: usize,
    sampler: &D,
    trials: u64,
    rng: &mut R,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::invalid("Monte Carlo path requires trials >= 1"));
    }
    if x.len() != f.arity() || k >= f.arity() {
        return Err(Error::invalid(
            "index or point vector length out of range for conditional variance",
        ));
    }
    let mut buf = x.to_vec();
    let mut acc = CompensatedSum::default();
    for _ in 0..trials {
        buf[k] = sampler.sample(rng);
        let plus = f.eval(&buf);
        buf[k] = sampler.sample(rng);
        let minus = f.eval(&buf);
        let d = plus - minus;
        acc.add(0.5 * d * d);
    }
    Ok((acc.value() / trials as f64).max(0.0))
}

/// Exact Efron-Stein profile: `sigma_k^2` for every coordinate plus the sum.
pub fn sigma_sum_exact<X: Point>(
    f: &Statistic<X>,
    x: &[X],
    mu: &FiniteAlphabet<X>,
) -> Result<ConditionalVarianceProfile> {
    let per: Result<Vec<f64>> = (0..f.arity())
        .map(|k| conditional_variance_exact(f, x, k, mu))
        .collect();
    let per_coordinate = per?;
    let total = compensated_sum(&per_coordinate);
    Ok(ConditionalVarianceProfile {
        per_coordinate,
        total,
    })
}

/// Monte Carlo Efron-Stein profile.
pub fn sigma_sum_mc<X: Point, D: Distribution<X>, R: Rng>(
    f: &Statistic<X>,
    x: &[X],
    sampler: &D,
    trials: u64,
    rng: &mut R,
) -> Result<ConditionalVarianceProfile> {
    let mut per_coordinate = Vec::with_capacity(f.arity());
    for k in 0..f.arity() {
        per_coordinate.push(conditional_variance_mc(f, x, k, sampler, trials, rng)?);
    }
    let total = compensated_sum(&per_coordinate);
    Ok(ConditionalVarianceProfile {
        per_coordinate,
        total,
    })
}

/// The variance estimator `v_f` on an (n+1)-sample.
///
/// The outer sum parallelizes over the deleted index j; each inner sum runs
/// in canonical i order and the outer reduction in canonical j order, so the
/// value is independent of the parallel schedule. The deleted base vector is
/// constructed once per j and patched one coordinate at a time.
pub fn variance_estimator<X: Point>(f: &Statistic<X>, x: &[X]) -> Result<EstimatorEvaluation> {
    let n = f.arity();
    if x.len() != n + 1 {
        return Err(Error::invalid(format!(
            "variance estimator needs one additional observation: expected {} entries, got {}",
            n + 1,
            x.len()
        )));
    }

    let outer = |j: usize| -> f64 {
        let mut base: Vec<X> = Vec::with_capacity(n);
        base.extend_from_slice(&x[..j]);
        base.extend_from_slice(&x[j + 1..]);
        let f_base = f.eval(&base);
        let mut acc = CompensatedSum::default();
        for i in 0..=n {
            if i == j {
                continue;
            }
            // position of coordinate i inside the deleted vector
            let pos = if i < j { i } else { i - 1 };
            let saved = std::mem::replace(&mut base[pos], x[j].clone());
            let d = f_base - f.eval(&base);
            base[pos] = saved;
            acc.add(d * d);
        }
        acc.value()
    };

    // below this size the scheduling overhead outweighs the work; both
    // paths visit j in the same order and produce identical sums
    let inner: Vec<f64> = if n < 64 {
        (0..=n).map(outer).collect()
    } else {
        (0..=n).into_par_iter().map(outer).collect()
    };

    let value = compensated_sum(&inner) / (2.0 * (n as f64 + 1.0));
    Ok(EstimatorEvaluation {
        value: value.max(0.0),
        evaluations_used: ((n as u64) + 1) * ((n as u64) + 1),
    })
}

/// Wrap `v_f` as a statistic of arity n+1, e.g. for enumeration oracles or
/// the self-bounding diagnostic.
pub fn variance_estimator_statistic<X: Point>(f: &Statistic<X>) -> Statistic<X> {
    let inner = f.clone();
    let name = format!("v[{}]", f.name());
    Statistic::new(name, f.arity() + 1, move |x: &[X]| {
        variance_estimator(&inner, x)
            .expect("arity checked by the statistic wrapper")
            .value
    })
    .expect("arity n+1 is positive")
}

/// Exact expectation of `g(X)` under the product of `alphabet`'s measure,
/// by full enumeration with the default budget.
pub fn expectation_oracle<X: Point>(g: &Statistic<X>, alphabet: &FiniteAlphabet<X>) -> Result<f64> {
    expectation_oracle_with_budget(g, alphabet, DEFAULT_ENUM_BUDGET)
}

pub fn expectation_oracle_with_budget<X: Point>(
    g: &Statistic<X>,
    alphabet: &FiniteAlphabet<X>,
    budget: u64,
) -> Result<f64> {
    Ok(moments_oracle(g, alphabet, budget)?.0)
}

/// Exact variance of `g(X)`, by full enumeration with the default budget.
pub fn variance_oracle<X: Point>(g: &Statistic<X>, alphabet: &FiniteAlphabet<X>) -> Result<f64> {
    variance_oracle_with_budget(g, alphabet, DEFAULT_ENUM_BUDGET)
}

pub fn variance_oracle_with_budget<X: Point>(
    g: &Statistic<X>,
    alphabet: &FiniteAlphabet<X>,
    budget: u64,
) -> Result<f64> {
    Ok(moments_oracle(g, alphabet, budget)?.1)
}

/// Exact `(E[g], Var[g])` in one enumeration pass.
///
/// Parallelizes over the value of the first coordinate; the per-block sums
/// are combined in block order, so the result does not depend on the number
/// of worker threads.
pub fn moments_oracle<X: Point>(
    g: &Statistic<X>,
    alphabet: &FiniteAlphabet<X>,
    budget: u64,
) -> Result<(f64, f64)> {
    let m = g.arity();
    let p = alphabet.len() as u128;
    let required = p.pow(m as u32);
    if required > budget as u128 {
        return Err(Error::BudgetExceeded {
            required,
            budget,
            hint: "reduce the arity or alphabet, or raise the enumeration budget".into(),
        });
    }
    let probs = alphabet
        .probs()
        .ok_or_else(|| Error::invalid("expectation oracle requires probabilities"))?;
    let points = alphabet.points();

    // blocks: one per value of the first coordinate
    let blocks: Vec<(f64, f64)> = (0..alphabet.len())
        .into_par_iter()
        .map(|first| {
            let mut e = CompensatedSum::default();
            let mut e2 = CompensatedSum::default();
            let mut x = vec![points[0].clone(); m];
            x[0] = points[first].clone();
            let w0 = probs[first];
            for_each_assignment(alphabet.len(), m - 1, |rest| {
                let mut w = w0;
                for (slot, &idx) in rest.iter().enumerate() {
                    x[slot + 1] = points[idx].clone();
                    w *= probs[idx];
                }
                let v = g.eval(&x);
                e.add(w * v);
                e2.add(w * v * v);
            });
            (e.value(), e2.value())
        })
        .collect();

    let mut e = CompensatedSum::default();
    let mut e2 = CompensatedSum::default();
    for (be, be2) in blocks {
        e.add(be);
        e2.add(be2);
    }
    let mean = e.value();
    Ok((mean, (e2.value() - mean * mean).max(0.0)))
}

/// One enumerated point together with `g(x)` and `D^2 g(x)`.
#[derive(Debug, Clone)]
pub struct SelfBoundingRecord<X> {
    pub point: Vec<X>,
    pub value: f64,
    pub d_squared: f64,
}

/// Exact values of the self-bounding operator
/// `D^2 g(x) = sum_k (g(x) - inf_y g(x with x_k := y))^2`
/// at every point of the product alphabet.
///
/// For `g = v_f` the proof-level inequality
/// `D^2 v_f(x) <= (M(f)^2 + 4 J(f)^2) v_f(x)` can be checked pointwise.
pub fn self_bounding_diagnostic<X: Point>(
    g: &Statistic<X>,
    alphabet: &FiniteAlphabet<X>,
) -> Result<Vec<SelfBoundingRecord<X>>> {
    self_bounding_diagnostic_with_budget(g, alphabet, DEFAULT_ENUM_BUDGET)
}

pub fn self_bounding_diagnostic_with_budget<X: Point>(
    g: &Statistic<X>,
    alphabet: &FiniteAlphabet<X>,
    budget: u64,
) -> Result<Vec<SelfBoundingRecord<X>>> {
    let m = g.arity();
    let p = alphabet.len() as u128;
    // one evaluation per point plus one per (coordinate, substitute)
    let required = p.pow(m as u32) * (1 + (m as u128) * p);
    if required > budget as u128 {
        return Err(Error::BudgetExceeded {
            required,
            budget,
            hint: "reduce the arity or alphabet, or raise the enumeration budget".into(),
        });
    }
    let points = alphabet.points();
    let mut records = Vec::new();
    let mut x = vec![points[0].clone(); m];
    for_each_assignment(alphabet.len(), m, |assignment| {
        for (slot, &idx) in assignment.iter().enumerate() {
            x[slot] = points[idx].clone();
        }
        let value = g.eval(&x);
        let mut d2 = CompensatedSum::default();
        for k in 0..m {
            let saved = x[k].clone();
            let mut inf = f64::INFINITY;
            for pnt in points {
                x[k] = pnt.clone();
                inf = inf.min(g.eval(&x));
            }
            x[k] = saved;
            let gap = value - inf;
            d2.add(gap * gap);
        }
        records.push(SelfBoundingRecord {
            point: x.clone(),
            value,
            d_squared: d2.value(),
        });
    });
    Ok(records)
}
