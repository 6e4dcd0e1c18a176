//! Partial-difference, replacement and deletion operators on statistics,
//! together with exact and probed computation of the seminorms M and J.
//!
//! For a bounded `f: X^n -> R` the partial difference operator at coordinate
//! `k` is
//!
//! ```text
//! D[k; y, y'] f(x) = f(x with x_k := y) - f(x with x_k := y'),
//! ```
//!
//! which does not depend on `x_k`. The two seminorms are
//!
//! ```text
//! M(f) = max_k  sup_{x, y, y'}          |D[k; y, y'] f(x)|
//! J(f) = n * max_{k != l} sup_{x, ...}  |D[l; z, z'] D[k; y, y'] f(x)|
//! ```
//!
//! `M` vanishes on constants, `J` on additive functions. A function has
//! `(a, b)`-weak interactions when `M(f) <= a/n` and `J(f) <= b/n`. Since the
//! supremum ranges over both orders of each substitution pair, taking the
//! absolute value is equivalent to the signed supremum.

use std::fmt;
use std::sync::Arc;

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Marker bound for the point space of a statistic.
pub trait Point: Clone + PartialEq + Send + Sync + 'static {}
impl<T: Clone + PartialEq + Send + Sync + 'static> Point for T {}

/// Default ceiling on the number of function evaluations an exact
/// enumeration is allowed to perform.
pub const DEFAULT_ENUM_BUDGET: u64 = 10_000_000;

/// Declared weak-interaction parameters `(a, b)`.
///
/// The contract (not auto-checked) is `M(f) <= a/n` and `J(f) <= b/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakInteractionParams {
    pub a: f64,
    pub b: f64,
}

impl WeakInteractionParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a < 0.0 || b < 0.0 {
            return Err(Error::invalid(format!(
                "weak-interaction parameters must be finite and nonnegative, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }
}

/// Shared pure evaluation map of a [`Statistic`].
pub type EvalFn<X> = Arc<dyn Fn(&[X]) -> f64 + Send + Sync>;

/// A bounded statistic `f: X^n -> R` with a pure evaluation map.
///
/// Evaluation must be deterministic (identical inputs give bit-identical
/// outputs), total on `X^n` and finite.
#[derive(Clone)]
pub struct Statistic<X> {
    name: String,
    arity: usize,
    declared: Option<WeakInteractionParams>,
    eval: EvalFn<X>,
}

impl<X> fmt::Debug for Statistic<X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Statistic")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("declared", &self.declared)
            .finish()
    }
}

impl<X: Point> Statistic<X> {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        eval: impl Fn(&[X]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if arity == 0 {
            return Err(Error::invalid("statistic arity must be positive"));
        }
        Ok(Self {
            name: name.into(),
            arity,
            declared: None,
            eval: Arc::new(eval),
        })
    }

    /// Attach declared `(a, b)` parameters.
    pub fn with_params(mut self, params: WeakInteractionParams) -> Self {
        self.declared = Some(params);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn declared_params(&self) -> Option<WeakInteractionParams> {
        self.declared
    }

    /// Evaluate the statistic.
    ///
    /// Panics when `x.len() != arity`; length errors on the operator entry
    /// points are reported as `Error::InvalidArgument` before evaluation.
    pub fn eval(&self, x: &[X]) -> f64 {
        assert_eq!(
            x.len(),
            self.arity,
            "statistic '{}' expects {} arguments, got {}",
            self.name,
            self.arity,
            x.len()
        );
        (self.eval)(x)
    }
}

/// A finite ordered point set, optionally with probability weights.
///
/// With weights it represents a discrete measure and supports the exact
/// enumeration oracles; without weights it still supports exact seminorms
/// (which do not involve the measure) and uniform sampling.
#[derive(Debug, Clone)]
pub struct FiniteAlphabet<X> {
    points: Vec<X>,
    probs: Option<Vec<f64>>,
}

impl<X: Point> FiniteAlphabet<X> {
    /// Alphabet without probabilities.
    pub fn new(points: Vec<X>) -> Result<Self> {
        Self::check_points(&points)?;
        Ok(Self {
            points,
            probs: None,
        })
    }

    /// Alphabet carrying a probability vector (nonnegative, sums to 1
    /// within 1e-12).
    pub fn weighted(points: Vec<X>, probs: Vec<f64>) -> Result<Self> {
        Self::check_points(&points)?;
        if probs.len() != points.len() {
            return Err(Error::invalid(format!(
                "probability vector length {} does not match {} points",
                probs.len(),
                points.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "probabilities sum to {total}, expected 1 within 1e-12"
            )));
        }
        Ok(Self {
            points,
            probs: Some(probs),
        })
    }

    /// Alphabet with uniform probabilities `1/len`.
    pub fn uniform(points: Vec<X>) -> Result<Self> {
        let p = 1.0 / points.len() as f64;
        let probs = vec![p; points.len()];
        Self::weighted(points, probs)
    }

    fn check_points(points: &[X]) -> Result<()> {
        if points.is_empty() {
            return Err(Error::invalid("alphabet must be nonempty"));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::invalid(format!(
                        "alphabet contains duplicate entries at positions {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[X] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &X {
        &self.points[i]
    }

    pub fn probs(&self) -> Option<&[f64]> {
        self.probs.as_deref()
    }

    /// Probability of point `i`; error when the alphabet carries no weights.
    pub fn prob(&self, i: usize) -> Result<f64> {
        self.probs
            .as_ref()
            .map(|p| p[i])
            .ok_or_else(|| Error::invalid("alphabet carries no probabilities"))
    }

    /// Draw a point index: weighted when probabilities are present,
    /// uniform otherwise. Consumes exactly one uniform variate.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        match &self.probs {
            Some(probs) => {
                let mut acc = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return i;
                    }
                }
                probs.len() - 1
            }
            None => {
                let i = (u * self.points.len() as f64) as usize;
                i.min(self.points.len() - 1)
            }
        }
    }
}

impl<X: Point> Distribution<X> for FiniteAlphabet<X> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> X {
        self.points[self.sample_index(rng)].clone()
    }
}

/// How a [`SeminormReport`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeminormMethod {
    /// Exhaustive enumeration over a finite alphabet: values are the true
    /// suprema on that alphabet.
    Exact,
    /// Monte Carlo probing: values are lower bounds on the true seminorms.
    Probe,
}

/// Computed (or probed) values of the seminorms M and J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormReport {
    pub m_value: f64,
    pub j_value: f64,
    pub method: SeminormMethod,
    /// Number of probe trials; 0 for exact reports.
    pub probe_trials: u64,
}

/// `replace(x, k, y)` substitutes `y` at coordinate `k` (0-based).
pub fn replace<X: Clone>(x: &[X], k: usize, y: &X) -> Result<Vec<X>> {
    if k >= x.len() {
        return Err(Error::invalid(format!(
            "replace index {k} out of range for length {}",
            x.len()
        )));
    }
    let mut out = x.to_vec();
    out[k] = y.clone();
    Ok(out)
}

/// `delete(x, k)` removes coordinate `k`, preserving the order of the rest.
pub fn delete<X: Clone>(x: &[X], k: usize) -> Result<Vec<X>> {
    if k >= x.len() {
        return Err(Error::invalid(format!(
            "delete index {k} out of range for length {}",
            x.len()
        )));
    }
    let mut out = Vec::with_capacity(x.len() - 1);
    out.extend_from_slice(&x[..k]);
    out.extend_from_slice(&x[k + 1..]);
    Ok(out)
}

/// `D[k; y, y'] f(x)`: the first-order partial difference at coordinate `k`.
///
/// The result does not depend on `x_k`.
pub fn partial_difference<X: Point>(
    f: &Statistic<X>,
    x: &[X],
    k: usize,
    y: &X,
    y_prime: &X,
) -> Result<f64> {
    check_arity(f, x)?;
    if k >= f.arity() {
        return Err(Error::invalid(format!(
            "coordinate index {k} out of range for arity {}",
            f.arity()
        )));
    }
    let mut buf = x.to_vec();
    buf[k] = y.clone();
    let plus = f.eval(&buf);
    buf[k] = y_prime.clone();
    let minus = f.eval(&buf);
    Ok(plus - minus)
}

/// `D[l; z, z'] D[k; y, y'] f(x)`: the iterated (mixed) difference.
///
/// Expands to a four-term alternating sum, is symmetric under swapping the
/// `(k, y, y')` and `(l, z, z')` roles, and does not depend on `x_k`, `x_l`.
#[allow(clippy::too_many_arguments)]
pub fn mixed_difference<X: Point>(
    f: &Statistic<X>,
    x: &[X],
    k: usize,
    l: usize,
    y: &X,
    y_prime: &X,
    z: &X,
    z_prime: &X,
) -> Result<f64> {
    check_arity(f, x)?;
    if k == l {
        return Err(Error::invalid(format!(
            "mixed difference requires distinct coordinates, got k = l = {k}"
        )));
    }
    if k >= f.arity() || l >= f.arity() {
        return Err(Error::invalid(format!(
            "coordinate indices ({k}, {l}) out of range for arity {}",
            f.arity()
        )));
    }
    let mut buf = x.to_vec();
    buf[k] = y.clone();
    buf[l] = z.clone();
    let pp = f.eval(&buf);
    buf[l] = z_prime.clone();
    let pm = f.eval(&buf);
    buf[k] = y_prime.clone();
    let mm = f.eval(&buf);
    buf[l] = z.clone();
    let mp = f.eval(&buf);
    Ok(pp - pm - mp + mm)
}

fn check_arity<X: Point>(f: &Statistic<X>, x: &[X]) -> Result<()> {
    if x.len() != f.arity() {
        return Err(Error::invalid(format!(
            "point vector length {} does not match arity {}",
            x.len(),
            f.arity()
        )));
    }
    Ok(())
}

/// Exact seminorms by exhaustive enumeration, with the default budget.
pub fn seminorms_exact<X: Point>(
    f: &Statistic<X>,
    alphabet: &FiniteAlphabet<X>,
) -> Result<SeminormReport> {
    seminorms_exact_with_budget(f, alphabet, DEFAULT_ENUM_BUDGET)
}

/// Exact seminorms by exhaustive enumeration.
///
/// `M` enumerates all `k`, all assignments of the other `n-1` coordinates and
/// all substitution pairs; since `D[k] f` does not depend on `x_k` that
/// coordinate is skipped. `J` analogously skips both `x_k` and `x_l`. The
/// `budget` caps the number of function evaluations; exceeding it is a
/// resource error suggesting [`seminorms_probe`].
pub fn seminorms_exact_with_budget<X: Point>(
    f: &Statistic<X>,
    alphabet: &FiniteAlphabet<X>,
    budget: u64,
) -> Result<SeminormReport> {
    let n = f.arity();
    let p = alphabet.len() as u128;

    // Function evaluations: M needs 2 per difference, J needs 4.
    let m_cost = 2u128 * n as u128 * p.pow(n.saturating_sub(1) as u32) * p * p;
    let j_cost = if n >= 2 {
        4u128 * (n as u128) * (n as u128 - 1) * p.pow(n.saturating_sub(2) as u32) * p.pow(4)
    } else {
        0
    };
    let required = m_cost + j_cost;
    if required > budget as u128 {
        return Err(Error::BudgetExceeded {
            required,
            budget,
            hint: "use seminorms_probe for a Monte Carlo lower bound".into(),
        });
    }

    let points = alphabet.points();

    // M: parallel over the coordinate index with a max-reduction; the result
    // is a max and therefore independent of the partition order.
    let m_value = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut best = 0.0_f64;
            let mut x = vec![points[0].clone(); n];
            // assignments of the n-1 coordinates other than k
            for_each_assignment(points.len(), n - 1, |rest| {
                let mut r = 0;
                for (i, slot) in x.iter_mut().enumerate() {
                    if i != k {
                        *slot = points[rest[r]].clone();
                        r += 1;
                    }
                }
                for yi in 0..points.len() {
                    for ypi in (yi + 1)..points.len() {
                        x[k] = points[yi].clone();
                        let plus = f.eval(&x);
                        x[k] = points[ypi].clone();
                        let minus = f.eval(&x);
                        best = best.max((plus - minus).abs());
                    }
                }
            });
            best
        })
        .reduce(|| 0.0, f64::max);

    let j_value = if n >= 2 {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|k| (0..n).filter(move |&l| l > k).map(move |l| (k, l)))
            .collect();
        let max_dd = pairs
            .into_par_iter()
            .map(|(k, l)| {
                let mut best = 0.0_f64;
                let mut x = vec![points[0].clone(); n];
                for_each_assignment(points.len(), n - 2, |rest| {
                    let mut r = 0;
                    for (i, slot) in x.iter_mut().enumerate() {
                        if i != k && i != l {
                            *slot = points[rest[r]].clone();
                            r += 1;
                        }
                    }
                    for yi in 0..points.len() {
                        for ypi in (yi + 1)..points.len() {
                            for zi in 0..points.len() {
                                for zpi in (zi + 1)..points.len() {
                                    x[k] = points[yi].clone();
                                    x[l] = points[zi].clone();
                                    let pp = f.eval(&x);
                                    x[l] = points[zpi].clone();
                                    let pm = f.eval(&x);
                                    x[k] = points[ypi].clone();
                                    let mm = f.eval(&x);
                                    x[l] = points[zi].clone();
                                    let mp = f.eval(&x);
                                    best = best.max((pp - pm - mp + mm).abs());
                                }
                            }
                        }
                    }
                });
                best
            })
            .reduce(|| 0.0, f64::max);
        n as f64 * max_dd
    } else {
        0.0
    };

    Ok(SeminormReport {
        m_value,
        j_value,
        method: SeminormMethod::Exact,
        probe_trials: 0,
    })
}

/// Monte Carlo lower bounds on the seminorms.
///
/// Each trial draws `x` (n points), the substitution values `y, y', z, z'`
/// and a coordinate pair `(k, l)` from `sampler` / uniform valid indices, in
/// that fixed order, then records `|D|` and `n * |DD|`. For a fixed seed the
/// reported maxima are nondecreasing in `trials`.
pub fn seminorms_probe<X: Point, D: Distribution<X>>(
    f: &Statistic<X>,
    sampler: &D,
    trials: u64,
    rng_seed: u64,
) -> Result<SeminormReport> {
    if trials == 0 {
        return Err(Error::invalid("probe requires at least one trial"));
    }
    let n = f.arity();
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut m_best = 0.0_f64;
    let mut j_best = 0.0_f64;
    let mut x: Vec<X> = Vec::with_capacity(n);
    for _ in 0..trials {
        x.clear();
        for _ in 0..n {
            x.push(sampler.sample(&mut rng));
        }
        let y = sampler.sample(&mut rng);
        let y_prime = sampler.sample(&mut rng);
        let z = sampler.sample(&mut rng);
        let z_prime = sampler.sample(&mut rng);
        let k = rng.random_range(0..n);

        let d = partial_difference(f, &x, k, &y, &y_prime)?;
        m_best = m_best.max(d.abs());

        if n >= 2 {
            let mut l = rng.random_range(0..n - 1);
            if l >= k {
                l += 1;
            }
            let dd = mixed_difference(f, &x, k, l, &y, &y_prime, &z, &z_prime)?;
            j_best = j_best.max(n as f64 * dd.abs());
        }
    }
    Ok(SeminormReport {
        m_value: m_best,
        j_value: j_best,
        method: SeminormMethod::Probe,
        probe_trials: trials,
    })
}

/// Visit every assignment of `slots` coordinates over an alphabet of size
/// `alphabet_len`, in odometer order. `slots == 0` visits the single empty
/// assignment.
pub(crate) fn for_each_assignment(
    alphabet_len: usize,
    slots: usize,
    mut visit: impl FnMut(&[usize]),
) {
    let mut idx = vec![0usize; slots];
    loop {
        visit(&idx);
        let mut pos = slots;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < alphabet_len {
                break;
            }
            idx[pos] = 0;
        }
    }
}
