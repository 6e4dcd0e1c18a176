//! Chain rule for weak interactions.
//!
//! For twice-differentiable `F` with `sup |F'| = d1` and `sup |F''| = d2`
//! over a convex domain containing the range of `f`,
//!
//! ```text
//! M(F o f) <= d1 * M(f)
//! J(F o f) <= n * d2 * M(f)^2 + d1 * J(f),
//! ```
//!
//! so `(a, b)`-weak interactions of `f` become
//! `(a' , b') = (a d1, a^2 d2 + b d1)` for the composite. The same holds for
//! vector-valued `f` with the seminorms taken in the norm of the target
//! space; the finite-dimensional sup-norm case is what the Gibbs free energy
//! factors through.

use std::sync::Arc;

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::diffops::{Point, SeminormMethod, SeminormReport, Statistic, WeakInteractionParams};
use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type VectorArgFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorValuedFn<X> = Arc<dyn Fn(&[X]) -> Vec<f64> + Send + Sync>;

/// A scalar map `F: U -> R` on an interval, with caller-supplied bounds on
/// its first and second derivatives over `U`.
#[derive(Clone)]
pub struct SmoothMap {
    eval: ScalarFn,
    d1_bound: f64,
    d2_bound: f64,
    domain: (f64, f64),
}

impl SmoothMap {
    pub fn new(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1_bound: f64,
        d2_bound: f64,
        domain: (f64, f64),
    ) -> Result<Self> {
        check_derivative_bounds(d1_bound, d2_bound)?;
        if domain.0 >= domain.1 || domain.0.is_nan() || domain.1.is_nan() {
            return Err(Error::invalid("domain must be a nondegenerate interval"));
        }
        Ok(Self {
            eval: Arc::new(eval),
            d1_bound,
            d2_bound,
            domain,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn d1_bound(&self) -> f64 {
        self.d1_bound
    }

    pub fn d2_bound(&self) -> f64 {
        self.d2_bound
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Largest difference quotient `|F(u) - F(v)| / |u - v|` over random
    /// segments of the domain; a finite-difference cross-check of
    /// `d1_bound` (the probed value is a lower bound on `sup |F'|`).
    pub fn probe_first_derivative(&self, trials: usize, seed: u64) -> f64 {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let (lo, hi) = self.domain;
        let span = hi - lo;
        let min_gap = span * 1e-4;
        let mut best = 0.0_f64;
        let mut done = 0;
        while done < trials {
            let u = lo + span * rng.random::<f64>();
            let v = lo + span * rng.random::<f64>();
            if (u - v).abs() < min_gap {
                continue;
            }
            done += 1;
            best = best.max(((self.eval)(u) - (self.eval)(v)).abs() / (u - v).abs());
        }
        best
    }
}

/// `(a', b') = (a d1, a^2 d2 + b d1)` for `F o f`.
pub fn chain_params(
    d1_bound: f64,
    d2_bound: f64,
    f_params: WeakInteractionParams,
) -> Result<WeakInteractionParams> {
    check_derivative_bounds(d1_bound, d2_bound)?;
    WeakInteractionParams::new(
        f_params.a * d1_bound,
        f_params.a * f_params.a * d2_bound + f_params.b * d1_bound,
    )
}

/// Pointwise composition `F o f` with declared parameters from
/// [`chain_params`] when `f` declares its own.
///
/// Evaluation panics when `f` leaves the declared domain of `F` (the domain
/// is part of the derivative-bound contract).
pub fn compose_statistic<X: Point>(map: &SmoothMap, f: &Statistic<X>) -> Result<Statistic<X>> {
    let inner = f.clone();
    let m = map.clone();
    let name = format!("compose({})", f.name());
    let composed = Statistic::new(name, f.arity(), move |x: &[X]| {
        let t = inner.eval(x);
        let (lo, hi) = m.domain;
        assert!(
            t >= lo - 1e-12 && t <= hi + 1e-12,
            "composition input {t} outside the declared domain [{lo}, {hi}]"
        );
        (m.eval)(t)
    })?;
    Ok(match f.declared_params() {
        Some(p) => composed.with_params(chain_params(map.d1_bound, map.d2_bound, p)?),
        None => composed,
    })
}

fn check_derivative_bounds(d1_bound: f64, d2_bound: f64) -> Result<()> {
    if !d1_bound.is_finite() || !d2_bound.is_finite() || d1_bound < 0.0 || d2_bound < 0.0 {
        return Err(Error::invalid(
            "derivative bounds must be finite and nonnegative",
        ));
    }
    Ok(())
}

/// A statistic with values in a finite-dimensional sup-norm space.
#[derive(Clone)]
pub struct VectorStatistic<X> {
    name: String,
    arity: usize,
    dim: usize,
    eval: VectorValuedFn<X>,
    params: Option<WeakInteractionParams>,
}

impl<X: Point> VectorStatistic<X> {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        dim: usize,
        eval: impl Fn(&[X]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if arity == 0 || dim == 0 {
            return Err(Error::invalid("vector statistic needs arity, dim >= 1"));
        }
        Ok(Self {
            name: name.into(),
            arity,
            dim,
            eval: Arc::new(eval),
            params: None,
        })
    }

    pub fn with_params(mut self, params: WeakInteractionParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn declared_params(&self) -> Option<WeakInteractionParams> {
        self.params
    }

    pub fn eval(&self, x: &[X]) -> Vec<f64> {
        assert_eq!(x.len(), self.arity, "vector statistic '{}' arity", self.name);
        (self.eval)(x)
    }
}

/// A scalar map on the sup-norm ball of a finite-dimensional space, with
/// operator-norm bounds on its first two derivatives.
#[derive(Clone)]
pub struct VectorSmoothMap {
    eval: VectorArgFn,
    d1_bound: f64,
    d2_bound: f64,
}

impl VectorSmoothMap {
    pub fn new(
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        d1_bound: f64,
        d2_bound: f64,
    ) -> Result<Self> {
        check_derivative_bounds(d1_bound, d2_bound)?;
        Ok(Self {
            eval: Arc::new(eval),
            d1_bound,
            d2_bound,
        })
    }

    pub fn d1_bound(&self) -> f64 {
        self.d1_bound
    }

    pub fn d2_bound(&self) -> f64 {
        self.d2_bound
    }
}

/// Composition of a scalar map with a vector-valued statistic; parameters
/// again follow the chain rule.
pub fn compose_vector<X: Point>(
    map: &VectorSmoothMap,
    f: &VectorStatistic<X>,
) -> Result<Statistic<X>> {
    let inner = f.clone();
    let m = map.clone();
    let name = format!("compose({})", inner.name);
    let composed = Statistic::new(name, f.arity(), move |x: &[X]| (m.eval)(&(inner.eval)(x)))?;
    Ok(match f.declared_params() {
        Some(p) => composed.with_params(chain_params(map.d1_bound, map.d2_bound, p)?),
        None => composed,
    })
}

/// Monte Carlo lower bounds on the extended (sup-norm-valued) seminorms
/// `max_k sup |D f|_inf` and `n max_{k != l} sup |DD f|_inf`.
pub fn probe_vector_seminorms<X: Point, D: Distribution<X>>(
    f: &VectorStatistic<X>,
    sampler: &D,
    trials: u64,
    seed: u64,
) -> Result<SeminormReport> {
    if trials == 0 {
        return Err(Error::invalid("probe requires at least one trial"));
    }
    let n = f.arity();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let sup = |v: &[f64]| v.iter().fold(0.0_f64, |acc, &t| acc.max(t.abs()));
    let mut m_best = 0.0_f64;
    let mut j_best = 0.0_f64;
    for _ in 0..trials {
        let mut x: Vec<X> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        let y = sampler.sample(&mut rng);
        let y_prime = sampler.sample(&mut rng);
        let z = sampler.sample(&mut rng);
        let z_prime = sampler.sample(&mut rng);
        let k = rng.random_range(0..n);

        let saved_k = x[k].clone();
        x[k] = y.clone();
        let f_y = f.eval(&x);
        x[k] = y_prime.clone();
        let f_yp = f.eval(&x);
        let d: Vec<f64> = f_y.iter().zip(&f_yp).map(|(a, b)| a - b).collect();
        m_best = m_best.max(sup(&d));
        x[k] = saved_k;

        if n >= 2 {
            let mut l = rng.random_range(0..n - 1);
            if l >= k {
                l += 1;
            }
            x[k] = y.clone();
            x[l] = z.clone();
            let pp = f.eval(&x);
            x[l] = z_prime.clone();
            let pm = f.eval(&x);
            x[k] = y_prime.clone();
            let mm = f.eval(&x);
            x[l] = z.clone();
            let mp = f.eval(&x);
            let dd: Vec<f64> = (0..pp.len())
                .map(|i| pp[i] - pm[i] - mp[i] + mm[i])
                .collect();
            j_best = j_best.max(n as f64 * sup(&dd));
        }
    }
    Ok(SeminormReport {
        m_value: m_best,
        j_value: j_best,
        method: SeminormMethod::Probe,
        probe_trials: trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffops::{seminorms_exact, FiniteAlphabet};
    use crate::statlib::make_mean;

    fn params(a: f64, b: f64) -> WeakInteractionParams {
        WeakInteractionParams::new(a, b).unwrap()
    }

    #[test]
    fn linear_map_drops_second_derivative_term() {
        let p = chain_params(3.0, 0.0, params(1.5, 0.5)).unwrap();
        assert_eq!((p.a, p.b), (4.5, 1.5));
    }

    #[test]
    fn chain_reproduces_free_energy_params() {
        // additive f with (1, 0), map with d1 = beta, d2 = 2 beta^2
        for beta in [0.5, 1.0, 2.0] {
            let p = chain_params(beta, 2.0 * beta * beta, params(1.0, 0.0)).unwrap();
            assert!((p.a - beta).abs() < 1e-15);
            assert!((p.b - 2.0 * beta * beta).abs() < 1e-15);
        }
    }

    #[test]
    fn chain_reproduces_gibbs_kl_params() {
        for beta in [0.5_f64, 1.0, 2.0] {
            let d1 = 4.0 * beta * beta + 2.0 * beta;
            let d2 = 12.0 * beta.powi(3) + 6.0 * beta * beta;
            let p = chain_params(d1, d2, params(1.0, 0.0)).unwrap();
            assert!((p.a - d1).abs() < 1e-12);
            assert!((p.b - d2).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_map_keeps_params() {
        let ident = SmoothMap::new(|t| t, 1.0, 0.0, (0.0, 1.0)).unwrap();
        let f = make_mean(3).unwrap();
        let composed = compose_statistic(&ident, &f).unwrap();
        let p = composed.declared_params().unwrap();
        assert_eq!((p.a, p.b), (1.0, 0.0));
        assert_eq!(composed.eval(&[0.1, 0.5, 0.9]), f.eval(&[0.1, 0.5, 0.9]));
    }

    #[test]
    fn squared_mean_declared_and_exact_seminorms() {
        // F(t) = t^2 on [0,1]: d1 = 2, d2 = 2; mean has (1, 0) -> (2, 2)
        let square = SmoothMap::new(|t| t * t, 2.0, 2.0, (0.0, 1.0)).unwrap();
        let n = 3;
        let f = make_mean(n).unwrap();
        let composed = compose_statistic(&square, &f).unwrap();
        let p = composed.declared_params().unwrap();
        assert_eq!((p.a, p.b), (2.0, 2.0));
        let alphabet = FiniteAlphabet::new(vec![0.0, 1.0]).unwrap();
        let rep = seminorms_exact(&composed, &alphabet).unwrap();
        assert!(rep.m_value <= p.a / n as f64 + 1e-10);
        assert!(rep.j_value <= p.b / n as f64 + 1e-10);
        // exact values for (sum/3)^2 on {0,1}^3: M = 5/9, J = 2/3
        assert!((rep.m_value - 5.0 / 9.0).abs() < 1e-12);
        assert!((rep.j_value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "outside the declared domain")]
    fn domain_violation_panics_at_evaluation() {
        let map = SmoothMap::new(|t| t.sqrt(), 10.0, 10.0, (0.5, 1.0)).unwrap();
        let f = make_mean(2).unwrap();
        let composed = compose_statistic(&map, &f).unwrap();
        composed.eval(&[0.0, 0.0]);
    }

    #[test]
    fn probe_cross_checks_first_derivative() {
        let square = SmoothMap::new(|t| t * t, 2.0, 2.0, (0.0, 1.0)).unwrap();
        let probed = square.probe_first_derivative(1000, 3);
        assert!(probed <= 2.0 + 1e-9);
        assert!(probed > 1.5, "difference quotients should approach 2");
    }

    #[test]
    fn vector_route_matches_direct_free_energy() {
        // f: x -> (H(omega, x))_omega followed by the log-partition map
        use crate::statlib::GibbsModel;
        let beta = 1.0;
        let model = GibbsModel::new(
            vec![0.5, 0.25, 0.25],
            vec![vec![0.1, 0.9], vec![0.4, 0.2], vec![0.8, 0.6]],
            beta,
        )
        .unwrap();
        let n = 2;
        let direct = crate::statlib::make_free_energy(&model, n).unwrap();

        let m = model.clone();
        let h_vector = VectorStatistic::new("h", n, 3, move |x: &[usize]| {
            (0..3).map(|w| m.empirical_error(w, x)).collect()
        })
        .unwrap()
        .with_params(params(1.0, 0.0));

        let prior = [0.5_f64, 0.25, 0.25];
        let xi = VectorSmoothMap::new(
            move |g: &[f64]| {
                let terms: Vec<f64> = g
                    .iter()
                    .zip(prior.iter())
                    .map(|(gi, r)| r.ln() - beta * gi)
                    .collect();
                let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
            },
            beta,
            2.0 * beta * beta,
        )
        .unwrap();

        let composed = compose_vector(&xi, &h_vector).unwrap();
        let p = composed.declared_params().unwrap();
        assert!((p.a - beta).abs() < 1e-15);
        assert!((p.b - 2.0 * beta * beta).abs() < 1e-15);
        for x in [[0usize, 0], [0, 1], [1, 0], [1, 1]] {
            assert!((composed.eval(&x) - direct.eval(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn vector_probe_sees_weak_interactions_of_the_error_vector() {
        use crate::statlib::GibbsModel;
        let model = GibbsModel::new(
            vec![1.0, 1.0],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            1.0,
        )
        .unwrap();
        let n = 4;
        let m = model.clone();
        let h_vector = VectorStatistic::new("h", n, 2, move |x: &[usize]| {
            (0..2).map(|w| m.empirical_error(w, x)).collect()
        })
        .unwrap();
        let alphabet = FiniteAlphabet::uniform(vec![0usize, 1]).unwrap();
        let rep = probe_vector_seminorms(&h_vector, &alphabet, 400, 17).unwrap();
        // a Banach-valued sample average: M <= 1/n and J = 0
        assert!(rep.m_value <= 1.0 / n as f64 + 1e-12);
        assert!(rep.m_value > 0.0);
        assert!(rep.j_value.abs() < 1e-14);
    }
}
