//! Gibbs-algorithm statistics over a finite model space.
//!
//! A model space `Omega` with positive prior weights `rho`, a loss table
//! `l(omega, x) in [0, 1]` over a finite data alphabet and an inverse
//! temperature `beta` induce the empirical error
//! `H(omega, x) = (1/n) sum_i l(omega, x_i)` and the Gibbs posterior
//!
//! ```text
//! pi_x(omega) = Z(x)^{-1} rho(omega) e^{-beta H(omega, x)}.
//! ```
//!
//! The free energy `Lambda(x) = ln Z(x)` has `(beta, 2 beta^2)`-weak
//! interactions; the divergence `x -> KL(pi_x, pi)` against the posterior of
//! the true error `H_0(omega) = E[H(omega, X)]` has
//! `(4 beta^2 + 2 beta, 12 beta^3 + 6 beta^2)`-weak interactions.
//!
//! All exponentials go through max-shifted log-sum-exp. The true-measure
//! normalizer (`Z_0` below) is kept distinct from the empirical `Z(x)`.

use crate::diffops::{FiniteAlphabet, Statistic, WeakInteractionParams};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Finite model space, prior weights, loss table and inverse temperature.
///
/// The loss table has one row per model; data points are column indices.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    prior: Vec<f64>,
    losses: Vec<Vec<f64>>,
    beta: f64,
}

impl GibbsModel {
    pub fn new(prior: Vec<f64>, losses: Vec<Vec<f64>>, beta: f64) -> Result<Self> {
        if prior.is_empty() || prior.len() != losses.len() {
            return Err(Error::invalid(
                "prior and loss table must be nonempty and of equal length",
            ));
        }
        if prior.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::invalid("prior weights must be positive and finite"));
        }
        let width = losses[0].len();
        if width == 0 || losses.iter().any(|row| row.len() != width) {
            return Err(Error::invalid("loss table must be rectangular and nonempty"));
        }
        if losses.iter().flatten().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::invalid("losses must lie in [0, 1]"));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::invalid("inverse temperature must be finite and >= 0"));
        }
        Ok(Self {
            prior,
            losses,
            beta,
        })
    }

    pub fn model_count(&self) -> usize {
        self.prior.len()
    }

    /// Number of data-alphabet points the loss table covers.
    pub fn alphabet_size(&self) -> usize {
        self.losses[0].len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Empirical error of model `omega` on the sample `x`.
    pub fn empirical_error(&self, omega: usize, x: &[usize]) -> f64 {
        let row = &self.losses[omega];
        let sum: f64 = compensated_sum(&x.iter().map(|&xi| row[xi]).collect::<Vec<_>>());
        sum / x.len() as f64
    }

    /// True error of model `omega` under the measure `mu`.
    pub fn true_error(&self, omega: usize, mu: &FiniteAlphabet<usize>) -> Result<f64> {
        let probs = mu
            .probs()
            .ok_or_else(|| Error::invalid("true error requires probabilities"))?;
        let row = &self.losses[omega];
        let terms: Vec<f64> = mu
            .points()
            .iter()
            .zip(probs)
            .map(|(&pt, &p)| p * row[pt])
            .collect();
        Ok(compensated_sum(&terms))
    }

    /// Log-weights `ln rho(omega) - beta * energy[omega]`.
    fn log_weights(&self, energies: &[f64]) -> Vec<f64> {
        self.prior
            .iter()
            .zip(energies)
            .map(|(r, e)| r.ln() - self.beta * e)
            .collect()
    }
}

fn log_sum_exp(log_weights: &[f64]) -> f64 {
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_weights.iter().map(|lw| (lw - max).exp()).sum();
    max + sum.ln()
}

fn normalize(log_weights: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_weights);
    let mut probs: Vec<f64> = log_weights.iter().map(|lw| (lw - lse).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    probs
}

/// The Gibbs posterior `pi_x` over the model space; components are positive
/// and sum to 1.
pub fn gibbs_measure(model: &GibbsModel, x: &[usize]) -> Vec<f64> {
    let energies: Vec<f64> = (0..model.model_count())
        .map(|w| model.empirical_error(w, x))
        .collect();
    normalize(&model.log_weights(&energies))
}

/// The Gibbs posterior of the true error under `mu`.
pub fn gibbs_true_measure(model: &GibbsModel, mu: &FiniteAlphabet<usize>) -> Result<Vec<f64>> {
    let energies: Result<Vec<f64>> = (0..model.model_count())
        .map(|w| model.true_error(w, mu))
        .collect();
    Ok(normalize(&model.log_weights(&energies?)))
}

/// Free energy `Lambda(x) = ln sum_omega rho(omega) e^{-beta H(omega, x)}`
/// as a statistic of arity `n`; declared parameters `(beta, 2 beta^2)`.
pub fn make_free_energy(model: &GibbsModel, n: usize) -> Result<Statistic<usize>> {
    if n == 0 {
        return Err(Error::invalid("free energy requires n >= 1"));
    }
    let beta = model.beta();
    let model = model.clone();
    Ok(Statistic::new("gibbs_free_energy", n, move |x: &[usize]| {
        let energies: Vec<f64> = (0..model.model_count())
            .map(|w| model.empirical_error(w, x))
            .collect();
        log_sum_exp(&model.log_weights(&energies))
    })?
    .with_params(WeakInteractionParams::new(beta, 2.0 * beta * beta)?))
}

/// `x -> KL(pi_x, pi)` on the finite model space; declared parameters
/// `(4 beta^2 + 2 beta, 12 beta^3 + 6 beta^2)`. Both measures have full
/// support, so the divergence is finite, nonnegative, and zero exactly when
/// the measures coincide.
pub fn make_gibbs_kl(
    model: &GibbsModel,
    mu: &FiniteAlphabet<usize>,
    n: usize,
) -> Result<Statistic<usize>> {
    if n == 0 {
        return Err(Error::invalid("Gibbs KL requires n >= 1"));
    }
    if mu.points().iter().any(|&p| p >= model.alphabet_size()) {
        return Err(Error::invalid(
            "measure support exceeds the loss table width",
        ));
    }
    let beta = model.beta();
    let truth_energies: Result<Vec<f64>> = (0..model.model_count())
        .map(|w| model.true_error(w, mu))
        .collect();
    let truth_logw = model.log_weights(&truth_energies?);
    let truth_lse = log_sum_exp(&truth_logw);
    let truth_logp: Vec<f64> = truth_logw.iter().map(|lw| lw - truth_lse).collect();
    let model = model.clone();
    Ok(Statistic::new("gibbs_kl", n, move |x: &[usize]| {
        let energies: Vec<f64> = (0..model.model_count())
            .map(|w| model.empirical_error(w, x))
            .collect();
        let logw = model.log_weights(&energies);
        let lse = log_sum_exp(&logw);
        let mut kl = 0.0;
        for (lw, lq) in logw.iter().zip(truth_logp.iter()) {
            let lp = lw - lse;
            kl += lp.exp() * (lp - lq);
        }
        kl.max(0.0)
    })?
    .with_params(WeakInteractionParams::new(
        4.0 * beta * beta + 2.0 * beta,
        12.0 * beta.powi(3) + 6.0 * beta * beta,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_model(beta: f64) -> GibbsModel {
        GibbsModel::new(
            vec![0.5, 0.3, 0.2],
            vec![
                vec![0.0, 1.0],
                vec![0.5, 0.25],
                vec![0.9, 0.1],
            ],
            beta,
        )
        .unwrap()
    }

    fn fair_mu() -> FiniteAlphabet<usize> {
        FiniteAlphabet::weighted(vec![0usize, 1], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(GibbsModel::new(vec![], vec![], 1.0).is_err());
        assert!(GibbsModel::new(vec![1.0], vec![vec![1.5]], 1.0).is_err());
        assert!(GibbsModel::new(vec![0.0], vec![vec![0.5]], 1.0).is_err());
        assert!(GibbsModel::new(vec![1.0], vec![vec![0.5]], -1.0).is_err());
    }

    #[test]
    fn zero_temperature_returns_the_prior() {
        let model = demo_model(0.0);
        let pi = gibbs_measure(&model, &[0, 1, 1]);
        assert!((pi[0] - 0.5).abs() < 1e-15);
        assert!((pi[1] - 0.3).abs() < 1e-15);
        assert!((pi[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn single_model_is_a_point_mass() {
        let model = GibbsModel::new(vec![2.0], vec![vec![0.3, 0.8]], 1.5).unwrap();
        let pi = gibbs_measure(&model, &[1, 0]);
        assert_eq!(pi, vec![1.0]);
    }

    #[test]
    fn two_model_hand_computation() {
        // beta = 1, rho = (1, 1), losses H(1) = 0, H(2) = 1 on the sample:
        // pi = (e^0, e^{-1}) normalized
        let model = GibbsModel::new(
            vec![1.0, 1.0],
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            1.0,
        )
        .unwrap();
        let pi = gibbs_measure(&model, &[0, 1]);
        let z = 1.0 + (-1.0_f64).exp();
        assert!((pi[0] - 1.0 / z).abs() < 1e-15);
        assert!((pi[1] - (-1.0_f64).exp() / z).abs() < 1e-15);
    }

    #[test]
    fn measures_sum_to_one() {
        let model = demo_model(2.5);
        let pi = gibbs_measure(&model, &[0, 0, 1]);
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(pi.iter().all(|&p| p > 0.0));
        let pi0 = gibbs_true_measure(&model, &fair_mu()).unwrap();
        assert!((pi0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_energy_zero_beta_is_log_prior_mass() {
        let model = demo_model(0.0);
        let f = make_free_energy(&model, 2).unwrap();
        assert!((f.eval(&[0, 1]) - 1.0_f64.ln()).abs() < 1e-15);
        let p = f.declared_params().unwrap();
        assert_eq!((p.a, p.b), (0.0, 0.0));
    }

    #[test]
    fn free_energy_single_model_is_additive() {
        // |Omega| = 1: Lambda(x) = ln rho - beta H(omega, x)
        let model = GibbsModel::new(vec![0.7], vec![vec![0.2, 0.9]], 1.3).unwrap();
        let f = make_free_energy(&model, 2).unwrap();
        let x = [0usize, 1];
        let expect = 0.7_f64.ln() - 1.3 * (0.2 + 0.9) / 2.0;
        assert!((f.eval(&x) - expect).abs() < 1e-14);
        // additive implies exact J = 0
        let alphabet = FiniteAlphabet::new(vec![0usize, 1]).unwrap();
        let rep = crate::diffops::seminorms_exact(&f, &alphabet).unwrap();
        assert!(rep.j_value.abs() < 1e-14);
    }

    #[test]
    fn free_energy_seminorms_within_declared() {
        let model = demo_model(1.0);
        let n = 2;
        let f = make_free_energy(&model, n).unwrap();
        let alphabet = FiniteAlphabet::new(vec![0usize, 1]).unwrap();
        let rep = crate::diffops::seminorms_exact(&f, &alphabet).unwrap();
        let p = f.declared_params().unwrap();
        assert!(rep.m_value <= p.a / n as f64 + 1e-10);
        assert!(rep.j_value <= p.b / n as f64 + 1e-10);
    }

    #[test]
    fn free_energy_probed_seminorm_within_declared() {
        let beta = 1.0;
        let model = demo_model(beta);
        let n = 4;
        let f = make_free_energy(&model, n).unwrap();
        let sampler = fair_mu();
        let rep = crate::diffops::seminorms_probe(&f, &sampler, 500, 21).unwrap();
        assert!(rep.m_value <= beta / n as f64 + 1e-12);
        assert!(rep.m_value > 0.0);
    }

    #[test]
    fn kl_zero_beta_vanishes() {
        let model = demo_model(0.0);
        let f = make_gibbs_kl(&model, &fair_mu(), 3).unwrap();
        assert_eq!(f.eval(&[0, 1, 0]), 0.0);
    }

    #[test]
    fn kl_is_zero_when_empirical_matches_truth() {
        // symmetric losses: the sample (0, 1) has H = H_0 exactly
        let model = GibbsModel::new(
            vec![0.6, 0.4],
            vec![vec![0.2, 0.8], vec![0.9, 0.3]],
            1.7,
        )
        .unwrap();
        let f = make_gibbs_kl(&model, &fair_mu(), 2).unwrap();
        assert!(f.eval(&[0, 1]).abs() < 1e-14);
        // and positive elsewhere
        assert!(f.eval(&[0, 0]) > 0.0);
    }

    #[test]
    fn kl_seminorms_within_declared() {
        let model = demo_model(0.5);
        let n = 2;
        let f = make_gibbs_kl(&model, &fair_mu(), n).unwrap();
        let alphabet = FiniteAlphabet::new(vec![0usize, 1]).unwrap();
        let rep = crate::diffops::seminorms_exact(&f, &alphabet).unwrap();
        let p = f.declared_params().unwrap();
        assert!((p.a - 2.0).abs() < 1e-15); // 4 b^2 + 2 b at b = 1/2
        assert!(rep.m_value <= p.a / n as f64 + 1e-10);
        assert!(rep.j_value <= p.b / n as f64 + 1e-10);
    }
}
