//! Error functional of l2-regularized empirical risk minimization.
//!
//! For inputs in the d-dimensional unit ball, `g(x)` minimizes
//! `(1/n) sum_i l(<x_i, w>) + lambda |w|^2` and the statistic is the
//! generalization gap `Delta(x) = L(x) - Lhat(x)` between the true loss
//! under a finite surrogate measure and the empirical loss. The analytic
//! weak-interaction constants for `Delta` live in an external reference;
//! seminorms are available through probing only, so the statistic carries no
//! declared parameters.

use std::sync::Arc;

use crate::diffops::{FiniteAlphabet, Statistic};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// A convex, smooth, nonnegative loss with `l(0) = 1` and a uniform bound
/// on its second derivative.
type LossFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ConvexLoss {
    value: LossFn,
    deriv: LossFn,
    curvature: f64,
}

impl ConvexLoss {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        curvature: f64,
    ) -> Result<Self> {
        if !curvature.is_finite() || curvature <= 0.0 {
            return Err(Error::invalid("curvature bound must be positive and finite"));
        }
        let at_zero = value(0.0);
        if (at_zero - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "loss must satisfy l(0) = 1, got {at_zero}"
            )));
        }
        Ok(Self {
            value: Arc::new(value),
            deriv: Arc::new(deriv),
            curvature,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        (self.deriv)(t)
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }
}

/// Normalized logistic loss `l(t) = ln(1 + e^{-t}) / ln 2`: convex, smooth,
/// decreasing, `l(0) = 1`, second derivative at most `1/(4 ln 2)`.
pub fn logistic_loss() -> ConvexLoss {
    let ln2 = std::f64::consts::LN_2;
    ConvexLoss::new(
        move |t: f64| {
            // stable softplus of -t
            if t >= 0.0 {
                (-t).exp().ln_1p() / ln2
            } else {
                (-t + t.exp().ln_1p()) / ln2
            }
        },
        move |t: f64| -1.0 / ((1.0 + t.exp()) * ln2),
        0.25 / ln2,
    )
    .expect("logistic loss satisfies the constructor contract")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deterministic full-gradient descent on the regularized objective with a
/// fixed step from the smoothness bound. Returns the minimizer or a
/// numerical-failure error when the gradient-norm tolerance is not reached
/// within the iteration cap.
fn solve_erm(
    points: &[Vec<f64>],
    loss: &ConvexLoss,
    lambda: f64,
    dim: usize,
    grad_tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let n = points.len() as f64;
    let step = 1.0 / (loss.curvature() + 2.0 * lambda);
    let mut w = vec![0.0_f64; dim];
    let mut grad = vec![0.0_f64; dim];
    for _ in 0..max_iters {
        for g in grad.iter_mut() {
            *g = 0.0;
        }
        for p in points {
            let slope = loss.deriv(dot(p, &w)) / n;
            for (g, &pc) in grad.iter_mut().zip(p.iter()) {
                *g += slope * pc;
            }
        }
        for (g, &wc) in grad.iter_mut().zip(w.iter()) {
            *g += 2.0 * lambda * wc;
        }
        let norm = dot(&grad, &grad).sqrt();
        if norm <= grad_tol {
            return Ok(w);
        }
        for (wc, &g) in w.iter_mut().zip(grad.iter()) {
            *wc -= step * g;
        }
    }
    Err(Error::Numerical(format!(
        "ERM solver did not reach gradient norm {grad_tol} within {max_iters} iterations"
    )))
}

/// The generalization-gap statistic `Delta(x) = L(x) - Lhat(x)`.
///
/// `mu` is a finite surrogate for the data distribution used to evaluate the
/// true loss exactly; its points must lie in the unit ball of dimension
/// `dim`. The inner solver runs to `grad_tol` with an iteration cap of 10^5;
/// evaluation panics if it fails to converge.
pub fn make_l2_reg_delta(
    dim: usize,
    loss: ConvexLoss,
    lambda: f64,
    n: usize,
    mu: FiniteAlphabet<Vec<f64>>,
    grad_tol: f64,
) -> Result<Statistic<Vec<f64>>> {
    if dim == 0 || n == 0 {
        return Err(Error::invalid("l2 delta requires dim >= 1 and n >= 1"));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::invalid(format!(
            "regularization parameter must lie in (0, 1), got {lambda}"
        )));
    }
    if grad_tol.is_nan() || grad_tol <= 0.0 {
        return Err(Error::invalid("gradient tolerance must be positive"));
    }
    let probs = mu
        .probs()
        .ok_or_else(|| Error::invalid("surrogate measure requires probabilities"))?
        .to_vec();
    for p in mu.points() {
        if p.len() != dim {
            return Err(Error::invalid(format!(
                "surrogate point of dimension {} does not match dim {dim}",
                p.len()
            )));
        }
        if dot(p, p) > 1.0 + 1e-9 {
            return Err(Error::invalid("surrogate points must lie in the unit ball"));
        }
    }
    let surrogate: Vec<Vec<f64>> = mu.points().to_vec();
    const MAX_ITERS: usize = 100_000;

    Statistic::new("l2_delta", n, move |x: &[Vec<f64>]| {
        let w = solve_erm(x, &loss, lambda, dim, grad_tol, MAX_ITERS)
            .expect("ERM solver failed to converge at evaluation");
        let empirical: Vec<f64> = x.iter().map(|p| loss.value(dot(p, &w))).collect();
        let l_hat = compensated_sum(&empirical) / x.len() as f64;
        let truth: Vec<f64> = surrogate
            .iter()
            .zip(probs.iter())
            .map(|(p, &pr)| pr * loss.value(dot(p, &w)))
            .collect();
        compensated_sum(&truth) - l_hat
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffops::seminorms_probe;

    fn scalar_ball(points: &[f64]) -> FiniteAlphabet<Vec<f64>> {
        let pts: Vec<Vec<f64>> = points.iter().map(|&v| vec![v]).collect();
        FiniteAlphabet::uniform(pts).unwrap()
    }

    #[test]
    fn loss_contract_is_enforced() {
        assert!(ConvexLoss::new(|t| t + 2.0, |_| 1.0, 1.0).is_err());
        assert!(ConvexLoss::new(|_| 1.0, |_| 0.0, 0.0).is_err());
        let l = logistic_loss();
        assert!((l.value(0.0) - 1.0).abs() < 1e-12);
        assert!(l.value(5.0) < l.value(-5.0));
    }

    #[test]
    fn flat_loss_gives_zero_gap() {
        // constant loss: g = 0 immediately and L = Lhat everywhere
        let flat = ConvexLoss::new(|_| 1.0, |_| 0.0, 1.0).unwrap();
        let mu = scalar_ball(&[0.0, 0.5, 1.0]);
        let f = make_l2_reg_delta(1, flat, 0.9, 3, mu, 1e-10).unwrap();
        let x = vec![vec![0.2], vec![0.8], vec![0.5]];
        assert!(f.eval(&x).abs() < 1e-12);
    }

    #[test]
    fn gap_is_permutation_invariant() {
        let mu = scalar_ball(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let f = make_l2_reg_delta(1, logistic_loss(), 0.5, 3, mu, 1e-10).unwrap();
        let a = f.eval(&[vec![0.1], vec![0.9], vec![0.4]]);
        let b = f.eval(&[vec![0.9], vec![0.4], vec![0.1]]);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn probed_m_decreases_with_stronger_regularization() {
        let n = 3;
        let mut probed = Vec::new();
        for lambda in [0.1, 0.5, 0.9] {
            let mu = scalar_ball(&[0.0, 0.25, 0.5, 0.75, 1.0]);
            let sampler = scalar_ball(&[0.0, 0.25, 0.5, 0.75, 1.0]);
            let f = make_l2_reg_delta(1, logistic_loss(), lambda, n, mu, 1e-10).unwrap();
            let rep = seminorms_probe(&f, &sampler, 300, 11).unwrap();
            probed.push(rep.m_value);
        }
        assert!(probed[0] >= probed[1]);
        assert!(probed[1] >= probed[2]);
    }

    #[test]
    fn parameter_validation() {
        let mu = scalar_ball(&[0.0, 1.0]);
        assert!(make_l2_reg_delta(1, logistic_loss(), 0.0, 3, mu.clone(), 1e-10).is_err());
        assert!(make_l2_reg_delta(1, logistic_loss(), 1.0, 3, mu.clone(), 1e-10).is_err());
        assert!(make_l2_reg_delta(2, logistic_loss(), 0.5, 3, mu, 1e-10).is_err());
        let outside = FiniteAlphabet::uniform(vec![vec![2.0], vec![0.0]]).unwrap();
        assert!(make_l2_reg_delta(1, logistic_loss(), 0.5, 3, outside, 1e-10).is_err());
    }
}
