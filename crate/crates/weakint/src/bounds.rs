//! Deviation-bound calculators: McDiarmid, Bernstein (oracle and
//! weak-interaction forms), the variance confidence interval, the empirical
//! Bernstein bound, normal-approximation bounds, the empirical normality
//! test, and a Wasserstein-1 distance to the standard normal used for
//! validation.
//!
//! Every calculator returns the deviation `epsilon` such that the named
//! inequality gives `Pr{f - E[f] > epsilon} <= delta` (or the corresponding
//! interval), evaluated in double precision exactly as stated.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::diffops::WeakInteractionParams;
use crate::error::{Error, Result};

/// Which inequality produced a [`DeviationBound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    Mcdiarmid,
    BernsteinOracle,
    BernsteinWeak,
    EmpiricalBernstein,
}

/// Constants a calculator consumed, echoed back for reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundInputs {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub m: Option<f64>,
    pub j: Option<f64>,
    pub n: Option<usize>,
    /// The variance proxy used: `v_f`, `sigma^2` or `E[Sigma^2]`.
    pub variance_proxy: Option<f64>,
}

/// A one-sided deviation bound at confidence `1 - delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationBound {
    pub epsilon: f64,
    pub delta: f64,
    pub method: BoundMethod,
    pub inputs: BoundInputs,
}

/// Two-sided confidence interval for `sigma(f)` from the variance estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceReport {
    pub v_value: f64,
    /// Lower endpoint, clamped at 0.
    pub sigma_lower: f64,
    /// Upper endpoint, intersected with the a-priori bound `a / sqrt(4n)`.
    pub sigma_upper: f64,
    pub delta: f64,
    pub k_minus: f64,
    pub k_plus: f64,
    pub one_sided: bool,
}

/// Interval for `sqrt(E[Sigma^2(f)])` from exact seminorms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawVarianceBand {
    pub lower: f64,
    pub upper: f64,
}

/// Outcome of the empirical normality test.
///
/// `dn_bound` is present exactly when the test event held; when the test
/// barely passes the bound can be huge since the estimate sits in the
/// denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalityReport {
    pub test_a_passed: bool,
    pub dn_bound: Option<f64>,
    pub empirical_w1: Option<f64>,
    pub delta: f64,
}

/// `K_-(a, b) = b/2 + sqrt(2 a^2 + 8 b^2)`.
pub fn k_minus(params: WeakInteractionParams) -> f64 {
    params.b / 2.0 + (2.0 * params.a * params.a + 8.0 * params.b * params.b).sqrt()
}

/// `K_+(a, b) = sqrt(2 a^2 + 8 b^2)`.
pub fn k_plus(params: WeakInteractionParams) -> f64 {
    (2.0 * params.a * params.a + 8.0 * params.b * params.b).sqrt()
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// Bounded-difference inequality: inverting
/// `exp(-2 t^2 / (n M^2)) = delta` gives
/// `epsilon = M sqrt(n ln(1/delta) / 2)`.
pub fn mcdiarmid_epsilon(m: f64, n: usize, delta: f64) -> Result<DeviationBound> {
    check_delta(delta)?;
    if m.is_nan() || m < 0.0 || n == 0 {
        return Err(Error::invalid("mcdiarmid requires M >= 0 and n >= 1"));
    }
    let epsilon = m * (n as f64 * (1.0 / delta).ln() / 2.0).sqrt();
    Ok(DeviationBound {
        epsilon,
        delta,
        method: BoundMethod::Mcdiarmid,
        inputs: BoundInputs {
            m: Some(m),
            n: Some(n),
            ..BoundInputs::default()
        },
    })
}

/// Bernstein-type inequality in terms of the oracle quantities:
/// `epsilon = sqrt(2 E[Sigma^2] ln(1/delta)) + (2M/3 + J) ln(1/delta)`.
pub fn bernstein_epsilon_oracle(
    e_sigma2: f64,
    m: f64,
    j: f64,
    delta: f64,
) -> Result<DeviationBound> {
    check_delta(delta)?;
    if [e_sigma2, m, j].iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::invalid("bernstein inputs must be nonnegative"));
    }
    let lt = (1.0 / delta).ln();
    let epsilon = (2.0 * e_sigma2 * lt).sqrt() + (2.0 * m / 3.0 + j) * lt;
    Ok(DeviationBound {
        epsilon,
        delta,
        method: BoundMethod::BernsteinOracle,
        inputs: BoundInputs {
            m: Some(m),
            j: Some(j),
            variance_proxy: Some(e_sigma2),
            ..BoundInputs::default()
        },
    })
}

/// Bernstein bound for `(a, b)`-weak interactions, stated for
/// `delta <= 1/e`:
/// `epsilon = sqrt(2 sigma^2 ln(1/delta)) + (2a/3 + 3b/2) ln(1/delta) / n`.
pub fn bernstein_epsilon_weak(
    params: WeakInteractionParams,
    sigma2: f64,
    n: usize,
    delta: f64,
) -> Result<DeviationBound> {
    check_delta(delta)?;
    if delta > 1.0 / std::f64::consts::E {
        return Err(Error::invalid(format!(
            "the weak-interaction Bernstein bound is stated for delta <= 1/e, got {delta}"
        )));
    }
    if sigma2.is_nan() || sigma2 < 0.0 || n == 0 {
        return Err(Error::invalid(
            "weak bernstein requires sigma2 >= 0 and n >= 1",
        ));
    }
    let lt = (1.0 / delta).ln();
    let epsilon =
        (2.0 * sigma2 * lt).sqrt() + (2.0 * params.a / 3.0 + 1.5 * params.b) * lt / n as f64;
    Ok(DeviationBound {
        epsilon,
        delta,
        method: BoundMethod::BernsteinWeak,
        inputs: BoundInputs {
            a: Some(params.a),
            b: Some(params.b),
            n: Some(n),
            variance_proxy: Some(sigma2),
            ..BoundInputs::default()
        },
    })
}

/// Confidence interval for `sigma(f)` from an observed `v_f`:
///
/// ```text
/// sqrt(v) - K_- sqrt(ln(2/delta))/n <= sigma(f) <= sqrt(v) + K_+ sqrt(ln(2/delta))/n
/// ```
///
/// with `2/delta` replaced by `1/delta` for one-sided use. The lower endpoint
/// is clamped at 0 and the upper endpoint intersected with the a-priori bound
/// `a / sqrt(4n)`, which holds deterministically. When `v` is so large that
/// the lower endpoint would cross the a-priori cap (possible only outside the
/// coverage event), the interval collapses to the cap.
pub fn variance_confidence_interval(
    v_value: f64,
    params: WeakInteractionParams,
    n: usize,
    delta: f64,
    one_sided: bool,
) -> Result<VarianceReport> {
    check_delta(delta)?;
    if v_value.is_nan() || v_value < 0.0 {
        return Err(Error::invalid(format!(
            "variance estimate must be nonnegative, got {v_value}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let km = k_minus(params);
    let kp = k_plus(params);
    let lt = if one_sided {
        (1.0 / delta).ln()
    } else {
        (2.0 / delta).ln()
    };
    let root = v_value.sqrt();
    let width = lt.sqrt() / n as f64;
    let apriori = params.a / (4.0 * n as f64).sqrt();
    let sigma_upper = (root + kp * width).min(apriori);
    Ok(VarianceReport {
        v_value,
        sigma_lower: (root - km * width).max(0.0).min(sigma_upper),
        sigma_upper,
        delta,
        k_minus: km,
        k_plus: kp,
        one_sided,
    })
}

/// Band for `sqrt(E[Sigma^2(f)])` when exact seminorms are known:
/// `|sqrt(E[Sigma^2]) - sqrt(v_f)| <= sqrt((2M^2 + 8J^2) ln(2/delta))`.
pub fn raw_variance_band(v_value: f64, m: f64, j: f64, delta: f64) -> Result<RawVarianceBand> {
    check_delta(delta)?;
    if [v_value, m, j].iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::invalid("raw variance band inputs must be nonnegative"));
    }
    let half = ((2.0 * m * m + 8.0 * j * j) * (2.0 / delta).ln()).sqrt();
    let root = v_value.sqrt();
    Ok(RawVarianceBand {
        lower: (root - half).max(0.0),
        upper: root + half,
    })
}

/// Fully empirical Bernstein bound:
/// `epsilon = sqrt(2 v ln(2/delta)) + (8a/3 + 5b) ln(2/delta) / n`.
pub fn empirical_bernstein_epsilon(
    v_value: f64,
    params: WeakInteractionParams,
    n: usize,
    delta: f64,
) -> Result<DeviationBound> {
    check_delta(delta)?;
    if v_value.is_nan() || v_value < 0.0 || n == 0 {
        return Err(Error::invalid(
            "empirical bernstein requires v >= 0 and n >= 1",
        ));
    }
    let lt = (2.0 / delta).ln();
    let epsilon =
        (2.0 * v_value * lt).sqrt() + (8.0 * params.a / 3.0 + 5.0 * params.b) * lt / n as f64;
    Ok(DeviationBound {
        epsilon,
        delta,
        method: BoundMethod::EmpiricalBernstein,
        inputs: BoundInputs {
            a: Some(params.a),
            b: Some(params.b),
            n: Some(n),
            variance_proxy: Some(v_value),
            ..BoundInputs::default()
        },
    })
}

/// Normal-approximation bound in Wasserstein distance:
/// `d_N <= sqrt(n) M (J + M) / sigma^2 + n M^3 / (2 sigma^3)`.
///
/// Supplying a lower bound for `sigma` yields a valid upper bound.
pub fn normality_bound(m: f64, j: f64, sigma: f64, n: usize) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::invalid(format!(
            "normality bound requires sigma > 0, got {sigma}"
        )));
    }
    if m.is_nan() || m < 0.0 || j.is_nan() || j < 0.0 || n == 0 {
        return Err(Error::invalid("normality bound requires M, J >= 0 and n >= 1"));
    }
    let nf = n as f64;
    Ok(nf.sqrt() * m * (j + m) / (sigma * sigma) + nf * m.powi(3) / (2.0 * sigma.powi(3)))
}

/// Empirical normality test.
///
/// Event `A(delta)`: `sqrt(v)/2 >= K_-(a,b) sqrt(ln(1/delta)) / n`. When it
/// holds, with probability at least `1 - delta`,
///
/// ```text
/// d_N <= 4 (a^2 + a b) / (v n^{3/2}) + 4 a^3 / (v^{3/2} n^2).
/// ```
///
/// When the test fails the report carries no bound: `n` may simply be too
/// small for the variance to be resolvable.
pub fn empirical_normality_test(
    v_value: f64,
    params: WeakInteractionParams,
    n: usize,
    delta: f64,
) -> Result<NormalityReport> {
    check_delta(delta)?;
    if v_value.is_nan() || v_value < 0.0 || n == 0 {
        return Err(Error::invalid(
            "normality test requires v >= 0 and n >= 1",
        ));
    }
    let nf = n as f64;
    let threshold = k_minus(params) * (1.0 / delta).ln().sqrt() / nf;
    let passed = v_value.sqrt() / 2.0 >= threshold && v_value > 0.0;
    let dn_bound = if passed {
        let a = params.a;
        let b = params.b;
        Some(4.0 * (a * a + a * b) / (v_value * nf.powf(1.5))
            + 4.0 * a.powi(3) / (v_value.powf(1.5) * nf * nf))
    } else {
        None
    };
    Ok(NormalityReport {
        test_a_passed: passed,
        dn_bound,
        empirical_w1: None,
        delta,
    })
}

/// Standard normal density.
fn phi(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Antiderivative of the standard normal CDF: `G(t) = t Phi(t) + phi(t)`.
fn cdf_antiderivative(normal: &Normal, t: f64) -> f64 {
    t * normal.cdf(t) + phi(t)
}

/// Empirical Wasserstein-1 distance between the standardized sample and the
/// standard normal, standardizing by the sample mean and the population
/// standard deviation of the sample.
pub fn wasserstein1_to_standard_normal(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let mean = crate::numeric::mean(samples);
    let sd = crate::numeric::population_variance(samples).sqrt();
    wasserstein1_standardized(samples, mean, sd)
}

/// Same distance, standardizing by caller-supplied location and scale
/// (e.g. the exact mean and standard deviation when they are known).
///
/// Computes `int |F_emp(t) - Phi(t)| dt` exactly, piecewise between the
/// sorted standardized points via the closed form `G(t) = t Phi(t) + phi(t)`
/// plus the two tail integrals; inside a piece the crossing point of the
/// constant empirical CDF with `Phi` is resolved through the normal
/// quantile function.
pub fn wasserstein1_standardized(samples: &[f64], location: f64, scale: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::invalid(format!(
            "standardization scale must be positive and finite, got {scale}"
        )));
    }
    let mut z: Vec<f64> = samples.iter().map(|x| (x - location) / scale).collect();
    z.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    if !z[0].is_finite() || !z[z.len() - 1].is_finite() {
        return Err(Error::Numerical("non-finite standardized sample".into()));
    }

    let normal = Normal::new(0.0, 1.0).expect("standard normal parameters");
    let m = z.len() as f64;
    let g = |t: f64| cdf_antiderivative(&normal, t);

    // left tail: F_emp = 0, integral of Phi up to z[0]
    let mut total = g(z[0]);
    // interior pieces: F_emp = (i+1)/m on [z[i], z[i+1])
    for i in 0..z.len() - 1 {
        let (u, v) = (z[i], z[i + 1]);
        if u >= v {
            continue;
        }
        let c = (i + 1) as f64 / m;
        let t_star = normal.inverse_cdf(c);
        total += if t_star <= u {
            (g(v) - g(u)) - c * (v - u)
        } else if t_star >= v {
            c * (v - u) - (g(v) - g(u))
        } else {
            (c * (t_star - u) - (g(t_star) - g(u))) + ((g(v) - g(t_star)) - c * (v - t_star))
        };
    }
    // right tail: integral of 1 - Phi from the last point
    let last = z[z.len() - 1];
    total += g(last) - last;

    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, b: f64) -> WeakInteractionParams {
        WeakInteractionParams::new(a, b).unwrap()
    }

    #[test]
    fn mcdiarmid_mean_shape() {
        // M = 1/n, delta = e^{-2}: epsilon = 1/sqrt(n)
        for n in [4usize, 25, 100] {
            let b = mcdiarmid_epsilon(1.0 / n as f64, n, (-2.0_f64).exp()).unwrap();
            assert!((b.epsilon - 1.0 / (n as f64).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn mcdiarmid_edge_cases() {
        let near_one = mcdiarmid_epsilon(0.5, 10, 1.0 - 1e-12).unwrap();
        assert!(near_one.epsilon < 1e-5);
        assert_eq!(mcdiarmid_epsilon(0.0, 10, 0.5).unwrap().epsilon, 0.0);
        assert!(mcdiarmid_epsilon(0.5, 10, 0.0).is_err());
        assert!(mcdiarmid_epsilon(0.5, 10, 1.0).is_err());
    }

    #[test]
    fn bernstein_oracle_values() {
        assert_eq!(
            bernstein_epsilon_oracle(0.0, 0.0, 0.0, 0.5).unwrap().epsilon,
            0.0
        );
        let b = bernstein_epsilon_oracle(1.0, 0.0, 0.0, (-1.0_f64).exp()).unwrap();
        assert!((b.epsilon - 2.0_f64.sqrt()).abs() < 1e-14);
        // classical shape for the mean: E[Sigma^2] = sigma2/n with M = 1/n
        let n = 100.0;
        let b = bernstein_epsilon_oracle(0.25 / n, 1.0 / n, 0.0, 0.1).unwrap();
        let lt = (10.0_f64).ln();
        let direct = (2.0 * 0.25 / n * lt).sqrt() + (2.0 / (3.0 * n)) * lt;
        assert!((b.epsilon - direct).abs() < 1e-14);
    }

    #[test]
    fn bernstein_weak_frozen_value() {
        // a=1, b=0, n=100, sigma2=0.0025, delta=1/e:
        // sqrt(0.005) + (2/3)/100
        let delta = 1.0 / std::f64::consts::E;
        let b = bernstein_epsilon_weak(params(1.0, 0.0), 0.0025, 100, delta).unwrap();
        let expect = 0.005_f64.sqrt() + 2.0 / 300.0;
        assert!((b.epsilon - expect).abs() < 1e-14);
        assert!((b.epsilon - 0.07737_73447_85321_42).abs() < 1e-14);
    }

    #[test]
    fn bernstein_weak_delta_restriction() {
        let p = params(1.0, 0.0);
        assert!(bernstein_epsilon_weak(p, 0.01, 10, 0.5).is_err());
        assert!(bernstein_epsilon_weak(p, 0.01, 10, 1.0 / std::f64::consts::E).is_ok());
        assert_eq!(
            bernstein_epsilon_weak(params(0.0, 0.0), 0.0, 10, 0.1)
                .unwrap()
                .epsilon,
            0.0
        );
    }

    #[test]
    fn bernstein_weak_linear_in_b() {
        let delta = 0.05;
        let n = 50;
        let base = bernstein_epsilon_weak(params(1.0, 1.0), 0.01, n, delta)
            .unwrap()
            .epsilon;
        let doubled = bernstein_epsilon_weak(params(1.0, 2.0), 0.01, n, delta)
            .unwrap()
            .epsilon;
        let increment = 1.5 * (1.0 / delta).ln() / n as f64;
        assert!((doubled - base - increment).abs() < 1e-14);
    }

    #[test]
    fn variance_interval_constants() {
        let r = variance_confidence_interval(0.0025, params(1.0, 0.0), 100, 0.05, false).unwrap();
        assert!((r.k_minus - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!((r.k_plus - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!(r.sigma_lower <= r.sigma_upper);
    }

    #[test]
    fn variance_interval_collapses_on_inconsistent_estimates() {
        // v far above the range the declared parameters allow: the a-priori
        // cap crosses the lower endpoint and the interval degenerates
        let r = variance_confidence_interval(0.01, params(1.0, 0.0), 100, 0.05, false).unwrap();
        assert!(r.sigma_lower <= r.sigma_upper);
        assert_eq!(r.sigma_upper, 0.05);
        assert_eq!(r.sigma_lower, 0.05);
    }

    #[test]
    fn variance_interval_clamps_at_zero() {
        let r = variance_confidence_interval(0.0, params(1.0, 1.0), 10, 0.05, false).unwrap();
        assert_eq!(r.sigma_lower, 0.0);
    }

    #[test]
    fn variance_interval_sample_mean_width() {
        // for the sample mean: |sqrt(v) - sigma| <= (1/n) sqrt(2 ln(2/delta))
        let n = 50;
        let delta = 0.1;
        let v = 0.0036;
        let r = variance_confidence_interval(v, params(1.0, 0.0), n, delta, false).unwrap();
        let width = (2.0 * (2.0 / delta).ln()).sqrt() / n as f64;
        assert!((r.v_value.sqrt() - r.sigma_lower - width).abs() < 1e-14);
        // upper side may additionally be capped by the a-priori bound
        let uncapped = v.sqrt() + width;
        let apriori = 1.0 / (4.0 * n as f64).sqrt();
        assert!((r.sigma_upper - uncapped.min(apriori)).abs() < 1e-15);
    }

    #[test]
    fn variance_interval_rejects_negative_v() {
        assert!(variance_confidence_interval(-1e-9, params(1.0, 0.0), 10, 0.05, false).is_err());
    }

    #[test]
    fn raw_band_reduces_to_interval_width() {
        // M = 1/n, J = 0 recovers the (a,b) = (1,0) width
        let n = 20;
        let band = raw_variance_band(0.01, 1.0 / n as f64, 0.0, 0.05).unwrap();
        let half = (2.0_f64).sqrt() * (2.0_f64 / 0.05).ln().sqrt() / n as f64;
        assert!((band.upper - 0.1 - half).abs() < 1e-14);
        let zero = raw_variance_band(0.04, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(zero.lower, 0.2);
        assert_eq!(zero.upper, 0.2);
    }

    #[test]
    fn empirical_bernstein_frozen_value() {
        // v=0, a=1, b=0, n=100, delta=0.05: (8/3) ln(40) / 100
        let b = empirical_bernstein_epsilon(0.0, params(1.0, 0.0), 100, 0.05).unwrap();
        let expect = 8.0 / 3.0 * 40.0_f64.ln() / 100.0;
        assert!((b.epsilon - expect).abs() < 1e-15);
        assert!((b.epsilon - 0.09837_01187_76371_64).abs() < 1e-14);
    }

    #[test]
    fn empirical_bernstein_scaling_in_n() {
        let p = params(2.0, 1.0);
        let delta = 0.02;
        let b1 = empirical_bernstein_epsilon(0.0, p, 40, delta).unwrap().epsilon;
        let b2 = empirical_bernstein_epsilon(0.0, p, 80, delta).unwrap().epsilon;
        assert!((b1 - 2.0 * b2).abs() < 1e-14);
        assert!(empirical_bernstein_epsilon(0.1, p, 40, 2.0).is_err());
    }

    #[test]
    fn bound_constants_are_literal() {
        // the empirical constant is exactly (8a/3 + 5b), the oracle-form
        // weak constant exactly (2a/3 + 3b/2)
        let (a, b) = (1.7, 0.9);
        let n = 73;
        let delta = 0.05;
        let eb = empirical_bernstein_epsilon(0.0, params(a, b), n, delta)
            .unwrap()
            .epsilon;
        assert!((eb - (8.0 * a / 3.0 + 5.0 * b) * (2.0_f64 / delta).ln() / n as f64).abs() < 1e-15);
        let bw = bernstein_epsilon_weak(params(a, b), 0.0, n, 0.05).unwrap().epsilon;
        assert!((bw - (2.0 * a / 3.0 + 1.5 * b) * (1.0_f64 / 0.05).ln() / n as f64).abs() < 1e-15);
    }

    #[test]
    fn normality_bound_additive_rate() {
        // M = 1/n, J = 0, sigma = 1/(2 sqrt(n)): bound = 8/sqrt(n)
        for n in [16usize, 100, 1024] {
            let nf = n as f64;
            let sigma = 1.0 / (2.0 * nf.sqrt());
            let bound = normality_bound(1.0 / nf, 0.0, sigma, n).unwrap();
            assert!((bound - 8.0 / nf.sqrt()).abs() < 1e-9 * bound);
        }
    }

    #[test]
    fn normality_bound_weak_interaction_form() {
        // with M = a/n, J = b/n and sigma = C n^{-p}:
        // bound <= (C a (a+b) + a^3) / (C^3 n^{2-3p})
        let (a, b, c, p) = (1.5, 0.5, 0.3, 0.55);
        for n in [50usize, 500] {
            let nf = n as f64;
            let sigma = c * nf.powf(-p);
            let bound = normality_bound(a / nf, b / nf, sigma, n).unwrap();
            let corollary = (c * a * (a + b) + a.powi(3)) / (c.powi(3) * nf.powf(2.0 - 3.0 * p));
            assert!(bound <= corollary * (1.0 + 1e-12));
        }
    }

    #[test]
    fn normality_bound_edges() {
        assert_eq!(normality_bound(0.0, 0.5, 1.0, 10).unwrap(), 0.0);
        assert!(normality_bound(0.1, 0.0, 0.0, 10).is_err());
        assert!(normality_bound(0.1, 0.0, -1.0, 10).is_err());
    }

    #[test]
    fn normality_test_frozen_example() {
        // a=1, b=0, n=10^4, delta=0.05, v=0.25/10^4:
        // A holds, bound = 4/(v n^{3/2}) + 4/(v^{3/2} n^2) = 0.16 + 0.32
        let v = 0.25 / 1e4;
        let r = empirical_normality_test(v, params(1.0, 0.0), 10_000, 0.05).unwrap();
        assert!(r.test_a_passed);
        let bound = r.dn_bound.unwrap();
        assert!((bound - 0.48).abs() < 1e-12, "bound = {bound}");
    }

    #[test]
    fn normality_test_zero_variance_is_inconclusive() {
        let r = empirical_normality_test(0.0, params(1.0, 0.0), 100, 0.05).unwrap();
        assert!(!r.test_a_passed);
        assert!(r.dn_bound.is_none());
    }

    #[test]
    fn normality_test_bound_monotone_in_v() {
        let p = params(1.0, 0.5);
        let mut prev = f64::INFINITY;
        for v in [1e-4, 2e-4, 5e-4, 1e-3] {
            let r = empirical_normality_test(v, p, 10_000, 0.05).unwrap();
            if let Some(b) = r.dn_bound {
                assert!(b <= prev);
                prev = b;
            }
        }
        assert!(prev < f64::INFINITY, "at least one test must pass");
    }

    #[test]
    fn wasserstein_two_point_frozen_value() {
        // {-1, +1} is already standardized; the exact integral is known
        let w = wasserstein1_to_standard_normal(&[-1.0, 1.0]).unwrap();
        assert!((w - 0.5353773215478798).abs() < 1e-9, "w = {w}");
    }

    #[test]
    fn wasserstein_matches_quadrature() {
        // independent check: trapezoid quadrature of |F_emp - Phi|
        let samples = [-1.3, -0.4, 0.2, 0.25, 1.9];
        let mean = crate::numeric::mean(&samples);
        let sd = crate::numeric::population_variance(&samples).sqrt();
        let closed = wasserstein1_to_standard_normal(&samples).unwrap();

        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut z: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
        z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let f_emp = |t: f64| z.iter().filter(|&&v| v <= t).count() as f64 / z.len() as f64;
        let (lo, hi, steps) = (-10.0, 10.0, 400_000);
        let h = (hi - lo) / steps as f64;
        let mut quad = 0.0;
        for i in 0..steps {
            let t0 = lo + i as f64 * h;
            let t1 = t0 + h;
            quad += 0.5 * h * ((f_emp(t0) - normal.cdf(t0)).abs() + (f_emp(t1) - normal.cdf(t1)).abs());
        }
        assert!((closed - quad).abs() < 1e-4, "closed {closed} vs quad {quad}");
    }

    #[test]
    fn wasserstein_of_normal_quantiles_is_small() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let m = 10_000;
        let q: Vec<f64> = (1..=m)
            .map(|i| normal.inverse_cdf((i as f64 - 0.5) / m as f64))
            .collect();
        let w = wasserstein1_standardized(&q, 0.0, 1.0).unwrap();
        assert!(w <= 0.01, "w = {w}");
    }

    #[test]
    fn wasserstein_affine_invariance() {
        let samples = [0.1, 0.7, 0.3, 0.9, 0.5, 0.2];
        let w0 = wasserstein1_to_standard_normal(&samples).unwrap();
        let mapped: Vec<f64> = samples.iter().map(|x| 2.5 * x - 3.0).collect();
        let w1 = wasserstein1_to_standard_normal(&mapped).unwrap();
        assert!((w0 - w1).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_rejects_degenerate_samples() {
        assert!(wasserstein1_to_standard_normal(&[1.0]).is_err());
        assert!(wasserstein1_to_standard_normal(&[2.0, 2.0, 2.0]).is_err());
    }
}
