//! Name-based statistic registry for the experiment harness.
//!
//! Resolvable spec strings (colon-separated, `key=value` options):
//!
//! - `mean`
//! - `ustat:m=2:kernel=var` / `ustat:m=3:kernel=prod`
//! - `vstat:m=2:kernel=prod`
//! - `lstat:uniform` / `lstat:median:zeta=0.1`
//! - `gibbs:fe:beta=1:omega=3` / `gibbs:kl:beta=1:omega=3`
//! - `l2delta:lambda=0.5`
//!
//! Gibbs statistics act on the indices of a finite data alphabet and use a
//! built-in loss table derived from a fixed hash seed, so results are
//! reproducible without shipping a table. `l2delta` embeds scalar data in
//! the 1-dimensional unit ball and evaluates the true loss against the
//! supplied finite alphabet, or against a fixed 32-point midpoint grid on
//! [0, 1] when the data distribution is continuous.

use super::{
    kernel_half_squared_distance, kernel_product, logistic_loss, make_free_energy,
    make_gibbs_kl, make_l2_reg_delta, make_l_statistic, make_mean, make_smoothed_median,
    make_u_statistic, make_v_statistic, GibbsModel, LWeight,
};
use crate::diffops::{FiniteAlphabet, Statistic};
use crate::error::{Error, Result};
use crate::numeric::{hash_to_unit, splitmix64};

/// Seed for the built-in Gibbs loss table.
const GIBBS_TABLE_SEED: u64 = 0x6172_7469_6661_6374;

/// Finite-alphabet context a statistic may need at resolution time.
///
/// `points`/`probs` describe the data distribution when it is finite (the
/// harness canonicalizes `bernoulli:p` to a two-point alphabet).
#[derive(Debug, Clone, Default)]
pub struct RegistryContext {
    pub finite_points: Option<Vec<f64>>,
    pub finite_probs: Option<Vec<f64>>,
}

/// A resolved statistic: either over real-valued data or over the indices
/// of the finite data alphabet.
#[derive(Debug, Clone)]
pub enum ResolvedStatistic {
    Real(Statistic<f64>),
    Indexed(Statistic<usize>),
}

impl ResolvedStatistic {
    pub fn name(&self) -> &str {
        match self {
            ResolvedStatistic::Real(s) => s.name(),
            ResolvedStatistic::Indexed(s) => s.name(),
        }
    }

    pub fn declared_params(&self) -> Option<crate::diffops::WeakInteractionParams> {
        match self {
            ResolvedStatistic::Real(s) => s.declared_params(),
            ResolvedStatistic::Indexed(s) => s.declared_params(),
        }
    }
}

struct SpecTokens<'a> {
    spec: &'a str,
    tokens: Vec<&'a str>,
}

impl<'a> SpecTokens<'a> {
    fn parse(spec: &'a str) -> Self {
        Self {
            spec,
            tokens: spec.split(':').collect(),
        }
    }

    fn family(&self) -> &'a str {
        self.tokens[0]
    }

    fn flag(&self, name: &str) -> bool {
        self.tokens[1..].contains(&name)
    }

    fn value(&self, key: &str) -> Result<Option<&'a str>> {
        for t in &self.tokens[1..] {
            if let Some(rest) = t.strip_prefix(key) {
                if let Some(v) = rest.strip_prefix('=') {
                    return Ok(Some(v));
                }
            }
        }
        Ok(None)
    }

    fn f64_value(&self, key: &str) -> Result<Option<f64>> {
        match self.value(key)? {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|_| {
                Error::config(format!(
                    "could not parse '{key}={v}' as a number in statistic spec '{}'",
                    self.spec
                ))
            }),
        }
    }

    fn usize_value(&self, key: &str) -> Result<Option<usize>> {
        match self.value(key)? {
            None => Ok(None),
            Some(v) => v.parse::<usize>().map(Some).map_err(|_| {
                Error::config(format!(
                    "could not parse '{key}={v}' as an integer in statistic spec '{}'",
                    self.spec
                ))
            }),
        }
    }
}

fn kernel_by_name(name: &str, m: usize, spec: &str) -> Result<super::Kernel> {
    match name {
        "var" => {
            if m != 2 {
                return Err(Error::config(format!(
                    "kernel 'var' requires m=2, got m={m} in '{spec}'"
                )));
            }
            kernel_half_squared_distance()
        }
        "prod" => kernel_product(m),
        other => Err(Error::config(format!(
            "unknown kernel '{other}' in statistic spec '{spec}'"
        ))),
    }
}

/// Built-in rectangular loss table: `l(omega, x)` is a deterministic hash of
/// `(omega, x)` mapped into `[0, 1)`.
fn builtin_gibbs_model(omega: usize, alphabet_size: usize, beta: f64) -> Result<GibbsModel> {
    let prior = vec![1.0 / omega as f64; omega];
    let losses: Vec<Vec<f64>> = (0..omega)
        .map(|w| {
            (0..alphabet_size)
                .map(|x| hash_to_unit(splitmix64(GIBBS_TABLE_SEED ^ ((w as u64) << 32 | x as u64))))
                .collect()
        })
        .collect();
    GibbsModel::new(prior, losses, beta)
}

/// Resolve a statistic spec string for arity `n`.
pub fn resolve(spec: &str, n: usize, ctx: &RegistryContext) -> Result<ResolvedStatistic> {
    let toks = SpecTokens::parse(spec);
    match toks.family() {
        "mean" => Ok(ResolvedStatistic::Real(make_mean(n)?)),
        "ustat" | "vstat" => {
            let m = toks.usize_value("m")?.unwrap_or(2);
            let kernel_name = toks.value("kernel")?.unwrap_or("var");
            let kernel = kernel_by_name(kernel_name, m, spec)?;
            let stat = if toks.family() == "ustat" {
                make_u_statistic(&kernel, n)?
            } else {
                make_v_statistic(&kernel, n)?
            };
            Ok(ResolvedStatistic::Real(stat))
        }
        "lstat" => {
            if toks.flag("median") {
                let zeta = toks.f64_value("zeta")?.unwrap_or(0.1);
                Ok(ResolvedStatistic::Real(make_smoothed_median(zeta, n)?))
            } else if toks.flag("uniform") || toks.tokens.len() == 1 {
                let w = LWeight::new(|_| 1.0, 1.0, 0.0)?;
                Ok(ResolvedStatistic::Real(make_l_statistic(&w, n)?))
            } else {
                Err(Error::config(format!(
                    "unknown L-statistic variant in '{spec}' (expected 'median' or 'uniform')"
                )))
            }
        }
        "gibbs" => {
            let beta = toks.f64_value("beta")?.unwrap_or(1.0);
            let omega = toks.usize_value("omega")?.unwrap_or(3);
            let points = ctx.finite_points.as_ref().ok_or_else(|| {
                Error::config(format!(
                    "statistic '{spec}' requires a finite data distribution"
                ))
            })?;
            let model = builtin_gibbs_model(omega, points.len(), beta)?;
            if toks.flag("fe") {
                Ok(ResolvedStatistic::Indexed(make_free_energy(&model, n)?))
            } else if toks.flag("kl") {
                let probs = ctx.finite_probs.clone().ok_or_else(|| {
                    Error::config(format!(
                        "statistic '{spec}' requires distribution probabilities"
                    ))
                })?;
                let indices: Vec<usize> = (0..points.len()).collect();
                let mu = FiniteAlphabet::weighted(indices, probs)?;
                Ok(ResolvedStatistic::Indexed(make_gibbs_kl(&model, &mu, n)?))
            } else {
                Err(Error::config(format!(
                    "unknown Gibbs variant in '{spec}' (expected 'fe' or 'kl')"
                )))
            }
        }
        "l2delta" => {
            let lambda = toks.f64_value("lambda")?.unwrap_or(0.5);
            let (points, probs): (Vec<f64>, Vec<f64>) = match (&ctx.finite_points, &ctx.finite_probs)
            {
                (Some(p), Some(q)) => (p.clone(), q.clone()),
                _ => {
                    // midpoint grid surrogate for continuous data on [0, 1]
                    const GRID: usize = 32;
                    (
                        (0..GRID).map(|i| (i as f64 + 0.5) / GRID as f64).collect(),
                        vec![1.0 / GRID as f64; GRID],
                    )
                }
            };
            if points.iter().any(|p| !(-1.0..=1.0).contains(p)) {
                return Err(Error::config(format!(
                    "statistic '{spec}' requires data in [-1, 1]"
                )));
            }
            let ball: Vec<Vec<f64>> = points.iter().map(|&v| vec![v]).collect();
            let mu = FiniteAlphabet::weighted(ball, probs)?;
            let inner = make_l2_reg_delta(1, logistic_loss(), lambda, n, mu, 1e-10)?;
            let stat = Statistic::new("l2_delta", n, move |x: &[f64]| {
                let embedded: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
                inner.eval(&embedded)
            })?;
            Ok(ResolvedStatistic::Real(stat))
        }
        other => Err(Error::config(format!(
            "unknown statistic family '{other}' in spec '{spec}'"
        ))),
    }
}
