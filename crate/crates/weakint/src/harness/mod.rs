//! Experiment runner: seeded Monte Carlo coverage experiments, oracle
//! verification sweeps, bound tabulation, and machine-readable output.
//!
//! Runs are deterministic given the master seed regardless of worker count:
//! replication r draws from its own substream and aggregation happens in
//! replication order. CSV output for the coverage modes uses the fixed
//! header `rep,seed,f_value,v_f,sigma_lower,sigma_upper,bound_epsilon,covered`;
//! JSON mirrors the records and adds config, metadata and a summary block
//! (whose wall-time field is the only part that varies between identical
//! runs).

pub mod distributions;
pub mod rng;
mod truth;

pub use distributions::{sample_product, DistributionSpec};
pub use rng::{substream, substream_seed, RNG_ALGORITHM};
pub use truth::{TruthRef, DEFAULT_REFERENCE_REPLICATIONS};

use std::time::Instant;

use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::bounds::{
    empirical_bernstein_epsilon, empirical_normality_test, variance_confidence_interval,
    wasserstein1_standardized, wasserstein1_to_standard_normal,
};
use crate::diffops::{
    seminorms_exact_with_budget, seminorms_probe, FiniteAlphabet, Point, SeminormMethod,
    Statistic, DEFAULT_ENUM_BUDGET,
};
use crate::error::{Error, Result};
use crate::estimator::{
    expectation_oracle_with_budget, sigma_sum_exact, variance_estimator,
    variance_estimator_statistic, variance_oracle_with_budget,
};
use crate::numeric::{mean, sample_variance};
use crate::statlib::{resolve, RegistryContext, ResolvedStatistic};
use truth::{resolve_truth, TruthInputs};

/// Containment checks allow this much arithmetic noise.
const FLOAT_SLOP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    VarianceCi,
    EmpiricalBernstein,
    Normality,
    OracleVerify,
    Seminorms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_delta() -> f64 {
    0.05
}

fn default_replications() -> u64 {
    1000
}

fn default_format() -> OutputFormat {
    OutputFormat::Json
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub stat: String,
    pub dist: String,
    pub n: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default)]
    pub master_seed: u64,
    pub mode: Mode,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_replications: Option<u64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::config("replications must be >= 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.n < 2 {
            return Err(Error::config(format!("n must be >= 2, got {}", self.n)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: u64,
    pub seed: u64,
    pub f_value: f64,
    pub v_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covered: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_a_passed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dn_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSummary {
    pub e_v_f: f64,
    pub e_sigma2: f64,
    pub abs_difference: f64,
    pub sigma2_f: f64,
    pub m_exact: f64,
    pub j_exact: f64,
    /// `E[Sigma^2] - J^2/4`, the lower end of the variance sandwich.
    pub sandwich_lower: f64,
    pub sandwich_holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeminormSummary {
    pub m_value: f64,
    pub j_value: f64,
    pub method: String,
    pub probe_trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conforms: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub replications: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_rate: Option<f64>,
    /// One-sided 99% Clopper-Pearson upper bound on the failure rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_rate_upper99: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_f_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_f_stddev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_a_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical_w1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seminorms: Option<SeminormSummary>,
    pub evaluations: u64,
    pub wall_time_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub rng_algorithm: String,
    pub budget: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_e_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_sigma_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub metadata: Metadata,
    pub records: Vec<ReplicationRecord>,
    pub summary: Summary,
}

/// One-sided Clopper-Pearson upper confidence bound on a binomial
/// proportion.
pub fn binomial_upper_bound(failures: u64, trials: u64, confidence: f64) -> f64 {
    if trials == 0 || failures >= trials {
        return 1.0;
    }
    Beta::new((failures + 1) as f64, (trials - failures) as f64)
        .expect("valid beta shape parameters")
        .inverse_cdf(confidence)
}

/// Run an experiment end to end.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = Instant::now();
    let budget = cfg.budget.unwrap_or(DEFAULT_ENUM_BUDGET);
    let dist = DistributionSpec::parse(&cfg.dist)?;
    let finite_f64 = dist.finite_alphabet()?;
    let ctx = RegistryContext {
        finite_points: finite_f64.as_ref().map(|a| a.points().to_vec()),
        finite_probs: finite_f64
            .as_ref()
            .and_then(|a| a.probs().map(|p| p.to_vec())),
    };
    match resolve(&cfg.stat, cfg.n, &ctx)? {
        ResolvedStatistic::Real(stat) => run_typed(
            cfg,
            budget,
            &stat,
            &dist,
            finite_f64.as_ref(),
            dist.moments(),
            start,
        ),
        ResolvedStatistic::Indexed(stat) => {
            let idx = dist.index_alphabet()?.ok_or_else(|| {
                Error::config(format!(
                    "statistic '{}' requires a finite data distribution, got '{}'",
                    cfg.stat, cfg.dist
                ))
            })?;
            run_typed(cfg, budget, &stat, &idx, Some(&idx), None, start)
        }
    }
}

fn run_typed<X: Point, D: Distribution<X> + Sync>(
    cfg: &ExperimentConfig,
    budget: u64,
    stat: &Statistic<X>,
    sampler: &D,
    finite: Option<&FiniteAlphabet<X>>,
    dist_moments: Option<(f64, f64)>,
    start: Instant,
) -> Result<ExperimentResult> {
    let mut metadata = Metadata {
        rng_algorithm: RNG_ALGORITHM.into(),
        budget,
        truth_source: None,
        truth_e_f: None,
        truth_sigma_f: None,
        reference_seed: None,
    };
    let mut summary = Summary {
        replications: cfg.replications,
        coverage: None,
        failure_count: None,
        failure_rate: None,
        failure_rate_upper99: None,
        v_f_mean: None,
        v_f_stddev: None,
        test_a_fraction: None,
        empirical_w1: None,
        oracle: None,
        seminorms: None,
        evaluations: 0,
        wall_time_ms: 0,
    };
    let mut records = Vec::new();

    match cfg.mode {
        Mode::VarianceCi | Mode::EmpiricalBernstein | Mode::Normality => {
            // normality only uses the truth to standardize the W1 surrogate,
            // so it does not trigger the Monte Carlo reference
            let allow_mc = !matches!(cfg.mode, Mode::Normality);
            let truth = resolve_truth(
                &TruthInputs {
                    stat_spec: &cfg.stat,
                    stat,
                    finite,
                    dist_moments,
                    n: cfg.n,
                    budget,
                    master_seed: cfg.master_seed,
                    reference_replications: cfg
                        .reference_replications
                        .unwrap_or(DEFAULT_REFERENCE_REPLICATIONS),
                    allow_monte_carlo: allow_mc,
                },
                sampler,
            )?;
            if let Some(t) = &truth {
                metadata.truth_source = Some(t.source.clone());
                metadata.truth_e_f = Some(t.e_f);
                metadata.truth_sigma_f = Some(t.sigma_f);
                metadata.reference_seed = t.reference_seed;
            }
            let (recs, evaluations) = run_replications(cfg, stat, sampler, truth.as_ref())?;
            summary.evaluations = evaluations;

            let v_values: Vec<f64> = recs.iter().map(|r| r.v_f).collect();
            summary.v_f_mean = Some(mean(&v_values));
            summary.v_f_stddev = Some(sample_variance(&v_values).sqrt());

            match cfg.mode {
                Mode::VarianceCi | Mode::EmpiricalBernstein => {
                    let failures = recs
                        .iter()
                        .filter(|r| r.covered == Some(false))
                        .count() as u64;
                    summary.failure_count = Some(failures);
                    summary.coverage = Some(1.0 - failures as f64 / cfg.replications as f64);
                    summary.failure_rate = Some(failures as f64 / cfg.replications as f64);
                    summary.failure_rate_upper99 =
                        Some(binomial_upper_bound(failures, cfg.replications, 0.99));
                }
                Mode::Normality => {
                    let passed = recs
                        .iter()
                        .filter(|r| r.test_a_passed == Some(true))
                        .count() as u64;
                    summary.test_a_fraction = Some(passed as f64 / cfg.replications as f64);
                    let f_values: Vec<f64> = recs.iter().map(|r| r.f_value).collect();
                    summary.empirical_w1 = match &truth {
                        Some(t) if t.sigma_f > 0.0 => {
                            wasserstein1_standardized(&f_values, t.e_f, t.sigma_f).ok()
                        }
                        _ => wasserstein1_to_standard_normal(&f_values).ok(),
                    };
                }
                _ => unreachable!(),
            }
            records = recs;
        }
        Mode::OracleVerify => {
            let alphabet = finite.ok_or_else(|| {
                Error::config(format!(
                    "oracle_verify requires a finite data distribution, got '{}'",
                    cfg.dist
                ))
            })?;
            summary.oracle = Some(run_oracle_verify(cfg, stat, alphabet, budget)?);
        }
        Mode::Seminorms => {
            summary.seminorms = Some(run_seminorms(cfg, stat, sampler, finite, budget)?);
        }
    }

    summary.wall_time_ms = start.elapsed().as_millis();
    Ok(ExperimentResult {
        config: cfg.clone(),
        metadata,
        records,
        summary,
    })
}

fn run_replications<X: Point, D: Distribution<X> + Sync>(
    cfg: &ExperimentConfig,
    stat: &Statistic<X>,
    sampler: &D,
    truth: Option<&TruthRef>,
) -> Result<(Vec<ReplicationRecord>, u64)> {
    let params = stat.declared_params().ok_or_else(|| {
        Error::config(format!(
            "statistic '{}' declares no weak-interaction parameters, required by this mode",
            cfg.stat
        ))
    })?;
    let n = cfg.n;
    let outcomes: Result<Vec<(ReplicationRecord, u64)>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(cfg.master_seed, r);
            let sample = sample_product(sampler, n + 1, &mut rng);
            let f_value = stat.eval(&sample[..n]);
            let est = variance_estimator(stat, &sample)?;
            let mut record = ReplicationRecord {
                rep: r,
                seed: substream_seed(cfg.master_seed, r),
                f_value,
                v_f: est.value,
                sigma_lower: None,
                sigma_upper: None,
                bound_epsilon: None,
                covered: None,
                test_a_passed: None,
                dn_bound: None,
            };
            match cfg.mode {
                Mode::VarianceCi | Mode::EmpiricalBernstein => {
                    let ci = variance_confidence_interval(est.value, params, n, cfg.delta, false)?;
                    let eb = empirical_bernstein_epsilon(est.value, params, n, cfg.delta)?;
                    record.sigma_lower = Some(ci.sigma_lower);
                    record.sigma_upper = Some(ci.sigma_upper);
                    record.bound_epsilon = Some(eb.epsilon);
                    let t = truth.expect("coverage modes resolve a truth reference");
                    let covered = match cfg.mode {
                        Mode::VarianceCi => {
                            t.sigma_f >= ci.sigma_lower - FLOAT_SLOP
                                && t.sigma_f <= ci.sigma_upper + FLOAT_SLOP
                        }
                        _ => f_value - t.e_f <= eb.epsilon + FLOAT_SLOP,
                    };
                    record.covered = Some(covered);
                }
                Mode::Normality => {
                    let report = empirical_normality_test(est.value, params, n, cfg.delta)?;
                    record.test_a_passed = Some(report.test_a_passed);
                    record.dn_bound = report.dn_bound;
                }
                _ => unreachable!("replication loop only runs for per-sample modes"),
            }
            Ok((record, est.evaluations_used + 1))
        })
        .collect();
    let outcomes = outcomes?;
    let evaluations = outcomes.iter().map(|(_, e)| e).sum();
    Ok((outcomes.into_iter().map(|(r, _)| r).collect(), evaluations))
}

fn run_oracle_verify<X: Point>(
    cfg: &ExperimentConfig,
    stat: &Statistic<X>,
    alphabet: &FiniteAlphabet<X>,
    budget: u64,
) -> Result<OracleSummary> {
    if alphabet.probs().is_none() {
        return Err(Error::config(
            "oracle_verify requires a finite distribution with probabilities",
        ));
    }
    let seminorms = seminorms_exact_with_budget(stat, alphabet, budget)?;

    let inner = stat.clone();
    let mu = alphabet.clone();
    let sigma_stat = Statistic::new("sigma_sum", cfg.n, move |x: &[X]| {
        sigma_sum_exact(&inner, x, &mu)
            .expect("probabilities checked before construction")
            .total
    })?;
    let e_sigma2 = expectation_oracle_with_budget(&sigma_stat, alphabet, budget)?;
    let v_stat = variance_estimator_statistic(stat);
    let e_v_f = expectation_oracle_with_budget(&v_stat, alphabet, budget)?;
    let sigma2_f = variance_oracle_with_budget(stat, alphabet, budget)?;

    let j = seminorms.j_value;
    let sandwich_lower = e_sigma2 - j * j / 4.0;
    Ok(OracleSummary {
        e_v_f,
        e_sigma2,
        abs_difference: (e_v_f - e_sigma2).abs(),
        sigma2_f,
        m_exact: seminorms.m_value,
        j_exact: j,
        sandwich_lower,
        sandwich_holds: sigma2_f <= e_sigma2 + 1e-10 && sandwich_lower <= sigma2_f + 1e-10,
    })
}

fn run_seminorms<X: Point, D: Distribution<X>>(
    cfg: &ExperimentConfig,
    stat: &Statistic<X>,
    sampler: &D,
    finite: Option<&FiniteAlphabet<X>>,
    budget: u64,
) -> Result<SeminormSummary> {
    let report = match finite {
        Some(a) => seminorms_exact_with_budget(stat, a, budget)?,
        None => seminorms_probe(stat, sampler, cfg.replications, cfg.master_seed)?,
    };
    let declared = stat.declared_params();
    let conforms = declared.map(|p| {
        report.m_value <= p.a / cfg.n as f64 + 1e-10 && report.j_value <= p.b / cfg.n as f64 + 1e-10
    });
    Ok(SeminormSummary {
        m_value: report.m_value,
        j_value: report.j_value,
        method: match report.method {
            SeminormMethod::Exact => "exact".into(),
            SeminormMethod::Probe => "probe".into(),
        },
        probe_trials: report.probe_trials,
        declared_a: declared.map(|p| p.a),
        declared_b: declared.map(|p| p.b),
        conforms,
    })
}

/// Render the result as CSV. Coverage modes use the fixed schema
/// `rep,seed,f_value,v_f,sigma_lower,sigma_upper,bound_epsilon,covered`;
/// normality uses `rep,seed,f_value,v_f,test_a_passed,dn_bound`; the oracle
/// modes emit `key,value` rows of their summary block.
pub fn render_csv(result: &ExperimentResult) -> String {
    let mut out = String::new();
    match result.config.mode {
        Mode::VarianceCi | Mode::EmpiricalBernstein => {
            out.push_str("rep,seed,f_value,v_f,sigma_lower,sigma_upper,bound_epsilon,covered\n");
            for r in &result.records {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    r.rep,
                    r.seed,
                    r.f_value,
                    r.v_f,
                    r.sigma_lower.unwrap_or(f64::NAN),
                    r.sigma_upper.unwrap_or(f64::NAN),
                    r.bound_epsilon.unwrap_or(f64::NAN),
                    r.covered.unwrap_or(false),
                ));
            }
        }
        Mode::Normality => {
            out.push_str("rep,seed,f_value,v_f,test_a_passed,dn_bound\n");
            for r in &result.records {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.rep,
                    r.seed,
                    r.f_value,
                    r.v_f,
                    r.test_a_passed.unwrap_or(false),
                    r.dn_bound.map(|b| b.to_string()).unwrap_or_default(),
                ));
            }
        }
        Mode::OracleVerify | Mode::Seminorms => {
            out.push_str("key,value\n");
            let block = serde_json::to_value(&result.summary).expect("summary serializes");
            if let serde_json::Value::Object(map) = block {
                for (key, value) in map {
                    match value {
                        serde_json::Value::Object(inner) => {
                            for (k, v) in inner {
                                out.push_str(&format!("{key}.{k},{v}\n"));
                            }
                        }
                        other => out.push_str(&format!("{key},{other}\n")),
                    }
                }
            }
        }
    }
    out
}

/// Render the full result as pretty JSON.
pub fn render_json(result: &ExperimentResult) -> Result<String> {
    serde_json::to_string_pretty(result)
        .map(|s| s + "\n")
        .map_err(|e| Error::Numerical(format!("serialization failed: {e}")))
}
