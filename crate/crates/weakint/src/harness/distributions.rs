//! Data-distribution specs for experiments.
//!
//! Accepted spec strings:
//!
//! - `uniform01` — iid uniform draws from [0, 1)
//! - `bernoulli:p` — iid {0, 1} draws with success probability p
//! - `finite:v1,v2,...` — uniform over the listed values
//! - `finite:v1=p1,v2=p2,...` — the listed values with explicit weights

use rand::distr::Distribution;
use rand::Rng;

use crate::diffops::FiniteAlphabet;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum DistributionSpec {
    Uniform01,
    Bernoulli(f64),
    Finite(FiniteAlphabet<f64>),
}

impl DistributionSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        if spec == "uniform01" {
            return Ok(DistributionSpec::Uniform01);
        }
        if let Some(rest) = spec.strip_prefix("bernoulli:") {
            let p: f64 = rest.parse().map_err(|_| {
                Error::config(format!("could not parse bernoulli parameter '{rest}'"))
            })?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!(
                    "bernoulli parameter must lie in [0, 1], got {p}"
                )));
            }
            return Ok(DistributionSpec::Bernoulli(p));
        }
        if let Some(rest) = spec.strip_prefix("finite:") {
            let mut points = Vec::new();
            let mut probs = Vec::new();
            let mut weighted = None;
            for token in rest.split(',') {
                match token.split_once('=') {
                    Some((v, p)) => {
                        if weighted == Some(false) {
                            return Err(Error::config(format!(
                                "mixed weighted and unweighted entries at '{token}'"
                            )));
                        }
                        weighted = Some(true);
                        points.push(v.parse::<f64>().map_err(|_| {
                            Error::config(format!("could not parse point '{v}' in '{spec}'"))
                        })?);
                        probs.push(p.parse::<f64>().map_err(|_| {
                            Error::config(format!("could not parse weight '{p}' in '{spec}'"))
                        })?);
                    }
                    None => {
                        if weighted == Some(true) {
                            return Err(Error::config(format!(
                                "mixed weighted and unweighted entries at '{token}'"
                            )));
                        }
                        weighted = Some(false);
                        points.push(token.parse::<f64>().map_err(|_| {
                            Error::config(format!("could not parse point '{token}' in '{spec}'"))
                        })?);
                    }
                }
            }
            let alphabet = if weighted == Some(true) {
                FiniteAlphabet::weighted(points, probs)
            } else {
                FiniteAlphabet::uniform(points)
            }
            .map_err(|e| Error::config(format!("invalid finite alphabet '{spec}': {e}")))?;
            return Ok(DistributionSpec::Finite(alphabet));
        }
        Err(Error::config(format!(
            "unknown distribution spec '{spec}' (expected uniform01, bernoulli:p or finite:...)"
        )))
    }

    /// The finite alphabet over real values, when one exists.
    /// `bernoulli:p` canonicalizes to `{0, 1}` with weights `(1-p, p)`.
    pub fn finite_alphabet(&self) -> Result<Option<FiniteAlphabet<f64>>> {
        match self {
            DistributionSpec::Uniform01 => Ok(None),
            DistributionSpec::Bernoulli(p) => Ok(Some(FiniteAlphabet::weighted(
                vec![0.0, 1.0],
                vec![1.0 - p, *p],
            )?)),
            DistributionSpec::Finite(a) => Ok(Some(a.clone())),
        }
    }

    /// The same finite alphabet, over point indices `0..K`.
    pub fn index_alphabet(&self) -> Result<Option<FiniteAlphabet<usize>>> {
        match self.finite_alphabet()? {
            None => Ok(None),
            Some(a) => {
                let indices: Vec<usize> = (0..a.len()).collect();
                let probs = a
                    .probs()
                    .expect("canonical finite alphabets carry probabilities")
                    .to_vec();
                Ok(Some(FiniteAlphabet::weighted(indices, probs)?))
            }
        }
    }

    /// Closed-form mean and variance of one draw.
    pub fn moments(&self) -> Option<(f64, f64)> {
        match self {
            DistributionSpec::Uniform01 => Some((0.5, 1.0 / 12.0)),
            DistributionSpec::Bernoulli(p) => Some((*p, p * (1.0 - p))),
            DistributionSpec::Finite(a) => {
                let probs = a.probs()?;
                let mean: f64 = a.points().iter().zip(probs).map(|(v, p)| v * p).sum();
                let second: f64 = a.points().iter().zip(probs).map(|(v, p)| v * v * p).sum();
                Some((mean, (second - mean * mean).max(0.0)))
            }
        }
    }
}

impl Distribution<f64> for DistributionSpec {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DistributionSpec::Uniform01 => rng.random(),
            DistributionSpec::Bernoulli(p) => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::Finite(a) => a.points()[a.sample_index(rng)],
        }
    }
}

/// `len` iid draws from `dist`.
pub fn sample_product<X, D: Distribution<X>, R: Rng + ?Sized>(
    dist: &D,
    len: usize,
    rng: &mut R,
) -> Vec<X> {
    (0..len).map(|_| dist.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::rng::substream;

    #[test]
    fn parses_the_documented_forms() {
        assert!(matches!(
            DistributionSpec::parse("uniform01").unwrap(),
            DistributionSpec::Uniform01
        ));
        assert!(matches!(
            DistributionSpec::parse("bernoulli:0.25").unwrap(),
            DistributionSpec::Bernoulli(_)
        ));
        let f = DistributionSpec::parse("finite:0,0.5,1").unwrap();
        match &f {
            DistributionSpec::Finite(a) => {
                assert_eq!(a.len(), 3);
                assert!((a.probs().unwrap()[0] - 1.0 / 3.0).abs() < 1e-15);
            }
            _ => panic!(),
        }
        let w = DistributionSpec::parse("finite:0=0.25,1=0.75").unwrap();
        match &w {
            DistributionSpec::Finite(a) => assert_eq!(a.probs().unwrap(), &[0.25, 0.75]),
            _ => panic!(),
        }
    }

    #[test]
    fn parse_errors_name_the_token() {
        let e = DistributionSpec::parse("gauss").unwrap_err().to_string();
        assert!(e.contains("gauss"));
        let e = DistributionSpec::parse("bernoulli:two").unwrap_err().to_string();
        assert!(e.contains("two"));
        let e = DistributionSpec::parse("finite:0=0.5,1").unwrap_err().to_string();
        assert!(e.contains("mixed"));
        assert!(DistributionSpec::parse("bernoulli:1.5").is_err());
    }

    #[test]
    fn degenerate_bernoulli_draws_all_ones() {
        let d = DistributionSpec::parse("bernoulli:1.0").unwrap();
        let mut rng = substream(1, 0);
        let xs = sample_product(&d, 32, &mut rng);
        assert!(xs.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn uniform_draws_live_in_the_unit_interval() {
        let d = DistributionSpec::Uniform01;
        let mut rng = substream(2, 0);
        let xs = sample_product(&d, 256, &mut rng);
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn fixed_seed_reproduces_the_vector() {
        let d = DistributionSpec::parse("finite:0=0.3,0.5=0.2,1=0.5").unwrap();
        let a = sample_product(&d, 64, &mut substream(9, 4));
        let b = sample_product(&d, 64, &mut substream(9, 4));
        assert_eq!(a, b);
    }

    #[test]
    fn bernoulli_moments() {
        let d = DistributionSpec::parse("bernoulli:0.5").unwrap();
        let (m, v) = d.moments().unwrap();
        assert_eq!(m, 0.5);
        assert_eq!(v, 0.25);
        let alphabet = d.finite_alphabet().unwrap().unwrap();
        assert_eq!(alphabet.points(), &[0.0, 1.0]);
    }
}
