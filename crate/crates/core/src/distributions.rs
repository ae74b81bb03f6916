//! Exogenous noise distributions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use crate::rng::RngState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid parameters for {kind}: {message}")]
pub struct ParamError {
    pub kind: String,
    pub message: String,
}

/// Largest magnitude for which every integer is exactly representable.
const MAX_EXACT_INT: f64 = 9_007_199_254_740_992.0;

/// A validated distribution. Construct through the checked constructors or
/// [`Distribution::from_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// Integers in `[a, b]`, both ends inclusive.
    UniformInt {
        a: f64,
        b: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Gauss {
        mu: f64,
        sigma: f64,
    },
    Bernoulli {
        p: f64,
    },
    Exponential {
        rate: f64,
    },
}

fn invalid(kind: &str, message: impl Into<String>) -> ParamError {
    ParamError {
        kind: kind.to_string(),
        message: message.into(),
    }
}

fn finite(kind: &str, name: &str, v: f64) -> Result<f64, ParamError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(kind, format!("{name} must be finite, got {v}")))
    }
}

impl Distribution {
    pub fn uniform_int(a: f64, b: f64) -> Result<Self, ParamError> {
        let (a, b) = (
            finite("uniform_int", "a", a)?,
            finite("uniform_int", "b", b)?,
        );
        if a.fract() != 0.0 || b.fract() != 0.0 {
            return Err(invalid(
                "uniform_int",
                format!("bounds must be integers, got a={a}, b={b}"),
            ));
        }
        if a.abs() > MAX_EXACT_INT || b.abs() > MAX_EXACT_INT {
            return Err(invalid("uniform_int", "bounds exceed 2^53"));
        }
        if a > b {
            return Err(invalid(
                "uniform_int",
                format!("need a <= b, got a={a}, b={b}"),
            ));
        }
        Ok(Distribution::UniformInt { a, b })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self, ParamError> {
        let (a, b) = (finite("uniform", "a", a)?, finite("uniform", "b", b)?);
        if a > b {
            return Err(invalid("uniform", format!("need a <= b, got a={a}, b={b}")));
        }
        Ok(Distribution::Uniform { a, b })
    }

    pub fn gauss(mu: f64, sigma: f64) -> Result<Self, ParamError> {
        let (mu, sigma) = (finite("gauss", "mu", mu)?, finite("gauss", "sigma", sigma)?);
        if sigma <= 0.0 {
            return Err(invalid("gauss", format!("need sigma > 0, got {sigma}")));
        }
        Ok(Distribution::Gauss { mu, sigma })
    }

    pub fn bernoulli(p: f64) -> Result<Self, ParamError> {
        let p = finite("bernoulli", "p", p)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("bernoulli", format!("need 0 <= p <= 1, got {p}")));
        }
        Ok(Distribution::Bernoulli { p })
    }

    pub fn exponential(rate: f64) -> Result<Self, ParamError> {
        let rate = finite("exponential", "rate", rate)?;
        if rate <= 0.0 {
            return Err(invalid("exponential", format!("need rate > 0, got {rate}")));
        }
        Ok(Distribution::Exponential { rate })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Distribution::UniformInt { .. } => "uniform_int",
            Distribution::Uniform { .. } => "uniform",
            Distribution::Gauss { .. } => "gauss",
            Distribution::Bernoulli { .. } => "bernoulli",
            Distribution::Exponential { .. } => "exponential",
        }
    }

    /// Parameter names for a kind, in positional order.
    pub fn param_names(kind: &str) -> Option<&'static [&'static str]> {
        Some(match kind {
            "uniform_int" | "uniform" => &["a", "b"],
            "gauss" => &["mu", "sigma"],
            "bernoulli" => &["p"],
            "exponential" => &["rate"],
            _ => return None,
        })
    }

    pub fn params(&self) -> BTreeMap<&'static str, f64> {
        match *self {
            Distribution::UniformInt { a, b } | Distribution::Uniform { a, b } => {
                BTreeMap::from([("a", a), ("b", b)])
            }
            Distribution::Gauss { mu, sigma } => BTreeMap::from([("mu", mu), ("sigma", sigma)]),
            Distribution::Bernoulli { p } => BTreeMap::from([("p", p)]),
            Distribution::Exponential { rate } => BTreeMap::from([("rate", rate)]),
        }
    }

    /// Builds from a kind name and a name→value map. Missing or extra
    /// parameters are errors.
    pub fn from_params(kind: &str, params: &BTreeMap<String, f64>) -> Result<Self, ParamError> {
        let names = Distribution::param_names(kind)
            .ok_or_else(|| invalid(kind, format!("unknown distribution kind `{kind}`")))?;
        if let Some(extra) = params.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(invalid(kind, format!("unexpected parameter `{extra}`")));
        }
        let values = names
            .iter()
            .map(|n| {
                params
                    .get(*n)
                    .copied()
                    .ok_or_else(|| invalid(kind, format!("missing parameter `{n}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Distribution::from_positional(kind, &values)
    }

    pub fn from_positional(kind: &str, values: &[f64]) -> Result<Self, ParamError> {
        let names = Distribution::param_names(kind)
            .ok_or_else(|| invalid(kind, format!("unknown distribution kind `{kind}`")))?;
        if values.len() != names.len() {
            return Err(invalid(
                kind,
                format!(
                    "expected {} parameter(s), got {}",
                    names.len(),
                    values.len()
                ),
            ));
        }
        match kind {
            "uniform_int" => Distribution::uniform_int(values[0], values[1]),
            "uniform" => Distribution::uniform(values[0], values[1]),
            "gauss" => Distribution::gauss(values[0], values[1]),
            "bernoulli" => Distribution::bernoulli(values[0]),
            _ => Distribution::exponential(values[0]),
        }
    }

    pub fn draw(&self, rng: &mut RngState) -> f64 {
        match *self {
            Distribution::UniformInt { a, b } => {
                let span = (b - a) as u64 + 1;
                a + rng.below(span) as f64
            }
            Distribution::Uniform { a, b } => {
                if a == b {
                    a
                } else {
                    a + (b - a) * rng.next_f64()
                }
            }
            Distribution::Gauss { mu, sigma } => {
                // Box-Muller, one variate per draw so draws stay stateless
                let u1 = 1.0 - rng.next_f64();
                let u2 = rng.next_f64();
                mu + sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
            }
            Distribution::Bernoulli { p } => {
                if rng.next_f64() < p {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Exponential { rate } => -(1.0 - rng.next_f64()).ln() / rate,
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = Distribution::param_names(self.kind()).unwrap_or(&[]);
        let params = self.params();
        write!(f, "{}(", self.kind())?;
        for (i, n) in names.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}={}", params[n])?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(d: Distribution, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = RngState::new(seed);
        (0..n).map(|_| d.draw(&mut rng)).collect()
    }

    #[test]
    fn uniform_int_is_inclusive() {
        let d = Distribution::uniform_int(3.0, 8.0).unwrap();
        let xs = draws(d, 1, 5000);
        for x in &xs {
            assert!(x.fract() == 0.0 && (3.0..=8.0).contains(x));
        }
        for v in 3..=8 {
            assert!(xs.contains(&(v as f64)), "{v} never drawn");
        }
    }

    #[test]
    fn degenerate_uniform() {
        let d = Distribution::uniform(5.0, 5.0).unwrap();
        assert!(draws(d, 9, 100).iter().all(|&x| x == 5.0));
        let d = Distribution::uniform_int(-2.0, -2.0).unwrap();
        assert!(draws(d, 9, 100).iter().all(|&x| x == -2.0));
    }

    #[test]
    fn gauss_moments() {
        let xs = draws(Distribution::gauss(0.0, 1.0).unwrap(), 2024, 100_000);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.02, "sd {}", var.sqrt());
    }

    #[test]
    fn exponential_mean() {
        let xs = draws(Distribution::exponential(2.0).unwrap(), 3, 100_000);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
        assert!(xs.iter().all(|&x| x >= 0.0 && x.is_finite()));
    }

    #[test]
    fn bernoulli_support() {
        let xs = draws(Distribution::bernoulli(0.3).unwrap(), 4, 10_000);
        assert!(xs.iter().all(|&x| x == 0.0 || x == 1.0));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.3).abs() < 0.02);
        assert!(draws(Distribution::bernoulli(1.0).unwrap(), 4, 100)
            .iter()
            .all(|&x| x == 1.0));
        assert!(draws(Distribution::bernoulli(0.0).unwrap(), 4, 100)
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn draws_are_reproducible() {
        for d in [
            Distribution::uniform_int(-4.0, 9.0).unwrap(),
            Distribution::uniform(0.0, 1.0).unwrap(),
            Distribution::gauss(1.0, 2.0).unwrap(),
            Distribution::bernoulli(0.5).unwrap(),
            Distribution::exponential(1.0).unwrap(),
        ] {
            let a: Vec<u64> = draws(d, 77, 1000).iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = draws(d, 77, 1000).iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b, "{d}");
        }
    }

    #[test]
    fn invalid_params() {
        assert!(Distribution::uniform_int(8.0, 3.0).is_err());
        assert!(Distribution::uniform_int(1.5, 3.0).is_err());
        assert!(Distribution::uniform(2.0, 1.0).is_err());
        assert!(Distribution::gauss(0.0, 0.0).is_err());
        assert!(Distribution::gauss(f64::NAN, 1.0).is_err());
        assert!(Distribution::bernoulli(1.5).is_err());
        assert!(Distribution::exponential(0.0).is_err());
    }

    #[test]
    fn from_params_checks_names() {
        let mut params = BTreeMap::from([("a".to_string(), 3.0), ("b".to_string(), 8.0)]);
        assert_eq!(
            Distribution::from_params("uniform_int", &params).unwrap(),
            Distribution::UniformInt { a: 3.0, b: 8.0 }
        );
        params.insert("c".into(), 1.0);
        assert!(Distribution::from_params("uniform_int", &params).is_err());
        assert!(Distribution::from_params("gauss", &BTreeMap::new()).is_err());
        assert!(Distribution::from_params("cauchy", &BTreeMap::new()).is_err());
    }
}
