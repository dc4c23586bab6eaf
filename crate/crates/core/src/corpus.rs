//! Named test fields. Tags read like `gauge-power(0.5)` or `step`.

use crate::error::{Error, Result};
use crate::field::{GridSpec, SampledField};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// Indicator of the ball of this radius about the identity.
    Indicator {
        radius: f64,
    },
    /// `rho(x)^beta`.
    GaugePower {
        beta: f64,
    },
    /// `-rho(x)^beta`.
    NegGaugePower {
        beta: f64,
    },
    /// `ln(1 + 1 / (rho(x) + h))` with `h` the axis-0 spacing.
    LogGauge,
    /// Four random cosine modes drawn from the named stream `"random-smooth"`.
    RandomSmooth {
        seed: u64,
    },
    /// Independent uniform values in `[-1, 1)` from the stream `"noise"`.
    Noise {
        seed: u64,
    },
    /// `1` where the first coordinate is nonnegative, else `0`.
    Step,
    Constant {
        value: f64,
    },
}

impl Generator {
    pub fn sample(&self, grid: &Arc<GridSpec>) -> Result<SampledField> {
        let group = grid.group.clone();
        let rho = move |x: &[f64]| group.norm_of(x);
        match *self {
            Generator::Indicator { radius } => {
                SampledField::sample(grid, |x| if rho(x) < radius { 1.0 } else { 0.0 })
            }
            Generator::GaugePower { beta } => SampledField::sample(grid, |x| rho(x).powf(beta)),
            Generator::NegGaugePower { beta } => SampledField::sample(grid, |x| -rho(x).powf(beta)),
            Generator::LogGauge => {
                let h = grid.spacing()[0];
                SampledField::sample(grid, |x| (1.0 + 1.0 / (rho(x) + h)).ln())
            }
            Generator::RandomSmooth { seed } => {
                let mut r = rng::stream(seed, "random-smooth");
                let modes: Vec<(f64, Vec<f64>, f64)> = (0..4)
                    .map(|_| {
                        let amp = r.random_range(-1.0..1.0);
                        let freq = (0..grid.dim()).map(|_| r.random_range(-3.0..3.0)).collect();
                        let phase = r.random_range(0.0..std::f64::consts::TAU);
                        (amp, freq, phase)
                    })
                    .collect();
                SampledField::sample(grid, |x| {
                    modes
                        .iter()
                        .map(|(a, w, p)| {
                            let dot: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
                            a * (dot + p).cos()
                        })
                        .sum()
                })
            }
            Generator::Noise { seed } => {
                let mut r = rng::stream(seed, "noise");
                let values = (0..grid.node_count())
                    .map(|_| r.random_range(-1.0..1.0))
                    .collect();
                SampledField::from_values(grid.clone(), values)
            }
            Generator::Step => SampledField::sample(grid, |x| if x[0] >= 0.0 { 1.0 } else { 0.0 }),
            Generator::Constant { value } => SampledField::constant(grid, value),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Indicator { radius } => write!(f, "indicator({radius})"),
            Generator::GaugePower { beta } => write!(f, "gauge-power({beta})"),
            Generator::NegGaugePower { beta } => write!(f, "neg-gauge-power({beta})"),
            Generator::LogGauge => f.write_str("log-gauge"),
            Generator::RandomSmooth { seed } => write!(f, "random-smooth({seed})"),
            Generator::Noise { seed } => write!(f, "noise({seed})"),
            Generator::Step => f.write_str("step"),
            Generator::Constant { value } => write!(f, "constant({value})"),
        }
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(tag: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidParameter(format!("corpus tag {tag:?}: {why}"));
        let tag_trim = tag.trim();
        let (name, arg) = match tag_trim.find('(') {
            Some(open) => {
                let close = tag_trim
                    .strip_suffix(')')
                    .ok_or_else(|| bad("missing closing parenthesis"))?;
                (&tag_trim[..open], Some(close[open + 1..].trim()))
            }
            None => (tag_trim, None),
        };
        let real = || -> Result<f64> {
            arg.ok_or_else(|| bad("expects a numeric argument"))?
                .parse::<f64>()
                .map_err(|_| bad("argument is not a number"))
        };
        let seed = || -> Result<u64> {
            arg.ok_or_else(|| bad("expects a seed"))?
                .parse()
                .map_err(|_| bad("seed is not an unsigned integer"))
        };
        let none = |g: Generator| {
            if arg.is_some() {
                Err(bad("takes no argument"))
            } else {
                Ok(g)
            }
        };
        match name {
            "indicator" => Ok(Generator::Indicator { radius: real()? }),
            "gauge-power" => Ok(Generator::GaugePower { beta: real()? }),
            "neg-gauge-power" => Ok(Generator::NegGaugePower { beta: real()? }),
            "log-gauge" => none(Generator::LogGauge),
            "random-smooth" => Ok(Generator::RandomSmooth { seed: seed()? }),
            "noise" => Ok(Generator::Noise { seed: seed()? }),
            "step" => none(Generator::Step),
            "constant" => Ok(Generator::Constant { value: real()? }),
            _ => Err(bad("unknown generator")),
        }
    }
}

/// A small mixed corpus used by the default checks.
pub fn default_corpus() -> Vec<Generator> {
    vec![
        Generator::Indicator { radius: 0.5 },
        Generator::GaugePower { beta: 0.5 },
        Generator::NegGaugePower { beta: 0.5 },
        Generator::LogGauge,
        Generator::RandomSmooth { seed: 1 },
        Generator::RandomSmooth { seed: 2 },
        Generator::Step,
        Generator::Constant { value: 1.0 },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GroupSpec;

    #[test]
    fn tags_round_trip() {
        for g in default_corpus() {
            assert_eq!(g.to_string().parse::<Generator>().unwrap(), g);
        }
        assert!("gauge-power".parse::<Generator>().is_err());
        assert!("step(2)".parse::<Generator>().is_err());
        assert!("wavelet(1)".parse::<Generator>().is_err());
        assert!("noise(-1)".parse::<Generator>().is_err());
        assert_eq!(
            "noise(3)".parse::<Generator>().unwrap(),
            Generator::Noise { seed: 3 }
        );
    }

    #[test]
    fn generators_are_deterministic_and_finite() {
        let grid =
            Arc::new(GridSpec::centered(GroupSpec::heisenberg(), &[1.0, 1.0, 2.0], 9).unwrap());
        for g in default_corpus() {
            let a = g.sample(&grid).unwrap();
            let b = g.sample(&grid).unwrap();
            assert_eq!(a, b);
            assert!(a.values().iter().all(|v| v.is_finite()));
        }
        let neg = Generator::NegGaugePower { beta: 0.5 }
            .sample(&grid)
            .unwrap();
        assert!(neg.values().iter().all(|&v| v <= 0.0));
    }
}
