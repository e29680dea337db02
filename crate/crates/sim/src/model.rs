//! Lifetime and censoring laws.

use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1, Gamma, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One affine piece `lambda(t) = a + b (t - start)` on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub a: f64,
    pub b: f64,
}

impl Segment {
    pub fn hazard_at(&self, t: f64) -> f64 {
        self.a + self.b * (t - self.start)
    }

    /// Cumulative hazard accumulated over the segment up to `start + u`.
    fn integral(&self, u: f64) -> f64 {
        self.a * u + 0.5 * self.b * u * u
    }

    fn mass(&self) -> f64 {
        self.integral(self.end - self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LifetimeModel {
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    /// Hazard defined on `[0, horizon]`; a subject surviving the horizon is cured.
    PiecewiseHazard {
        segments: Vec<Segment>,
    },
}

impl LifetimeModel {
    pub fn constant_hazard(rate: f64, horizon: f64) -> Self {
        Self::PiecewiseHazard {
            segments: vec![Segment {
                start: 0.0,
                end: horizon,
                a: rate,
                b: 0.0,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match self {
            Self::Exponential { rate } => positive("rate", *rate),
            Self::Gamma { shape, rate } => positive("shape", *shape).and(positive("rate", *rate)),
            Self::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::InvalidModel(format!("mu must be finite, got {mu}")));
                }
                positive("sigma", *sigma)
            }
            Self::PiecewiseHazard { segments } => {
                if segments.is_empty() {
                    return Err(Error::InvalidModel("no hazard segments".into()));
                }
                let mut expected = 0.0;
                for s in segments {
                    if s.start != expected || !(s.end > s.start) || !s.end.is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "segments must be contiguous from 0, got [{}, {}] after {expected}",
                            s.start, s.end
                        )));
                    }
                    if !(s.a >= 0.0) || !(s.hazard_at(s.end) >= -1e-12) || !s.b.is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "hazard negative on [{}, {}]",
                            s.start, s.end
                        )));
                    }
                    expected = s.end;
                }
                Ok(())
            }
        }
    }

    /// Draws a lifetime; `f64::INFINITY` for a cured subject.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            Self::Gamma { shape, rate } => Gamma::new(*shape, 1.0 / rate)
                .expect("validated gamma")
                .sample(rng),
            Self::LogNormal { mu, sigma } => LogNormal::new(*mu, *sigma)
                .expect("validated lognormal")
                .sample(rng),
            Self::PiecewiseHazard { segments } => {
                let e: f64 = Exp1.sample(rng);
                invert_cumulative_hazard(segments, e)
            }
        }
    }

    /// Cumulative hazard of a piecewise model at `t`; `None` for parametric laws.
    pub fn cumulative_hazard(&self, t: f64) -> Option<f64> {
        match self {
            Self::Exponential { rate } => Some(rate * t.max(0.0)),
            Self::PiecewiseHazard { segments } => {
                let mut total = 0.0;
                for s in segments {
                    if t <= s.start {
                        break;
                    }
                    total += s.integral(t.min(s.end) - s.start);
                }
                Some(total)
            }
            _ => None,
        }
    }

    /// `P(T > horizon)` for piecewise models, zero otherwise.
    pub fn cure_fraction(&self) -> f64 {
        match self {
            Self::PiecewiseHazard { segments } => {
                (-segments.iter().map(Segment::mass).sum::<f64>()).exp()
            }
            _ => 0.0,
        }
    }

    /// `E[exp(-c T)]`, with `exp(-c inf) = 0`.
    pub fn laplace_transform(&self, c: f64) -> f64 {
        match self {
            Self::Exponential { rate } => rate / (rate + c),
            Self::Gamma { shape, rate } => (rate / (rate + c)).powf(*shape),
            Self::LogNormal { mu, sigma } => simpson(-12.0, 12.0, 4000, |z| {
                let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                density * (-c * (mu + sigma * z).exp()).exp()
            }),
            Self::PiecewiseHazard { segments } => segments
                .iter()
                .map(|s| {
                    let steps = (((s.end - s.start) * 40.0).ceil() as usize).max(200);
                    simpson(s.start, s.end, steps, |t| {
                        let hazard = self.cumulative_hazard(t).expect("piecewise");
                        s.hazard_at(t) * (-hazard - c * t).exp()
                    })
                })
                .sum(),
        }
    }
}

fn simpson(lo: f64, hi: f64, steps: usize, f: impl Fn(f64) -> f64) -> f64 {
    let steps = steps + steps % 2;
    let h = (hi - lo) / steps as f64;
    let inner: f64 = (1..steps)
        .map(|k| f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    h / 3.0 * (f(lo) + inner + f(hi))
}

fn invert_cumulative_hazard(segments: &[Segment], e: f64) -> f64 {
    let mut remaining = e;
    for s in segments {
        let mass = s.mass();
        if remaining <= mass {
            let disc = (s.a * s.a + 2.0 * s.b * remaining).max(0.0);
            let den = s.a + disc.sqrt();
            let u = if den > 0.0 {
                2.0 * remaining / den
            } else {
                0.0
            };
            return s.start + u.min(s.end - s.start);
        }
        remaining -= mass;
    }
    f64::INFINITY
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CensoringModel {
    /// `C ~ Uniform(0, upper)`.
    Uniform { upper: f64 },
    /// `C ~ Exp(rate)`.
    Exponential { rate: f64 },
    /// Exponential censoring whose rate gives `P(C < T) = rate` for the
    /// group's lifetime law.
    TargetRate { rate: f64 },
}

impl CensoringModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Uniform { upper } if upper.is_finite() && upper > 0.0 => Ok(()),
            Self::Exponential { rate } if rate.is_finite() && rate > 0.0 => Ok(()),
            Self::TargetRate { rate } if rate > 0.0 && rate < 1.0 => Ok(()),
            other => Err(Error::InvalidModel(format!("invalid censoring {other:?}"))),
        }
    }

    /// Replaces a target rate by the calibrated exponential law.
    pub fn resolve(&self, lifetime: &LifetimeModel) -> Result<Self> {
        self.validate()?;
        match *self {
            Self::TargetRate { rate } => Ok(Self::Exponential {
                rate: calibrate_censoring_rate(lifetime, rate)?,
            }),
            other => Ok(other),
        }
    }

    /// Draws a censoring time. Target rates must be resolved first.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Uniform { upper } => rng.random_range(0.0..upper),
            Self::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            Self::TargetRate { .. } => panic!("censoring target must be resolved before sampling"),
        }
    }
}

/// `(min(T, C), T <= C)`.
pub fn apply_censoring(lifetime: f64, censoring: f64) -> (f64, bool) {
    if lifetime <= censoring {
        (lifetime, true)
    } else {
        (censoring, false)
    }
}

/// Rate `c` of exponential censoring with `P(C < T) = target`.
pub fn calibrate_censoring_rate(lifetime: &LifetimeModel, target: f64) -> Result<f64> {
    lifetime.validate()?;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidModel(format!(
            "censoring target {target} outside (0, 1)"
        )));
    }
    match *lifetime {
        LifetimeModel::Exponential { rate } => return Ok(rate * target / (1.0 - target)),
        LifetimeModel::Gamma { shape, rate } => {
            return Ok(rate * ((1.0 - target).powf(-1.0 / shape) - 1.0))
        }
        _ => {}
    }
    let censored = |c: f64| 1.0 - lifetime.laplace_transform(c);
    if censored(0.0) >= target {
        return Err(Error::NoConvergence { target });
    }
    let mut hi = 1.0;
    while censored(hi) < target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoConvergence { target });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if censored(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
