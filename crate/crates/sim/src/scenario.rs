//! Study configurations and the built-in scenarios.

use serde::{Deserialize, Serialize};
use survdiff::Method;

use crate::error::{Error, Result};
use crate::model::{CensoringModel, LifetimeModel, Segment};

const HORIZON: f64 = 100.0;
pub const NULL_REPLICATIONS: usize = 500;
pub const POWER_REPLICATIONS: usize = 500;
pub const PERMUTATIONS: usize = 1000;

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub lifetime0: LifetimeModel,
    pub lifetime1: LifetimeModel,
    pub censoring0: CensoringModel,
    pub censoring1: CensoringModel,
    pub n0: usize,
    pub n1: usize,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub permutations: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha_level: f64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.lifetime0.validate()?;
        self.lifetime1.validate()?;
        self.censoring0.validate()?;
        self.censoring1.validate()?;
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n0 < 2 || self.n1 < 2 {
            return fail(format!(
                "group sizes must be at least 2, got {} and {}",
                self.n0, self.n1
            ));
        }
        if self.replications == 0 || self.permutations == 0 {
            return fail("replications and permutations must be positive".into());
        }
        if self.methods.is_empty() {
            return fail("no methods".into());
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return fail(format!("alpha_level {} outside (0, 1)", self.alpha_level));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn with_sizes(mut self, n0: usize, n1: usize) -> Self {
        self.n0 = n0;
        self.n1 = n1;
        self
    }
}

fn affine(start: f64, end: f64, a: f64, b: f64) -> Segment {
    Segment { start, end, a, b }
}

fn constant(rate: f64) -> LifetimeModel {
    LifetimeModel::constant_hazard(rate, HORIZON)
}

pub fn cure_hazard() -> LifetimeModel {
    LifetimeModel::PiecewiseHazard {
        segments: vec![affine(0.0, 5.0, 0.5, -0.1), affine(5.0, HORIZON, 0.0, 0.0)],
    }
}

pub fn multimodal_hazard() -> LifetimeModel {
    LifetimeModel::PiecewiseHazard {
        segments: vec![
            affine(0.0, 1.0, 0.2, 0.1),
            affine(1.0, 2.0, 0.5, 0.0),
            affine(2.0, 3.0, 0.2, 0.1),
            affine(3.0, 4.0, 0.5, 0.0),
            affine(4.0, 5.0, 0.2, 0.1),
            affine(5.0, HORIZON, 0.5, 0.0),
        ],
    }
}

pub fn delayed_hazard() -> LifetimeModel {
    LifetimeModel::PiecewiseHazard {
        segments: vec![affine(0.0, 5.0, 0.6, -0.1), affine(5.0, HORIZON, 0.1, 0.0)],
    }
}

fn study(
    name: String,
    lifetime0: LifetimeModel,
    lifetime1: LifetimeModel,
    censoring: CensoringModel,
    n: usize,
    replications: usize,
) -> ScenarioConfig {
    ScenarioConfig {
        name,
        lifetime0,
        lifetime1,
        censoring0: censoring,
        censoring1: censoring,
        n0: n,
        n1: n,
        methods: Method::study_roster(),
        replications,
        permutations: PERMUTATIONS,
        seed: 20_210_101,
        alpha_level: 0.05,
    }
}

fn null_laws() -> Vec<(&'static str, LifetimeModel)> {
    vec![
        ("exp1", LifetimeModel::Exponential { rate: 1.0 }),
        ("exp1.5", LifetimeModel::Exponential { rate: 1.5 }),
        (
            "gamma1-1",
            LifetimeModel::Gamma {
                shape: 1.0,
                rate: 1.0,
            },
        ),
        (
            "gamma1.5-1.5",
            LifetimeModel::Gamma {
                shape: 1.5,
                rate: 1.5,
            },
        ),
        (
            "lognormal0-0.5",
            LifetimeModel::LogNormal {
                mu: 0.0,
                sigma: 0.5,
            },
        ),
        (
            "lognormal0-0.25",
            LifetimeModel::LogNormal {
                mu: 0.0,
                sigma: 0.25,
            },
        ),
    ]
}

pub const PH_THETAS: [f64; 10] = [1.0, 1.1, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0];
pub const POWER_SIZES: [usize; 3] = [20, 50, 100];

/// Every published configuration: the null grid (`null-<law>-n<size>-c<percent>`),
/// the proportional-hazards grid (`ph-theta<theta>-n<size>`) and the cure,
/// multimodal and delayed-effect studies (`<name>-n<size>`).
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for (law, model) in null_laws() {
        for n in [20, 50] {
            for pct in [10, 30] {
                out.push(study(
                    format!("null-{law}-n{n}-c{pct}"),
                    model.clone(),
                    model.clone(),
                    CensoringModel::TargetRate {
                        rate: pct as f64 / 100.0,
                    },
                    n,
                    NULL_REPLICATIONS,
                ));
            }
        }
    }
    let uniform10 = CensoringModel::Uniform { upper: 10.0 };
    for theta in PH_THETAS {
        for n in POWER_SIZES {
            out.push(study(
                format!("ph-theta{theta}-n{n}"),
                LifetimeModel::Exponential { rate: 1.0 },
                LifetimeModel::Exponential { rate: theta },
                uniform10,
                n,
                POWER_REPLICATIONS,
            ));
        }
    }
    let shapes = [
        ("cure", constant(0.5), cure_hazard(), uniform10),
        ("multimodal", constant(0.45), multimodal_hazard(), uniform10),
        (
            "delayed",
            constant(0.4),
            delayed_hazard(),
            CensoringModel::Uniform { upper: 15.0 },
        ),
    ];
    for (name, l0, l1, censoring) in shapes {
        for n in POWER_SIZES {
            out.push(study(
                format!("{name}-n{n}"),
                l0.clone(),
                l1.clone(),
                censoring,
                n,
                POWER_REPLICATIONS,
            ));
        }
    }
    out
}

/// Looks up a built-in by full name, or by family name (`cure`, `delayed`,
/// `multimodal`, `ph-theta2`) with `n` selecting the size (default 100).
pub fn find_builtin(name: &str, n: Option<usize>) -> Result<ScenarioConfig> {
    let all = builtin_scenarios();
    if let Some(found) = all.iter().find(|s| s.name == name) {
        let found = found.clone();
        return Ok(match n {
            Some(n) => found.with_sizes(n, n),
            None => found,
        });
    }
    let size = n.unwrap_or(100);
    let family = all
        .iter()
        .find(|s| {
            s.name
                .strip_prefix(name)
                .is_some_and(|rest| rest.starts_with("-n"))
        })
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
    let mut config = all
        .iter()
        .find(|s| s.name == format!("{name}-n{size}"))
        .unwrap_or(family)
        .clone()
        .with_sizes(size, size);
    config.name = format!("{name}-n{size}");
    Ok(config)
}
