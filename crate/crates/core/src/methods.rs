//! Registry of test methods and their textual descriptors.
//!
//! A descriptor is `name` or `name:key=value,key=value`, for example
//! `energy:alpha=1`, `ratquad:c=2,beta=2` or
//! `fleming-harrington:rho=1,gamma=1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::classical::{chi2_1_sf, RiskTable, SchumacherProcesses, WeightRule};
use crate::data::PooledSample;
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, SemimetricSpec};
use crate::statistics::{Family, Form, PreparedStatistic, StatisticKind};

/// A two-sample statistic bound to a pooled sample, evaluated under a group
/// labelling in pooled order (`true` = group 1). Larger values are more
/// evidence against equal distributions.
pub trait LabelStatistic: Send + Sync {
    fn evaluate(&self, labels: &[bool]) -> Result<f64>;
}

impl LabelStatistic for PreparedStatistic {
    fn evaluate(&self, labels: &[bool]) -> Result<f64> {
        PreparedStatistic::evaluate(self, labels)
    }
}

impl<F> LabelStatistic for F
where
    F: Fn(&[bool]) -> Result<f64> + Send + Sync,
{
    fn evaluate(&self, labels: &[bool]) -> Result<f64> {
        self(labels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchumacherVariant {
    /// Standardized by `A(tau)^(-1/2)`.
    Psi,
    /// Standardized by `1 / (1 + A(t))`.
    Psi0,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Energy {
        semimetric: SemimetricSpec,
        form: Form,
        censoring_aware: bool,
    },
    Kernel {
        kernel: KernelSpec,
        form: Form,
        censoring_aware: bool,
    },
    WeightedLogRank(WeightRule),
    KsCensored(SchumacherVariant),
    CvmCensored(SchumacherVariant),
}

const DEFAULT_FORM: Form = Form::UNormalized;

impl Method {
    pub fn energy(alpha: f64) -> Result<Self> {
        Ok(Self::Energy {
            semimetric: SemimetricSpec::new(alpha)?,
            form: DEFAULT_FORM,
            censoring_aware: true,
        })
    }

    pub fn kernel(kernel: KernelSpec) -> Self {
        Self::Kernel {
            kernel,
            form: DEFAULT_FORM,
            censoring_aware: true,
        }
    }

    /// The fourteen methods of the simulation studies, in table order.
    pub fn study_roster() -> Vec<Method> {
        let mut roster: Vec<Method> = [1.0, 0.4, 0.8, 1.2, 1.6]
            .into_iter()
            .map(|a| Method::energy(a).expect("valid alpha"))
            .collect();
        roster.extend([
            Method::kernel(KernelSpec::Gaussian { sigma: 1.0 }),
            Method::kernel(KernelSpec::Laplacian { sigma: 1.0 }),
            Method::kernel(KernelSpec::RationalQuadratic { c: 1.0, beta: 1.0 }),
            Method::kernel(KernelSpec::RationalQuadratic { c: 2.0, beta: 2.0 }),
            Method::WeightedLogRank(WeightRule::LogRank),
            Method::WeightedLogRank(WeightRule::Gehan),
            Method::WeightedLogRank(WeightRule::TaroneWare),
            Method::WeightedLogRank(WeightRule::PetoPeto),
            Method::WeightedLogRank(WeightRule::FlemingHarrington {
                rho: 1.0,
                gamma: 1.0,
            }),
        ]);
        roster
    }

    /// One descriptor per registered method name, with default parameters.
    pub fn registry() -> Vec<Method> {
        let mut all = Self::study_roster();
        all.extend([
            Method::kernel(KernelSpec::Matern {
                sigma: 1.0,
                nu: 1.5,
            }),
            Method::KsCensored(SchumacherVariant::Psi),
            Method::KsCensored(SchumacherVariant::Psi0),
            Method::CvmCensored(SchumacherVariant::Psi),
            Method::CvmCensored(SchumacherVariant::Psi0),
        ]);
        all
    }

    pub fn is_logrank_family(&self) -> bool {
        matches!(self, Method::WeightedLogRank(_))
    }

    pub fn is_energy_or_kernel(&self) -> bool {
        matches!(self, Method::Energy { .. } | Method::Kernel { .. })
    }

    /// Chi-square(1) reference p-value, for the log-rank family only.
    pub fn asymptotic_p_value(&self, statistic: f64) -> Option<f64> {
        self.is_logrank_family().then(|| chi2_1_sf(statistic))
    }

    pub fn statistic_kind(&self) -> Option<StatisticKind> {
        match *self {
            Method::Energy {
                semimetric,
                form,
                censoring_aware,
            } => Some(StatisticKind {
                family: Family::Energy(semimetric),
                form,
                censoring_aware,
            }),
            Method::Kernel {
                kernel,
                form,
                censoring_aware,
            } => Some(StatisticKind {
                family: Family::Kernel(kernel),
                form,
                censoring_aware,
            }),
            _ => None,
        }
    }

    /// Binds the method to a pooled sample.
    pub fn prepare(&self, pooled: &PooledSample) -> Box<dyn LabelStatistic> {
        if let Some(kind) = self.statistic_kind() {
            return Box::new(PreparedStatistic::new(kind, pooled));
        }
        let pooled = pooled.clone();
        match *self {
            Method::WeightedLogRank(rule) => Box::new(move |labels: &[bool]| {
                crate::classical::weighted_logrank(&RiskTable::from_pooled(&pooled, labels)?, rule)
            }),
            Method::KsCensored(variant) => Box::new(move |labels: &[bool]| {
                let (q, q0) = schumacher(&pooled, labels)?.ks();
                Ok(pick(variant, q, q0))
            }),
            Method::CvmCensored(variant) => Box::new(move |labels: &[bool]| {
                let (q, q0) = schumacher(&pooled, labels)?.cvm();
                Ok(pick(variant, q, q0))
            }),
            Method::Energy { .. } | Method::Kernel { .. } => unreachable!(),
        }
    }
}

fn schumacher(pooled: &PooledSample, labels: &[bool]) -> Result<SchumacherProcesses> {
    let table = RiskTable::from_pooled(pooled, labels).map_err(|e| match e {
        Error::NoEvents => Error::DegenerateVariance,
        other => other,
    })?;
    SchumacherProcesses::from_table(&table)
}

fn pick(variant: SchumacherVariant, q: f64, q0: f64) -> f64 {
    match variant {
        SchumacherVariant::Psi => q,
        SchumacherVariant::Psi0 => q0,
    }
}

fn write_options(f: &mut fmt::Formatter<'_>, form: Form, censoring_aware: bool) -> fmt::Result {
    if form != DEFAULT_FORM {
        write!(f, ",form={form}")?;
    }
    if !censoring_aware {
        f.write_str(",weights=uniform")?;
    }
    Ok(())
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Energy {
                semimetric,
                form,
                censoring_aware,
            } => {
                write!(f, "{semimetric}")?;
                write_options(f, *form, *censoring_aware)
            }
            Method::Kernel {
                kernel,
                form,
                censoring_aware,
            } => {
                write!(f, "{kernel}")?;
                write_options(f, *form, *censoring_aware)
            }
            Method::WeightedLogRank(rule) => write!(f, "{rule}"),
            Method::KsCensored(v) => match v {
                SchumacherVariant::Psi => f.write_str("ks-censored"),
                SchumacherVariant::Psi0 => f.write_str("ks-censored:variant=psi0"),
            },
            Method::CvmCensored(v) => match v {
                SchumacherVariant::Psi => f.write_str("cvm-censored"),
                SchumacherVariant::Psi0 => f.write_str("cvm-censored:variant=psi0"),
            },
        }
    }
}

struct Params<'a> {
    descriptor: &'a str,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Params<'a> {
    fn parse(descriptor: &'a str, body: Option<&'a str>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for part in body.into_iter().flat_map(|b| b.split(',')) {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (k, v) = part.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("`{part}` in `{descriptor}` is not key=value"))
            })?;
            if map.insert(k.trim(), v.trim()).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "`{k}` repeated in `{descriptor}`"
                )));
            }
        }
        Ok(Self { descriptor, map })
    }

    fn number(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.map.remove(key) {
            Some(v) => v.parse::<f64>().map_err(|_| {
                Error::InvalidParameter(format!(
                    "`{key}={v}` in `{}` is not a number",
                    self.descriptor
                ))
            }),
            None => default.ok_or_else(|| {
                Error::InvalidParameter(format!("`{}` needs `{key}`", self.descriptor))
            }),
        }
    }

    fn form(&mut self) -> Result<(Form, bool)> {
        let form = match self.map.remove("form") {
            None => DEFAULT_FORM,
            Some(v) => Form::parse(v).ok_or_else(|| {
                Error::InvalidParameter(format!("unknown form `{v}` (expected u, v or vn)"))
            })?,
        };
        let censoring_aware = match self.map.remove("weights") {
            None | Some("km") => true,
            Some("uniform") => false,
            Some(v) => {
                return Err(Error::InvalidParameter(format!(
                    "unknown weights `{v}` (expected km or uniform)"
                )))
            }
        };
        Ok((form, censoring_aware))
    }

    fn variant(&mut self) -> Result<SchumacherVariant> {
        match self.map.remove("variant") {
            None | Some("psi") => Ok(SchumacherVariant::Psi),
            Some("psi0") => Ok(SchumacherVariant::Psi0),
            Some(v) => Err(Error::InvalidParameter(format!(
                "unknown variant `{v}` (expected psi or psi0)"
            ))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::InvalidParameter(format!(
                "unexpected parameter `{k}` in `{}`",
                self.descriptor
            ))),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, body) = match s.split_once(':') {
            Some((n, b)) => (n.trim(), Some(b)),
            None => (s, None),
        };
        let mut p = Params::parse(s, body)?;
        let method = match name.to_ascii_lowercase().as_str() {
            "energy" => {
                let semimetric = SemimetricSpec::new(p.number("alpha", Some(1.0))?)?;
                let (form, censoring_aware) = p.form()?;
                Method::Energy {
                    semimetric,
                    form,
                    censoring_aware,
                }
            }
            kernel @ ("gaussian" | "laplacian" | "ratquad" | "matern") => {
                let spec = match kernel {
                    "gaussian" => KernelSpec::gaussian(p.number("sigma", Some(1.0))?)?,
                    "laplacian" => KernelSpec::laplacian(p.number("sigma", Some(1.0))?)?,
                    "ratquad" => KernelSpec::rational_quadratic(
                        p.number("c", Some(1.0))?,
                        p.number("beta", Some(1.0))?,
                    )?,
                    _ => KernelSpec::matern(
                        p.number("sigma", Some(1.0))?,
                        p.number("nu", Some(1.5))?,
                    )?,
                };
                let (form, censoring_aware) = p.form()?;
                Method::Kernel {
                    kernel: spec,
                    form,
                    censoring_aware,
                }
            }
            "logrank" | "log-rank" => Method::WeightedLogRank(WeightRule::LogRank),
            "gehan" => Method::WeightedLogRank(WeightRule::Gehan),
            "tarone-ware" => Method::WeightedLogRank(WeightRule::TaroneWare),
            "peto-peto" | "peto" => Method::WeightedLogRank(WeightRule::PetoPeto),
            "fleming-harrington" | "fh" => {
                let rho = p.number("rho", Some(1.0))?;
                let gamma = p.number("gamma", Some(1.0))?;
                Method::WeightedLogRank(WeightRule::fleming_harrington(rho, gamma)?)
            }
            "ks-censored" => Method::KsCensored(p.variant()?),
            "cvm-censored" => Method::CvmCensored(p.variant()?),
            _ => return Err(Error::UnknownMethod(s.to_string())),
        };
        p.finish()?;
        Ok(method)
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
