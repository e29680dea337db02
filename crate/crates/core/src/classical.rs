//! Weighted log-rank tests and the censored Kolmogorov–Smirnov and
//! Cramér–von Mises statistics built on Nelson–Aalen hazard differences.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{PooledSample, TwoSampleData};
use crate::error::{Error, Result};

/// Pooled distinct event times with per-group risk sets and event counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskTable {
    pub times: Vec<f64>,
    pub at_risk0: Vec<usize>,
    pub at_risk1: Vec<usize>,
    pub events0: Vec<usize>,
    pub events1: Vec<usize>,
    pub n0: usize,
    pub n1: usize,
    /// Largest observed time in each group, censored or not.
    pub max_time0: f64,
    pub max_time1: f64,
}

impl RiskTable {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn at_risk(&self, j: usize) -> usize {
        self.at_risk0[j] + self.at_risk1[j]
    }

    pub fn events(&self, j: usize) -> usize {
        self.events0[j] + self.events1[j]
    }

    /// Builds the table for a pooled sample under `labels` (`true` = group 1).
    pub fn from_pooled(pooled: &PooledSample, labels: &[bool]) -> Result<Self> {
        let times = pooled.times();
        let events = pooled.events();
        let n = times.len();
        let n1 = labels.iter().filter(|&&l| l).count();
        let n0 = n - n1;
        let mut table = RiskTable {
            times: Vec::new(),
            at_risk0: Vec::new(),
            at_risk1: Vec::new(),
            events0: Vec::new(),
            events1: Vec::new(),
            n0,
            n1,
            max_time0: f64::NEG_INFINITY,
            max_time1: f64::NEG_INFINITY,
        };
        let (mut left0, mut left1) = (n0, n1);
        let mut k = 0;
        while k < n {
            let t = times[k];
            let (y0, y1) = (left0, left1);
            let (mut d0, mut d1) = (0, 0);
            while k < n && times[k] == t {
                if labels[k] {
                    left1 -= 1;
                    d1 += usize::from(events[k]);
                    table.max_time1 = t;
                } else {
                    left0 -= 1;
                    d0 += usize::from(events[k]);
                    table.max_time0 = t;
                }
                k += 1;
            }
            if d0 + d1 > 0 {
                table.times.push(t);
                table.at_risk0.push(y0);
                table.at_risk1.push(y1);
                table.events0.push(d0);
                table.events1.push(d1);
            }
        }
        if table.is_empty() {
            return Err(Error::NoEvents);
        }
        Ok(table)
    }
}

pub fn build_risk_table(data: &TwoSampleData) -> Result<RiskTable> {
    let pooled = data.pooled();
    RiskTable::from_pooled(&pooled, pooled.labels())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum WeightRule {
    LogRank,
    Gehan,
    TaroneWare,
    PetoPeto,
    FlemingHarrington { rho: f64, gamma: f64 },
}

impl WeightRule {
    pub fn fleming_harrington(rho: f64, gamma: f64) -> Result<Self> {
        if rho.is_finite() && gamma.is_finite() && rho >= 0.0 && gamma >= 0.0 {
            Ok(Self::FlemingHarrington { rho, gamma })
        } else {
            Err(Error::InvalidParameter(format!(
                "rho and gamma must be nonnegative, got rho={rho}, gamma={gamma}"
            )))
        }
    }

    /// Weight at each row of the table. Kaplan–Meier factors use the pooled
    /// sample: Peto-Peto takes `S(tau_j)`, Fleming–Harrington the left limit
    /// `S(tau_j-)` in both factors.
    pub fn weights(&self, table: &RiskTable) -> Vec<f64> {
        let mut survival = 1.0;
        (0..table.len())
            .map(|j| {
                let y = table.at_risk(j) as f64;
                let left = survival;
                survival *= 1.0 - table.events(j) as f64 / y;
                match *self {
                    Self::LogRank => 1.0,
                    Self::Gehan => y,
                    Self::TaroneWare => y.sqrt(),
                    Self::PetoPeto => survival,
                    Self::FlemingHarrington { rho, gamma } => {
                        left.powf(rho) * (1.0 - left).powf(gamma)
                    }
                }
            })
            .collect()
    }
}

impl fmt::Display for WeightRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LogRank => f.write_str("logrank"),
            Self::Gehan => f.write_str("gehan"),
            Self::TaroneWare => f.write_str("tarone-ware"),
            Self::PetoPeto => f.write_str("peto-peto"),
            Self::FlemingHarrington { rho, gamma } => {
                write!(f, "fleming-harrington:rho={rho},gamma={gamma}")
            }
        }
    }
}

/// Squared standardized weighted log-rank statistic
/// `[sum w (d1 - E d1)]^2 / sum w^2 Var d1` with hypergeometric moments.
pub fn weighted_logrank(table: &RiskTable, rule: WeightRule) -> Result<f64> {
    let weights = rule.weights(table);
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, &w) in weights.iter().enumerate() {
        let y = table.at_risk(j) as f64;
        let y1 = table.at_risk1[j] as f64;
        let d = table.events(j) as f64;
        let p1 = y1 / y;
        num += w * (table.events1[j] as f64 - d * p1);
        if y > 1.0 {
            den += w * w * d * p1 * (1.0 - p1) * (y - d) / (y - 1.0);
        }
    }
    if !(den > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(num * num / den)
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi2_1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        libm::erfc((x / 2.0).sqrt())
    }
}

/// Step processes evaluated at the pooled event times in `[0, tau]`,
/// `tau = min(tau0, tau1)`. Values are right-continuous; all processes are
/// zero before the first entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchumacherProcesses {
    pub times: Vec<f64>,
    pub a0: Vec<f64>,
    pub a1: Vec<f64>,
    pub a: Vec<f64>,
    pub h: Vec<f64>,
    /// Nelson–Aalen difference `Lambda1 - Lambda0`.
    pub epsilon: Vec<f64>,
    pub tau: f64,
    pub a_tau: f64,
    /// `1 / sqrt(A(tau))`, constant in `t`.
    pub psi: f64,
    /// `1 / (1 + A(t))`
    pub psi0: Vec<f64>,
    pub n: usize,
}

impl SchumacherProcesses {
    pub fn from_table(table: &RiskTable) -> Result<Self> {
        let tau = table.max_time0.min(table.max_time1);
        let n = table.n0 + table.n1;
        let (n0, n1, nf) = (table.n0 as f64, table.n1 as f64, n as f64);
        let mut out = SchumacherProcesses {
            times: Vec::new(),
            a0: Vec::new(),
            a1: Vec::new(),
            a: Vec::new(),
            h: Vec::new(),
            epsilon: Vec::new(),
            tau,
            a_tau: 0.0,
            psi: f64::INFINITY,
            psi0: Vec::new(),
            n,
        };
        let (mut na0, mut na1, mut a0, mut a1) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..table.len() {
            let t = table.times[j];
            if t > tau {
                break;
            }
            let (y0, y1) = (table.at_risk0[j] as f64, table.at_risk1[j] as f64);
            let (d0, d1) = (table.events0[j] as f64, table.events1[j] as f64);
            if d0 > 0.0 {
                na0 += d0 / y0;
                a0 += n0 * d0 / (y0 * (y0 + 1.0));
            }
            if d1 > 0.0 {
                na1 += d1 / y1;
                a1 += n1 * d1 / (y1 * (y1 + 1.0));
            }
            let a = nf / n0 * a0 + nf / n1 * a1;
            out.times.push(t);
            out.a0.push(a0);
            out.a1.push(a1);
            out.a.push(a);
            out.h.push(a / (1.0 + a));
            out.epsilon.push(na1 - na0);
            out.psi0.push(1.0 / (1.0 + a));
        }
        out.a_tau = out.a.last().copied().unwrap_or(0.0);
        if !(out.a_tau > 0.0) {
            return Err(Error::DegenerateVariance);
        }
        out.psi = 1.0 / out.a_tau.sqrt();
        Ok(out)
    }

    /// `(Q_KS, Q0_KS)`: suprema over the jump points of `|eps psi|` and
    /// `|eps psi0|`, scaled by `n0 + n1`.
    pub fn ks(&self) -> (f64, f64) {
        let n = self.n as f64;
        let mut sup = 0.0f64;
        let mut sup0 = 0.0f64;
        for (e, p0) in self.epsilon.iter().zip(&self.psi0) {
            sup = sup.max((e * self.psi).abs());
            sup0 = sup0.max((e * p0).abs());
        }
        (n * sup, n * sup0)
    }

    /// `(Q_CM, Q0_CM)`: Stieltjes sums over the jumps of `A` and `H` with the
    /// integrand taken just before each jump.
    pub fn cvm(&self) -> (f64, f64) {
        let n = self.n as f64;
        let (mut q, mut q0) = (0.0, 0.0);
        let (mut eps_left, mut a_left, mut h_left, mut psi0_left) = (0.0, 0.0, 0.0, 1.0);
        for j in 0..self.times.len() {
            let x = eps_left * self.psi;
            q += x * x * (self.a[j] - a_left);
            let x0 = eps_left * psi0_left;
            q0 += x0 * x0 * (self.h[j] - h_left);
            eps_left = self.epsilon[j];
            a_left = self.a[j];
            h_left = self.h[j];
            psi0_left = self.psi0[j];
        }
        (n / self.a_tau * q, n * q0)
    }
}

pub fn schumacher_processes(data: &TwoSampleData) -> Result<SchumacherProcesses> {
    SchumacherProcesses::from_table(&build_risk_table(data).map_err(|e| match e {
        Error::NoEvents => Error::DegenerateVariance,
        other => other,
    })?)
}

pub fn ks_censored(data: &TwoSampleData) -> Result<(f64, f64)> {
    Ok(schumacher_processes(data)?.ks())
}

pub fn cvm_censored(data: &TwoSampleData) -> Result<(f64, f64)> {
    Ok(schumacher_processes(data)?.cvm())
}
