//! Energy-distance and kernel-MMD statistics for right-censored samples.
//!
//! Each group's empirical measure is replaced by its Kaplan–Meier integral
//! weights. Three forms are available:
//!
//! * [`Form::V`]: full double sums with the raw weights (diagonal included).
//! * [`Form::VNormalized`]: the same with each group's weights rescaled to
//!   total mass one.
//! * [`Form::UNormalized`]: each of the three terms is a weighted mean; the
//!   within-group means exclude the diagonal.
//!
//! Energy statistics combine the terms as `2 between - within0 - within1`,
//! kernel statistics as `within0 + within1 - 2 between`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{PooledSample, TwoSampleData};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, SemimetricSpec};
use crate::km::km_weights_into;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Energy(SemimetricSpec),
    Kernel(KernelSpec),
    /// MMD with the kernel induced by `|x - y|^alpha` around `anchor`.
    InducedKernel {
        semimetric: SemimetricSpec,
        anchor: f64,
    },
}

impl Family {
    pub fn pair(&self, x: f64, y: f64) -> f64 {
        match self {
            Family::Energy(s) => s.eval(x, y),
            Family::Kernel(k) => k.eval(x, y),
            Family::InducedKernel { semimetric, anchor } => {
                semimetric.induced_kernel(*anchor, x, y)
            }
        }
    }

    fn is_energy(&self) -> bool {
        matches!(self, Family::Energy(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    V,
    VNormalized,
    UNormalized,
}

impl Form {
    pub fn as_str(&self) -> &'static str {
        match self {
            Form::V => "v",
            Form::VNormalized => "vn",
            Form::UNormalized => "u",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "v" => Some(Form::V),
            "vn" => Some(Form::VNormalized),
            "u" => Some(Form::UNormalized),
            _ => None,
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticKind {
    pub family: Family,
    pub form: Form,
    /// Kaplan–Meier weights when set, uniform `1/n` weights (ignoring the
    /// event flags) otherwise.
    pub censoring_aware: bool,
}

impl StatisticKind {
    pub fn censored(family: Family, form: Form) -> Self {
        Self {
            family,
            form,
            censoring_aware: true,
        }
    }

    pub fn uncensored(family: Family, form: Form) -> Self {
        Self {
            family,
            form,
            censoring_aware: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatisticValue {
    pub raw: f64,
    /// `raw * n0 n1 / (n0 + n1)`
    pub scaled: f64,
}

impl StatisticValue {
    pub fn new(raw: f64, n0: usize, n1: usize) -> Self {
        Self {
            raw,
            scaled: t_scale(raw, n0, n1),
        }
    }
}

pub fn t_scale(raw: f64, n0: usize, n1: usize) -> f64 {
    let (a, b) = (n0 as f64, n1 as f64);
    raw * (a * b / (a + b))
}

/// Pairwise summation; error grows with `log n` instead of `n`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let (lo, hi) = xs.split_at(xs.len() / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// Pooled samples above this size evaluate pair terms on the fly instead of
/// caching the full matrix.
const MATRIX_LIMIT: usize = 4096;

/// A statistic bound to one pooled sample, ready to be evaluated under any
/// group labelling. Pair terms are cached once per pooled sample, so each
/// relabelling costs one pass over the pairs of weighted observations.
#[derive(Debug, Clone)]
pub struct PreparedStatistic {
    kind: StatisticKind,
    times: Vec<f64>,
    events: Vec<bool>,
    matrix: Option<Vec<f64>>,
}

struct GroupWeights {
    index: Vec<usize>,
    weight: Vec<f64>,
    mass: f64,
}

impl PreparedStatistic {
    pub fn new(kind: StatisticKind, pooled: &PooledSample) -> Self {
        let times = pooled.times().to_vec();
        let n = times.len();
        let matrix = (n <= MATRIX_LIMIT).then(|| {
            let mut m = vec![0.0; n * n];
            for a in 0..n {
                for b in a..n {
                    let v = kind.family.pair(times[a], times[b]);
                    m[a * n + b] = v;
                    m[b * n + a] = v;
                }
            }
            m
        });
        Self {
            kind,
            times,
            events: pooled.events().to_vec(),
            matrix,
        }
    }

    pub fn kind(&self) -> &StatisticKind {
        &self.kind
    }

    #[inline]
    fn pair(&self, a: usize, b: usize) -> f64 {
        match &self.matrix {
            Some(m) => m[a * self.times.len() + b],
            None => self.kind.family.pair(self.times[a], self.times[b]),
        }
    }

    fn group_weights(&self, labels: &[bool], group: bool) -> GroupWeights {
        let members: Vec<usize> = (0..labels.len()).filter(|&k| labels[k] == group).collect();
        let m = members.len();
        let mut raw = vec![0.0; m];
        let mass = if self.kind.censoring_aware {
            let events: Vec<bool> = members.iter().map(|&k| self.events[k]).collect();
            km_weights_into(&events, &mut raw)
        } else {
            raw.fill(1.0 / m as f64);
            if m == 0 {
                0.0
            } else {
                1.0
            }
        };
        let mut index = Vec::with_capacity(m);
        let mut weight = Vec::with_capacity(m);
        for (&k, &w) in members.iter().zip(&raw) {
            if w > 0.0 {
                index.push(k);
                weight.push(w);
            }
        }
        GroupWeights {
            index,
            weight,
            mass,
        }
    }

    /// Off-diagonal within-group sum and diagonal sum.
    fn within(&self, g: &GroupWeights) -> (f64, f64) {
        let rows: Vec<f64> = g
            .index
            .iter()
            .zip(&g.weight)
            .enumerate()
            .map(|(i, (&a, &wa))| {
                let mut acc = 0.0;
                for (j, (&b, &wb)) in g.index.iter().zip(&g.weight).enumerate() {
                    if i != j {
                        acc += wb * self.pair(a, b);
                    }
                }
                wa * acc
            })
            .collect();
        let diag: Vec<f64> = g
            .index
            .iter()
            .zip(&g.weight)
            .map(|(&a, &w)| w * w * self.pair(a, a))
            .collect();
        (pairwise_sum(&rows), pairwise_sum(&diag))
    }

    fn between(&self, g0: &GroupWeights, g1: &GroupWeights) -> f64 {
        let rows: Vec<f64> = g0
            .index
            .iter()
            .zip(&g0.weight)
            .map(|(&a, &wa)| {
                let mut acc = 0.0;
                for (&b, &wb) in g1.index.iter().zip(&g1.weight) {
                    acc += wb * self.pair(a, b);
                }
                wa * acc
            })
            .collect();
        pairwise_sum(&rows)
    }

    /// Raw statistic under `labels` (`true` = group 1), indexed in pooled order.
    pub fn evaluate(&self, labels: &[bool]) -> Result<f64> {
        let mut g0 = self.group_weights(labels, false);
        let mut g1 = self.group_weights(labels, true);
        for (group, g) in [(0, &g0), (1, &g1)] {
            if g.mass <= 0.0 {
                return Err(Error::DegenerateWeights { group });
            }
        }
        if self.kind.form == Form::VNormalized {
            for g in [&mut g0, &mut g1] {
                let mass = g.mass;
                g.weight.iter_mut().for_each(|w| *w /= mass);
                g.mass = 1.0;
            }
        }
        let (off0, diag0) = self.within(&g0);
        let (off1, diag1) = self.within(&g1);
        let cross = self.between(&g0, &g1);
        let (w0, w1, b) = match self.kind.form {
            Form::V | Form::VNormalized => (off0 + diag0, off1 + diag1, cross),
            Form::UNormalized => {
                let den = |g: &GroupWeights| {
                    pairwise_sum(
                        &g.weight
                            .iter()
                            .map(|&w| w * (g.mass - w))
                            .collect::<Vec<_>>(),
                    )
                };
                let (d0, d1) = (den(&g0), den(&g1));
                if !(d0 > 0.0) || g0.index.len() < 2 {
                    return Err(Error::DegenerateWeights { group: 0 });
                }
                if !(d1 > 0.0) || g1.index.len() < 2 {
                    return Err(Error::DegenerateWeights { group: 1 });
                }
                (off0 / d0, off1 / d1, cross / (g0.mass * g1.mass))
            }
        };
        Ok(if self.kind.family.is_energy() {
            2.0 * b - w0 - w1
        } else {
            w0 + w1 - 2.0 * b
        })
    }
}

pub fn compute(kind: StatisticKind, data: &TwoSampleData) -> Result<StatisticValue> {
    let pooled = data.pooled();
    let raw = PreparedStatistic::new(kind, &pooled).evaluate(pooled.labels())?;
    Ok(StatisticValue::new(raw, data.n0(), data.n1()))
}

/// Kaplan–Meier-weighted V statistic.
pub fn v_statistic_censored(family: Family, data: &TwoSampleData) -> Result<StatisticValue> {
    compute(StatisticKind::censored(family, Form::V), data)
}

/// Kaplan–Meier-weighted statistic with each term normalized to a weighted mean.
pub fn u_statistic_censored_normalized(
    family: Family,
    data: &TwoSampleData,
) -> Result<StatisticValue> {
    compute(StatisticKind::censored(family, Form::UNormalized), data)
}

/// Classical statistic with uniform weights; event flags are ignored.
pub fn statistic_uncensored(
    family: Family,
    form: Form,
    data: &TwoSampleData,
) -> Result<StatisticValue> {
    compute(StatisticKind::uncensored(family, form), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SurvivalSample;

    fn energy(alpha: f64) -> Family {
        Family::Energy(SemimetricSpec::new(alpha).unwrap())
    }

    fn data(t0: &[f64], e0: &[i64], t1: &[f64], e1: &[i64]) -> TwoSampleData {
        TwoSampleData::new(
            SurvivalSample::validate(t0, e0).unwrap(),
            SurvivalSample::validate(t1, e1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn v_energy_identical_samples_is_zero() {
        let d = data(&[0.0, 1.0], &[1, 1], &[0.0, 1.0], &[1, 1]);
        assert_eq!(v_statistic_censored(energy(1.0), &d).unwrap().raw, 0.0);
    }

    #[test]
    fn v_energy_two_points() {
        let d = data(&[0.0], &[1], &[1.0], &[1]);
        assert_eq!(v_statistic_censored(energy(1.0), &d).unwrap().raw, 2.0);
    }

    #[test]
    fn all_censored_group_is_degenerate() {
        let d = data(&[0.0, 1.0], &[1, 1], &[2.0, 3.0], &[0, 0]);
        assert_eq!(
            v_statistic_censored(energy(1.0), &d),
            Err(Error::DegenerateWeights { group: 1 })
        );
    }

    #[test]
    fn u_energy_by_hand() {
        let d = data(&[0.0, 1.0], &[1, 1], &[0.0, 1.0], &[1, 1]);
        let v = u_statistic_censored_normalized(energy(1.0), &d).unwrap();
        assert!((v.raw + 1.0).abs() < 1e-15);
        assert!((v.scaled + 1.0).abs() < 1e-15);
    }

    #[test]
    fn u_form_needs_two_events_per_group() {
        let d = data(&[1.0], &[1], &[1.0], &[1]);
        assert!(matches!(
            u_statistic_censored_normalized(energy(1.0), &d),
            Err(Error::DegenerateWeights { .. })
        ));
    }

    #[test]
    fn uncensored_v_energy_by_enumeration() {
        let d = data(&[0.0, 2.0], &[1, 0], &[1.0], &[0]);
        let v = statistic_uncensored(energy(1.0), Form::V, &d).unwrap();
        assert!((v.raw - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_mmd_of_identical_samples_is_zero() {
        let k = Family::Kernel(KernelSpec::gaussian(1.0).unwrap());
        let d = data(&[0.3, 1.7, 2.2], &[1, 1, 1], &[0.3, 1.7, 2.2], &[1, 1, 1]);
        let v = statistic_uncensored(k, Form::V, &d).unwrap();
        assert!(v.raw.abs() < 1e-15);
    }

    #[test]
    fn t_scale_values() {
        assert_eq!(t_scale(1.0, 20, 20), 10.0);
        assert_eq!(t_scale(0.0, 3, 9), 0.0);
        assert_eq!(t_scale(-1.0, 2, 2), -1.0);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn streaming_pair_terms_match_cached_matrix() {
        let kind = StatisticKind::censored(energy(0.8), Form::UNormalized);
        let d = data(
            &[0.5, 1.2, 2.0, 3.1, 0.7],
            &[1, 0, 1, 1, 1],
            &[0.4, 2.5, 1.1, 4.0],
            &[1, 1, 0, 1],
        );
        let pooled = d.pooled();
        let cached = PreparedStatistic::new(kind, &pooled);
        let mut streaming = cached.clone();
        streaming.matrix = None;
        assert_eq!(
            cached.evaluate(pooled.labels()).unwrap(),
            streaming.evaluate(pooled.labels()).unwrap()
        );
    }
}
