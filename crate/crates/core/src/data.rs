//! Survival samples and the censoring-aware ordering used by every estimator.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed times `min(T, C)` with event flags (`true` = death observed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSample {
    times: Vec<f64>,
    events: Vec<bool>,
}

impl SurvivalSample {
    /// Validates raw input. Events must be 0 or 1.
    pub fn validate(times: &[f64], events: &[i64]) -> Result<Self> {
        if times.len() != events.len() {
            return Err(Error::LengthMismatch {
                times: times.len(),
                events: events.len(),
            });
        }
        let flags = events
            .iter()
            .enumerate()
            .map(|(index, &value)| match value {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::NonBinaryEvent { index, value }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(times.to_vec(), flags)
    }

    pub fn new(times: Vec<f64>, events: Vec<bool>) -> Result<Self> {
        if times.len() != events.len() {
            return Err(Error::LengthMismatch {
                times: times.len(),
                events: events.len(),
            });
        }
        if times.is_empty() {
            return Err(Error::Empty);
        }
        for (index, &value) in times.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NaNOrInfinite { index });
            }
            if value < 0.0 {
                return Err(Error::NegativeTime { index, value });
            }
        }
        Ok(Self { times, events })
    }

    /// A sample where every observation is an event.
    pub fn uncensored(times: Vec<f64>) -> Result<Self> {
        let events = vec![true; times.len()];
        Self::new(times, events)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }
}

/// Ascending time order; at equal times events come before censorings.
pub(crate) fn censoring_order(a: (f64, bool), b: (f64, bool)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| b.1.cmp(&a.1))
}

/// A sample sorted by [`order_with_censoring`].
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSample {
    times: Vec<f64>,
    events: Vec<bool>,
    original_indices: Vec<usize>,
}

impl OrderedSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    /// `original_indices[k]` is the input position of the `k`-th sorted observation.
    pub fn original_indices(&self) -> &[usize] {
        &self.original_indices
    }

    /// Undoes the sort.
    pub fn restore(&self) -> SurvivalSample {
        let n = self.len();
        let mut times = vec![0.0; n];
        let mut events = vec![false; n];
        for (k, &orig) in self.original_indices.iter().enumerate() {
            times[orig] = self.times[k];
            events[orig] = self.events[k];
        }
        SurvivalSample { times, events }
    }

    pub fn to_sample(&self) -> SurvivalSample {
        SurvivalSample {
            times: self.times.clone(),
            events: self.events.clone(),
        }
    }
}

/// Sorts by time, placing events before censorings at tied times. The sort
/// is stable, so fully tied observations keep their input order.
pub fn order_with_censoring(sample: &SurvivalSample) -> OrderedSample {
    let mut idx: Vec<usize> = (0..sample.len()).collect();
    idx.sort_by(|&a, &b| {
        censoring_order(
            (sample.times[a], sample.events[a]),
            (sample.times[b], sample.events[b]),
        )
    });
    OrderedSample {
        times: idx.iter().map(|&i| sample.times[i]).collect(),
        events: idx.iter().map(|&i| sample.events[i]).collect(),
        original_indices: idx,
    }
}

/// Two groups, labelled 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleData {
    pub group0: SurvivalSample,
    pub group1: SurvivalSample,
}

impl TwoSampleData {
    pub fn new(group0: SurvivalSample, group1: SurvivalSample) -> Result<Self> {
        if group0.is_empty() || group1.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self { group0, group1 })
    }

    /// Builds the two groups from pooled `(time, event, group)` columns.
    pub fn from_columns(times: &[f64], events: &[i64], groups: &[i64]) -> Result<Self> {
        if groups.len() != times.len() {
            return Err(Error::LengthMismatch {
                times: times.len(),
                events: groups.len(),
            });
        }
        let mut parts: [(Vec<f64>, Vec<i64>); 2] = Default::default();
        for (index, &g) in groups.iter().enumerate() {
            let slot = match g {
                0 => 0,
                1 => 1,
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "group {g} at index {index} is not 0 or 1"
                    )))
                }
            };
            parts[slot].0.push(times[index]);
            parts[slot]
                .1
                .push(*events.get(index).ok_or(Error::LengthMismatch {
                    times: times.len(),
                    events: events.len(),
                })?);
        }
        let [(t0, e0), (t1, e1)] = parts;
        Self::new(
            SurvivalSample::validate(&t0, &e0)?,
            SurvivalSample::validate(&t1, &e1)?,
        )
    }

    pub fn n0(&self) -> usize {
        self.group0.len()
    }

    pub fn n1(&self) -> usize {
        self.group1.len()
    }

    pub fn swapped(&self) -> Self {
        Self {
            group0: self.group1.clone(),
            group1: self.group0.clone(),
        }
    }

    pub fn pooled(&self) -> PooledSample {
        PooledSample::from_data(self)
    }
}

/// Both groups merged and sorted with [`order_with_censoring`]; the group
/// membership of each sorted observation is kept as a label vector.
///
/// Per-group ordered samples are subsequences of the pooled order, which is
/// what lets a label permutation be evaluated without re-sorting.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSample {
    times: Vec<f64>,
    events: Vec<bool>,
    labels: Vec<bool>,
    n1: usize,
}

impl PooledSample {
    pub fn from_data(data: &TwoSampleData) -> Self {
        let mut rows: Vec<(f64, bool, bool)> = Vec::with_capacity(data.n0() + data.n1());
        for (group, sample) in [(false, &data.group0), (true, &data.group1)] {
            rows.extend(
                sample
                    .times()
                    .iter()
                    .zip(sample.events())
                    .map(|(&t, &e)| (t, e, group)),
            );
        }
        rows.sort_by(|a, b| censoring_order((a.0, a.1), (b.0, b.1)));
        Self {
            times: rows.iter().map(|r| r.0).collect(),
            events: rows.iter().map(|r| r.1).collect(),
            labels: rows.iter().map(|r| r.2).collect(),
            n1: data.n1(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    /// Observed labels: `true` marks group 1.
    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn n0(&self) -> usize {
        self.len() - self.n1
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Splits the pooled sample back into two groups under `labels`.
    pub fn split(&self, labels: &[bool]) -> Result<TwoSampleData> {
        let mut g: [(Vec<f64>, Vec<bool>); 2] = Default::default();
        for ((&t, &e), &l) in self.times.iter().zip(&self.events).zip(labels) {
            let slot = &mut g[usize::from(l)];
            slot.0.push(t);
            slot.1.push(e);
        }
        let [(t0, e0), (t1, e1)] = g;
        TwoSampleData::new(SurvivalSample::new(t0, e0)?, SurvivalSample::new(t1, e1)?)
    }
}
