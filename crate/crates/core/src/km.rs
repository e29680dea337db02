//! Kaplan–Meier integral weights, the product-limit survival curve and the
//! Nelson–Aalen cumulative hazard.

use std::io::Write;

use serde::Serialize;

use crate::data::OrderedSample;

/// Per-observation Kaplan–Meier masses for an ordered sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmWeights {
    pub weights: Vec<f64>,
    pub total_mass: f64,
}

/// Writes the Kaplan–Meier integral weights of a censoring-ordered sequence of
/// event flags into `out`:
///
/// `W_i = d_i / (n - i + 1) * prod_{j < i} ((n - j) / (n - j + 1))^{d_j}`
///
/// with 1-based `i`. Tied observations are processed one at a time.
pub fn km_weights_into(events: &[bool], out: &mut [f64]) -> f64 {
    debug_assert_eq!(events.len(), out.len());
    let n = events.len();
    let mut carry = 1.0;
    let mut total = 0.0;
    for (k, (&event, w)) in events.iter().zip(out.iter_mut()).enumerate() {
        // k is 0-based: n - i + 1 with i = k + 1.
        let remaining = (n - k) as f64;
        if event {
            *w = carry / remaining;
            total += *w;
            carry *= (remaining - 1.0) / remaining;
        } else {
            *w = 0.0;
        }
    }
    total
}

pub fn km_weights(ordered: &OrderedSample) -> KmWeights {
    let mut weights = vec![0.0; ordered.len()];
    let total_mass = km_weights_into(ordered.events(), &mut weights);
    KmWeights {
        weights,
        total_mass,
    }
}

/// Right-continuous step function: `initial` before the first knot, then
/// `values[k]` on `[knots[k], knots[k + 1])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCurve {
    pub initial: f64,
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepCurve {
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.knots.partition_point(|&knot| knot <= t);
        if k == 0 {
            self.initial
        } else {
            self.values[k - 1]
        }
    }

    /// Value just before `t`.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.knots.partition_point(|&knot| knot < t);
        if k == 0 {
            self.initial
        } else {
            self.values[k - 1]
        }
    }

    pub fn last_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.initial)
    }

    /// `t,value` rows, starting with the level at time zero.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,value")?;
        writeln!(out, "0,{}", self.initial)?;
        for (t, v) in self.knots.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Distinct event times with the events `d` and the risk set `Y` at each.
fn event_groups(ordered: &OrderedSample) -> Vec<(f64, usize, usize)> {
    let times = ordered.times();
    let events = ordered.events();
    let n = times.len();
    let mut out = Vec::new();
    let mut k = 0;
    while k < n {
        let t = times[k];
        let at_risk = n - k;
        let mut deaths = 0;
        let mut m = k;
        while m < n && times[m] == t {
            deaths += usize::from(events[m]);
            m += 1;
        }
        if deaths > 0 {
            out.push((t, deaths, at_risk));
        }
        k = m;
    }
    out
}

/// Product-limit estimator `S(t) = prod_{tau <= t} (1 - d/Y)` with knots at
/// the distinct event times.
pub fn km_survival(ordered: &OrderedSample) -> StepCurve {
    let mut s = 1.0;
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for (t, d, y) in event_groups(ordered) {
        s *= 1.0 - d as f64 / y as f64;
        knots.push(t);
        values.push(s);
    }
    StepCurve {
        initial: 1.0,
        knots,
        values,
    }
}

/// `Lambda(t) = sum_{tau <= t} d/Y`.
pub fn nelson_aalen(ordered: &OrderedSample) -> StepCurve {
    let mut h = 0.0;
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for (t, d, y) in event_groups(ordered) {
        h += d as f64 / y as f64;
        knots.push(t);
        values.push(h);
    }
    StepCurve {
        initial: 0.0,
        knots,
        values,
    }
}
