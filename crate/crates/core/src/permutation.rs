//! Label-permutation calibration of two-sample statistics.
//!
//! Replication `r` draws its labels from a ChaCha stream selected by `r`
//! under the plan's seed, so results do not depend on how replications are
//! scheduled across threads.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{PooledSample, TwoSampleData};
use crate::error::{Error, Result};
use crate::methods::{LabelStatistic, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationPlan {
    pub replications: usize,
    pub seed: u64,
    /// Enumerate every split instead of sampling when the number of splits
    /// `C(n, n0)` is at most this.
    #[serde(default)]
    pub exhaustive_limit: Option<u64>,
}

/// Splits are enumerated when `C(n, n0)` is at most this and enumeration is requested.
pub const EXHAUSTIVE_LIMIT: u64 = 20_000;

impl PermutationPlan {
    pub fn new(replications: usize, seed: u64) -> Result<Self> {
        if replications == 0 {
            return Err(Error::InvalidParameter(
                "at least one permutation replication is required".into(),
            ));
        }
        Ok(Self {
            replications,
            seed,
            exhaustive_limit: None,
        })
    }

    pub fn with_exhaustive_limit(mut self, limit: u64) -> Self {
        self.exhaustive_limit = Some(limit);
        self
    }
}

/// Outcome of calibrating one observed statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermutationOutcome {
    pub statistic: f64,
    pub p_value: f64,
    /// Number of permuted statistics evaluated.
    pub replications: usize,
    /// Permuted splits on which the statistic was undefined.
    pub n_degenerate: usize,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    #[serde(rename = "R")]
    pub replications: usize,
    pub seed: u64,
    pub n_degenerate: usize,
    pub exhaustive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymptotic_p_value: Option<f64>,
}

impl TestResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("TestResult serializes")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "method,statistic,p_value,R,seed")?;
        writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(&self.method),
            self.statistic,
            self.p_value,
            self.replications,
            self.seed
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Labels with exactly `n0` falses and `n1` trues in uniformly random order.
pub fn permute_labels<R: Rng + ?Sized>(rng: &mut R, n0: usize, n1: usize) -> Vec<bool> {
    let mut labels = vec![false; n0 + n1];
    labels[n0..].fill(true);
    labels.shuffle(rng);
    labels
}

fn replication_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn at_least(value: f64, observed: f64) -> bool {
    value >= observed - 1e-12 * observed.abs()
}

/// Calibrates `statistic` on `pooled` by label permutation.
///
/// Monte Carlo: `p = (1 + #{r : T_r >= T_obs}) / (1 + R)`. Exhaustive:
/// `p = #{splits : T >= T_obs} / C(n, n0)`, the observed split included.
/// Permuted splits on which the statistic is undefined never count as
/// exceeding. Errors on the observed split are returned.
pub fn permutation_p_value<S: LabelStatistic + ?Sized>(
    statistic: &S,
    pooled: &PooledSample,
    plan: &PermutationPlan,
) -> Result<PermutationOutcome> {
    if plan.replications == 0 {
        return Err(Error::InvalidParameter(
            "at least one permutation replication is required".into(),
        ));
    }
    let observed = statistic.evaluate(pooled.labels())?;
    let (n0, n1) = (pooled.n0(), pooled.n1());
    let total = binomial(n0 + n1, n1);

    let tally = |labels: &[bool]| match statistic.evaluate(labels) {
        Ok(v) => (usize::from(at_least(v, observed)), 0usize),
        Err(_) => (0, 1),
    };
    let add = |a: (usize, usize), b: (usize, usize)| (a.0 + b.0, a.1 + b.1);

    if plan.exhaustive_limit.is_some_and(|limit| total <= limit) {
        let splits = all_splits(n0 + n1, n1);
        let (count, degenerate) = splits
            .par_iter()
            .map(|labels| tally(labels))
            .reduce(|| (0, 0), add);
        return Ok(PermutationOutcome {
            statistic: observed,
            p_value: count as f64 / splits.len() as f64,
            replications: splits.len(),
            n_degenerate: degenerate,
            exhaustive: true,
        });
    }

    let (count, degenerate) = (0..plan.replications)
        .into_par_iter()
        .map(|r| {
            let labels = permute_labels(&mut replication_rng(plan.seed, r), n0, n1);
            tally(&labels)
        })
        .reduce(|| (0, 0), add);
    Ok(PermutationOutcome {
        statistic: observed,
        p_value: (1 + count) as f64 / (1 + plan.replications) as f64,
        replications: plan.replications,
        n_degenerate: degenerate,
        exhaustive: false,
    })
}

/// Every labelling of `n` positions with exactly `k` trues, in lexicographic
/// order of the true positions.
fn all_splits(n: usize, k: usize) -> Vec<Vec<bool>> {
    let mut out = Vec::new();
    let mut pos: Vec<usize> = (0..k).collect();
    loop {
        let mut labels = vec![false; n];
        pos.iter().for_each(|&p| labels[p] = true);
        out.push(labels);
        let Some(i) = (0..k).rev().find(|&i| pos[i] < n - k + i) else {
            return out;
        };
        pos[i] += 1;
        for j in i + 1..k {
            pos[j] = pos[j - 1] + 1;
        }
    }
}

/// Runs `method` on `data` and calibrates it by permutation.
pub fn run_permutation_test(
    method: &Method,
    data: &TwoSampleData,
    plan: &PermutationPlan,
) -> Result<TestResult> {
    let pooled = data.pooled();
    let statistic = method.prepare(&pooled);
    let outcome = permutation_p_value(statistic.as_ref(), &pooled, plan)?;
    Ok(TestResult {
        method: method.to_string(),
        statistic: outcome.statistic,
        p_value: outcome.p_value,
        replications: outcome.replications,
        seed: plan.seed,
        n_degenerate: outcome.n_degenerate,
        exhaustive: outcome.exhaustive,
        asymptotic_p_value: method.asymptotic_p_value(outcome.statistic),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PValueSummary {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); zero for one value.
    pub sd: f64,
    /// Proportion of p-values at or below the level.
    pub rejection_rate: f64,
    pub count: usize,
}

/// Mean, standard deviation and proportion `<= level` of a list of p-values.
pub fn null_pvalue_summary(pvalues: &[f64], level: f64) -> Result<PValueSummary> {
    if pvalues.is_empty() {
        return Err(Error::Empty);
    }
    let n = pvalues.len() as f64;
    let mean = pvalues.iter().sum::<f64>() / n;
    let sd = if pvalues.len() > 1 {
        (pvalues.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let rejected = pvalues.iter().filter(|&&p| p <= level).count();
    Ok(PValueSummary {
        mean,
        sd,
        rejection_rate: rejected as f64 / n,
        count: pvalues.len(),
    })
}
