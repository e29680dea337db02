//! Monte Carlo studies: repeated data generation and permutation testing.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use survdiff::permutation::{null_pvalue_summary, permutation_p_value};
use survdiff::{PermutationPlan, SurvivalSample, TwoSampleData};

use crate::error::Result;
use crate::model::{apply_censoring, CensoringModel, LifetimeModel};
use crate::scenario::ScenarioConfig;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `stream` of replication `replication`. Stream 0 generates
/// the data, stream `k + 1` drives the permutations of method `k`.
pub fn derive_seed(seed: u64, replication: u64, stream: u64) -> u64 {
    mix(mix(mix(seed) ^ replication) ^ stream)
}

/// Draws `n` censored observations.
pub fn sample_group(
    lifetime: &LifetimeModel,
    censoring: &CensoringModel,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SurvivalSample> {
    let (times, events) = (0..n)
        .map(|_| {
            let t = lifetime.sample(rng);
            let c = censoring.sample(rng);
            apply_censoring(t, c)
        })
        .unzip();
    Ok(SurvivalSample::new(times, events)?)
}

/// A resolved scenario ready for sampling.
#[derive(Debug, Clone)]
pub struct Generator {
    lifetime0: LifetimeModel,
    lifetime1: LifetimeModel,
    censoring0: CensoringModel,
    censoring1: CensoringModel,
    n0: usize,
    n1: usize,
}

impl Generator {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            censoring0: config.censoring0.resolve(&config.lifetime0)?,
            censoring1: config.censoring1.resolve(&config.lifetime1)?,
            lifetime0: config.lifetime0.clone(),
            lifetime1: config.lifetime1.clone(),
            n0: config.n0,
            n1: config.n1,
        })
    }

    pub fn censoring(&self) -> (CensoringModel, CensoringModel) {
        (self.censoring0, self.censoring1)
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Result<TwoSampleData> {
        let g0 = sample_group(&self.lifetime0, &self.censoring0, self.n0, rng)?;
        let g1 = sample_group(&self.lifetime1, &self.censoring1, self.n1, rng)?;
        Ok(TwoSampleData::new(g0, g1)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub rejection_rate: f64,
    pub mean_p: f64,
    pub sd_p: f64,
    /// Replications on which the statistic was undefined for the observed data.
    pub n_degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub scenario: String,
    pub alpha_level: f64,
    pub methods: Vec<String>,
    /// `pvalues[replication][method]`; `None` where the statistic was undefined.
    pub pvalues: Vec<Vec<Option<f64>>>,
    pub summaries: Vec<MethodSummary>,
}

impl StudyResult {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn method_pvalues(&self, k: usize) -> Vec<f64> {
        self.pvalues.iter().filter_map(|row| row[k]).collect()
    }

    /// `method,rejection_rate,mean_p,sd_p,n_degenerate`
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "rejection_rate", "mean_p", "sd_p", "n_degenerate"])
            .map_err(csv_error)?;
        for s in &self.summaries {
            w.write_record([
                s.method.clone(),
                s.rejection_rate.to_string(),
                s.mean_p.to_string(),
                s.sd_p.to_string(),
                s.n_degenerate.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `replication,method,p_value`, one row per cell; empty where undefined.
    pub fn write_pvalues_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["replication", "method", "p_value"])
            .map_err(csv_error)?;
        for (r, row) in self.pvalues.iter().enumerate() {
            for (method, p) in self.methods.iter().zip(row) {
                let p = p.map(|p| p.to_string()).unwrap_or_default();
                w.write_record([r.to_string(), method.clone(), p])
                    .map_err(csv_error)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(e.into())
}

/// Runs every method of the roster on `config.replications` generated data sets.
pub fn run_study(config: &ScenarioConfig) -> Result<StudyResult> {
    let generator = Generator::new(config)?;
    let pvalues = (0..config.replications)
        .into_par_iter()
        .map(|r| replicate(config, &generator, r as u64))
        .collect::<Result<Vec<_>>>()?;
    let methods: Vec<String> = config.methods.iter().map(|m| m.to_string()).collect();
    let summaries = methods
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let valid: Vec<f64> = pvalues.iter().filter_map(|row| row[k]).collect();
            let n_degenerate = pvalues.len() - valid.len();
            let (rejection_rate, mean_p, sd_p) =
                match null_pvalue_summary(&valid, config.alpha_level) {
                    Ok(s) => (s.rejection_rate, s.mean, s.sd),
                    Err(_) => (f64::NAN, f64::NAN, f64::NAN),
                };
            MethodSummary {
                method: name.clone(),
                rejection_rate,
                mean_p,
                sd_p,
                n_degenerate,
            }
        })
        .collect();
    Ok(StudyResult {
        scenario: config.name.clone(),
        alpha_level: config.alpha_level,
        methods,
        pvalues,
        summaries,
    })
}

fn replicate(config: &ScenarioConfig, generator: &Generator, r: u64) -> Result<Vec<Option<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, r, 0));
    let data = generator.sample(&mut rng)?;
    let pooled = data.pooled();
    config
        .methods
        .iter()
        .enumerate()
        .map(|(k, method)| {
            let plan = PermutationPlan::new(
                config.permutations,
                derive_seed(config.seed, r, k as u64 + 1),
            )?;
            let statistic = method.prepare(&pooled);
            match permutation_p_value(statistic.as_ref(), &pooled, &plan) {
                Ok(out) => Ok(Some(out.p_value)),
                Err(e) if e.is_degenerate() => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}
