//! Direct double-loop implementations written from the raw per-group data,
//! shared by the oracle and acceptance suites.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use survdiff::statistics::{Family, Form};
use survdiff::{KernelSpec, SemimetricSpec, SurvivalSample, TwoSampleData};

pub type Group = Vec<(f64, bool)>;

pub fn sorted(g: &Group) -> Group {
    let mut g = g.clone();
    g.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1)));
    g
}

pub fn km_oracle(g: &Group) -> Vec<f64> {
    let n = g.len();
    (1..=n)
        .map(|i| {
            let d = |k: usize| if g[k - 1].1 { 1.0 } else { 0.0 };
            let mut w = d(i) / (n - i + 1) as f64;
            for j in 1..i {
                w *= (((n - j) as f64) / ((n - j + 1) as f64)).powf(d(j));
            }
            w
        })
        .collect()
}

pub fn weights(g: &Group, censored: bool) -> Vec<f64> {
    if censored {
        km_oracle(g)
    } else {
        vec![1.0 / g.len() as f64; g.len()]
    }
}

pub fn oracle_statistic(
    family: &Family,
    form: Form,
    censored: bool,
    g0: &Group,
    g1: &Group,
) -> Option<f64> {
    let (g0, g1) = (sorted(g0), sorted(g1));
    let (mut w0, mut w1) = (weights(&g0, censored), weights(&g1, censored));
    let (m0, m1): (f64, f64) = (w0.iter().sum(), w1.iter().sum());
    if m0 <= 0.0 || m1 <= 0.0 {
        return None;
    }
    if form == Form::VNormalized {
        w0.iter_mut().for_each(|w| *w /= m0);
        w1.iter_mut().for_each(|w| *w /= m1);
    }
    let rho = |x: f64, y: f64| match family {
        Family::Energy(s) => (x - y).abs().powf(s.alpha()),
        other => other.pair(x, y),
    };
    let within = |g: &Group, w: &[f64], diagonal: bool| {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..g.len() {
            for j in 0..g.len() {
                if i != j || diagonal {
                    num += w[i] * w[j] * rho(g[i].0, g[j].0);
                    den += w[i] * w[j];
                }
            }
        }
        (num, den)
    };
    let mut between = 0.0;
    for i in 0..g0.len() {
        for j in 0..g1.len() {
            between += w0[i] * w1[j] * rho(g0[i].0, g1[j].0);
        }
    }
    let (a, b, c) = match form {
        Form::V | Form::VNormalized => {
            (within(&g0, &w0, true).0, within(&g1, &w1, true).0, between)
        }
        Form::UNormalized => {
            let positive = |w: &[f64]| w.iter().filter(|&&x| x > 0.0).count();
            let (n0, d0) = within(&g0, &w0, false);
            let (n1, d1) = within(&g1, &w1, false);
            if positive(&w0) < 2 || positive(&w1) < 2 || d0 <= 0.0 || d1 <= 0.0 {
                return None;
            }
            (n0 / d0, n1 / d1, between / (m0 * m1))
        }
    };
    Some(match family {
        Family::Energy(_) => 2.0 * c - a - b,
        _ => a + b - 2.0 * c,
    })
}

/// Weighted log-rank from at-risk counts recomputed at every distinct event time.
pub fn oracle_logrank(rule: &str, g0: &Group, g1: &Group) -> Option<f64> {
    let all: Vec<(f64, bool, usize)> = g0
        .iter()
        .map(|&(t, e)| (t, e, 0))
        .chain(g1.iter().map(|&(t, e)| (t, e, 1)))
        .collect();
    let mut event_times: Vec<f64> = all.iter().filter(|o| o.1).map(|o| o.0).collect();
    event_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    event_times.dedup();
    if event_times.is_empty() {
        return None;
    }
    let (mut num, mut den) = (0.0, 0.0);
    let mut s = 1.0;
    for &t in &event_times {
        let y = all.iter().filter(|o| o.0 >= t).count() as f64;
        let y1 = all.iter().filter(|o| o.0 >= t && o.2 == 1).count() as f64;
        let d = all.iter().filter(|o| o.0 == t && o.1).count() as f64;
        let d1 = all.iter().filter(|o| o.0 == t && o.1 && o.2 == 1).count() as f64;
        let s_left = s;
        s *= 1.0 - d / y;
        let w = match rule {
            "logrank" => 1.0,
            "gehan" => y,
            "tarone-ware" => y.sqrt(),
            "peto-peto" => s,
            "fh11" => s_left * (1.0 - s_left),
            _ => unreachable!(),
        };
        num += w * (d1 - d * y1 / y);
        if y > 1.0 {
            den += w * w * d * (y1 / y) * (1.0 - y1 / y) * (y - d) / (y - 1.0);
        }
    }
    (den > 0.0).then(|| num * num / den)
}

/// Returns `(KS, KS0, CvM, CvM0)`.
pub fn oracle_schumacher(g0: &Group, g1: &Group) -> Option<(f64, f64, f64, f64)> {
    let max = |g: &Group| g.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
    let tau = max(g0).min(max(g1));
    let (n0, n1) = (g0.len() as f64, g1.len() as f64);
    let n = n0 + n1;
    let mut times: Vec<f64> = g0
        .iter()
        .chain(g1)
        .filter(|o| o.1 && o.0 <= tau)
        .map(|o| o.0)
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let count = |g: &Group, t: f64| {
        let y = g.iter().filter(|o| o.0 >= t).count() as f64;
        let d = g.iter().filter(|o| o.0 == t && o.1).count() as f64;
        (y, d)
    };
    let mut eps = Vec::new();
    let mut a = Vec::new();
    let (mut l0, mut l1, mut a0, mut a1) = (0.0, 0.0, 0.0, 0.0);
    for &t in &times {
        let (y0, d0) = count(g0, t);
        let (y1, d1) = count(g1, t);
        if d0 > 0.0 {
            l0 += d0 / y0;
            a0 += n0 * d0 / (y0 * (y0 + 1.0));
        }
        if d1 > 0.0 {
            l1 += d1 / y1;
            a1 += n1 * d1 / (y1 * (y1 + 1.0));
        }
        eps.push(l1 - l0);
        a.push(n / n0 * a0 + n / n1 * a1);
    }
    let a_tau = *a.last()?;
    if a_tau <= 0.0 {
        return None;
    }
    let h = |x: f64| x / (1.0 + x);
    let mut ks = 0.0f64;
    let mut ks0 = 0.0f64;
    let mut cvm = 0.0;
    let mut cvm0 = 0.0;
    for k in 0..times.len() {
        ks = ks.max((eps[k] / a_tau.sqrt()).abs());
        ks0 = ks0.max((eps[k] / (1.0 + a[k])).abs());
        let (e_prev, a_prev) = if k == 0 {
            (0.0, 0.0)
        } else {
            (eps[k - 1], a[k - 1])
        };
        cvm += (e_prev * e_prev / a_tau) * (a[k] - a_prev);
        cvm0 += (e_prev / (1.0 + a_prev)).powi(2) * (h(a[k]) - h(a_prev));
    }
    Some((n * ks, n * ks0, n / a_tau * cvm, n * cvm0))
}

pub fn random_group(rng: &mut ChaCha8Rng) -> Group {
    let m = rng.random_range(1..=6);
    let grid = rng.random_bool(0.4);
    (0..m)
        .map(|_| {
            let t = if grid {
                rng.random_range(0..5) as f64 * 0.5
            } else {
                rng.random_range(0.0..4.0)
            };
            (t, rng.random_bool(0.7))
        })
        .collect()
}

pub fn to_data(g0: &Group, g1: &Group) -> TwoSampleData {
    let sample = |g: &Group| {
        SurvivalSample::new(
            g.iter().map(|o| o.0).collect(),
            g.iter().map(|o| o.1).collect(),
        )
        .unwrap()
    };
    TwoSampleData::new(sample(g0), sample(g1)).unwrap()
}

pub fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-10 * want.abs().max(1.0)
}

pub fn families() -> Vec<Family> {
    let mut f: Vec<Family> = [0.4, 1.0, 1.6, 2.0]
        .into_iter()
        .map(|a| Family::Energy(SemimetricSpec::new(a).unwrap()))
        .collect();
    f.extend(
        [
            KernelSpec::Gaussian { sigma: 1.0 },
            KernelSpec::Laplacian { sigma: 1.0 },
            KernelSpec::RationalQuadratic { c: 1.0, beta: 1.0 },
            KernelSpec::RationalQuadratic { c: 2.0, beta: 2.0 },
            KernelSpec::Matern {
                sigma: 1.0,
                nu: 1.5,
            },
            KernelSpec::Matern {
                sigma: 0.8,
                nu: 2.2,
            },
        ]
        .into_iter()
        .map(Family::Kernel),
    );
    f
}
