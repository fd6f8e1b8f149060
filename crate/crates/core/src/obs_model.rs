//! Fitting the observation model from labeled alert traces: a univariate
//! Gaussian mixture per state, fitted by EM and integrated onto the integer
//! observation alphabet.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::ObservationModel;

pub const VARIANCE_FLOOR: f64 = 1e-6;
pub const PMF_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub components: Vec<Component>,
}

impl GmmParams {
    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| log_mix_density(&self.components, x)).sum()
    }
}

#[derive(Clone, Debug)]
pub struct EmFit {
    pub params: GmmParams,
    /// Log-likelihood of the initial parameters followed by one entry per
    /// EM iteration.
    pub log_likelihood: Vec<f64>,
    /// Set when some component variance hit `VARIANCE_FLOOR`.
    pub floored: bool,
}

fn log_normal(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * variance).ln() + d * d / variance)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn log_mix_density(comps: &[Component], x: f64) -> f64 {
    let terms: Vec<f64> = comps
        .iter()
        .map(|c| c.weight.ln() + log_normal(x, c.mean, c.variance))
        .collect();
    log_sum_exp(&terms)
}

/// EM for a `k`-component mixture. Means start at evenly spaced sample
/// quantiles, variances at the sample variance, weights uniform.
pub fn em_fit(samples: &[f64], k: usize, iters: usize, tol: f64) -> Result<EmFit> {
    if k == 0 {
        return Err(Error::Fit("component count must be at least 1".into()));
    }
    if samples.len() < k {
        return Err(Error::Fit(format!(
            "{} samples cannot support {k} components",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Fit("samples must be finite".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let mut floored = var < VARIANCE_FLOOR;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut comps: Vec<Component> = (0..k)
        .map(|j| {
            let q = ((j as f64 + 0.5) / k as f64 * n) as usize;
            Component {
                weight: 1.0 / k as f64,
                mean: sorted[q.min(sorted.len() - 1)],
                variance: var.max(VARIANCE_FLOOR),
            }
        })
        .collect();

    let mut resp = vec![0.0; samples.len() * k];
    let mut terms = vec![0.0; k];
    let mut history = Vec::new();
    for it in 0..=iters {
        // E-step; also yields the likelihood of the current parameters.
        let mut ll = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            for (t, c) in terms.iter_mut().zip(&comps) {
                *t = c.weight.ln() + log_normal(x, c.mean, c.variance);
            }
            let z = log_sum_exp(&terms);
            ll += z;
            for j in 0..k {
                resp[i * k + j] = (terms[j] - z).exp();
            }
        }
        let gain = history.last().map(|prev| ll - prev);
        history.push(ll);
        if it == iters || gain.is_some_and(|g| g < tol) {
            break;
        }
        // M-step.
        for (j, c) in comps.iter_mut().enumerate() {
            let nj: f64 = (0..samples.len()).map(|i| resp[i * k + j]).sum();
            if nj <= 0.0 {
                continue;
            }
            let mu = samples
                .iter()
                .enumerate()
                .map(|(i, x)| resp[i * k + j] * x)
                .sum::<f64>()
                / nj;
            let v = samples
                .iter()
                .enumerate()
                .map(|(i, x)| resp[i * k + j] * (x - mu).powi(2))
                .sum::<f64>()
                / nj;
            c.weight = nj / n;
            c.mean = mu;
            if v < VARIANCE_FLOOR {
                floored = true;
            }
            c.variance = v.max(VARIANCE_FLOOR);
        }
    }
    Ok(EmFit {
        params: GmmParams { components: comps },
        log_likelihood: history,
        floored,
    })
}

fn normal_cdf(x: f64, mean: f64, variance: f64) -> f64 {
    0.5 * libm::erfc(-(x - mean) / (2.0 * variance).sqrt())
}

fn normal_sf(x: f64, mean: f64, variance: f64) -> f64 {
    0.5 * libm::erfc((x - mean) / (2.0 * variance).sqrt())
}

/// Mass of each unit bin `[j, j+1)` for `j = 0..n`. The lower tail goes to bin
/// 0 and the upper tail to bin `n-1`. Entries are floored at `PMF_FLOOR` and
/// the result renormalized.
pub fn discretize(params: &GmmParams, n: usize) -> Vec<f64> {
    assert!(n >= 2, "alphabet needs at least two symbols");
    let mut pmf = vec![0.0; n];
    for c in &params.components {
        for (j, p) in pmf.iter_mut().enumerate() {
            let lo = j as f64;
            let hi = lo + 1.0;
            let mass = if j == 0 {
                normal_cdf(hi, c.mean, c.variance)
            } else if j == n - 1 {
                normal_sf(lo, c.mean, c.variance)
            } else if lo >= c.mean {
                normal_sf(lo, c.mean, c.variance) - normal_sf(hi, c.mean, c.variance)
            } else {
                normal_cdf(hi, c.mean, c.variance) - normal_cdf(lo, c.mean, c.variance)
            };
            *p += c.weight * mass.max(0.0);
        }
    }
    pmf.iter_mut().for_each(|p| *p = p.max(PMF_FLOOR));
    let sum: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= sum);
    pmf
}

pub fn discretize_gaussian(mean: f64, variance: f64, n: usize) -> Vec<f64> {
    discretize(
        &GmmParams {
            components: vec![Component {
                weight: 1.0,
                mean,
                variance,
            }],
        },
        n,
    )
}

/// Labeled observations, kept in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceDataset {
    pub rows: Vec<(u8, f64)>,
}

impl TraceDataset {
    pub fn samples(&self, state: u8) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|(s, _)| *s == state)
            .map(|&(_, x)| x)
            .collect()
    }

    pub fn samples0(&self) -> Vec<f64> {
        self.samples(0)
    }

    pub fn samples1(&self) -> Vec<f64> {
        self.samples(1)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("state,observation\n");
        for (s, x) in &self.rows {
            writeln!(out, "{s},{x}").unwrap();
        }
        out
    }
}

/// Parses `state,observation` CSV text. Line 1 is the header.
pub fn parse_trace(text: &str) -> Result<TraceDataset> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("state,observation") => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header `state,observation`".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, raw) in lines.enumerate() {
        let line = i + 2;
        let err = |msg: String| Error::Parse { line, msg };
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let (s, o) = raw
            .split_once(',')
            .ok_or_else(|| err("expected two fields".into()))?;
        let state = match s.trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(err(format!("state must be 0 or 1, got {other:?}"))),
        };
        let x: f64 = o
            .trim()
            .parse()
            .map_err(|_| err(format!("observation {:?} is not a number", o.trim())))?;
        if !x.is_finite() || x < 0.0 {
            return Err(err(format!("observation {x} must be finite and nonnegative")));
        }
        rows.push((state, x));
    }
    Ok(TraceDataset { rows })
}

pub fn ingest_trace(path: &Path) -> Result<TraceDataset> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    parse_trace(&text)
}

pub struct ObsFit {
    pub model: ObservationModel,
    pub fits: [EmFit; 2],
}

/// Fits both state slices and discretizes onto `{0..n-1}`.
pub fn fit_observation_model(
    data: &TraceDataset,
    k0: usize,
    k1: usize,
    n: usize,
    iters: usize,
    tol: f64,
) -> Result<ObsFit> {
    if n < 2 {
        return Err(Error::Fit("alphabet size must be at least 2".into()));
    }
    let (s0, s1) = (data.samples0(), data.samples1());
    if s0.is_empty() || s1.is_empty() {
        return Err(Error::Fit("both states need at least one sample".into()));
    }
    let (f0, f1) = rayon::join(|| em_fit(&s0, k0, iters, tol), || em_fit(&s1, k1, iters, tol));
    let (f0, f1) = (f0?, f1?);
    let model = ObservationModel::new(discretize(&f0.params, n), discretize(&f1.params, n))?;
    Ok(ObsFit {
        model,
        fits: [f0, f1],
    })
}
