//! Multiplier bootstrap for m-sensitivities and threshold breakdown
//! points, with the randomized PIT uniformity check.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::asymptotics::population_sensitivity;
use crate::estimators::{solve_location, solve_location_weighted, Sample, WeightedSample};
use crate::model::PopulationModel;
use crate::score::ScoreFamily;
use crate::sensitivity::{
    location_bp, location_eta, weighted_location_bp, weighted_location_eta, Side,
};
use crate::{Error, Result};

type Draw = Arc<dyn Fn(&mut ChaCha8Rng) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum WeightLaw {
    /// W ~ Exp(1).
    ExponentialUnit,
    /// W ≡ 1; collapses the bootstrap to the plain statistic.
    Constant,
    /// User law with its declared mean and variance.
    Custom {
        name: String,
        mean: f64,
        variance: f64,
        draw: Draw,
    },
}

impl fmt::Debug for WeightLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightLaw::ExponentialUnit => write!(f, "ExponentialUnit"),
            WeightLaw::Constant => write!(f, "Constant"),
            WeightLaw::Custom {
                name,
                mean,
                variance,
                ..
            } => {
                write!(f, "Custom({name}, mean {mean}, var {variance})")
            }
        }
    }
}

impl WeightLaw {
    /// Problems with E W = 1, Var W = 1; empty when the law is admissible.
    pub fn warnings(&self) -> Vec<String> {
        match self {
            WeightLaw::ExponentialUnit => Vec::new(),
            WeightLaw::Constant => vec!["constant weights have variance 0, not 1".into()],
            WeightLaw::Custom { mean, variance, .. } => {
                let mut w = Vec::new();
                if (mean - 1.0).abs() > 1e-12 {
                    w.push(format!("weight mean {mean} differs from 1"));
                }
                if (variance - 1.0).abs() > 1e-12 {
                    w.push(format!("weight variance {variance} differs from 1"));
                }
                w
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            WeightLaw::ExponentialUnit => rng.sample(Exp1),
            WeightLaw::Constant => 1.0,
            WeightLaw::Custom { draw, .. } => draw(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    Basic,
    Percentile,
}

impl CiMethod {
    pub fn name(self) -> &'static str {
        match self {
            CiMethod::Basic => "basic",
            CiMethod::Percentile => "percentile",
        }
    }
}

impl FromStr for CiMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(CiMethod::Basic),
            "percentile" => Ok(CiMethod::Percentile),
            _ => Err(Error::Domain(format!("unknown CI method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub weight_law: WeightLaw,
    pub seed: u64,
    pub ci_levels: Vec<f64>,
    pub method: CiMethod,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            weight_law: WeightLaw::ExponentialUnit,
            seed: 0,
            ci_levels: vec![0.8, 0.95],
            method: CiMethod::Basic,
        }
    }
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Domain(
                "need at least one bootstrap replicate".into(),
            ));
        }
        if let Some(l) = self.ci_levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(Error::Domain(format!("CI level {l} outside (0, 1)")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiBand {
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    pub point: f64,
    /// Successful replicate values in replicate order.
    pub draws: Vec<f64>,
    pub ci: Vec<CiBand>,
    pub method: CiMethod,
    pub replicates: usize,
    pub failures: usize,
    pub seed: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` of purpose `tag`.
pub fn derive_seed(seed: u64, index: u64, tag: u64) -> u64 {
    splitmix(splitmix(seed ^ splitmix(tag)) ^ index)
}

fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Weights W_i / ΣW for replicate `index`.
pub fn draw_weights(n: usize, config: &BootstrapConfig, index: usize) -> Vec<f64> {
    let mut rng = replicate_rng(config.seed, index);
    let mut w: Vec<f64> = (0..n).map(|_| config.weight_law.sample(&mut rng)).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        for v in &mut w {
            *v /= total;
        }
    }
    w
}

/// Type-7 quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let i = h.floor() as usize;
    if i + 1 >= n {
        return sorted[n - 1];
    }
    let f = h - i as f64;
    if f == 0.0 {
        sorted[i]
    } else {
        sorted[i] + f * (sorted[i + 1] - sorted[i])
    }
}

pub fn confidence_bands(
    point: f64,
    draws: &[f64],
    levels: &[f64],
    method: CiMethod,
) -> Vec<CiBand> {
    let mut s = draws.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    levels
        .iter()
        .map(|&level| {
            let a = 1.0 - level;
            let ql = quantile_sorted(&s, a / 2.0);
            let qh = quantile_sorted(&s, 1.0 - a / 2.0);
            let (lo, hi) = match method {
                CiMethod::Basic => (2.0 * point - qh, 2.0 * point - ql),
                CiMethod::Percentile => (ql, qh),
            };
            CiBand { level, lo, hi }
        })
        .collect()
}

/// Runs `stat` on every reweighted sample; replicate failures are dropped
/// and counted, more than 1% of them is an error.
pub fn run_bootstrap(
    sample: &Sample<f64>,
    config: &BootstrapConfig,
    point: f64,
    stat: impl Fn(&WeightedSample<f64>) -> Result<f64> + Sync,
) -> Result<BootstrapSummary> {
    config.validate()?;
    let n = sample.n();
    let results: Vec<Option<f64>> = (0..config.replicates)
        .into_par_iter()
        .map(|b| {
            let w = draw_weights(n, config, b);
            let ws = WeightedSample::new(sample.values(), &w).ok()?;
            stat(&ws).ok().filter(|v| v.is_finite())
        })
        .collect();
    let draws: Vec<f64> = results.iter().flatten().copied().collect();
    let failures = config.replicates - draws.len();
    if failures * 100 > config.replicates {
        return Err(Error::Numeric {
            what: format!(
                "{failures} of {} bootstrap replicates failed",
                config.replicates
            ),
            residual: failures as f64,
        });
    }
    Ok(BootstrapSummary {
        point,
        ci: confidence_bands(point, &draws, &config.ci_levels, config.method),
        draws,
        method: config.method,
        replicates: config.replicates,
        failures,
        seed: config.seed,
    })
}

fn one_sided(side: Side) -> Result<()> {
    if side == Side::TwoSided {
        Err(Error::Domain("bootstrap targets are one-sided".into()))
    } else {
        Ok(())
    }
}

pub fn bootstrap_sensitivity(
    sample: &Sample<f64>,
    score: &ScoreFamily<f64>,
    m: usize,
    side: Side,
    config: &BootstrapConfig,
) -> Result<BootstrapSummary> {
    one_sided(side)?;
    if 2 * m > sample.n() {
        return Err(Error::Domain(format!(
            "need m <= n/2, got m = {m}, n = {}",
            sample.n()
        )));
    }
    let theta = solve_location(sample, score)?.theta_hat;
    let point = location_eta(sample.sorted(), score, theta, m, side);
    run_bootstrap(sample, config, point, |ws| {
        let tb = solve_location_weighted(ws, score)?.theta_hat;
        Ok(weighted_location_eta(ws, score, tb, m, side))
    })
}

pub fn bootstrap_bp(
    sample: &Sample<f64>,
    score: &ScoreFamily<f64>,
    eta: f64,
    side: Side,
    config: &BootstrapConfig,
) -> Result<BootstrapSummary> {
    one_sided(side)?;
    let theta = solve_location(sample, score)?.theta_hat;
    let point = location_bp(sample, score, theta, eta, side)?.bp();
    run_bootstrap(sample, config, point, |ws| {
        let tb = solve_location_weighted(ws, score)?.theta_hat;
        Ok(weighted_location_bp(ws, score, tb, eta, side)?.bp())
    })
}

// --------------------------------------------------------------------- PIT

/// P(K > λ) for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi2 = std::f64::consts::PI.powi(2);
        let c = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let mut s = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            s += (-(j * j) * pi2 / (8.0 * lambda * lambda)).exp();
        }
        (1.0 - c * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let t = (-2.0 * kf * kf * lambda * lambda).exp();
            s += if k % 2 == 1 { t } else { -t };
            if t < 1e-17 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// One-sample KS statistic and p-value against a continuous CDF.
pub fn ks_test(values: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut u: Vec<f64> = values.iter().map(|&v| cdf(v)).collect();
    u.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / nf - v).max(v - i as f64 / nf))
        .fold(0.0, f64::max);
    let sq = nf.sqrt();
    (d, kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d))
}

pub fn ks_uniform(u: &[f64]) -> (f64, f64) {
    ks_test(u, |v| v.clamp(0.0, 1.0))
}

/// Randomized rank (#{T* < t} + v) / (B + 1).
pub fn pit_value(t: f64, draws: &[f64], v: f64) -> f64 {
    let r = draws.iter().filter(|&&d| d < t).count();
    (r as f64 + v) / (draws.len() as f64 + 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitResult {
    pub ks_stat: f64,
    pub p_value: f64,
    pub u: Vec<f64>,
    pub eta_population: f64,
    pub m: usize,
}

/// Compares the law of √n(η̂ − η_ε) with the bootstrap law of
/// √n(η̃ − η̂) through M randomized ranks; plus side, m = ⌈εn⌉.
pub fn pit_uniformity(
    model: &PopulationModel,
    score: &ScoreFamily<f64>,
    eps: f64,
    n: usize,
    outer: usize,
    config: &BootstrapConfig,
) -> Result<PitResult> {
    config.validate()?;
    if outer == 0 {
        return Err(Error::Domain("need at least one outer replication".into()));
    }
    let eta = population_sensitivity(model, score, eps, Side::Plus)?;
    let m = (eps * n as f64).ceil() as usize;
    if 2 * m > n {
        return Err(Error::Domain(format!("m = {m} exceeds n/2")));
    }
    let sq = (n as f64).sqrt();
    let u: Vec<f64> = (0..outer)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, j as u64, 1));
            let sample = Sample::new(model.sample_n(n, &mut rng))?;
            let inner = BootstrapConfig {
                seed: derive_seed(config.seed, j as u64, 2),
                ..config.clone()
            };
            let s = bootstrap_sensitivity(&sample, score, m, Side::Plus, &inner)?;
            let t = sq * (s.point - eta);
            let centered: Vec<f64> = s.draws.iter().map(|d| sq * (d - s.point)).collect();
            let v: f64 = rng.random();
            Ok(pit_value(t, &centered, v))
        })
        .collect::<Result<_>>()?;
    let (ks_stat, p_value) = ks_uniform(&u);
    Ok(PitResult {
        ks_stat,
        p_value,
        u,
        eta_population: eta,
        m,
    })
}
