//! Simulation experiments, emitted as CSV tables plus a JSON manifest.
//! Desk presets shrink replication counts and grids.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use statrs::distribution::{ContinuousCDF, StudentsT};
use tbp_core::audit::{score_test_bp, test_bp_bounds, two_sample_bracket, BpBracket};
use tbp_core::bootstrap::{derive_seed, pit_uniformity, BootstrapConfig};
use tbp_core::estimators::solve_location;
use tbp_core::model::PopulationModel;
use tbp_core::sensitivity::{location_eta, two_stage_sensitivity_bounds, SchemeConfig};
use tbp_core::{
    Sample, ScaleScore, Score, ScoreFamily, ScoreKind, Side, TestData, TestKind, TestSpec,
};

use crate::commands::Ctx;
use crate::error::{CliError, CliResult};
use crate::output::{jnum, write_text, Cell, Table};

pub const EXPERIMENTS: [&str; 6] = [
    "fig_location_curves",
    "fig_two_stage",
    "fig_test_vshape",
    "fig_gap_vs_n",
    "fig_two_sample_vshape",
    "fig_pit",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Full,
}

impl std::str::FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            _ => Err(format!("unknown preset '{s}' (desk or full)")),
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Full => "full",
        }
    }
}

/// Named tables plus the configuration that produced them.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub id: String,
    pub tables: Vec<(String, Table)>,
    pub manifest: Map<String, Value>,
}

impl Experiment {
    fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            tables: Vec::new(),
            manifest: Map::new(),
        }
    }

    fn with(mut self, key: &str, v: Value) -> Self {
        self.manifest.insert(key.into(), v);
        self
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

pub const LOSSES: [ScoreKind; 3] = [
    ScoreKind::Huber,
    ScoreKind::LogCosh,
    ScoreKind::SelfConcordant,
];

fn loss(kind: ScoreKind) -> CliResult<Score> {
    Ok(ScoreFamily::new(kind, kind.default_delta())?)
}

fn model(spec: &str) -> CliResult<PopulationModel> {
    Ok(PopulationModel::parse(spec)?)
}

fn rng(seed: u64, rep: usize, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, rep as u64, tag))
}

/// Stable tag for a configuration, so each cell gets its own streams.
fn tag(parts: &[&str]) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf29ce484222325;
    for p in parts {
        for b in p.bytes().chain(std::iter::once(0u8)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

const MAX_DRAWS: usize = 100_000;

/// Redraws until `accept` holds; returns the accepted value and the draw count.
fn redraw<T>(
    mut rng: ChaCha8Rng,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> CliResult<Option<T>>,
) -> CliResult<(T, usize)> {
    for k in 1..=MAX_DRAWS {
        if let Some(v) = draw(&mut rng)? {
            return Ok((v, k));
        }
    }
    Err(CliError::Numeric(format!(
        "no rejecting sample in {MAX_DRAWS} draws"
    )))
}

// ------------------------------------------------------ location curves

#[derive(Debug, Clone)]
pub struct LocationCurvesConfig {
    pub reps: usize,
    pub n_top: usize,
    pub m_top: Vec<usize>,
    pub dists: Vec<String>,
    pub n_bottom: Vec<usize>,
    pub ratios: Vec<f64>,
    pub seed: u64,
}

impl LocationCurvesConfig {
    pub fn preset(p: Preset, seed: u64) -> Self {
        Self {
            reps: if p == Preset::Full { 100 } else { 5 },
            n_top: 1000,
            m_top: (20..=460).step_by(40).collect(),
            dists: vec!["normal".into(), "uniform".into(), "cauchy".into()],
            n_bottom: vec![500, 1000, 2000],
            ratios: (0..12).map(|k| 0.02 + 0.04 * k as f64).collect(),
            seed,
        }
    }
}

/// Mean one-sided location m-sensitivities over replications.
fn mean_location_curve(
    dist: &str,
    kind: ScoreKind,
    n: usize,
    ms: &[usize],
    reps: usize,
    seed: u64,
) -> CliResult<Vec<(f64, f64)>> {
    let pm = model(dist)?;
    let score = loss(kind)?;
    let t = tag(&[dist, kind.name(), &n.to_string()]);
    let per: Vec<Vec<(f64, f64)>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut g = rng(seed, r, t);
            let s = Sample::new(pm.sample_n(n, &mut g))?;
            let th = solve_location(&s, &score)?.theta_hat;
            Ok(ms
                .iter()
                .map(|&m| {
                    (
                        location_eta(s.sorted(), &score, th, m, Side::Plus),
                        location_eta(s.sorted(), &score, th, m, Side::Minus),
                    )
                })
                .collect())
        })
        .collect::<CliResult<_>>()?;
    Ok((0..ms.len())
        .map(|i| {
            let p: Vec<f64> = per.iter().map(|v| v[i].0).collect();
            let q: Vec<f64> = per.iter().map(|v| v[i].1).collect();
            (mean(&p), mean(&q))
        })
        .collect())
}

pub fn fig_location_curves(cfg: &LocationCurvesConfig) -> CliResult<Experiment> {
    let mut top = Table::new(&[
        "loss",
        "dist",
        "n",
        "m",
        "m_over_n",
        "eta_plus",
        "eta_minus",
    ]);
    for kind in LOSSES {
        for d in &cfg.dists {
            let c = mean_location_curve(d, kind, cfg.n_top, &cfg.m_top, cfg.reps, cfg.seed)?;
            for (&m, (p, q)) in cfg.m_top.iter().zip(c) {
                top.push(vec![
                    kind.name().into(),
                    d.as_str().into(),
                    cfg.n_top.into(),
                    m.into(),
                    (m as f64 / cfg.n_top as f64).into(),
                    p.into(),
                    q.into(),
                ]);
            }
        }
    }
    let mut bottom = Table::new(&[
        "loss",
        "dist",
        "n",
        "m",
        "m_over_n",
        "eta_plus",
        "eta_minus",
    ]);
    for kind in LOSSES {
        for &n in &cfg.n_bottom {
            let ms: Vec<usize> = cfg
                .ratios
                .iter()
                .map(|r| (r * n as f64).round() as usize)
                .collect();
            let c = mean_location_curve("normal", kind, n, &ms, cfg.reps, cfg.seed)?;
            for (&m, (p, q)) in ms.iter().zip(c) {
                bottom.push(vec![
                    kind.name().into(),
                    "normal".into(),
                    n.into(),
                    m.into(),
                    (m as f64 / n as f64).into(),
                    p.into(),
                    q.into(),
                ]);
            }
        }
    }
    let mut e = Experiment::new("fig_location_curves")
        .with("reps", json!(cfg.reps))
        .with("n_top", json!(cfg.n_top))
        .with("m_top", json!(cfg.m_top))
        .with("n_bottom", json!(cfg.n_bottom))
        .with("seed", json!(cfg.seed));
    e.tables.push(("by_distribution".into(), top));
    e.tables.push(("by_n".into(), bottom));
    Ok(e)
}

// ------------------------------------------------------------ two-stage

#[derive(Debug, Clone)]
pub struct TwoStageConfig {
    pub reps: usize,
    pub n: usize,
    pub m_grid: Vec<usize>,
    pub eta_grid: Vec<f64>,
    pub dists: Vec<String>,
    pub seed: u64,
}

impl TwoStageConfig {
    pub fn preset(p: Preset, seed: u64) -> Self {
        Self {
            reps: if p == Preset::Full { 100 } else { 3 },
            n: 1000,
            m_grid: (10..=150).step_by(10).collect(),
            eta_grid: (1..=10).map(|k| k as f64 / 10.0).collect(),
            dists: vec!["normal".into(), "uniform".into(), "cauchy".into()],
            seed,
        }
    }
}

struct TwoStageRep {
    lower: Vec<f64>,
    upper: Vec<f64>,
    bp_lower: Vec<f64>,
    bp_upper: Vec<f64>,
}

fn two_stage_rep(
    s: &Sample<f64>,
    score: &Score,
    chi: &ScaleScore,
    cfg: &TwoStageConfig,
) -> CliResult<TwoStageRep> {
    let scheme = SchemeConfig::default();
    let n = s.n();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for &m in &cfg.m_grid {
        let (lo, up) = two_stage_sensitivity_bounds(s, score, chi, m, &scheme)?;
        lower.push(lo.eta_plus);
        upper.push(up.eta_plus);
    }
    // BP bounds: walk m until every η is crossed by both curves
    let k = cfg.eta_grid.len();
    let mut bl: Vec<Option<usize>> = vec![None; k];
    let mut bu: Vec<Option<usize>> = vec![None; k];
    let cap = n.div_ceil(2);
    for m in 1..=cap {
        if bl.iter().chain(&bu).all(|b| b.is_some()) {
            break;
        }
        let (lo, up) = two_stage_sensitivity_bounds(s, score, chi, m, &scheme)?;
        for (i, &eta) in cfg.eta_grid.iter().enumerate() {
            if bl[i].is_none() && up.eta_plus >= eta {
                bl[i] = Some(m);
            }
            if bu[i].is_none() && lo.eta_plus >= eta {
                bu[i] = Some(m);
            }
        }
    }
    let frac = |b: Option<usize>| b.unwrap_or(cap + 1) as f64 / n as f64;
    Ok(TwoStageRep {
        lower,
        upper,
        bp_lower: bl.into_iter().map(frac).collect(),
        bp_upper: bu.into_iter().map(frac).collect(),
    })
}

pub fn fig_two_stage(cfg: &TwoStageConfig) -> CliResult<Experiment> {
    let score = loss(ScoreKind::Huber)?;
    let chi = ScaleScore::normal_consistent(score.clone())?;
    let mut sens = Table::new(&["dist", "n", "m", "m_over_n", "eta_lower", "eta_upper"]);
    let mut bp = Table::new(&["dist", "n", "eta", "bp_lower", "bp_upper"]);
    for d in &cfg.dists {
        let pm = model(d)?;
        let t = tag(&["two_stage", d]);
        let reps: Vec<TwoStageRep> = (0..cfg.reps)
            .into_par_iter()
            .map(|r| {
                let s = Sample::new(pm.sample_n(cfg.n, &mut rng(cfg.seed, r, t)))?;
                two_stage_rep(&s, &score, &chi, cfg)
            })
            .collect::<CliResult<_>>()?;
        let avg = |f: &dyn Fn(&TwoStageRep) -> f64| mean(&reps.iter().map(f).collect::<Vec<_>>());
        for (i, &m) in cfg.m_grid.iter().enumerate() {
            sens.push(vec![
                d.as_str().into(),
                cfg.n.into(),
                m.into(),
                (m as f64 / cfg.n as f64).into(),
                avg(&|r| r.lower[i]).into(),
                avg(&|r| r.upper[i]).into(),
            ]);
        }
        for (i, &eta) in cfg.eta_grid.iter().enumerate() {
            bp.push(vec![
                d.as_str().into(),
                cfg.n.into(),
                eta.into(),
                avg(&|r| r.bp_lower[i]).into(),
                avg(&|r| r.bp_upper[i]).into(),
            ]);
        }
    }
    let mut e = Experiment::new("fig_two_stage")
        .with("reps", json!(cfg.reps))
        .with("n", json!(cfg.n))
        .with("loss", json!("huber"))
        .with("seed", json!(cfg.seed));
    e.tables.push(("sensitivity".into(), sens));
    e.tables.push(("breakdown".into(), bp));
    Ok(e)
}

// ----------------------------------------------------- test V-shape

#[derive(Debug, Clone)]
pub struct VShapeConfig {
    pub reps: usize,
    pub ns: Vec<usize>,
    pub thetas: Vec<f64>,
    pub tests: Vec<TestKind>,
    pub losses: Vec<ScoreKind>,
    pub alpha: f64,
    pub seed: u64,
}

fn theta_grid(k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| -2.0 + 4.0 * i as f64 / (k - 1) as f64)
        .collect()
}

impl VShapeConfig {
    pub fn preset(p: Preset, seed: u64) -> Self {
        match p {
            Preset::Full => Self {
                reps: 100,
                ns: vec![500, 1000, 2000],
                thetas: theta_grid(17),
                tests: vec![
                    TestKind::Wald,
                    TestKind::RestrictedWald,
                    TestKind::Score,
                    TestKind::RestrictedScore,
                ],
                losses: vec![ScoreKind::Huber],
                alpha: 0.05,
                seed,
            },
            Preset::Desk => Self {
                reps: 20,
                ns: vec![500],
                thetas: theta_grid(9),
                tests: vec![
                    TestKind::Wald,
                    TestKind::RestrictedWald,
                    TestKind::Score,
                    TestKind::RestrictedScore,
                ],
                losses: vec![ScoreKind::Huber],
                alpha: 0.05,
                seed,
            },
        }
    }
}

/// Reject-BP bracket of one rejecting sample; beyond-cap values count as cap + 1.
pub fn one_sample_bracket(s: &Sample<f64>, score: &Score, spec: &TestSpec) -> CliResult<BpBracket> {
    let a = match spec.kind {
        TestKind::Score | TestKind::RestrictedScore => score_test_bp(s, score, spec)?,
        _ => test_bp_bounds(s, score, spec)?,
    };
    Ok(a.bracket())
}

fn capped(b: &BpBracket, m: Option<usize>) -> f64 {
    m.unwrap_or(b.cap + 1) as f64 / b.n as f64
}

struct BracketStats {
    lower: f64,
    upper: f64,
    draws: f64,
}

fn summarize(v: &[(BpBracket, usize)]) -> BracketStats {
    BracketStats {
        lower: mean(
            &v.iter()
                .map(|(b, _)| capped(b, b.lower))
                .collect::<Vec<_>>(),
        ),
        upper: mean(
            &v.iter()
                .map(|(b, _)| capped(b, b.upper))
                .collect::<Vec<_>>(),
        ),
        draws: mean(&v.iter().map(|(_, k)| *k as f64).collect::<Vec<_>>()),
    }
}

pub fn fig_test_vshape(cfg: &VShapeConfig) -> CliResult<Experiment> {
    let mut t = Table::new(&[
        "test",
        "loss",
        "n",
        "theta",
        "lower_bp",
        "upper_bp",
        "mid_bp",
        "mean_draws",
    ]);
    for &kind in &cfg.losses {
        let score = loss(kind)?;
        for &test in &cfg.tests {
            let spec = TestSpec::new(test, cfg.alpha);
            for &n in &cfg.ns {
                for &theta in &cfg.thetas {
                    let tg = tag(&[
                        "vshape",
                        test.name(),
                        kind.name(),
                        &n.to_string(),
                        &format!("{theta}"),
                    ]);
                    let pm = PopulationModel::normal(theta, 1.0)?;
                    let res: Vec<(BpBracket, usize)> = (0..cfg.reps)
                        .into_par_iter()
                        .map(|r| {
                            redraw(rng(cfg.seed, r, tg), |g| {
                                let s = Sample::new(pm.sample_n(n, g))?;
                                let b = one_sample_bracket(&s, &score, &spec);
                                match tbp_core::audit::run_test(
                                    &TestData::One(s.clone()),
                                    &score,
                                    &spec,
                                )?
                                .decision
                                {
                                    true => Ok(Some(b?)),
                                    false => Ok(None),
                                }
                            })
                        })
                        .collect::<CliResult<_>>()?;
                    let st = summarize(&res);
                    t.push(vec![
                        test.name().into(),
                        kind.name().into(),
                        n.into(),
                        theta.into(),
                        st.lower.into(),
                        st.upper.into(),
                        (0.5 * (st.lower + st.upper)).into(),
                        st.draws.into(),
                    ]);
                }
            }
        }
    }
    let mut e = Experiment::new("fig_test_vshape")
        .with("reps", json!(cfg.reps))
        .with("n", json!(cfg.ns))
        .with("theta", json!(cfg.thetas))
        .with("alpha", jnum(cfg.alpha))
        .with("sided", json!("two_sided"))
        .with("seed", json!(cfg.seed));
    e.tables.push(("reject_bp".into(), t));
    Ok(e)
}

// ------------------------------------------------------------ gap vs n

#[derive(Debug, Clone)]
pub struct GapConfig {
    pub reps: usize,
    pub ns: Vec<usize>,
    pub theta: f64,
    pub dists: Vec<String>,
    pub tests: Vec<TestKind>,
    pub losses: Vec<ScoreKind>,
    pub alpha: f64,
    pub seed: u64,
}

impl GapConfig {
    pub fn preset(p: Preset, seed: u64) -> Self {
        let base = Self {
            reps: 100,
            ns: (50..=4050).step_by(200).collect(),
            theta: 1.0,
            dists: vec!["normal".into(), "uniform".into(), "cauchy".into()],
            tests: vec![TestKind::Wald, TestKind::RestrictedWald],
            losses: vec![ScoreKind::Huber, ScoreKind::LogCosh],
            alpha: 0.05,
            seed,
        };
        match p {
            Preset::Full => base,
            Preset::Desk => Self {
                reps: 30,
                ns: vec![50, 450, 1050],
                losses: vec![ScoreKind::Huber],
                ..base
            },
        }
    }
}

/// Generating model shifted by θ: N(θ,1), Unif(0,1)+θ, Cauchy(θ,1).
fn shifted(dist: &str, theta: f64) -> CliResult<PopulationModel> {
    Ok(match dist {
        "normal" => PopulationModel::normal(theta, 1.0)?,
        "uniform" => PopulationModel::uniform(theta, theta + 1.0)?,
        "cauchy" => PopulationModel::cauchy(theta, 1.0)?,
        other => model(other)?,
    })
}

/// Least-squares fit y = a + b x with a one-sided test of b < 0.
#[derive(Debug, Clone, Copy)]
pub struct SlopeFit {
    pub intercept: f64,
    pub slope: f64,
    pub se: f64,
    pub t: f64,
    pub p_negative: f64,
}

pub fn slope_fit(x: &[f64], y: &[f64]) -> SlopeFit {
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let df = n - 2.0;
    let se = (rss / df / sxx).sqrt();
    let t = slope / se;
    let p = if se > 0.0 {
        StudentsT::new(0.0, 1.0, df)
            .map(|d| d.cdf(t))
            .unwrap_or(f64::NAN)
    } else if slope < 0.0 {
        0.0
    } else {
        1.0
    };
    SlopeFit {
        intercept,
        slope,
        se,
        t,
        p_negative: p,
    }
}

pub fn fig_gap_vs_n(cfg: &GapConfig) -> CliResult<Experiment> {
    let mut pts = Table::new(&[
        "test", "loss", "dist", "n", "rep", "lower_bp", "upper_bp", "gap",
    ]);
    let mut fits = Table::new(&[
        "test",
        "loss",
        "dist",
        "slope",
        "intercept",
        "se",
        "t",
        "p_value",
    ]);
    for &test in &cfg.tests {
        for &kind in &cfg.losses {
            let score = loss(kind)?;
            let spec = TestSpec::new(test, cfg.alpha);
            for d in &cfg.dists {
                let pm = shifted(d, cfg.theta)?;
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for &n in &cfg.ns {
                    let tg = tag(&["gap", test.name(), kind.name(), d, &n.to_string()]);
                    let res: Vec<(BpBracket, usize)> = (0..cfg.reps)
                        .into_par_iter()
                        .map(|r| {
                            redraw(rng(cfg.seed, r, tg), |g| {
                                let s = Sample::new(pm.sample_n(n, g))?;
                                let b = one_sample_bracket(&s, &score, &spec)?;
                                let out =
                                    tbp_core::audit::run_test(&TestData::One(s), &score, &spec)?;
                                Ok(out.decision.then_some(b))
                            })
                        })
                        .collect::<CliResult<_>>()?;
                    for (r, (b, _)) in res.iter().enumerate() {
                        let g = b.gap();
                        xs.push(n as f64);
                        ys.push(g);
                        pts.push(vec![
                            test.name().into(),
                            kind.name().into(),
                            d.as_str().into(),
                            n.into(),
                            r.into(),
                            capped(b, b.lower).into(),
                            capped(b, b.upper).into(),
                            g.into(),
                        ]);
                    }
                }
                let f = slope_fit(&xs, &ys);
                fits.push(vec![
                    test.name().into(),
                    kind.name().into(),
                    d.as_str().into(),
                    f.slope.into(),
                    f.intercept.into(),
                    f.se.into(),
                    f.t.into(),
                    f.p_negative.into(),
                ]);
            }
        }
    }
    let mut e = Experiment::new("fig_gap_vs_n")
        .with("reps", json!(cfg.reps))
        .with("n", json!(cfg.ns))
        .with("theta", jnum(cfg.theta))
        .with("alpha", jnum(cfg.alpha))
        .with("seed", json!(cfg.seed));
    e.tables.push(("gaps".into(), pts));
    e.tables.push(("fits".into(), fits));
    Ok(e)
}

// ------------------------------------------------- two-sample V-shape

#[derive(Debug, Clone)]
pub struct TwoSampleConfig {
    pub reps: usize,
    pub ns: Vec<usize>,
    pub thetas: Vec<f64>,
    pub losses: Vec<ScoreKind>,
    pub alpha: f64,
    pub seed: u64,
}

impl TwoSampleConfig {
    pub fn preset(p: Preset, seed: u64) -> Self {
        Self {
            reps: if p == Preset::Full { 100 } else { 10 },
            ns: vec![50, 100, 200],
            thetas: theta_grid(if p == Preset::Full { 17 } else { 9 }),
            losses: LOSSES.to_vec(),
            alpha: 0.05,
            seed,
        }
    }
}

pub fn fig_two_sample_vshape(cfg: &TwoSampleConfig) -> CliResult<Experiment> {
    let mut t = Table::new(&[
        "loss",
        "n",
        "theta",
        "lower_bp",
        "upper_bp",
        "mid_bp",
        "mean_draws",
    ]);
    let spec = TestSpec::new(TestKind::TwoSampleWald, cfg.alpha);
    let px = PopulationModel::standard_normal();
    for &kind in &cfg.losses {
        let score = loss(kind)?;
        for &n in &cfg.ns {
            for &theta in &cfg.thetas {
                let py = PopulationModel::normal(theta, 1.0)?;
                let tg = tag(&[
                    "two_sample",
                    kind.name(),
                    &n.to_string(),
                    &format!("{theta}"),
                ]);
                let res: Vec<(BpBracket, usize)> = (0..cfg.reps)
                    .into_par_iter()
                    .map(|r| {
                        redraw(rng(cfg.seed, r, tg), |g| {
                            let x = Sample::new(px.sample_n(n, g))?;
                            let y = Sample::new(py.sample_n(n, g))?;
                            let out = tbp_core::audit::run_test(
                                &TestData::Two(x.clone(), y.clone()),
                                &score,
                                &spec,
                            )?;
                            if !out.decision {
                                return Ok(None);
                            }
                            Ok(Some(two_sample_bracket(&x, &y, &score, &spec)?.bracket()))
                        })
                    })
                    .collect::<CliResult<_>>()?;
                let st = summarize(&res);
                t.push(vec![
                    kind.name().into(),
                    n.into(),
                    theta.into(),
                    st.lower.into(),
                    st.upper.into(),
                    (0.5 * (st.lower + st.upper)).into(),
                    st.draws.into(),
                ]);
            }
        }
    }
    let mut e = Experiment::new("fig_two_sample_vshape")
        .with("reps", json!(cfg.reps))
        .with("n", json!(cfg.ns))
        .with("theta", json!(cfg.thetas))
        .with("alpha", jnum(cfg.alpha))
        .with("seed", json!(cfg.seed));
    e.tables.push(("reject_bp".into(), t));
    Ok(e)
}

// ------------------------------------------------------------------ PIT

#[derive(Debug, Clone)]
pub struct PitConfig {
    pub n: usize,
    pub outer: usize,
    pub boot_b: usize,
    pub eps: Vec<f64>,
    pub seed: u64,
}

impl PitConfig {
    pub fn preset(p: Preset, seed: u64) -> Self {
        let k = if p == Preset::Full { 1000 } else { 200 };
        Self {
            n: 100,
            outer: k,
            boot_b: k,
            eps: vec![0.03, 0.1, 0.15],
            seed,
        }
    }
}

pub fn fig_pit(cfg: &PitConfig) -> CliResult<Experiment> {
    let score = loss(ScoreKind::Huber)?;
    let pm = PopulationModel::standard_normal();
    let mut u = Table::new(&["eps", "j", "u"]);
    let mut ks = Table::new(&["eps", "m", "eta_population", "ks_stat", "p_value"]);
    for (i, &eps) in cfg.eps.iter().enumerate() {
        let bc = BootstrapConfig::new(cfg.boot_b, derive_seed(cfg.seed, i as u64, 7));
        let r = pit_uniformity(&pm, &score, eps, cfg.n, cfg.outer, &bc)?;
        for (j, v) in r.u.iter().enumerate() {
            u.push(vec![eps.into(), j.into(), (*v).into()]);
        }
        ks.push(vec![
            eps.into(),
            r.m.into(),
            r.eta_population.into(),
            r.ks_stat.into(),
            r.p_value.into(),
        ]);
    }
    let mut e = Experiment::new("fig_pit")
        .with("n", json!(cfg.n))
        .with("M", json!(cfg.outer))
        .with("B", json!(cfg.boot_b))
        .with("eps", json!(cfg.eps))
        .with("seed", json!(cfg.seed));
    e.tables.push(("pit_values".into(), u));
    e.tables.push(("ks".into(), ks));
    Ok(e)
}

// ------------------------------------------------------------------ run

pub fn run_experiment(
    id: &str,
    preset: Preset,
    seed: u64,
    reps: Option<usize>,
) -> CliResult<Experiment> {
    let e = match id {
        "fig_location_curves" => {
            let mut c = LocationCurvesConfig::preset(preset, seed);
            c.reps = reps.unwrap_or(c.reps);
            fig_location_curves(&c)?
        }
        "fig_two_stage" => {
            let mut c = TwoStageConfig::preset(preset, seed);
            c.reps = reps.unwrap_or(c.reps);
            fig_two_stage(&c)?
        }
        "fig_test_vshape" => {
            let mut c = VShapeConfig::preset(preset, seed);
            c.reps = reps.unwrap_or(c.reps);
            fig_test_vshape(&c)?
        }
        "fig_gap_vs_n" => {
            let mut c = GapConfig::preset(preset, seed);
            c.reps = reps.unwrap_or(c.reps);
            fig_gap_vs_n(&c)?
        }
        "fig_two_sample_vshape" => {
            let mut c = TwoSampleConfig::preset(preset, seed);
            c.reps = reps.unwrap_or(c.reps);
            fig_two_sample_vshape(&c)?
        }
        "fig_pit" => {
            let mut c = PitConfig::preset(preset, seed);
            if let Some(r) = reps {
                c.outer = r;
            }
            fig_pit(&c)?
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown experiment '{other}'; known: {}",
                EXPERIMENTS.join(", ")
            )))
        }
    };
    Ok(e.with("experiment", json!(id))
        .with("preset", json!(preset.name())))
}

/// Writes `<out>/<id>_<table>.csv` for each table and `<out>/<id>_manifest.json`.
pub fn write_experiment(e: &Experiment, dir: &std::path::Path) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut names = Vec::new();
    for (name, t) in &e.tables {
        let p = dir.join(format!("{}_{}.csv", e.id, name));
        write_text(Some(&p), &t.to_csv())?;
        names.push(Value::String(
            p.file_name().unwrap().to_string_lossy().into_owned(),
        ));
        files.push(p);
    }
    let mut m = e.manifest.clone();
    m.insert("files".into(), Value::Array(names));
    let p = dir.join(format!("{}_manifest.json", e.id));
    let mut text = serde_json::to_string_pretty(&Value::Object(m)).unwrap();
    text.push('\n');
    write_text(Some(&p), &text)?;
    files.push(p);
    Ok(files)
}

pub fn run_cli(id: &str, ctx: &Ctx) -> CliResult<()> {
    if id == "list" {
        let mut t = Table::new(&["experiment"]);
        for e in EXPERIMENTS {
            t.push(vec![Cell::from(e)]);
        }
        return write_text(None, &t.to_csv());
    }
    let preset: Preset = ctx.s.get_or("preset", Preset::Desk)?;
    let e = run_experiment(id, preset, ctx.seed()?, ctx.s.get("reps")?)?;
    let dir = ctx.out().unwrap_or_else(|| PathBuf::from("replicate_out"));
    let files = write_experiment(&e, &dir)?;
    let mut t = Table::new(&["file"]);
    for f in files {
        t.push(vec![Cell::from(f.display().to_string())]);
    }
    write_text(None, &t.to_csv())
}
