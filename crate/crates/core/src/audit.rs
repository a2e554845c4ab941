//! Breakdown audits for Wald-type and score-type tests.

use std::str::FromStr;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::estimators::{location_root, plugin_se_raw, two_stage_se_ratio, Sample};
use crate::model::PopulationModel;
use crate::root::RootSelect;
use crate::score::{fisher_constant, ScaleScoreFamily, ScoreFamily, ScoreKind};
use crate::sensitivity::{
    contaminate_left, contaminate_right, left_targets, location_eta, scale_eta,
    se_plugin_upper_eta, se_restricted_eta, two_stage_fit, two_stage_upper_eta, BoundKind,
    SchemeConfig, SensitivityPoint, Side,
};
use crate::{lit, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Wald,
    RestrictedWald,
    Score,
    RestrictedScore,
    TwoSampleWald,
    FixedSigmaWald,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Wald => "wald",
            TestKind::RestrictedWald => "restricted_wald",
            TestKind::Score => "score",
            TestKind::RestrictedScore => "restricted_score",
            TestKind::TwoSampleWald => "two_sample_wald",
            TestKind::FixedSigmaWald => "fixed_sigma_wald",
        }
    }

    /// Whether the bracket collapses to an exact value.
    pub fn is_exact(self) -> bool {
        matches!(self, TestKind::FixedSigmaWald | TestKind::RestrictedScore)
    }
}

impl FromStr for TestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "wald" => TestKind::Wald,
            "rwald" | "restricted_wald" => TestKind::RestrictedWald,
            "score" => TestKind::Score,
            "rscore" | "restricted_score" => TestKind::RestrictedScore,
            "two_sample" | "two_sample_wald" => TestKind::TwoSampleWald,
            "fixed" | "fixed_sigma_wald" => TestKind::FixedSigmaWald,
            other => return Err(Error::Domain(format!("unknown test kind '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sided {
    #[default]
    TwoSided,
    /// Rejects when the lower endpoint is positive.
    OneSidedUpper,
    /// Rejects when the upper endpoint is negative.
    OneSidedLower,
}

impl FromStr for Sided {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "two_sided" | "both" => Sided::TwoSided,
            "one_sided_upper" | "upper" | "greater" => Sided::OneSidedUpper,
            "one_sided_lower" | "lower" | "less" => Sided::OneSidedLower,
            other => return Err(Error::Domain(format!("unknown sidedness '{other}'"))),
        })
    }
}

/// Contamination budget for two-sample problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BudgetMode {
    /// Up to m replacements in each sample.
    PerSample,
    /// k₁ + k₂ = m replacements in total.
    #[default]
    Total,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSpec {
    pub kind: TestKind,
    pub alpha: f64,
    pub theta0: f64,
    pub sided: Sided,
    pub sigma0: Option<f64>,
    pub scheme: SchemeConfig,
    pub budget_mode: BudgetMode,
    /// Use the envelope numerators for plug-in SE upper bounds.
    pub envelope: bool,
}

impl TestSpec {
    pub fn new(kind: TestKind, alpha: f64) -> Self {
        Self {
            kind,
            alpha,
            theta0: 0.0,
            sided: Sided::TwoSided,
            sigma0: None,
            scheme: SchemeConfig::default(),
            budget_mode: BudgetMode::Total,
            envelope: false,
        }
    }

    pub fn with_sided(mut self, sided: Sided) -> Self {
        self.sided = sided;
        self
    }

    pub fn with_sigma0(mut self, sigma0: f64) -> Self {
        self.sigma0 = Some(sigma0);
        self
    }

    pub fn with_theta0(mut self, theta0: f64) -> Self {
        self.theta0 = theta0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if !self.theta0.is_finite() {
            return Err(Error::Domain("theta0 must be finite".into()));
        }
        if let Some(s) = self.sigma0 {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Domain(format!("sigma0 must be positive, got {s}")));
            }
        }
        if self.kind == TestKind::FixedSigmaWald && self.sigma0.is_none() {
            return Err(Error::Contract("fixed_sigma_wald needs sigma0".into()));
        }
        Ok(())
    }

    /// Critical value z_{1−α/2} (two-sided) or z_{1−α}.
    pub fn z(&self) -> f64 {
        let p = match self.sided {
            Sided::TwoSided => 1.0 - self.alpha / 2.0,
            _ => 1.0 - self.alpha,
        };
        Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
    }
}

/// One sample or a pair of samples.
#[derive(Debug, Clone, PartialEq)]
pub enum TestData<F> {
    One(Sample<F>),
    Two(Sample<F>, Sample<F>),
}

impl<F: Real> TestData<F> {
    /// Normalizing size: n, or min(n_x, n_y).
    pub fn n_norm(&self) -> usize {
        match self {
            TestData::One(s) => s.n(),
            TestData::Two(x, y) => x.n().min(y.n()),
        }
    }

    /// Largest audited budget ⌈n/2⌉.
    pub fn cap(&self) -> usize {
        self.n_norm().div_ceil(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome<F> {
    pub decision: bool,
    /// Point estimate minus θ₀ (or V_n for score tests).
    pub center: F,
    pub se: F,
    pub z: F,
    pub lower: F,
    pub upper: F,
    /// center / se.
    pub statistic: F,
    pub degenerate: Option<String>,
}

fn decide<F: Real>(sided: Sided, lower: F, upper: F) -> bool {
    match sided {
        Sided::TwoSided => lower > F::zero() || upper < F::zero(),
        Sided::OneSidedUpper => lower > F::zero(),
        Sided::OneSidedLower => upper < F::zero(),
    }
}

fn outcome<F: Real>(
    spec: &TestSpec,
    center: F,
    se: F,
    degenerate: Option<String>,
) -> TestOutcome<F> {
    let z: F = lit(spec.z());
    if center.is_nan() || se.is_nan() {
        return TestOutcome {
            decision: false,
            center,
            se,
            z,
            lower: F::nan(),
            upper: F::nan(),
            statistic: F::nan(),
            degenerate: Some(degenerate.unwrap_or_else(|| "undefined estimate".into())),
        };
    }
    let (lower, upper) = if se.is_infinite() {
        (F::neg_infinity(), F::infinity())
    } else {
        (center - z * se, center + z * se)
    };
    let statistic = if se.is_infinite() {
        F::zero()
    } else {
        center / se
    };
    TestOutcome {
        decision: decide(spec.sided, lower, upper),
        center,
        se,
        z,
        lower,
        upper,
        statistic,
        degenerate,
    }
}

fn se_or_inf<F: Real>(r: Result<F>) -> (F, Option<String>) {
    match r {
        Ok(v) => (v, None),
        Err(e) => (F::infinity(), Some(e.to_string())),
    }
}

/// Fixed S for the restricted score test: σ₀ or sqrt(E[ψ(Z)²]) under N(0,1).
fn restricted_score_scale<F: Real>(score: &ScoreFamily<F>, spec: &TestSpec) -> Result<F> {
    match spec.sigma0 {
        Some(s) => Ok(lit(s)),
        None => Ok(fisher_constant(score, &PopulationModel::standard_normal())?.sqrt()),
    }
}

fn shift<F: Real>(xs: &[F], theta0: F) -> Vec<F> {
    xs.iter().map(|&x| x - theta0).collect()
}

/// Location estimate and plug-in SE of one sample of a two-sample test.
#[derive(Debug, Clone)]
struct SampleFit<F> {
    theta: F,
    se: F,
    degenerate: Option<String>,
}

fn sample_fit<F: Real>(x: &[F], score: &ScoreFamily<F>) -> SampleFit<F> {
    let theta = location_root(x, score, RootSelect::Midpoint);
    let (se, degenerate) = se_or_inf(plugin_se_raw(x, score, theta));
    SampleFit {
        theta,
        se,
        degenerate,
    }
}

fn two_sample_outcome<F: Real>(
    fx: &SampleFit<F>,
    fy: &SampleFit<F>,
    spec: &TestSpec,
) -> TestOutcome<F> {
    let t0: F = lit(spec.theta0);
    let se = (fx.se * fx.se + fy.se * fy.se).sqrt();
    outcome(
        spec,
        fx.theta - fy.theta - t0,
        se,
        fx.degenerate.clone().or_else(|| fy.degenerate.clone()),
    )
}

/// Test on raw (unshifted) data; `restricted_s` caches the restricted score scale.
fn run_raw<F: Real>(
    x: &[F],
    y: Option<&[F]>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
    restricted_s: F,
) -> TestOutcome<F> {
    let t0: F = lit(spec.theta0);
    match spec.kind {
        TestKind::TwoSampleWald => {
            let y = y.expect("two-sample data");
            two_sample_outcome(&sample_fit(x, score), &sample_fit(y, score), spec)
        }
        TestKind::Score | TestKind::RestrictedScore => {
            let d = shift(x, t0);
            let nf = lit::<F>(d.len() as f64);
            let (s1, s2) = d.iter().fold((F::zero(), F::zero()), |(a, b), &v| {
                let p = score.psi(v);
                (a + p, b + p * p)
            });
            let v = s1 / nf.sqrt();
            let s = if spec.kind == TestKind::Score {
                (s2 / nf).sqrt()
            } else {
                restricted_s
            };
            outcome(spec, v, s, None)
        }
        _ => {
            let d = shift(x, t0);
            let th = location_root(&d, score, RootSelect::Midpoint);
            let (se, deg) = match spec.kind {
                TestKind::Wald => {
                    if th.is_nan() {
                        (F::nan(), None)
                    } else {
                        se_or_inf(plugin_se_raw(&d, score, th))
                    }
                }
                TestKind::RestrictedWald => se_or_inf(plugin_se_raw(&d, score, F::zero())),
                _ => (lit(spec.sigma0.unwrap_or(f64::NAN)), None),
            };
            outcome(spec, th, se, deg)
        }
    }
}

fn check_data<F: Real>(data: &TestData<F>, spec: &TestSpec) -> Result<()> {
    spec.validate()?;
    match (data, spec.kind == TestKind::TwoSampleWald) {
        (TestData::Two(..), true) | (TestData::One(_), false) => Ok(()),
        _ => Err(Error::Contract(format!(
            "test kind {} does not match the supplied data",
            spec.kind.name()
        ))),
    }
}

fn needs_bounded<F: Real>(score: &ScoreFamily<F>, spec: &TestSpec) -> Result<()> {
    if !score.is_bounded() && spec.kind != TestKind::FixedSigmaWald {
        return Err(Error::Domain("test audits need a bounded score".into()));
    }
    Ok(())
}

/// Evaluates the test: decision and acceptance interval for θ − θ₀.
pub fn run_test<F: Real>(
    data: &TestData<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
) -> Result<TestOutcome<F>> {
    check_data(data, spec)?;
    let rs = if spec.kind == TestKind::RestrictedScore {
        restricted_score_scale(score, spec)?
    } else {
        F::nan()
    };
    Ok(match data {
        TestData::One(s) => run_raw(s.values(), None, score, spec, rs),
        TestData::Two(x, y) => run_raw(x.values(), Some(y.values()), score, spec, rs),
    })
}

// ------------------------------------------------------------ brackets

/// Breakdown bracket on the grid {1/n, …}; `None` means beyond the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BpBracket {
    pub lower: Option<usize>,
    pub upper: Option<usize>,
    pub n: usize,
    pub cap: usize,
}

impl BpBracket {
    fn rank(&self, m: Option<usize>) -> usize {
        m.unwrap_or(self.cap + 1)
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn is_valid(&self) -> bool {
        self.rank(self.lower) <= self.rank(self.upper)
    }

    pub fn contains(&self, m: Option<usize>) -> bool {
        let r = self.rank(m);
        self.rank(self.lower) <= r && r <= self.rank(self.upper)
    }

    /// m/n, or +∞ beyond the cap.
    pub fn frac(&self, m: Option<usize>) -> f64 {
        m.map_or(f64::INFINITY, |m| m as f64 / self.n as f64)
    }

    pub fn lower_bp(&self) -> f64 {
        self.frac(self.lower)
    }

    pub fn upper_bp(&self) -> f64 {
        self.frac(self.upper)
    }

    /// Width in units of 1/n, with beyond-cap values counted as cap + 1.
    pub fn gap(&self) -> f64 {
        (self.rank(self.upper) as f64 - self.rank(self.lower) as f64) / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandRow<F> {
    pub m: usize,
    pub low: F,
    pub high: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestAudit<F> {
    pub outcome: TestOutcome<F>,
    /// Present when the test rejects.
    pub reject_bp: Option<BpBracket>,
    /// Present when the test accepts.
    pub accept_bp: Option<BpBracket>,
    pub exact: bool,
    pub band: Vec<BandRow<F>>,
    /// Contamination realizing the upper bound.
    pub witness: Option<TestData<F>>,
}

impl<F: Real> TestAudit<F> {
    pub fn decision(&self) -> bool {
        self.outcome.decision
    }

    pub fn bracket(&self) -> BpBracket {
        self.reject_bp
            .or(self.accept_bp)
            .expect("one bracket is set")
    }
}

/// One-sided sensitivities of the interval center and half-width scale.
#[derive(Debug, Clone, Copy)]
struct StatSens<F> {
    c_up: F,
    c_dn: F,
    s_up: F,
    s_dn: F,
}

fn sorted<F: Real>(xs: &[F]) -> Vec<F> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

struct OneSampleCtx<F> {
    d: Vec<F>,
    d_sorted: Vec<F>,
    theta: F,
}

fn one_ctx<F: Real>(xs: &[F], score: &ScoreFamily<F>, theta0: F) -> OneSampleCtx<F> {
    let d = shift(xs, theta0);
    let d_sorted = sorted(&d);
    let theta = location_root(&d_sorted, score, RootSelect::Midpoint);
    OneSampleCtx { d, d_sorted, theta }
}

fn wald_sens<F: Real>(
    ctx: &OneSampleCtx<F>,
    score: &ScoreFamily<F>,
    kind: TestKind,
    envelope: bool,
    m: usize,
) -> Result<StatSens<F>> {
    let c_up = location_eta(&ctx.d_sorted, score, ctx.theta, m, Side::Plus);
    let c_dn = location_eta(&ctx.d_sorted, score, ctx.theta, m, Side::Minus);
    let (s_up, s_dn) = match kind {
        TestKind::Wald => se_plugin_upper_eta(&ctx.d, score, ctx.theta, m, envelope)?,
        TestKind::RestrictedWald => se_restricted_eta(&ctx.d, score, F::zero(), m)?,
        _ => (F::zero(), F::zero()),
    };
    Ok(StatSens {
        c_up,
        c_dn,
        s_up,
        s_dn,
    })
}

fn score_sens<F: Real>(
    ctx: &OneSampleCtx<F>,
    score: &ScoreFamily<F>,
    kind: TestKind,
    m: usize,
) -> StatSens<F> {
    let n = ctx.d.len();
    let nf = lit::<F>(n as f64);
    let rn = nf.sqrt();
    let mf = lit::<F>(m as f64);
    let psi: Vec<F> = ctx.d_sorted.iter().map(|&v| score.psi(v)).collect();
    let v = psi.iter().fold(F::zero(), |a, &b| a + b) / rn;
    let hi = (psi[m..].iter().fold(F::zero(), |a, &b| a + b) + mf * score.psi_pos_inf()) / rn;
    let lo = (psi[..n - m].iter().fold(F::zero(), |a, &b| a + b) + mf * score.psi_neg_inf()) / rn;
    let (c_up, c_dn) = if m == 0 {
        (F::zero(), F::zero())
    } else {
        ((hi - v).max(F::zero()), (v - lo).max(F::zero()))
    };
    if kind == TestKind::RestrictedScore || m == 0 {
        return StatSens {
            c_up,
            c_dn,
            s_up: F::zero(),
            s_dn: F::zero(),
        };
    }
    let mut p2: Vec<F> = psi.iter().map(|&p| p * p).collect();
    p2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let s = (p2.iter().fold(F::zero(), |a, &b| a + b) / nf).sqrt();
    let pmax2 = score.psi_max() * score.psi_max();
    let s_hi = ((mf * pmax2 + p2[m..].iter().fold(F::zero(), |a, &b| a + b)) / nf).sqrt();
    let s_lo = (p2[..n - m].iter().fold(F::zero(), |a, &b| a + b) / nf).sqrt();
    StatSens {
        c_up,
        c_dn,
        s_up: (s_hi - s).max(F::zero()),
        s_dn: (s - s_lo).max(F::zero()),
    }
}

/// Conditions of the lower bounds given center/scale sensitivities.
fn lower_condition<F: Real>(out: &TestOutcome<F>, sided: Sided, s: &StatSens<F>) -> bool {
    let z = out.z;
    if out.decision {
        if out.lower > F::zero() {
            s.c_dn + z * s.s_up >= out.lower
        } else {
            s.c_up + z * s.s_up >= -out.upper
        }
    } else {
        let push_left = s.c_dn + z * s.s_dn >= out.upper;
        let push_right = s.c_up + z * s.s_dn >= -out.lower;
        match sided {
            Sided::TwoSided => push_left || push_right,
            Sided::OneSidedUpper => push_right,
            Sided::OneSidedLower => push_left,
        }
    }
}

/// Scheme contaminations of one sample: (moved-left, moved-right, inward).
fn one_sample_schemes<F: Real>(
    ctx: &OneSampleCtx<F>,
    score: &ScoreFamily<F>,
    kind: TestKind,
    scheme: &SchemeConfig,
    m: usize,
    theta0: F,
) -> Vec<Vec<F>> {
    let s = &ctx.d_sorted;
    let n = s.len();
    let mut out = Vec::new();
    let score_like = matches!(kind, TestKind::Score | TestKind::RestrictedScore);
    let (lt, rt) = if score_like {
        (vec![F::infinity(), s[n - 1]], vec![F::neg_infinity(), s[0]])
    } else {
        let eta = location_eta(s, score, ctx.theta, m, Side::Plus);
        (
            left_targets(s, score, ctx.theta, eta, scheme),
            crate::sensitivity::right_targets(s, score, ctx.theta, eta, scheme),
        )
    };
    for c in lt {
        out.push(contaminate_left(s, m, c));
    }
    for c in rt {
        out.push(contaminate_right(s, m, c));
    }
    // the m points farthest from the center moved onto it
    let centre = if score_like { F::zero() } else { ctx.theta };
    if centre.is_finite() {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            (s[b] - centre)
                .abs()
                .partial_cmp(&(s[a] - centre).abs())
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut v = s.clone();
        for &i in idx.iter().take(m) {
            v[i] = centre;
        }
        out.push(v);
    }
    for v in out.iter_mut() {
        for x in v.iter_mut() {
            *x = *x + theta0;
        }
    }
    out
}

/// Budget splits (k₁, k₂) for a two-sample budget m.
pub fn budget_splits(m: usize, nx: usize, ny: usize, mode: BudgetMode) -> Vec<(usize, usize)> {
    match mode {
        BudgetMode::Total => (0..=m)
            .map(|k| (k, m - k))
            .filter(|&(a, b)| a <= nx && b <= ny)
            .collect(),
        BudgetMode::PerSample => {
            let mut v = Vec::new();
            for a in 0..=m.min(nx) {
                for b in 0..=m.min(ny) {
                    if a.max(b) == m || (a == m.min(nx) && b == m.min(ny)) {
                        v.push((a, b));
                    }
                }
            }
            v.sort();
            v.dedup();
            v
        }
    }
}

struct TwoSampleCtx<F> {
    x: OneSampleCtx<F>,
    y: OneSampleCtx<F>,
    se_x: F,
    se_y: F,
}

fn two_ctx<F: Real>(x: &[F], y: &[F], score: &ScoreFamily<F>) -> TwoSampleCtx<F> {
    let x = one_ctx(x, score, F::zero());
    let y = one_ctx(y, score, F::zero());
    let se_x = plugin_se_raw(&x.d, score, x.theta).unwrap_or(F::infinity());
    let se_y = plugin_se_raw(&y.d, score, y.theta).unwrap_or(F::infinity());
    TwoSampleCtx { x, y, se_x, se_y }
}

/// Per-sample (location ±, SE ±) sensitivities at budget k.
fn per_sample<F: Real>(
    ctx: &OneSampleCtx<F>,
    score: &ScoreFamily<F>,
    envelope: bool,
    k: usize,
) -> Result<StatSens<F>> {
    wald_sens(ctx, score, TestKind::Wald, envelope, k)
}

/// Composed contrast/pooled-SE sensitivities for one split.
fn compose<F: Real>(t: &TwoSampleCtx<F>, sx: &StatSens<F>, sy: &StatSens<F>) -> StatSens<F> {
    let se = (t.se_x * t.se_x + t.se_y * t.se_y).sqrt();
    let up = ((t.se_x + sx.s_up).powi(2) + (t.se_y + sy.s_up).powi(2)).sqrt() - se;
    let a = (t.se_x - sx.s_dn).max(F::zero());
    let b = (t.se_y - sy.s_dn).max(F::zero());
    let dn = se - (a * a + b * b).sqrt();
    StatSens {
        c_up: sx.c_up + sy.c_dn,
        c_dn: sx.c_dn + sy.c_up,
        s_up: up,
        s_dn: dn,
    }
}

fn max_sens<F: Real>(v: &[StatSens<F>]) -> StatSens<F> {
    v.iter().fold(
        StatSens {
            c_up: F::zero(),
            c_dn: F::zero(),
            s_up: F::zero(),
            s_dn: F::zero(),
        },
        |a, b| StatSens {
            c_up: a.c_up.max(b.c_up),
            c_dn: a.c_dn.max(b.c_dn),
            s_up: a.s_up.max(b.s_up),
            s_dn: a.s_dn.max(b.s_dn),
        },
    )
}

/// Per-sample sensitivity tables for k = 0..=m_max.
fn sens_table<F: Real>(
    ctx: &OneSampleCtx<F>,
    score: &ScoreFamily<F>,
    envelope: bool,
    m_max: usize,
) -> Result<Vec<StatSens<F>>> {
    (0..=m_max.min(ctx.d.len()))
        .into_par_iter()
        .map(|k| per_sample(ctx, score, envelope, k))
        .collect()
}

/// Contaminations of one sample pushing its estimate down (`false`) or up (`true`).
fn directed_schemes<F: Real>(
    ctx: &OneSampleCtx<F>,
    score: &ScoreFamily<F>,
    scheme: &SchemeConfig,
    k: usize,
    up: bool,
) -> Vec<Vec<F>> {
    let s = &ctx.d_sorted;
    if k == 0 {
        return vec![s.clone()];
    }
    let eta = location_eta(s, score, ctx.theta, k, Side::Plus);
    if up {
        left_targets(s, score, ctx.theta, eta, scheme)
            .into_iter()
            .map(|c| contaminate_left(s, k, c))
            .collect()
    } else {
        crate::sensitivity::right_targets(s, score, ctx.theta, eta, scheme)
            .into_iter()
            .map(|c| contaminate_right(s, k, c))
            .collect()
    }
}

/// Fits of the directed scheme contaminations of one sample, memoized by
/// (budget, direction); they recur across budget splits.
struct SchemeFits<'a, F> {
    ctx: &'a OneSampleCtx<F>,
    fits: std::collections::HashMap<(usize, bool), Vec<SampleFit<F>>>,
}

impl<'a, F: Real> SchemeFits<'a, F> {
    fn new(ctx: &'a OneSampleCtx<F>) -> Self {
        Self {
            ctx,
            fits: std::collections::HashMap::new(),
        }
    }

    fn get(
        &mut self,
        score: &ScoreFamily<F>,
        scheme: &SchemeConfig,
        k: usize,
        up: bool,
    ) -> &[SampleFit<F>] {
        let ctx = self.ctx;
        self.fits.entry((k, up)).or_insert_with(|| {
            directed_schemes(ctx, score, scheme, k, up)
                .iter()
                .map(|v| sample_fit(v, score))
                .collect()
        })
    }
}

/// Visits the explicit two-sample contaminations at budget m that push the
/// contrast up (`true`) or down, in split order; stops when `visit` returns
/// true and reports the (k₁, x-scheme, k₂, y-scheme) position.
#[allow(clippy::too_many_arguments)]
fn scan_two_sample<F: Real>(
    t: &TwoSampleCtx<F>,
    fx: &mut SchemeFits<F>,
    fy: &mut SchemeFits<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
    m: usize,
    up: bool,
    mut visit: impl FnMut(&TestOutcome<F>) -> bool,
) -> Option<(usize, usize, usize, usize)> {
    for (k1, k2) in budget_splits(m, t.x.d.len(), t.y.d.len(), spec.budget_mode) {
        let xs = fx.get(score, &spec.scheme, k1, up).to_vec();
        let ys = fy.get(score, &spec.scheme, k2, !up);
        for (i, a) in xs.iter().enumerate() {
            for (j, b) in ys.iter().enumerate() {
                if visit(&two_sample_outcome(a, b, spec)) {
                    return Some((k1, i, k2, j));
                }
            }
        }
    }
    None
}

/// Rebuilds the contaminated pair at a scan position.
fn scheme_pair<F: Real>(
    t: &TwoSampleCtx<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
    up: bool,
    (k1, i, k2, j): (usize, usize, usize, usize),
) -> (Vec<F>, Vec<F>) {
    let a = directed_schemes(&t.x, score, &spec.scheme, k1, up).swap_remove(i);
    let b = directed_schemes(&t.y, score, &spec.scheme, k2, !up).swap_remove(j);
    (a, b)
}

/// Rejection or acceptance breakdown bracket for a test.
pub fn test_bp_bounds<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
) -> Result<TestAudit<F>> {
    if !matches!(
        spec.kind,
        TestKind::Wald | TestKind::RestrictedWald | TestKind::FixedSigmaWald
    ) {
        return Err(Error::Contract(format!(
            "test_bp_bounds does not handle {}",
            spec.kind.name()
        )));
    }
    one_sample_audit(sample, score, spec)
}

/// Breakdown bracket for the score and restricted score tests.
pub fn score_test_bp<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
) -> Result<TestAudit<F>> {
    if !matches!(spec.kind, TestKind::Score | TestKind::RestrictedScore) {
        return Err(Error::Contract(format!(
            "score_test_bp does not handle {}",
            spec.kind.name()
        )));
    }
    one_sample_audit(sample, score, spec)
}

fn one_sample_audit<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
) -> Result<TestAudit<F>> {
    let data = TestData::One(sample.clone());
    needs_bounded(score, spec)?;
    let out = run_test(&data, score, spec)?;
    if let Some(d) = &out.degenerate {
        return Err(Error::DegenerateInformation(d.clone()));
    }
    let rs = if spec.kind == TestKind::RestrictedScore {
        restricted_score_scale(score, spec)?
    } else {
        F::nan()
    };
    let t0: F = lit(spec.theta0);
    let ctx = one_ctx(sample.values(), score, t0);
    let n = sample.n();
    let cap = data.cap();
    let score_like = matches!(spec.kind, TestKind::Score | TestKind::RestrictedScore);

    let mut lower = None;
    let mut upper = None;
    let mut witness = None;
    for m in 1..=cap {
        if lower.is_none() {
            let s = if score_like {
                score_sens(&ctx, score, spec.kind, m)
            } else {
                wald_sens(&ctx, score, spec.kind, spec.envelope, m)?
            };
            if lower_condition(&out, spec.sided, &s) {
                lower = Some(m);
            }
        }
        if upper.is_none() {
            for v in one_sample_schemes(&ctx, score, spec.kind, &spec.scheme, m, t0) {
                let o = run_raw(&v, None, score, spec, rs);
                if o.decision != out.decision {
                    upper = Some(m);
                    witness = Some(TestData::One(Sample::new(v)?));
                    break;
                }
            }
        }
        if lower.is_some() && (upper.is_some() || spec.kind.is_exact()) {
            break;
        }
    }
    if spec.kind.is_exact() {
        upper = lower;
    }
    let bracket = BpBracket {
        lower,
        upper,
        n,
        cap,
    };
    Ok(TestAudit {
        reject_bp: out.decision.then_some(bracket),
        accept_bp: (!out.decision).then_some(bracket),
        exact: spec.kind.is_exact(),
        outcome: out,
        band: Vec::new(),
        witness,
    })
}

/// Two-sample Wald audit: bracket normalized by min(n_x, n_y) plus the
/// statistic band for m = 0, …, ⌈n★/2⌉.
pub fn two_sample_bp_bounds<F: Real>(
    x: &Sample<F>,
    y: &Sample<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
) -> Result<TestAudit<F>> {
    two_sample_audit(x, y, score, spec, true)
}

/// As [`two_sample_bp_bounds`] without the statistic band; sensitivity
/// tables are only built up to the budget where the bracket closes.
pub fn two_sample_bracket<F: Real>(
    x: &Sample<F>,
    y: &Sample<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
) -> Result<TestAudit<F>> {
    two_sample_audit(x, y, score, spec, false)
}

fn two_sample_audit<F: Real>(
    x: &Sample<F>,
    y: &Sample<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
    with_band: bool,
) -> Result<TestAudit<F>> {
    if spec.kind != TestKind::TwoSampleWald {
        return Err(Error::Contract(
            "two_sample_bp_bounds needs two_sample_wald".into(),
        ));
    }
    let data = TestData::Two(x.clone(), y.clone());
    needs_bounded(score, spec)?;
    let out = run_test(&data, score, spec)?;
    if let Some(d) = &out.degenerate {
        return Err(Error::DegenerateInformation(d.clone()));
    }
    let t0: F = lit(spec.theta0);
    let t = two_ctx(x.values(), y.values(), score);
    let nstar = data.n_norm();
    let cap = data.cap();
    let (mut tx, mut ty) = if with_band {
        (
            sens_table(&t.x, score, spec.envelope, cap)?,
            sens_table(&t.y, score, spec.envelope, cap)?,
        )
    } else {
        (Vec::new(), Vec::new())
    };

    let mut fx = SchemeFits::new(&t.x);
    let mut fy = SchemeFits::new(&t.y);
    let mut lower = None;
    let mut upper = None;
    let mut witness = None;
    for m in 1..=cap {
        if lower.is_none() {
            for (tab, ctx) in [(&mut tx, &t.x), (&mut ty, &t.y)] {
                while tab.len() <= m.min(ctx.d.len()) {
                    let k = tab.len();
                    tab.push(per_sample(ctx, score, spec.envelope, k)?);
                }
            }
            let v: Vec<StatSens<F>> = budget_splits(m, x.n(), y.n(), spec.budget_mode)
                .into_iter()
                .map(|(a, b)| compose(&t, &tx[a], &ty[b]))
                .collect();
            if lower_condition(&out, spec.sided, &max_sens(&v)) {
                lower = Some(m);
            }
        }
        if upper.is_none() {
            for up in [true, false] {
                let hit = scan_two_sample(&t, &mut fx, &mut fy, score, spec, m, up, |o| {
                    o.decision != out.decision
                });
                if let Some(pos) = hit {
                    let (a, b) = scheme_pair(&t, score, spec, up, pos);
                    upper = Some(m);
                    witness = Some(TestData::Two(Sample::new(a)?, Sample::new(b)?));
                    break;
                }
            }
        }
        if lower.is_some() && upper.is_some() {
            break;
        }
    }
    let band = if !with_band {
        Vec::new()
    } else {
        (0..=cap)
            .map(|m| {
                let b = band_at(
                    &t,
                    &mut fx,
                    &mut fy,
                    score,
                    spec,
                    &tx,
                    &ty,
                    m,
                    out.statistic,
                    t0,
                );
                BandRow {
                    m,
                    low: b.low,
                    high: b.high,
                }
            })
            .collect()
    };
    let bracket = BpBracket {
        lower,
        upper,
        n: nstar,
        cap,
    };
    Ok(TestAudit {
        reject_bp: out.decision.then_some(bracket),
        accept_bp: (!out.decision).then_some(bracket),
        exact: false,
        outcome: out,
        band,
        witness,
    })
}

/// Band on the contaminated standardized statistic at budget m.
#[derive(Debug, Clone, PartialEq)]
pub struct StatBand<F> {
    pub low: F,
    pub high: F,
    /// Pushing direction: `true` bounds the supremum, `false` the infimum.
    pub upward: bool,
    /// Contamination attaining the attained endpoint (`low` upward, `high` downward).
    pub witness: Option<(Vec<F>, Vec<F>)>,
}

fn upward<F: Real>(sided: Sided, stat: F) -> bool {
    match sided {
        Sided::OneSidedUpper => true,
        Sided::OneSidedLower => false,
        Sided::TwoSided => stat >= F::zero(),
    }
}

#[allow(clippy::too_many_arguments)]
fn band_at<F: Real>(
    t: &TwoSampleCtx<F>,
    fx: &mut SchemeFits<F>,
    fy: &mut SchemeFits<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
    tx: &[StatSens<F>],
    ty: &[StatSens<F>],
    m: usize,
    stat: F,
    t0: F,
) -> StatBand<F> {
    let up = upward(spec.sided, stat);
    if m == 0 {
        return StatBand {
            low: stat,
            high: stat,
            upward: up,
            witness: None,
        };
    }
    let c = t.x.theta - t.y.theta - t0;
    let se = (t.se_x * t.se_x + t.se_y * t.se_y).sqrt();
    // certified bound over splits
    let mut bound = if up { F::neg_infinity() } else { F::infinity() };
    for (a, b) in budget_splits(m, t.x.d.len(), t.y.d.len(), spec.budget_mode) {
        let s = compose(t, &tx[a], &ty[b]);
        let shrunk = se - s.s_dn;
        let grown = se + s.s_up;
        if up {
            let num = c + s.c_up;
            let v = if num >= F::zero() {
                if shrunk > F::zero() {
                    num / shrunk
                } else {
                    F::infinity()
                }
            } else {
                num / grown
            };
            bound = bound.max(v);
        } else {
            let num = c - s.c_dn;
            let v = if num <= F::zero() {
                if shrunk > F::zero() {
                    num / shrunk
                } else {
                    F::neg_infinity()
                }
            } else {
                num / grown
            };
            bound = bound.min(v);
        }
    }
    // attained extreme over explicit contaminations
    let mut best = stat;
    let mut best_pos = None;
    let mut pos = 0usize;
    scan_two_sample(t, fx, fy, score, spec, m, up, |o| {
        if !o.statistic.is_nan()
            && (if up {
                o.statistic > best
            } else {
                o.statistic < best
            })
        {
            best = o.statistic;
            best_pos = Some(pos);
        }
        pos += 1;
        false
    });
    let witness = best_pos.map(|target| {
        let mut k = 0usize;
        let hit = scan_two_sample(t, fx, fy, score, spec, m, up, |_| {
            k += 1;
            k - 1 == target
        });
        scheme_pair(t, score, spec, up, hit.expect("scan position exists"))
    });
    if up {
        StatBand {
            low: best,
            high: bound.max(best),
            upward: true,
            witness,
        }
    } else {
        StatBand {
            low: bound.min(best),
            high: best,
            upward: false,
            witness,
        }
    }
}

/// Bounds on the contaminated statistic (θ̂_x̃ − θ̂_ỹ − θ₀)/ŝe at budget m.
pub fn statistic_band<F: Real>(
    x: &Sample<F>,
    y: &Sample<F>,
    score: &ScoreFamily<F>,
    m: usize,
    spec: &TestSpec,
) -> Result<StatBand<F>> {
    let data = TestData::Two(x.clone(), y.clone());
    let mut spec = spec.clone();
    spec.kind = TestKind::TwoSampleWald;
    needs_bounded(score, &spec)?;
    if m > data.cap() {
        return Err(Error::Domain(format!(
            "m = {m} exceeds ceil(n*/2) = {}",
            data.cap()
        )));
    }
    let out = run_test(&data, score, &spec)?;
    let t = two_ctx(x.values(), y.values(), score);
    let tx = sens_table(&t.x, score, spec.envelope, m)?;
    let ty = sens_table(&t.y, score, spec.envelope, m)?;
    let mut fx = SchemeFits::new(&t.x);
    let mut fy = SchemeFits::new(&t.y);
    Ok(band_at(
        &t,
        &mut fx,
        &mut fy,
        score,
        &spec,
        &tx,
        &ty,
        m,
        out.statistic,
        lit(spec.theta0),
    ))
}

// ------------------------------------------------- two-stage ratio SE

/// Extreme changes of the Huber band count between radius `r_new` around
/// θ̃ ∈ [lo, hi] and radius `r_base` around θ̂: (min, max).
fn band_count_change<F: Real>(
    sorted: &[F],
    theta: F,
    lo: F,
    hi: F,
    r_new: F,
    r_base: F,
) -> (i64, i64) {
    let count = |t: F, r: F| {
        let a = sorted.partition_point(|&x| x < t - r);
        let b = sorted.partition_point(|&x| x <= t + r);
        b.saturating_sub(a) as i64
    };
    let base = count(theta, r_base);
    let mut pts = vec![lo, hi, theta];
    for &x in sorted {
        for b in [x - r_new, x + r_new] {
            if b >= lo && b <= hi {
                pts.push(b);
            }
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut probes = pts.clone();
    for w in pts.windows(2) {
        probes.push((w[0] + w[1]) / lit(2.0));
    }
    let mut qmin = i64::MAX;
    let mut qmax = i64::MIN;
    for p in probes {
        let c = count(p, r_new) - base;
        qmin = qmin.min(c);
        qmax = qmax.max(c);
    }
    (qmin, qmax)
}

/// Upper bounds on the one-sided sensitivities of the two-stage ratio
/// standard error sqrt(Σψ(r)²)/Σψ′(r), r = (x − θ̂)/σ̂.
///
/// These bounds are loose; residuals are ordered by |x − θ̂|.
pub fn two_stage_test_se_upper<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    chi: &ScaleScoreFamily<F>,
    m: usize,
) -> Result<SensitivityPoint<F>> {
    let n = sample.n();
    if m > n {
        return Err(Error::Domain(format!("m = {m} exceeds n = {n}")));
    }
    if !score.is_bounded() {
        return Err(Error::Domain(
            "two-stage SE bounds need a bounded score".into(),
        ));
    }
    let xs = sample.values();
    let (theta, sigma) = two_stage_fit(
        xs,
        score,
        chi,
        crate::estimators::Centering::Origin,
        RootSelect::Midpoint,
    );
    if !(sigma > F::zero() && sigma.is_finite()) {
        return Err(Error::DegenerateScale(
            "two-stage scale is degenerate".into(),
        ));
    }
    let se = two_stage_se_ratio(xs, score, theta, sigma)?;
    if m == 0 {
        return Ok(SensitivityPoint::zero(BoundKind::UpperBound));
    }
    let es_up = scale_eta(xs, chi, sigma, m, Side::Plus);
    let es_dn = scale_eta(xs, chi, sigma, m, Side::Minus);
    let (et_up, et_dn) = two_stage_upper_eta(xs, score, chi, theta, sigma, m);
    let s_lo = sigma - es_dn;
    let s_hi = sigma + es_up;
    if !(s_lo > F::zero()) || !et_up.is_finite() || !et_dn.is_finite() {
        return Ok(SensitivityPoint::new(
            m,
            F::infinity(),
            se,
            BoundKind::UpperBound,
        ));
    }
    let eta_s = es_up.max(es_dn);
    let eta_t = et_up.max(et_dn);
    let nf = lit::<F>(n as f64);
    let mf = lit::<F>(m as f64);
    let pmax = score.psi_max();
    let pmax2 = pmax * pmax;
    let abs_sum = xs.iter().fold(F::zero(), |a, &x| a + x.abs());
    let c_shift = lit::<F>(2.0)
        * pmax
        * score.deriv_at_zero()
        * (eta_s / (s_lo * sigma) * (abs_sum + nf * theta.abs()) + nf * eta_t / s_lo);

    let mut pi: Vec<usize> = (0..n).collect();
    pi.sort_by(|&a, &b| {
        (xs[a] - theta)
            .abs()
            .partial_cmp(&(xs[b] - theta).abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let psi2 = |i: usize| score.psi((xs[i] - theta) / sigma).powi(2);
    let num_up = pi[m..]
        .iter()
        .fold(mf * lit(5.0) * pmax2, |a, &i| a + psi2(i))
        + c_shift;
    let num_dn = (pi[..n - m]
        .iter()
        .fold(-mf * lit(4.0) * pmax2, |a, &i| a + psi2(i))
        - c_shift)
        .max(F::zero());
    let tail_d = pi[m..].iter().fold(F::zero(), |a, &i| {
        a + score.derivative((xs[i] - theta) / s_lo)
    });
    let head_d = pi[..n - m].iter().fold(F::zero(), |a, &i| {
        a + score.derivative((xs[i] - theta) / s_hi)
    });

    let (den_up, den_dn) = if score.kind() == ScoreKind::Huber {
        let d = score.delta();
        let srt = sample.sorted();
        let lo = theta - et_dn;
        let hi = theta + et_up;
        let (q_plus, _) = band_count_change(srt, theta, lo, hi, d * s_lo, d * s_hi);
        let (_, q_minus) = band_count_change(srt, theta, lo, hi, d * s_hi, d * s_lo);
        (
            tail_d + d * lit::<F>((q_plus - m as i64) as f64),
            mf * score.deriv_at_zero() + head_d + d * lit::<F>((q_minus + m as i64) as f64),
        )
    } else {
        let (sp, sm) = crate::sensitivity::shift_counts(sample.sorted(), theta, et_up, et_dn, m);
        let dl = score.shift_delta(eta_t / s_lo);
        (
            tail_d - lit::<F>(sp as f64) * dl,
            mf * score.deriv_at_zero() + head_d + lit::<F>(sm as f64) * dl,
        )
    };
    let up = if den_up > F::zero() {
        num_up.sqrt() / den_up - se
    } else {
        F::infinity()
    };
    let down = if den_dn > F::zero() {
        se - num_dn.sqrt() / den_dn
    } else {
        se
    };
    Ok(SensitivityPoint::new(
        m,
        up,
        down.min(se),
        BoundKind::UpperBound,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn huber() -> ScoreFamily<f64> {
        ScoreFamily::<f64>::huber(1.345)
    }

    fn s(v: &[f64]) -> Sample<f64> {
        Sample::<f64>::from_f64(v).unwrap()
    }

    #[test]
    fn z_quantiles() {
        let t = TestSpec::new(TestKind::Wald, 0.05);
        assert!((t.z() - 1.959963984540054).abs() < 1e-10);
        let t = t.with_sided(Sided::OneSidedUpper);
        assert!((t.z() - 1.6448536269514722).abs() < 1e-10);
        let t = TestSpec::new(TestKind::Wald, 0.001).with_sided(Sided::OneSidedUpper);
        assert!((t.z() - 3.090232306167813).abs() < 1e-10);
    }

    #[test]
    fn centered_data_accepts() {
        let x = s(&[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let o = run_test(
            &TestData::One(x),
            &huber(),
            &TestSpec::new(TestKind::Wald, 0.05),
        )
        .unwrap();
        assert!(!o.decision);
        assert!(o.lower < 0.0 && o.upper > 0.0);
    }

    #[test]
    fn zero_score_sum_accepts() {
        let x = s(&[-1.0, 1.0, -0.5, 0.5]);
        let o = run_test(
            &TestData::One(x),
            &huber(),
            &TestSpec::new(TestKind::Score, 0.05),
        )
        .unwrap();
        assert!(!o.decision);
        assert_eq!(o.center, 0.0);
    }

    #[test]
    fn identical_samples_accept() {
        let x = s(&[0.3, 1.2, -0.7, 2.0]);
        let o = run_test(
            &TestData::Two(x.clone(), x),
            &huber(),
            &TestSpec::new(TestKind::TwoSampleWald, 0.05),
        )
        .unwrap();
        assert!(!o.decision);
        assert_eq!(o.center, 0.0);
    }

    #[test]
    fn fixed_sigma_bracket_is_exact() {
        let x = s(&[1.9, 2.4, 2.2, 1.5, 2.8, 2.1, 1.7, 2.6]);
        let spec = TestSpec::new(TestKind::FixedSigmaWald, 0.05).with_sigma0(0.3);
        let a = test_bp_bounds(&x, &huber(), &spec).unwrap();
        assert!(a.decision());
        let b = a.reject_bp.unwrap();
        assert!(b.is_exact());
        let ctx = one_ctx(x.values(), &huber(), 0.0);
        let z = spec.z();
        let want = (1..=x.n()).find(|&m| {
            location_eta(&ctx.d_sorted, &huber(), ctx.theta, m, Side::Minus) >= ctx.theta - z * 0.3
        });
        assert_eq!(b.lower, want);
    }

    #[test]
    fn wald_bracket_is_ordered_and_witnessed() {
        let x = s(&[0.9, 1.4, 1.1, 0.5, 1.8, 1.2, 0.7, 1.6, 1.0, 1.3]);
        let spec = TestSpec::new(TestKind::Wald, 0.05);
        let a = test_bp_bounds(&x, &huber(), &spec).unwrap();
        assert!(a.decision());
        let b = a.bracket();
        assert!(b.is_valid());
        if let Some(TestData::One(w)) = &a.witness {
            let o = run_test(&TestData::One(w.clone()), &huber(), &spec).unwrap();
            assert!(!o.decision);
        }
    }

    #[test]
    fn restricted_score_is_exact() {
        let x = s(&[0.9, 1.4, 1.1, 0.5, 1.8, 1.2]);
        let a = score_test_bp(
            &x,
            &huber(),
            &TestSpec::new(TestKind::RestrictedScore, 0.05),
        )
        .unwrap();
        assert!(a.exact && a.bracket().is_exact());
    }

    #[test]
    fn band_at_zero_is_the_statistic() {
        let x = s(&[0.3, 1.2, -0.7, 2.0, 0.1]);
        let y = s(&[-0.3, 0.2, -1.7, 0.4]);
        let spec = TestSpec::new(TestKind::TwoSampleWald, 0.05);
        let o = run_test(&TestData::Two(x.clone(), y.clone()), &huber(), &spec).unwrap();
        let b = statistic_band(&x, &y, &huber(), 0, &spec).unwrap();
        assert_eq!((b.low, b.high), (o.statistic, o.statistic));
        let b1 = statistic_band(&x, &y, &huber(), 1, &spec).unwrap();
        assert!(b1.low <= b1.high);
    }

    #[test]
    fn two_stage_se_bound_monotone_in_m() {
        let x = s(&[0.3, -1.2, 0.8, 2.5, -0.4, 1.1, -2.2, 0.05]);
        let chi = ScaleScoreFamily::normal_consistent(huber()).unwrap();
        let mut prev = 0.0;
        for m in 0..=3 {
            let p = two_stage_test_se_upper(&x, &huber(), &chi, m).unwrap();
            assert!(p.eta_plus >= prev);
            prev = p.eta_plus;
        }
    }
}
