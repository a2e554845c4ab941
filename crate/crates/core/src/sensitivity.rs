//! m-sensitivities and threshold breakdown points: exact formulas for
//! location and scale M-estimators, weighted versions, and bounds for
//! two-stage estimators and plug-in standard errors.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::estimators::{
    location_root, median_sorted, plugin_se_raw, psi_sum, two_stage_location, two_stage_scale,
    Centering, Sample, WeightedSample,
};
use crate::root::{last_true, RootSelect};
use crate::score::{ScaleScoreFamily, ScoreFamily, ScoreKind};
use crate::{lit, tol, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
    TwoSided,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
            Side::TwoSided => "both",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "+" | "up" => Ok(Side::Plus),
            "minus" | "-" | "down" => Ok(Side::Minus),
            "both" | "two_sided" | "two-sided" => Ok(Side::TwoSided),
            other => Err(Error::Domain(format!("unknown side '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Exact,
    LowerBound,
    UpperBound,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Exact => "exact",
            BoundKind::LowerBound => "lower",
            BoundKind::UpperBound => "upper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityPoint<F> {
    pub m: usize,
    pub eta_plus: F,
    pub eta_minus: F,
    pub eta_two_sided: F,
    pub kind: BoundKind,
    /// Some side is infinite.
    pub breakdown: bool,
}

impl<F: Real> SensitivityPoint<F> {
    pub fn new(m: usize, eta_plus: F, eta_minus: F, kind: BoundKind) -> Self {
        let eta_plus = eta_plus.max(F::zero());
        let eta_minus = eta_minus.max(F::zero());
        Self {
            m,
            eta_plus,
            eta_minus,
            eta_two_sided: eta_plus.max(eta_minus),
            kind,
            breakdown: eta_plus.is_infinite() || eta_minus.is_infinite(),
        }
    }

    pub fn zero(kind: BoundKind) -> Self {
        Self::new(0, F::zero(), F::zero(), kind)
    }

    pub fn get(&self, side: Side) -> F {
        match side {
            Side::Plus => self.eta_plus,
            Side::Minus => self.eta_minus,
            Side::TwoSided => self.eta_two_sided,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakdownResult<F> {
    pub eta: F,
    pub side: Side,
    pub n: usize,
    /// Smallest qualifying number of replaced points, if any within range.
    pub m: Option<usize>,
    pub kind: BoundKind,
}

impl<F: Real> BreakdownResult<F> {
    /// m/n, or +inf when no admissible m qualifies.
    pub fn bp(&self) -> F {
        match self.m {
            Some(m) => lit::<F>(m as f64) / lit(self.n as f64),
            None => F::infinity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCurve<F> {
    pub n: usize,
    pub label: String,
    pub points: Vec<SensitivityPoint<F>>,
}

fn check_m(m: usize, n: usize) -> Result<()> {
    if m > n {
        return Err(Error::Domain(format!("m = {m} exceeds n = {n}")));
    }
    Ok(())
}

fn check_eta<F: Real>(eta: F) -> Result<()> {
    if !(eta > F::zero()) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    Ok(())
}

fn sorted_copy<F: Real>(xs: &[F]) -> Vec<F> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn finite_spread<F: Real>(sorted: &[F]) -> F {
    let f: Vec<F> = sorted.iter().copied().filter(|v| v.is_finite()).collect();
    if f.is_empty() {
        F::one()
    } else {
        *f.last().unwrap() - f[0] + F::one()
    }
}

fn reflect<F: Real>(sorted: &[F]) -> Vec<F> {
    sorted.iter().rev().map(|&v| -v).collect()
}

// ---------------------------------------------------------------- location

/// Plus-side trimmed score Σ_{i>m} ψ(x₍ᵢ₎ − t) + mψ(∞) at absolute position t.
fn plus_condition<F: Real>(sorted: &[F], score: &ScoreFamily<F>, m: usize, t: F) -> F {
    if m > 0 && !score.is_bounded() {
        return F::infinity();
    }
    psi_sum(sorted[m..].iter().map(|&x| score.psi(x - t)), score, m)
}

/// Value of the plus condition as t → +∞.
fn plus_condition_at_infinity<F: Real>(sorted: &[F], score: &ScoreFamily<F>, m: usize) -> F {
    let pinf = score.psi_pos_inf();
    let ninf = score.psi_neg_inf();
    let tail = sorted[m..].iter().fold(F::zero(), |a, &x| {
        a + if x == F::infinity() { pinf } else { ninf }
    });
    if m == 0 {
        tail
    } else {
        tail + lit::<F>(m as f64) * pinf
    }
}

/// Largest position t with Σ_{i>m} ψ(x₍ᵢ₎ − t) + mψ(∞) ≥ 0.
fn plus_extreme_position<F: Real>(sorted: &[F], score: &ScoreFamily<F>, m: usize, start: F) -> F {
    if m > 0 && !score.is_bounded() {
        return F::infinity();
    }
    let lim = plus_condition_at_infinity(sorted, score, m);
    if lim.is_nan() || lim >= F::zero() {
        return F::infinity();
    }
    last_true(
        |t| plus_condition(sorted, score, m, t) >= F::zero(),
        start,
        finite_spread(sorted),
    )
}

/// One-sided location m-sensitivity on sorted data.
pub fn location_eta<F: Real>(
    sorted: &[F],
    score: &ScoreFamily<F>,
    theta: F,
    m: usize,
    side: Side,
) -> F {
    if m == 0 {
        return F::zero();
    }
    match side {
        Side::Plus => (plus_extreme_position(sorted, score, m, theta) - theta).max(F::zero()),
        Side::Minus => {
            let r = reflect(sorted);
            (plus_extreme_position(&r, score, m, -theta) + theta).max(F::zero())
        }
        Side::TwoSided => location_eta(sorted, score, theta, m, Side::Plus).max(location_eta(
            sorted,
            score,
            theta,
            m,
            Side::Minus,
        )),
    }
}

pub fn location_sensitivity<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    theta_hat: F,
    m: usize,
) -> Result<SensitivityPoint<F>> {
    check_m(m, sample.n())?;
    let s = sample.sorted();
    Ok(SensitivityPoint::new(
        m,
        location_eta(s, score, theta_hat, m, Side::Plus),
        location_eta(s, score, theta_hat, m, Side::Minus),
        BoundKind::Exact,
    ))
}

fn location_breaks<F: Real>(
    sorted: &[F],
    score: &ScoreFamily<F>,
    theta: F,
    eta: F,
    m: usize,
    side: Side,
) -> bool {
    match side {
        Side::Plus => {
            (m > 0 && !score.is_bounded())
                || plus_condition(sorted, score, m, theta + eta) >= F::zero()
        }
        Side::Minus => {
            let r = reflect(sorted);
            (m > 0 && !score.is_bounded())
                || plus_condition(&r, score, m, -theta + eta) >= F::zero()
        }
        Side::TwoSided => {
            location_breaks(sorted, score, theta, eta, m, Side::Plus)
                || location_breaks(sorted, score, theta, eta, m, Side::Minus)
        }
    }
}

pub fn location_bp<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    theta_hat: F,
    eta: F,
    side: Side,
) -> Result<BreakdownResult<F>> {
    check_eta(eta)?;
    let n = sample.n();
    let m = (1..=n).find(|&m| location_breaks(sample.sorted(), score, theta_hat, eta, m, side));
    Ok(BreakdownResult {
        eta,
        side,
        n,
        m,
        kind: BoundKind::Exact,
    })
}

// ------------------------------------------------------------------- scale

fn chi_ratio<F: Real>(chi: &ScaleScoreFamily<F>, a: F, log_sigma: F) -> F {
    if a == F::zero() {
        chi.chi_at_zero()
    } else if a.is_infinite() {
        chi.chi_pos_inf()
    } else {
        chi.chi(a * (-log_sigma).exp())
    }
}

fn abs_sorted<F: Real>(xs: &[F]) -> Vec<F> {
    sorted_copy(&xs.iter().map(|x| x.abs()).collect::<Vec<_>>())
}

fn log_center<F: Real>(a: &[F]) -> F {
    let nz: Vec<F> = a
        .iter()
        .copied()
        .filter(|v| *v > F::zero() && v.is_finite())
        .collect();
    if nz.is_empty() {
        F::zero()
    } else {
        median_sorted(&nz).ln()
    }
}

/// Σ_{i>m} χ(a₍ᵢ₎/σ) + mχ(∞), with σ = exp(s).
fn scale_plus_condition<F: Real>(a: &[F], chi: &ScaleScoreFamily<F>, m: usize, s: F) -> F {
    a[m..]
        .iter()
        .fold(F::zero(), |acc, &v| acc + chi_ratio(chi, v, s))
        + lit::<F>(m as f64) * chi.chi_pos_inf()
}

/// Σ_{i≤n−m} χ(a₍ᵢ₎/σ) + mχ(0), with σ = exp(s).
fn scale_minus_condition<F: Real>(a: &[F], chi: &ScaleScoreFamily<F>, m: usize, s: F) -> F {
    let n = a.len();
    a[..n - m]
        .iter()
        .fold(F::zero(), |acc, &v| acc + chi_ratio(chi, v, s))
        + lit::<F>(m as f64) * chi.chi_at_zero()
}

fn limit_sum<F: Real>(a: &[F], chi: &ScaleScoreFamily<F>, small_sigma: bool) -> F {
    a.iter().fold(F::zero(), |acc, &v| {
        acc + if v == F::zero() {
            chi.chi_at_zero()
        } else if v.is_infinite() || small_sigma {
            chi.chi_pos_inf()
        } else {
            chi.chi_at_zero()
        }
    })
}

/// Largest scale reachable by replacing m points (plus) or smallest (minus).
fn scale_extreme<F: Real>(a: &[F], chi: &ScaleScoreFamily<F>, m: usize, side: Side) -> F {
    let n = a.len();
    let c = log_center(a);
    match side {
        Side::Plus => {
            let hi = limit_sum(&a[m..], chi, false) + lit::<F>(m as f64) * chi.chi_pos_inf();
            if hi >= F::zero() {
                return F::infinity();
            }
            let lo = limit_sum(&a[m..], chi, true) + lit::<F>(m as f64) * chi.chi_pos_inf();
            if lo < F::zero() {
                return F::zero();
            }
            last_true(
                |s| scale_plus_condition(a, chi, m, s) >= F::zero(),
                c,
                F::one(),
            )
            .exp()
        }
        Side::Minus => {
            let lo = limit_sum(&a[..n - m], chi, true) + lit::<F>(m as f64) * chi.chi_at_zero();
            if lo <= F::zero() {
                return F::zero();
            }
            let hi = limit_sum(&a[..n - m], chi, false) + lit::<F>(m as f64) * chi.chi_at_zero();
            if hi > F::zero() {
                return F::infinity();
            }
            last_true(
                |s| scale_minus_condition(a, chi, m, s) > F::zero(),
                c,
                F::one(),
            )
            .exp()
        }
        Side::TwoSided => unreachable!("one side at a time"),
    }
}

/// One-sided scale m-sensitivity; `xs` need not be sorted.
pub fn scale_eta<F: Real>(
    xs: &[F],
    chi: &ScaleScoreFamily<F>,
    sigma_hat: F,
    m: usize,
    side: Side,
) -> F {
    if m == 0 {
        return F::zero();
    }
    let a = abs_sorted(xs);
    match side {
        Side::Plus => (scale_extreme(&a, chi, m, Side::Plus) - sigma_hat).max(F::zero()),
        Side::Minus => (sigma_hat - scale_extreme(&a, chi, m, Side::Minus))
            .max(F::zero())
            .min(sigma_hat),
        Side::TwoSided => scale_eta(xs, chi, sigma_hat, m, Side::Plus).max(scale_eta(
            xs,
            chi,
            sigma_hat,
            m,
            Side::Minus,
        )),
    }
}

pub fn scale_sensitivity<F: Real>(
    sample: &Sample<F>,
    chi: &ScaleScoreFamily<F>,
    sigma_hat: F,
    m: usize,
) -> Result<SensitivityPoint<F>> {
    check_m(m, sample.n())?;
    if !(sigma_hat > F::zero()) {
        return Err(Error::Domain("scale estimate must be positive".into()));
    }
    let x = sample.values();
    Ok(SensitivityPoint::new(
        m,
        scale_eta(x, chi, sigma_hat, m, Side::Plus),
        scale_eta(x, chi, sigma_hat, m, Side::Minus),
        BoundKind::Exact,
    ))
}

fn scale_breaks<F: Real>(
    a: &[F],
    chi: &ScaleScoreFamily<F>,
    sigma: F,
    eta: F,
    m: usize,
    side: Side,
) -> bool {
    let n = a.len();
    match side {
        Side::Plus => scale_plus_condition(a, chi, m, (sigma + eta).ln()) >= F::zero(),
        Side::Minus => {
            if eta >= sigma {
                limit_sum(&a[..n - m], chi, true) + lit::<F>(m as f64) * chi.chi_at_zero()
                    <= F::zero()
            } else {
                scale_minus_condition(a, chi, m, (sigma - eta).ln()) <= F::zero()
            }
        }
        Side::TwoSided => {
            scale_breaks(a, chi, sigma, eta, m, Side::Plus)
                || scale_breaks(a, chi, sigma, eta, m, Side::Minus)
        }
    }
}

pub fn scale_bp<F: Real>(
    sample: &Sample<F>,
    chi: &ScaleScoreFamily<F>,
    sigma_hat: F,
    eta: F,
    side: Side,
) -> Result<BreakdownResult<F>> {
    check_eta(eta)?;
    let a = abs_sorted(sample.values());
    let n = a.len();
    let m = (1..=n).find(|&m| scale_breaks(&a, chi, sigma_hat, eta, m, side));
    Ok(BreakdownResult {
        eta,
        side,
        n,
        m,
        kind: BoundKind::Exact,
    })
}

// ---------------------------------------------------------------- weighted

/// Weighted plus-side condition with boundary mass term at position t.
fn weighted_plus_condition<F: Real>(
    x: &[F],
    w: &[F],
    cum: &[F],
    score: &ScoreFamily<F>,
    frac: F,
    t: F,
) -> F {
    let tolw = lit::<F>(tol::WEIGHTS);
    let n = x.len();
    let im = (0..n).find(|&i| cum[i] >= frac - tolw).unwrap_or(n - 1);
    let partial = (cum[im] - frac).max(F::zero());
    let mut s = partial * score.psi(x[im] - t);
    for i in im + 1..n {
        s = s + w[i] * score.psi(x[i] - t);
    }
    s + frac * score.psi_pos_inf()
}

fn weighted_plus_at_infinity<F: Real>(
    x: &[F],
    w: &[F],
    cum: &[F],
    score: &ScoreFamily<F>,
    frac: F,
) -> F {
    let tolw = lit::<F>(tol::WEIGHTS);
    let n = x.len();
    let im = (0..n).find(|&i| cum[i] >= frac - tolw).unwrap_or(n - 1);
    let lim = |v: F| {
        if v == F::infinity() {
            score.psi_pos_inf()
        } else {
            score.psi_neg_inf()
        }
    };
    let partial = (cum[im] - frac).max(F::zero());
    let mut s = partial * lim(x[im]);
    for i in im + 1..n {
        s = s + w[i] * lim(x[i]);
    }
    s + frac * score.psi_pos_inf()
}

struct Oriented<F> {
    x: Vec<F>,
    w: Vec<F>,
    cum: Vec<F>,
}

fn orient<F: Real>(ws: &WeightedSample<F>, side: Side) -> Oriented<F> {
    match side {
        Side::Minus => {
            let x: Vec<F> = ws.sorted_values().iter().rev().map(|&v| -v).collect();
            let w: Vec<F> = ws.weights().iter().rev().copied().collect();
            let mut cum = Vec::with_capacity(w.len());
            // reversed prefix sums 1 − W_{n−k}, kept exact at the ends
            let c = ws.cum_weights();
            let n = w.len();
            for k in 0..n {
                cum.push(if k + 1 == n {
                    F::one()
                } else {
                    F::one() - c[n - k - 2]
                });
            }
            Oriented { x, w, cum }
        }
        _ => Oriented {
            x: ws.sorted_values().to_vec(),
            w: ws.weights().to_vec(),
            cum: ws.cum_weights().to_vec(),
        },
    }
}

fn weighted_eta_oriented<F: Real>(o: &Oriented<F>, score: &ScoreFamily<F>, theta: F, frac: F) -> F {
    if !score.is_bounded() {
        return F::infinity();
    }
    let lim = weighted_plus_at_infinity(&o.x, &o.w, &o.cum, score, frac);
    if lim >= F::zero() {
        return F::infinity();
    }
    let t = last_true(
        |t| weighted_plus_condition(&o.x, &o.w, &o.cum, score, frac, t) >= F::zero(),
        theta,
        finite_spread(&o.x),
    );
    (t - theta).max(F::zero())
}

pub fn weighted_location_eta<F: Real>(
    ws: &WeightedSample<F>,
    score: &ScoreFamily<F>,
    theta_b: F,
    m: usize,
    side: Side,
) -> F {
    if m == 0 {
        return F::zero();
    }
    if ws.is_uniform() {
        return location_eta(ws.sorted_values(), score, theta_b, m, side);
    }
    let frac = lit::<F>(m as f64) / lit(ws.n() as f64);
    match side {
        Side::Plus => weighted_eta_oriented(&orient(ws, Side::Plus), score, theta_b, frac),
        Side::Minus => weighted_eta_oriented(&orient(ws, Side::Minus), score, -theta_b, frac),
        Side::TwoSided => weighted_location_eta(ws, score, theta_b, m, Side::Plus)
            .max(weighted_location_eta(ws, score, theta_b, m, Side::Minus)),
    }
}

pub fn weighted_location_sensitivity<F: Real>(
    ws: &WeightedSample<F>,
    score: &ScoreFamily<F>,
    theta_b: F,
    m: usize,
) -> Result<SensitivityPoint<F>> {
    check_m(m, ws.n())?;
    Ok(SensitivityPoint::new(
        m,
        weighted_location_eta(ws, score, theta_b, m, Side::Plus),
        weighted_location_eta(ws, score, theta_b, m, Side::Minus),
        BoundKind::Exact,
    ))
}

fn weighted_breaks<F: Real>(
    ws: &WeightedSample<F>,
    score: &ScoreFamily<F>,
    theta: F,
    eta: F,
    m: usize,
    side: Side,
) -> bool {
    if ws.is_uniform() {
        return location_breaks(ws.sorted_values(), score, theta, eta, m, side);
    }
    if !score.is_bounded() {
        return true;
    }
    let frac = lit::<F>(m as f64) / lit(ws.n() as f64);
    match side {
        Side::Plus => {
            let o = orient(ws, Side::Plus);
            weighted_plus_condition(&o.x, &o.w, &o.cum, score, frac, theta + eta) >= F::zero()
        }
        Side::Minus => {
            let o = orient(ws, Side::Minus);
            weighted_plus_condition(&o.x, &o.w, &o.cum, score, frac, -theta + eta) >= F::zero()
        }
        Side::TwoSided => {
            weighted_breaks(ws, score, theta, eta, m, Side::Plus)
                || weighted_breaks(ws, score, theta, eta, m, Side::Minus)
        }
    }
}

/// BP on the grid m = 1, …, ⌈n/2⌉.
pub fn weighted_location_bp<F: Real>(
    ws: &WeightedSample<F>,
    score: &ScoreFamily<F>,
    theta_b: F,
    eta: F,
    side: Side,
) -> Result<BreakdownResult<F>> {
    check_eta(eta)?;
    let n = ws.n();
    let m = (1..=n.div_ceil(2)).find(|&m| weighted_breaks(ws, score, theta_b, eta, m, side));
    Ok(BreakdownResult {
        eta,
        side,
        n,
        m,
        kind: BoundKind::Exact,
    })
}

// ------------------------------------------------------ contamination maps

/// Sends the m smallest order statistics to c.
pub fn contaminate_left<F: Real>(sorted: &[F], m: usize, c: F) -> Vec<F> {
    let mut v = sorted.to_vec();
    for x in v.iter_mut().take(m) {
        *x = c;
    }
    v
}

/// Sends the m largest order statistics to c.
pub fn contaminate_right<F: Real>(sorted: &[F], m: usize, c: F) -> Vec<F> {
    let n = sorted.len();
    let mut v = sorted.to_vec();
    for x in v.iter_mut().skip(n - m) {
        *x = c;
    }
    v
}

/// Contamination target configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    /// Add the shifted targets θ̂ ± (η + aδ), a ∈ 𝒜.
    pub a_grid: bool,
    pub centering: Centering,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            a_grid: false,
            centering: Centering::Origin,
        }
    }
}

/// 𝒜 = {a : ψ(aδ) ∈ {−0.1δ, 0, 0.1δ, …, δ}}; levels beyond sup ψ map to ∞.
pub fn a_grid<F: Real>(score: &ScoreFamily<F>) -> Vec<F> {
    let d = score.delta();
    (-1..=10)
        .map(|k| {
            let target = d * lit::<F>(k as f64 / 10.0);
            if target >= score.psi_pos_inf() {
                return F::infinity();
            }
            if target <= score.psi_neg_inf() {
                return F::neg_infinity();
            }
            let t = last_true(|t| score.psi(t) < target, F::zero(), d);
            let t = if score.psi(t) < target {
                // smallest t with ψ(t) ≥ target is the next float up
                t + (t.abs() + F::one()) * F::epsilon()
            } else {
                t
            };
            t / d
        })
        .collect()
}

/// Targets for left contamination: {∞, x₍ₙ₎} and optionally the 𝒜 grid.
pub fn left_targets<F: Real>(
    sorted: &[F],
    score: &ScoreFamily<F>,
    theta: F,
    eta_plus: F,
    cfg: &SchemeConfig,
) -> Vec<F> {
    let mut t = vec![F::infinity(), *sorted.last().unwrap()];
    if cfg.a_grid && eta_plus.is_finite() {
        for a in a_grid(score) {
            t.push(theta + eta_plus + a * score.delta());
        }
    }
    t
}

/// Targets for right contamination: {−∞, x₍₁₎} and optionally the 𝒜 grid.
pub fn right_targets<F: Real>(
    sorted: &[F],
    score: &ScoreFamily<F>,
    theta: F,
    eta_plus: F,
    cfg: &SchemeConfig,
) -> Vec<F> {
    let mut t = vec![F::neg_infinity(), sorted[0]];
    if cfg.a_grid && eta_plus.is_finite() {
        for a in a_grid(score) {
            t.push(theta - eta_plus - a * score.delta());
        }
    }
    t
}

// --------------------------------------------------------------- two-stage

/// Two-stage (θ, σ) for possibly contaminated data.
///
/// A diverging scale sends θ to the side holding more infinite points;
/// a balanced divergence yields NaN.
pub fn two_stage_fit<F: Real>(
    xs: &[F],
    score: &ScoreFamily<F>,
    chi: &ScaleScoreFamily<F>,
    centering: Centering,
    select: RootSelect,
) -> (F, F) {
    let sigma = two_stage_scale(xs, chi, centering);
    if sigma.is_nan() {
        return (median_sorted(&sorted_copy(xs)), sigma);
    }
    if sigma.is_infinite() {
        let up = xs.iter().filter(|v| **v == F::infinity()).count();
        let down = xs.iter().filter(|v| **v == F::neg_infinity()).count();
        let th = match up.cmp(&down) {
            std::cmp::Ordering::Greater => F::infinity(),
            std::cmp::Ordering::Less => F::neg_infinity(),
            std::cmp::Ordering::Equal => F::nan(),
        };
        return (th, sigma);
    }
    (two_stage_location(xs, score, sigma, select), sigma)
}

fn displacement<F: Real>(new: F, old: F, side: Side) -> F {
    if new.is_nan() {
        return F::zero();
    }
    match side {
        Side::Plus => new - old,
        _ => old - new,
    }
}

/// Displacements of the two-stage location under the explicit schemes.
pub fn two_stage_lower_eta<F: Real>(
    sorted: &[F],
    score: &ScoreFamily<F>,
    chi: &ScaleScoreFamily<F>,
    theta_hat: F,
    m: usize,
    cfg: &SchemeConfig,
) -> (F, F) {
    if m == 0 {
        return (F::zero(), F::zero());
    }
    let eta_loc = location_eta(sorted, score, theta_hat, m, Side::Plus);
    let mut up = F::zero();
    for c in left_targets(sorted, score, theta_hat, eta_loc, cfg) {
        let x = contaminate_left(sorted, m, c);
        let (t, _) = two_stage_fit(&x, score, chi, cfg.centering, RootSelect::Largest);
        up = up.max(displacement(t, theta_hat, Side::Plus));
    }
    let mut down = F::zero();
    for c in right_targets(sorted, score, theta_hat, eta_loc, cfg) {
        let x = contaminate_right(sorted, m, c);
        let (t, _) = two_stage_fit(&x, score, chi, cfg.centering, RootSelect::Smallest);
        down = down.max(displacement(t, theta_hat, Side::Minus));
    }
    (up, down)
}

/// Sign-split upper bounds (η̄₊, η̄₋) for the origin-centered two-stage
/// location.
pub fn two_stage_upper_eta<F: Real>(
    xs: &[F],
    score: &ScoreFamily<F>,
    chi: &ScaleScoreFamily<F>,
    theta_hat: F,
    sigma_hat: F,
    m: usize,
) -> (F, F) {
    if m == 0 {
        return (F::zero(), F::zero());
    }
    let lo = (sigma_hat - scale_eta(xs, chi, sigma_hat, m, Side::Minus)).max(F::zero());
    let hi = sigma_hat + scale_eta(xs, chi, sigma_hat, m, Side::Plus);
    if !(lo > F::zero()) || hi.is_infinite() {
        return (F::infinity(), F::infinity());
    }
    let r: Vec<F> = xs
        .iter()
        .map(|&x| if x >= F::zero() { x / lo } else { x / hi })
        .collect();
    let rp: Vec<F> = xs
        .iter()
        .map(|&x| if x >= F::zero() { x / hi } else { x / lo })
        .collect();
    let r = sorted_copy(&r);
    let rp = sorted_copy(&rp);

    let t_r = location_root(&r, score, RootSelect::Midpoint);
    let a_plus = t_r + location_eta(&r, score, t_r, m, Side::Plus);
    let s_plus = if a_plus <= F::zero() { lo } else { hi };
    let up = s_plus * a_plus - theta_hat;

    let t_rp = location_root(&rp, score, RootSelect::Midpoint);
    let a_minus = t_rp - location_eta(&rp, score, t_rp, m, Side::Minus);
    let s_minus = if a_minus >= F::zero() { lo } else { hi };
    let down = theta_hat - s_minus * a_minus;
    (up.max(F::zero()), down.max(F::zero()))
}

/// (lower, upper) bounds on the two-stage location m-sensitivity.
pub fn two_stage_sensitivity_bounds<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    chi: &ScaleScoreFamily<F>,
    m: usize,
    cfg: &SchemeConfig,
) -> Result<(SensitivityPoint<F>, SensitivityPoint<F>)> {
    check_m(m, sample.n())?;
    if !score.is_bounded() {
        return Err(Error::Domain(
            "two-stage bounds need a bounded score".into(),
        ));
    }
    if cfg.centering != Centering::Origin {
        return Err(Error::Contract(
            "sign-split upper bound requires origin-centered scale".into(),
        ));
    }
    let (theta, sigma) = two_stage_fit(
        sample.values(),
        score,
        chi,
        cfg.centering,
        RootSelect::Midpoint,
    );
    if !(sigma > F::zero()) || !sigma.is_finite() {
        return Err(Error::DegenerateScale(
            "two-stage scale is degenerate".into(),
        ));
    }
    let (lu, ld) = two_stage_lower_eta(sample.sorted(), score, chi, theta, m, cfg);
    let (uu, ud) = two_stage_upper_eta(sample.values(), score, chi, theta, sigma, m);
    Ok((
        SensitivityPoint::new(m, lu, ld, BoundKind::LowerBound),
        SensitivityPoint::new(m, uu.max(lu), ud.max(ld), BoundKind::UpperBound),
    ))
}

fn bp_from_curve<F: Real>(
    n: usize,
    eta: F,
    side: Side,
    kind: BoundKind,
    mut eta_at: impl FnMut(usize) -> F,
) -> BreakdownResult<F> {
    let m = (1..=n).find(|&m| eta_at(m) >= eta);
    BreakdownResult {
        eta,
        side,
        n,
        m,
        kind,
    }
}

/// (lower, upper) bounds on the two-stage threshold breakdown point.
pub fn two_stage_bp_bounds<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    chi: &ScaleScoreFamily<F>,
    eta: F,
    side: Side,
    cfg: &SchemeConfig,
) -> Result<(BreakdownResult<F>, BreakdownResult<F>)> {
    check_eta(eta)?;
    let n = sample.n();
    let pts: Vec<(SensitivityPoint<F>, SensitivityPoint<F>)> = (1..=n)
        .map(|m| two_stage_sensitivity_bounds(sample, score, chi, m, cfg))
        .collect::<Result<_>>()?;
    let lower = bp_from_curve(n, eta, side, BoundKind::LowerBound, |m| {
        pts[m - 1].1.get(side)
    });
    let upper = bp_from_curve(n, eta, side, BoundKind::UpperBound, |m| {
        pts[m - 1].0.get(side)
    });
    Ok((lower, upper))
}

// -------------------------------------------------------- standard errors

/// Indices ordered by |x − c|, stable on ties.
fn order_by_distance<F: Real>(xs: &[F], c: F) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| {
        (xs[a] - c)
            .abs()
            .partial_cmp(&(xs[b] - c).abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    idx
}

/// Exact one-sided sensitivities of the restricted standard error at θ₀.
pub fn se_restricted_eta<F: Real>(
    xs: &[F],
    score: &ScoreFamily<F>,
    theta0: F,
    m: usize,
) -> Result<(F, F)> {
    let se = plugin_se_raw(xs, score, theta0)?;
    if m == 0 {
        return Ok((F::zero(), F::zero()));
    }
    let n = xs.len();
    let pi = order_by_distance(xs, theta0);
    let pmax2 = score.psi_max() * score.psi_max();
    let mf = lit::<F>(m as f64);
    let psi2 = |i: usize| score.psi(xs[i] - theta0).powi(2);
    let dpsi = |i: usize| score.derivative(xs[i] - theta0);

    let num_up = pi[m..].iter().fold(mf * pmax2, |a, &i| a + psi2(i));
    let den_up = pi[m..].iter().fold(F::zero(), |a, &i| a + dpsi(i));
    let up = if den_up > F::zero() {
        num_up.sqrt() / den_up - se
    } else {
        F::infinity()
    };

    let num_dn = pi[..n - m].iter().fold(F::zero(), |a, &i| a + psi2(i));
    let den_dn = pi[..n - m]
        .iter()
        .fold(mf * score.deriv_at_zero(), |a, &i| a + dpsi(i));
    let down = if den_dn > F::zero() {
        se - num_dn.sqrt() / den_dn
    } else {
        se
    };
    Ok((up, down))
}

pub fn se_restricted_sensitivity<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    theta0: F,
    m: usize,
) -> Result<SensitivityPoint<F>> {
    check_m(m, sample.n())?;
    let (u, d) = se_restricted_eta(sample.values(), score, theta0, m)?;
    Ok(SensitivityPoint::new(m, u, d, BoundKind::Exact))
}

/// S_{m+} and S_{m−} counting terms.
pub fn shift_counts<F: Real>(
    sorted: &[F],
    theta: F,
    eta_plus: F,
    eta_minus: F,
    m: usize,
) -> (usize, usize) {
    let n = sorted.len();
    let two = lit::<F>(2.0);
    let a = sorted[..n - m]
        .iter()
        .filter(|&&x| theta + eta_plus >= two * x - theta)
        .count();
    let b = sorted[m..]
        .iter()
        .filter(|&&x| theta - eta_minus <= two * x - theta)
        .count();
    let s_plus = a.max(b);
    let ge = sorted.iter().filter(|&&x| x >= theta).count();
    let le = sorted.iter().filter(|&&x| x <= theta).count();
    let s_minus = ge.max(le).saturating_sub(m);
    (s_plus, s_minus)
}

/// Extreme changes (q₊ = min, q₋ = max) of the Huber band count over
/// θ̃ ∈ [θ̂ − η₋, θ̂ + η₊].
pub fn huber_band_counts<F: Real>(
    xs: &[F],
    delta: F,
    theta: F,
    eta_plus: F,
    eta_minus: F,
) -> (i64, i64) {
    let sorted = sorted_copy(xs);
    let count = |t: F| {
        let a = sorted.partition_point(|&x| x < t - delta);
        let b = sorted.partition_point(|&x| x <= t + delta);
        b.saturating_sub(a) as i64
    };
    let base = count(theta);
    let lo = theta - eta_minus;
    let hi = theta + eta_plus;
    let mut pts: Vec<F> = Vec::new();
    for &x in xs {
        for b in [x - delta, x + delta] {
            if b >= lo && b <= hi && b.is_finite() {
                pts.push(b);
            }
        }
    }
    for e in [lo, hi] {
        if e.is_finite() {
            pts.push(e);
        }
    }
    let finite: Vec<F> = xs.iter().copied().filter(|v| v.is_finite()).collect();
    let far = if finite.is_empty() {
        F::zero()
    } else {
        finite.iter().fold(F::zero(), |a, v| a.max(v.abs())) + delta * lit(4.0) + theta.abs()
    };
    if lo.is_infinite() {
        pts.push(-far);
    }
    if hi.is_infinite() {
        pts.push(far);
    }
    pts.push(theta);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut probes = pts.clone();
    for w in pts.windows(2) {
        probes.push((w[0] + w[1]) / lit(2.0));
    }
    let mut qmin = 0i64;
    let mut qmax = 0i64;
    for t in probes {
        let c = count(t) - base;
        qmin = qmin.min(c);
        qmax = qmax.max(c);
    }
    (qmin, qmax)
}

fn top_sum<F: Real>(h: &mut [F], k: usize, largest: bool) -> F {
    h.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if largest {
        h[h.len() - k..].iter().fold(F::zero(), |a, &b| a + b)
    } else {
        h[..k].iter().fold(F::zero(), |a, &b| a + b)
    }
}

/// (N̄_m, N̲_m): extreme trimmed sums of h_i(t) = ψ(r_i − t)² over t ∈ [lo, hi].
pub fn envelope_numerators<F: Real>(
    resid: &[F],
    score: &ScoreFamily<F>,
    m: usize,
    lo: F,
    hi: F,
) -> (F, F) {
    let n = resid.len();
    let pmax2 = score.psi_max() * score.psi_max();
    let mf = lit::<F>(m as f64);
    let upper_at = |t: F| {
        let mut h: Vec<F> = resid.iter().map(|&r| score.psi(r - t).powi(2)).collect();
        mf * pmax2 + top_sum(&mut h, n - m, true)
    };
    let lower_at = |t: F| {
        let mut h: Vec<F> = resid.iter().map(|&r| score.psi(r - t).powi(2)).collect();
        top_sum(&mut h, n - m, false)
    };
    let finite: Vec<F> = resid.iter().copied().filter(|v| v.is_finite()).collect();
    let reach =
        finite.iter().fold(F::zero(), |a, v| a.max(v.abs())) + lit::<F>(50.0) * score.delta();
    let lo_c = if lo.is_finite() { lo } else { -reach };
    let hi_c = if hi.is_finite() { hi } else { reach };
    let mut pts = vec![lo_c, hi_c];
    let inside = |t: F| t >= lo_c && t <= hi_c;
    for (i, &a) in finite.iter().enumerate() {
        if inside(a) {
            pts.push(a);
        }
        for k in score.kinks() {
            if inside(a - k) {
                pts.push(a - k);
            }
        }
        for &b in &finite[i + 1..] {
            let mid = (a + b) / lit(2.0);
            if inside(mid) {
                pts.push(mid);
            }
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let piecewise_convex = score.kind() == ScoreKind::Huber;
    let mut nbar = F::neg_infinity();
    let mut nlow = F::infinity();
    for &p in &pts {
        nbar = nbar.max(upper_at(p));
        nlow = nlow.min(lower_at(p));
    }
    let golden = |f: &dyn Fn(F) -> F, mut a: F, mut b: F| -> F {
        let g = lit::<F>(0.618_033_988_749_894_8);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        f((a + b) / lit(2.0))
    };
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        nlow = nlow.min(golden(&lower_at, a, b));
        if !piecewise_convex {
            let neg = |t: F| -upper_at(t);
            let probes = 16;
            let mut best = (F::neg_infinity(), a);
            for j in 0..=probes {
                let t = a + (b - a) * lit::<F>(j as f64 / probes as f64);
                let v = upper_at(t);
                if v > best.0 {
                    best = (v, t);
                }
            }
            let step = (b - a) / lit(probes as f64);
            let v = -golden(&neg, (best.1 - step).max(a), (best.1 + step).min(b));
            nbar = nbar.max(v).max(best.0);
        }
    }
    if lo.is_infinite() || hi.is_infinite() {
        nbar = nbar.max(lit::<F>(n as f64) * pmax2);
    }
    (nbar, nlow)
}

/// Upper bounds on the one-sided sensitivities of the plug-in standard
/// error evaluated at the re-solved location.
pub fn se_plugin_upper_eta<F: Real>(
    xs: &[F],
    score: &ScoreFamily<F>,
    theta_hat: F,
    m: usize,
    envelope: bool,
) -> Result<(F, F)> {
    if !score.is_bounded() {
        return Err(Error::Domain(
            "plug-in SE bounds need a bounded score".into(),
        ));
    }
    let se = plugin_se_raw(xs, score, theta_hat)?;
    if m == 0 {
        return Ok((F::zero(), F::zero()));
    }
    let n = xs.len();
    let sorted = sorted_copy(xs);
    let eta_p = location_eta(&sorted, score, theta_hat, m, Side::Plus);
    let eta_m = location_eta(&sorted, score, theta_hat, m, Side::Minus);
    let eta = eta_p.max(eta_m);
    let pi = order_by_distance(xs, theta_hat);
    let mf = lit::<F>(m as f64);
    let pmax2 = score.psi_max() * score.psi_max();
    let psi2 = |i: usize| score.psi(xs[i] - theta_hat).powi(2);
    let dpsi = |i: usize| score.derivative(xs[i] - theta_hat);

    let tail_psi2 = pi[m..].iter().fold(F::zero(), |a, &i| a + psi2(i));
    let tail_dpsi = pi[m..].iter().fold(F::zero(), |a, &i| a + dpsi(i));
    let head_psi2 = pi[..n - m].iter().fold(F::zero(), |a, &i| a + psi2(i));
    let head_dpsi = pi[..n - m].iter().fold(F::zero(), |a, &i| a + dpsi(i));

    let (num_up, num_dn) = if envelope {
        let resid: Vec<F> = xs.iter().map(|&x| x - theta_hat).collect();
        envelope_numerators(&resid, score, m, -eta_m, eta_p)
    } else {
        (
            lit::<F>(5.0) * mf * pmax2 + tail_psi2,
            (head_psi2 - lit::<F>(4.0) * mf * pmax2).max(F::zero()),
        )
    };

    let (den_up, den_dn) = if score.kind() == ScoreKind::Huber {
        let (qp, qm) = huber_band_counts(xs, score.delta(), theta_hat, eta_p, eta_m);
        let d = score.delta();
        (
            tail_dpsi + d * lit::<F>((qp - m as i64) as f64),
            mf * score.deriv_at_zero() + head_dpsi + d * lit::<F>((qm + m as i64) as f64),
        )
    } else {
        let (sp, sm) = shift_counts(&sorted, theta_hat, eta_p, eta_m, m);
        let dl = score.shift_delta(eta);
        (
            tail_dpsi - lit::<F>(sp as f64) * dl,
            mf * score.deriv_at_zero() + head_dpsi + lit::<F>(sm as f64) * dl,
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
    Ok((up, down.min(se)))
}

pub fn se_plugin_sensitivity_upper<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    theta_hat: F,
    m: usize,
    envelope: bool,
) -> Result<SensitivityPoint<F>> {
    check_m(m, sample.n())?;
    let (u, d) = se_plugin_upper_eta(sample.values(), score, theta_hat, m, envelope)?;
    Ok(SensitivityPoint::new(m, u, d, BoundKind::UpperBound))
}

fn contaminated_se<F: Real>(x: &[F], score: &ScoreFamily<F>) -> F {
    let t = location_root(x, score, RootSelect::Midpoint);
    if t.is_nan() {
        return F::nan();
    }
    plugin_se_raw(x, score, t).unwrap_or(F::infinity())
}

/// Lower bounds on the plug-in SE sensitivities from explicit schemes.
pub fn se_plugin_lower_eta<F: Real>(
    sorted: &[F],
    score: &ScoreFamily<F>,
    theta_hat: F,
    m: usize,
    cfg: &SchemeConfig,
) -> Result<(F, F)> {
    let se = plugin_se_raw(sorted, score, theta_hat)?;
    if m == 0 {
        return Ok((F::zero(), F::zero()));
    }
    let eta = location_eta(sorted, score, theta_hat, m, Side::Plus);
    let mut cands: Vec<Vec<F>> = Vec::new();
    for c in left_targets(sorted, score, theta_hat, eta, cfg) {
        cands.push(contaminate_left(sorted, m, c));
    }
    for c in right_targets(sorted, score, theta_hat, eta, cfg) {
        cands.push(contaminate_right(sorted, m, c));
    }
    // moving the outermost points onto the estimate deflates the SE
    let pi = order_by_distance(sorted, theta_hat);
    let mut inward = sorted.to_vec();
    for &i in pi.iter().rev().take(m) {
        inward[i] = theta_hat;
    }
    cands.push(inward);
    let (mut up, mut down) = (F::zero(), F::zero());
    for x in cands {
        let s = contaminated_se(&x, score);
        if s.is_nan() {
            continue;
        }
        up = up.max(s - se);
        down = down.max(se - s);
    }
    Ok((up, down))
}

// ------------------------------------------------------------------ curves

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec<F> {
    Location(ScoreFamily<F>),
    Scale(ScaleScoreFamily<F>),
    TwoStage {
        score: ScoreFamily<F>,
        chi: ScaleScoreFamily<F>,
        config: SchemeConfig,
    },
    RestrictedSe {
        score: ScoreFamily<F>,
        theta0: F,
    },
    PluginSe {
        score: ScoreFamily<F>,
        envelope: bool,
        config: SchemeConfig,
    },
}

impl<F: Real> EstimatorSpec<F> {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorSpec::Location(_) => "location",
            EstimatorSpec::Scale(_) => "scale",
            EstimatorSpec::TwoStage { .. } => "two_stage",
            EstimatorSpec::RestrictedSe { .. } => "se_restricted",
            EstimatorSpec::PluginSe { .. } => "se_plugin",
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(
            self,
            EstimatorSpec::Location(_)
                | EstimatorSpec::Scale(_)
                | EstimatorSpec::RestrictedSe { .. }
        )
    }
}

/// Which bound rows a curve carries for bounded estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurveMode {
    #[default]
    Both,
    Lower,
    Upper,
}

fn curve_rows<F: Real>(
    sample: &Sample<F>,
    spec: &EstimatorSpec<F>,
    m: usize,
    mode: CurveMode,
) -> Result<Vec<SensitivityPoint<F>>> {
    let keep = |k: BoundKind| {
        matches!(
            (mode, k),
            (_, BoundKind::Exact)
                | (CurveMode::Both, _)
                | (CurveMode::Lower, BoundKind::LowerBound)
                | (CurveMode::Upper, BoundKind::UpperBound)
        )
    };
    let rows = match spec {
        EstimatorSpec::Location(score) => {
            let th = location_root(sample.values(), score, RootSelect::Midpoint);
            vec![location_sensitivity(sample, score, th, m)?]
        }
        EstimatorSpec::Scale(chi) => {
            let fit = crate::estimators::solve_scale(sample, chi)?;
            vec![scale_sensitivity(sample, chi, fit.sigma_hat.unwrap(), m)?]
        }
        EstimatorSpec::TwoStage { score, chi, config } => {
            let (l, u) = two_stage_sensitivity_bounds(sample, score, chi, m, config)?;
            vec![l, u]
        }
        EstimatorSpec::RestrictedSe { score, theta0 } => {
            vec![se_restricted_sensitivity(sample, score, *theta0, m)?]
        }
        EstimatorSpec::PluginSe {
            score,
            envelope,
            config,
        } => {
            let th = location_root(sample.values(), score, RootSelect::Midpoint);
            let (lu, ld) = se_plugin_lower_eta(sample.sorted(), score, th, m, config)?;
            let up = se_plugin_sensitivity_upper(sample, score, th, m, *envelope)?;
            vec![
                SensitivityPoint::new(m, lu, ld, BoundKind::LowerBound),
                SensitivityPoint::new(
                    m,
                    up.eta_plus.max(lu),
                    up.eta_minus.max(ld),
                    BoundKind::UpperBound,
                ),
            ]
        }
    };
    Ok(rows.into_iter().filter(|p| keep(p.kind)).collect())
}

/// Sensitivity curve over `m_grid`; per-m work runs in parallel and is
/// merged in grid order.
pub fn sensitivity_curve<F: Real>(
    sample: &Sample<F>,
    spec: &EstimatorSpec<F>,
    m_grid: &[usize],
    mode: CurveMode,
) -> Result<SensitivityCurve<F>> {
    let rows: Vec<Vec<SensitivityPoint<F>>> = m_grid
        .par_iter()
        .map(|&m| {
            check_m(m, sample.n())?;
            curve_rows(sample, spec, m, mode)
        })
        .collect::<Result<_>>()?;
    Ok(SensitivityCurve {
        n: sample.n(),
        label: spec.label().to_string(),
        points: rows.into_iter().flatten().collect(),
    })
}

/// Default grid m = 0, …, ⌊n/2⌋.
pub fn default_m_grid(n: usize) -> Vec<usize> {
    (0..=n / 2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{solve_location, solve_scale};
    use proptest::prelude::*;

    fn huber() -> ScoreFamily<f64> {
        ScoreFamily::<f64>::huber(1.345)
    }

    fn chi() -> ScaleScoreFamily<f64> {
        ScaleScoreFamily::new(huber(), 0.7101645482588023).unwrap()
    }

    #[test]
    fn location_examples() {
        let s = Sample::<f64>::from_f64(&[-1.0, 0.0, 1.0]).unwrap();
        let sign = ScoreFamily::sign();
        let p = location_sensitivity(&s, &sign, 0.0, 1).unwrap();
        assert!((p.eta_plus - 1.0).abs() < 1e-12);
        let bp = location_bp(&s, &sign, 0.0, 1.0, Side::Plus).unwrap();
        assert_eq!(bp.m, Some(1));

        let s5 = Sample::<f64>::from_f64(&[-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        let p = location_sensitivity(&s5, &huber(), 0.0, 1).unwrap();
        assert!((p.eta_plus - 1.0).abs() < 1e-12);
        assert_eq!(
            location_sensitivity(&s5, &huber(), 0.0, 0)
                .unwrap()
                .eta_two_sided,
            0.0
        );
        assert!(location_sensitivity(&s5, &huber(), 0.0, 6).is_err());
    }

    #[test]
    fn unbounded_score_breaks_with_one_point() {
        let s = Sample::<f64>::from_f64(&[0.1, 0.5, 0.9, 1.4]).unwrap();
        let id = ScoreFamily::identity();
        let bp = location_bp(&s, &id, 0.725, 1e-3, Side::TwoSided).unwrap();
        assert_eq!(bp.m, Some(1));
        let p = location_sensitivity(&s, &id, 0.725, 1).unwrap();
        assert!(p.breakdown && p.eta_plus.is_infinite());
    }

    #[test]
    fn scale_examples() {
        let x = [0.3, -1.2, 0.8, 2.5, -0.4, 1.1, -2.2, 0.05];
        let s = Sample::<f64>::from_f64(&x).unwrap();
        let sig = solve_scale(&s, &chi()).unwrap().sigma_hat.unwrap();
        assert!((sig - 1.3103197227796517).abs() < 1e-9);
        let p = scale_sensitivity(&s, &chi(), sig, 2).unwrap();
        assert!((p.eta_plus - 1.3443136621482294).abs() < 1e-8);
        assert!((p.eta_minus - 0.652621814035835).abs() < 1e-8);
        for m in 0..=8 {
            let p = scale_sensitivity(&s, &chi(), sig, m).unwrap();
            assert!(p.eta_minus <= sig);
        }
        let bp = scale_bp(&s, &chi(), sig, 1e-6, Side::TwoSided).unwrap();
        assert_eq!(bp.m, Some(1));
        let imp = scale_bp(&s, &chi(), sig, 2.0 * sig, Side::Minus).unwrap();
        assert!(imp.m.is_some());
    }

    #[test]
    fn weighted_uniform_matches_unweighted() {
        let s = Sample::<f64>::from_f64(&[0.3, -1.2, 0.8, 2.5, -0.4, 1.1, -2.2]).unwrap();
        let th = solve_location(&s, &huber()).unwrap().theta_hat;
        let ws = WeightedSample::uniform(&s);
        for m in 0..=4 {
            let a = location_sensitivity(&s, &huber(), th, m).unwrap();
            let b = weighted_location_sensitivity(&ws, &huber(), th, m).unwrap();
            assert_eq!(a, b);
        }
        for &eta in &[0.1, 0.5, 1.5] {
            let a = location_bp(&s, &huber(), th, eta, Side::TwoSided).unwrap();
            let b = weighted_location_bp(&ws, &huber(), th, eta, Side::TwoSided).unwrap();
            assert_eq!(a.m, b.m);
        }
    }

    #[test]
    fn weighted_condition_on_fine_grid() {
        let x = [-1.5, -0.2, 0.4, 1.1, 2.7];
        let w = [0.3, 0.1, 0.25, 0.2, 0.15];
        let ws = WeightedSample::new(&x, &w).unwrap();
        let h = huber();
        let th = crate::estimators::solve_location_weighted(&ws, &h)
            .unwrap()
            .theta_hat;
        let eta = weighted_location_eta(&ws, &h, th, 1, Side::Plus);
        // remove 0.2 of mass from the left: all of x1 (0.3 ≥ 0.2), partial 0.1
        let cond = |e: f64| {
            0.1 * h.psi(-1.5 - th - e)
                + [(-0.2, 0.1), (0.4, 0.25), (1.1, 0.2), (2.7, 0.15)]
                    .iter()
                    .map(|(v, w)| w * h.psi(v - th - e))
                    .sum::<f64>()
                + 0.2 * 1.345
        };
        let mut best = 0.0;
        for i in 0..200000 {
            let e = i as f64 * 1e-5;
            if cond(e) >= 0.0 {
                best = e;
            }
        }
        assert!((eta - best).abs() < 2e-5);
    }

    #[test]
    fn weighted_concentrated_mass() {
        let x = [0.0, 1.0, 2.0];
        let ws = WeightedSample::new(&x, &[0.9, 0.05, 0.05]).unwrap();
        let h = huber();
        let th = crate::estimators::solve_location_weighted(&ws, &h)
            .unwrap()
            .theta_hat;
        // moving 1/3 of mass: 0.9 − 1/3 of the heavy atom stays
        let bp = weighted_location_bp(&ws, &h, th, 0.5, Side::Plus).unwrap();
        let frac = 1.0 / 3.0;
        let cond = (0.9 - frac) * h.psi(0.0 - th - 0.5)
            + 0.05 * h.psi(1.0 - th - 0.5)
            + 0.05 * h.psi(2.0 - th - 0.5)
            + frac * 1.345;
        assert_eq!(bp.m == Some(1), cond >= 0.0);
    }

    #[test]
    fn two_stage_bracket_is_ordered() {
        let x = [0.3, -1.2, 0.8, 2.5, -0.4, 1.1, -2.2];
        let s = Sample::<f64>::from_f64(&x).unwrap();
        for m in 0..=3 {
            let (l, u) =
                two_stage_sensitivity_bounds(&s, &huber(), &chi(), m, &SchemeConfig::default())
                    .unwrap();
            assert!(l.eta_plus <= u.eta_plus && l.eta_minus <= u.eta_minus);
            if m == 0 {
                assert_eq!((l.eta_two_sided, u.eta_two_sided), (0.0, 0.0));
            }
        }
        let cfg = SchemeConfig {
            centering: Centering::Median,
            ..SchemeConfig::default()
        };
        assert!(two_stage_sensitivity_bounds(&s, &huber(), &chi(), 1, &cfg).is_err());
    }

    #[test]
    fn a_grid_for_huber() {
        let g = a_grid(&huber());
        assert_eq!(g.len(), 12);
        assert!((g[0] + 0.1).abs() < 1e-12);
        assert!(g[1].abs() < 1e-12);
        assert!(g[11].is_infinite());
        assert!((g[10] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn restricted_se_examples() {
        let far = Sample::<f64>::from_f64(&[-3.0, -2.0, 2.0, 3.0]).unwrap();
        let near = Sample::<f64>::from_f64(&[-0.3, 0.2, 0.5, -2.0]).unwrap();
        let p = se_restricted_sensitivity(&near, &huber(), 0.0, 0).unwrap();
        assert_eq!(p.eta_two_sided, 0.0);
        assert!(se_restricted_sensitivity(&far, &huber(), 0.0, 1).is_err());
        let p = se_restricted_sensitivity(&near, &huber(), 0.0, 4).unwrap();
        let se = plugin_se_raw(near.values(), &huber(), 0.0).unwrap();
        assert_eq!(p.eta_minus, se);
    }

    #[test]
    fn envelope_not_above_plain() {
        let x = [0.3, -1.2, 0.8, 2.5, -0.4, 1.1];
        let s = Sample::<f64>::from_f64(&x).unwrap();
        for score in [huber(), ScoreFamily::<f64>::logcosh(1.2047)] {
            let th = solve_location(&s, &score).unwrap().theta_hat;
            for m in 1..=3 {
                let a = se_plugin_sensitivity_upper(&s, &score, th, m, false).unwrap();
                let b = se_plugin_sensitivity_upper(&s, &score, th, m, true).unwrap();
                assert!(b.eta_plus <= a.eta_plus + 1e-12, "m={m}");
                assert!(b.eta_minus <= a.eta_minus + 1e-12, "m={m}");
            }
        }
    }

    #[test]
    fn curve_composition() {
        let x = [0.3, -1.2, 0.8, 2.5, -0.4, 1.1, -2.2, 0.05];
        let s = Sample::<f64>::from_f64(&x).unwrap();
        let spec = EstimatorSpec::Location(huber());
        let c = sensitivity_curve(&s, &spec, &[0], CurveMode::Both).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.points[0].eta_two_sided, 0.0);
        let grid = default_m_grid(8);
        let c = sensitivity_curve(&s, &spec, &grid, CurveMode::Both).unwrap();
        let th = solve_location(&s, &huber()).unwrap().theta_hat;
        for p in &c.points {
            assert_eq!(*p, location_sensitivity(&s, &huber(), th, p.m).unwrap());
        }
    }

    proptest! {
        #[test]
        fn exact_location_curve_monotone_and_roundtrip(
            xs in proptest::collection::vec(-5.0f64..5.0, 3..15),
        ) {
            let s = Sample::<f64>::from_f64(&xs).unwrap();
            let h = huber();
            let th = solve_location(&s, &h).unwrap().theta_hat;
            let n = xs.len();
            let mut prev = 0.0;
            for m in 0..=n {
                let e = location_eta(s.sorted(), &h, th, m, Side::Plus);
                prop_assert!(e >= prev);
                if m >= 1 && prev.is_finite() && e.is_finite() && e > prev + 1e-9 {
                    let eta = 0.5 * (prev + e);
                    let bp = location_bp(&s, &h, th, eta, Side::Plus).unwrap();
                    prop_assert_eq!(bp.m, Some(m));
                }
                prev = e;
            }
        }

        #[test]
        fn location_translation_invariant(
            xs in proptest::collection::vec(-5.0f64..5.0, 3..10),
            c in -20.0f64..20.0,
        ) {
            let h = huber();
            let s = Sample::<f64>::from_f64(&xs).unwrap();
            let t = s.shifted(c);
            let a = solve_location(&s, &h).unwrap().theta_hat;
            let b = solve_location(&t, &h).unwrap().theta_hat;
            for m in 1..=xs.len() / 2 {
                let p = location_sensitivity(&s, &h, a, m).unwrap();
                let q = location_sensitivity(&t, &h, b, m).unwrap();
                prop_assert!(p.eta_plus == q.eta_plus || (p.eta_plus - q.eta_plus).abs() < 1e-7);
                prop_assert!(p.eta_minus == q.eta_minus || (p.eta_minus - q.eta_minus).abs() < 1e-7);
            }
        }

        #[test]
        fn scale_equivariant(
            xs in proptest::collection::vec(0.2f64..5.0, 4..10),
            c in 0.1f64..10.0,
        ) {
            let s = Sample::<f64>::from_f64(&xs).unwrap();
            let t = s.map(|v| c * v).unwrap();
            let a = solve_scale(&s, &chi()).unwrap().sigma_hat.unwrap();
            let b = solve_scale(&t, &chi()).unwrap().sigma_hat.unwrap();
            for m in 1..=xs.len() / 2 {
                let p = scale_sensitivity(&s, &chi(), a, m).unwrap();
                let q = scale_sensitivity(&t, &chi(), b, m).unwrap();
                if p.eta_plus.is_finite() {
                    prop_assert!((c * p.eta_plus - q.eta_plus).abs() < 1e-8 * (1.0 + q.eta_plus));
                }
                prop_assert!((c * p.eta_minus - q.eta_minus).abs() < 1e-8 * (1.0 + q.eta_minus));
            }
        }

        #[test]
        fn bp_monotone_in_eta(
            xs in proptest::collection::vec(-5.0f64..5.0, 3..12),
            e1 in 0.01f64..3.0,
            e2 in 0.01f64..3.0,
        ) {
            let s = Sample::<f64>::from_f64(&xs).unwrap();
            let h = huber();
            let th = solve_location(&s, &h).unwrap().theta_hat;
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let a = location_bp(&s, &h, th, lo, Side::TwoSided).unwrap().bp();
            let b = location_bp(&s, &h, th, hi, Side::TwoSided).unwrap().bp();
            prop_assert!(a <= b);
        }
    }
}
