//! Population targets: θ₀, the trimmed sensitivities η_ε±, the maxbias
//! curve, asymptotic variances and the coupled Z-system.

use crate::estimators::{solve_location, WeightedSample};
use crate::model::PopulationModel;
use crate::score::{DerivConvention, ScoreFamily};
use crate::sensitivity::{location_bp, location_eta, Side};
use crate::{tol, Error, Result, Sample};

/// Largest contamination fraction handled by the population routines.
pub const EPS_CAP: f64 = 0.499;

const DENOM_FLOOR: f64 = 1e-12;
const ODE_TOL: f64 = 1e-11;

/// Plus-side view of the model: the minus side is the plus side of the
/// reflected law −X (all supported scores are odd).
struct View<'a> {
    model: &'a PopulationModel,
    flip: bool,
    score: ScoreFamily<f64>,
    kinks: Vec<f64>,
    b: f64,
}

impl<'a> View<'a> {
    fn new(model: &'a PopulationModel, score: &ScoreFamily<f64>, side: Side) -> Result<Self> {
        if !score.is_bounded() {
            return Err(Error::Domain(
                "population sensitivity needs a bounded score".into(),
            ));
        }
        let flip = match side {
            Side::Plus => false,
            Side::Minus => true,
            Side::TwoSided => {
                return Err(Error::Domain("population targets are one-sided".into()));
            }
        };
        let score = score.clone().with_convention(DerivConvention::Indicator);
        let kinks = score.kinks();
        let b = score.psi_pos_inf();
        Ok(Self {
            model,
            flip,
            score,
            kinks,
            b,
        })
    }

    fn quantile(&self, u: f64) -> f64 {
        if self.flip {
            -self.model.quantile(1.0 - u)
        } else {
            self.model.quantile(u)
        }
    }

    fn density(&self, y: f64) -> f64 {
        self.model.density(if self.flip { -y } else { y })
    }

    /// ∫_{lo}^{hi} g(y) dG(y) with G the law of ±X; `shift` locates the kinks of g.
    fn integrate(&self, g: impl Fn(f64) -> f64, lo: f64, hi: f64, shift: &[f64]) -> Result<f64> {
        let mut kinks = Vec::new();
        for s in shift {
            for k in &self.kinks {
                kinks.push(if self.flip { -(s + k) } else { s + k });
            }
        }
        if self.flip {
            self.model.integrate_range(|x| g(-x), -hi, -lo, &kinks)
        } else {
            self.model.integrate_range(g, lo, hi, &kinks)
        }
    }

    fn psi(&self, t: f64) -> f64 {
        self.score.psi(t)
    }

    fn dpsi(&self, t: f64) -> f64 {
        self.score.derivative(t)
    }

    fn location(&self) -> Result<f64> {
        let t = population_location(self.model, &self.score)?;
        Ok(if self.flip { -t } else { t })
    }

    /// H(η) = ∫_{q_ε}^∞ ψ(y − θ₀ − η) dG + εB.
    fn h(&self, theta0: f64, eps: f64, eta: f64) -> Result<f64> {
        let q = self.quantile(eps);
        let c = theta0 + eta;
        Ok(self.integrate(|y| self.psi(y - c), q, f64::INFINITY, &[c])? + eps * self.b)
    }

    /// Right-hand side of the maxbias ODE at (ε, η).
    fn slope(&self, theta0: f64, eps: f64, eta: f64) -> Result<f64> {
        let q = self.quantile(eps);
        let c = theta0 + eta;
        let den = self.integrate(|y| self.dpsi(y - c), q, f64::INFINITY, &[c])?;
        if den < DENOM_FLOOR {
            return Err(Error::DegenerateInformation(format!(
                "maxbias ODE denominator {den:e} at eps = {eps}"
            )));
        }
        Ok((self.b - self.psi(q - c)) / den)
    }

    fn eta_root(&self, theta0: f64, eps: f64) -> Result<f64> {
        let h0 = self.h(theta0, eps, 0.0)?;
        if h0 <= 0.0 {
            return Ok(0.0);
        }
        let mut hi = self.spread();
        let mut k = 0;
        while self.h(theta0, eps, hi)? >= 0.0 {
            hi *= 2.0;
            k += 1;
            if k > tol::BRACKET_DOUBLINGS {
                return Err(Error::Numeric {
                    what: format!("population sensitivity diverges at eps = {eps}"),
                    residual: f64::INFINITY,
                });
            }
        }
        bisect(|e| self.h(theta0, eps, e), 0.0, hi, true)
    }

    fn spread(&self) -> f64 {
        let s = self.model.quantile(0.75) - self.model.quantile(0.25);
        if s.is_finite() && s > 0.0 {
            s
        } else {
            1.0
        }
    }
}

/// Bisection on a sign change; `decreasing` gives the orientation of g.
fn bisect(
    g: impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    decreasing: bool,
) -> Result<f64> {
    for _ in 0..tol::BISECT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol::POP_ROOT * (1.0 + mid.abs()) {
            break;
        }
        let v = g(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if (v > 0.0) == decreasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!(
            "contamination fraction must lie in (0, 0.5), got {eps}"
        )));
    }
    if eps > EPS_CAP {
        return Err(Error::Numeric {
            what: format!(
                "eps = {eps} beyond cap {EPS_CAP}; the sensitivity diverges as eps -> 0.5"
            ),
            residual: f64::INFINITY,
        });
    }
    Ok(())
}

/// θ₀ solving E[ψ(X − θ)] = 0.
pub fn population_location(model: &PopulationModel, score: &ScoreFamily<f64>) -> Result<f64> {
    let kinks = score.kinks();
    let g = |t: f64| {
        let ks: Vec<f64> = kinks.iter().map(|k| k + t).collect();
        model.expect(|x| score.psi(x - t), &ks)
    };
    let mid = model.quantile(0.5);
    let mut r = (model.quantile(0.75) - model.quantile(0.25)).max(1e-3);
    if !r.is_finite() {
        r = 1.0;
    }
    let (mut lo, mut hi) = (mid - r, mid + r);
    let mut k = 0;
    while g(lo)? < 0.0 || g(hi)? > 0.0 {
        lo -= r;
        hi += r;
        r *= 2.0;
        k += 1;
        if k > tol::BRACKET_DOUBLINGS {
            return Err(Error::Numeric {
                what: "population location not bracketed".into(),
                residual: f64::NAN,
            });
        }
    }
    bisect(g, lo, hi, true)
}

/// H_±(η) from the population trimmed equations.
pub fn population_h(
    model: &PopulationModel,
    score: &ScoreFamily<f64>,
    eps: f64,
    eta: f64,
    side: Side,
) -> Result<f64> {
    let v = View::new(model, score, side)?;
    let theta0 = v.location()?;
    let h = v.h(theta0, eps, eta)?;
    // the minus-side equation is the reflection of the plus side
    Ok(if v.flip { -h } else { h })
}

/// η_ε±, the zero of H_±.
pub fn population_sensitivity(
    model: &PopulationModel,
    score: &ScoreFamily<f64>,
    eps: f64,
    side: Side,
) -> Result<f64> {
    check_eps(eps)?;
    let v = View::new(model, score, side)?;
    let theta0 = v.location()?;
    v.eta_root(theta0, eps)
}

/// dη_±/dε evaluated directly at ε.
pub fn sensitivity_slope(
    model: &PopulationModel,
    score: &ScoreFamily<f64>,
    eps: f64,
    side: Side,
) -> Result<f64> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::Domain(format!(
            "eps must lie in [0, 0.5), got {eps}"
        )));
    }
    let v = View::new(model, score, side)?;
    let theta0 = v.location()?;
    let eta = if eps == 0.0 {
        0.0
    } else {
        v.eta_root(theta0, eps)?
    };
    v.slope(theta0, eps, eta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxbiasCurve {
    pub epsilons: Vec<f64>,
    pub eta_plus: Vec<f64>,
    pub eta_minus: Vec<f64>,
    /// dη/dε on each side.
    pub deriv_plus: Vec<f64>,
    pub deriv_minus: Vec<f64>,
}

impl MaxbiasCurve {
    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }
}

fn rk4(v: &View, theta0: f64, e: f64, y: f64, h: f64) -> Result<f64> {
    let k1 = v.slope(theta0, e, y)?;
    let k2 = v.slope(theta0, e + 0.5 * h, y + 0.5 * h * k1)?;
    let k3 = v.slope(theta0, e + 0.5 * h, y + 0.5 * h * k2)?;
    let k4 = v.slope(theta0, e + h, y + h * k3)?;
    Ok(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// RK4 across [e, e + h] with step halving until the step-doubling
/// estimate is below the tolerance.
fn advance(v: &View, theta0: f64, e: f64, y: f64, h: f64, depth: u32) -> Result<f64> {
    let full = rk4(v, theta0, e, y, h)?;
    let mid = rk4(v, theta0, e, y, 0.5 * h)?;
    let half = rk4(v, theta0, e + 0.5 * h, mid, 0.5 * h)?;
    if (half - full).abs() <= ODE_TOL || depth >= 24 {
        return Ok(half + (half - full) / 15.0);
    }
    let m = advance(v, theta0, e, y, 0.5 * h, depth + 1)?;
    advance(v, theta0, e + 0.5 * h, m, 0.5 * h, depth + 1)
}

fn integrate_side(v: &View, grid: &[f64], step: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let theta0 = v.location()?;
    let mut eta = Vec::with_capacity(grid.len());
    let mut der = Vec::with_capacity(grid.len());
    let mut y = 0.0;
    let mut e = 0.0;
    for &g in grid {
        let h = g - e;
        debug_assert!(h <= step * (1.0 + 1e-9));
        y = advance(v, theta0, e, y, h, 0)?;
        e = g;
        eta.push(y);
        der.push(v.slope(theta0, e, y)?);
    }
    Ok((eta, der))
}

/// Integrates the maxbias ODEs from η(0) = 0 on the grid step, 2·step, …, eps_max.
pub fn maxbias_curve(
    model: &PopulationModel,
    score: &ScoreFamily<f64>,
    eps_max: f64,
    step: f64,
) -> Result<MaxbiasCurve> {
    if !(step > 0.0) || !(eps_max >= step) {
        return Err(Error::Domain("need 0 < step <= eps_max".into()));
    }
    check_eps(eps_max)?;
    let k = ((eps_max / step) + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (1..=k).map(|i| i as f64 * step).collect();
    if eps_max - grid[k - 1] > 1e-12 {
        grid.push(eps_max);
    }
    let (eta_plus, deriv_plus) =
        integrate_side(&View::new(model, score, Side::Plus)?, &grid, step)?;
    let (eta_minus, deriv_minus) =
        integrate_side(&View::new(model, score, Side::Minus)?, &grid, step)?;
    Ok(MaxbiasCurve {
        epsilons: grid,
        eta_plus,
        eta_minus,
        deriv_plus,
        deriv_minus,
    })
}

/// ε* with η_{ε*,side} = η, by bisection of H(η; ε) in ε.
pub fn population_bp(
    model: &PopulationModel,
    score: &ScoreFamily<f64>,
    eta: f64,
    side: Side,
) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!(
            "eta must be positive and finite, got {eta}"
        )));
    }
    let v = View::new(model, score, side)?;
    let theta0 = v.location()?;
    // H increases in ε for fixed η
    if v.h(theta0, EPS_CAP, eta)? < 0.0 {
        return Err(Error::Domain(format!(
            "eta = {eta} beyond the maxbias curve up to eps = {EPS_CAP}"
        )));
    }
    bisect(|e| v.h(theta0, e, eta), 0.0, EPS_CAP, false)
}

/// Building blocks of the asymptotic variance of η̂_{m/n±}.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTerms {
    pub eps: f64,
    pub theta0: f64,
    pub eta: f64,
    /// Trimming quantile q_ε (q_{1−ε} on the minus side).
    pub q: f64,
    pub density_q: f64,
    pub b: f64,
    /// E ψ′(X − θ₀)
    pub a: f64,
    /// E ψ(X − θ₀)²
    pub psi2: f64,
    /// ∫_tail ψ′(x − θ₀ ∓ η) dF
    pub b_tail: f64,
    /// ψ at the trimming quantile, oriented to the plus side.
    pub psi_q: f64,
    /// ∫_tail ψ(x − θ₀ ∓ η) dF
    pub tail1: f64,
    /// ∫_tail ψ(x − θ₀ ∓ η)² dF
    pub tail2: f64,
    /// ∫_tail ψ(x − θ₀)ψ(x − θ₀ ∓ η) dF
    pub cross: f64,
    /// ∫_trimmed ψ(x − θ₀) dF − ε E ψ(X − θ₀)
    pub c13: f64,
    pub mean_psi: f64,
    pub sandwich: f64,
    pub expanded: f64,
}

impl VarianceTerms {
    /// Jacobian of E Ψ in (θ, η, q) at the population root.
    pub fn jacobian(&self) -> [[f64; 3]; 3] {
        [
            [-self.a, 0.0, 0.0],
            [-self.b_tail, -self.b_tail, -self.psi_q * self.density_q],
            [0.0, 0.0, self.density_q],
        ]
    }

    /// E ΨΨᵀ at the population root.
    pub fn moments(&self) -> [[f64; 3]; 3] {
        let (e, b) = (self.eps, self.b);
        let m11 = self.psi2;
        let m12 = self.cross + e * b * self.mean_psi;
        let m13 = self.c13;
        let m22 = self.tail2 + 2.0 * e * b * self.tail1 + e * e * b * b;
        let m23 = -e * self.tail1;
        let m33 = e * (1.0 - e);
        [[m11, m12, m13], [m12, m22, m23], [m13, m23, m33]]
    }

    /// b_± / e_±, the slope dε/dη at the root.
    pub fn bp_slope(&self) -> f64 {
        self.b_tail / (self.b - self.psi_q)
    }
}

fn inverse3(j: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let c = |r: usize, s: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (s1, s2) = ((s + 1) % 3, (s + 2) % 3);
        j[r1][s1] * j[r2][s2] - j[r1][s2] * j[r2][s1]
    };
    let det = j[0][0] * c(0, 0) + j[0][1] * c(0, 1) + j[0][2] * c(0, 2);
    let scale = j.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(det.abs() > 1e-14 * scale.powi(3)) {
        return Err(Error::DegenerateInformation(format!(
            "singular Z-system derivative (det {det:e})"
        )));
    }
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (s, v) in row.iter_mut().enumerate() {
            *v = c(s, r) / det;
        }
    }
    Ok(inv)
}

/// (J⁻¹ M J⁻ᵀ)₂₂.
fn sandwich_eta(j: &[[f64; 3]; 3], m: &[[f64; 3]; 3]) -> Result<f64> {
    let inv = inverse3(j)?;
    let r = inv[1];
    let mut v = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            v += r[i] * m[i][k] * r[k];
        }
    }
    Ok(v)
}

fn expanded_eta(t: &VarianceTerms) -> f64 {
    let (e, b, a, bp, pq) = (t.eps, t.b, t.a, t.b_tail, t.psi_q);
    let t2 = t.tail2 - e * e * b * b;
    t.psi2 / (a * a) + t2 / (bp * bp) + e * (1.0 - e) * pq * pq / (bp * bp)
        - 2.0 * t.cross / (a * bp)
        - 2.0 * pq * t.c13 / (a * bp)
        + 2.0 * pq * e * e * b / (bp * bp)
}

/// Population constants and both assemblies of V± at ε.
pub fn variance_terms(
    model: &PopulationModel,
    score: &ScoreFamily<f64>,
    eps: f64,
    side: Side,
) -> Result<VarianceTerms> {
    check_eps(eps)?;
    let v = View::new(model, score, side)?;
    let theta0 = v.location()?;
    let eta = v.eta_root(theta0, eps)?;
    let q = v.quantile(eps);
    let c = theta0 + eta;
    let inf = f64::INFINITY;
    let a = v.integrate(|y| v.dpsi(y - theta0), -inf, inf, &[theta0])?;
    if !(a > 0.0) {
        return Err(Error::DegenerateInformation(
            "E psi' is not positive".into(),
        ));
    }
    let psi2 = v.integrate(|y| v.psi(y - theta0).powi(2), -inf, inf, &[theta0])?;
    let mean_psi = v.integrate(|y| v.psi(y - theta0), -inf, inf, &[theta0])?;
    let b_tail = v.integrate(|y| v.dpsi(y - c), q, inf, &[c])?;
    let tail1 = v.integrate(|y| v.psi(y - c), q, inf, &[c])?;
    let tail2 = v.integrate(|y| v.psi(y - c).powi(2), q, inf, &[c])?;
    let cross = v.integrate(|y| v.psi(y - theta0) * v.psi(y - c), q, inf, &[theta0, c])?;
    let low = v.integrate(|y| v.psi(y - theta0), -inf, q, &[theta0])?;
    let mut t = VarianceTerms {
        eps,
        theta0: if v.flip { -theta0 } else { theta0 },
        eta,
        q: if v.flip { -q } else { q },
        density_q: v.density(q),
        b: v.b,
        a,
        psi2,
        b_tail,
        psi_q: v.psi(q - c),
        tail1,
        tail2,
        cross,
        c13: low - eps * mean_psi,
        mean_psi,
        sandwich: f64::NAN,
        expanded: f64::NAN,
    };
    t.sandwich = sandwich_eta(&t.jacobian(), &t.moments())?;
    t.expanded = expanded_eta(&t);
    if !((t.sandwich - t.expanded).abs() <= 1e-8 * (1.0 + t.sandwich.abs())) {
        return Err(Error::Contract(format!(
            "variance assemblies disagree: sandwich {} vs expanded {}",
            t.sandwich, t.expanded
        )));
    }
    if !(t.sandwich > 0.0) {
        return Err(Error::DegenerateInformation(format!(
            "non-positive variance {}",
            t.sandwich
        )));
    }
    Ok(t)
}

/// V±, the asymptotic variance of √n(η̂_{m/n±} − η_ε±).
pub fn asymptotic_variance_sensitivity(
    model: &PopulationModel,
    score: &ScoreFamily<f64>,
    eps: f64,
    side: Side,
) -> Result<f64> {
    Ok(variance_terms(model, score, eps, side)?.sandwich)
}

/// σ²± = (b±/e±)² V±, the asymptotic variance of √n(BP̂_η − ε*).
pub fn asymptotic_variance_bp(
    model: &PopulationModel,
    score: &ScoreFamily<f64>,
    eps_star: f64,
    side: Side,
) -> Result<f64> {
    let t = variance_terms(model, score, eps_star, side)?;
    let e = t.b - t.psi_q;
    if !(e > 0.0) {
        return Err(Error::DegenerateInformation(format!(
            "e = {e} is not positive"
        )));
    }
    Ok((t.b_tail / e).powi(2) * t.sandwich)
}

// ---------------------------------------------------------------- Z-system

/// ϑ = (θ, η, q, ε).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZState {
    pub theta: f64,
    pub eta: f64,
    pub q: f64,
    pub epsilon: f64,
}

/// E_{F_n}[Ψ±(X; ϑ)] under the (weighted) empirical measure.
pub fn zsystem_residual(
    ws: &WeightedSample<f64>,
    state: &ZState,
    side: Side,
    score: &ScoreFamily<f64>,
) -> [f64; 3] {
    let ZState {
        theta,
        eta,
        q,
        epsilon: e,
    } = *state;
    let b = score.psi_pos_inf();
    let mut r = [0.0; 3];
    for (&x, &w) in ws.sorted_values().iter().zip(ws.weights()) {
        r[0] += w * score.psi(x - theta);
        match side {
            Side::Minus => {
                if x < q {
                    r[1] += w * score.psi(x - theta + eta);
                }
            }
            _ => {
                if x > q {
                    r[1] += w * score.psi(x - theta - eta);
                }
            }
        }
        if x <= q {
            r[2] += w;
        }
    }
    match side {
        Side::Minus => {
            r[1] -= e * b;
            r[2] -= 1.0 - e;
        }
        _ => {
            r[1] += e * b;
            r[2] -= e;
        }
    }
    r
}

/// Unweighted convenience wrapper.
pub fn zsystem_residual_sample(
    sample: &Sample<f64>,
    state: &ZState,
    side: Side,
    score: &ScoreFamily<f64>,
) -> [f64; 3] {
    zsystem_residual(&WeightedSample::uniform(sample), state, side, score)
}

/// Midpoint of the gap after the k-th order statistic (1-based).
fn gap_point(sorted: &[f64], k: usize) -> Result<f64> {
    let n = sorted.len();
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("order index {k} outside 1..{n}")));
    }
    if !(sorted[k - 1] < sorted[k]) {
        return Err(Error::Domain(format!(
            "tied order statistics at position {k}"
        )));
    }
    Ok(0.5 * (sorted[k - 1] + sorted[k]))
}

fn trim_index(n: usize, k: usize, side: Side) -> usize {
    match side {
        Side::Minus => n - k,
        _ => k,
    }
}

/// ϑ̂^sen = (θ̂, η_{m/n±}, q̂_{m±}, m/n).
pub fn sensitivity_state(
    sample: &Sample<f64>,
    score: &ScoreFamily<f64>,
    m: usize,
    side: Side,
) -> Result<ZState> {
    if side == Side::TwoSided {
        return Err(Error::Domain("Z-system states are one-sided".into()));
    }
    let n = sample.n();
    if m == 0 || 2 * m > n {
        return Err(Error::Domain(format!(
            "need 1 <= m <= n/2, got m = {m}, n = {n}"
        )));
    }
    let theta = solve_location(sample, score)?.theta_hat;
    let eta = location_eta(sample.sorted(), score, theta, m, side);
    if !eta.is_finite() {
        return Err(Error::Domain(format!("m = {m} breaks the estimator")));
    }
    Ok(ZState {
        theta,
        eta,
        q: gap_point(sample.sorted(), trim_index(n, m, side))?,
        epsilon: m as f64 / n as f64,
    })
}

/// ϑ̂^BP = (θ̂, η, q̂_{k±}, k/n) with k = n·BP_{η±}.
pub fn breakdown_state(
    sample: &Sample<f64>,
    score: &ScoreFamily<f64>,
    eta: f64,
    side: Side,
) -> Result<ZState> {
    if side == Side::TwoSided {
        return Err(Error::Domain("Z-system states are one-sided".into()));
    }
    let n = sample.n();
    let theta = solve_location(sample, score)?.theta_hat;
    let bp = location_bp(sample, score, theta, eta, side)?;
    let k =
        bp.m.ok_or_else(|| Error::Domain(format!("eta = {eta} is not reached by any m")))?;
    Ok(ZState {
        theta,
        eta,
        q: gap_point(sample.sorted(), trim_index(n, k, side))?,
        epsilon: k as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn huber() -> ScoreFamily<f64> {
        ScoreFamily::huber(1.345)
    }

    fn normal() -> PopulationModel {
        PopulationModel::standard_normal()
    }

    #[test]
    fn location_by_symmetry() {
        let t = population_location(&PopulationModel::normal(2.5, 3.0).unwrap(), &huber()).unwrap();
        assert!((t - 2.5).abs() < 1e-9);
        let u =
            population_location(&PopulationModel::uniform(0.0, 1.0).unwrap(), &huber()).unwrap();
        assert!((u - 0.5).abs() < 1e-9);
    }

    #[test]
    fn mixture_location_matches_quadrature_oracle() {
        let mix = PopulationModel::mixture(vec![
            (0.9, normal()),
            (0.1, PopulationModel::normal(5.0, 1.0).unwrap()),
        ])
        .unwrap();
        let t = population_location(&mix, &huber()).unwrap();
        assert!((t - 0.18246985136766414).abs() < 1e-8, "{t}");
    }

    #[test]
    fn huber_normal_sensitivity_and_variance() {
        let eta = population_sensitivity(&normal(), &huber(), 0.1, Side::Plus).unwrap();
        assert!((eta - 0.3306654573087221).abs() < 1e-9, "{eta}");
        let t = variance_terms(&normal(), &huber(), 0.1, Side::Plus).unwrap();
        assert!(
            (t.sandwich - 0.021831376486809075).abs() < 1e-8,
            "{}",
            t.sandwich
        );
        assert!((t.sandwich - t.expanded).abs() < 1e-10);
        let d = sensitivity_slope(&normal(), &huber(), 0.1, Side::Plus).unwrap();
        assert!((d - 3.371406595042231).abs() < 1e-7, "{d}");
    }

    #[test]
    fn h_vanishes_at_root_on_both_sides() {
        let mix = PopulationModel::mixture(vec![
            (0.8, normal()),
            (0.2, PopulationModel::normal(3.0, 0.5).unwrap()),
        ])
        .unwrap();
        for side in [Side::Plus, Side::Minus] {
            for &e in &[0.02, 0.1, 0.25, 0.4] {
                let eta = population_sensitivity(&mix, &huber(), e, side).unwrap();
                assert!(eta > 0.0);
                let h = population_h(&mix, &huber(), e, eta, side).unwrap();
                assert!(h.abs() < 1e-8, "{side} {e} {h}");
            }
        }
    }

    #[test]
    fn symmetric_model_gives_equal_sides() {
        let s = ScoreFamily::logcosh(1.2047);
        let p = variance_terms(&normal(), &s, 0.15, Side::Plus).unwrap();
        let m = variance_terms(&normal(), &s, 0.15, Side::Minus).unwrap();
        assert!((p.eta - m.eta).abs() < 1e-9);
        assert!((p.sandwich - m.sandwich).abs() < 1e-8);
        let bp = asymptotic_variance_bp(&normal(), &s, 0.15, Side::Plus).unwrap();
        let bm = asymptotic_variance_bp(&normal(), &s, 0.15, Side::Minus).unwrap();
        assert!((bp - bm).abs() < 1e-8);
    }

    #[test]
    fn curve_matches_roots_and_increases() {
        let c = maxbias_curve(&normal(), &huber(), 0.3, 0.05).unwrap();
        for i in 0..c.len() {
            let e = c.epsilons[i];
            let r = population_sensitivity(&normal(), &huber(), e, Side::Plus).unwrap();
            assert!(
                (c.eta_plus[i] - r).abs() < 1e-6,
                "{e}: {} vs {r}",
                c.eta_plus[i]
            );
            if i > 0 {
                assert!(c.eta_plus[i] > c.eta_plus[i - 1]);
                assert!(c.eta_minus[i] > c.eta_minus[i - 1]);
            }
        }
    }

    #[test]
    fn skewed_model_sides_differ() {
        let mix = PopulationModel::mixture(vec![
            (0.85, normal()),
            (0.15, PopulationModel::normal(4.0, 1.0).unwrap()),
        ])
        .unwrap();
        let p = population_sensitivity(&mix, &huber(), 0.2, Side::Plus).unwrap();
        let m = population_sensitivity(&mix, &huber(), 0.2, Side::Minus).unwrap();
        assert!((p - m).abs() > 1e-3);
        let c = maxbias_curve(&mix, &huber(), 0.2, 0.1).unwrap();
        assert!((c.eta_plus[1] - p).abs() < 1e-6);
        assert!((c.eta_minus[1] - m).abs() < 1e-6);
    }

    #[test]
    fn bp_round_trip_and_slope() {
        let eta = population_sensitivity(&normal(), &huber(), 0.15, Side::Plus).unwrap();
        let e = population_bp(&normal(), &huber(), eta, Side::Plus).unwrap();
        assert!((e - 0.15).abs() < 1e-8);
        let t = variance_terms(&normal(), &huber(), 0.15, Side::Plus).unwrap();
        let s2 = asymptotic_variance_bp(&normal(), &huber(), 0.15, Side::Plus).unwrap();
        let d = sensitivity_slope(&normal(), &huber(), 0.15, Side::Plus).unwrap();
        assert!(((s2 / t.sandwich).sqrt() - 1.0 / d).abs() < 1e-8);
        assert!(population_bp(&normal(), &huber(), 1e3, Side::Plus).is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(population_sensitivity(&normal(), &huber(), 0.0, Side::Plus).is_err());
        assert!(population_sensitivity(&normal(), &huber(), 0.4995, Side::Plus).is_err());
        assert!(
            population_sensitivity(&normal(), &ScoreFamily::identity(), 0.1, Side::Plus).is_err()
        );
        assert!(maxbias_curve(&normal(), &huber(), 0.6, 0.1).is_err());
    }

    #[test]
    fn zsystem_identifications() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = 1.345;
        for _ in 0..20 {
            let xs = normal().sample_n(50, &mut rng);
            let s = Sample::new(xs).unwrap();
            for side in [Side::Plus, Side::Minus] {
                let st = sensitivity_state(&s, &huber(), 5, side).unwrap();
                let r = zsystem_residual_sample(&s, &st, side, &huber());
                let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(norm < 1e-8, "{r:?}");
                let bs = breakdown_state(&s, &huber(), 0.4, side).unwrap();
                let r = zsystem_residual_sample(&s, &bs, side, &huber());
                assert!(r[0].abs() < 1e-8 && r[2].abs() < 1e-12);
                assert!(r[1].abs() <= 2.0 * b / 50.0 + 1e-12, "{r:?}");
                let wrong = ZState {
                    eta: st.eta + 0.5,
                    ..st
                };
                let r = zsystem_residual_sample(&s, &wrong, side, &huber());
                assert!(r[1].abs() > 1e-3);
            }
        }
    }
}
