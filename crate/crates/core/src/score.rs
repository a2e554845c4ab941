//! Location scores ψ and scale scores χ = ψ² − b.

use std::fmt;
use std::str::FromStr;

use crate::model::PopulationModel;
use crate::{lit, to_f64, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreKind {
    Huber,
    LogCosh,
    SelfConcordant,
    Identity,
    Sign,
    Tabulated,
}

impl ScoreKind {
    pub fn name(self) -> &'static str {
        match self {
            ScoreKind::Huber => "huber",
            ScoreKind::LogCosh => "logcosh",
            ScoreKind::SelfConcordant => "selfconcordant",
            ScoreKind::Identity => "identity",
            ScoreKind::Sign => "sign",
            ScoreKind::Tabulated => "tabulated",
        }
    }

    /// Tuning constant giving 95% efficiency at the standard normal.
    pub fn default_delta(self) -> f64 {
        match self {
            ScoreKind::Huber => 1.345,
            ScoreKind::LogCosh => 1.2047,
            ScoreKind::SelfConcordant => 1.4811,
            _ => 1.0,
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "huber" => Ok(ScoreKind::Huber),
            "logcosh" => Ok(ScoreKind::LogCosh),
            "selfconcordant" | "sc" | "pseudohuber" => Ok(ScoreKind::SelfConcordant),
            "identity" | "mean" => Ok(ScoreKind::Identity),
            "sign" | "median" => Ok(ScoreKind::Sign),
            "tabulated" => Ok(ScoreKind::Tabulated),
            other => Err(Error::Domain(format!("unknown score '{other}'"))),
        }
    }
}

/// Convention for the a.e. derivative of the Huber score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivConvention {
    /// ψ′(t) = I{|t| ≤ δ}
    #[default]
    Indicator,
    /// ψ′(t) = δ·I{|t| ≤ δ}
    DeltaScaled,
}

#[derive(Debug, Clone, PartialEq)]
struct Table<F> {
    knots: Vec<F>,
    values: Vec<F>,
}

/// A monotone, odd location score with its analytic metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreFamily<F> {
    kind: ScoreKind,
    delta: F,
    convention: DerivConvention,
    table: Option<Table<F>>,
}

impl<F: Real> ScoreFamily<F> {
    pub fn new(kind: ScoreKind, delta: F) -> Result<Self> {
        if kind == ScoreKind::Tabulated {
            return Err(Error::Domain("use ScoreFamily::tabulated".into()));
        }
        if !(delta > F::zero()) || !delta.is_finite() {
            return Err(Error::Domain(format!(
                "delta must be positive, got {delta}"
            )));
        }
        Ok(Self {
            kind,
            delta,
            convention: DerivConvention::Indicator,
            table: None,
        })
    }

    pub fn huber(delta: F) -> Self {
        Self::new(ScoreKind::Huber, delta).expect("valid delta")
    }

    pub fn logcosh(delta: F) -> Self {
        Self::new(ScoreKind::LogCosh, delta).expect("valid delta")
    }

    pub fn self_concordant(delta: F) -> Self {
        Self::new(ScoreKind::SelfConcordant, delta).expect("valid delta")
    }

    pub fn identity() -> Self {
        Self::new(ScoreKind::Identity, F::one()).expect("valid delta")
    }

    pub fn sign() -> Self {
        Self::new(ScoreKind::Sign, F::one()).expect("valid delta")
    }

    /// Piecewise-linear odd score through `(knots[k], values[k])` on the
    /// nonnegative half line, constant beyond the last knot.
    pub fn tabulated(knots: Vec<F>, values: Vec<F>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::Domain(
                "tabulated score needs matching knots/values".into(),
            ));
        }
        if knots[0] != F::zero() || values[0] != F::zero() {
            return Err(Error::Domain("tabulated score must start at (0, 0)".into()));
        }
        for w in knots.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::Domain("knots must be strictly increasing".into()));
            }
        }
        for w in values.windows(2) {
            if w[1] < w[0] || !w[1].is_finite() {
                return Err(Error::Domain("values must be nondecreasing".into()));
            }
        }
        Ok(Self {
            kind: ScoreKind::Tabulated,
            delta: *knots.last().unwrap(),
            convention: DerivConvention::Indicator,
            table: Some(Table { knots, values }),
        })
    }

    /// Family of the given kind at its 95%-efficiency tuning constant.
    pub fn standard(kind: ScoreKind) -> Result<Self> {
        Self::new(kind, lit(kind.default_delta()))
    }

    pub fn with_convention(mut self, convention: DerivConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn delta(&self) -> F {
        self.delta
    }

    pub fn convention(&self) -> DerivConvention {
        self.convention
    }

    /// Same family in another scalar type.
    pub fn cast<G: Real>(&self) -> ScoreFamily<G> {
        ScoreFamily {
            kind: self.kind,
            delta: lit(to_f64(self.delta)),
            convention: self.convention,
            table: self.table.as_ref().map(|t| Table {
                knots: t.knots.iter().map(|&k| lit(to_f64(k))).collect(),
                values: t.values.iter().map(|&v| lit(to_f64(v))).collect(),
            }),
        }
    }

    pub fn psi_pos_inf(&self) -> F {
        match self.kind {
            ScoreKind::Huber | ScoreKind::LogCosh | ScoreKind::SelfConcordant => self.delta,
            ScoreKind::Identity => F::infinity(),
            ScoreKind::Sign => F::one(),
            ScoreKind::Tabulated => *self.table.as_ref().unwrap().values.last().unwrap(),
        }
    }

    pub fn psi_neg_inf(&self) -> F {
        -self.psi_pos_inf()
    }

    pub fn psi_max(&self) -> F {
        self.psi_pos_inf()
    }

    pub fn is_bounded(&self) -> bool {
        self.psi_pos_inf().is_finite()
    }

    pub fn lipschitz(&self) -> F {
        match self.kind {
            ScoreKind::Huber
            | ScoreKind::LogCosh
            | ScoreKind::SelfConcordant
            | ScoreKind::Identity => F::one(),
            ScoreKind::Sign => F::infinity(),
            ScoreKind::Tabulated => {
                let t = self.table.as_ref().unwrap();
                t.knots
                    .windows(2)
                    .zip(t.values.windows(2))
                    .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
                    .fold(F::zero(), F::max)
            }
        }
    }

    /// ψ(t), with ±∞ mapped to the limits of the score.
    pub fn psi(&self, t: F) -> F {
        if t.is_nan() {
            return t;
        }
        if t == F::infinity() {
            return self.psi_pos_inf();
        }
        if t == F::neg_infinity() {
            return self.psi_neg_inf();
        }
        let d = self.delta;
        match self.kind {
            ScoreKind::Huber => t.max(-d).min(d),
            ScoreKind::LogCosh => d * (t / d).tanh(),
            ScoreKind::SelfConcordant => {
                let u = t / d;
                let two = lit::<F>(2.0);
                let s = (F::one() + lit::<F>(4.0) * u * u).sqrt();
                d * two * u / (s + F::one())
            }
            ScoreKind::Identity => t,
            ScoreKind::Sign => {
                if t > F::zero() {
                    F::one()
                } else if t < F::zero() {
                    -F::one()
                } else {
                    F::zero()
                }
            }
            ScoreKind::Tabulated => {
                let v = self.table_abs(t.abs());
                if t < F::zero() {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// ψ(t) with a grid check for tabulated scores.
    pub fn evaluate(&self, t: F) -> Result<F> {
        if self.kind == ScoreKind::Tabulated && t.is_finite() && t.abs() > self.delta {
            return Err(Error::Extrapolation(to_f64(t)));
        }
        Ok(self.psi(t))
    }

    fn table_abs(&self, a: F) -> F {
        let t = self.table.as_ref().unwrap();
        let k = &t.knots;
        let v = &t.values;
        if a >= *k.last().unwrap() {
            return *v.last().unwrap();
        }
        let j = k.partition_point(|&x| x <= a) - 1;
        let w = (a - k[j]) / (k[j + 1] - k[j]);
        v[j] + w * (v[j + 1] - v[j])
    }

    fn table_slope_abs(&self, a: F) -> F {
        let t = self.table.as_ref().unwrap();
        let k = &t.knots;
        if a > *k.last().unwrap() {
            return F::zero();
        }
        let j = (k.partition_point(|&x| x <= a).max(1) - 1).min(k.len() - 2);
        (t.values[j + 1] - t.values[j]) / (k[j + 1] - k[j])
    }

    /// A.e. derivative ψ′(t) under the configured convention.
    pub fn derivative(&self, t: F) -> F {
        if t.is_infinite() {
            return match self.kind {
                ScoreKind::Identity => F::one(),
                _ => F::zero(),
            };
        }
        let d = self.delta;
        match self.kind {
            ScoreKind::Huber => {
                let unit = match self.convention {
                    DerivConvention::Indicator => F::one(),
                    DerivConvention::DeltaScaled => d,
                };
                if t.abs() <= d {
                    unit
                } else {
                    F::zero()
                }
            }
            ScoreKind::LogCosh => {
                let c = (t / d).cosh();
                if c.is_infinite() {
                    F::zero()
                } else {
                    F::one() / (c * c)
                }
            }
            ScoreKind::SelfConcordant => {
                let u = t / d;
                let s = (F::one() + lit::<F>(4.0) * u * u).sqrt();
                lit::<F>(2.0) / (s * (s + F::one()))
            }
            ScoreKind::Identity => F::one(),
            ScoreKind::Sign => F::zero(),
            ScoreKind::Tabulated => self.table_slope_abs(t.abs()),
        }
    }

    /// ψ′(0).
    pub fn deriv_at_zero(&self) -> F {
        self.derivative(F::zero())
    }

    /// Loss ρ with ρ′ = ψ and ρ(0) = 0.
    pub fn rho(&self, t: F) -> F {
        let d = self.delta;
        let half = lit::<F>(0.5);
        match self.kind {
            ScoreKind::Huber => {
                if t.abs() <= d {
                    half * t * t
                } else {
                    d * (t.abs() - half * d)
                }
            }
            ScoreKind::LogCosh => {
                let u = (t / d).abs();
                d * d * (u + (-(lit::<F>(2.0)) * u).exp().ln_1p() - lit::<F>(2.0).ln())
            }
            ScoreKind::SelfConcordant => {
                let u = t / d;
                let s = (F::one() + lit::<F>(4.0) * u * u).sqrt();
                d * d * half * (s - F::one() + (lit::<F>(2.0) / (s + F::one())).ln())
            }
            ScoreKind::Identity => half * t * t,
            ScoreKind::Sign => t.abs(),
            ScoreKind::Tabulated => {
                let tb = self.table.as_ref().unwrap();
                let a = t.abs();
                let mut acc = F::zero();
                for j in 0..tb.knots.len() - 1 {
                    let (k0, k1) = (tb.knots[j], tb.knots[j + 1]);
                    if a <= k0 {
                        break;
                    }
                    let hi = a.min(k1);
                    acc = acc + half * (hi - k0) * (tb.values[j] + self.table_abs(hi));
                }
                let last = *tb.knots.last().unwrap();
                if a > last {
                    acc = acc + (a - last) * *tb.values.last().unwrap();
                }
                acc
            }
        }
    }

    /// Points where ψ′ is discontinuous.
    pub fn kinks(&self) -> Vec<F> {
        match self.kind {
            ScoreKind::Huber => vec![-self.delta, self.delta],
            ScoreKind::Sign => vec![F::zero()],
            ScoreKind::Tabulated => {
                let k = &self.table.as_ref().unwrap().knots;
                let mut v: Vec<F> = k.iter().skip(1).map(|&x| -x).collect();
                v.extend(k.iter().copied());
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v
            }
            _ => Vec::new(),
        }
    }

    /// Δ(t) = sup_x |ψ′(x + t) − ψ′(x)|.
    pub fn shift_delta(&self, t: F) -> F {
        let t = t.abs();
        if t == F::zero() {
            return F::zero();
        }
        if t.is_infinite() {
            return self.deriv_at_zero();
        }
        match self.kind {
            ScoreKind::Identity | ScoreKind::Sign => F::zero(),
            ScoreKind::Huber => self.deriv_at_zero(),
            ScoreKind::Tabulated => {
                let mut pts: Vec<F> = Vec::new();
                for k in self.kinks() {
                    pts.push(k);
                    pts.push(k - t);
                }
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pts.dedup();
                let mut best = F::zero();
                let probe = |x: F| (self.derivative(x + t) - self.derivative(x)).abs();
                for w in pts.windows(2) {
                    best = best.max(probe((w[0] + w[1]) / lit(2.0)));
                }
                if let (Some(&a), Some(&b)) = (pts.first(), pts.last()) {
                    best = best.max(probe(a - F::one())).max(probe(b + F::one()));
                }
                best
            }
            ScoreKind::LogCosh | ScoreKind::SelfConcordant => {
                // |ψ′(u − t/2) − ψ′(u + t/2)| over u ≥ 0
                let half = t / lit(2.0);
                let g = |u: F| self.derivative(u - half) - self.derivative(u + half);
                let span = half + lit::<F>(20.0) * self.delta;
                let grid = 4000usize;
                let step = span / lit(grid as f64);
                let mut best_i = 0usize;
                let mut best = F::neg_infinity();
                for i in 0..=grid {
                    let v = g(step * lit(i as f64));
                    if v > best {
                        best = v;
                        best_i = i;
                    }
                }
                let lo = step * lit(best_i.saturating_sub(1) as f64);
                let hi = step * lit((best_i + 1) as f64);
                let (mut a, mut b) = (lo, hi);
                let r = lit::<F>(0.5 * (5f64.sqrt() - 1.0));
                for _ in 0..120 {
                    let c = b - r * (b - a);
                    let d = a + r * (b - a);
                    if g(c) > g(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                best.max(g((a + b) / lit(2.0))).max(F::zero())
            }
        }
    }
}

/// χ(t) = ψ(t)² − b for a base location score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleScoreFamily<F> {
    base: ScoreFamily<F>,
    b: F,
}

impl<F: Real> ScaleScoreFamily<F> {
    pub fn new(base: ScoreFamily<F>, b: F) -> Result<Self> {
        if !(b > F::zero()) {
            return Err(Error::Domain(format!(
                "fisher constant must be positive, got {b}"
            )));
        }
        let top = base.psi_max() * base.psi_max();
        if !(top > b) {
            return Err(Error::Domain(format!(
                "chi(inf) = {} must be positive",
                to_f64(top - b)
            )));
        }
        Ok(Self { base, b })
    }

    /// Fisher constant chosen for consistency at the standard normal.
    pub fn normal_consistent(base: ScoreFamily<F>) -> Result<Self> {
        let b = fisher_constant(&base, &PopulationModel::standard_normal())?;
        Self::new(base, b)
    }

    pub fn base(&self) -> &ScoreFamily<F> {
        &self.base
    }

    pub fn fisher_constant(&self) -> F {
        self.b
    }

    pub fn chi(&self, t: F) -> F {
        let p = self.base.psi(t);
        p * p - self.b
    }

    pub fn chi_pos_inf(&self) -> F {
        self.base.psi_max() * self.base.psi_max() - self.b
    }

    pub fn chi_at_zero(&self) -> F {
        -self.b
    }

    pub fn cast<G: Real>(&self) -> ScaleScoreFamily<G> {
        ScaleScoreFamily {
            base: self.base.cast(),
            b: lit(to_f64(self.b)),
        }
    }
}

/// b = E[ψ(Z)²] under `model`.
pub fn fisher_constant<F: Real>(family: &ScoreFamily<F>, model: &PopulationModel) -> Result<F> {
    let fam = family.cast::<f64>();
    let kinks = fam.kinks();
    let b = model.expect(
        |x| {
            let p = fam.psi(x);
            p * p
        },
        &kinks,
    )?;
    Ok(lit(b))
}

/// Asymptotic efficiency E[ψ′]² / (E[ψ²]·Var) relative to the mean.
pub fn efficiency(family: &ScoreFamily<f64>, model: &PopulationModel) -> Result<f64> {
    let fam = family.clone().with_convention(DerivConvention::Indicator);
    let kinks = fam.kinks();
    let a = model.expect(|x| fam.derivative(x), &kinks)?;
    let b = model.expect(|x| fam.psi(x).powi(2), &kinks)?;
    let var = model.variance()?;
    Ok(a * a * var / b)
}

/// δ giving the requested asymptotic efficiency at `model`.
pub fn tune_for_efficiency(
    kind: ScoreKind,
    target_eff: f64,
    model: &PopulationModel,
) -> Result<f64> {
    if !(target_eff > 0.0 && target_eff < 1.0) {
        return Err(Error::Domain(format!(
            "target efficiency must lie in (0,1), got {target_eff}"
        )));
    }
    if !matches!(
        kind,
        ScoreKind::Huber | ScoreKind::LogCosh | ScoreKind::SelfConcordant
    ) {
        return Err(Error::Domain(format!("cannot tune {kind}")));
    }
    let eff = |d: f64| efficiency(&ScoreFamily::new(kind, d).expect("positive delta"), model);
    let (mut lo, mut hi) = (1e-3, 1.0);
    while eff(hi)? < target_eff {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Numeric {
                what: "efficiency target not bracketed".into(),
                residual: target_eff - eff(hi)?,
            });
        }
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if eff(mid)? < target_eff {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn families() -> Vec<ScoreFamily<f64>> {
        vec![
            ScoreFamily::<f64>::huber(1.345),
            ScoreFamily::<f64>::logcosh(1.2047),
            ScoreFamily::<f64>::self_concordant(1.4811),
            ScoreFamily::identity(),
            ScoreFamily::sign(),
            ScoreFamily::tabulated(vec![0.0, 0.5, 1.5, 3.0], vec![0.0, 0.5, 1.0, 1.2]).unwrap(),
        ]
    }

    #[test]
    fn odd_and_monotone_on_grid() {
        for f in families() {
            let mut prev = f64::NEG_INFINITY;
            for i in -400..=400 {
                let t = i as f64 * 0.025;
                assert!((f.psi(t) + f.psi(-t)).abs() < 1e-12, "{:?}", f.kind());
                assert!(f.psi(t) >= prev);
                prev = f.psi(t);
            }
            assert_eq!(f.psi(0.0), 0.0);
        }
    }

    #[test]
    fn limits_at_infinity() {
        assert_eq!(ScoreFamily::<f64>::huber(1.345).psi(f64::INFINITY), 1.345);
        assert_eq!(
            ScoreFamily::<f64>::huber(1.345).psi(f64::NEG_INFINITY),
            -1.345
        );
        assert_eq!(ScoreFamily::<f64>::identity().psi_pos_inf(), f64::INFINITY);
        assert_eq!(ScoreFamily::<f64>::sign().psi(f64::INFINITY), 1.0);
        assert_eq!(ScoreFamily::<f64>::logcosh(1.2047).psi_max(), 1.2047);
    }

    #[test]
    fn logcosh_value_matches_loss_difference() {
        let f = ScoreFamily::<f64>::logcosh(1.2047);
        let h = 1e-5;
        let fd = (f.rho(0.5 + h) - f.rho(0.5 - h)) / (2.0 * h);
        assert!((f.psi(0.5) - fd).abs() < 1e-8);
        assert!((f.psi(0.5) - 1.2047 * (0.5f64 / 1.2047).tanh()).abs() < 1e-15);
    }

    #[test]
    fn self_concordant_loss_and_score_agree() {
        let f = ScoreFamily::<f64>::self_concordant(1.4811);
        for &t in &[-3.0, -0.7, 0.1, 0.9, 4.0] {
            let h = 1e-5;
            let fd = (f.rho(t + h) - f.rho(t - h)) / (2.0 * h);
            assert!((f.psi(t) - fd).abs() < 1e-8);
        }
        assert!((f.deriv_at_zero() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rescaling_rule() {
        let d = 1.7;
        let lc = ScoreFamily::<f64>::logcosh(d);
        let lc1 = ScoreFamily::<f64>::logcosh(1.0);
        let sc = ScoreFamily::<f64>::self_concordant(d);
        let sc1 = ScoreFamily::<f64>::self_concordant(1.0);
        for i in -100..=100 {
            let t = i as f64 * 0.1;
            assert!((lc.psi(t) - d * lc1.psi(t / d)).abs() < 1e-12);
            assert!((sc.psi(t) - d * sc1.psi(t / d)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for f in families() {
            if matches!(f.kind(), ScoreKind::Sign) {
                continue;
            }
            for &t in &[-2.3, -0.6, 0.2, 0.9, 2.1] {
                let h = 1e-6;
                let fd = (f.psi(t + h) - f.psi(t - h)) / (2.0 * h);
                let d = f.derivative(t);
                assert!(
                    (fd - d).abs() <= 1e-6 * (1.0 + d.abs()),
                    "{:?} at {t}",
                    f.kind()
                );
            }
        }
        let lc = ScoreFamily::<f64>::logcosh(1.2047);
        assert!((lc.derivative(1.0) - 0.5368923534912691).abs() < 1e-12);
    }

    #[test]
    fn huber_conventions() {
        let h = ScoreFamily::<f64>::huber(1.345);
        assert_eq!(h.derivative(0.0), 1.0);
        assert_eq!(h.derivative(2.0 * 1.345), 0.0);
        assert_eq!(h.derivative(1.345), 1.0);
        let hs = h.clone().with_convention(DerivConvention::DeltaScaled);
        assert_eq!(hs.derivative(0.3), 1.345);
    }

    #[test]
    fn derivative_bounded_and_decreasing_in_abs() {
        for f in families().into_iter().take(3) {
            let mut prev = f64::INFINITY;
            for i in 0..400 {
                let t = i as f64 * 0.02;
                let d = f.derivative(t);
                assert!(d >= 0.0 && d <= f.lipschitz() + 1e-15);
                assert!(d <= prev + 1e-15);
                prev = d;
            }
        }
    }

    #[test]
    fn scale_score_values() {
        let chi = ScaleScoreFamily::normal_consistent(ScoreFamily::<f64>::huber(1.345)).unwrap();
        let b = chi.fisher_constant();
        assert!((b - 0.7101645482588023).abs() < 1e-9);
        assert_eq!(chi.chi(0.0), -b);
        assert_eq!(chi.chi(f64::INFINITY), 1.345f64.powi(2) - b);
        assert!((chi.chi(1.345) - (1.345f64.powi(2) - b)).abs() < 1e-15);
        assert_eq!(chi.chi(0.8), chi.chi(-0.8));
        assert!(chi.chi_at_zero() < 0.0 && chi.chi_pos_inf() > 0.0);
    }

    #[test]
    fn fisher_constant_limits() {
        let m = PopulationModel::standard_normal();
        let big: f64 = fisher_constant(&ScoreFamily::<f64>::huber(60.0), &m).unwrap();
        assert!((big - 1.0).abs() < 1e-10);
        let s: f64 = fisher_constant(&ScoreFamily::sign(), &m).unwrap();
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tabulated_extrapolation_is_an_error() {
        let f = ScoreFamily::tabulated(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(f.evaluate(2.0).is_err());
        assert_eq!(f.evaluate(f64::INFINITY).unwrap(), 1.0);
        assert_eq!(f.evaluate(0.5).unwrap(), 0.5);
    }

    #[test]
    fn shift_delta_values() {
        let h = ScoreFamily::<f64>::huber(1.345);
        assert_eq!(h.shift_delta(0.0), 0.0);
        assert_eq!(h.shift_delta(0.1), 1.0);
        let lc = ScoreFamily::<f64>::logcosh(1.0);
        // brute force over a fine grid
        let t = 0.4;
        let mut best = 0.0f64;
        for i in -20000..20000 {
            let x = i as f64 * 0.0005;
            best = best.max((lc.derivative(x + t) - lc.derivative(x)).abs());
        }
        assert!((lc.shift_delta(t) - best).abs() < 1e-6);
    }

    #[test]
    fn tuning_rejects_bad_targets() {
        let m = PopulationModel::standard_normal();
        assert!(tune_for_efficiency(ScoreKind::Huber, 1.0, &m).is_err());
        assert!(tune_for_efficiency(ScoreKind::Sign, 0.5, &m).is_err());
    }

    #[test]
    fn single_precision_scores() {
        let f = ScoreFamily::<f32>::huber(1.345);
        assert_eq!(f.psi(3.0), 1.345f32);
        assert_eq!(f.psi(f32::NEG_INFINITY), -1.345f32);
    }
}
