//! Population distributions and quadrature in the probability scale.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{tol, Error, Result};

type Curve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied distribution given by its CDF, density and quantile.
#[derive(Clone)]
pub struct CustomModel {
    pub name: String,
    pub cdf: Curve,
    pub density: Curve,
    pub quantile: Curve,
}

impl fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomModel({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum PopulationModel {
    Normal { mu: f64, sigma: f64 },
    Uniform { lo: f64, hi: f64 },
    Cauchy { loc: f64, scale: f64 },
    Mixture(Vec<(f64, PopulationModel)>),
    Custom(CustomModel),
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(g: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c);
    let mut k = WGK[7] * fc;
    let mut gs = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = g(c - dx) + g(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            gs += WG[j / 2] * s;
        }
    }
    (k * h, ((k - gs) * h).abs())
}

/// Adaptive Gauss–Kronrod (7, 15) integration of `g` over `[a, b]`.
pub fn integrate(g: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    let mut err_total = 0.0;
    let mut unresolved = 0.0;
    let width = b - a;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = kronrod(&g, lo, hi);
        if !v.is_finite() {
            return Err(Error::Numeric {
                what: "non-finite integrand".into(),
                residual: f64::NAN,
            });
        }
        let allowed = abs_tol * (hi - lo) / width;
        if e <= allowed.max(1e-15 * v.abs()) || hi - lo < 1e-15 {
            total += v;
            err_total += e;
        } else if depth >= 48 {
            total += v;
            unresolved += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    if unresolved > 1e3 * abs_tol.max(1e-10) {
        return Err(Error::Numeric {
            what: "quadrature did not converge".into(),
            residual: unresolved + err_total,
        });
    }
    Ok(total)
}

impl PopulationModel {
    pub fn standard_normal() -> Self {
        PopulationModel::Normal {
            mu: 0.0,
            sigma: 1.0,
        }
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(
                "normal needs finite mean and positive sd".into(),
            ));
        }
        Ok(PopulationModel::Normal { mu, sigma })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain("uniform needs lo < hi".into()));
        }
        Ok(PopulationModel::Uniform { lo, hi })
    }

    pub fn cauchy(loc: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !loc.is_finite() {
            return Err(Error::Domain("cauchy needs positive scale".into()));
        }
        Ok(PopulationModel::Cauchy { loc, scale })
    }

    pub fn mixture(parts: Vec<(f64, PopulationModel)>) -> Result<Self> {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if parts.is_empty() || parts.iter().any(|p| !(p.0 > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(
                "mixture weights must be positive and sum to one".into(),
            ));
        }
        Ok(PopulationModel::Mixture(parts))
    }

    /// Parses `normal`, `normal:mu:sigma`, `uniform:lo:hi`, `cauchy:loc:scale`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize, d: f64| -> Result<f64> {
            match parts.get(i) {
                None => Ok(d),
                Some(p) => p
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Domain(format!("bad model parameter '{p}'"))),
            }
        };
        match parts[0].trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Self::normal(num(1, 0.0)?, num(2, 1.0)?),
            "uniform" => Self::uniform(num(1, 0.0)?, num(2, 1.0)?),
            "cauchy" => Self::cauchy(num(1, 0.0)?, num(2, 1.0)?),
            other => Err(Error::Domain(format!("unknown model '{other}'"))),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            PopulationModel::Normal { mu, sigma } => {
                if x == f64::INFINITY {
                    1.0
                } else if x == f64::NEG_INFINITY {
                    0.0
                } else {
                    std_normal().cdf((x - mu) / sigma)
                }
            }
            PopulationModel::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            PopulationModel::Cauchy { loc, scale } => 0.5 + ((x - loc) / scale).atan() / PI,
            PopulationModel::Mixture(parts) => parts.iter().map(|(w, m)| w * m.cdf(x)).sum(),
            PopulationModel::Custom(c) => (c.cdf)(x),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            PopulationModel::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
            PopulationModel::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            PopulationModel::Cauchy { loc, scale } => {
                let z = (x - loc) / scale;
                1.0 / (PI * scale * (1.0 + z * z))
            }
            PopulationModel::Mixture(parts) => parts.iter().map(|(w, m)| w * m.density(x)).sum(),
            PopulationModel::Custom(c) => (c.density)(x),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.support().0;
        }
        if u >= 1.0 {
            return self.support().1;
        }
        match self {
            PopulationModel::Normal { mu, sigma } => mu + sigma * std_normal().inverse_cdf(u),
            PopulationModel::Uniform { lo, hi } => lo + u * (hi - lo),
            PopulationModel::Cauchy { loc, scale } => loc + scale * (PI * (u - 0.5)).tan(),
            PopulationModel::Mixture(parts) => {
                let lo0 = parts
                    .iter()
                    .map(|(_, m)| m.quantile(u))
                    .fold(f64::INFINITY, f64::min);
                let hi0 = parts
                    .iter()
                    .map(|(_, m)| m.quantile(u))
                    .fold(f64::NEG_INFINITY, f64::max);
                let (mut lo, mut hi) = (lo0, hi0);
                if lo == hi {
                    return lo;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.cdf(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
            PopulationModel::Custom(c) => (c.quantile)(u),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            PopulationModel::Uniform { lo, hi } => (*lo, *hi),
            PopulationModel::Mixture(parts) => {
                parts
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, m)| {
                        let (l, h) = m.support();
                        (a.min(l), b.max(h))
                    })
            }
            PopulationModel::Custom(c) => ((c.quantile)(0.0), (c.quantile)(1.0)),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Center of symmetry, if the model is symmetric.
    pub fn symmetry_center(&self) -> Option<f64> {
        match self {
            PopulationModel::Normal { mu, .. } => Some(*mu),
            PopulationModel::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            PopulationModel::Cauchy { loc, .. } => Some(*loc),
            _ => None,
        }
    }

    pub fn variance(&self) -> Result<f64> {
        match self {
            PopulationModel::Normal { sigma, .. } => Ok(sigma * sigma),
            PopulationModel::Uniform { lo, hi } => Ok((hi - lo).powi(2) / 12.0),
            PopulationModel::Cauchy { .. } => Err(Error::Domain("cauchy has no variance".into())),
            PopulationModel::Mixture(parts) => {
                let mean = self.mean()?;
                let mut v = 0.0;
                for (w, m) in parts {
                    let mm = m.mean()?;
                    v += w * (m.variance()? + (mm - mean).powi(2));
                }
                Ok(v)
            }
            PopulationModel::Custom(_) => {
                let mean = self.mean()?;
                self.expect(|x| (x - mean).powi(2), &[])
            }
        }
    }

    pub fn mean(&self) -> Result<f64> {
        match self {
            PopulationModel::Normal { mu, .. } => Ok(*mu),
            PopulationModel::Uniform { lo, hi } => Ok(0.5 * (lo + hi)),
            PopulationModel::Cauchy { .. } => Err(Error::Domain("cauchy has no mean".into())),
            PopulationModel::Mixture(parts) => {
                let mut s = 0.0;
                for (w, m) in parts {
                    s += w * m.mean()?;
                }
                Ok(s)
            }
            PopulationModel::Custom(_) => self.expect(|x| x, &[]),
        }
    }

    /// E[g(X)]; `kinks` are points where `g` is not smooth.
    pub fn expect(&self, g: impl Fn(f64) -> f64, kinks: &[f64]) -> Result<f64> {
        self.integrate_range(g, f64::NEG_INFINITY, f64::INFINITY, kinks)
    }

    /// ∫_{lo}^{hi} g dF, computed as ∫ g(Q(u)) du over `[F(lo), F(hi)]`.
    pub fn integrate_range(
        &self,
        g: impl Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        kinks: &[f64],
    ) -> Result<f64> {
        self.integrate_dyn(&g, lo, hi, kinks)
    }

    fn integrate_dyn(
        &self,
        g: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        kinks: &[f64],
    ) -> Result<f64> {
        if !(hi > lo) {
            return Ok(0.0);
        }
        if let PopulationModel::Mixture(parts) = self {
            let mut s = 0.0;
            for (w, m) in parts {
                s += w * m.integrate_dyn(g, lo, hi, kinks)?;
            }
            return Ok(s);
        }
        let ua = self.cdf(lo);
        let ub = self.cdf(hi);
        let mut cuts = vec![ua];
        let mut inner: Vec<f64> = kinks
            .iter()
            .filter(|k| k.is_finite() && **k > lo && **k < hi)
            .map(|&k| self.cdf(k))
            .collect();
        inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.extend(inner);
        cuts.push(ub);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                total += integrate(
                    |u| g(self.quantile(u.clamp(1e-300, 1.0 - f64::EPSILON))),
                    w[0],
                    w[1],
                    tol::QUAD_ABS,
                )?;
            }
        }
        Ok(total)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            PopulationModel::Normal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + sigma * z
            }
            PopulationModel::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            PopulationModel::Cauchy { loc, scale } => {
                let u: f64 = rng.random();
                loc + scale * (PI * (u - 0.5)).tan()
            }
            PopulationModel::Mixture(parts) => {
                let mut u: f64 = rng.random();
                for (w, m) in parts {
                    if u < *w {
                        return m.sample(rng);
                    }
                    u -= w;
                }
                parts.last().unwrap().1.sample(rng)
            }
            PopulationModel::Custom(c) => (c.quantile)(rng.random::<f64>()),
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn models() -> Vec<PopulationModel> {
        vec![
            PopulationModel::standard_normal(),
            PopulationModel::normal(1.5, 2.0).unwrap(),
            PopulationModel::uniform(0.0, 1.0).unwrap(),
            PopulationModel::cauchy(0.0, 1.0).unwrap(),
            PopulationModel::mixture(vec![
                (0.9, PopulationModel::standard_normal()),
                (0.1, PopulationModel::normal(5.0, 1.0).unwrap()),
            ])
            .unwrap(),
        ]
    }

    #[test]
    fn quantile_inverts_cdf() {
        for m in models() {
            for i in 1..40 {
                let u = i as f64 / 40.0;
                let x = m.quantile(u);
                assert!((m.cdf(x) - u).abs() < 1e-9, "{m:?} at {u}");
                let back = m.quantile(m.cdf(x));
                assert!((back - x).abs() < 1e-8 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn density_nonnegative_and_cdf_monotone() {
        for m in models() {
            let mut prev = 0.0;
            for i in -200..=200 {
                let x = i as f64 * 0.05;
                assert!(m.density(x) >= 0.0);
                let c = m.cdf(x);
                assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn density_integrates_to_cdf_differences() {
        for m in models() {
            let v = integrate(|x| m.density(x), -1.0, 0.7, 1e-12).unwrap();
            assert!((v - (m.cdf(0.7) - m.cdf(-1.0))).abs() < 1e-9);
        }
    }

    #[test]
    fn normal_moments_by_quadrature() {
        let m = PopulationModel::standard_normal();
        let e2 = m.expect(|x| x * x, &[]).unwrap();
        assert!((e2 - 1.0).abs() < 1e-8);
        let e4 = m.expect(|x| x.powi(4), &[]).unwrap();
        assert!((e4 - 3.0).abs() < 1e-6);
        let tail = m.integrate_range(|_| 1.0, 1.0, f64::INFINITY, &[]).unwrap();
        assert!((tail - (1.0 - m.cdf(1.0))).abs() < 1e-12);
    }

    #[test]
    fn huber_fisher_constant_at_normal() {
        let m = PopulationModel::standard_normal();
        let d: f64 = 1.345;
        let b = m.expect(|x| x.clamp(-d, d).powi(2), &[-d, d]).unwrap();
        assert!((b - 0.7101645482588023).abs() < 1e-10);
    }

    #[test]
    fn sampling_is_seeded() {
        let m = models()[4].clone();
        let a = m.sample_n(50, &mut ChaCha8Rng::seed_from_u64(3));
        let b = m.sample_n(50, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn parse_models() {
        assert!(matches!(
            PopulationModel::parse("normal").unwrap(),
            PopulationModel::Normal { .. }
        ));
        assert!(matches!(
            PopulationModel::parse("uniform:0:2").unwrap(),
            PopulationModel::Uniform { lo, hi } if lo == 0.0 && hi == 2.0
        ));
        assert!(PopulationModel::parse("gamma").is_err());
    }
}
