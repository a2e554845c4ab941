//! M-estimators of location and scale, two-stage estimators and plug-in
//! standard errors.

use crate::root::{zero_interval, RootSelect};
use crate::score::{ScaleScoreFamily, ScoreFamily};
use crate::{lit, tol, Error, Real, Result};

/// A univariate sample kept in input order and sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<F> {
    values: Vec<F>,
    sorted: Vec<F>,
}

fn sort_vec<F: Real>(v: &mut [F]) {
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
}

impl<F: Real> Sample<F> {
    /// Builds a sample; infinite entries are allowed and stand for
    /// contaminations placed at ±∞.
    pub fn new(values: Vec<F>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("sample contains NaN".into()));
        }
        let mut sorted = values.clone();
        sort_vec(&mut sorted);
        Ok(Self { values, sorted })
    }

    pub fn from_f64(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| lit(v)).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn sorted(&self) -> &[F] {
        &self.sorted
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn shifted(&self, c: F) -> Self {
        self.map(|v| v + c).expect("shift keeps sample valid")
    }

    /// Median of the finite values (mean of the middle pair for even n).
    pub fn median(&self) -> F {
        median_sorted(&self.sorted)
    }
}

pub(crate) fn median_sorted<F: Real>(s: &[F]) -> F {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        let (a, b) = (s[n / 2 - 1], s[n / 2]);
        if a.is_infinite() || b.is_infinite() {
            if a == b {
                a
            } else if a.is_infinite() && b.is_infinite() {
                F::zero()
            } else if a.is_infinite() {
                b
            } else {
                a
            }
        } else {
            a + (b - a) / lit(2.0)
        }
    }
}

/// Sample with normalized nonnegative weights, sorted by value.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample<F> {
    sorted_values: Vec<F>,
    weights: Vec<F>,
    cum_weights: Vec<F>,
    uniform: bool,
}

impl<F: Real> WeightedSample<F> {
    /// Pairs values with raw weights, normalizes and sorts by value.
    pub fn new(values: &[F], weights: &[F]) -> Result<Self> {
        if values.is_empty() || values.len() != weights.len() {
            return Err(Error::Domain(
                "values and weights must be nonempty and aligned".into(),
            ));
        }
        if weights.iter().any(|w| !(*w >= F::zero()) || !w.is_finite()) {
            return Err(Error::Domain(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("sample contains NaN".into()));
        }
        let total = weights.iter().fold(F::zero(), |a, &b| a + b);
        if !(total > F::zero()) {
            return Err(Error::Domain("weights sum to zero".into()));
        }
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
        let uniform = weights.iter().all(|&w| w == weights[0]);
        let n = values.len();
        let sorted_values: Vec<F> = idx.iter().map(|&i| values[i]).collect();
        let weights: Vec<F> = if uniform {
            vec![F::one() / lit(n as f64); n]
        } else {
            idx.iter().map(|&i| weights[i] / total).collect()
        };
        let mut cum_weights = Vec::with_capacity(n);
        let mut acc = F::zero();
        for &w in &weights {
            acc = acc + w;
            cum_weights.push(acc);
        }
        if uniform {
            for (k, c) in cum_weights.iter_mut().enumerate() {
                *c = lit::<F>((k + 1) as f64) / lit(n as f64);
            }
        }
        let last = *cum_weights.last().unwrap();
        if (last - F::one()).abs() > lit(1e3 * tol::WEIGHTS) {
            return Err(Error::Domain("weights failed to normalize".into()));
        }
        *cum_weights.last_mut().unwrap() = F::one();
        Ok(Self {
            sorted_values,
            weights,
            cum_weights,
            uniform,
        })
    }

    pub fn uniform(sample: &Sample<F>) -> Self {
        let w = vec![F::one(); sample.n()];
        Self::new(sample.values(), &w).expect("uniform weights are valid")
    }

    pub fn n(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn sorted_values(&self) -> &[F] {
        &self.sorted_values
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    /// Prefix sums W_k = w_1 + … + w_k.
    pub fn cum_weights(&self) -> &[F] {
        &self.cum_weights
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult<F> {
    pub theta_hat: F,
    pub sigma_hat: Option<F>,
    pub se_hat: Option<F>,
    pub residual: F,
}

/// Center used by the scale step of the two-stage estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Centering {
    /// Σχ(x/σ) = 0
    #[default]
    Origin,
    /// Σχ((x − med)/σ) = 0
    Median,
}

fn spread<F: Real>(sorted: &[F]) -> (F, F) {
    let finite: Vec<F> = sorted.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return (F::zero(), F::one());
    }
    let c = median_sorted(&finite);
    let r = *finite.last().unwrap() - finite[0] + F::one();
    (c, r)
}

/// Σ ψ(x_i − θ).
pub fn score_sum<F: Real>(xs: &[F], score: &ScoreFamily<F>, theta: F) -> F {
    psi_sum(xs.iter().map(|&x| score.psi(x - theta)), score, 0)
}

/// Sum of ψ values plus `extra_pos` copies of ψ(∞). Saturated values are
/// counted so that opposite bounds cancel exactly.
pub(crate) fn psi_sum<F: Real>(
    vals: impl Iterator<Item = F>,
    score: &ScoreFamily<F>,
    extra_pos: usize,
) -> F {
    let (pinf, ninf) = (score.psi_pos_inf(), score.psi_neg_inf());
    let (mut kp, mut kn) = (extra_pos as i64, 0i64);
    let mut rest = F::zero();
    for v in vals {
        if v == pinf && pinf.is_finite() {
            kp += 1;
        } else if v == ninf && ninf.is_finite() {
            kn += 1;
        } else {
            rest = rest + v;
        }
    }
    if kp == 0 && kn == 0 {
        return rest;
    }
    let sat = if pinf == -ninf {
        lit::<F>((kp - kn) as f64) * pinf
    } else {
        lit::<F>(kp as f64) * pinf + lit::<F>(kn as f64) * ninf
    };
    rest + sat
}

/// Zero interval of θ ↦ Σψ(x_i − θ).
pub fn location_zero_set<F: Real>(xs: &[F], score: &ScoreFamily<F>) -> (F, F) {
    let mut s = xs.to_vec();
    sort_vec(&mut s);
    let (c, r) = spread(&s);
    zero_interval(|t| score_sum(&s, score, t), c, r)
}

/// Root of the location equation with the given tie-break.
pub fn location_root<F: Real>(xs: &[F], score: &ScoreFamily<F>, select: RootSelect) -> F {
    select.pick(location_zero_set(xs, score))
}

pub fn solve_location<F: Real>(sample: &Sample<F>, score: &ScoreFamily<F>) -> Result<FitResult<F>> {
    solve_location_with(sample, score, RootSelect::Midpoint)
}

pub fn solve_location_with<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    select: RootSelect,
) -> Result<FitResult<F>> {
    let theta = location_root(sample.values(), score, select);
    if theta.is_nan() {
        return Err(Error::Numeric {
            what: "location equation has no finite root".into(),
            residual: f64::NAN,
        });
    }
    Ok(FitResult {
        theta_hat: theta,
        sigma_hat: None,
        se_hat: None,
        residual: score_sum(sample.values(), score, theta),
    })
}

fn weighted_sum<F: Real>(ws: &WeightedSample<F>, score: &ScoreFamily<F>, theta: F) -> F {
    if ws.uniform {
        return score_sum(&ws.sorted_values, score, theta);
    }
    ws.sorted_values
        .iter()
        .zip(&ws.weights)
        .fold(F::zero(), |a, (&x, &w)| a + w * score.psi(x - theta))
}

pub fn solve_location_weighted<F: Real>(
    ws: &WeightedSample<F>,
    score: &ScoreFamily<F>,
) -> Result<FitResult<F>> {
    let support: Vec<F> = ws
        .sorted_values
        .iter()
        .zip(&ws.weights)
        .filter(|(_, w)| **w > F::zero())
        .map(|(x, _)| *x)
        .collect();
    let (c, r) = spread(&support);
    let theta = RootSelect::Midpoint.pick(zero_interval(|t| weighted_sum(ws, score, t), c, r));
    if theta.is_nan() {
        return Err(Error::Numeric {
            what: "weighted location equation has no finite root".into(),
            residual: f64::NAN,
        });
    }
    let residual = if ws.uniform {
        score_sum(&ws.sorted_values, score, theta) / lit(ws.n() as f64)
    } else {
        weighted_sum(ws, score, theta)
    };
    Ok(FitResult {
        theta_hat: theta,
        sigma_hat: None,
        se_hat: None,
        residual,
    })
}

/// Σ χ(x_i / σ).
pub fn scale_sum<F: Real>(xs: &[F], chi: &ScaleScoreFamily<F>, sigma: F) -> F {
    xs.iter().fold(F::zero(), |a, &x| {
        let t = if x == F::zero() { F::zero() } else { x / sigma };
        a + chi.chi(t)
    })
}

/// Root of Σχ(x_i/σ) = 0 over σ ∈ [0, ∞].
///
/// Returns `0` when the equation has no positive root because too many
/// points sit at the origin, `+inf` when infinite entries dominate, and
/// NaN when every point is zero.
pub fn scale_root<F: Real>(xs: &[F], chi: &ScaleScoreFamily<F>) -> F {
    let n = xs.len();
    let zeros = xs.iter().filter(|x| **x == F::zero()).count();
    let infs = xs.iter().filter(|x| x.is_infinite()).count();
    if zeros == n {
        return F::nan();
    }
    let cinf = chi.chi_pos_inf();
    let b = chi.fisher_constant();
    if lit::<F>(infs as f64) * cinf - lit::<F>((n - infs) as f64) * b >= F::zero() {
        return F::infinity();
    }
    if lit::<F>((n - zeros) as f64) * cinf - lit::<F>(zeros as f64) * b <= F::zero() {
        return F::zero();
    }
    let mut abs: Vec<F> = xs
        .iter()
        .filter(|x| x.is_finite() && **x != F::zero())
        .map(|x| x.abs())
        .collect();
    sort_vec(&mut abs);
    let center = if abs.is_empty() {
        F::zero()
    } else {
        median_sorted(&abs).ln()
    };
    let g = |s: F| scale_sum(xs, chi, s.exp());
    let (l, r) = zero_interval(g, center, F::one());
    RootSelect::Midpoint.pick((l, r)).exp()
}

pub fn solve_scale<F: Real>(sample: &Sample<F>, chi: &ScaleScoreFamily<F>) -> Result<FitResult<F>> {
    let sigma = scale_root(sample.values(), chi);
    if sigma.is_nan() {
        return Err(Error::DegenerateScale("all observations are zero".into()));
    }
    if sigma == F::zero() {
        return Err(Error::DegenerateScale(
            "too many zero observations for a positive root".into(),
        ));
    }
    let residual = if sigma.is_finite() {
        scale_sum(sample.values(), chi, sigma)
    } else {
        F::zero()
    };
    Ok(FitResult {
        theta_hat: F::zero(),
        sigma_hat: Some(sigma),
        se_hat: None,
        residual,
    })
}

/// Root of Σψ((x_i − θ)/σ) = 0 for a given scale.
///
/// `σ = 0` yields the median-type limit; `σ = ∞` leaves θ undetermined
/// and returns NaN unless infinite entries pin it.
pub fn two_stage_location<F: Real>(
    xs: &[F],
    score: &ScoreFamily<F>,
    sigma: F,
    select: RootSelect,
) -> F {
    if sigma == F::zero() {
        return location_root(xs, &ScoreFamily::sign(), select);
    }
    if sigma.is_infinite() {
        return F::nan();
    }
    let mut s = xs.to_vec();
    sort_vec(&mut s);
    let (c, r) = spread(&s);
    let g = |t: F| {
        xs.iter()
            .fold(F::zero(), |a, &x| a + score.psi((x - t) / sigma))
    };
    select.pick(zero_interval(g, c, r))
}

/// Scale root with the chosen centering.
pub fn two_stage_scale<F: Real>(xs: &[F], chi: &ScaleScoreFamily<F>, centering: Centering) -> F {
    match centering {
        Centering::Origin => scale_root(xs, chi),
        Centering::Median => {
            let mut s = xs.to_vec();
            sort_vec(&mut s);
            let m = median_sorted(&s);
            let centered: Vec<F> = xs.iter().map(|&x| x - m).collect();
            scale_root(&centered, chi)
        }
    }
}

pub fn solve_two_stage<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    chi: &ScaleScoreFamily<F>,
) -> Result<FitResult<F>> {
    solve_two_stage_with(sample, score, chi, Centering::Origin, RootSelect::Midpoint)
}

pub fn solve_two_stage_with<F: Real>(
    sample: &Sample<F>,
    score: &ScoreFamily<F>,
    chi: &ScaleScoreFamily<F>,
    centering: Centering,
    select: RootSelect,
) -> Result<FitResult<F>> {
    let sigma = two_stage_scale(sample.values(), chi, centering);
    if sigma.is_nan() || sigma == F::zero() {
        return Err(Error::DegenerateScale(
            "scale step has no positive root".into(),
        ));
    }
    if sigma.is_infinite() {
        return Err(Error::DegenerateScale("scale step diverges".into()));
    }
    let theta = two_stage_location(sample.values(), score, sigma, select);
    let residual = sample
        .values()
        .iter()
        .fold(F::zero(), |a, &x| a + score.psi((x - theta) / sigma));
    Ok(FitResult {
        theta_hat: theta,
        sigma_hat: Some(sigma),
        se_hat: None,
        residual,
    })
}

/// sqrt(Σψ(x_i − θ)²) / Σψ′(x_i − θ).
pub fn plugin_se<F: Real>(sample: &Sample<F>, score: &ScoreFamily<F>, theta: F) -> Result<F> {
    plugin_se_raw(sample.values(), score, theta)
}

pub fn plugin_se_raw<F: Real>(xs: &[F], score: &ScoreFamily<F>, theta: F) -> Result<F> {
    let (num, den) = xs.iter().fold((F::zero(), F::zero()), |(a, b), &x| {
        let p = score.psi(x - theta);
        (a + p * p, b + score.derivative(x - theta))
    });
    if !(den > F::zero()) {
        return Err(Error::DegenerateInformation(
            "sum of score derivatives is zero".into(),
        ));
    }
    Ok(num.sqrt() / den)
}

/// Ratio part of the two-stage standard error at (θ, σ).
pub fn two_stage_se_ratio<F: Real>(
    xs: &[F],
    score: &ScoreFamily<F>,
    theta: F,
    sigma: F,
) -> Result<F> {
    let r: Vec<F> = xs.iter().map(|&x| (x - theta) / sigma).collect();
    plugin_se_raw(&r, score, F::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn huber() -> ScoreFamily<f64> {
        ScoreFamily::<f64>::huber(1.345)
    }

    #[test]
    fn location_examples() {
        let s = Sample::<f64>::from_f64(&[-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        assert!(solve_location(&s, &huber()).unwrap().theta_hat.abs() < 1e-15);
        let z = Sample::<f64>::from_f64(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(solve_location(&z, &huber()).unwrap().theta_hat, 0.0);
        let a = Sample::<f64>::from_f64(&[1.0, 2.0, 10.0]).unwrap();
        let f = solve_location(&a, &huber()).unwrap();
        assert!((f.theta_hat - 2.1725).abs() < 1e-9);
        assert!(f.residual.abs() < 1e-10 * 3.0 * 1.345);
        assert!(Sample::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn median_from_sign_score() {
        let s = Sample::<f64>::from_f64(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        let f = solve_location(&s, &ScoreFamily::sign()).unwrap();
        assert!((f.theta_hat - 2.5).abs() < 1e-12);
        let lo = solve_location_with(&s, &ScoreFamily::sign(), RootSelect::Smallest).unwrap();
        let hi = solve_location_with(&s, &ScoreFamily::sign(), RootSelect::Largest).unwrap();
        assert!((lo.theta_hat - 2.0).abs() < 1e-12 && (hi.theta_hat - 3.0).abs() < 1e-12);
    }

    #[test]
    fn scale_examples() {
        let chi = ScaleScoreFamily::normal_consistent(huber()).unwrap();
        let z = Sample::<f64>::from_f64(&[0.0; 4]).unwrap();
        assert!(matches!(
            solve_scale(&z, &chi),
            Err(Error::DegenerateScale(_))
        ));
        let s = Sample::<f64>::from_f64(&[0.3, -1.2, 0.8, 2.5, -0.4, 1.1, -2.2, 0.05]).unwrap();
        let sig = solve_scale(&s, &chi).unwrap().sigma_hat.unwrap();
        assert!((sig - 1.3103197227796517).abs() < 1e-9);
        // large δ reduces to the root mean square
        let big = ScaleScoreFamily::normal_consistent(ScoreFamily::<f64>::huber(50.0)).unwrap();
        let pm = Sample::<f64>::from_f64(&[-1.0, 1.0]).unwrap();
        let sg = solve_scale(&pm, &big).unwrap().sigma_hat.unwrap();
        assert!((sg - 1.0 / big.fisher_constant().sqrt()).abs() < 1e-9);
    }

    #[test]
    fn scale_root_limits() {
        let chi = ScaleScoreFamily::normal_consistent(huber()).unwrap();
        let inf = f64::INFINITY;
        assert_eq!(scale_root(&[inf, inf, inf, 1.0], &chi), inf);
        assert_eq!(scale_root(&[0.0, 0.0, 0.0, 1.0], &chi), 0.0);
    }

    #[test]
    fn two_stage_example() {
        let chi = ScaleScoreFamily::new(huber(), 0.7101645482588023).unwrap();
        let s = Sample::<f64>::from_f64(&[1.0, 2.0, 3.0, 100.0]).unwrap();
        let f = solve_two_stage(&s, &huber(), &chi).unwrap();
        assert!((f.theta_hat - 3.651590567371369).abs() < 1e-8);
        assert!((f.sigma_hat.unwrap() - 3.6838451316833516).abs() < 1e-8);
    }

    #[test]
    fn plugin_se_examples() {
        let s = Sample::<f64>::from_f64(&[-1.0, 1.0]).unwrap();
        let se = plugin_se(&s, &huber(), 0.0).unwrap();
        assert!((se - 2f64.sqrt() / 2.0).abs() < 1e-15);
        let c = Sample::<f64>::from_f64(&[3.0, 3.0]).unwrap();
        assert_eq!(plugin_se(&c, &huber(), 3.0).unwrap(), 0.0);
        let far = Sample::<f64>::from_f64(&[-10.0, 10.0]).unwrap();
        assert!(plugin_se(&far, &huber(), 0.0).is_err());
        let m = Sample::<f64>::from_f64(&[1.0, 2.0, 6.0]).unwrap();
        let id = ScoreFamily::identity();
        let se = plugin_se(&m, &id, 3.0).unwrap();
        assert!((se - 14f64.sqrt() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_reductions() {
        let s = Sample::<f64>::from_f64(&[0.4, -1.3, 2.2, 0.9, -0.1, 5.0]).unwrap();
        let ws = WeightedSample::uniform(&s);
        let a = solve_location(&s, &huber()).unwrap().theta_hat;
        let b = solve_location_weighted(&ws, &huber()).unwrap().theta_hat;
        assert_eq!(a, b);
        let one = WeightedSample::new(s.values(), &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let t = solve_location_weighted(&one, &huber()).unwrap().theta_hat;
        assert!((t - 2.2).abs() < 1e-12);
        assert_eq!(*one.cum_weights().last().unwrap(), 1.0);
    }

    #[test]
    fn weighted_matches_weighted_loss_minimum() {
        let xs = [0.3, -0.8, 1.7, 2.9, -2.1];
        let w = [0.1, 0.3, 0.2, 0.25, 0.15];
        let ws = WeightedSample::new(&xs, &w).unwrap();
        let h = huber();
        let t = solve_location_weighted(&ws, &h).unwrap().theta_hat;
        let loss = |th: f64| {
            xs.iter()
                .zip(&w)
                .map(|(x, w)| w * h.rho(x - th))
                .sum::<f64>()
        };
        let (mut a, mut b) = (-5.0f64, 5.0f64);
        for _ in 0..200 {
            let c = b - 0.618 * (b - a);
            let d = a + 0.618 * (b - a);
            if loss(c) < loss(d) {
                b = d;
            } else {
                a = c;
            }
        }
        assert!((t - 0.5 * (a + b)).abs() < 1e-7);
    }

    #[test]
    fn single_precision_location() {
        let s = Sample::<f32>::new(vec![1.0, 2.0, 10.0]).unwrap();
        let f = solve_location(&s, &ScoreFamily::huber(1.345f32)).unwrap();
        assert!((f.theta_hat - 2.1725).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn location_translation_equivariant(
            xs in proptest::collection::vec(-10.0f64..10.0, 1..12),
            c in -50.0f64..50.0,
        ) {
            let s = Sample::<f64>::from_f64(&xs).unwrap();
            let a = solve_location(&s, &huber()).unwrap().theta_hat;
            let b = solve_location(&s.shifted(c), &huber()).unwrap().theta_hat;
            prop_assert!((b - a - c).abs() < 1e-8 * (1.0 + c.abs()));
        }

        #[test]
        fn scale_equivariant(
            xs in proptest::collection::vec(-10.0f64..10.0, 2..12),
            c in 0.1f64..20.0,
        ) {
            prop_assume!(xs.iter().filter(|x| x.abs() > 1e-3).count() > xs.len() / 2);
            let chi = ScaleScoreFamily::new(huber(), 0.7101645482588023).unwrap();
            let s = Sample::<f64>::from_f64(&xs).unwrap();
            let a = solve_scale(&s, &chi).unwrap().sigma_hat.unwrap();
            let b = solve_scale(&s.map(|v| -c * v).unwrap(), &chi).unwrap().sigma_hat.unwrap();
            prop_assert!((b - c * a).abs() < 1e-9 * c * a);
        }

        #[test]
        fn two_stage_median_centering_equivariant(
            xs in proptest::collection::vec(-10.0f64..10.0, 3..10),
            a in -20.0f64..20.0,
            c in 0.2f64..5.0,
        ) {
            let chi = ScaleScoreFamily::new(huber(), 0.7101645482588023).unwrap();
            let s = Sample::<f64>::from_f64(&xs).unwrap();
            let f0 = solve_two_stage_with(&s, &huber(), &chi, Centering::Median, RootSelect::Midpoint);
            prop_assume!(f0.is_ok());
            let f0 = f0.unwrap();
            let t = s.map(|v| a + c * v).unwrap();
            let f1 = solve_two_stage_with(&t, &huber(), &chi, Centering::Median, RootSelect::Midpoint).unwrap();
            let scale = 1.0 + a.abs() + c * f0.theta_hat.abs();
            prop_assert!((f1.theta_hat - (a + c * f0.theta_hat)).abs() < 1e-7 * scale);
            prop_assert!((f1.sigma_hat.unwrap() - c * f0.sigma_hat.unwrap()).abs() < 1e-8 * c * f0.sigma_hat.unwrap());
        }

        #[test]
        fn plugin_se_translation_invariant(
            xs in proptest::collection::vec(-3.0f64..3.0, 2..12),
            c in -10.0f64..10.0,
        ) {
            let s = Sample::<f64>::from_f64(&xs).unwrap();
            let th = solve_location(&s, &huber()).unwrap().theta_hat;
            let a = plugin_se(&s, &huber(), th);
            prop_assume!(a.is_ok());
            let a = a.unwrap();
            let b = plugin_se(&s.shifted(c), &huber(), th + c).unwrap();
            prop_assert!((a - b).abs() < 1e-8);
        }
    }
}
