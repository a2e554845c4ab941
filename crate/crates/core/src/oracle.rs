//! Exhaustive worst-case contamination search on small samples.
//!
//! Every index subset of size m is replaced by every multiset of values
//! drawn from a finite candidate set; the statistic is re-solved on each
//! configuration. For two-stage and standard-error targets the best grid
//! configuration is refined by golden-section search, which is a heuristic.

use rayon::prelude::*;

use crate::audit::{budget_splits, run_test, BudgetMode, TestData, TestSpec};
use crate::estimators::{
    location_root, plugin_se_raw, scale_root, two_stage_se_ratio, Centering, Sample,
};
use crate::root::RootSelect;
use crate::score::{ScaleScoreFamily, ScoreFamily};
use crate::sensitivity::{
    a_grid, left_targets, location_eta, right_targets, two_stage_fit, EstimatorSpec, Side,
};
use crate::{lit, Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Extra placements; ±∞ and the data points are always added.
    pub candidate_values: Vec<f64>,
    /// Golden-section tolerance for the continuous refinement.
    pub eta_grid_refinement: f64,
    pub max_n: usize,
    pub budget_mode: BudgetMode,
    /// Refusal threshold on the number of re-solves.
    pub max_evaluations: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            candidate_values: Vec::new(),
            eta_grid_refinement: 1e-6,
            max_n: 8,
            budget_mode: BudgetMode::Total,
            max_evaluations: 20_000_000,
        }
    }
}

/// Statistics the oracle can attack.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleTarget<F> {
    Estimator(EstimatorSpec<F>),
    /// Ratio part of the two-stage standard error.
    TwoStageSe {
        score: ScoreFamily<F>,
        chi: ScaleScoreFamily<F>,
    },
}

/// Signed displacement of the attacked statistic for a candidate sample.
type Displacement<'a, F> = Box<dyn Fn(&[F]) -> F + Sync + 'a>;

fn binom(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r.min(u64::MAX as u128) as u64
}

/// All k-subsets of 0..n in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Nondecreasing index sequences of length k over 0..c (multisets).
fn multisets(c: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if k == 0 {
        f(&[]);
        return;
    }
    if c == 0 {
        return;
    }
    let mut cur = vec![0usize; k];
    loop {
        if !f(&cur) {
            return;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if cur[i] < c - 1 {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[i];
                }
                break;
            }
        }
    }
}

fn candidate_set<F: Real>(xs: &[F], extra: &[F], cfg: &OracleConfig) -> Vec<F> {
    let mut c: Vec<F> = vec![F::neg_infinity(), F::infinity()];
    c.extend(xs.iter().copied().filter(|v| v.is_finite()));
    c.extend(extra.iter().copied().filter(|v| !v.is_nan()));
    c.extend(cfg.candidate_values.iter().map(|&v| lit::<F>(v)));
    c.sort_by(|a, b| a.partial_cmp(b).unwrap());
    c.dedup();
    c
}

fn check_size(n: usize, m: usize, k: usize, cfg: &OracleConfig, factor: u64) -> Result<()> {
    if n > cfg.max_n {
        return Err(Error::Budget(format!(
            "n = {n} exceeds the oracle cap {}",
            cfg.max_n
        )));
    }
    let work = binom(n, m)
        .saturating_mul(binom(k + m - 1, m))
        .saturating_mul(factor);
    if work > cfg.max_evaluations {
        return Err(Error::Budget(format!(
            "{work} configurations exceed the budget {}",
            cfg.max_evaluations
        )));
    }
    Ok(())
}

fn build<F: Real>(xs: &[F], subset: &[usize], values: &[F]) -> Vec<F> {
    let mut v = Vec::with_capacity(xs.len());
    let mut s = 0;
    for (i, &x) in xs.iter().enumerate() {
        if s < subset.len() && subset[s] == i {
            s += 1;
        } else {
            v.push(x);
        }
    }
    v.extend_from_slice(values);
    v
}

fn golden_max<F: Real>(f: &dyn Fn(F) -> F, mut a: F, mut b: F, tol: F) -> (F, F) {
    let g = lit::<F>(0.618_033_988_749_894_8);
    let val = |t: F| {
        let v = f(t);
        if v.is_nan() {
            F::neg_infinity()
        } else {
            v
        }
    };
    let mut it = 0;
    while (b - a).abs() > tol && it < 200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if val(c) >= val(d) {
            b = d;
        } else {
            a = c;
        }
        it += 1;
    }
    let t = (a + b) / lit(2.0);
    (t, val(t))
}

/// Maximum of `disp` over all contaminations of size m.
fn search<F: Real>(
    xs: &[F],
    m: usize,
    cands: &[F],
    disp: &(dyn Fn(&[F]) -> F + Sync),
    refine: Option<F>,
) -> F {
    if m == 0 {
        return F::zero().max(disp(xs));
    }
    let subs = subsets(xs.len(), m);
    let clean = |v: F| if v.is_nan() { F::neg_infinity() } else { v };
    // (value, subset index, multiset index, values)
    let best = subs
        .par_iter()
        .enumerate()
        .map(|(si, sub)| {
            let mut local: (F, usize, usize, Vec<F>) =
                (F::neg_infinity(), si, usize::MAX, Vec::new());
            let mut mi = 0usize;
            let mut vals = vec![F::zero(); m];
            multisets(cands.len(), m, |idx| {
                for (v, &i) in vals.iter_mut().zip(idx) {
                    *v = cands[i];
                }
                let d = clean(disp(&build(xs, sub, &vals)));
                if d > local.0 || local.2 == usize::MAX {
                    local = (d, si, mi, vals.clone());
                }
                mi += 1;
                local.0 != F::infinity()
            });
            local
        })
        .reduce(
            || (F::neg_infinity(), usize::MAX, usize::MAX, Vec::new()),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                    b
                } else {
                    a
                }
            },
        );
    let (mut value, si, _, mut vals) = best;
    if let (Some(tol), true) = (refine, value.is_finite() && si != usize::MAX) {
        let sub = &subs[si];
        let finite: Vec<F> = cands.iter().copied().filter(|v| v.is_finite()).collect();
        let span = if finite.is_empty() {
            F::one()
        } else {
            *finite.last().unwrap() - finite[0] + F::one()
        };
        let bracket = |v: F| -> (F, F) {
            let lo = finite
                .iter()
                .copied()
                .filter(|&c| c < v)
                .fold(v - span, |a, c| a.max(c));
            let hi = finite
                .iter()
                .copied()
                .filter(|&c| c > v)
                .fold(v + span, |a, c| a.min(c));
            (lo, hi)
        };
        for _pass in 0..2 {
            // all replaced values moved jointly, then one at a time
            if vals.iter().all(|v| v.is_finite()) && vals.iter().all(|&v| v == vals[0]) {
                let (lo, hi) = bracket(vals[0]);
                let f = |t: F| clean(disp(&build(xs, sub, &vec![t; m])));
                let (t, v) = golden_max(&f, lo, hi, tol);
                if v > value {
                    value = v;
                    vals = vec![t; m];
                }
            }
            for j in 0..m {
                if !vals[j].is_finite() {
                    continue;
                }
                let (lo, hi) = bracket(vals[j]);
                let base = vals.clone();
                let f = |t: F| {
                    let mut w = base.clone();
                    w[j] = t;
                    clean(disp(&build(xs, sub, &w)))
                };
                let (t, v) = golden_max(&f, lo, hi, tol);
                if v > value {
                    value = v;
                    vals[j] = t;
                }
            }
        }
    }
    value.max(F::zero())
}

fn signed<F: Real>(new: F, old: F, side: Side) -> F {
    match side {
        Side::Plus => new - old,
        _ => old - new,
    }
}

/// Brute-force one-sided m-sensitivity; `TwoSided` returns the larger side.
pub fn brute_force_sensitivity<F: Real>(
    sample: &Sample<F>,
    target: &OracleTarget<F>,
    m: usize,
    side: Side,
    cfg: &OracleConfig,
) -> Result<F> {
    let n = sample.n();
    if m > n {
        return Err(Error::Domain(format!("m = {m} exceeds n = {n}")));
    }
    if side == Side::TwoSided {
        let a = brute_force_sensitivity(sample, target, m, Side::Plus, cfg)?;
        let b = brute_force_sensitivity(sample, target, m, Side::Minus, cfg)?;
        return Ok(a.max(b));
    }
    let xs = sample.values();
    let sorted = sample.sorted();
    let tol: F = lit(cfg.eta_grid_refinement);
    let pick = if side == Side::Plus {
        RootSelect::Largest
    } else {
        RootSelect::Smallest
    };
    let mut extra: Vec<F> = Vec::new();
    let (disp, refine): (Displacement<'_, F>, bool) = match target {
        OracleTarget::Estimator(EstimatorSpec::Location(score)) => {
            let base = location_root(xs, score, RootSelect::Midpoint);
            (
                Box::new(move |v: &[F]| signed(location_root(v, score, pick), base, side)),
                false,
            )
        }
        OracleTarget::Estimator(EstimatorSpec::Scale(chi)) => {
            let base = scale_root(xs, chi);
            if !(base > F::zero() && base.is_finite()) {
                return Err(Error::DegenerateScale(
                    "scale estimate is degenerate".into(),
                ));
            }
            extra.push(F::zero());
            (
                Box::new(move |v: &[F]| signed(scale_root(v, chi), base, side)),
                false,
            )
        }
        OracleTarget::Estimator(EstimatorSpec::TwoStage { score, chi, config }) => {
            let (base, _) = two_stage_fit(xs, score, chi, config.centering, RootSelect::Midpoint);
            extra.push(F::zero());
            extra.push(base);
            let eta = location_eta(sorted, score, base, m, Side::Plus);
            extra.extend(left_targets(sorted, score, base, eta, config));
            extra.extend(right_targets(sorted, score, base, eta, config));
            let centering = config.centering;
            (
                Box::new(move |v: &[F]| {
                    signed(two_stage_fit(v, score, chi, centering, pick).0, base, side)
                }),
                true,
            )
        }
        OracleTarget::Estimator(EstimatorSpec::RestrictedSe { score, theta0 }) => {
            let t0 = *theta0;
            let base = plugin_se_raw(xs, score, t0)?;
            extra.push(t0);
            (
                Box::new(move |v: &[F]| {
                    let s = plugin_se_raw(v, score, t0).unwrap_or(F::infinity());
                    signed(s, base, side)
                }),
                true,
            )
        }
        OracleTarget::Estimator(EstimatorSpec::PluginSe { score, config, .. }) => {
            let th = location_root(xs, score, RootSelect::Midpoint);
            let base = plugin_se_raw(xs, score, th)?;
            extra.push(th);
            let eta = location_eta(sorted, score, th, m, Side::Plus);
            extra.extend(left_targets(sorted, score, th, eta, config));
            extra.extend(right_targets(sorted, score, th, eta, config));
            (
                Box::new(move |v: &[F]| {
                    let t = location_root(v, score, RootSelect::Midpoint);
                    if t.is_nan() {
                        return F::nan();
                    }
                    let s = plugin_se_raw(v, score, t).unwrap_or(F::infinity());
                    signed(s, base, side)
                }),
                true,
            )
        }
        OracleTarget::TwoStageSe { score, chi } => {
            let (th, sg) = two_stage_fit(xs, score, chi, Centering::Origin, RootSelect::Midpoint);
            if !(sg > F::zero() && sg.is_finite()) {
                return Err(Error::DegenerateScale(
                    "two-stage scale is degenerate".into(),
                ));
            }
            let base = two_stage_se_ratio(xs, score, th, sg)?;
            extra.push(F::zero());
            extra.push(th);
            for a in a_grid(score) {
                extra.push(th + sg * a * score.delta());
                extra.push(th - sg * a * score.delta());
            }
            (
                Box::new(move |v: &[F]| {
                    let (t, s) =
                        two_stage_fit(v, score, chi, Centering::Origin, RootSelect::Midpoint);
                    if t.is_nan() || s.is_nan() {
                        return F::nan();
                    }
                    let r = if s > F::zero() && t.is_finite() {
                        two_stage_se_ratio(v, score, t, s).unwrap_or(F::infinity())
                    } else {
                        F::infinity()
                    };
                    signed(r, base, side)
                }),
                true,
            )
        }
    };
    let cands = candidate_set(xs, &extra, cfg);
    check_size(n, m, cands.len(), cfg, 1)?;
    Ok(search(xs, m, &cands, disp.as_ref(), refine.then_some(tol)))
}

/// Smallest m with brute-force sensitivity ≥ η, or `None` up to n.
pub fn brute_force_bp<F: Real>(
    sample: &Sample<F>,
    target: &OracleTarget<F>,
    eta: F,
    side: Side,
    cfg: &OracleConfig,
) -> Result<Option<usize>> {
    for m in 1..=sample.n() {
        if brute_force_sensitivity(sample, target, m, side, cfg)? >= eta {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// Outcome of the exhaustive test search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleTestBp {
    /// Smallest flipping budget; `None` means none up to `cap`.
    pub m: Option<usize>,
    pub n: usize,
    pub cap: usize,
}

impl OracleTestBp {
    pub fn bp(&self) -> f64 {
        self.m.map_or(f64::INFINITY, |m| m as f64 / self.n as f64)
    }
}

fn test_candidates<F: Real>(
    s: &Sample<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
    m: usize,
    cfg: &OracleConfig,
) -> Vec<F> {
    let xs = s.values();
    let t0: F = lit(spec.theta0);
    let th = location_root(xs, score, RootSelect::Midpoint);
    let mut extra = vec![t0, F::zero()];
    if th.is_finite() {
        extra.push(th);
        let eta = location_eta(s.sorted(), score, th, m, Side::Plus);
        extra.extend(left_targets(s.sorted(), score, th, eta, &spec.scheme));
        extra.extend(right_targets(s.sorted(), score, th, eta, &spec.scheme));
    }
    candidate_set(xs, &extra, cfg)
}

/// Whether some contamination of size m of one sample flips the decision.
fn flips_one<F: Real>(
    s: &Sample<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
    m: usize,
    cands: &[F],
    decision: bool,
) -> bool {
    let xs = s.values();
    subsets(xs.len(), m).par_iter().any(|sub| {
        let mut hit = false;
        let mut vals = vec![F::zero(); m];
        multisets(cands.len(), m, |idx| {
            for (v, &i) in vals.iter_mut().zip(idx) {
                *v = cands[i];
            }
            let v = build(xs, sub, &vals);
            if let Ok(smp) = Sample::new(v) {
                if let Ok(o) = run_test(&TestData::One(smp), score, spec) {
                    hit = o.decision != decision;
                }
            }
            !hit
        });
        hit
    })
}

/// All contaminations of size k of one sample.
fn all_contaminations<F: Real>(xs: &[F], k: usize, cands: &[F]) -> Vec<Vec<F>> {
    let mut out = Vec::new();
    for sub in subsets(xs.len(), k) {
        multisets(cands.len(), k, |idx| {
            let vals: Vec<F> = idx.iter().map(|&i| cands[i]).collect();
            out.push(build(xs, &sub, &vals));
            true
        });
    }
    out
}

/// Exhaustive decision-flip breakdown point.
pub fn brute_force_test_bp<F: Real>(
    data: &TestData<F>,
    score: &ScoreFamily<F>,
    spec: &TestSpec,
    cfg: &OracleConfig,
) -> Result<OracleTestBp> {
    let base = run_test(data, score, spec)?;
    let cap = data.cap();
    let n = data.n_norm();
    match data {
        TestData::One(s) => {
            for m in 1..=cap {
                let cands = test_candidates(s, score, spec, m, cfg);
                check_size(s.n(), m, cands.len(), cfg, 1)?;
                if flips_one(s, score, spec, m, &cands, base.decision) {
                    return Ok(OracleTestBp { m: Some(m), n, cap });
                }
            }
        }
        TestData::Two(x, y) => {
            if x.n().max(y.n()) > cfg.max_n {
                return Err(Error::Budget("sample exceeds the oracle cap".into()));
            }
            for m in 1..=cap {
                let cx = test_candidates(x, score, spec, m, cfg);
                let cy = test_candidates(y, score, spec, m, cfg);
                let splits = budget_splits(m, x.n(), y.n(), cfg.budget_mode);
                let mut work = 0u64;
                for &(a, b) in &splits {
                    work = work.saturating_add(
                        binom(x.n(), a)
                            .saturating_mul(binom(cx.len() + a.max(1) - 1, a))
                            .saturating_mul(binom(y.n(), b))
                            .saturating_mul(binom(cy.len() + b.max(1) - 1, b)),
                    );
                }
                if work > cfg.max_evaluations {
                    return Err(Error::Budget(format!(
                        "{work} configurations exceed the budget"
                    )));
                }
                let hit = splits.par_iter().any(|&(a, b)| {
                    let xs = all_contaminations(x.values(), a, &cx);
                    let ys = all_contaminations(y.values(), b, &cy);
                    xs.par_iter().any(|u| {
                        ys.iter()
                            .any(|v| match (Sample::new(u.clone()), Sample::new(v.clone())) {
                                (Ok(p), Ok(q)) => run_test(&TestData::Two(p, q), score, spec)
                                    .map(|o| o.decision != base.decision)
                                    .unwrap_or(false),
                                _ => false,
                            })
                    })
                });
                if hit {
                    return Ok(OracleTestBp { m: Some(m), n, cap });
                }
            }
        }
    }
    Ok(OracleTestBp { m: None, n, cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensitivity::location_sensitivity;

    #[test]
    fn enumerators_have_binomial_sizes() {
        assert_eq!(subsets(6, 2).len() as u64, binom(6, 2));
        let mut k = 0;
        multisets(5, 3, |_| {
            k += 1;
            true
        });
        assert_eq!(k as u64, binom(7, 3));
    }

    #[test]
    fn zero_budget_is_zero() {
        let s = Sample::<f64>::from_f64(&[1.0, 2.0, 4.0]).unwrap();
        let t = OracleTarget::Estimator(EstimatorSpec::Location(ScoreFamily::huber(1.345)));
        let v = brute_force_sensitivity(&s, &t, 0, Side::Plus, &OracleConfig::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn sign_score_single_replacement() {
        let s = Sample::<f64>::from_f64(&[-1.0, 0.0, 1.0]).unwrap();
        let t = OracleTarget::Estimator(EstimatorSpec::Location(ScoreFamily::sign()));
        let v = brute_force_sensitivity(&s, &t, 1, Side::Plus, &OracleConfig::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_closed_form_location() {
        let s = Sample::<f64>::from_f64(&[0.3, -1.2, 0.8, 2.5, -0.4, 1.1]).unwrap();
        let h = ScoreFamily::<f64>::huber(1.345);
        let th = location_root(s.values(), &h, RootSelect::Midpoint);
        let t = OracleTarget::Estimator(EstimatorSpec::Location(h.clone()));
        for m in 1..=3 {
            let exact = location_sensitivity(&s, &h, th, m).unwrap();
            for side in [Side::Plus, Side::Minus] {
                let b = brute_force_sensitivity(&s, &t, m, side, &OracleConfig::default()).unwrap();
                assert!(
                    b == exact.get(side) || (b - exact.get(side)).abs() < 1e-8,
                    "m={m} {side:?}: {b} vs {}",
                    exact.get(side)
                );
            }
        }
    }

    #[test]
    fn refuses_large_instances() {
        let s = Sample::<f64>::from_f64(&(0..12).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let t = OracleTarget::Estimator(EstimatorSpec::Location(ScoreFamily::huber(1.345)));
        assert!(matches!(
            brute_force_sensitivity(&s, &t, 2, Side::Plus, &OracleConfig::default()),
            Err(Error::Budget(_))
        ));
    }
}
