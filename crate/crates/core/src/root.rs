//! Bracketed bisection on monotone predicates.

use crate::{tol, Real};

/// Largest `t` with `pred(t)` true, where `pred` is true on a left ray and
/// false on the complementary right ray.
///
/// The bracket starts at `center ± radius` and doubles until the predicate
/// changes value. Returns `+inf` when the predicate never turns false and
/// `-inf` when it never turns true within the doubling cap.
pub fn last_true<F: Real>(pred: impl Fn(F) -> bool, center: F, radius: F) -> F {
    boundary(pred, center, radius).0
}

/// Last true and first false point of a predicate that is true on a left
/// ray; both are ±inf when no change is found.
pub fn boundary<F: Real>(pred: impl Fn(F) -> bool, center: F, radius: F) -> (F, F) {
    let two = F::one() + F::one();
    let mut r = if radius > F::zero() && radius.is_finite() {
        radius
    } else {
        F::one()
    };
    let (mut lo, mut hi);
    if pred(center) {
        lo = center;
        let mut k = 0;
        loop {
            let cand = center + r;
            if !pred(cand) {
                hi = cand;
                break;
            }
            lo = cand;
            r = r * two;
            k += 1;
            if k > tol::BRACKET_DOUBLINGS || !r.is_finite() {
                return (F::infinity(), F::infinity());
            }
        }
    } else {
        hi = center;
        let mut k = 0;
        loop {
            let cand = center - r;
            if pred(cand) {
                lo = cand;
                break;
            }
            hi = cand;
            r = r * two;
            k += 1;
            if k > tol::BRACKET_DOUBLINGS || !r.is_finite() {
                return (F::neg_infinity(), F::neg_infinity());
            }
        }
    }
    bisect_pair(&pred, lo, hi)
}

/// Bisects `[lo, hi]` with `pred(lo)` true and `pred(hi)` false down to
/// adjacent floating-point values; returns the last true point.
pub fn bisect<F: Real>(pred: &impl Fn(F) -> bool, lo: F, hi: F) -> F {
    bisect_pair(pred, lo, hi).0
}

fn bisect_pair<F: Real>(pred: &impl Fn(F) -> bool, mut lo: F, mut hi: F) -> (F, F) {
    let two = F::one() + F::one();
    for _ in 0..tol::BISECT_MAX_ITER {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Zero set `[left, right]` of a nonincreasing function `g`.
///
/// `left` is the first point of `{g <= 0}` and `right` the last point of
/// `{g >= 0}`. When `g` jumps over zero they are adjacent and returned in
/// increasing order.
pub fn zero_interval<F: Real>(g: impl Fn(F) -> F, center: F, radius: F) -> (F, F) {
    let left = boundary(|t| g(t) > F::zero(), center, radius).1;
    let right = last_true(|t| g(t) >= F::zero(), center, radius);
    (left.min(right), left.max(right))
}

/// Root selection within a zero interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootSelect {
    #[default]
    Midpoint,
    Smallest,
    Largest,
}

impl RootSelect {
    pub fn pick<F: Real>(self, (left, right): (F, F)) -> F {
        match self {
            RootSelect::Smallest => left,
            RootSelect::Largest => right,
            RootSelect::Midpoint => {
                if left.is_infinite() || right.is_infinite() {
                    if left == right {
                        left
                    } else if left.is_infinite() && right.is_infinite() {
                        F::nan()
                    } else if left.is_infinite() {
                        left
                    } else {
                        right
                    }
                } else {
                    left + (right - left) / (F::one() + F::one())
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_true_finds_threshold() {
        let t = last_true(|x: f64| x <= 3.25, 0.0, 1.0);
        assert!((t - 3.25).abs() < 1e-15);
        let t = last_true(|x: f64| x <= -7.5, 0.0, 1.0);
        assert!((t + 7.5).abs() < 1e-14);
    }

    #[test]
    fn last_true_reports_infinite_rays() {
        assert_eq!(last_true(|_x: f64| true, 0.0, 1.0), f64::INFINITY);
        assert_eq!(last_true(|_x: f64| false, 0.0, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn zero_interval_of_step_function() {
        let g = |t: f64| {
            let xs = [0.0, 1.0, 2.0, 3.0];
            xs.iter()
                .map(|x| (x - t).signum() * ((x - t) != 0.0) as i32 as f64)
                .sum::<f64>()
        };
        let (l, r) = zero_interval(g, 0.0, 1.0);
        assert!((l - 1.0).abs() < 1e-12 && (r - 2.0).abs() < 1e-12);
        assert_eq!(RootSelect::Midpoint.pick((l, r)), 1.5);
    }

    #[test]
    fn works_in_single_precision() {
        let t = last_true(|x: f32| x <= 0.75, 0.0, 1.0);
        assert!((t - 0.75).abs() < 1e-6);
    }
}
