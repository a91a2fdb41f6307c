//! SOS2 line search: anchor generation along axis-aligned or slanted lines
//! and exact maximization of the interpolated welfare surrogate.
//!
//! Between two consecutive anchors the surrogate interpolates prices and
//! market shares linearly in the segment weight `t`. Passenger-utility and
//! VMT terms are then linear in `t`; the revenue term is a product of two
//! linear interpolants, so each segment is a quadratic maximized in closed
//! form.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SearchError;
use crate::model::{FareAxis, FareBounds, FareVector, Instance, OperatorKind};
use crate::scalar::Scalar;
use crate::second_stage::SecondStageSolution;

/// Default anchors per line.
pub const DEFAULT_ANCHORS: usize = 11;

/// Unsampled search direction as produced by the direction list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchDirection {
    Axis(FareAxis),
    /// The base-fare/markup plane of one operator; a line is sampled per visit.
    OperatorPlane(OperatorKind),
}

impl SearchDirection {
    pub fn touches_only(&self, kind: OperatorKind) -> bool {
        match *self {
            SearchDirection::Axis(axis) => axis == FareAxis::base(kind) || axis == FareAxis::markup(kind),
            SearchDirection::OperatorPlane(k) => k == kind,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SearchDirection::Axis(axis) => axis.label().to_string(),
            SearchDirection::OperatorPlane(k) => format!("plane_{}", k.label()),
        }
    }
}

/// A concrete search line through the current point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SearchLine<T> {
    Axis(FareAxis),
    /// `other = slope * span + intercept`, parameterized by the `span` coordinate.
    OperatorPlane {
        operator: OperatorKind,
        span: FareAxis,
        other: FareAxis,
        slope: T,
        intercept: T,
    },
}

impl<T: Scalar> SearchLine<T> {
    /// Axis whose coordinate parameterizes the line.
    pub fn span_axis(&self) -> FareAxis {
        match *self {
            SearchLine::Axis(axis) => axis,
            SearchLine::OperatorPlane { span, .. } => span,
        }
    }
}

/// Ordered anchors along a line. Second-stage solutions are attached by the caller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet<T> {
    pub line: SearchLine<T>,
    /// Spanning-axis coordinate of each anchor, strictly increasing.
    pub positions: Vec<T>,
    pub points: Vec<FareVector<T>>,
    /// Index of the current solution within `points`.
    pub current: usize,
}

/// Inclusive slope range of lines through `(x, y)` that stay inside the box
/// over the whole `[x_min, x_max]` span.
pub fn slope_range<T: Scalar>(x: T, y: T, (x_min, x_max): (T, T), (y_min, y_max): (T, T)) -> (T, T) {
    if x <= x_min {
        ((y_min - y) / (x_max - x), (y_max - y) / (x_max - x))
    } else if x >= x_max {
        ((y_max - y) / (x_min - x), (y_min - y) / (x_min - x))
    } else {
        let lo = ((y_max - y) / (x_min - x)).max((y_min - y) / (x_max - x));
        let hi = ((y_min - y) / (x_min - x)).min((y_max - y) / (x_max - x));
        (lo, hi)
    }
}

fn grid<T: Scalar>(lo: T, hi: T, d: usize) -> Vec<T> {
    let last = T::lit((d - 1) as f64);
    (0..d)
        .map(|j| {
            if j + 1 == d {
                hi
            } else {
                lo + (hi - lo) * (T::lit(j as f64) / last)
            }
        })
        .collect()
}

/// Builds `d` evenly spaced anchors along `dir` plus the current point.
///
/// # Panics
/// If `d < 2`.
pub fn generate_anchors<T: Scalar, R: Rng + ?Sized>(
    current: &FareVector<T>,
    dir: SearchDirection,
    d: usize,
    bounds: &FareBounds<T>,
    rng: &mut R,
) -> Result<AnchorSet<T>, SearchError> {
    assert!(d >= 2, "at least two anchors per line");
    let (line, mut positions, mut points) = match dir {
        SearchDirection::Axis(axis) => {
            let (lo, hi) = bounds.range(axis);
            if hi <= lo {
                return Err(SearchError::DegenerateRange { axis: axis.label() });
            }
            let pos = grid(lo, hi, d);
            let pts: Vec<FareVector<T>> = pos.iter().map(|&v| current.with(axis, v)).collect();
            (SearchLine::Axis(axis), pos, pts)
        }
        SearchDirection::OperatorPlane(kind) => {
            let (span, other) = if rng.gen::<f64>() < 0.5 {
                (FareAxis::base(kind), FareAxis::markup(kind))
            } else {
                (FareAxis::markup(kind), FareAxis::base(kind))
            };
            let (x_min, x_max) = bounds.range(span);
            let (y_min, y_max) = bounds.range(other);
            if x_max <= x_min {
                return Err(SearchError::DegenerateRange { axis: span.label() });
            }
            let x = current.get(span);
            let y = current.get(other);
            let (m_lo, m_hi) = slope_range(x, y, (x_min, x_max), (y_min, y_max));
            let u = T::lit(rng.gen::<f64>());
            let slope = m_lo + (m_hi - m_lo) * u;
            let intercept = y - slope * x;
            let pos = grid(x_min, x_max, d);
            let pts = pos
                .iter()
                .map(|&xv| {
                    let yv = (intercept + slope * xv).max(y_min).min(y_max);
                    current.with(span, xv).with(other, yv)
                })
                .collect();
            let line = SearchLine::OperatorPlane { operator: kind, span, other, slope, intercept };
            (line, pos, pts)
        }
    };

    let span = line.span_axis();
    let (lo, hi) = bounds.range(span);
    let tol = T::lit(1e-12) * (hi - lo).max(T::one());
    let here = current.get(span);
    let at = positions.iter().position(|&p| p >= here - tol).unwrap_or(positions.len());
    let current_idx = if at < positions.len() && (positions[at] - here).abs() <= tol {
        positions[at] = here;
        points[at] = *current;
        at
    } else {
        positions.insert(at, here);
        points.insert(at, *current);
        at
    };
    Ok(AnchorSet { line, positions, points, current: current_idx })
}

/// Quadratic surrogate `a + b t + c t^2` on one segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentQuadratic<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Scalar> SegmentQuadratic<T> {
    pub fn value(&self, t: T) -> T {
        self.a + t * (self.b + t * self.c)
    }
}

/// Surrogate coefficients between anchor solutions `lo` and `hi`.
pub fn segment_quadratic<T: Scalar>(
    instance: &Instance<T>,
    lo: &SecondStageSolution<T>,
    hi: &SecondStageSolution<T>,
) -> SegmentQuadratic<T> {
    let idx = instance.index();
    let w = instance.weights();
    let (mut a, mut b, mut c) = (T::zero(), T::zero(), T::zero());
    for (i, ptype) in instance.passenger_types().iter().enumerate() {
        let n = ptype.count;
        let (mut pax0, mut pax1) = (ptype.outside_utility, T::zero());
        let (mut rev0, mut rev1, mut rev2) = (T::zero(), T::zero(), T::zero());
        for (k, (&r, &u)) in idx.type_routes[i].iter().zip(&idx.type_utilities[i]).enumerate() {
            let p0 = lo.prices.price[r];
            let dp = hi.prices.price[r] - p0;
            let s0 = lo.shares.route[i][k];
            let ds = hi.shares.route[i][k] - s0;
            pax0 = pax0 + u + ptype.alpha * p0;
            pax1 = pax1 + ptype.alpha * dp;
            rev0 = rev0 + p0 * s0;
            rev1 = rev1 + p0 * ds + dp * s0;
            rev2 = rev2 + dp * ds;
        }
        let o0 = lo.shares.outside[i];
        let o1 = hi.shares.outside[i] - o0;
        let drive = ptype.drive_distance;
        a = a + n * (w.pax * pax0 + w.rev * rev0 - w.vmt * drive * o0);
        b = b + n * (w.pax * pax1 + w.rev * rev1 - w.vmt * drive * o1);
        c = c + n * w.rev * rev2;
    }
    SegmentQuadratic { a, b, c }
}

/// Maximizer of the SOS2 surrogate over all segments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sos2Choice<T> {
    pub fares: FareVector<T>,
    pub predicted: T,
    /// Segment between anchors `segment` and `segment + 1`.
    pub segment: usize,
    pub t: T,
}

/// Maximizes the interpolated surrogate over the anchor set. Ties keep the
/// earliest candidate in line order.
///
/// # Panics
/// If fewer than one anchor is supplied or the lengths differ.
pub fn sos2_optimize<T: Scalar>(
    instance: &Instance<T>,
    points: &[FareVector<T>],
    solutions: &[SecondStageSolution<T>],
) -> Sos2Choice<T> {
    assert_eq!(points.len(), solutions.len());
    assert!(!points.is_empty());
    if points.len() == 1 {
        return Sos2Choice { fares: points[0], predicted: solutions[0].welfare.total, segment: 0, t: T::zero() };
    }
    let two = T::lit(2.0);
    let mut best: Option<(T, usize, T)> = None;
    for seg in 0..points.len() - 1 {
        let q = segment_quadratic(instance, &solutions[seg], &solutions[seg + 1]);
        let mut candidates = vec![T::zero()];
        if q.c < T::zero() {
            let t = -q.b / (two * q.c);
            if t > T::zero() && t < T::one() {
                candidates.push(t);
            }
        }
        candidates.push(T::one());
        for t in candidates {
            let v = q.value(t);
            if best.is_none_or(|(bv, _, _)| v > bv) {
                best = Some((v, seg, t));
            }
        }
    }
    let (predicted, segment, t) = best.expect("non-empty candidate set");
    let fares = points[segment].lerp(&points[segment + 1], t);
    Sos2Choice { fares, predicted, segment, t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::sample_parts;
    use crate::model::{ObjectiveWeights, PerOperator};
    use crate::second_stage::{solve_exact, SecondStageConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bounds() -> FareBounds<f64> {
        FareBounds::case_study()
    }

    #[test]
    fn discount_axis_anchors_are_evenly_spaced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = FareVector::zero().with(FareAxis::Discount, 0.25);
        let set = generate_anchors(&y, SearchDirection::Axis(FareAxis::Discount), 6, &bounds(), &mut rng).unwrap();
        let expected = [0.0, 0.1, 0.2, 0.25, 0.3, 0.4, 0.5];
        assert_eq!(set.positions.len(), 7);
        for (p, e) in set.positions.iter().zip(expected) {
            assert!((p - e).abs() < 1e-15);
        }
        assert_eq!(set.current, 3);
    }

    #[test]
    fn coincident_current_replaces_grid_anchor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = FareVector::zero().with(FareAxis::BaseMod, 3.0);
        let set = generate_anchors(&y, SearchDirection::Axis(FareAxis::BaseMod), 11, &bounds(), &mut rng).unwrap();
        assert_eq!(set.positions.len(), 11);
        assert_eq!(set.points[set.current], y);
    }

    #[test]
    fn degenerate_axis_is_rejected() {
        let mut b = bounds();
        b.discount_max = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = generate_anchors(&FareVector::zero(), SearchDirection::Axis(FareAxis::Discount), 5, &b, &mut rng);
        assert_eq!(err.unwrap_err(), SearchError::DegenerateRange { axis: "Lambda" });
    }

    #[test]
    fn slope_range_at_lower_corner() {
        let (lo, hi) = slope_range(0.0, 2.0, (0.0, 10.0), (0.0, 5.0));
        assert_eq!((lo, hi), ((0.0 - 2.0) / 10.0, (5.0 - 2.0) / 10.0));
    }

    #[test]
    fn plane_anchors_stay_in_bounds() {
        let b = bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..2000 {
            let y = b.sample_uniform(&mut rng);
            let kind = if trial % 2 == 0 { OperatorKind::Transit } else { OperatorKind::Mod };
            let set = generate_anchors(&y, SearchDirection::OperatorPlane(kind), 11, &b, &mut rng).unwrap();
            assert!(set.points.iter().all(|p| b.contains(p)));
            assert!(set.positions.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(set.points[set.current], y);
        }
    }

    fn evaluated(inst: &Instance<f64>, axis: FareAxis) -> (Vec<FareVector<f64>>, Vec<SecondStageSolution<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = FareVector { base: PerOperator::new(2.0, 3.0), markup: PerOperator::new(0.1, 0.8), discount: 0.2 };
        let set = generate_anchors(&y, SearchDirection::Axis(axis), 11, inst.bounds(), &mut rng).unwrap();
        let sols = set
            .points
            .iter()
            .map(|p| solve_exact(inst, p, &SecondStageConfig::default()).unwrap())
            .collect();
        (set.points, sols)
    }

    #[test]
    fn surrogate_reproduces_anchor_welfare() {
        let inst = Instance::from_parts(sample_parts());
        let (pts, sols) = evaluated(&inst, FareAxis::BaseMod);
        for seg in 0..pts.len() - 1 {
            let q = segment_quadratic(&inst, &sols[seg], &sols[seg + 1]);
            for (t, s) in [(0.0, &sols[seg]), (1.0, &sols[seg + 1])] {
                let w = s.welfare.total;
                assert!((q.value(t) - w).abs() <= 1e-12 * w.abs().max(1.0));
            }
        }
    }

    #[test]
    fn identical_anchor_solutions_return_first_anchor() {
        let inst = Instance::from_parts(sample_parts());
        let y = FareVector::zero();
        let sol = solve_exact(&inst, &y, &SecondStageConfig::default()).unwrap();
        let choice = sos2_optimize(&inst, &[y, y.with(FareAxis::Discount, 0.5)], &[sol.clone(), sol]);
        assert_eq!(choice.segment, 0);
        assert_eq!(choice.t, 0.0);
        assert_eq!(choice.fares, y);
    }

    #[test]
    fn pax_only_surrogate_lands_on_an_anchor() {
        let mut parts = sample_parts();
        parts.weights = ObjectiveWeights::new(1.0, 0.0, 0.0);
        let inst = Instance::from_parts(parts);
        let (pts, sols) = evaluated(&inst, FareAxis::MarkupTransit);
        let choice = sos2_optimize(&inst, &pts, &sols);
        assert!(choice.t == 0.0 || choice.t == 1.0);
        assert_eq!(choice.fares.markup.transit, 0.0);
    }
}
