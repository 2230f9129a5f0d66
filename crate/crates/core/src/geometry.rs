//! Exact planar primitives: points, closed intervals, axis-aligned boxes,
//! interior-disjoint box unions, and feasibility predicates for the two
//! configurations the lab studies.
//!
//! The corner predicate asks whether three boxes can host a triple
//! `(x, y), (x + t, y), (x, y + 1/t)` with `t > 0`. Because `t` constrains
//! only the x-coordinates and `1/t` only the y-coordinates, feasibility
//! reduces to overlap of an offset interval with the reciprocal of another,
//! which interval arithmetic decides exactly for closed boxes.

use crate::error::CoreError;
use rayon::prelude::*;

/// Tolerance used by point-level predicates when none is supplied.
pub const DEFAULT_POINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }
}

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, CoreError> {
        if !(lo <= hi) {
            return Err(CoreError::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// Degenerate interval `[v, v]`.
    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub(crate) fn raw(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then(|| Interval { lo, hi })
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    fn negate(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

/// Closed axis-aligned box, possibly degenerate (a segment or point).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2 {
    pub x: Interval,
    pub y: Interval,
}

impl Box2 {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self, CoreError> {
        Ok(Box2 {
            x: Interval::new(x_lo, x_hi)?,
            y: Interval::new(y_lo, y_hi)?,
        })
    }

    pub fn area(&self) -> f64 {
        self.x.width() * self.y.width()
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.x.contains(p.x) && self.y.contains(p.y)
    }

    /// Closed containment of another box.
    pub fn contains_box(&self, other: &Box2) -> bool {
        self.x.lo() <= other.x.lo()
            && other.x.hi() <= self.x.hi()
            && self.y.lo() <= other.y.lo()
            && other.y.hi() <= self.y.hi()
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x.lo, self.y.lo),
            Point2::new(self.x.hi, self.y.lo),
            Point2::new(self.x.lo, self.y.hi),
            Point2::new(self.x.hi, self.y.hi),
        ]
    }

    pub fn hull(&self, other: &Box2) -> Box2 {
        Box2 {
            x: self.x.hull(&other.x),
            y: self.y.hull(&other.y),
        }
    }

    /// Image under the area-preserving anisotropic map `(x, y) -> (ax, y/a)`.
    pub fn anisotropic_scaled(&self, a: f64) -> Box2 {
        Box2 {
            x: Interval::raw(self.x.lo * a, self.x.hi * a),
            y: Interval::raw(self.y.lo / a, self.y.hi / a),
        }
    }
}

/// Configuration whose absence a set is tested for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfigKind {
    /// `(x, y), (x + t, y), (x, y + 1/t)` for some `t > 0`.
    HyperbolicCorner,
    /// Any triangle of the given area (> 0).
    FixedAreaTriangle { area: f64 },
}

impl ConfigKind {
    pub fn validate(&self) -> Result<(), CoreError> {
        match self {
            ConfigKind::HyperbolicCorner => Ok(()),
            ConfigKind::FixedAreaTriangle { area } => {
                if area.is_finite() && *area > 0.0 {
                    Ok(())
                } else {
                    Err(CoreError::BadConfig(format!(
                        "triangle area must be positive and finite, got {area}"
                    )))
                }
            }
        }
    }
}

/// Options for avoidance checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct AvoidOptions {
    /// Also admit corner parameters `t < 0` (then `1/t < 0` as well).
    /// The default matches the positive-parameter configuration.
    pub signed_t: bool,
}

/// Outcome of an avoidance check over a box union.
#[derive(Debug, Clone)]
pub struct AvoidanceReport {
    pub avoids: bool,
    /// Indices of the first feasible box triple in lexicographic order.
    pub witness: Option<[usize; 3]>,
}

/// Area of the triangle spanned by three points.
pub fn triangle_area(p0: Point2, p1: Point2, p2: Point2) -> f64 {
    0.5 * cross(p0, p1, p2).abs()
}

/// Signed cross product `(p1 - p0) x (p2 - p0)`; twice the signed area.
pub fn cross(p0: Point2, p1: Point2, p2: Point2) -> f64 {
    (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y)
}

/// Recovers the parameter `t` when the three points form a hyperbolic
/// corner within tolerance: `p1` offset horizontally by `t > 0`, `p2`
/// offset vertically by `1/t`.
pub fn corner_param(p0: Point2, p1: Point2, p2: Point2, tol: f64) -> Option<f64> {
    let t = p1.x - p0.x;
    if t <= 0.0 {
        return None;
    }
    if (p1.y - p0.y).abs() > tol || (p2.x - p0.x).abs() > tol {
        return None;
    }
    (((p2.y - p0.y) * t - 1.0).abs() <= tol).then_some(t)
}

/// Does some `t > 0` admit a corner with base in `r0`, horizontal point in
/// `r1`, vertical point in `r2`? Exact for closed boxes: the base `(x, y)`
/// must satisfy `x` in `r0.x & r2.x` and `y` in `r0.y & r1.y`; the offset
/// `t = x1 - x` then sweeps an interval `T` depending only on x-data, and
/// `1/t = y2 - y` sweeps `S` from y-data, so feasibility is
/// `T & 1/S & (0, inf) != {}`.
pub fn corner_feasible(r0: &Box2, r1: &Box2, r2: &Box2) -> bool {
    let (t, s) = match corner_offset_intervals(r0, r1, r2) {
        Some(ts) => ts,
        None => return false,
    };
    positive_reciprocal_overlap(t, s)
}

/// Variant admitting negative parameters: `t < 0` with `1/t < 0`.
pub fn corner_feasible_signed(r0: &Box2, r1: &Box2, r2: &Box2) -> bool {
    let (t, s) = match corner_offset_intervals(r0, r1, r2) {
        Some(ts) => ts,
        None => return false,
    };
    positive_reciprocal_overlap(t, s) || positive_reciprocal_overlap(t.negate(), s.negate())
}

fn corner_offset_intervals(r0: &Box2, r1: &Box2, r2: &Box2) -> Option<(Interval, Interval)> {
    let xs = r0.x.intersect(&r2.x)?;
    let ys = r0.y.intersect(&r1.y)?;
    let t = Interval::raw(r1.x.lo() - xs.hi(), r1.x.hi() - xs.lo());
    let s = Interval::raw(r2.y.lo() - ys.hi(), r2.y.hi() - ys.lo());
    Some((t, s))
}

/// Is there `t > 0` with `t` in `t_iv` and `1/t` in `s_iv`?
fn positive_reciprocal_overlap(t_iv: Interval, s_iv: Interval) -> bool {
    if t_iv.hi() <= 0.0 || s_iv.hi() <= 0.0 {
        return false;
    }
    // The reciprocal image of the positive part of s_iv is
    // [1/s_hi, 1/s_lo] (right endpoint +inf when s_lo <= 0).
    let lo = t_iv.lo().max(1.0 / s_iv.hi());
    let hi = if s_iv.lo() > 0.0 {
        t_iv.hi().min(1.0 / s_iv.lo())
    } else {
        t_iv.hi()
    };
    lo <= hi
}

/// Range of the signed cross product `(p1 - p0) x (p2 - p0)` as the three
/// points range over the boxes. The cross product is affine in each of the
/// six coordinates, so the extrema sit at corner combinations; the range is
/// an interval by connectedness. A triangle of area `a` exists in the
/// triple iff `2a` or `-2a` lies in this range.
pub fn cross_range(r0: &Box2, r1: &Box2, r2: &Box2) -> Interval {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c0 in r0.corners() {
        for c1 in r1.corners() {
            for c2 in r2.corners() {
                let v = cross(c0, c1, c2);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    Interval::raw(lo, hi)
}

fn triangle_feasible(r0: &Box2, r1: &Box2, r2: &Box2, area: f64) -> bool {
    let range = cross_range(r0, r1, r2);
    range.contains(2.0 * area) || range.contains(-2.0 * area)
}

/// Union of boxes, normalized on construction so boxes are pairwise
/// interior-disjoint (later boxes are clipped against earlier ones).
/// Degenerate boxes are kept unless fully covered by an earlier box.
#[derive(Debug, Clone)]
pub struct BoxUnion {
    boxes: Vec<Box2>,
    bounding: Box2,
}

impl BoxUnion {
    pub fn new(boxes: Vec<Box2>) -> Self {
        let bounding = boxes
            .iter()
            .skip(1)
            .fold(boxes.first().copied().unwrap_or(Box2 {
                x: Interval::point(0.0),
                y: Interval::point(0.0),
            }), |acc, b| acc.hull(b));
        Self::with_bounding(boxes, bounding)
    }

    pub fn with_bounding(boxes: Vec<Box2>, bounding: Box2) -> Self {
        let mut disjoint: Vec<Box2> = Vec::with_capacity(boxes.len());
        for b in boxes {
            if b.area() == 0.0 {
                if !disjoint.iter().any(|e| e.contains_box(&b)) {
                    disjoint.push(b);
                }
                continue;
            }
            let mut pieces = vec![b];
            for cutter in disjoint.clone() {
                let mut next = Vec::with_capacity(pieces.len());
                for p in pieces {
                    subtract_into(p, &cutter, &mut next);
                }
                pieces = next;
                if pieces.is_empty() {
                    break;
                }
            }
            disjoint.extend(pieces);
        }
        #[cfg(debug_assertions)]
        check_interior_disjoint(&disjoint);
        BoxUnion {
            boxes: disjoint,
            bounding,
        }
    }

    pub fn boxes(&self) -> &[Box2] {
        &self.boxes
    }

    pub fn bounding(&self) -> &Box2 {
        &self.bounding
    }

    pub fn measure(&self) -> f64 {
        self.boxes.iter().map(|b| b.area()).sum()
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.boxes.iter().any(|b| b.contains(p))
    }

    /// Image under `(x, y) -> (ax, y/a)`, which preserves corner
    /// configurations (it maps `t` to `at`).
    pub fn anisotropic_scaled(&self, a: f64) -> BoxUnion {
        BoxUnion {
            boxes: self.boxes.iter().map(|b| b.anisotropic_scaled(a)).collect(),
            bounding: self.bounding.anisotropic_scaled(a),
        }
    }
}

/// Removes `cutter` from `piece`, pushing the (up to four) remaining
/// rectangles. Only interior overlap counts; boundary-only contact leaves
/// the piece whole.
fn subtract_into(piece: Box2, cutter: &Box2, out: &mut Vec<Box2>) {
    let ox_lo = piece.x.lo().max(cutter.x.lo());
    let ox_hi = piece.x.hi().min(cutter.x.hi());
    let oy_lo = piece.y.lo().max(cutter.y.lo());
    let oy_hi = piece.y.hi().min(cutter.y.hi());
    if !(ox_lo < ox_hi && oy_lo < oy_hi) {
        out.push(piece);
        return;
    }
    if piece.x.lo() < ox_lo {
        out.push(Box2 {
            x: Interval::raw(piece.x.lo(), ox_lo),
            y: piece.y,
        });
    }
    if ox_hi < piece.x.hi() {
        out.push(Box2 {
            x: Interval::raw(ox_hi, piece.x.hi()),
            y: piece.y,
        });
    }
    if piece.y.lo() < oy_lo {
        out.push(Box2 {
            x: Interval::raw(ox_lo, ox_hi),
            y: Interval::raw(piece.y.lo(), oy_lo),
        });
    }
    if oy_hi < piece.y.hi() {
        out.push(Box2 {
            x: Interval::raw(ox_lo, ox_hi),
            y: Interval::raw(oy_hi, piece.y.hi()),
        });
    }
}

#[cfg(debug_assertions)]
fn check_interior_disjoint(boxes: &[Box2]) {
    for (i, a) in boxes.iter().enumerate() {
        for b in boxes.iter().skip(i + 1) {
            let wx = a.x.hi().min(b.x.hi()) - a.x.lo().max(b.x.lo());
            let wy = a.y.hi().min(b.y.hi()) - a.y.lo().max(b.y.lo());
            debug_assert!(
                !(wx > 0.0 && wy > 0.0),
                "boxes {a:?} and {b:?} overlap in the interior"
            );
        }
    }
}

/// Checks that no box triple of the union can host the configuration.
/// Triples are scanned in lexicographic order `(i, j, k)` (outer index
/// parallelized; the first witness is deterministic).
pub fn avoids(u: &BoxUnion, cfg: ConfigKind, opts: AvoidOptions) -> Result<AvoidanceReport, CoreError> {
    cfg.validate()?;
    let boxes = u.boxes();
    let n = boxes.len();
    let witness = match cfg {
        ConfigKind::HyperbolicCorner => (0..n)
            .into_par_iter()
            .find_map_first(|i| {
                let r0 = &boxes[i];
                for (k, r2) in boxes.iter().enumerate() {
                    // Shared x for base and vertical point; prune before
                    // the inner loop over horizontal boxes.
                    if r0.x.intersect(&r2.x).is_none() {
                        continue;
                    }
                    for (j, r1) in boxes.iter().enumerate() {
                        let feas = if opts.signed_t {
                            corner_feasible_signed(r0, r1, r2)
                        } else {
                            corner_feasible(r0, r1, r2)
                        };
                        if feas {
                            return Some([i, j, k]);
                        }
                    }
                }
                None
            })
            .map(|[i, j, k]| [i, j, k]),
        ConfigKind::FixedAreaTriangle { area } => (0..n)
            .into_par_iter()
            .find_map_first(|i| {
                // Roles are symmetric up to a sign the +-2a test absorbs,
                // so unordered triples with repetition suffice.
                for j in i..n {
                    for k in j..n {
                        if triangle_feasible(&boxes[i], &boxes[j], &boxes[k], area) {
                            return Some([i, j, k]);
                        }
                    }
                }
                None
            }),
    };
    Ok(AvoidanceReport {
        avoids: witness.is_none(),
        witness,
    })
}

/// Would adding `b` to an avoiding family create a feasible triple? Only
/// triples involving `b` need checking; removal never breaks avoidance.
pub fn add_creates_config(existing: &[Box2], b: &Box2, cfg: ConfigKind, opts: AvoidOptions) -> bool {
    match cfg {
        ConfigKind::HyperbolicCorner => {
            let feas = |r0: &Box2, r1: &Box2, r2: &Box2| {
                if opts.signed_t {
                    corner_feasible_signed(r0, r1, r2)
                } else {
                    corner_feasible(r0, r1, r2)
                }
            };
            if feas(b, b, b) {
                return true;
            }
            for r in existing {
                if feas(b, b, r)
                    || feas(b, r, b)
                    || feas(r, b, b)
                    || feas(b, r, r)
                    || feas(r, b, r)
                    || feas(r, r, b)
                {
                    return true;
                }
                for r2 in existing {
                    if feas(b, r, r2) || feas(r, b, r2) || feas(r, r2, b) {
                        return true;
                    }
                }
            }
            false
        }
        ConfigKind::FixedAreaTriangle { area } => {
            if triangle_feasible(b, b, b, area) {
                return true;
            }
            for (i, r) in existing.iter().enumerate() {
                if triangle_feasible(b, b, r, area) || triangle_feasible(b, r, r, area) {
                    return true;
                }
                for r2 in existing.iter().skip(i) {
                    if triangle_feasible(b, r, r2, area) {
                        return true;
                    }
                }
            }
            false
        }
    }
}
