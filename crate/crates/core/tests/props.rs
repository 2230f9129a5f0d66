//! Property-based invariants for the exact predicates and text formats.

use avoidlab_core::discrete::GridSet;
use avoidlab_core::geometry::{corner_feasible, cross, cross_range, Box2, Point2};
use avoidlab_core::setfile::SetDescription;
use proptest::prelude::*;

fn arb_box() -> impl Strategy<Value = Box2> {
    (0.0..6.0f64, 0.05..2.0f64, 0.0..6.0f64, 0.05..2.0f64)
        .prop_map(|(x, w, y, h)| Box2::new(x, x + w, y, y + h).unwrap())
}

fn point_in(b: &Box2, fx: f64, fy: f64) -> Point2 {
    Point2::new(
        b.x.lo() + fx * (b.x.hi() - b.x.lo()),
        b.y.lo() + fy * (b.y.hi() - b.y.lo()),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn set_description_round_trips(raw in prop::collection::vec(
        (0.0..7.0f64, 0.01..1.0f64, 0.0..7.0f64, 0.01..1.0f64), 1..12)) {
        let boxes: Vec<Box2> = raw
            .into_iter()
            .map(|(x, w, y, h)| Box2::new(x, x + w, y, y + h).unwrap())
            .collect();
        let sd = SetDescription::from_boxes(Box2::new(0.0, 8.0, 0.0, 8.0).unwrap(), boxes).unwrap();
        let again = SetDescription::parse(&sd.to_text()).unwrap();
        prop_assert_eq!(again.to_text(), sd.to_text());
        prop_assert_eq!(again.boxes.len(), sd.boxes.len());
    }

    #[test]
    fn sampled_cross_products_stay_inside_cross_range(
        b0 in arb_box(), b1 in arb_box(), b2 in arb_box(),
        f in prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64), 3)) {
        let range = cross_range(&b0, &b1, &b2);
        let p0 = point_in(&b0, f[0].0, f[0].1);
        let p1 = point_in(&b1, f[1].0, f[1].1);
        let p2 = point_in(&b2, f[2].0, f[2].1);
        let v = cross(p0, p1, p2);
        let slack = 1e-9 * (1.0 + range.lo().abs().max(range.hi().abs()));
        prop_assert!(v >= range.lo() - slack && v <= range.hi() + slack,
            "cross {} outside [{}, {}]", v, range.lo(), range.hi());
    }

    #[test]
    fn corner_feasibility_is_monotone_under_box_growth(
        b0 in arb_box(), b1 in arb_box(), b2 in arb_box(),
        pad in 0.0..1.5f64) {
        let grow = |b: &Box2| Box2::new(
            (b.x.lo() - pad).max(0.0), b.x.hi() + pad,
            (b.y.lo() - pad).max(0.0), b.y.hi() + pad).unwrap();
        if corner_feasible(&b0, &b1, &b2) {
            prop_assert!(corner_feasible(&grow(&b0), &grow(&b1), &grow(&b2)),
                "growing the boxes lost a feasible corner");
        }
    }

    #[test]
    fn witnessed_corners_imply_feasibility(
        b0 in arb_box(), b1 in arb_box(), b2 in arb_box(),
        fx in 0.0..=1.0f64, fy in 0.0..=1.0f64, ft in 0.0..=1.0f64) {
        // construct an actual corner from the sampled base point if the
        // offset windows allow one, then the interval predicate must agree
        let p0 = point_in(&b0, fx, fy);
        let t_lo = (b1.x.lo() - p0.x).max(1e-6);
        let t_hi = b1.x.hi() - p0.x;
        if t_lo <= t_hi {
            let t = t_lo + ft * (t_hi - t_lo);
            let p1 = Point2::new(p0.x + t, p0.y);
            let p2 = Point2::new(p0.x, p0.y + 1.0 / t);
            if b1.contains(p1) && b2.contains(p2) {
                prop_assert!(corner_feasible(&b0, &b1, &b2),
                    "witness t = {} rejected", t);
            }
        }
    }

    #[test]
    fn grid_set_round_trips(pts in prop::collection::vec((0usize..20, 0usize..20), 0..50)) {
        let g = GridSet::from_points(20, &pts).unwrap();
        let again = GridSet::parse(&g.to_text()).unwrap();
        prop_assert_eq!(again.points(), g.points());
        prop_assert_eq!(again.n(), 20);
    }

    #[test]
    fn band_measure_matches_box_cover_mass(side in 4.0..40.0f64) {
        let bs = avoidlab_core::bands::BandSet::harmonic(side).unwrap();
        // each column of the cover overshoots a band by at most two
        // pitches of height, so the excess is under 3 * pitch * side per band
        let pitch = side / 512.0;
        let (cover, exact) = bs.to_boxes(pitch);
        prop_assert!(!exact);
        let m = bs.measure();
        let n_bands = bs.bands().len() as f64;
        prop_assert!(cover.measure() >= m - 1e-9);
        prop_assert!(cover.measure() <= m + 3.0 * n_bands * pitch * side);
    }
}
