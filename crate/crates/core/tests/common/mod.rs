//! Shared corpus generation for the integration suites: deterministic
//! random unions of disjoint boxes with a controllable fill fraction.
#![allow(dead_code)] // each test target uses its own subset

use avoidlab_core::geometry::Box2;
use avoidlab_core::rng;
use avoidlab_core::setfile::SetDescription;
use rand::Rng;

/// A union of disjoint axis boxes inside `[0, side]^2`: the square is
/// cut into `tiles x tiles` cells and each selected cell receives one
/// random sub-box. Fill keeps adding tiles until the target density is
/// reached (or every tile is used).
pub fn random_box_union(seed: u64, side: f64, tiles: usize, target_density: f64) -> SetDescription {
    let mut r = rng::stream(seed, "corpus-box-union", 0);
    let tile = side / tiles as f64;
    let mut order: Vec<(usize, usize)> = (0..tiles)
        .flat_map(|i| (0..tiles).map(move |j| (i, j)))
        .collect();
    // deterministic shuffle
    for k in (1..order.len()).rev() {
        let j = r.gen_range(0..=k);
        order.swap(k, j);
    }
    let mut boxes = Vec::new();
    let mut area = 0.0;
    for (i, j) in order {
        if area >= target_density * side * side {
            break;
        }
        let fx = 0.55 + 0.4 * r.gen::<f64>();
        let fy = 0.55 + 0.4 * r.gen::<f64>();
        let w = fx * tile;
        let h = fy * tile;
        let x0 = i as f64 * tile + (tile - w) * r.gen::<f64>();
        let y0 = j as f64 * tile + (tile - h) * r.gen::<f64>();
        boxes.push(Box2::new(x0, x0 + w, y0, y0 + h).unwrap());
        area += w * h;
    }
    let bounds = Box2::new(0.0, side, 0.0, side).unwrap();
    SetDescription::from_boxes(bounds, boxes).unwrap()
}

/// Like `random_box_union` but on a 2x2 tiling with high fill fractions,
/// so every box spans a sizable fraction of the side. The smoothing
/// scans compare mollified fields against sharp ones, and the mollifier
/// is 20 scale units wide: boxes much narrower than the smallest scanned
/// width sit in a pre-asymptotic regime that no grid refinement can fix,
/// so the shared corpus keeps its features coarse.
pub fn chunky_box_union(seed: u64, side: f64, target_density: f64) -> SetDescription {
    let mut r = rng::stream(seed, "corpus-box-union", 0);
    let tile = side / 2.0;
    let mut order: Vec<(usize, usize)> = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .collect();
    for k in (1..order.len()).rev() {
        let j = r.gen_range(0..=k);
        order.swap(k, j);
    }
    let mut boxes = Vec::new();
    let mut area = 0.0;
    for (i, j) in order {
        if area >= target_density * side * side {
            break;
        }
        let fx = 0.7 + 0.25 * r.gen::<f64>();
        let fy = 0.7 + 0.25 * r.gen::<f64>();
        let w = fx * tile;
        let h = fy * tile;
        let x0 = i as f64 * tile + (tile - w) * r.gen::<f64>();
        let y0 = j as f64 * tile + (tile - h) * r.gen::<f64>();
        boxes.push(Box2::new(x0, x0 + w, y0, y0 + h).unwrap());
        area += w * h;
    }
    let bounds = Box2::new(0.0, side, 0.0, side).unwrap();
    SetDescription::from_boxes(bounds, boxes).unwrap()
}

/// Ten fixed corpus sets on `[0, side]^2` of varying density plus shape.
pub fn corpus(side: f64) -> Vec<SetDescription> {
    let mut out = Vec::new();
    // the full square
    let bounds = Box2::new(0.0, side, 0.0, side).unwrap();
    out.push(
        SetDescription::from_boxes(bounds, vec![Box2::new(0.0, side, 0.0, side).unwrap()])
            .unwrap(),
    );
    // a centred box
    out.push(
        SetDescription::from_boxes(
            bounds,
            vec![Box2::new(0.1 * side, 0.8 * side, 0.15 * side, 0.9 * side).unwrap()],
        )
        .unwrap(),
    );
    // the random members stay dense: below roughly half fill the error
    // integral keeps shrinking noticeably over the scanned widths and
    // the log-growth comparison would measure that transient instead
    for k in 0..8u64 {
        let density = 0.52 + 0.02 * k as f64;
        out.push(chunky_box_union(1100 + k, side, density));
    }
    out
}
