//! Dual-route cross-checks: every value that the library computes by a
//! fast specialized path is recomputed here by an independent slow route
//! (separable quadrature, Monte-Carlo estimates, or closed forms).

mod common;

use avoidlab_core::energy::{riesz_energy, riesz_energy_backprojection, hls_ratio};
use avoidlab_core::forms::{
    eval_mvec, eval_n0, eval_n0_set, eval_n1, eval_n1_kernel_route, eval_n_eps, MvecMode,
};
use avoidlab_core::geometry::{Box2, Point2};
use avoidlab_core::mollifier::{phi, zeta, PHI_HALF_WIDTH};
use avoidlab_core::quadrature::integrate;
use avoidlab_core::raster::RasterField;
use avoidlab_core::rng;
use avoidlab_core::setfile::SetDescription;
use avoidlab_core::{bands::BandSet, discrete::transference_sample};
use rand::Rng;

fn square_description(side: f64) -> SetDescription {
    SetDescription::parse(&format!("bounds 0 {side} 0 {side}\nbox 0 {side} 0 {side}\n")).unwrap()
}

/// Cumulative mollifier mass `int_{-inf}^z phi(s/t)/t ds`.
fn phi_cdf(t: f64, z: f64) -> f64 {
    let w = z / t;
    if w <= -PHI_HALF_WIDTH {
        0.0
    } else if w >= PHI_HALF_WIDTH {
        1.0
    } else {
        integrate(phi, -PHI_HALF_WIDTH, w, 96)
    }
}

#[test]
fn smoothed_form_on_full_square_matches_separable_quadrature() {
    // For A = [0,S]^2 the smoothed integrand factors: the x-slots couple
    // only through x and the y-slots only through y, so
    //   Neps(lambda) = int zeta(u) Ix(u) Iy(u) du
    // with 1-D integrals of smoothed interval indicators. This oracle
    // never touches the raster machinery.
    let s_len = 10.0;
    let a = RasterField::coverage(&square_description(s_len), 1.0 / 32.0);
    for (lambda, eps) in [(1.0, 0.5), (2.0, 0.5), (0.5, 0.25)] {
        let tx = lambda * eps;
        let ty = eps / lambda;
        let g1 = |v: f64| phi_cdf(tx, v) - phi_cdf(tx, v - s_len);
        let g2 = |v: f64| phi_cdf(ty, v) - phi_cdf(ty, v - s_len);
        let ix = |u: f64| integrate(|x| g1(x + lambda * u), 0.0, s_len, 160);
        let iy = |u: f64| integrate(|y| g2(y + 1.0 / (lambda * u)), 0.0, s_len, 160);
        let oracle = integrate(|u| zeta(u) * ix(u) * iy(u), 0.5, 2.0, 64);
        let ev = eval_n_eps(&a, lambda, eps).unwrap();
        let rel = (ev.value - oracle).abs() / oracle.abs();
        assert!(
            rel < 1e-2,
            "lambda {lambda} eps {eps}: raster {} vs separable {oracle}, rel {rel:.2e}",
            ev.value
        );
    }
}

#[test]
fn exact_form_matches_monte_carlo_on_box_union() {
    let sd = common::random_box_union(41, 10.0, 4, 0.45);
    let a = RasterField::coverage(&sd, 1.0 / 32.0);
    let vol = 10.0 * 10.0 * 1.5;
    for (lambda, idx) in [(1.3, 0u64), (0.4, 1u64)] {
        let ev = eval_n0_set(&a, lambda).unwrap();
        let mut r = rng::stream(7, "n0-mc", idx);
        let n = 4_000_000u64;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let x = 10.0 * r.gen::<f64>();
            let y = 10.0 * r.gen::<f64>();
            let u = 0.5 + 1.5 * r.gen::<f64>();
            let g = if sd.contains(Point2::new(x, y))
                && sd.contains(Point2::new(x + lambda * u, y))
                && sd.contains(Point2::new(x, y + 1.0 / (lambda * u)))
            {
                zeta(u)
            } else {
                0.0
            };
            sum += g;
            sum_sq += g * g;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let mc = vol * mean;
        let sigma = vol * (var / n as f64).sqrt();
        // three sigma for the sampler plus a rasterization cushion
        let tol = 3.0 * sigma + 0.015 * ev.value.abs();
        assert!(
            (ev.value - mc).abs() <= tol,
            "lambda {lambda}: raster {} vs mc {mc} (3 sigma {:.3e})",
            ev.value,
            3.0 * sigma
        );
    }
}

#[test]
fn structured_form_agrees_with_window_kernel_route() {
    // two independent routes: mollified slot samples vs the quadruple
    // integral against the window kernel
    for k in 0..10u64 {
        let sd = common::random_box_union(300 + k, 6.0, 3, 0.4);
        let a = RasterField::coverage(&sd, 1.0 / 8.0);
        let direct = eval_n1(&a, 1.0).unwrap().value;
        let kernel = eval_n1_kernel_route(&a, 1.0).unwrap();
        let rel = (direct - kernel).abs() / direct.abs().max(kernel.abs());
        assert!(
            rel < 1e-2,
            "set {k}: slot route {direct} vs kernel route {kernel}, rel {rel:.2e}"
        );
    }
}

#[test]
fn exact_form_is_translation_invariant() {
    let sd = common::random_box_union(15, 6.0, 3, 0.4);
    let h = 1.0 / 16.0;
    let a = RasterField::coverage(&sd, h);
    let shifted = SetDescription::from_boxes(
        Box2::new(0.0, 8.0, 0.0, 8.0).unwrap(),
        sd.boxes
            .iter()
            .map(|b| Box2::new(b.x.lo() + 2.0, b.x.hi() + 2.0, b.y.lo() + 1.0, b.y.hi() + 1.0).unwrap())
            .collect(),
    )
    .unwrap();
    let b = RasterField::coverage(&shifted, h);
    for lambda in [0.7, 1.0, 2.5] {
        let va = eval_n0_set(&a, lambda).unwrap().value;
        let vb = eval_n0_set(&b, lambda).unwrap().value;
        let rel = (va - vb).abs() / va.abs().max(1e-12);
        assert!(rel < 1e-9, "lambda {lambda}: {va} vs {vb} after shift");
    }
}

#[test]
fn horizontal_form_modes_agree() {
    for (k, eps) in [(0u64, 0.0), (1, 0.5), (2, 0.0)] {
        let sd = common::random_box_union(600 + k, 6.0, 3, 0.45);
        let a = RasterField::coverage(&sd, 1.0 / 16.0);
        for lambda in [0.5, 2.0] {
            let ident = eval_mvec(&a, lambda, eps, MvecMode::Identity).unwrap().value;
            let direct = eval_mvec(&a, lambda, eps, MvecMode::Direct).unwrap().value;
            let rel = (ident - direct).abs() / ident.abs().max(direct.abs()).max(1e-12);
            assert!(
                rel < 2e-2,
                "set {k} lambda {lambda} eps {eps}: identity {ident} vs direct {direct}"
            );
        }
    }
}

#[test]
fn unit_square_energy_matches_potential_quadrature() {
    // Reference route: integrate the closed-form Newtonian potential of
    // the unit square over the square with a product Gauss rule. The
    // grid route instead uses near-cell tables plus a multipole far form.
    let g = |a: f64, b: f64| -> f64 {
        if a == 0.0 || b == 0.0 {
            return 0.0;
        }
        let (x, y) = (a.abs(), b.abs());
        (x * (y / x).asinh() + y * (x / y).asinh()) * a.signum() * b.signum()
    };
    let potential =
        |x: f64, y: f64| g(x, y) - g(x - 1.0, y) - g(x, y - 1.0) + g(x - 1.0, y - 1.0);
    let reference = integrate(
        |x| integrate(|y| potential(x, y), 0.0, 1.0, 128),
        0.0,
        1.0,
        128,
    );
    let a = RasterField::coverage(&square_description(1.0), 1.0 / 32.0);
    let grid = riesz_energy(&a).unwrap().energy;
    let rel = (grid - reference).abs() / reference;
    assert!(
        rel < 5e-3,
        "grid {grid} vs potential quadrature {reference}, rel {rel:.2e}"
    );
}

#[test]
fn backprojection_tracks_grid_energy_on_box_union() {
    let sd = common::random_box_union(77, 6.0, 3, 0.45);
    let a = RasterField::coverage(&sd, 1.0 / 16.0);
    let grid = riesz_energy(&a).unwrap().energy;
    let bp = riesz_energy_backprojection(&a, 32).unwrap().energy;
    let rel = (grid - bp).abs() / grid;
    assert!(rel < 2e-2, "grid {grid} vs backprojection {bp}, rel {rel:.2e}");
}

#[test]
fn energy_is_monotone_under_set_inclusion() {
    let small = common::random_box_union(88, 6.0, 3, 0.3);
    let mut big_boxes = small.boxes.clone();
    big_boxes.push(Box2::new(5.2, 5.9, 5.2, 5.9).unwrap());
    let big = SetDescription::from_boxes(small.bounds, big_boxes).unwrap();
    let ea = riesz_energy(&RasterField::coverage(&small, 1.0 / 16.0)).unwrap().energy;
    let eb = riesz_energy(&RasterField::coverage(&big, 1.0 / 16.0)).unwrap().energy;
    assert!(ea <= eb, "adding a box decreased the energy: {ea} > {eb}");
}

#[test]
fn energy_measure_ratio_stays_below_disk_calibrated_cap() {
    // the disk ratio is (16 pi / 3) / pi^{3/2}; box unions must stay
    // within 1.5x of it
    let disk_ratio = 16.0 * std::f64::consts::PI / 3.0 / std::f64::consts::PI.powf(1.5);
    for k in 0..5u64 {
        let sd = common::random_box_union(900 + k, 6.0, 3, 0.35 + 0.05 * k as f64);
        let r = hls_ratio(&RasterField::coverage(&sd, 1.0 / 16.0)).unwrap();
        assert!(
            r <= disk_ratio * 1.5,
            "set {k}: ratio {r} above cap {}",
            disk_ratio * 1.5
        );
    }
}

#[test]
fn band_rasterization_matches_band_measure() {
    let bs = BandSet::harmonic(16.0).unwrap();
    let sd = SetDescription::from_band_set(&bs);
    let a = RasterField::coverage(&sd, 1.0 / 32.0);
    let rel = (a.integral() - bs.measure()).abs() / bs.measure();
    assert!(rel < 1e-9, "raster mass {} vs measure {}", a.integral(), bs.measure());
}

#[test]
fn transference_grid_beats_half_ambient_density_on_a_box() {
    let sd = SetDescription::from_boxes(
        Box2::new(0.0, 6.0, 0.0, 6.0).unwrap(),
        vec![Box2::new(0.6, 4.8, 0.9, 5.4).unwrap()],
    )
    .unwrap();
    let rep = transference_sample(&sd.box_union(), 6, 4.0, 200, 5).unwrap();
    assert!(rep.achieved_half_density);
    assert!(rep.density <= 1.0 && rep.ambient_density > 0.0);
    assert_eq!(rep.grid.n(), 6);
}

#[test]
fn triple_quadrature_refines_consistently() {
    // quad_error must bound the drift to a finer raster (factor-2 study)
    let sd = common::random_box_union(33, 6.0, 3, 0.4);
    let coarse = RasterField::coverage(&sd, 1.0 / 8.0);
    let fine = RasterField::coverage(&sd, 1.0 / 16.0);
    for lambda in [0.6, 1.0, 1.8] {
        let ec = eval_n0_set(&coarse, lambda).unwrap();
        let ef = eval_n0_set(&fine, lambda).unwrap();
        let drift = (ec.value - ef.value).abs();
        assert!(
            drift <= 4.0 * (ec.quad_error + ef.quad_error) + 1e-9,
            "lambda {lambda}: drift {drift:.3e} vs budgets {:.3e}/{:.3e}",
            ec.quad_error,
            ef.quad_error
        );
    }
}

#[test]
fn exact_form_slots_are_independent() {
    // mixing different sets in the three slots must reduce to the
    // single-set value when the sets coincide
    let sd = common::random_box_union(51, 6.0, 3, 0.4);
    let a = RasterField::coverage(&sd, 1.0 / 16.0);
    let mixed = eval_n0(&a, &a, &a, 1.2).unwrap().value;
    let single = eval_n0_set(&a, 1.2).unwrap().value;
    assert_eq!(mixed, single);
}
