//! Trilinear counting forms.
//!
//! The exact form weights occurrences of the corner configuration at
//! eccentricity `lambda`:
//!
//! ```text
//! N0[f0,f1,f2](lambda) =
//!   int zeta(u) int int f0(x,y) f1(x+lambda u, y) f2(x, y+1/(lambda u)) dx dy du
//! ```
//!
//! The smoothed form mollifies the second slot in x at width `lambda eps`
//! and the third in y at width `eps/lambda`; `eps = 1` is the structured
//! form.  The horizontal form replaces the third slot by the horizontal
//! section average, and the directional form averages that over rotations.
//!
//! Quadrature: Gauss-Legendre in `u`, midpoint cell sums over raster
//! support, bilinear interpolation for shifted samples.  `quad_error`
//! combines the 64-vs-32 node delta in `u` with a one-level grid
//! refinement delta (evaluate on the 2h coarsening and difference).

use crate::error::CoreError;
use crate::mollifier::{self, zeta};
use crate::quadrature::{gauss_legendre, least_squares_slope, log_spaced};
use crate::raster::RasterField;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    Exact,
    Smoothed,
    Structured,
    Horizontal,
    Directional,
}

#[derive(Debug, Clone)]
pub struct FormEvaluation {
    pub kind: FormKind,
    pub lambda: f64,
    /// Mollification scale; 0 for exact evaluations.
    pub eps: f64,
    pub value: f64,
    pub quad_error: f64,
    /// Set when a requested mollifier is narrower than two cells.
    pub under_resolved: bool,
}

/// Gauss-Legendre nodes on the bump support with the bump folded into
/// the weights: pairs `(u_q, w_q zeta(u_q))`.
fn zeta_nodes(n: usize) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(n);
    let (a, b) = (mollifier::ZETA_LO, mollifier::ZETA_HI);
    gl.nodes
        .iter()
        .zip(&gl.weights)
        .map(|(&x, &w)| {
            let u = 0.5 * (a + b) + 0.5 * (b - a) * x;
            (u, 0.5 * (b - a) * w * zeta(u))
        })
        .collect()
}

fn support_cells(f: &RasterField) -> Vec<(f64, f64, f64)> {
    f.support_cells()
}

/// Core quadrature: sum over slot-0 support cells of the u-integral of
/// the two shifted slot samples.  Deterministic: fixed-size parallel
/// chunks reduced in index order.
fn triple_sum<F1, F2>(
    cells: &[(f64, f64, f64)],
    cell_area: f64,
    lambda: f64,
    nodes: &[(f64, f64)],
    f1: &F1,
    f2: &F2,
) -> f64
where
    F1: Fn(f64, f64) -> f64 + Sync,
    F2: Fn(f64, f64) -> f64 + Sync,
{
    let partials: Vec<f64> = cells
        .par_chunks(1024)
        .map(|chunk| {
            let mut acc = 0.0;
            for &(cx, cy, v0) in chunk {
                let mut inner = 0.0;
                for &(u, w) in nodes {
                    let s1 = f1(cx + lambda * u, cy);
                    if s1 == 0.0 {
                        continue;
                    }
                    let s2 = f2(cx, cy + 1.0 / (lambda * u));
                    inner += w * s1 * s2;
                }
                acc += v0 * inner;
            }
            acc
        })
        .collect();
    cell_area * partials.iter().sum::<f64>()
}

fn n0_value(f0: &RasterField, f1: &RasterField, f2: &RasterField, lambda: f64, n_u: usize) -> f64 {
    let cells = support_cells(f0);
    let nodes = zeta_nodes(n_u);
    triple_sum(
        &cells,
        f0.hx() * f0.hy(),
        lambda,
        &nodes,
        &|x, y| f1.sample(x, y),
        &|x, y| f2.sample(x, y),
    )
}

fn check_lambda(lambda: f64) -> Result<(), CoreError> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(CoreError::BadConfig(format!(
            "eccentricity must be positive and finite, got {lambda}"
        )))
    }
}

/// Exact form on three fields sharing a grid.
pub fn eval_n0(
    f0: &RasterField,
    f1: &RasterField,
    f2: &RasterField,
    lambda: f64,
) -> Result<FormEvaluation, CoreError> {
    check_lambda(lambda)?;
    f0.require_same_grid(f1)?;
    f0.require_same_grid(f2)?;
    let v64 = n0_value(f0, f1, f2, lambda, 64);
    let v32 = n0_value(f0, f1, f2, lambda, 32);
    let vc = n0_value(&f0.coarsen(), &f1.coarsen(), &f2.coarsen(), lambda, 64);
    Ok(FormEvaluation {
        kind: FormKind::Exact,
        lambda,
        eps: 0.0,
        value: v64,
        quad_error: (v64 - v32).abs() + (v64 - vc).abs(),
        under_resolved: false,
    })
}

/// Exact form of a single set raster in all three slots.
pub fn eval_n0_set(a: &RasterField, lambda: f64) -> Result<FormEvaluation, CoreError> {
    eval_n0(a, a, a, lambda)
}

fn n_eps_value(a: &RasterField, lambda: f64, eps: f64, n_u: usize) -> (f64, bool) {
    let (f1, u1) = a.convolve_x(lambda * eps);
    let (f2, u2) = a.convolve_y(eps / lambda);
    let cells = support_cells(a);
    let nodes = zeta_nodes(n_u);
    let v = triple_sum(
        &cells,
        a.hx() * a.hy(),
        lambda,
        &nodes,
        &|x, y| f1.sample(x, y),
        &|x, y| f2.sample(x, y),
    );
    (v, u1 || u2)
}

/// Smoothed form at mollification scale `eps` in (0, 1].
pub fn eval_n_eps(a: &RasterField, lambda: f64, eps: f64) -> Result<FormEvaluation, CoreError> {
    check_lambda(lambda)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(CoreError::BadConfig(format!(
            "mollification scale must lie in (0, 1], got {eps}"
        )));
    }
    let (v64, under) = n_eps_value(a, lambda, eps, 64);
    let (v32, _) = n_eps_value(a, lambda, eps, 32);
    let (vc, _) = n_eps_value(&a.coarsen(), lambda, eps, 64);
    Ok(FormEvaluation {
        kind: if eps == 1.0 {
            FormKind::Structured
        } else {
            FormKind::Smoothed
        },
        lambda,
        eps,
        value: v64,
        quad_error: (v64 - v32).abs() + (v64 - vc).abs(),
        under_resolved: under,
    })
}

/// Structured form: the smoothed form at `eps = 1`.
pub fn eval_n1(a: &RasterField, lambda: f64) -> Result<FormEvaluation, CoreError> {
    eval_n_eps(a, lambda, 1.0)
}

/// Window kernel `K+(x, y) = int phi(x/lambda + u) phi(lambda y + 1/u) zeta(u) du`.
pub fn kernel_kplus(lambda: f64, x: f64, y: f64) -> f64 {
    let nodes = zeta_nodes(64);
    nodes
        .iter()
        .map(|&(u, w)| w * mollifier::phi(x / lambda + u) * mollifier::phi(lambda * y + 1.0 / u))
        .sum()
}

/// Minimum of the window kernel over an `(n+1)^2` grid on the box
/// `[-lambda, lambda] x [-1/lambda, 1/lambda]`.
pub fn kplus_min_on_box(lambda: f64, n: usize) -> f64 {
    let mut min = f64::INFINITY;
    for j in 0..=n {
        let y = -1.0 / lambda + 2.0 / lambda * j as f64 / n as f64;
        for i in 0..=n {
            let x = -lambda + 2.0 * lambda * i as f64 / n as f64;
            min = min.min(kernel_kplus(lambda, x, y));
        }
    }
    min
}

/// Structured form via the window-kernel quadruple integral
///
/// ```text
/// N1(lambda) = int int int int f(x,y) f(x',y) f(x,y') K+(x-x', y-y') dx dx' dy dy'
/// ```
///
/// An independent route to `eval_n1` used for cross-checking; cost grows
/// as support x nx x ny, so keep rasters modest.
pub fn eval_n1_kernel_route(a: &RasterField, lambda: f64) -> Result<f64, CoreError> {
    check_lambda(lambda)?;
    let nx = a.nx();
    let ny = a.ny();
    // K+ vanishes once either argument leaves the mollifier support.
    let kx_max = lambda * (mollifier::PHI_HALF_WIDTH + mollifier::ZETA_HI);
    let ky_max = (mollifier::PHI_HALF_WIDTH + 2.0) / lambda;
    let table: Vec<Vec<f64>> = (0..2 * ny - 1)
        .into_par_iter()
        .map(|dj| {
            let b = (dj as isize - (ny as isize - 1)) as f64 * a.hy();
            (0..2 * nx - 1)
                .map(|di| {
                    let x = (di as isize - (nx as isize - 1)) as f64 * a.hx();
                    if x.abs() > kx_max || b.abs() > ky_max {
                        0.0
                    } else {
                        kernel_kplus(lambda, x, b)
                    }
                })
                .collect()
        })
        .collect();
    let cells: Vec<(usize, usize, f64)> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| (i, j, a.get(i, j)))
        .filter(|&(_, _, v)| v != 0.0)
        .collect();
    let vals = a.values();
    let partials: Vec<f64> = cells
        .par_chunks(256)
        .map(|chunk| {
            let mut acc = 0.0;
            for &(i, j, v0) in chunk {
                let mut s = 0.0;
                for ip in 0..nx {
                    let f1 = vals[j * nx + ip];
                    if f1 == 0.0 {
                        continue;
                    }
                    let di = i + nx - 1 - ip;
                    let mut t = 0.0;
                    for jp in 0..ny {
                        let f2 = vals[jp * nx + i];
                        if f2 == 0.0 {
                            continue;
                        }
                        let dj = j + ny - 1 - jp;
                        t += f2 * table[dj][di];
                    }
                    s += f1 * t;
                }
                acc += v0 * s;
            }
            acc
        })
        .collect();
    let h4 = (a.hx() * a.hy()).powi(2);
    Ok(h4 * partials.iter().sum::<f64>())
}

/// Exact-zero diagnostic for a rasterized avoiding set.
///
/// Splits the coverage raster `r = m + e` into the exact cell-center
/// membership `m` and the boundary residue `e`, and expands the form
/// by trilinearity.  Every term except the pure-membership one carries
/// an `e` factor and is dominated by the three boundary sums below; the
/// pure-membership term is nonnegative and computed directly.  The
/// reported bound therefore dominates |value| up to roundoff whenever
/// the underlying set truly avoids corners.
#[derive(Debug, Clone)]
pub struct ExactZeroReport {
    pub lambda: f64,
    pub value: f64,
    /// Rasterization plus u-quadrature error budget; `|value| <= bound`.
    pub bound: f64,
    /// Total absolute boundary residue mass of the raster.
    pub boundary_mass: f64,
}

pub fn exact_zero_report(
    a: &RasterField,
    member: impl Fn(f64, f64) -> bool + Sync,
    lambda: f64,
) -> Result<ExactZeroReport, CoreError> {
    check_lambda(lambda)?;
    let mut m = a.clone();
    let mut eabs = a.clone();
    for j in 0..a.ny() {
        for i in 0..a.nx() {
            let ind = if member(a.cx(i), a.cy(j)) { 1.0 } else { 0.0 };
            m.set(i, j, ind);
            eabs.set(i, j, (a.get(i, j) - ind).abs());
        }
    }
    let nodes64 = zeta_nodes(64);
    let nodes32 = zeta_nodes(32);
    let area = a.hx() * a.hy();
    let a_cells = support_cells(a);
    let m_cells = support_cells(&m);
    let e_cells = support_cells(&eabs);
    let sa = |x: f64, y: f64| a.sample(x, y);
    let sm = |x: f64, y: f64| m.sample(x, y);
    let se = |x: f64, y: f64| eabs.sample(x, y);
    let v64 = triple_sum(&a_cells, area, lambda, &nodes64, &sa, &sa);
    let v32 = triple_sum(&a_cells, area, lambda, &nodes32, &sa, &sa);
    let b1 = triple_sum(&e_cells, area, lambda, &nodes64, &sa, &sa);
    let b2 = triple_sum(&m_cells, area, lambda, &nodes64, &se, &sa);
    let b3 = triple_sum(&m_cells, area, lambda, &nodes64, &sm, &se);
    let nm = triple_sum(&m_cells, area, lambda, &nodes64, &sm, &sm);
    Ok(ExactZeroReport {
        lambda,
        value: v64,
        bound: b1 + b2 + b3 + nm + (v64 - v32).abs(),
        boundary_mass: area * e_cells.iter().map(|c| c.2).sum::<f64>(),
    })
}

/// Anisotropic rescaling check: the form at eccentricity `lambda`
/// equals the form at eccentricity 1 of `(x, y) -> f(lambda x, y/lambda)`.
/// Both sides are evaluated at the raster pitch and its coarsening, and
/// Richardson-extrapolated before comparison.
#[derive(Debug, Clone)]
pub struct RescaleCheck {
    pub lambda: f64,
    /// Relative discrepancy at the native pitch.
    pub fine: f64,
    /// Relative discrepancy at the 2h coarsening.
    pub coarse: f64,
    /// Discrepancy of the extrapolated (refinement-limit) values.
    pub extrapolated: f64,
    /// Raw route values: direct form at the native pitch and coarsening.
    pub lhs: (f64, f64),
    /// Raw route values: unit-eccentricity form of the rescaled field.
    pub rhs: (f64, f64),
}

fn rescaled_field(a: &RasterField, lambda: f64) -> RasterField {
    if lambda == 1.0 {
        return a.clone();
    }
    // target pitch: half the source geometric mean, since the squeezed
    // axis loses a factor max(lambda, 1/lambda) of effective resolution
    let h = 0.5 * (a.hx() * a.hy()).sqrt();
    let wx = a.nx() as f64 * a.hx() / lambda;
    let wy = a.ny() as f64 * a.hy() * lambda;
    let nx = ((wx / h).round() as usize).max(1);
    let ny = ((wy / h).round() as usize).max(1);
    // each target cell takes the exact mean of the source over its
    // pre-image rectangle (the map is axis-aligned), which keeps the
    // resampling mass-exact instead of first-order in h
    let p = a.prefix_table();
    let x0 = a.x0() / lambda;
    let y0 = a.y0() * lambda;
    RasterField::from_fn(x0, y0, h, h, nx, ny, |x, y| {
        let xa = lambda * (x - 0.5 * h);
        let xb = lambda * (x + 0.5 * h);
        let ya = (y - 0.5 * h) / lambda;
        let yb = (y + 0.5 * h) / lambda;
        p.rect_mean(xa, xb, ya, yb)
    })
}

pub fn rescale_identity_check(a: &RasterField, lambda: f64) -> Result<RescaleCheck, CoreError> {
    check_lambda(lambda)?;
    // The form never exceeds zeta-mass times the set measure (both
    // shifted factors are at most one), so discrepancies are reported
    // relative to the value or to a fixed small fraction of that cap,
    // whichever is larger: at extreme eccentricities the value itself
    // can sit orders of magnitude below the raster error scale, where a
    // bare relative error only measures noise against noise.
    let floor = 1e-3 * mollifier::zeta_mass() * a.integral();
    let rel = move |l: f64, r: f64| (l - r).abs() / l.abs().max(floor).max(1e-12);
    let g = rescaled_field(a, lambda);
    let lhs_h = n0_value(a, a, a, lambda, 64);
    let rhs_h = n0_value(&g, &g, &g, 1.0, 64);
    let a2 = a.coarsen();
    let g2 = rescaled_field(&a2, lambda);
    let lhs_2h = n0_value(&a2, &a2, &a2, lambda, 64);
    let rhs_2h = n0_value(&g2, &g2, &g2, 1.0, 64);
    Ok(RescaleCheck {
        lambda,
        fine: rel(lhs_h, rhs_h),
        coarse: rel(lhs_2h, rhs_2h),
        extrapolated: rel(2.0 * lhs_h - lhs_2h, 2.0 * rhs_h - rhs_2h),
        lhs: (lhs_h, lhs_2h),
        rhs: (rhs_h, rhs_2h),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvecMode {
    /// Third slot replaced by a broadcast raster of row averages,
    /// evaluated through the standard raster path times the side length.
    Identity,
    /// Direct four-fold quadrature against the 1-D section profile.
    Direct,
}

fn side_of(a: &RasterField) -> f64 {
    (a.x0() + a.nx() as f64 * a.hx()).max(a.y0() + a.ny() as f64 * a.hy())
}

fn mvec_value(a: &RasterField, lambda: f64, eps: f64, mode: MvecMode, n_u: usize) -> (f64, bool) {
    let s = a.row_integrals();
    let (s_sm, ur_s) = if eps > 0.0 {
        s.convolve(eps / lambda)
    } else {
        (s, false)
    };
    let (f1, ur1) = if eps > 0.0 {
        a.convolve_x(lambda * eps)
    } else {
        (a.clone(), false)
    };
    let under = (eps > 0.0) && (ur_s || ur1);
    let cells = support_cells(a);
    let nodes = zeta_nodes(n_u);
    let area = a.hx() * a.hy();
    let v = match mode {
        MvecMode::Direct => triple_sum(
            &cells,
            area,
            lambda,
            &nodes,
            &|x, y| f1.sample(x, y),
            &|_, y| s_sm.sample(y),
        ),
        MvecMode::Identity => {
            let side = side_of(a);
            let ny = s_sm.values.len();
            let mut g = RasterField::new(a.x0(), s_sm.t0, a.hx(), s_sm.ht, a.nx(), ny);
            for j in 0..ny {
                let row = s_sm.values[j] / side;
                for i in 0..a.nx() {
                    g.set(i, j, row);
                }
            }
            side * triple_sum(
                &cells,
                area,
                lambda,
                &nodes,
                &|x, y| f1.sample(x, y),
                &|x, y| g.sample(x, y),
            )
        }
    };
    (v, under)
}

/// Horizontal form: third slot is the horizontal section mass.
/// `eps = 0` is the exact variant.
pub fn eval_mvec(
    a: &RasterField,
    lambda: f64,
    eps: f64,
    mode: MvecMode,
) -> Result<FormEvaluation, CoreError> {
    check_lambda(lambda)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(CoreError::BadConfig(format!(
            "mollification scale must lie in [0, 1], got {eps}"
        )));
    }
    let (v64, under) = mvec_value(a, lambda, eps, mode, 64);
    let (v32, _) = mvec_value(a, lambda, eps, mode, 32);
    let (vc, _) = mvec_value(&a.coarsen(), lambda, eps, mode, 64);
    Ok(FormEvaluation {
        kind: FormKind::Horizontal,
        lambda,
        eps,
        value: v64,
        quad_error: (v64 - v32).abs() + (v64 - vc).abs(),
        under_resolved: under,
    })
}

/// Directional form: average of the horizontal form over `n_angles`
/// rotations of the set about its raster center.
pub fn eval_m(
    a: &RasterField,
    lambda: f64,
    eps: f64,
    n_angles: usize,
) -> Result<FormEvaluation, CoreError> {
    if n_angles < 4 {
        return Err(CoreError::BadConfig(format!(
            "directional average needs at least 4 angles, got {n_angles}"
        )));
    }
    let center = crate::geometry::Point2::new(
        a.x0() + a.nx() as f64 * a.hx() / 2.0,
        a.y0() + a.ny() as f64 * a.hy() / 2.0,
    );
    let mut value = 0.0;
    let mut quad = 0.0;
    let mut under = false;
    for k in 0..n_angles {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n_angles as f64;
        let rot = if k == 0 {
            a.clone()
        } else {
            a.rotated(theta, center)
        };
        let ev = eval_mvec(&rot, lambda, eps, MvecMode::Direct)?;
        value += ev.value;
        quad += ev.quad_error;
        under |= ev.under_resolved;
    }
    Ok(FormEvaluation {
        kind: FormKind::Directional,
        lambda,
        eps,
        value: value / n_angles as f64,
        quad_error: quad / n_angles as f64,
        under_resolved: under,
    })
}

#[derive(Debug, Clone, Copy)]
pub enum ScanFamily {
    /// Corner counting forms.
    Corner,
    /// Directional forms averaged over this many angles.
    Directional { n_angles: usize },
}

#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub lambda: f64,
    /// Smoothed-minus-structured difference at this eccentricity.
    pub diff: f64,
}

#[derive(Debug, Clone)]
pub struct ErrorScan {
    pub eps: f64,
    /// Trapezoid value of `diff^2` in log lambda over `[1/R, R]`.
    pub integral: f64,
    pub points: Vec<ScanPoint>,
}

/// Squared L2(d lambda / lambda) size of the error part
/// (smoothed minus structured form) over `lambda in [1/side, side]`.
pub fn error_part_scan(
    a: &RasterField,
    eps: f64,
    side: f64,
    n_lambda: usize,
    family: ScanFamily,
) -> Result<ErrorScan, CoreError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(CoreError::BadConfig(format!(
            "mollification scale must lie in (0, 1], got {eps}"
        )));
    }
    if n_lambda < 16 {
        return Err(CoreError::BadConfig(
            "error scan needs at least 16 eccentricity points".into(),
        ));
    }
    if !(side > 1.0) {
        return Err(CoreError::BadConfig(format!(
            "scan range needs side > 1, got {side}"
        )));
    }
    let lambdas = log_spaced(1.0 / side, side, n_lambda);
    let mut points = Vec::with_capacity(n_lambda);
    for &l in &lambdas {
        let diff = match family {
            ScanFamily::Corner => {
                eval_n_eps(a, l, eps)?.value - eval_n1(a, l)?.value
            }
            ScanFamily::Directional { n_angles } => {
                eval_m(a, l, eps, n_angles)?.value - eval_m(a, l, 1.0, n_angles)?.value
            }
        };
        points.push(ScanPoint { lambda: l, diff });
    }
    let mut integral = 0.0;
    for w in points.windows(2) {
        let dln = (w[1].lambda / w[0].lambda).ln();
        integral += 0.5 * dln * (w[0].diff.powi(2) + w[1].diff.powi(2));
    }
    Ok(ErrorScan {
        eps,
        integral,
        points,
    })
}

#[derive(Debug, Clone)]
pub struct StructuredPoint {
    pub lambda: f64,
    /// Structured corner form scaled by `side^4 / |A|^3`.
    pub corner_ratio: f64,
    /// Structured directional form scaled by `side^3 / |A|^3`.
    pub directional_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct StructuredScan {
    pub corner_min: f64,
    pub directional_min: f64,
    pub points: Vec<StructuredPoint>,
}

/// Normalized lower-bound scan of the structured forms over a log
/// lambda grid in `[1/side, side]`.
pub fn structured_lower_scan(
    a: &RasterField,
    side: f64,
    n_lambda: usize,
    n_angles: usize,
) -> Result<StructuredScan, CoreError> {
    let mass = a.integral();
    if mass <= 0.0 {
        return Err(CoreError::BadConfig(
            "structured scan needs a set of positive measure".into(),
        ));
    }
    if n_lambda < 2 {
        return Err(CoreError::BadConfig("need at least 2 scan points".into()));
    }
    let mass3 = mass.powi(3);
    let lambdas = log_spaced(1.0 / side, side, n_lambda);
    let mut points = Vec::with_capacity(n_lambda);
    for &l in &lambdas {
        let corner = eval_n1(a, l)?.value * side.powi(4) / mass3;
        let dir = eval_m(a, l, 1.0, n_angles)?.value * side.powi(3) / mass3;
        points.push(StructuredPoint {
            lambda: l,
            corner_ratio: corner,
            directional_ratio: dir,
        });
    }
    let corner_min = points.iter().map(|p| p.corner_ratio).fold(f64::INFINITY, f64::min);
    let directional_min = points
        .iter()
        .map(|p| p.directional_ratio)
        .fold(f64::INFINITY, f64::min);
    Ok(StructuredScan {
        corner_min,
        directional_min,
        points,
    })
}

#[derive(Debug, Clone)]
pub struct UniformPoint {
    pub eps: f64,
    /// |exact - smoothed| at this scale.
    pub diff: f64,
    /// Whether both mollifier widths span at least four cells.
    pub resolvable: bool,
    /// Whether the difference sits at the quadrature noise floor.
    pub below_noise: bool,
}

#[derive(Debug, Clone)]
pub struct UniformScan {
    /// Fitted decay exponent of `diff` against `eps`, when measurable.
    pub sigma_hat: Option<f64>,
    /// True when noise-floor points had to be excluded (or nothing was fittable).
    pub noise_limited: bool,
    pub exact_value: f64,
    pub points: Vec<UniformPoint>,
}

/// Decay of the uniform part: fit `|N0 - Neps| ~ eps^sigma` over a
/// decreasing list of scales, skipping under-resolved and noise-floor
/// points.
pub fn uniform_part_scan(
    a: &RasterField,
    lambda: f64,
    eps_list: &[f64],
) -> Result<UniformScan, CoreError> {
    check_lambda(lambda)?;
    if a.integral() <= 0.0 {
        return Err(CoreError::BadConfig(
            "uniform scan needs a set of positive measure".into(),
        ));
    }
    if eps_list.len() < 2 || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CoreError::BadConfig(
            "scales must be strictly decreasing".into(),
        ));
    }
    if eps_list.iter().any(|&e| !(0.0 < e && e <= 1.0)) {
        return Err(CoreError::BadConfig("scales must lie in (0, 1]".into()));
    }
    let exact = eval_n0_set(a, lambda)?.value;
    let h = a.hx().max(a.hy());
    let noise_floor = 1e-9 * (1.0 + exact.abs());
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let ev = eval_n_eps(a, lambda, eps)?;
        let diff = (exact - ev.value).abs();
        let resolvable = eps * lambda.min(1.0 / lambda) >= 4.0 * h - 1e-12;
        points.push(UniformPoint {
            eps,
            diff,
            resolvable,
            below_noise: diff < noise_floor,
        });
    }
    let resolvable_count = points.iter().filter(|p| p.resolvable).count();
    if resolvable_count < 3 {
        return Err(CoreError::InsufficientScales {
            need: 3,
            found: resolvable_count,
        });
    }
    let fit: Vec<&UniformPoint> = points
        .iter()
        .filter(|p| p.resolvable && !p.below_noise)
        .collect();
    let noise_limited = fit.len() < resolvable_count;
    let sigma_hat = if fit.len() >= 2 {
        let xs: Vec<f64> = fit.iter().map(|p| p.eps.ln()).collect();
        let ys: Vec<f64> = fit.iter().map(|p| p.diff.ln()).collect();
        Some(least_squares_slope(&xs, &ys).0)
    } else {
        None
    };
    Ok(UniformScan {
        sigma_hat,
        noise_limited: noise_limited || sigma_hat.is_none(),
        exact_value: exact,
        points,
    })
}
