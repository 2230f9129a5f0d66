//! Fourier-side machinery: transforms of rasters with continuum
//! normalization, anisotropic Sobolev norms, the mollifier gap integral,
//! the hyperbolic oscillatory multiplier, and dyadic partition pieces.
//!
//! Transform convention: `F(xi, eta) = int f(x, y) e^{-2 pi i (x xi + y eta)}`,
//! realized by a zero-padded FFT with cell-center phase correction, so
//! Plancherel holds exactly at the discrete level.

use crate::error::CoreError;
use crate::forms;
use crate::mollifier::{self, phi_hat, zeta};
use crate::quadrature::{integrate, integrate_oscillatory, least_squares_slope, log_spaced};
use crate::raster::RasterField;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn signed_index(k: usize, n: usize) -> isize {
    if k <= n / 2 {
        k as isize
    } else {
        k as isize - n as isize
    }
}

#[derive(Debug, Clone)]
pub struct SpectralField {
    nx: usize,
    ny: usize,
    dxi: f64,
    deta: f64,
    values: Vec<Complex<f64>>,
    input_l2_sq: f64,
}

impl SpectralField {
    /// Transform of a raster, zero-padded by `pad` (sizes rounded up to
    /// powers of two).
    pub fn from_raster(f: &RasterField, pad: usize) -> SpectralField {
        let pad = pad.max(1);
        let nx = (f.nx() * pad).next_power_of_two();
        let ny = (f.ny() * pad).next_power_of_two();
        let mut data = vec![Complex::new(0.0, 0.0); nx * ny];
        for j in 0..f.ny() {
            for i in 0..f.nx() {
                data[j * nx + i] = Complex::new(f.get(i, j), 0.0);
            }
        }
        let mut planner = FftPlanner::new();
        let fft_x = planner.plan_fft_forward(nx);
        for row in data.chunks_exact_mut(nx) {
            fft_x.process(row);
        }
        let fft_y = planner.plan_fft_forward(ny);
        let mut col = vec![Complex::new(0.0, 0.0); ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = data[j * nx + i];
            }
            fft_y.process(&mut col);
            for j in 0..ny {
                data[j * nx + i] = col[j];
            }
        }
        let dxi = 1.0 / (nx as f64 * f.hx());
        let deta = 1.0 / (ny as f64 * f.hy());
        let cx = f.x0() + 0.5 * f.hx();
        let cy = f.y0() + 0.5 * f.hy();
        let scale = f.hx() * f.hy();
        for l in 0..ny {
            let eta = signed_index(l, ny) as f64 * deta;
            let py = Complex::from_polar(scale, -2.0 * PI * cy * eta);
            for k in 0..nx {
                let xi = signed_index(k, nx) as f64 * dxi;
                let px = Complex::from_polar(1.0, -2.0 * PI * cx * xi);
                data[l * nx + k] *= px * py;
            }
        }
        SpectralField {
            nx,
            ny,
            dxi,
            deta,
            values: data,
            input_l2_sq: f.l2_norm_sq(),
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn dxi(&self) -> f64 {
        self.dxi
    }
    pub fn deta(&self) -> f64 {
        self.deta
    }
    pub fn xi(&self, k: usize) -> f64 {
        signed_index(k, self.nx) as f64 * self.dxi
    }
    pub fn eta(&self, l: usize) -> f64 {
        signed_index(l, self.ny) as f64 * self.deta
    }
    pub fn value(&self, k: usize, l: usize) -> Complex<f64> {
        self.values[l * self.nx + k]
    }

    /// Relative defect of `sum |F|^2 dxi deta = int |f|^2`.
    pub fn plancherel_residual(&self) -> f64 {
        let spec: f64 = self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dxi
            * self.deta;
        if self.input_l2_sq == 0.0 {
            spec.abs()
        } else {
            (spec - self.input_l2_sq).abs() / self.input_l2_sq
        }
    }

    /// Frequency-weighted norm with weights `(1+xi^2)^{s1} (1+eta^2)^{s2}`.
    pub fn weighted_norm(&self, s1: f64, s2: f64) -> f64 {
        let mut acc = 0.0;
        for l in 0..self.ny {
            let wy = (1.0 + self.eta(l).powi(2)).powf(s2);
            for k in 0..self.nx {
                let wx = (1.0 + self.xi(k).powi(2)).powf(s1);
                acc += wx * wy * self.values[l * self.nx + k].norm_sqr();
            }
        }
        (acc * self.dxi * self.deta).sqrt()
    }
}

/// Anisotropic Sobolev norm of a raster field.
pub fn sobolev_norm(f: &RasterField, s1: f64, s2: f64) -> f64 {
    SpectralField::from_raster(f, 2).weighted_norm(s1, s2)
}

/// `int_0^inf |phi_hat(eps s) - phi_hat(s)|^2 ds/s`, the mollifier gap
/// integral whose growth is logarithmic in `1/eps`.
pub fn phitrick_integral(eps: f64) -> Result<f64, CoreError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(CoreError::BadConfig(format!(
            "gap integral needs eps in (0, 1], got {eps}"
        )));
    }
    if eps == 1.0 {
        return Ok(0.0);
    }
    let s_max = mollifier::PHI_HAT_MAX / eps * 1.05;
    let s_grid = log_spaced(1e-4, s_max, 160 * (s_max / 1e-4).log10().ceil() as usize);
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &s in &s_grid {
        let d = phi_hat(eps * s) - phi_hat(s);
        let g = d * d;
        if let Some((ls_prev, g_prev)) = prev {
            acc += 0.5 * (s.ln() - ls_prev) * (g + g_prev);
        }
        prev = Some((s.ln(), g));
    }
    Ok(acc)
}

/// Oscillatory multiplier `m(xi, eta) = int e^{2 pi i (t xi + eta / t)} zeta(t) dt`.
pub fn multiplier_m(xi: f64, eta: f64) -> Complex<f64> {
    let max_freq = xi.abs() + 4.0 * eta.abs();
    let (re, im) = integrate_oscillatory(
        |t| {
            let z = zeta(t);
            let phase = 2.0 * PI * (t * xi + eta / t);
            (z * phase.cos(), z * phase.sin())
        },
        mollifier::ZETA_LO,
        mollifier::ZETA_HI,
        max_freq,
    );
    Complex::new(re, im)
}

#[derive(Debug, Clone)]
pub struct DecayFit {
    /// True for the stationary direction `eta = xi`, false for `eta = -xi`.
    pub diagonal: bool,
    /// `(xi, |m|)` samples used in the fit.
    pub points: Vec<(f64, f64)>,
    /// Fitted slope of `log |m|` against `log xi`.
    pub slope: f64,
}

/// Fits the decay exponent of the multiplier along the diagonal
/// (`eta = xi`, stationary phase present) or the antidiagonal
/// (`eta = -xi`, no stationary point).
pub fn multiplier_decay_fit(diagonal: bool, xi_values: &[f64]) -> Result<DecayFit, CoreError> {
    if xi_values.iter().any(|&x| !(16.0..=4096.0).contains(&x)) {
        return Err(CoreError::BadConfig(
            "decay fit expects frequencies within [2^4, 2^12]".into(),
        ));
    }
    let mut points = Vec::with_capacity(xi_values.len());
    for &xi in xi_values {
        let eta = if diagonal { xi } else { -xi };
        points.push((xi, multiplier_m(xi, eta).norm()));
    }
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(_, a)| a > 1e-14)
        .collect();
    if usable.len() < 2 {
        return Err(CoreError::BadConfig(
            "multiplier magnitudes below the floating-point floor; nothing to fit".into(),
        ));
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let (slope, _) = least_squares_slope(&xs, &ys);
    Ok(DecayFit {
        diagonal,
        points,
        slope,
    })
}

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| integrate(mollifier::bump, -1.0, 1.0, 192))
}

/// Smooth transition: 1 for `v <= -1`, 0 for `v >= 1`.
fn smooth_step(v: f64) -> f64 {
    if v <= -1.0 {
        1.0
    } else if v >= 1.0 {
        0.0
    } else {
        integrate(mollifier::bump, v, 1.0, 96) / bump_mass()
    }
}

/// Dyadic cutoff: 1 on `[-1,1]`, 0 outside `(-2,2)`, smooth between.
pub fn lp_phi(u: f64) -> f64 {
    let a = u.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        smooth_step(2.0 * a - 3.0)
    }
}

fn lp_phi_tilde(j: usize, u: f64) -> f64 {
    if j == 0 {
        lp_phi(u)
    } else {
        lp_phi(u / (1u64 << j) as f64) - lp_phi(u / (1u64 << (j - 1)) as f64)
    }
}

fn lp_s(u: f64) -> f64 {
    let j_max = active_j_max(u);
    (0..=j_max).map(|j| lp_phi_tilde(j, u).powi(2)).sum()
}

fn active_j_max(u: f64) -> usize {
    let a = u.abs().max(1.0);
    (a.log2().ceil() as usize) + 2
}

/// Normalized dyadic partition piece: `psi_j = phi_tilde_j / sqrt(S)`,
/// so that `sum_j psi_j^2 = 1` everywhere.
pub fn lp_psi(j: usize, u: f64) -> f64 {
    let t = lp_phi_tilde(j, u);
    if t == 0.0 {
        0.0
    } else {
        t / lp_s(u).sqrt()
    }
}

/// Maximum deviation of `sum_j psi_j(u)^2` from 1 over the samples,
/// using all `j` with `2^j <= 4 max(|u|, 1)`.
pub fn lp_partition_check(u_samples: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &u in u_samples {
        let j_max = active_j_max(u);
        let total: f64 = (0..=j_max).map(|j| lp_psi(j, u).powi(2)).sum();
        worst = worst.max((total - 1.0).abs());
    }
    worst
}

/// Trilinear smoothing probe: the form value over the product of the
/// sup norm of the first slot and negative-order anisotropic norms of
/// the other two.
pub fn smoothing_ratio_probe(
    f0: &RasterField,
    f1: &RasterField,
    f2: &RasterField,
    sigma: f64,
) -> Result<f64, CoreError> {
    let numer = forms::eval_n0(f0, f1, f2, 1.0)?.value.abs();
    let d0 = f0.max_abs();
    let d1 = sobolev_norm(f1, -sigma, 0.0);
    let d2 = sobolev_norm(f2, 0.0, -sigma);
    if d0 == 0.0 || d1 == 0.0 || d2 == 0.0 {
        return Err(CoreError::BadConfig(
            "smoothing probe needs nonzero fields in every slot".into(),
        ));
    }
    Ok(numer / (d0 * d1 * d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfile::SetDescription;
    use approx::assert_abs_diff_eq;

    fn sample_raster() -> RasterField {
        let sd =
            SetDescription::parse("bounds 0 4 0 4\nbox 0.5 2.25 1 3\nbox 3 3.5 0.25 3.75\n")
                .unwrap();
        RasterField::coverage(&sd, 0.125)
    }

    #[test]
    fn plancherel_is_exact_for_padded_transforms() {
        let f = sample_raster();
        for pad in [1, 2, 4] {
            let s = SpectralField::from_raster(&f, pad);
            assert!(s.plancherel_residual() < 1e-12, "pad {pad}");
        }
    }

    #[test]
    fn zero_weights_give_l2_norm_and_negative_weights_contract() {
        let f = sample_raster();
        let l2 = f.l2_norm_sq().sqrt();
        assert_abs_diff_eq!(sobolev_norm(&f, 0.0, 0.0), l2, epsilon = 1e-10 * l2);
        assert!(sobolev_norm(&f, -0.25, 0.0) <= l2);
        assert!(sobolev_norm(&f, 0.0, -1.0) <= l2);
    }

    #[test]
    fn mollification_gap_obeys_sobolev_scaling() {
        // || f - f*phi_eps ||_{H^{-sigma,0}} / (eps^sigma ||f||_2) stays bounded
        let f = sample_raster();
        let l2 = f.l2_norm_sq().sqrt();
        let sigma = 0.25;
        let mut ratios = Vec::new();
        for eps in [0.5, 0.25, 0.125, 0.0625] {
            let (fs, _) = f.convolve_x(eps);
            let diff = RasterField::from_fn(
                f.x0(),
                f.y0(),
                f.hx(),
                f.hy(),
                f.nx(),
                f.ny(),
                |x, y| f.sample(x, y) - fs.sample(x, y),
            );
            let lhs = sobolev_norm(&diff, -sigma, 0.0);
            ratios.push(lhs / (eps.powf(sigma) * l2));
        }
        for r in &ratios {
            assert!(*r < 4.0, "unbounded mollification ratio {r}");
        }
    }

    #[test]
    fn multiplier_basics() {
        let zm = mollifier::zeta_mass();
        let m0 = multiplier_m(0.0, 0.0);
        assert_abs_diff_eq!(m0.re, zm, epsilon = 1e-7);
        assert_abs_diff_eq!(m0.im, 0.0, epsilon = 1e-12);
        for &(xi, eta) in &[(3.0, 7.0), (40.0, -11.0), (0.5, 0.0)] {
            assert!(multiplier_m(xi, eta).norm() <= zm + 1e-7);
            let conj = multiplier_m(-xi, -eta);
            let m = multiplier_m(xi, eta);
            assert_abs_diff_eq!(conj.re, m.re, epsilon = 1e-8);
            assert_abs_diff_eq!(conj.im, -m.im, epsilon = 1e-8);
        }
    }

    #[test]
    fn multiplier_matches_dense_quadrature_oracle() {
        // brute-force trapezoid with 10^6 uniform nodes
        let (xi, eta) = (64.0, 64.0);
        let n = 1_000_000usize;
        let mut re = 0.0;
        let mut im = 0.0;
        let (a, b) = (mollifier::ZETA_LO, mollifier::ZETA_HI);
        let dt = (b - a) / n as f64;
        for i in 0..=n {
            let t = a + i as f64 * dt;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let phase = 2.0 * PI * (t * xi + eta / t);
            let z = zeta(t);
            re += w * z * phase.cos() * dt;
            im += w * z * phase.sin() * dt;
        }
        let m = multiplier_m(xi, eta);
        assert_abs_diff_eq!(m.re, re, epsilon = 1e-8);
        assert_abs_diff_eq!(m.im, im, epsilon = 1e-8);
    }

    #[test]
    fn stationary_direction_dominates_nonstationary() {
        let diag = multiplier_m(256.0, 256.0).norm();
        let anti = multiplier_m(256.0, -256.0).norm();
        assert!(anti < 1e-2 * diag, "anti {anti} vs diag {diag}");
    }

    #[test]
    fn partition_of_unity_and_supports() {
        assert_eq!(lp_psi(0, 0.0), 1.0);
        assert_eq!(lp_psi(0, 2.1), 0.0);
        assert_eq!(lp_psi(1, 0.4), 0.0); // below 2^0/2 support edge
        assert_eq!(lp_psi(3, 100.0), 0.0);
        let samples: Vec<f64> = (0..2000)
            .map(|i| -1000.0 + i as f64 + 0.37)
            .chain([0.0, 1e-9, 0.999, 1.0, 3.0, 1000.0])
            .collect();
        assert!(lp_partition_check(&samples) < 1e-12);
    }

    #[test]
    fn gap_integral_zero_at_one_and_growing() {
        assert_eq!(phitrick_integral(1.0).unwrap(), 0.0);
        let v2 = phitrick_integral(0.5).unwrap();
        let v4 = phitrick_integral(0.25).unwrap();
        assert!(v2 > 0.0);
        assert!(v4 > v2);
    }

    #[test]
    fn smoothing_probe_decreases_under_modulation() {
        // modulated bumps: the form decays in frequency, the L2 norms don't
        let mk = |n: f64| {
            RasterField::from_fn(-4.0, -4.0, 0.0625, 0.0625, 128, 128, |x, y| {
                let r2 = (x * x + y * y) / 9.0;
                if r2 < 1.0 {
                    (2.0 * PI * n * (x + y)).cos() * (-1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            })
        };
        let f0 = mk(0.0);
        let plain = smoothing_ratio_probe(&f0, &f0, &f0, 0.0).unwrap();
        let modulated = smoothing_ratio_probe(&f0, &mk(2.0), &mk(2.0), 0.0).unwrap();
        assert!(modulated.is_finite() && modulated > 0.0);
        assert!(
            modulated < 0.1 * plain,
            "no frequency decay: modulated {modulated} vs plain {plain}"
        );
    }
}
