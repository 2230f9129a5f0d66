//! The two fixed mollifiers used throughout the counting forms, plus a
//! tabulated Fourier transform of the wide one.
//!
//! `zeta` is a bump supported on `[1/2, 2]`; it weights the corner
//! parameter `t = lambda * u`. `phi` is a bump supported on `[-20, 20]`,
//! normalized to unit mass, used for one-variable smoothing; its key
//! property is a positive floor on `[-10, 10]`.

use crate::quadrature::{gauss_legendre, integrate, integrate_oscillatory};
use std::sync::OnceLock;

/// Support of `zeta`.
pub const ZETA_LO: f64 = 0.5;
pub const ZETA_HI: f64 = 2.0;

/// Half-width of the support of `phi`.
pub const PHI_HALF_WIDTH: f64 = 20.0;

/// Standard bump: `exp(-1/(1-s^2))` on `(-1, 1)`, zero outside.
pub fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// Weight on the corner parameter: `bump((4u - 5)/3)`, supported on
/// `[1/2, 2]` with peak value `1/e` at `u = 5/4`.
pub fn zeta(u: f64) -> f64 {
    bump((4.0 * u - 5.0) / 3.0)
}

/// Total mass of `zeta`.
pub fn zeta_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| integrate(zeta, ZETA_LO, ZETA_HI, 192))
}

/// Normalizing constant so that `phi` has unit mass.
pub fn phi_norm() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        let raw = integrate(bump, -1.0, 1.0, 192);
        1.0 / (PHI_HALF_WIDTH * raw)
    })
}

/// Unit-mass bump supported on `[-20, 20]`.
pub fn phi(x: f64) -> f64 {
    phi_norm() * bump(x / PHI_HALF_WIDTH)
}

/// Dilated mollifier `phi(x/t)/t`, still of unit mass.
pub fn phi_scaled(t: f64, x: f64) -> f64 {
    phi(x / t) / t
}

/// Positive lower bound of `phi` on `[-10, 10]` (attained at the ends).
pub fn phi_floor() -> f64 {
    phi(10.0)
}

// --- Fourier transform of phi ------------------------------------------

pub const PHI_HAT_MAX: f64 = 24.0;
const PHI_HAT_STEP: f64 = 1.0 / 1024.0;

/// Direct oscillatory quadrature of `phi_hat(s) = int phi(x) e^{-2 pi i x s} dx`.
/// `phi` is even, so the transform is real: `2 int_0^20 phi cos(2 pi x s)`.
pub fn phi_hat_direct(s: f64) -> f64 {
    let s = s.abs();
    let (re, _) = integrate_oscillatory(
        |x| (phi(x) * (2.0 * std::f64::consts::PI * x * s).cos(), 0.0),
        0.0,
        PHI_HAT_MAX.max(PHI_HALF_WIDTH),
        s,
    );
    2.0 * re
}

struct PhiHatTable {
    values: Vec<f64>,
    second: Vec<f64>,
}

impl PhiHatTable {
    fn build() -> Self {
        let n = (PHI_HAT_MAX / PHI_HAT_STEP) as usize + 1;
        let rule = gauss_legendre(16);
        // Tabulate by panelised quadrature on [0, 20]; reuse panel nodes
        // across s values would complicate things, so evaluate per s.
        let values: Vec<f64> = (0..n)
            .map(|i| {
                let s = i as f64 * PHI_HAT_STEP;
                let panels = ((PHI_HALF_WIDTH * s / 1.6).ceil() as usize).max(8);
                let dp = PHI_HALF_WIDTH / panels as f64;
                let mut acc = 0.0;
                for p in 0..panels {
                    let mid = dp * (p as f64 + 0.5);
                    let half = 0.5 * dp;
                    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                        let xx = mid + half * x;
                        acc += w * half * phi(xx) * (2.0 * std::f64::consts::PI * xx * s).cos();
                    }
                }
                2.0 * acc
            })
            .collect();
        let second = natural_cubic_second_derivatives(&values, PHI_HAT_STEP);
        PhiHatTable { values, second }
    }

    fn eval(&self, s: f64) -> f64 {
        let s = s.abs();
        if s >= PHI_HAT_MAX {
            // Tail truncation: the transform decays faster than any power
            // and is below 1e-12 long before the table ends.
            return 0.0;
        }
        let pos = s / PHI_HAT_STEP;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let a = pos - i as f64;
        let b = 1.0 - a;
        // Cubic spline in Hermite-free form.
        b * self.values[i]
            + a * self.values[i + 1]
            + ((b * b * b - b) * self.second[i] + (a * a * a - a) * self.second[i + 1])
                * PHI_HAT_STEP
                * PHI_HAT_STEP
                / 6.0
    }
}

fn natural_cubic_second_derivatives(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut second = vec![0.0; n];
    if n < 3 {
        return second;
    }
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    // Thomas algorithm for the tridiagonal natural-spline system.
    diag[1] = 4.0;
    rhs[1] = 6.0 * (values[2] - 2.0 * values[1] + values[0]) / (h * h);
    for i in 2..n - 1 {
        let m = 1.0 / diag[i - 1];
        diag[i] = 4.0 - m;
        rhs[i] = 6.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h) - m * rhs[i - 1];
    }
    for i in (1..n - 1).rev() {
        second[i] = (rhs[i] - second[i + 1]) / diag[i];
    }
    second
}

fn phi_hat_table() -> &'static PhiHatTable {
    static TABLE: OnceLock<PhiHatTable> = OnceLock::new();
    TABLE.get_or_init(PhiHatTable::build)
}

/// Fourier transform of `phi` (real and even), via the cached spline
/// table; accurate to roughly 1e-7 absolute.
pub fn phi_hat(s: f64) -> f64 {
    phi_hat_table().eval(s)
}
