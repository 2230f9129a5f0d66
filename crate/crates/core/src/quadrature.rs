//! Quadrature rules: Gauss-Legendre nodes (computed once per order by
//! Newton iteration on Legendre polynomials) and a panel-based rule for
//! oscillatory integrands that keeps a fixed number of nodes per period.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi-style initial guess for the i-th root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Evaluate P_n(x) and its derivative by upward recurrence.
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }
}

fn cache() -> &'static Mutex<HashMap<usize, &'static GaussLegendre>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached rule of order `n`.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    let mut map = cache().lock().unwrap();
    map.entry(n)
        .or_insert_with(|| Box::leak(Box::new(GaussLegendre::compute(n))))
}

/// Integrates `f` over `[a, b]` with an `n`-node Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Integrates `re + i*im` of `f(t) = g(t) * exp(2*pi*i*phase(t))` style
/// integrands over `[a, b]` by splitting into panels sized so that each
/// 16-node panel sees at most ~1.6 periods of the fastest oscillation.
/// `max_freq` bounds `|d(phase)/dt|` on the interval.
pub fn integrate_oscillatory<F: Fn(f64) -> (f64, f64)>(
    f: F,
    a: f64,
    b: f64,
    max_freq: f64,
) -> (f64, f64) {
    let len = b - a;
    // Panel density follows the oscillation rate, with a floor of two
    // panels per unit length so wide smooth integrands stay resolved
    // even at low frequency.
    let base = ((2.0 * len).ceil() as usize).max(1);
    let panels = ((len * max_freq.abs() / 1.6).ceil() as usize)
        .max(base)
        .clamp(1, 2_000_000);
    let rule = gauss_legendre(16);
    let dp = len / panels as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for p in 0..panels {
        let lo = a + dp * p as f64;
        let mid = lo + 0.5 * dp;
        let half = 0.5 * dp;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let (r, i) = f(mid + half * x);
            re += w * half * r;
            im += w * half * i;
        }
    }
    (re, im)
}

/// Trapezoid rule over tabulated samples `(x_i, y_i)` with `x` ascending.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut acc = 0.0;
    for i in 1..xs.len() {
        acc += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    acc
}

/// Least-squares line fit; returns (slope, intercept).
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `n` log-uniform samples of `[lo, hi]`, endpoints included.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (la, lb) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_is_exact_on_low_degree_polynomials() {
        // 8-node rule integrates degree <= 15 exactly.
        let v = integrate(|x| x.powi(12) - 3.0 * x.powi(5) + 2.0, -1.0, 1.0, 8);
        let exact = 2.0 / 13.0 + 4.0;
        assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
    }

    #[test]
    fn gl_converges_on_smooth_bump() {
        let f = |x: f64| if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
        let a = integrate(f, -1.0, 1.0, 64);
        let b = integrate(f, -1.0, 1.0, 128);
        assert!((a - b).abs() < 1e-12);
        assert!((a - 0.4439938161680786).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_rule_matches_closed_form() {
        // int_0^1 cos(2 pi f x) dx = sin(2 pi f) / (2 pi f)
        let freq = 37.25;
        let (re, im) = integrate_oscillatory(
            |x| {
                let ph = 2.0 * std::f64::consts::PI * freq * x;
                (ph.cos(), ph.sin())
            },
            0.0,
            1.0,
            freq,
        );
        let exact = (2.0 * std::f64::consts::PI * freq).sin() / (2.0 * std::f64::consts::PI * freq);
        assert!((re - exact).abs() < 1e-12, "{re} vs {exact}");
        let exact_im = (1.0 - (2.0 * std::f64::consts::PI * freq).cos())
            / (2.0 * std::f64::consts::PI * freq);
        assert!((im - exact_im).abs() < 1e-12);
    }

    #[test]
    fn log_grid_hits_endpoints() {
        let g = log_spaced(0.1, 10.0, 5);
        assert!((g[0] - 0.1).abs() < 1e-15);
        assert!((g[4] - 10.0).abs() < 1e-12);
        assert!((g[2] - 1.0).abs() < 1e-12);
    }
}
