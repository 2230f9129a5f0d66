//! Self-contained SVG 1.1 line plots: no scripts, no external fonts,
//! no renderer dependency beyond a browser or image viewer. Good
//! enough for decay curves and density overlays, nothing more.

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 540.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 46.0;
const MARGIN_B: f64 = 58.0;

const PALETTE: [&str; 8] = [
    "#1d6fb8", "#c0392b", "#1e8449", "#8e44ad", "#b9770e", "#148f9f", "#5d6d7e", "#a93261",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn solid(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            dashed: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    fn visible(&self, p: (f64, f64)) -> bool {
        p.0.is_finite()
            && p.1.is_finite()
            && (!self.log_x || p.0 > 0.0)
            && (!self.log_y || p.1 > 0.0)
    }

    pub fn render(&self) -> String {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &p in s.points.iter().filter(|&&p| self.visible(p)) {
                xs.push(if self.log_x { p.0.log10() } else { p.0 });
                ys.push(if self.log_y { p.1.log10() } else { p.1 });
            }
        }
        let (x_lo, x_hi) = padded_range(&xs);
        let (y_lo, y_hi) = padded_range(&ys);
        let to_px = |x: f64, y: f64| -> (f64, f64) {
            let fx = (x - x_lo) / (x_hi - x_lo);
            let fy = (y - y_lo) / (y_hi - y_lo);
            (
                MARGIN_L + fx * (WIDTH - MARGIN_L - MARGIN_R),
                HEIGHT - MARGIN_B - fy * (HEIGHT - MARGIN_T - MARGIN_B),
            )
        };

        let mut svg = String::new();
        svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        svg.push_str(&format!(
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));

        // frame
        svg.push_str(&format!(
            "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
            WIDTH - MARGIN_L - MARGIN_R,
            HEIGHT - MARGIN_T - MARGIN_B
        ));

        for (t, label) in ticks(x_lo, x_hi, self.log_x) {
            let (px, _) = to_px(t, y_lo);
            svg.push_str(&format!(
                "<line x1=\"{px:.1}\" y1=\"{}\" x2=\"{px:.1}\" y2=\"{}\" stroke=\"#bbb\" stroke-width=\"0.6\"/>\n",
                MARGIN_T,
                HEIGHT - MARGIN_B
            ));
            svg.push_str(&format!(
                "<text x=\"{px:.1}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{label}</text>\n",
                HEIGHT - MARGIN_B + 16.0
            ));
        }
        for (t, label) in ticks(y_lo, y_hi, self.log_y) {
            let (_, py) = to_px(x_lo, t);
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{py:.1}\" x2=\"{}\" y2=\"{py:.1}\" stroke=\"#bbb\" stroke-width=\"0.6\"/>\n",
                MARGIN_L,
                WIDTH - MARGIN_R
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{label}</text>\n",
                MARGIN_L - 6.0,
                py + 4.0
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"20\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>\n",
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            escape(&self.y_label)
        ));

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter(|&&p| self.visible(p))
                .map(|&(x, y)| {
                    to_px(
                        if self.log_x { x.log10() } else { x },
                        if self.log_y { y.log10() } else { y },
                    )
                })
                .collect();
            let dash = if s.dashed { " stroke-dasharray=\"7 4\"" } else { "" };
            if pts.len() >= 2 {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                svg.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash}/>\n",
                    path.join(" ")
                ));
            }
            for (x, y) in &pts {
                svg.push_str(&format!(
                    "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"2.4\" fill=\"{color}\"/>\n"
                ));
            }
            // legend
            let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
            let lx = WIDTH - MARGIN_R - 210.0;
            svg.push_str(&format!(
                "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"1.8\"{dash}/>\n",
                lx + 26.0
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                lx + 32.0,
                ly + 4.0,
                escape(&s.label)
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn padded_range(vals: &[f64]) -> (f64, f64) {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5 - lo.abs() * 0.1, hi + 0.5 + hi.abs() * 0.1);
    }
    let pad = 0.06 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Tick positions in plot coordinates with their display labels; plot
/// coordinates are already log10 when the axis is logarithmic.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let mut out = Vec::new();
        let first = lo.ceil() as i64;
        let last = hi.floor() as i64;
        for d in first..=last {
            out.push((d as f64, format!("1e{d}")));
        }
        if out.len() < 2 {
            // fewer than two decades in range: fall back to linear ticks,
            // labeled with the underlying values
            return linear_ticks(lo, hi)
                .into_iter()
                .map(|t| (t, trim_label(10f64.powf(t))))
                .collect();
        }
        out
    } else {
        linear_ticks(lo, hi)
            .into_iter()
            .map(|t| (t, trim_label(t)))
            .collect()
    }
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-12 * span {
        out.push(t);
        t += step;
    }
    out
}

fn trim_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
