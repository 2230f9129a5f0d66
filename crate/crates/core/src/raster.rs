//! Cell-center sampled scalar fields on axis-aligned grids.
//!
//! A `RasterField` stores samples at cell centers `(x0 + (i+1/2)hx,
//! y0 + (j+1/2)hy)` in row-major order.  Pitches may differ per axis:
//! smoothing a field along one axis returns the result on a coarser
//! pitch along that axis once the kernel is much wider than a cell, so
//! that wide mollifiers stay cheap without losing resolution relative
//! to the kernel scale.
//!
//! Values are interpreted as a piecewise-bilinear interpolant through
//! the center samples, extended by zero outside the grid.  Coverage
//! rasterization of a `SetDescription` fills each cell with the exact
//! fraction of its area inside the set.

use crate::error::CoreError;
use crate::geometry::Point2;
use crate::mollifier;
use crate::setfile::SetDescription;

#[derive(Debug, Clone)]
pub struct RasterField {
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

/// Area of `{x + y <= c}` inside the rectangle `[x0,x1] x [y0,y1]`.
fn area_below_antidiagonal(c: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let w = x1 - x0;
    let h = y1 - y0;
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let d = c - x0 - y0;
    let tri = |z: f64| if z > 0.0 { 0.5 * z * z } else { 0.0 };
    (tri(d) - tri(d - w) - tri(d - h) + tri(d - w - h)).clamp(0.0, w * h)
}

impl RasterField {
    pub fn new(x0: f64, y0: f64, hx: f64, hy: f64, nx: usize, ny: usize) -> Self {
        assert!(hx > 0.0 && hy > 0.0 && nx > 0 && ny > 0);
        RasterField {
            x0,
            y0,
            hx,
            hy,
            nx,
            ny,
            values: vec![0.0; nx * ny],
        }
    }

    pub fn from_fn(
        x0: f64,
        y0: f64,
        hx: f64,
        hy: f64,
        nx: usize,
        ny: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut r = RasterField::new(x0, y0, hx, hy, nx, ny);
        for j in 0..ny {
            let cy = r.cy(j);
            for i in 0..nx {
                r.values[j * nx + i] = f(r.cx(i), cy);
            }
        }
        r
    }

    /// Exact per-cell coverage fractions of a described set, on a square
    /// pitch `h` grid aligned with the set bounds.
    pub fn coverage(sd: &SetDescription, h: f64) -> Self {
        assert!(h > 0.0);
        let x0 = sd.bounds.x.lo();
        let y0 = sd.bounds.y.lo();
        let nx = ((sd.bounds.x.width() / h) - 1e-9).ceil().max(1.0) as usize;
        let ny = ((sd.bounds.y.width() / h) - 1e-9).ceil().max(1.0) as usize;
        let boxes = sd.box_union();
        let mut r = RasterField::new(x0, y0, h, h, nx, ny);
        for j in 0..ny {
            let cy0 = y0 + j as f64 * h;
            let cy1 = (cy0 + h).min(sd.bounds.y.hi());
            for i in 0..nx {
                let cx0 = x0 + i as f64 * h;
                let cx1 = (cx0 + h).min(sd.bounds.x.hi());
                let mut area = 0.0;
                for b in boxes.boxes() {
                    let ox = (cx1.min(b.x.hi()) - cx0.max(b.x.lo())).max(0.0);
                    let oy = (cy1.min(b.y.hi()) - cy0.max(b.y.lo())).max(0.0);
                    area += ox * oy;
                }
                for &(lo, hi) in &sd.bands {
                    // cells entirely on one side of the band contribute
                    // exactly zero; without the early-out the difference
                    // below cancels two O(d^2) triangle areas and leaves
                    // roundoff residue on every far-away cell
                    if hi <= cx0 + cy0 || lo >= cx1 + cy1 {
                        continue;
                    }
                    area += area_below_antidiagonal(hi, cx0, cx1, cy0, cy1)
                        - area_below_antidiagonal(lo, cx0, cx1, cy0, cy1);
                }
                r.values[j * nx + i] = (area / (h * h)).clamp(0.0, 1.0);
            }
        }
        r
    }

    /// Coverage of a disk, with 16x16 subsampling on boundary cells.
    pub fn disk_coverage(cx: f64, cy: f64, rad: f64, h: f64) -> Self {
        assert!(rad > 0.0 && h > 0.0);
        let x0 = cx - rad;
        let y0 = cy - rad;
        let n = ((2.0 * rad / h) - 1e-9).ceil().max(1.0) as usize;
        let mut r = RasterField::new(x0, y0, h, h, n, n);
        let rr = rad * rad;
        let diag = h * std::f64::consts::SQRT_2 / 2.0;
        for j in 0..n {
            let yc = r.cy(j);
            for i in 0..n {
                let xc = r.cx(i);
                let d = ((xc - cx).powi(2) + (yc - cy).powi(2)).sqrt();
                let v = if d + diag <= rad {
                    1.0
                } else if d - diag >= rad {
                    0.0
                } else {
                    let mut hits = 0u32;
                    for sj in 0..16 {
                        let sy = yc - h / 2.0 + (sj as f64 + 0.5) * h / 16.0;
                        for si in 0..16 {
                            let sx = xc - h / 2.0 + (si as f64 + 0.5) * h / 16.0;
                            if (sx - cx).powi(2) + (sy - cy).powi(2) <= rr {
                                hits += 1;
                            }
                        }
                    }
                    hits as f64 / 256.0
                };
                r.values[j * n + i] = v;
            }
        }
        r
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Center abscissa of column `i`.
    pub fn cx(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.hx
    }
    /// Center ordinate of row `j`.
    pub fn cy(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + 0.5) * self.hy
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.nx + i] = v;
    }

    /// Integral of the field (cell sums times cell area).
    pub fn integral(&self) -> f64 {
        self.hx * self.hy * self.values.iter().sum::<f64>()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.hx * self.hy * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Bilinear interpolation through the center samples, zero outside.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let u = (x - self.x0) / self.hx - 0.5;
        let v = (y - self.y0) / self.hy - 0.5;
        if u <= -1.0 || v <= -1.0 || u >= self.nx as f64 || v >= self.ny as f64 {
            return 0.0;
        }
        let i0 = u.floor();
        let j0 = v.floor();
        let a = u - i0;
        let b = v - j0;
        let i0 = i0 as isize;
        let j0 = j0 as isize;
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
                0.0
            } else {
                self.values[j as usize * self.nx + i as usize]
            }
        };
        let v00 = at(i0, j0);
        let v10 = at(i0 + 1, j0);
        let v01 = at(i0, j0 + 1);
        let v11 = at(i0 + 1, j0 + 1);
        (1.0 - a) * (1.0 - b) * v00 + a * (1.0 - b) * v10 + (1.0 - a) * b * v01 + a * b * v11
    }

    pub fn point_sample(&self, p: Point2) -> f64 {
        self.sample(p.x, p.y)
    }

    /// Halve the resolution by 2x2 cell averaging (odd tails dropped).
    pub fn coarsen(&self) -> RasterField {
        let nx = (self.nx / 2).max(1);
        let ny = (self.ny / 2).max(1);
        let mut r = RasterField::new(self.x0, self.y0, self.hx * 2.0, self.hy * 2.0, nx, ny);
        for j in 0..ny {
            for i in 0..nx {
                let mut s = 0.0;
                let mut cnt = 0.0;
                for dj in 0..2 {
                    for di in 0..2 {
                        let ii = 2 * i + di;
                        let jj = 2 * j + dj;
                        if ii < self.nx && jj < self.ny {
                            s += self.values[jj * self.nx + ii];
                            cnt += 1.0;
                        }
                    }
                }
                r.values[j * nx + i] = s / cnt;
            }
        }
        r
    }

    /// `h . sum_i f[i, j]` for each row `j`, at the row-center ordinates.
    pub fn row_integrals(&self) -> Profile1D {
        let values = (0..self.ny)
            .map(|j| {
                self.hx
                    * self.values[j * self.nx..(j + 1) * self.nx]
                        .iter()
                        .sum::<f64>()
            })
            .collect();
        Profile1D {
            t0: self.y0,
            ht: self.hy,
            values,
        }
    }

    /// Nonzero cells as `(center x, center y, value)`.
    pub fn support_cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for j in 0..self.ny {
            let cy = self.cy(j);
            for i in 0..self.nx {
                let v = self.values[j * self.nx + i];
                if v != 0.0 {
                    out.push((self.cx(i), cy, v));
                }
            }
        }
        out
    }

    /// Smooth along x with the compact bump mollifier at scale `t`.
    ///
    /// The grid widens by the kernel radius.  When the kernel spans many
    /// cells the field is first box-averaged down to pitch ~t/32 along x,
    /// keeping the tap count bounded; the flag reports `t < 2 hx`, i.e.
    /// a kernel too narrow for the grid to resolve.
    pub fn convolve_x(&self, t: f64) -> (RasterField, bool) {
        let (kernel, pitch, q) = mollifier_taps(t, self.hx);
        let src = if q > 1 { self.downsample_x(q) } else { self.clone() };
        let k = kernel.len() / 2;
        let nx = src.nx + 2 * k;
        let mut out = RasterField::new(src.x0 - k as f64 * pitch, src.y0, pitch, src.hy, nx, src.ny);
        for j in 0..src.ny {
            for i in 0..src.nx {
                let v = src.values[j * src.nx + i];
                if v == 0.0 {
                    continue;
                }
                let row = &mut out.values[j * nx..(j + 1) * nx];
                for (o, w) in kernel.iter().enumerate() {
                    row[i + o] += v * w;
                }
            }
        }
        (out, t < 2.0 * self.hx)
    }

    /// Smooth along y with the compact bump mollifier at scale `t`.
    pub fn convolve_y(&self, t: f64) -> (RasterField, bool) {
        let (kernel, pitch, q) = mollifier_taps(t, self.hy);
        let src = if q > 1 { self.downsample_y(q) } else { self.clone() };
        let k = kernel.len() / 2;
        let ny = src.ny + 2 * k;
        let mut out = RasterField::new(src.x0, src.y0 - k as f64 * pitch, src.hx, pitch, src.nx, ny);
        for j in 0..src.ny {
            for i in 0..src.nx {
                let v = src.values[j * src.nx + i];
                if v == 0.0 {
                    continue;
                }
                for (o, w) in kernel.iter().enumerate() {
                    out.values[(j + o) * src.nx + i] += v * w;
                }
            }
        }
        (out, t < 2.0 * self.hy)
    }

    fn downsample_x(&self, q: usize) -> RasterField {
        let nx = (self.nx + q - 1) / q;
        let mut r = RasterField::new(self.x0, self.y0, self.hx * q as f64, self.hy, nx, self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                r.values[j * nx + i / q] += self.values[j * self.nx + i] / q as f64;
            }
        }
        r
    }

    fn downsample_y(&self, q: usize) -> RasterField {
        let ny = (self.ny + q - 1) / q;
        let mut r = RasterField::new(self.x0, self.y0, self.hx, self.hy * q as f64, self.nx, ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                r.values[(j / q) * self.nx + i] += self.values[j * self.nx + i] / q as f64;
            }
        }
        r
    }

    /// Resample under a rotation by `theta` about a center point.
    ///
    /// The output grid is the axis-aligned hull of the rotated input
    /// rectangle on the same (square-averaged) pitch; each output cell
    /// holds the bilinear sample of the input at the pre-image point.
    pub fn rotated(&self, theta: f64, center: Point2) -> RasterField {
        let (s, c) = theta.sin_cos();
        let x1 = self.x0 + self.nx as f64 * self.hx;
        let y1 = self.y0 + self.ny as f64 * self.hy;
        let corners = [
            (self.x0, self.y0),
            (x1, self.y0),
            (self.x0, y1),
            (x1, y1),
        ];
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in corners {
            let dx = x - center.x;
            let dy = y - center.y;
            let rx = center.x + c * dx - s * dy;
            let ry = center.y + s * dx + c * dy;
            lo = (lo.0.min(rx), lo.1.min(ry));
            hi = (hi.0.max(rx), hi.1.max(ry));
        }
        let h = (self.hx * self.hy).sqrt();
        let nx = (((hi.0 - lo.0) / h).ceil() as usize).max(1);
        let ny = (((hi.1 - lo.1) / h).ceil() as usize).max(1);
        let mut r = RasterField::new(lo.0, lo.1, h, h, nx, ny);
        for j in 0..ny {
            let cy = r.cy(j);
            for i in 0..nx {
                let cx = r.cx(i);
                let dx = cx - center.x;
                let dy = cy - center.y;
                let px = center.x + c * dx + s * dy;
                let py = center.y - s * dx + c * dy;
                r.values[j * nx + i] = self.sample(px, py);
            }
        }
        r
    }

    /// Pointwise difference of the coverage raster against an exact
    /// membership function, as a new field on the same grid (raster
    /// value minus indicator at the cell center).
    pub fn center_membership_error(&self, member: impl Fn(f64, f64) -> bool) -> RasterField {
        let mut r = self.clone();
        for j in 0..self.ny {
            let cy = self.cy(j);
            for i in 0..self.nx {
                let ind = if member(self.cx(i), cy) { 1.0 } else { 0.0 };
                r.values[j * self.nx + i] = self.values[j * self.nx + i] - ind;
            }
        }
        r
    }

    /// Prefix table over the cell values for exact rectangle integrals
    /// of the piecewise-constant interpretation of the field.
    pub fn prefix_table(&self) -> PrefixTable {
        let nx = self.nx;
        let ny = self.ny;
        let mut table = vec![0.0; (nx + 1) * (ny + 1)];
        for j in 0..ny {
            let mut row = 0.0;
            for i in 0..nx {
                row += self.values[j * nx + i];
                table[(j + 1) * (nx + 1) + i + 1] = table[j * (nx + 1) + i + 1] + row;
            }
        }
        PrefixTable {
            x0: self.x0,
            y0: self.y0,
            hx: self.hx,
            hy: self.hy,
            nx,
            ny,
            table,
        }
    }

    pub fn require_same_grid(&self, other: &RasterField) -> Result<(), CoreError> {
        let same = self.nx == other.nx
            && self.ny == other.ny
            && (self.x0 - other.x0).abs() < 1e-12
            && (self.y0 - other.y0).abs() < 1e-12
            && (self.hx - other.hx).abs() < 1e-15
            && (self.hy - other.hy).abs() < 1e-15;
        if same {
            Ok(())
        } else {
            Err(CoreError::RasterMismatch(format!(
                "grids differ: {}x{} pitch ({}, {}) vs {}x{} pitch ({}, {})",
                self.nx, self.ny, self.hx, self.hy, other.nx, other.ny, other.hx, other.hy
            )))
        }
    }
}

/// Summed-area table of a raster: integrals of the piecewise-constant
/// cell-value field over arbitrary axis rectangles in O(1), exact up to
/// the roundoff of four table lookups.
#[derive(Debug, Clone)]
pub struct PrefixTable {
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
    nx: usize,
    ny: usize,
    /// `table[j * (nx+1) + i]` = sum of cell values with index < (i, j).
    table: Vec<f64>,
}

impl PrefixTable {
    /// Integral of the piecewise-constant field over `[0, u] x [0, v]`
    /// in cell units; fractional parts weight the partial row, column
    /// and corner cell, which is exactly bilinear interpolation of the
    /// corner sums.
    fn corner(&self, u: f64, v: f64) -> f64 {
        let i = (u.floor() as usize).min(self.nx - 1);
        let j = (v.floor() as usize).min(self.ny - 1);
        let a = u - i as f64;
        let b = v - j as f64;
        let w = self.nx + 1;
        let s00 = self.table[j * w + i];
        let s10 = self.table[j * w + i + 1];
        let s01 = self.table[(j + 1) * w + i];
        let s11 = self.table[(j + 1) * w + i + 1];
        (1.0 - a) * (1.0 - b) * s00 + a * (1.0 - b) * s10 + (1.0 - a) * b * s01 + a * b * s11
    }

    /// Integral over the rectangle `[xa, xb] x [ya, yb]` (world
    /// coordinates), treating the field as zero outside the grid.
    pub fn rect_integral(&self, xa: f64, xb: f64, ya: f64, yb: f64) -> f64 {
        if xb <= xa || yb <= ya {
            return 0.0;
        }
        let ua = ((xa - self.x0) / self.hx).clamp(0.0, self.nx as f64);
        let ub = ((xb - self.x0) / self.hx).clamp(0.0, self.nx as f64);
        let va = ((ya - self.y0) / self.hy).clamp(0.0, self.ny as f64);
        let vb = ((yb - self.y0) / self.hy).clamp(0.0, self.ny as f64);
        if ub <= ua || vb <= va {
            return 0.0;
        }
        self.hx
            * self.hy
            * (self.corner(ub, vb) - self.corner(ua, vb) - self.corner(ub, va)
                + self.corner(ua, va))
    }

    /// Mean over the rectangle, counting the outside of the grid as zero.
    pub fn rect_mean(&self, xa: f64, xb: f64, ya: f64, yb: f64) -> f64 {
        let w = (xb - xa) * (yb - ya);
        if w <= 0.0 {
            return 0.0;
        }
        self.rect_integral(xa, xb, ya, yb) / w
    }
}

/// Normalized mollifier taps at pitch `p`, with `p = q * h` coarsened so
/// the half-width stays at most ~640 taps.  Returns (taps, pitch, q).
fn mollifier_taps(t: f64, h: f64) -> (Vec<f64>, f64, usize) {
    assert!(t > 0.0);
    let half_w = mollifier::PHI_HALF_WIDTH * t;
    let q = ((half_w / h / 640.0).ceil() as usize).max(1);
    let pitch = h * q as f64;
    let k = ((half_w / pitch).ceil() as usize).max(1);
    let mut taps: Vec<f64> = (0..=2 * k)
        .map(|o| {
            let s = (o as f64 - k as f64) * pitch;
            mollifier::phi_scaled(t, s) * pitch
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for w in &mut taps {
        *w /= sum;
    }
    (taps, pitch, q)
}

/// One-dimensional profile sampled at cell centers `t0 + (k+1/2) ht`,
/// linearly interpolated and zero outside.
#[derive(Debug, Clone)]
pub struct Profile1D {
    pub t0: f64,
    pub ht: f64,
    pub values: Vec<f64>,
}

impl Profile1D {
    pub fn sample(&self, t: f64) -> f64 {
        let u = (t - self.t0) / self.ht - 0.5;
        let n = self.values.len();
        if u <= -1.0 || u >= n as f64 {
            return 0.0;
        }
        let i0 = u.floor();
        let a = u - i0;
        let i0 = i0 as isize;
        let at = |i: isize| -> f64 {
            if i < 0 || i >= n as isize {
                0.0
            } else {
                self.values[i as usize]
            }
        };
        (1.0 - a) * at(i0) + a * at(i0 + 1)
    }

    pub fn integral(&self) -> f64 {
        self.ht * self.values.iter().sum::<f64>()
    }

    /// Smooth with the compact bump mollifier at scale `t`; widens the
    /// domain and may coarsen the pitch like the 2-D convolutions.
    pub fn convolve(&self, t: f64) -> (Profile1D, bool) {
        let (kernel, pitch, q) = mollifier_taps(t, self.ht);
        let src: Vec<f64> = if q > 1 {
            let n = (self.values.len() + q - 1) / q;
            let mut v = vec![0.0; n];
            for (i, x) in self.values.iter().enumerate() {
                v[i / q] += x / q as f64;
            }
            v
        } else {
            self.values.clone()
        };
        let k = kernel.len() / 2;
        let mut out = vec![0.0; src.len() + 2 * k];
        for (i, v) in src.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            for (o, w) in kernel.iter().enumerate() {
                out[i + o] += v * w;
            }
        }
        (
            Profile1D {
                t0: self.t0 - k as f64 * pitch,
                ht: pitch,
                values: out,
            },
            t < 2.0 * self.ht,
        )
    }
}
