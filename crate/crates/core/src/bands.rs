//! Antidiagonal band families inside a square `[0, R]^2`.
//!
//! A band is the slab `{(x, y) : c_lo <= x + y <= c_hi}` clipped to the
//! square. The harmonic family places band `j` at `c_lo = R - 4j` with
//! width `1/(8j)` for `j = 1..floor(R/4)`; it avoids hyperbolic corners,
//! and [`BandSet::certify`] replays the three-case proof as explicit
//! inequalities in exact rational arithmetic.

use crate::error::CoreError;
use crate::geometry::{BoxUnion, Box2, Point2};
use num::{BigRational, FromPrimitive, Signed, ToPrimitive, Zero};
use rand::Rng;

/// Sorted (descending in `c`) family of closed antidiagonal bands.
#[derive(Debug, Clone)]
pub struct BandSet {
    side: f64,
    bands: Vec<(f64, f64)>,
}

impl BandSet {
    /// Validates ranges and sorts bands by decreasing lower edge.
    /// Bands must satisfy `0 <= c_lo <= c_hi <= 2R`; disjointness is not
    /// required here (the certificate checks it separately).
    pub fn new(side: f64, mut bands: Vec<(f64, f64)>) -> Result<Self, CoreError> {
        if !(side > 0.0) {
            return Err(CoreError::BadConfig(format!("side must be positive, got {side}")));
        }
        for &(lo, hi) in &bands {
            if !(0.0 <= lo && lo <= hi && hi <= 2.0 * side) {
                return Err(CoreError::BadConfig(format!(
                    "band ({lo}, {hi}) outside [0, {}]",
                    2.0 * side
                )));
            }
        }
        bands.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        Ok(BandSet { side, bands })
    }

    /// The harmonic family: `m = floor(R/4)` bands, band `j` spanning
    /// `[R - 4j, R - 4j + 1/(8j)]`. Requires `R >= 4`.
    pub fn harmonic(side: f64) -> Result<Self, CoreError> {
        if !(side >= 4.0) {
            return Err(CoreError::SideTooSmall(side));
        }
        let m = (side / 4.0).floor() as usize;
        let bands = (1..=m)
            .map(|j| {
                let lo = side - 4.0 * j as f64;
                (lo, lo + 1.0 / (8.0 * j as f64))
            })
            .collect();
        Ok(BandSet { side, bands })
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    /// Bands in decreasing order of `c_lo`.
    pub fn bands(&self) -> &[(f64, f64)] {
        &self.bands
    }

    /// Lebesgue measure, assuming disjoint bands.
    pub fn measure(&self) -> f64 {
        self.bands
            .iter()
            .map(|&(lo, hi)| band_area(self.side, lo, hi))
            .sum()
    }

    pub fn contains(&self, p: Point2) -> bool {
        if !(0.0 <= p.x && p.x <= self.side && 0.0 <= p.y && p.y <= self.side) {
            return false;
        }
        let c = p.x + p.y;
        // Bands are few; a linear scan over the descending list suffices.
        self.bands.iter().any(|&(lo, hi)| lo <= c && c <= hi)
    }

    /// Covers each band by axis-aligned boxes of the given pitch. The
    /// result strictly contains the band set (returned flag is `false`
    /// to mark the conversion as inexact).
    pub fn to_boxes(&self, pitch: f64) -> (BoxUnion, bool) {
        assert!(pitch > 0.0);
        let r = self.side;
        let mut boxes = Vec::new();
        for &(lo, hi) in &self.bands {
            let k0 = ((lo - r).max(0.0) / pitch).floor() as i64;
            let k1 = (hi.min(r) / pitch).ceil() as i64;
            for k in k0..k1 {
                let x0 = k as f64 * pitch;
                let x1 = (x0 + pitch).min(r);
                let y0 = (lo - x1).max(0.0);
                let y1 = (hi - x0).min(r);
                if y0 <= y1 && x0 <= x1 {
                    boxes.push(Box2::new(x0, x1, y0, y1).unwrap());
                }
            }
        }
        let bounding = Box2::new(0.0, r, 0.0, r).unwrap();
        (BoxUnion::with_bounding(boxes, bounding), false)
    }
}

/// Which inequality family failed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertCase {
    /// Within one band `t <= w` and `1/t <= w` force `w^2 >= 1`.
    SameBand,
    /// Jumps to strictly higher bands force `t > 3` and `1/t > 3`.
    Separation,
    /// One point in-band, one above: `t <= w` and `1/t <= span` force
    /// `w * span >= 1`.
    Mixed,
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub pass: bool,
    /// `min_j (1 - w_j^2)`.
    pub same_band_margin: f64,
    /// `min over adjacent pairs (gap - 3)`; `None` with fewer than 2 bands.
    pub separation_margin: Option<f64>,
    /// `min_j (1 - w_j * (c_top - c_lo_j))`.
    pub mixed_margin: f64,
    /// First violated inequality: case and band index (pair index for
    /// separation, counting from the top).
    pub violated: Option<(CertCase, usize)>,
}

impl BandSet {
    /// Replays the three-case avoidance proof as inequalities, in exact
    /// rational arithmetic on the band endpoints. Returns an error if the
    /// family is not a layered one (unsorted or overlapping bands);
    /// returns `pass = false` naming the first violated inequality for
    /// layered families that break a case.
    pub fn certify(&self) -> Result<Certificate, CoreError> {
        if self.bands.is_empty() {
            return Err(CoreError::NotCertifiable("no bands".into()));
        }
        let rat = |v: f64| BigRational::from_f64(v).expect("finite band endpoint");
        let bands: Vec<(BigRational, BigRational)> = self
            .bands
            .iter()
            .map(|&(lo, hi)| (rat(lo), rat(hi)))
            .collect();
        for w in bands.windows(2) {
            // Descending and disjoint: the next band must end at or below
            // the current band's lower edge.
            if w[1].1 > w[0].0 {
                return Err(CoreError::NotCertifiable(
                    "bands overlap or are out of order".into(),
                ));
            }
        }
        let one = BigRational::from_integer(1.into());
        let three = BigRational::from_integer(3.into());
        let c_top = bands[0].1.clone();

        let mut same_band_margin: Option<BigRational> = None;
        let mut mixed_margin: Option<BigRational> = None;
        let mut separation_margin: Option<BigRational> = None;
        let mut violated: Option<(CertCase, usize)> = None;

        for (j, (lo, hi)) in bands.iter().enumerate() {
            let w = hi - lo;
            let m1 = &one - &w * &w;
            if m1 <= BigRational::zero() && violated.is_none() {
                violated = Some((CertCase::SameBand, j));
            }
            same_band_margin = Some(match same_band_margin {
                Some(cur) => cur.min(m1),
                None => m1,
            });

            let span = &c_top - lo;
            let m3 = &one - &w * &span;
            if m3 <= BigRational::zero() && violated.is_none() {
                violated = Some((CertCase::Mixed, j));
            }
            mixed_margin = Some(match mixed_margin {
                Some(cur) => cur.min(m3),
                None => m3,
            });
        }
        for (p, w) in bands.windows(2).enumerate() {
            let gap = &w[0].0 - &w[1].1;
            let m2 = gap - &three;
            if !m2.is_positive() && violated.is_none() {
                violated = Some((CertCase::Separation, p));
            }
            separation_margin = Some(match separation_margin {
                Some(cur) => cur.min(m2),
                None => m2,
            });
        }

        // Violations were collected per-case in band order; report the
        // first in case order (same-band, separation, mixed) at the
        // smallest index, matching the proof's case enumeration.
        let to_f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
        let same = to_f(same_band_margin.as_ref().unwrap());
        let mixed = to_f(mixed_margin.as_ref().unwrap());
        let sep = separation_margin.as_ref().map(|r| to_f(r));
        let pass = same > 0.0 && mixed > 0.0 && sep.map_or(true, |s| s > 0.0);
        Ok(Certificate {
            pass,
            same_band_margin: same,
            separation_margin: sep,
            mixed_margin: mixed,
            violated: if pass { None } else { violated },
        })
    }

    /// Randomized hunt for an actual corner inside the band set: draws a
    /// base band and a target band, a level `c` in the base and `c + t` in
    /// the target, then checks whether `c + 1/t` lands in any band and the
    /// triple fits in the square. Returns the first witness found.
    pub fn sample_corner_witness(&self, samples: u64, seed: u64) -> Option<[Point2; 3]> {
        let mut rng = crate::rng::stream(seed, "band-witness", 0);
        let r = self.side;
        let nb = self.bands.len();
        for _ in 0..samples {
            let a = self.bands[rng.gen_range(0..nb)];
            let b = self.bands[rng.gen_range(0..nb)];
            let c = rng.gen_range(a.0..=a.1);
            let ct = rng.gen_range(b.0..=b.1);
            let t = ct - c;
            if t <= 0.0 {
                continue;
            }
            let s = 1.0 / t;
            let c2 = c + s;
            if !self.bands.iter().any(|&(lo, hi)| lo <= c2 && c2 <= hi) {
                continue;
            }
            let x_lo = (c - r).max(c + s - r).max(0.0);
            let x_hi = c.min(r - t);
            if x_lo > x_hi {
                continue;
            }
            let x = 0.5 * (x_lo + x_hi);
            let y = c - x;
            let p0 = Point2::new(x, y);
            let p1 = Point2::new(x + t, y);
            let p2 = Point2::new(x, y + s);
            if self.contains(p0) && self.contains(p1) && self.contains(p2) {
                return Some([p0, p1, p2]);
            }
        }
        None
    }
}

/// Area of `{x + y <= c}` clipped to `[0, side]^2`.
pub fn sub_level_area(side: f64, c: f64) -> f64 {
    if c <= 0.0 {
        0.0
    } else if c <= side {
        0.5 * c * c
    } else if c <= 2.0 * side {
        side * side - 0.5 * (2.0 * side - c) * (2.0 * side - c)
    } else {
        side * side
    }
}

/// Area of the single band `{lo <= x + y <= hi}` clipped to the square.
pub fn band_area(side: f64, lo: f64, hi: f64) -> f64 {
    sub_level_area(side, hi) - sub_level_area(side, lo)
}

/// Closed-form measure of the harmonic family,
/// `(R/8) H_m - m/2 + (1/128) sum_{j<=m} j^{-2}` with `m = floor(R/4)`,
/// evaluated in exact rational arithmetic.
pub fn harmonic_measure_reference(side: f64) -> Result<f64, CoreError> {
    if !(side >= 4.0) {
        return Err(CoreError::SideTooSmall(side));
    }
    let m = (side / 4.0).floor() as i64;
    let r = BigRational::from_f64(side).expect("finite side");
    let mut harmonic = BigRational::zero();
    let mut inv_sq = BigRational::zero();
    for j in 1..=m {
        harmonic += BigRational::new(1.into(), j.into());
        inv_sq += BigRational::new(1.into(), (j * j).into());
    }
    let total = r / BigRational::from_integer(8.into()) * harmonic
        - BigRational::new(m.into(), 2.into())
        + inv_sq / BigRational::from_integer(128.into());
    Ok(total.to_f64().unwrap())
}
