//! Plain-text description of a planar set: a bounding rectangle followed
//! by `box` and/or `band` records.
//!
//! ```text
//! # comment
//! bounds 0 8 0 8
//! band 4 4.125
//! box 1 2 0.5 0.75
//! ```
//!
//! Boxes are closed rectangles `[x_lo, x_hi] x [y_lo, y_hi]`; bands are
//! antidiagonal slabs `c_lo <= x + y <= c_hi` clipped to the bounds
//! (bounds must be a square with origin 0 when bands are present).
//! Serialization round-trips exactly: values are printed with Rust's
//! shortest round-trip float formatting.

use crate::bands::BandSet;
use crate::error::CoreError;
use crate::geometry::{Box2, BoxUnion, Point2};

#[derive(Debug, Clone)]
pub struct SetDescription {
    pub bounds: Box2,
    pub boxes: Vec<Box2>,
    pub bands: Vec<(f64, f64)>,
}

impl SetDescription {
    pub fn from_boxes(bounds: Box2, boxes: Vec<Box2>) -> Result<Self, CoreError> {
        let sd = SetDescription {
            bounds,
            boxes,
            bands: Vec::new(),
        };
        sd.validate()?;
        Ok(sd)
    }

    pub fn from_band_set(bs: &BandSet) -> Self {
        SetDescription {
            bounds: Box2::new(0.0, bs.side(), 0.0, bs.side()).unwrap(),
            boxes: Vec::new(),
            bands: bs.bands().to_vec(),
        }
    }

    fn validate(&self) -> Result<(), CoreError> {
        for b in &self.boxes {
            if !self.bounds.contains_box(b) {
                return Err(CoreError::OutOfRegion(format!(
                    "box {b:?} is not inside the bounds"
                )));
            }
        }
        if !self.bands.is_empty() {
            let sq = self.bounds.x.lo() == 0.0
                && self.bounds.y.lo() == 0.0
                && self.bounds.x.hi() == self.bounds.y.hi();
            if !sq {
                return Err(CoreError::OutOfRegion(
                    "band records need square bounds with origin 0".into(),
                ));
            }
            let side = self.bounds.x.hi();
            for &(lo, hi) in &self.bands {
                if !(0.0 <= lo && lo <= hi && hi <= 2.0 * side) {
                    return Err(CoreError::OutOfRegion(format!(
                        "band ({lo}, {hi}) outside [0, {}]",
                        2.0 * side
                    )));
                }
            }
        }
        Ok(())
    }

    /// Side of the bounding square (x-extent for rectangular bounds).
    pub fn side(&self) -> f64 {
        self.bounds.x.hi() - self.bounds.x.lo()
    }

    /// Band part as a `BandSet`, when any bands are present.
    pub fn band_set(&self) -> Option<BandSet> {
        if self.bands.is_empty() {
            None
        } else {
            Some(BandSet::new(self.bounds.x.hi(), self.bands.clone()).expect("validated bands"))
        }
    }

    /// Box part as a normalized union over the same bounds.
    pub fn box_union(&self) -> BoxUnion {
        BoxUnion::with_bounding(self.boxes.clone(), self.bounds)
    }

    pub fn contains(&self, p: Point2) -> bool {
        if !self.bounds.contains(p) {
            return false;
        }
        if self.boxes.iter().any(|b| b.contains(p)) {
            return true;
        }
        let c = p.x + p.y;
        self.bands.iter().any(|&(lo, hi)| lo <= c && c <= hi)
    }

    /// Measure, assuming boxes and bands do not overlap each other.
    pub fn measure(&self) -> f64 {
        let box_part = self.box_union().measure();
        let band_part = self
            .band_set()
            .map(|bs| bs.measure())
            .unwrap_or(0.0);
        box_part + band_part
    }

    pub fn parse(text: &str) -> Result<Self, CoreError> {
        let mut bounds: Option<Box2> = None;
        let mut boxes = Vec::new();
        let mut bands = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CoreError::Parse {
                line: idx + 1,
                msg,
            };
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap();
            let nums: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let nums = nums.map_err(|e| err(format!("bad number: {e}")))?;
            match tag {
                "bounds" => {
                    if nums.len() != 4 {
                        return Err(err("bounds needs 4 numbers".into()));
                    }
                    bounds = Some(
                        Box2::new(nums[0], nums[1], nums[2], nums[3])
                            .map_err(|e| err(e.to_string()))?,
                    );
                }
                "box" => {
                    if nums.len() != 4 {
                        return Err(err("box needs 4 numbers".into()));
                    }
                    boxes.push(
                        Box2::new(nums[0], nums[1], nums[2], nums[3])
                            .map_err(|e| err(e.to_string()))?,
                    );
                }
                "band" => {
                    if nums.len() != 2 {
                        return Err(err("band needs 2 numbers".into()));
                    }
                    bands.push((nums[0], nums[1]));
                }
                other => return Err(err(format!("unknown record '{other}'"))),
            }
        }
        let bounds = bounds.ok_or(CoreError::Parse {
            line: 0,
            msg: "missing bounds record".into(),
        })?;
        let sd = SetDescription {
            bounds,
            boxes,
            bands,
        };
        sd.validate()?;
        Ok(sd)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "bounds {} {} {} {}\n",
            self.bounds.x.lo(),
            self.bounds.x.hi(),
            self.bounds.y.lo(),
            self.bounds.y.hi()
        ));
        for &(lo, hi) in &self.bands {
            out.push_str(&format!("band {lo} {hi}\n"));
        }
        for b in &self.boxes {
            out.push_str(&format!(
                "box {} {} {} {}\n",
                b.x.lo(),
                b.x.hi(),
                b.y.lo(),
                b.y.hi()
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = "# demo\nbounds 0 8 0 8\nband 4 4.125\nbox 1 2.5 0.5 0.75\n";
        let sd = SetDescription::parse(text).unwrap();
        assert_eq!(sd.bands, vec![(4.0, 4.125)]);
        assert_eq!(sd.boxes.len(), 1);
        let again = SetDescription::parse(&sd.to_text()).unwrap();
        assert_eq!(again.bands, sd.bands);
        assert_eq!(again.boxes, sd.boxes);
        assert_eq!(again.to_text(), sd.to_text());
    }

    #[test]
    fn membership_covers_boxes_and_bands() {
        let text = "bounds 0 8 0 8\nband 4 4.125\nbox 1 2 0 1\n";
        let sd = SetDescription::parse(text).unwrap();
        assert!(sd.contains(Point2::new(2.0, 2.05)));
        assert!(sd.contains(Point2::new(1.5, 0.5)));
        assert!(!sd.contains(Point2::new(5.0, 5.0)));
        assert!(!sd.contains(Point2::new(-1.0, 5.0)));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(SetDescription::parse("box 0 1 0 1\n").is_err());
        assert!(SetDescription::parse("bounds 0 1 0 1\nbox 0 2 0 1\n").is_err());
        assert!(SetDescription::parse("bounds 0 1 0 1\ncircle 0 0 1\n").is_err());
        assert!(SetDescription::parse("bounds 0 q 0 1\n").is_err());
    }

    #[test]
    fn measure_adds_disjoint_parts() {
        let text = "bounds 0 8 0 8\nband 4 4.125\nbox 0 1 0 1\n";
        let sd = SetDescription::parse(text).unwrap();
        let band_area = (4.125f64 * 4.125 - 16.0) / 2.0;
        assert!((sd.measure() - (1.0 + band_area)).abs() < 1e-12);
    }
}
