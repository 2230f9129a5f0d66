//! Integer-grid machinery: arithmetic-progression search, populated-row
//! analysis, exact fixed-area triangle detection, the constructive
//! extraction of such a triangle from a dense grid, and sampling of
//! discrete grids from continuous sets.
//!
//! All areas are tracked as the integer `2T` (the cross product), so
//! "area exactly T" is decided in exact arithmetic.

use crate::error::CoreError;
use crate::geometry::BoxUnion;
use crate::rng;
use rand::Rng;
use std::collections::BTreeSet;

pub const MAX_GRID_SIDE: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSet {
    n: usize,
    bits: Vec<u64>,
}

impl GridSet {
    pub fn new(n: usize) -> Result<Self, CoreError> {
        if n == 0 || n > MAX_GRID_SIDE {
            return Err(CoreError::BadConfig(format!(
                "grid side must be in 1..={MAX_GRID_SIDE}, got {n}"
            )));
        }
        Ok(GridSet {
            n,
            bits: vec![0u64; (n * n + 63) / 64],
        })
    }

    pub fn full(n: usize) -> Result<Self, CoreError> {
        let mut g = GridSet::new(n)?;
        for w in &mut g.bits {
            *w = u64::MAX;
        }
        let extra = g.bits.len() * 64 - n * n;
        if extra > 0 {
            let last = g.bits.len() - 1;
            g.bits[last] >>= extra;
        }
        Ok(g)
    }

    pub fn from_points(n: usize, pts: &[(usize, usize)]) -> Result<Self, CoreError> {
        let mut g = GridSet::new(n)?;
        for &(x, y) in pts {
            if x >= n || y >= n {
                return Err(CoreError::BadConfig(format!(
                    "point ({x}, {y}) outside {n}x{n} grid"
                )));
            }
            g.insert(x, y);
        }
        Ok(g)
    }

    /// Bernoulli(density) grid with a deterministic stream.
    pub fn random(n: usize, density: f64, seed: u64) -> Result<Self, CoreError> {
        let mut g = GridSet::new(n)?;
        let mut r = rng::stream(seed, "grid-random", 0);
        for y in 0..n {
            for x in 0..n {
                if r.gen::<f64>() < density {
                    g.insert(x, y);
                }
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, x: usize, y: usize) -> (usize, u64) {
        let bit = y * self.n + x;
        (bit / 64, 1u64 << (bit % 64))
    }

    pub fn insert(&mut self, x: usize, y: usize) {
        assert!(x < self.n && y < self.n);
        let (w, m) = self.idx(x, y);
        self.bits[w] |= m;
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        if x >= self.n || y >= self.n {
            return false;
        }
        let (w, m) = self.idx(x, y);
        self.bits[w] & m != 0
    }

    pub fn size(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn points(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.size());
        for y in 0..self.n {
            for x in 0..self.n {
                if self.contains(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn row_count(&self, y: usize) -> usize {
        (0..self.n).filter(|&x| self.contains(x, y)).count()
    }

    pub fn row_members(&self, y: usize) -> Vec<usize> {
        (0..self.n).filter(|&x| self.contains(x, y)).collect()
    }

    /// Text format: first line the side `n`, then one `x y` pair per line.
    pub fn parse(text: &str) -> Result<Self, CoreError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, first) = lines.next().ok_or(CoreError::Parse {
            line: 0,
            msg: "empty grid file".into(),
        })?;
        let n: usize = first.parse().map_err(|e| CoreError::Parse {
            line: ln,
            msg: format!("bad side: {e}"),
        })?;
        let mut g = GridSet::new(n).map_err(|e| CoreError::Parse {
            line: ln,
            msg: e.to_string(),
        })?;
        for (ln, l) in lines {
            let mut it = l.split_whitespace();
            let parse_one = |s: Option<&str>| -> Result<usize, CoreError> {
                s.ok_or(CoreError::Parse {
                    line: ln,
                    msg: "expected `x y`".into(),
                })?
                .parse()
                .map_err(|e| CoreError::Parse {
                    line: ln,
                    msg: format!("bad coordinate: {e}"),
                })
            };
            let x = parse_one(it.next())?;
            let y = parse_one(it.next())?;
            if x >= n || y >= n {
                return Err(CoreError::Parse {
                    line: ln,
                    msg: format!("point ({x}, {y}) outside {n}x{n} grid"),
                });
            }
            g.insert(x, y);
        }
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (x, y) in self.points() {
            out.push_str(&format!("{x} {y}\n"));
        }
        out
    }
}

/// Lexicographically first (by step, then start) arithmetic progression
/// of the given length inside `s`, with positive step.
pub fn find_ap(s: &[i64], len: usize) -> Option<(i64, i64)> {
    if len < 2 {
        return None;
    }
    let set: BTreeSet<i64> = s.iter().copied().collect();
    if set.len() < len {
        return None;
    }
    let lo = *set.iter().next().unwrap();
    let hi = *set.iter().last().unwrap();
    let max_step = (hi - lo) / (len as i64 - 1);
    for step in 1..=max_step {
        for &start in &set {
            if start + step * (len as i64 - 1) > hi {
                break;
            }
            if (1..len as i64).all(|i| set.contains(&(start + i * step))) {
                return Some((start, step));
            }
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct PopulatedRows {
    pub rows: Vec<usize>,
    /// Row-count threshold `(beta/2) n`.
    pub threshold: f64,
    /// Whether `|B| >= beta n^2` held (the pigeonhole hypothesis).
    pub size_precondition: bool,
    /// Whether at least `(beta/2) n` rows are populated (its conclusion).
    pub count_bound_met: bool,
}

/// Rows holding at least `(beta/2) n` members, with the pigeonhole
/// bookkeeping: a set of density `beta` must have at least `(beta/2) n`
/// such rows.
pub fn populated_rows(b: &GridSet, beta: f64) -> PopulatedRows {
    let n = b.n();
    let threshold = 0.5 * beta * n as f64;
    let rows: Vec<usize> = (0..n)
        .filter(|&y| b.row_count(y) as f64 >= threshold)
        .collect();
    PopulatedRows {
        size_precondition: b.size() as f64 >= beta * (n * n) as f64,
        count_bound_met: rows.len() as f64 >= threshold,
        threshold,
        rows,
    }
}

fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, s, t) = egcd(b, a % b);
        (g, t, s - (a / b) * t)
    }
}

fn checked_cross(p0: (i64, i64), p1: (i64, i64), p2: (i64, i64)) -> Result<i64, CoreError> {
    let sub = |a: i64, b: i64| a.checked_sub(b).ok_or(CoreError::Overflow("cross product"));
    let mul = |a: i64, b: i64| a.checked_mul(b).ok_or(CoreError::Overflow("cross product"));
    let dx1 = sub(p1.0, p0.0)?;
    let dy1 = sub(p1.1, p0.1)?;
    let dx2 = sub(p2.0, p0.0)?;
    let dy2 = sub(p2.1, p0.1)?;
    mul(dx1, dy2)?
        .checked_sub(mul(dy1, dx2)?)
        .ok_or(CoreError::Overflow("cross product"))
}

/// Twice the (unsigned) triangle area on integer points.
pub fn doubled_area(
    p0: (i64, i64),
    p1: (i64, i64),
    p2: (i64, i64),
) -> Result<i64, CoreError> {
    Ok(checked_cross(p0, p1, p2)?.abs())
}

/// First (in a fixed scan order) triple of grid points spanning a
/// triangle of doubled area exactly `two_t`.  For every ordered pair the
/// third vertex is searched only along the two lattice lines where the
/// cross product attains the target, so the cost is pairs x side rather
/// than cubic in the point count.
pub fn find_triangle_of_area(
    b: &GridSet,
    two_t: i64,
) -> Result<Option<[(i64, i64); 3]>, CoreError> {
    if two_t < 1 {
        return Err(CoreError::BadConfig(format!(
            "doubled area must be at least 1, got {two_t}"
        )));
    }
    let pts: Vec<(i64, i64)> = b
        .points()
        .into_iter()
        .map(|(x, y)| (x as i64, y as i64))
        .collect();
    let n = b.n() as i64;
    for (ai, &p) in pts.iter().enumerate() {
        for &q in &pts[ai + 1..] {
            let dx = q.0 - p.0;
            let dy = q.1 - p.1;
            let (g, s, t) = egcd(dx, dy);
            debug_assert!(g > 0);
            for c in [two_t, -two_t] {
                if c % g != 0 {
                    continue;
                }
                // solve dx*Y - dy*X = c; egcd gives s*dx + t*dy = g
                let y0 = s * (c / g);
                let x0 = -t * (c / g);
                // general solution: (X, Y) = (x0 + m*dx/g, y0 + m*dy/g)
                let (step_x, step_y) = (dx / g, dy / g);
                let (mut m_lo, mut m_hi) = (i64::MIN, i64::MAX);
                let clamp = |lo: &mut i64, hi: &mut i64, base: i64, step: i64| {
                    // 0 <= base + m*step <= n-1
                    if step == 0 {
                        if base < 0 || base >= n {
                            (*lo, *hi) = (1, 0);
                        }
                    } else {
                        let (a, b) = (-base, n - 1 - base);
                        let (mut l, mut h) = (
                            (a as f64 / step as f64).min(b as f64 / step as f64),
                            (a as f64 / step as f64).max(b as f64 / step as f64),
                        );
                        l = l.ceil();
                        h = h.floor();
                        *lo = (*lo).max(l as i64);
                        *hi = (*hi).min(h as i64);
                    }
                };
                clamp(&mut m_lo, &mut m_hi, p.0 + x0, step_x);
                clamp(&mut m_lo, &mut m_hi, p.1 + y0, step_y);
                for m in m_lo..=m_hi {
                    let r = (p.0 + x0 + m * step_x, p.1 + y0 + m * step_y);
                    if b.contains(r.0 as usize, r.1 as usize)
                        && checked_cross(p, q, r)?.abs() == two_t
                    {
                        return Ok(Some([p, q, r]));
                    }
                }
            }
        }
    }
    Ok(None)
}

fn factorial(k: u64) -> Result<u64, CoreError> {
    let mut acc: u64 = 1;
    for i in 2..=k {
        acc = acc
            .checked_mul(i)
            .ok_or(CoreError::Overflow("factorial"))?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy)]
pub struct GrahamParams {
    /// Density parameter in (0, 1].
    pub beta: f64,
    /// Progression parameter; the row progression has r!+1 terms.
    pub r: u64,
    /// Strip height.
    pub big_n: u64,
    /// Common difference of the row progression.
    pub l: u64,
}

impl GrahamParams {
    /// Doubled target area `2T = r! N!`.
    pub fn doubled_target(&self) -> Result<u64, CoreError> {
        factorial(self.r)?
            .checked_mul(factorial(self.big_n)?)
            .ok_or(CoreError::Overflow("target area"))
    }

    /// Column stride `k = N!/l`.
    pub fn stride(&self) -> Result<u64, CoreError> {
        let nf = factorial(self.big_n)?;
        if self.l == 0 || nf % self.l != 0 {
            return Err(CoreError::BadConfig(format!(
                "common difference {} must divide N! = {nf}",
                self.l
            )));
        }
        Ok(nf / self.l)
    }

    fn validate(&self, n: usize) -> Result<Vec<String>, CoreError> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(CoreError::BadConfig(format!(
                "density must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if self.r < 2 || self.big_n < 1 {
            return Err(CoreError::BadConfig(
                "need r >= 2 and N >= 1".into(),
            ));
        }
        self.stride()?;
        let mut warnings = Vec::new();
        if (self.r as f64) < 4.0 / self.beta {
            warnings.push(format!(
                "r = {} is below 4/beta = {:.2}; the density argument is not in force",
                self.r,
                4.0 / self.beta
            ));
        }
        if n as u64 % self.big_n != 0 {
            warnings.push(format!("side {n} is not a multiple of N = {}", self.big_n));
        }
        let need = (self.r + 1).checked_mul(factorial(self.big_n)?);
        match need {
            Some(need) if (n as u64) < need => warnings.push(format!(
                "side {n} is below (r+1) N! = {need}; existence is not guaranteed"
            )),
            None => warnings.push("(r+1) N! overflows; existence bound unchecked".into()),
            _ => {}
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone)]
pub struct GrahamStep {
    pub name: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct GrahamTrace {
    /// Violated desk-scale preconditions (the run proceeds regardless).
    pub warnings: Vec<String>,
    pub steps: Vec<GrahamStep>,
    pub triangle: Option<[(i64, i64); 3]>,
    /// First construction step whose existence claim failed, if any.
    pub failed_step: Option<&'static str>,
    pub doubled_target: u64,
}

impl GrahamTrace {
    pub fn succeeded(&self) -> bool {
        self.triangle.is_some()
    }
}

/// Constructive extraction of a triangle of doubled area `r! N!` from a
/// dense grid: pick a strip of height N holding an (r!+1)-term
/// progression of populated rows with step `l`, find two base-row
/// members congruent mod `k = N!/l` whose gap divides `r!`, and take
/// any point of the matching progression row as the apex.  Each step is
/// logged; the first failing step is named instead of erroring.
pub fn graham_extract(b: &GridSet, params: &GrahamParams) -> Result<GrahamTrace, CoreError> {
    let n = b.n();
    let warnings = params.validate(n)?;
    let r_fact = factorial(params.r)? as i64;
    let stride = params.stride()? as i64;
    let two_t = params.doubled_target()?;
    let l = params.l as i64;
    let mut trace = GrahamTrace {
        warnings,
        steps: vec![GrahamStep {
            name: "parameters",
            detail: format!(
                "r! = {r_fact}, k = N!/l = {stride}, doubled target area = {two_t}"
            ),
        }],
        triangle: None,
        failed_step: None,
        doubled_target: two_t,
    };
    let pop = populated_rows(b, params.beta);
    trace.steps.push(GrahamStep {
        name: "populated-rows",
        detail: format!(
            "{} rows at threshold {:.2} (size precondition {})",
            pop.rows.len(),
            pop.threshold,
            if pop.size_precondition { "holds" } else { "fails" }
        ),
    });
    if pop.rows.is_empty() {
        trace.failed_step = Some("populated-rows");
        return Ok(trace);
    }
    let populated: BTreeSet<usize> = pop.rows.iter().copied().collect();
    let strip_count = n.div_ceil(params.big_n as usize);
    let terms = r_fact as usize; // progression has r!+1 rows: y0 + i l, i <= r!
    let mut progression: Option<(usize, usize)> = None; // (strip, y0)
    'strips: for s in 0..strip_count {
        let lo = s * params.big_n as usize;
        let hi = ((s + 1) * params.big_n as usize).min(n);
        for y0 in lo..hi {
            let top = y0 as i64 + r_fact * l;
            if top >= hi as i64 {
                break;
            }
            if (0..=terms).all(|i| populated.contains(&(y0 + i * l as usize))) {
                progression = Some((s, y0));
                break 'strips;
            }
        }
    }
    let Some((strip, y0)) = progression else {
        trace.failed_step = Some("row-progression");
        trace.steps.push(GrahamStep {
            name: "row-progression",
            detail: format!(
                "no strip of height {} holds {} populated rows at step {l}",
                params.big_n,
                terms + 1
            ),
        });
        return Ok(trace);
    };
    trace.steps.push(GrahamStep {
        name: "row-progression",
        detail: format!(
            "strip {strip}: populated rows {y0}, {}, ..., {}",
            y0 + l as usize,
            y0 + terms * l as usize
        ),
    });
    // base-row pair congruent mod k with gap dividing r!
    let base = b.row_members(y0);
    let mut pair: Option<(i64, i64, i64)> = None; // (x, x', gap/k)
    'pairs: for (i, &x) in base.iter().enumerate() {
        for &xp in &base[i + 1..] {
            let gap = (xp - x) as i64;
            if gap % stride == 0 {
                let d = gap / stride;
                if d >= 1 && r_fact % d == 0 {
                    pair = Some((x as i64, xp as i64, d));
                    break 'pairs;
                }
            }
        }
    }
    let Some((x_lo, x_hi, d)) = pair else {
        trace.failed_step = Some("base-row-pair");
        trace.steps.push(GrahamStep {
            name: "base-row-pair",
            detail: format!(
                "row {y0}: no two members congruent mod {stride} with gap/k dividing {r_fact}"
            ),
        });
        return Ok(trace);
    };
    trace.steps.push(GrahamStep {
        name: "base-row-pair",
        detail: format!("({x_lo}, {y0}) and ({x_hi}, {y0}), gap {} = {d} k", x_hi - x_lo),
    });
    let y1 = y0 as i64 + (r_fact / d) * l;
    let apex = if y1 >= 0 && (y1 as usize) < n {
        b.row_members(y1 as usize).first().copied()
    } else {
        None
    };
    let Some(x1) = apex else {
        trace.failed_step = Some("apex-point");
        trace.steps.push(GrahamStep {
            name: "apex-point",
            detail: format!("row {y1} is empty or outside the grid"),
        });
        return Ok(trace);
    };
    trace.steps.push(GrahamStep {
        name: "apex-point",
        detail: format!("({x1}, {y1}) at height r!/{d} * l above the base"),
    });
    let triangle = [(x_lo, y0 as i64), (x_hi, y0 as i64), (x1 as i64, y1)];
    let cross = checked_cross(triangle[0], triangle[1], triangle[2])?.unsigned_abs();
    trace.steps.push(GrahamStep {
        name: "area-check",
        detail: format!("doubled area {cross}, target {two_t}"),
    });
    if cross != two_t {
        trace.failed_step = Some("area-check");
        return Ok(trace);
    }
    trace.triangle = Some(triangle);
    Ok(trace)
}

#[derive(Debug, Clone)]
pub struct TransferReport {
    pub grid: GridSet,
    pub density: f64,
    /// Density of the source set within its bounding square.
    pub ambient_density: f64,
    /// Whether the best sample beat half the ambient density.
    pub achieved_half_density: bool,
    /// Whether the side R satisfies `R >= 8 n delta^{-1} / sqrt(T)`.
    pub region_ok: bool,
    pub best_offset: (f64, f64),
}

/// Samples anchor points `(u, v)` and builds the discrete sets
/// `B = {(k, l): (u, v) + (k, l)/sqrt(T) in A}`, returning the densest.
pub fn transference_sample(
    a: &BoxUnion,
    n: usize,
    t: f64,
    trials: u64,
    seed: u64,
) -> Result<TransferReport, CoreError> {
    if n == 0 || !(t > 0.0) || trials == 0 {
        return Err(CoreError::BadConfig(
            "need a positive grid side, scale, and trial count".into(),
        ));
    }
    let bounding = a.bounding();
    let side = bounding.x.hi().max(bounding.y.hi());
    let scale = t.sqrt().recip();
    let span = (n - 1) as f64 * scale;
    if span >= side {
        return Err(CoreError::BadConfig(format!(
            "sampled grid spans {span:.3}, larger than the region side {side:.3}"
        )));
    }
    let delta = a.measure() / (side * side);
    let region_ok = delta > 0.0 && side >= 8.0 * n as f64 * scale / delta;
    let mut r = rng::stream(seed, "transference", 0);
    let mut best: Option<(usize, f64, f64)> = None;
    for _ in 0..trials {
        let u = r.gen::<f64>() * (side - span);
        let v = r.gen::<f64>() * (side - span);
        let mut count = 0usize;
        for k in 0..n {
            for l in 0..n {
                let p = crate::geometry::Point2::new(
                    u + k as f64 * scale,
                    v + l as f64 * scale,
                );
                if a.contains(p) {
                    count += 1;
                }
            }
        }
        if best.map_or(true, |(c, _, _)| count > c) {
            best = Some((count, u, v));
        }
    }
    let (_, u, v) = best.unwrap();
    let mut grid = GridSet::new(n)?;
    for k in 0..n {
        for l in 0..n {
            let p =
                crate::geometry::Point2::new(u + k as f64 * scale, v + l as f64 * scale);
            if a.contains(p) {
                grid.insert(k, l);
            }
        }
    }
    let density = grid.size() as f64 / (n * n) as f64;
    Ok(TransferReport {
        density,
        ambient_density: delta,
        achieved_half_density: density > delta / 2.0,
        region_ok,
        best_offset: (u, v),
        grid,
    })
}
