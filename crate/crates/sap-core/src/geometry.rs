//! Spatial model: Poisson point processes, Boolean rectangle blockages, LOS
//! balls, joint-unblocked ellipses, and beam-sector geometry.
//!
//! Everything here is pure given (inputs, seed). `Deployment` values are
//! immutable after construction and safe to share across workers.

use crate::error::{Result, SapError};
use crate::numerics::{checked_acos, eval_polynomial};
use crate::seed::SeedStream;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const ACOS_CLAMP_TOL: f64 = 1e-12;

/// A point in the plane, meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Square observation window `[-half_width, half_width]^2` plus a simulated
/// border that suppresses edge effects: processes are sampled on the extended
/// window, statistics are tallied only inside the inner one.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Region {
    pub half_width: f64,
    pub guard_margin: f64,
}

impl Region {
    pub fn new(half_width: f64, guard_margin: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(SapError::Parameter(format!(
                "half_width must be > 0, got {half_width}"
            )));
        }
        if !(guard_margin >= 0.0) {
            return Err(SapError::Parameter(format!(
                "guard_margin must be >= 0, got {guard_margin}"
            )));
        }
        Ok(Region {
            half_width,
            guard_margin,
        })
    }

    /// Default guard: five mean nearest-neighbor distances of a process with
    /// density `lambda`, i.e. 5 / (2 sqrt(lambda)).
    pub fn with_default_guard(half_width: f64, lambda: f64) -> Result<Self> {
        let guard = if lambda > 0.0 {
            2.5 / lambda.sqrt()
        } else {
            0.0
        };
        Region::new(half_width, guard)
    }

    pub fn outer_half_width(&self) -> f64 {
        self.half_width + self.guard_margin
    }

    pub fn outer_area(&self) -> f64 {
        let w = 2.0 * self.outer_half_width();
        w * w
    }

    pub fn inner_area(&self) -> f64 {
        let w = 2.0 * self.half_width;
        w * w
    }

    pub fn contains_inner(&self, p: Point) -> bool {
        p.x.abs() <= self.half_width && p.y.abs() <= self.half_width
    }
}

/// Boolean blockage statistics: rectangle centers form a PPP of density
/// `lambda_b`, each rectangle has length `d_len`, width `d_wid`, and a
/// uniform orientation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockageModel {
    pub lambda_b: f64,
    pub d_len: f64,
    pub d_wid: f64,
}

impl BlockageModel {
    pub fn new(lambda_b: f64, d_len: f64, d_wid: f64) -> Result<Self> {
        if !(lambda_b >= 0.0 && d_len > 0.0 && d_wid > 0.0) {
            return Err(SapError::Parameter(format!(
                "invalid blockage model: lambda_b={lambda_b}, d_len={d_len}, d_wid={d_wid}"
            )));
        }
        Ok(BlockageModel {
            lambda_b,
            d_len,
            d_wid,
        })
    }

    /// Blockage factor xi = lambda_b (d_len + d_wid), 1/m. The scalar that
    /// controls all LOS statistics.
    pub fn blockage_factor(&self) -> f64 {
        self.lambda_b * (self.d_len + self.d_wid)
    }

    /// Mean LOS range of the ball model. Unbounded (infinite) when the
    /// blockage density vanishes.
    pub fn avg_los_distance(&self) -> f64 {
        if self.lambda_b == 0.0 {
            return f64::INFINITY;
        }
        PI * (2.0 * (-self.lambda_b * self.d_len * self.d_wid).exp()).sqrt()
            / (2.0 * self.lambda_b * (self.d_len + self.d_wid))
    }
}

/// Probability that a single link of length `dist` is unblocked.
pub fn unblocked_prob(dist: f64, b: &BlockageModel) -> Result<f64> {
    if dist < 0.0 {
        return Err(SapError::Parameter(format!("negative distance {dist}")));
    }
    Ok((-2.0 * b.blockage_factor() * dist / PI).exp())
}

/// Joint unblocked probability of the two links of a secondary pair, which
/// depends only on the sum of the two hop lengths.
pub fn joint_unblocked_prob(rt: f64, rr: f64, b: &BlockageModel) -> Result<f64> {
    if rt < 0.0 || rr < 0.0 {
        return Err(SapError::Parameter(format!(
            "negative distance rt={rt}, rr={rr}"
        )));
    }
    Ok((-2.0 * b.blockage_factor() * (rt + rr) / PI).exp())
}

/// Membership in the joint-unblocked ellipse: foci at the pair endpoints,
/// major axis `l`. Uses the canonical-frame algebraic form; the sum-of-focal
/// -distances definition serves as the independent oracle in tests.
pub fn in_joint_unblocked_ellipse(primary: Point, tx: Point, rx: Point, l: f64) -> Result<bool> {
    let d = tx.dist(rx);
    if l < d {
        return Err(SapError::Parameter(format!(
            "axis length {l} shorter than focal distance {d}"
        )));
    }
    let a = 0.5 * l;
    let c = 0.5 * d;
    let b_sq = a * a - c * c;
    let cx = 0.5 * (tx.x + rx.x);
    let cy = 0.5 * (tx.y + rx.y);
    let (ux, uy) = if d > 0.0 {
        ((rx.x - tx.x) / d, (rx.y - tx.y) / d)
    } else {
        (1.0, 0.0)
    };
    let px = primary.x - cx;
    let py = primary.y - cy;
    let xm = px * ux + py * uy;
    let ym = -px * uy + py * ux;
    if b_sq == 0.0 {
        // Degenerate ellipse: the segment itself.
        return Ok(ym.abs() <= 1e-12 * a.max(1.0) && xm.abs() <= a);
    }
    Ok(xm * xm / (a * a) + ym * ym / b_sq <= 1.0 + 1e-12)
}

/// Result of the fitted axis-length curve, with a flag when the blockage
/// factor lies outside the range the fit was built on.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FittedAxisLength {
    pub value: f64,
    pub in_fitted_range: bool,
}

/// Quintic fit of the optimal joint-unblocked axis length against the
/// blockage factor xi (1/m). Constant term 176 m at xi = 0.
pub const AXIS_LENGTH_COEFFS: [f64; 6] = [176.0, -1318.0, -1.118e5, 3.847e6, -4.729e7, 2.051e8];

/// Range of blockage factors covered by the published fit.
pub const AXIS_LENGTH_FIT_RANGE: (f64, f64) = (0.0, 0.08);

pub fn axis_length_from_blockage_factor(xi: f64) -> FittedAxisLength {
    FittedAxisLength {
        value: eval_polynomial(&AXIS_LENGTH_COEFFS, xi),
        in_fitted_range: (AXIS_LENGTH_FIT_RANGE.0..=AXIS_LENGTH_FIT_RANGE.1).contains(&xi),
    }
}

/// Interior angle at a primary TX between the directions to the secondary TX
/// (at distance `r`) and its RX (at distance `d` from the TX, angle `nu` at
/// the secondary TX).
pub fn subtended_angle(nu: f64, r: f64, d: f64) -> Result<f64> {
    let x_sq = r * r + d * d - 2.0 * r * d * nu.cos();
    let x = x_sq.max(0.0).sqrt();
    if x == 0.0 {
        // Primary co-located with the RX: any beam covering the TX covers it.
        return Ok(0.0);
    }
    checked_acos((r - d * nu.cos()) / x, ACOS_CLAMP_TOL)
}

/// Probability that a beam of width `omega` from the nearest primary TX
/// covers the secondary RX given that it covers the TX.
pub fn common_interfering_prob(nu: f64, r: f64, d: f64, omega: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&nu) {
        return Err(SapError::Parameter(format!("nu={nu} outside [0, pi]")));
    }
    if !(omega > 0.0 && omega < 2.0 * PI) {
        return Err(SapError::Parameter(format!("omega={omega} outside (0, 2pi)")));
    }
    if !(r > 0.0 && d > 0.0) {
        return Err(SapError::Parameter(format!("r={r}, d={d} must be > 0")));
    }
    let psi = subtended_angle(nu, r, d)?;
    if psi > omega {
        Ok(0.0)
    } else {
        Ok((omega - psi) / omega)
    }
}

/// Samples a homogeneous PPP on the extended window of `region`.
pub fn sample_ppp(density: f64, region: &Region, seed: SeedStream) -> Result<Vec<Point>> {
    if density < 0.0 {
        return Err(SapError::Parameter(format!("negative density {density}")));
    }
    let mean = density * region.outer_area();
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let mut rng = seed.rng();
    let count = Poisson::new(mean)
        .map_err(|e| SapError::Parameter(format!("invalid Poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    let hw = region.outer_half_width();
    let mut pts = Vec::with_capacity(count);
    for _ in 0..count {
        let x = rng.random::<f64>() * 2.0 * hw - hw;
        let y = rng.random::<f64>() * 2.0 * hw - hw;
        pts.push(Point::new(x, y));
    }
    Ok(pts)
}

/// Samples a PPP on a disc of radius `radius` centered at the origin.
pub fn sample_ppp_disc(density: f64, radius: f64, seed: SeedStream) -> Result<Vec<Point>> {
    if density < 0.0 {
        return Err(SapError::Parameter(format!("negative density {density}")));
    }
    let mean = density * PI * radius * radius;
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let mut rng = seed.rng();
    let count = Poisson::new(mean)
        .map_err(|e| SapError::Parameter(format!("invalid Poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    let mut pts = Vec::with_capacity(count);
    for _ in 0..count {
        let r = radius * rng.random::<f64>().sqrt();
        let th = rng.random::<f64>() * 2.0 * PI;
        pts.push(Point::new(r * th.cos(), r * th.sin()));
    }
    Ok(pts)
}

/// An oriented rectangle blockage.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Rect {
    pub center: Point,
    pub half_len: f64,
    pub half_wid: f64,
    pub cos_az: f64,
    pub sin_az: f64,
}

impl Rect {
    pub fn new(center: Point, length: f64, width: f64, azimuth: f64) -> Self {
        Rect {
            center,
            half_len: 0.5 * length,
            half_wid: 0.5 * width,
            cos_az: azimuth.cos(),
            sin_az: azimuth.sin(),
        }
    }

    /// Bounding circle radius, for spatial indexing.
    pub fn circumradius(&self) -> f64 {
        self.half_len.hypot(self.half_wid)
    }

    #[inline]
    fn to_local(&self, p: Point) -> (f64, f64) {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        (
            dx * self.cos_az + dy * self.sin_az,
            -dx * self.sin_az + dy * self.cos_az,
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        let (lx, ly) = self.to_local(p);
        lx.abs() <= self.half_len && ly.abs() <= self.half_wid
    }

    /// Exact segment-rectangle intersection (interior or boundary) via slab
    /// clipping in the rectangle frame.
    pub fn intersects_segment(&self, p: Point, q: Point) -> bool {
        let (px, py) = self.to_local(p);
        let (qx, qy) = self.to_local(q);
        let dx = qx - px;
        let dy = qy - py;
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (s, d, half) in [(px, dx, self.half_len), (py, dy, self.half_wid)] {
            if d == 0.0 {
                if s.abs() > half {
                    return false;
                }
            } else {
                let mut ta = (-half - s) / d;
                let mut tb = (half - s) / d;
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

/// True iff the segment `pq` intersects any rectangle (interior or boundary).
pub fn is_blocked(p: Point, q: Point, blockages: &[Rect]) -> bool {
    blockages.iter().any(|r| r.intersects_segment(p, q))
}

/// A sampled Boolean blockage field with a uniform grid index so LOS queries
/// only test nearby rectangles.
#[derive(Clone, Debug, Default)]
pub struct BlockageField {
    rects: Vec<Rect>,
    cell: f64,
    min_x: f64,
    min_y: f64,
    nx: usize,
    ny: usize,
    grid: Vec<Vec<u32>>,
}

impl BlockageField {
    pub fn empty() -> Self {
        BlockageField::default()
    }

    pub fn new(rects: Vec<Rect>) -> Self {
        if rects.is_empty() {
            return BlockageField::default();
        }
        let max_r = rects.iter().map(Rect::circumradius).fold(0.0, f64::max);
        let cell = (4.0 * max_r).max(1.0);
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for r in &rects {
            min_x = min_x.min(r.center.x);
            min_y = min_y.min(r.center.y);
            max_x = max_x.max(r.center.x);
            max_y = max_y.max(r.center.y);
        }
        let nx = (((max_x - min_x) / cell).floor() as usize + 1).max(1);
        let ny = (((max_y - min_y) / cell).floor() as usize + 1).max(1);
        let mut grid = vec![Vec::new(); nx * ny];
        for (i, r) in rects.iter().enumerate() {
            let cx = (((r.center.x - min_x) / cell) as usize).min(nx - 1);
            let cy = (((r.center.y - min_y) / cell) as usize).min(ny - 1);
            grid[cy * nx + cx].push(i as u32);
        }
        BlockageField {
            rects,
            cell,
            min_x,
            min_y,
            nx,
            ny,
            grid,
        }
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn covers(&self, p: Point) -> bool {
        if self.rects.is_empty() {
            return false;
        }
        let mut hit = false;
        self.visit_cells_near_segment(p, p, |idx| {
            if self.rects[idx as usize].contains(p) {
                hit = true;
                false
            } else {
                true
            }
        });
        hit
    }

    /// Exact LOS test accelerated by the grid; identical in outcome to
    /// [`is_blocked`] over the full rectangle list.
    pub fn blocked(&self, p: Point, q: Point) -> bool {
        if self.rects.is_empty() {
            return false;
        }
        let mut hit = false;
        self.visit_cells_near_segment(p, q, |idx| {
            if self.rects[idx as usize].intersects_segment(p, q) {
                hit = true;
                false
            } else {
                true
            }
        });
        hit
    }

    /// Visits rectangle indices in all cells whose center band could hold a
    /// rectangle touching segment pq. Callback returns false to stop early.
    fn visit_cells_near_segment<F: FnMut(u32) -> bool>(&self, p: Point, q: Point, mut f: F) {
        // One cell of margin suffices: cell >= 4 * circumradius.
        let lo_x = p.x.min(q.x) - self.cell;
        let hi_x = p.x.max(q.x) + self.cell;
        let lo_y = p.y.min(q.y) - self.cell;
        let hi_y = p.y.max(q.y) + self.cell;
        let ix0 = (((lo_x - self.min_x) / self.cell).floor().max(0.0)) as usize;
        let iy0 = (((lo_y - self.min_y) / self.cell).floor().max(0.0)) as usize;
        if ix0 >= self.nx || iy0 >= self.ny {
            if lo_x > self.min_x + self.cell * self.nx as f64
                || lo_y > self.min_y + self.cell * self.ny as f64
            {
                return;
            }
        }
        let ix1 = (((hi_x - self.min_x) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let iy1 = (((hi_y - self.min_y) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        let ix0 = ix0.min(self.nx - 1);
        let iy0 = iy0.min(self.ny - 1);

        // Segment-to-cell distance pruning: only cells whose box intersects
        // the inflated segment can matter.
        let seg_len_sq = p.dist_sq(q);
        for iy in iy0..=iy1 {
            for ix in ix0..=ix1 {
                let cx0 = self.min_x + ix as f64 * self.cell;
                let cy0 = self.min_y + iy as f64 * self.cell;
                let cx = cx0 + 0.5 * self.cell;
                let cy = cy0 + 0.5 * self.cell;
                // Distance from cell center to segment.
                let t = if seg_len_sq > 0.0 {
                    (((cx - p.x) * (q.x - p.x) + (cy - p.y) * (q.y - p.y)) / seg_len_sq)
                        .clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let nx = p.x + t * (q.x - p.x);
                let ny = p.y + t * (q.y - p.y);
                let dist = (cx - nx).hypot(cy - ny);
                if dist > self.cell * std::f64::consts::SQRT_2 {
                    continue;
                }
                for &idx in &self.grid[iy * self.nx + ix] {
                    if !f(idx) {
                        return;
                    }
                }
            }
        }
    }
}

/// Samples a Boolean blockage field: centers are a PPP of the model's density
/// over a disc of radius `radius + circumradius` (so rectangles reaching into
/// the disc are not missed), with i.i.d. uniform orientations on [0, pi).
pub fn sample_blockage_field(b: &BlockageModel, radius: f64, seed: SeedStream) -> Result<BlockageField> {
    let margin = 0.5 * b.d_len.hypot(b.d_wid);
    let centers = sample_ppp_disc(b.lambda_b, radius + margin, seed.child(0))?;
    let mut rng = seed.child(1).rng();
    let rects = centers
        .into_iter()
        .map(|c| Rect::new(c, b.d_len, b.d_wid, rng.random::<f64>() * PI))
        .collect();
    Ok(BlockageField::new(rects))
}

/// A secondary transmitter-receiver pair at fixed separation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SecondaryPair {
    pub tx: Point,
    pub rx: Point,
}

/// One sampled topology: primary TXs with beam azimuths, secondary pairs,
/// and the blockage field.
#[derive(Clone, Debug)]
pub struct Deployment {
    pub primary_txs: Vec<(Point, f64)>,
    pub secondary_pairs: Vec<SecondaryPair>,
    pub blockages: BlockageField,
}

impl Deployment {
    /// Checks the structural invariants: pair separations equal to `d` and no
    /// secondary RX center inside a blockage.
    pub fn validate(&self, d: f64) -> Result<()> {
        for (i, pair) in self.secondary_pairs.iter().enumerate() {
            let sep = pair.tx.dist(pair.rx);
            if (sep - d).abs() > 1e-9 * d.max(1.0) {
                return Err(SapError::Parameter(format!(
                    "pair {i} separation {sep} != {d}"
                )));
            }
            if self.blockages.covers(pair.rx) {
                return Err(SapError::Parameter(format!(
                    "pair {i} RX center inside a blockage"
                )));
            }
        }
        Ok(())
    }
}

/// Samples a deployment on the region: primary TXs (with uniform beam
/// azimuths), blockages, and secondary pairs with uniform orientation whose
/// RX centers avoid blockages (resampled on collision).
pub fn sample_deployment(
    lambda1: f64,
    lambda2: f64,
    pair_distance: f64,
    blockage: Option<&BlockageModel>,
    region: &Region,
    seed: SeedStream,
) -> Result<Deployment> {
    let blockages = match blockage {
        Some(b) => {
            let radius = region.outer_half_width() * std::f64::consts::SQRT_2 + pair_distance;
            sample_blockage_field(b, radius, seed.child(3))?
        }
        None => BlockageField::empty(),
    };

    let primary_pts = sample_ppp(lambda1, region, seed.child(1))?;
    let mut rng = seed.child(2).rng();
    let primary_txs: Vec<(Point, f64)> = primary_pts
        .into_iter()
        .map(|p| (p, rng.random::<f64>() * 2.0 * PI))
        .collect();

    let anchors = sample_ppp(lambda2, region, seed.child(4))?;
    let mut rng2 = seed.child(5).rng();
    let mut secondary_pairs = Vec::with_capacity(anchors.len());
    for tx in anchors {
        let mut placed = None;
        for _ in 0..64 {
            let th = rng2.random::<f64>() * 2.0 * PI;
            let rx = Point::new(tx.x + pair_distance * th.cos(), tx.y + pair_distance * th.sin());
            if !blockages.covers(rx) {
                placed = Some(SecondaryPair { tx, rx });
                break;
            }
        }
        // A TX whose whole neighborhood is covered is dropped (indoor).
        if let Some(p) = placed {
            secondary_pairs.push(p);
        }
    }

    Ok(Deployment {
        primary_txs,
        secondary_pairs,
        blockages,
    })
}
