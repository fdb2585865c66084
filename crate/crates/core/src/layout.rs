//! Partition of the obstruction-free wall into rectangles and their
//! qualification against PV module dimensions.
//!
//! The partition is a horizontal slab sweep: every distinct wall or
//! obstruction y-coordinate opens a slab, each slab contributes its free
//! x-intervals as rectangles, and [`merge_rectangles`] then fuses rectangles
//! that share a full edge. The result covers `walls − obstructions` exactly,
//! without overlap, and no rectangle can grow into free space because all
//! free space is already covered. It is not a minimum-cardinality cover.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::bbox::BoundingBox;
use crate::facade::FacadeDescription;
use crate::geom::MetricScale;
use crate::region;

/// Tolerance for the inclusive "at least" edge tests, in metres.
const EDGE_EPS_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LayoutError {
    #[error("layout constraints must be positive and min_long_edge_m >= min_short_edge_m")]
    InvalidConstraints,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutConstraints {
    pub min_short_edge_m: f64,
    pub min_long_edge_m: f64,
    pub module_footprint_m2: f64,
    pub module_width_m: f64,
    pub module_height_m: f64,
    /// Clearance kept free along the wall boundary; 0 disables it.
    pub edge_margin_m: f64,
}

impl Default for LayoutConstraints {
    fn default() -> Self {
        Self {
            min_short_edge_m: 1.0,
            min_long_edge_m: 1.2,
            module_footprint_m2: 1.2,
            module_width_m: 1.0,
            module_height_m: 1.2,
            edge_margin_m: 0.0,
        }
    }
}

impl LayoutConstraints {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let pos = [
            self.min_short_edge_m,
            self.min_long_edge_m,
            self.module_footprint_m2,
            self.module_width_m,
            self.module_height_m,
        ];
        if pos.iter().all(|v| *v > 0.0 && v.is_finite())
            && self.min_long_edge_m >= self.min_short_edge_m
            && self.edge_margin_m >= 0.0
        {
            Ok(())
        } else {
            Err(LayoutError::InvalidConstraints)
        }
    }

    /// Whether a `w × h` metre rectangle is large enough for installation.
    pub fn admits(&self, w_m: f64, h_m: f64) -> bool {
        let (short, long) = if w_m <= h_m { (w_m, h_m) } else { (h_m, w_m) };
        short + EDGE_EPS_M >= self.min_short_edge_m && long + EDGE_EPS_M >= self.min_long_edge_m
    }

    /// Whole modules that fit in a `w × h` metre rectangle, best of the two
    /// module orientations.
    pub fn packable_modules(&self, w_m: f64, h_m: f64) -> u32 {
        let fit = |len: f64, module: f64| libm::floor(len / module + EDGE_EPS_M).max(0.0);
        let upright = fit(w_m, self.module_width_m) * fit(h_m, self.module_height_m);
        let rotated = fit(w_m, self.module_height_m) * fit(h_m, self.module_width_m);
        upright.max(rotated) as u32
    }

    /// Modules by footprint division, `floor(area / footprint)`.
    pub fn modules_by_area(&self, area_m2: f64) -> u32 {
        libm::floor(area_m2 / self.module_footprint_m2 + EDGE_EPS_M).max(0.0) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Deterministic,
    Llm,
    LlmValidated,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Deterministic => "deterministic",
            Self::Llm => "llm",
            Self::LlmValidated => "llm_validated",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Qualified installable rectangles of one facade.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutResult {
    pub rectangles: Vec<BoundingBox>,
    pub total_area_m2: f64,
    /// Σ over rectangles of [`LayoutConstraints::packable_modules`].
    pub module_count: u32,
    /// Σ over rectangles of `floor(area / footprint)`; used for energy sizing.
    pub modules_by_area: u32,
    pub provenance: Provenance,
}

impl LayoutResult {
    pub fn empty(provenance: Provenance) -> Self {
        Self { rectangles: Vec::new(), total_area_m2: 0.0, module_count: 0, modules_by_area: 0, provenance }
    }
}

fn merge_intervals(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (lo, hi) in iv {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// `base − cut` for sorted, merged interval lists.
fn subtract_intervals(base: &[(f64, f64)], cut: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(lo, hi) in base {
        let mut cur = lo;
        for &(clo, chi) in cut {
            if chi <= cur || clo >= hi {
                continue;
            }
            if clo > cur {
                out.push((cur, clo));
            }
            cur = cur.max(chi);
            if cur >= hi {
                break;
            }
        }
        if cur < hi {
            out.push((cur, hi));
        }
    }
    out
}

fn spanning(rects: &[BoundingBox], y0: f64, y1: f64) -> Vec<(f64, f64)> {
    merge_intervals(rects.iter().filter(|r| r.y_min <= y0 && r.y_max >= y1).map(|r| (r.x_min, r.x_max)).collect())
}

/// Exact rectangle cover of `union(walls) − union(obstructions)`.
pub fn partition(walls: &[BoundingBox], obstructions: &[BoundingBox]) -> Vec<BoundingBox> {
    let mut ys: Vec<f64> = walls.iter().chain(obstructions).flat_map(|r| [r.y_min, r.y_max]).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut pieces = Vec::new();
    for w in ys.windows(2) {
        let (y0, y1) = (w[0], w[1]);
        let free = subtract_intervals(&spanning(walls, y0, y1), &spanning(obstructions, y0, y1));
        for (x0, x1) in free {
            pieces.push(BoundingBox { x_min: x0, y_min: y0, x_max: x1, y_max: y1 });
        }
    }
    merge_rectangles(&pieces)
}

/// Obstruction-free wall of a facade, as disjoint maximal rectangles in
/// reading order. A fully obstructed wall yields an empty list.
pub fn partition_free_wall(facade: &FacadeDescription) -> Vec<BoundingBox> {
    partition(&facade.walls(), &facade.obstructions())
}

/// One sweep fusing runs of rectangles that share a full edge along one axis.
fn merge_pass(rects: &mut Vec<BoundingBox>, vertical: bool) -> bool {
    let key = |r: &BoundingBox| {
        if vertical {
            (r.x_min, r.x_max, r.y_min, r.y_max)
        } else {
            (r.y_min, r.y_max, r.x_min, r.x_max)
        }
    };
    rects.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.total_cmp(&kb.2))
    });
    let mut out: Vec<BoundingBox> = Vec::with_capacity(rects.len());
    let mut changed = false;
    for r in rects.drain(..) {
        if let Some(last) = out.last_mut() {
            let (kl, kr) = (key(last), key(&r));
            if kl.0 == kr.0 && kl.1 == kr.1 && kl.3 == kr.2 {
                if vertical {
                    last.y_max = r.y_max;
                } else {
                    last.x_max = r.x_max;
                }
                changed = true;
                continue;
            }
        }
        out.push(r);
    }
    *rects = out;
    changed
}

/// Fuses rectangles sharing a full edge (equal x-extent stacked vertically,
/// or equal y-extent side by side) until no such pair remains. Union and
/// disjointness are preserved; output is in reading order.
pub fn merge_rectangles(rects: &[BoundingBox]) -> Vec<BoundingBox> {
    let mut v = rects.to_vec();
    loop {
        let a = merge_pass(&mut v, true);
        let b = merge_pass(&mut v, false);
        if !a && !b {
            break;
        }
    }
    v.sort_by(BoundingBox::reading_order);
    v
}

/// Total metric area of `rects`.
pub fn area_of(rects: &[BoundingBox], scale: &MetricScale) -> f64 {
    rects.iter().map(|r| r.area()).sum::<f64>() * scale.area_factor()
}

fn metric_dims(r: &BoundingBox, scale: &MetricScale) -> (f64, f64) {
    (r.width() * scale.s_x(), r.height() * scale.s_y)
}

/// Keeps rectangles whose short edge and long edge both meet the minimums.
pub fn qualify(rects: &[BoundingBox], scale: &MetricScale, c: &LayoutConstraints) -> LayoutResult {
    let kept: Vec<BoundingBox> = rects
        .iter()
        .copied()
        .filter(|r| {
            let (w, h) = metric_dims(r, scale);
            c.admits(w, h)
        })
        .collect();
    let mut module_count = 0;
    let mut modules_by_area = 0;
    for r in &kept {
        let (w, h) = metric_dims(r, scale);
        module_count += c.packable_modules(w, h);
        modules_by_area += c.modules_by_area(w * h);
    }
    LayoutResult {
        total_area_m2: area_of(&kept, scale),
        rectangles: kept,
        module_count,
        modules_by_area,
        provenance: Provenance::Deterministic,
    }
}

/// Wall boxes shrunk by the configured edge margin.
pub fn installable_walls(facade: &FacadeDescription, c: &LayoutConstraints) -> Vec<BoundingBox> {
    inset_walls(&facade.walls(), facade.scale(), c)
}

pub fn inset_walls(walls: &[BoundingBox], scale: &MetricScale, c: &LayoutConstraints) -> Vec<BoundingBox> {
    if c.edge_margin_m <= 0.0 {
        return walls.to_vec();
    }
    let mx = c.edge_margin_m / scale.s_x();
    let my = c.edge_margin_m / scale.s_y;
    walls.iter().filter_map(|w| BoundingBox::new(w.x_min + mx, w.y_min + my, w.x_max - mx, w.y_max - my).ok()).collect()
}

/// Reference layout: partition, merge and qualify.
pub fn deterministic_layout(facade: &FacadeDescription, c: &LayoutConstraints) -> LayoutResult {
    let walls = installable_walls(facade, c);
    qualify(&partition(&walls, &facade.obstructions()), facade.scale(), c)
}

/// Reasons a proposed layout is rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayoutViolation {
    OverlapsObstruction { idx: usize, obstruction: usize },
    OverlapsSibling { idx: usize, other: usize },
    OutOfBounds { idx: usize },
    BelowMinimumSize { idx: usize, width_m: f64, height_m: f64 },
}

impl fmt::Display for LayoutViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::OverlapsObstruction { idx, obstruction } => {
                write!(f, "rectangle {idx} overlaps obstruction {obstruction}")
            }
            Self::OverlapsSibling { idx, other } => {
                write!(f, "rectangle {idx} overlaps rectangle {other}")
            }
            Self::OutOfBounds { idx } => write!(f, "rectangle {idx} extends outside the wall"),
            Self::BelowMinimumSize { idx, width_m, height_m } => {
                write!(f, "rectangle {idx} is {width_m:.2} m x {height_m:.2} m, below the minimum module size")
            }
        }
    }
}

/// Checks a proposed layout against explicit walls and obstructions.
pub fn validate_in_region(
    rects: &[BoundingBox],
    walls: &[BoundingBox],
    obstructions: &[BoundingBox],
    scale: &MetricScale,
    c: &LayoutConstraints,
) -> Result<LayoutResult, Vec<LayoutViolation>> {
    let mut v = Vec::new();
    for (idx, r) in rects.iter().enumerate() {
        if !region::is_covered(r, walls) {
            v.push(LayoutViolation::OutOfBounds { idx });
        }
        for (obstruction, o) in obstructions.iter().enumerate() {
            if r.overlaps(o) {
                v.push(LayoutViolation::OverlapsObstruction { idx, obstruction });
            }
        }
        for (other, s) in rects.iter().enumerate().skip(idx + 1) {
            if r.overlaps(s) {
                v.push(LayoutViolation::OverlapsSibling { idx, other });
            }
        }
        let (w, h) = metric_dims(r, scale);
        if !c.admits(w, h) {
            v.push(LayoutViolation::BelowMinimumSize { idx, width_m: w, height_m: h });
        }
    }
    if !v.is_empty() {
        return Err(v);
    }
    let mut res = qualify(rects, scale, c);
    res.provenance = Provenance::LlmValidated;
    Ok(res)
}

/// Accepts `rects` iff they are pairwise disjoint, avoid every obstruction,
/// lie inside the (margin-shrunk) wall and all qualify.
pub fn validate_layout(
    rects: &[BoundingBox],
    facade: &FacadeDescription,
    c: &LayoutConstraints,
) -> Result<LayoutResult, Vec<LayoutViolation>> {
    validate_in_region(rects, &installable_walls(facade, c), &facade.obstructions(), facade.scale(), c)
}
