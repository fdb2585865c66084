//! Exact area arithmetic on unions of axis-aligned rectangles.
//!
//! The plane is cut into vertical strips at every distinct x coordinate; inside
//! a strip each rectangle set reduces to a sorted list of disjoint y-intervals,
//! and the overlay of two interval lists gives the strip's contribution to
//! `|A \ B|`, `|B \ A|` and `|A ∩ B|`. No rasterisation is involved, so
//! integer-valued inputs produce exact results.

use alloc::vec::Vec;

use crate::bbox::BoundingBox;

/// Areas of the three disjoint parts of the overlay of two rectangle unions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OverlayAreas {
    pub a_only: f64,
    pub b_only: f64,
    pub both: f64,
}

impl OverlayAreas {
    pub fn area_a(&self) -> f64 {
        self.a_only + self.both
    }

    pub fn area_b(&self) -> f64 {
        self.b_only + self.both
    }

    pub fn union(&self) -> f64 {
        self.a_only + self.b_only + self.both
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Merged y-intervals of the rectangles spanning the strip `[x0, x1]`.
fn strip_intervals(rects: &[BoundingBox], x0: f64, x1: f64) -> Vec<(f64, f64)> {
    let mut iv: Vec<(f64, f64)> =
        rects.iter().filter(|r| r.x_min <= x0 && r.x_max >= x1).map(|r| (r.y_min, r.y_max)).collect();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (lo, hi) in iv {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

fn total_len(iv: &[(f64, f64)]) -> f64 {
    iv.iter().map(|(a, b)| b - a).sum()
}

fn intersect_len(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut len = 0.0;
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            len += hi - lo;
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    len
}

/// Exact overlay of `union(a)` and `union(b)`.
pub fn overlay(a: &[BoundingBox], b: &[BoundingBox]) -> OverlayAreas {
    let xs = sorted_unique(a.iter().chain(b.iter()).flat_map(|r| [r.x_min, r.x_max]).collect());
    let mut out = OverlayAreas::default();
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let dx = x1 - x0;
        let ia = strip_intervals(a, x0, x1);
        let ib = strip_intervals(b, x0, x1);
        let la = total_len(&ia);
        let lb = total_len(&ib);
        let lab = intersect_len(&ia, &ib);
        out.both += lab * dx;
        out.a_only += (la - lab) * dx;
        out.b_only += (lb - lab) * dx;
    }
    out
}

/// Area of the union of `rects`.
pub fn union_area(rects: &[BoundingBox]) -> f64 {
    overlay(rects, &[]).a_only
}

/// True when `r` lies entirely inside `union(region)`.
pub fn is_covered(r: &BoundingBox, region: &[BoundingBox]) -> bool {
    overlay(core::slice::from_ref(r), region).a_only == 0.0
}

/// True when no two rectangles in `rects` share interior area.
pub fn pairwise_disjoint(rects: &[BoundingBox]) -> bool {
    first_overlap(rects).is_none()
}

/// First pair `(i, j)`, `i < j`, of overlapping rectangles.
pub fn first_overlap(rects: &[BoundingBox]) -> Option<(usize, usize)> {
    for i in 0..rects.len() {
        for j in i + 1..rects.len() {
            if rects[i].overlaps(&rects[j]) {
                return Some((i, j));
            }
        }
    }
    None
}
