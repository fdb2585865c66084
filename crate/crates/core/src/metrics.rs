//! Agreement metrics between predicted and reference rectangle sets.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::bbox::BoundingBox;
use crate::facade::ComponentClass;
use crate::geom::MetricScale;
use crate::region;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("ground-truth area is zero")]
    ZeroTruthArea,
    #[error("union of both sets is empty")]
    EmptyUnion,
    #[error("both rectangle sets must be nonempty")]
    EmptyInput,
    #[error("no per-class scores given")]
    EmptyMap,
}

/// Area estimation error `ε = (S₁ + S₂) / S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaErrorReport {
    pub s_truth: f64,
    /// Truth not covered by the prediction (false negatives), m².
    pub s_false_negative: f64,
    /// Prediction outside the truth (false positives), m².
    pub s_false_positive: f64,
    pub epsilon: f64,
}

pub fn area_error(
    truth: &[BoundingBox],
    pred: &[BoundingBox],
    scale: &MetricScale,
) -> Result<AreaErrorReport, MetricsError> {
    let o = region::overlay(truth, pred);
    let k = scale.area_factor();
    let s_truth = o.area_a() * k;
    if !(s_truth > 0.0) {
        return Err(MetricsError::ZeroTruthArea);
    }
    let s1 = o.a_only * k;
    let s2 = o.b_only * k;
    Ok(AreaErrorReport { s_truth, s_false_negative: s1, s_false_positive: s2, epsilon: (s1 + s2) / s_truth })
}

/// Intersection over union of the two rectangle unions.
pub fn jaccard(a: &[BoundingBox], b: &[BoundingBox]) -> Result<f64, MetricsError> {
    let o = region::overlay(a, b);
    let u = o.union();
    if !(u > 0.0) {
        return Err(MetricsError::EmptyUnion);
    }
    Ok(o.both / u)
}

struct Raster {
    x0: i64,
    y0: i64,
    w: usize,
    h: usize,
}

impl Raster {
    fn covering(sets: &[&[BoundingBox]]) -> Option<Self> {
        let mut it = sets.iter().flat_map(|s| s.iter());
        let first = it.next()?;
        let hull = it.fold(*first, |acc, r| acc.union_hull(r));
        // One pixel of padding so every region has an outside neighbour.
        let x0 = libm::round(hull.x_min) as i64 - 1;
        let y0 = libm::round(hull.y_min) as i64 - 1;
        let x1 = libm::round(hull.x_max) as i64 + 1;
        let y1 = libm::round(hull.y_max) as i64 + 1;
        Some(Self { x0, y0, w: (x1 - x0) as usize, h: (y1 - y0) as usize })
    }

    fn mask(&self, rects: &[BoundingBox]) -> Vec<bool> {
        let mut m = vec![false; self.w * self.h];
        for r in rects {
            let xa = (libm::round(r.x_min) as i64 - self.x0) as usize;
            let xb = (libm::round(r.x_max) as i64 - self.x0) as usize;
            let ya = (libm::round(r.y_min) as i64 - self.y0) as usize;
            let yb = (libm::round(r.y_max) as i64 - self.y0) as usize;
            for y in ya..yb {
                m[y * self.w + xa..y * self.w + xb].fill(true);
            }
        }
        m
    }

    /// Pixels of the mask with a 4-neighbour outside it.
    fn boundary(&self, mask: &[bool]) -> Vec<bool> {
        let (w, h) = (self.w, self.h);
        let mut out = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if !mask[i] {
                    continue;
                }
                let edge = x == 0
                    || y == 0
                    || x + 1 == w
                    || y + 1 == h
                    || !mask[i - 1]
                    || !mask[i + 1]
                    || !mask[i - w]
                    || !mask[i + w];
                out[i] = edge;
            }
        }
        out
    }

    /// Disk dilation with Euclidean radius `r` pixels.
    fn dilate(&self, src: &[bool], r: f64) -> Vec<bool> {
        let (w, h) = (self.w as i64, self.h as i64);
        let ri = libm::floor(r) as i64;
        let offsets: Vec<(i64, i64)> = (-ri..=ri)
            .flat_map(|dy| (-ri..=ri).map(move |dx| (dx, dy)))
            .filter(|(dx, dy)| ((dx * dx + dy * dy) as f64) <= r * r)
            .collect();
        let mut out = vec![false; src.len()];
        for y in 0..h {
            for x in 0..w {
                if !src[(y * w + x) as usize] {
                    continue;
                }
                for (dx, dy) in &offsets {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0 && ny >= 0 && nx < w && ny < h {
                        out[(ny * w + nx) as usize] = true;
                    }
                }
            }
        }
        out
    }
}

/// Boundary F-measure: boundaries are rasterised on the integer pixel grid
/// and a boundary pixel counts as matched when the other boundary lies within
/// `tolerance_px` (Euclidean).
pub fn boundary_f(a: &[BoundingBox], b: &[BoundingBox], tolerance_px: f64) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let raster = Raster::covering(&[a, b]).ok_or(MetricsError::EmptyInput)?;
    let ba = raster.boundary(&raster.mask(a));
    let bb = raster.boundary(&raster.mask(b));
    let na = ba.iter().filter(|v| **v).count();
    let nb = bb.iter().filter(|v| **v).count();
    if na == 0 || nb == 0 {
        return Err(MetricsError::EmptyInput);
    }
    let tol = tolerance_px.max(0.0);
    let da = raster.dilate(&ba, tol);
    let db = raster.dilate(&bb, tol);
    let matched_a = ba.iter().zip(&db).filter(|(p, d)| **p && **d).count();
    let matched_b = bb.iter().zip(&da).filter(|(p, d)| **p && **d).count();
    // `a` plays the prediction, `b` the reference.
    let precision = matched_a as f64 / na as f64;
    let recall = matched_b as f64 / nb as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionScore {
    pub jaccard: f64,
    pub boundary_f: f64,
    pub jf_mean: f64,
}

pub fn region_score(
    pred: &[BoundingBox],
    truth: &[BoundingBox],
    tolerance_px: f64,
) -> Result<RegionScore, MetricsError> {
    let j = jaccard(pred, truth)?;
    let f = boundary_f(pred, truth, tolerance_px)?;
    Ok(RegionScore { jaccard: j, boundary_f: f, jf_mean: (j + f) / 2.0 })
}

/// Mean of per-class IoU values.
pub fn miou(per_class: &BTreeMap<ComponentClass, f64>) -> Result<f64, MetricsError> {
    if per_class.is_empty() {
        return Err(MetricsError::EmptyMap);
    }
    Ok(per_class.values().sum::<f64>() / per_class.len() as f64)
}

/// Spread of a sample of relative errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1); 0 for a single value.
    pub std_dev: f64,
    /// Half-width of the normal-approximation 95 % interval of the mean.
    pub ci95_half_width: f64,
}

pub fn summarize(values: &[f64]) -> Option<ErrorSummary> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_dev = if n > 1 {
        libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64)
    } else {
        0.0
    };
    Some(ErrorSummary { n, mean, std_dev, ci95_half_width: 1.96 * std_dev / libm::sqrt(n as f64) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::compute_scale;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn identical_sets() {
        let s = compute_scale(1.0, 1.0).unwrap();
        let a = vec![b(0.0, 0.0, 10.0, 10.0), b(20.0, 0.0, 30.0, 5.0)];
        assert_eq!(area_error(&a, &a, &s).unwrap().epsilon, 0.0);
        assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
        assert_eq!(boundary_f(&a, &a, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn subset_prediction_error() {
        // 120.50 m² truth, 112.26 m² prediction inside it, at 0.1 m/px.
        let s = compute_scale(1.0, 10.0).unwrap();
        let truth = vec![b(0.0, 0.0, 1205.0, 10.0)];
        let pred = vec![b(0.0, 0.0, 1122.6, 10.0)];
        let r = area_error(&truth, &pred, &s).unwrap();
        assert!((r.s_truth - 120.5).abs() < 1e-9);
        assert!((r.epsilon - 8.24 / 120.5).abs() < 1e-12);
        assert_eq!(r.s_false_positive, 0.0);
    }

    #[test]
    fn area_error_is_not_symmetric() {
        let s = compute_scale(1.0, 1.0).unwrap();
        let t = vec![b(0.0, 0.0, 10.0, 10.0)];
        let p = vec![b(5.0, 0.0, 25.0, 10.0)];
        let fwd = area_error(&t, &p, &s).unwrap();
        let rev = area_error(&p, &t, &s).unwrap();
        assert_eq!(fwd.s_false_negative, rev.s_false_positive);
        assert_eq!(fwd.s_false_positive, rev.s_false_negative);
        assert_ne!(fwd.epsilon, rev.epsilon);
    }

    #[test]
    fn zero_truth_and_empty_union() {
        let s = compute_scale(1.0, 1.0).unwrap();
        assert_eq!(area_error(&[], &[b(0.0, 0.0, 1.0, 1.0)], &s), Err(MetricsError::ZeroTruthArea));
        assert_eq!(jaccard(&[], &[]), Err(MetricsError::EmptyUnion));
        assert_eq!(boundary_f(&[], &[b(0.0, 0.0, 1.0, 1.0)], 2.0), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn jaccard_examples() {
        let a = vec![b(0.0, 0.0, 1.0, 1.0)];
        assert_eq!(jaccard(&a, &[b(5.0, 5.0, 6.0, 6.0)]).unwrap(), 0.0);
        let half = jaccard(&a, &[b(0.5, 0.0, 1.5, 1.0)]).unwrap();
        assert!((half - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_f_examples() {
        let sq = vec![b(10.0, 10.0, 50.0, 50.0)];
        let shifted = vec![b(11.0, 10.0, 51.0, 50.0)];
        assert_eq!(boundary_f(&sq, &shifted, 2.0).unwrap(), 1.0);
        assert!(boundary_f(&sq, &shifted, 0.0).unwrap() < 1.0);
        let far = vec![b(200.0, 200.0, 240.0, 240.0)];
        assert_eq!(boundary_f(&sq, &far, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn miou_examples() {
        let mut m = BTreeMap::new();
        assert_eq!(miou(&m), Err(MetricsError::EmptyMap));
        m.insert(ComponentClass::Wall, 1.0);
        assert_eq!(miou(&m).unwrap(), 1.0);
        m.insert(ComponentClass::Wall, 0.9);
        m.insert(ComponentClass::Window, 0.7);
        assert!((miou(&m).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn summary_stats() {
        let s = summarize(&[0.04, 0.06, 0.08]).unwrap();
        assert!((s.mean - 0.06).abs() < 1e-15);
        assert!((s.std_dev - 0.02).abs() < 1e-15);
        assert!(summarize(&[]).is_none());
    }
}
