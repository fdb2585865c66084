//! Perspective rectification and metric scaling.
//!
//! A homography `H` maps source pixels `q` to rectified pixels `q' ≅ H q`.
//! It is estimated from four or more point correspondences with a normalized
//! DLT, optionally wrapped in RANSAC, and polished by Levenberg–Marquardt on
//! the transfer error.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bbox::BoundingBox;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("need at least 4 correspondences, got {0}")]
    InsufficientCorrespondences(usize),
    #[error("source and target point counts differ ({0} vs {1})")]
    CountMismatch(usize, usize),
    #[error("degenerate point configuration (collinear points)")]
    DegenerateConfiguration,
    #[error("RANSAC found only {0} inliers")]
    NoConsensus(usize),
    #[error("point maps to infinity (w = {0:e})")]
    PointAtInfinity(f64),
    #[error("homography matrix is singular")]
    Singular,
    #[error("input must be positive and finite")]
    NonPositiveInput,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

impl PixelPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Robust estimation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    /// Inlier threshold on forward transfer error, in target pixels.
    pub threshold_px: f64,
    pub confidence: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self { threshold_px: 2.0, confidence: 0.999, max_iterations: 2000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimationMethod {
    /// Least-squares DLT over all correspondences.
    Dlt,
    Ransac(RansacParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub method: EstimationMethod,
    /// Levenberg–Marquardt polish of the geometric error over the inliers.
    pub refine: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { method: EstimationMethod::Ransac(RansacParams::default()), refine: true }
    }
}

impl EstimatorConfig {
    pub fn dlt() -> Self {
        Self { method: EstimationMethod::Dlt, refine: true }
    }
}

/// A normalized (`h33 == 1`) projective map together with the data it was
/// fitted to.
#[derive(Debug, Clone, PartialEq)]
pub struct Homography {
    matrix: Matrix3<f64>,
    source: Vec<PixelPoint>,
    target: Vec<PixelPoint>,
    inliers: Vec<usize>,
    reprojection_rmse: f64,
}

/// `|det|` below this (after `h33` normalization) counts as singular.
const SINGULAR_DET: f64 = 1e-12;
const INFINITY_W: f64 = 1e-12;

fn normalize_matrix(m: Matrix3<f64>) -> Result<Matrix3<f64>, GeomError> {
    let h33 = m[(2, 2)];
    if !h33.is_finite() || h33.abs() < 1e-15 * m.norm() {
        return Err(GeomError::DegenerateConfiguration);
    }
    let n = m / h33;
    if !n.iter().all(|v| v.is_finite()) || n.determinant().abs() <= SINGULAR_DET {
        return Err(GeomError::Singular);
    }
    Ok(n)
}

fn project(m: &Matrix3<f64>, p: &PixelPoint) -> Result<PixelPoint, GeomError> {
    let v = m * Vector3::new(p.x, p.y, 1.0);
    if v.z.abs() <= INFINITY_W {
        return Err(GeomError::PointAtInfinity(v.z));
    }
    Ok(PixelPoint::new(v.x / v.z, v.y / v.z))
}

fn transfer_error(m: &Matrix3<f64>, s: &PixelPoint, t: &PixelPoint) -> f64 {
    project(m, s).map_or(f64::INFINITY, |p| p.distance(t))
}

impl Homography {
    /// Wraps a raw matrix; it is rescaled so that `h33 == 1`.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self, GeomError> {
        let mat = Matrix3::from_fn(|r, c| m[r][c]);
        Ok(Self {
            matrix: normalize_matrix(mat)?,
            source: Vec::new(),
            target: Vec::new(),
            inliers: Vec::new(),
            reprojection_rmse: 0.0,
        })
    }

    pub fn identity() -> Self {
        Self::from_matrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).expect("identity is nonsingular")
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let m = &self.matrix;
        [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
    }

    pub fn source(&self) -> &[PixelPoint] {
        &self.source
    }

    pub fn target(&self) -> &[PixelPoint] {
        &self.target
    }

    /// Indices into `source`/`target` of the correspondences the fit accepted.
    pub fn inliers(&self) -> &[usize] {
        &self.inliers
    }

    /// Root-mean-square forward transfer error over the inliers, in pixels.
    pub fn reprojection_rmse(&self) -> f64 {
        self.reprojection_rmse
    }

    pub fn inverse(&self) -> Result<Self, GeomError> {
        let inv = self.matrix.try_inverse().ok_or(GeomError::Singular)?;
        Ok(Self {
            matrix: normalize_matrix(inv)?,
            source: self.target.clone(),
            target: self.source.clone(),
            inliers: self.inliers.clone(),
            reprojection_rmse: self.reprojection_rmse,
        })
    }

    pub fn warp_point(&self, p: PixelPoint) -> Result<PixelPoint, GeomError> {
        warp_point(self, p)
    }
}

/// Maps `p` through `h` and dehomogenizes.
pub fn warp_point(h: &Homography, p: PixelPoint) -> Result<PixelPoint, GeomError> {
    project(&h.matrix, &p)
}

/// Axis-aligned hull of the four warped corners of `b`, clipped to `canvas`
/// when given. `Ok(None)` means the box fell entirely outside the canvas.
pub fn warp_box(
    h: &Homography,
    b: &BoundingBox,
    canvas: Option<&BoundingBox>,
) -> Result<Option<BoundingBox>, GeomError> {
    let corners = [
        PixelPoint::new(b.x_min, b.y_min),
        PixelPoint::new(b.x_max, b.y_min),
        PixelPoint::new(b.x_max, b.y_max),
        PixelPoint::new(b.x_min, b.y_max),
    ];
    let mut x_min = f64::INFINITY;
    let mut y_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for c in corners {
        let q = warp_point(h, c)?;
        x_min = x_min.min(q.x);
        y_min = y_min.min(q.y);
        x_max = x_max.max(q.x);
        y_max = y_max.max(q.y);
    }
    let Ok(hull) = BoundingBox::new(x_min, y_min, x_max, y_max) else {
        return Ok(None);
    };
    Ok(match canvas {
        Some(c) => hull.intersection(c),
        None => Some(hull),
    })
}

/// Warps every box; boxes clipped away entirely are dropped.
pub fn warp_boxes(
    h: &Homography,
    boxes: &[BoundingBox],
    canvas: Option<&BoundingBox>,
) -> Result<Vec<BoundingBox>, GeomError> {
    let mut out = Vec::with_capacity(boxes.len());
    for b in boxes {
        if let Some(w) = warp_box(h, b, canvas)? {
            out.push(w);
        }
    }
    Ok(out)
}

fn collinear(a: &PixelPoint, b: &PixelPoint, c: &PixelPoint) -> bool {
    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let scale = a.distance(b).max(a.distance(c)).max(b.distance(c));
    scale == 0.0 || cross.abs() <= 1e-9 * scale * scale
}

fn any_three_collinear(pts: &[PixelPoint]) -> bool {
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if collinear(&pts[i], &pts[j], &pts[k]) {
                    return true;
                }
            }
        }
    }
    false
}

/// All points within a line (second principal variance ~ 0).
fn all_collinear(pts: &[PixelPoint]) -> bool {
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x / n, y + p.y / n));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.x - mx, p.y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    tr == 0.0 || det <= 1e-12 * tr * tr
}

fn check_degenerate(pts: &[PixelPoint]) -> Result<(), GeomError> {
    let bad = if pts.len() == 4 { any_three_collinear(pts) } else { all_collinear(pts) };
    if bad {
        Err(GeomError::DegenerateConfiguration)
    } else {
        Ok(())
    }
}

/// Similarity taking the centroid to the origin and the mean distance to √2.
fn hartley(pts: &[PixelPoint]) -> Result<Matrix3<f64>, GeomError> {
    let n = pts.len() as f64;
    let (cx, cy) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x / n, y + p.y / n));
    let mean = pts.iter().map(|p| libm::hypot(p.x - cx, p.y - cy)).sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(GeomError::DegenerateConfiguration);
    }
    let s = core::f64::consts::SQRT_2 / mean;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn apply_affine(t: &Matrix3<f64>, p: &PixelPoint) -> PixelPoint {
    PixelPoint::new(t[(0, 0)] * p.x + t[(0, 2)], t[(1, 1)] * p.y + t[(1, 2)])
}

/// Normalized DLT over all given correspondences.
fn dlt(src: &[PixelPoint], dst: &[PixelPoint]) -> Result<Matrix3<f64>, GeomError> {
    let n = src.len();
    let ts = hartley(src)?;
    let td = hartley(dst)?;
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in src.iter().zip(dst).enumerate() {
        let p = apply_affine(&ts, s);
        let q = apply_affine(&td, d);
        let (r0, r1) = (2 * i, 2 * i + 1);
        a[(r0, 0)] = -p.x;
        a[(r0, 1)] = -p.y;
        a[(r0, 2)] = -1.0;
        a[(r0, 6)] = q.x * p.x;
        a[(r0, 7)] = q.x * p.y;
        a[(r0, 8)] = q.x;
        a[(r1, 3)] = -p.x;
        a[(r1, 4)] = -p.y;
        a[(r1, 5)] = -1.0;
        a[(r1, 6)] = q.y * p.x;
        a[(r1, 7)] = q.y * p.y;
        a[(r1, 8)] = q.y;
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(GeomError::DegenerateConfiguration)?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(GeomError::DegenerateConfiguration)?;
    let h = v_t.row(k);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td.try_inverse().ok_or(GeomError::DegenerateConfiguration)?;
    normalize_matrix(td_inv * hn * ts)
}

fn params_of(m: &Matrix3<f64>) -> SVector<f64, 8> {
    SVector::<f64, 8>::from_column_slice(&[
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
    ])
}

fn matrix_of(p: &SVector<f64, 8>) -> Matrix3<f64> {
    Matrix3::new(p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], 1.0)
}

fn sq_cost(m: &Matrix3<f64>, src: &[PixelPoint], dst: &[PixelPoint]) -> f64 {
    src.iter()
        .zip(dst)
        .map(|(s, d)| {
            let e = transfer_error(m, s, d);
            e * e
        })
        .sum()
}

/// Levenberg–Marquardt on the forward transfer error over the 8 free entries.
fn refine(m: Matrix3<f64>, src: &[PixelPoint], dst: &[PixelPoint]) -> Matrix3<f64> {
    let mut p = params_of(&m);
    let mut cost = sq_cost(&m, src, dst);
    let mut lambda = 1e-3;
    for _ in 0..100 {
        if cost <= 1e-24 {
            break;
        }
        let mut jtj = SMatrix::<f64, 8, 8>::zeros();
        let mut jtr = SVector::<f64, 8>::zeros();
        for (s, d) in src.iter().zip(dst) {
            let (x, y) = (s.x, s.y);
            let w = p[6] * x + p[7] * y + 1.0;
            if w.abs() <= INFINITY_W {
                return matrix_of(&p);
            }
            let u = (p[0] * x + p[1] * y + p[2]) / w;
            let v = (p[3] * x + p[4] * y + p[5]) / w;
            let ju =
                SVector::<f64, 8>::from_column_slice(&[x / w, y / w, 1.0 / w, 0.0, 0.0, 0.0, -u * x / w, -u * y / w]);
            let jv =
                SVector::<f64, 8>::from_column_slice(&[0.0, 0.0, 0.0, x / w, y / w, 1.0 / w, -v * x / w, -v * y / w]);
            let (ru, rv) = (u - d.x, v - d.y);
            jtj += ju * ju.transpose() + jv * jv.transpose();
            jtr += ju * ru + jv * rv;
        }
        let mut improved = false;
        for _ in 0..10 {
            let mut damped = jtj;
            for i in 0..8 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let cand = p + step;
            let cm = matrix_of(&cand);
            let c = sq_cost(&cm, src, dst);
            if c.is_finite() && c < cost {
                let rel = (cost - c) / cost.max(1e-300);
                p = cand;
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    matrix_of(&p)
}

fn rmse(m: &Matrix3<f64>, src: &[PixelPoint], dst: &[PixelPoint], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let s: f64 = idx
        .iter()
        .map(|&i| {
            let e = transfer_error(m, &src[i], &dst[i]);
            e * e
        })
        .sum();
    libm::sqrt(s / idx.len() as f64)
}

fn subset(pts: &[PixelPoint], idx: &[usize]) -> Vec<PixelPoint> {
    idx.iter().map(|&i| pts[i]).collect()
}

fn inliers_of(m: &Matrix3<f64>, src: &[PixelPoint], dst: &[PixelPoint], thr: f64) -> Vec<usize> {
    (0..src.len()).filter(|&i| transfer_error(m, &src[i], &dst[i]) <= thr).collect()
}

fn ransac(
    src: &[PixelPoint],
    dst: &[PixelPoint],
    params: &RansacParams,
) -> Result<(Matrix3<f64>, Vec<usize>), GeomError> {
    let n = src.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(Vec<usize>, f64, Matrix3<f64>)> = None;
    let mut needed = params.max_iterations;
    let mut it = 0;
    while it < needed.min(params.max_iterations) {
        it += 1;
        let pick = sample(&mut rng, n, 4).into_vec();
        let s = subset(src, &pick);
        let d = subset(dst, &pick);
        if any_three_collinear(&s) || any_three_collinear(&d) {
            continue;
        }
        let Ok(m) = dlt(&s, &d) else { continue };
        let inl = inliers_of(&m, src, dst, params.threshold_px);
        let err = rmse(&m, src, dst, &inl);
        let better = match &best {
            None => true,
            Some((bi, be, _)) => inl.len() > bi.len() || (inl.len() == bi.len() && err < *be),
        };
        if better {
            let w = inl.len() as f64 / n as f64;
            let p_good = libm::pow(w, 4.0);
            if p_good >= 1.0 {
                needed = it;
            } else if p_good > 0.0 {
                let k = libm::log(1.0 - params.confidence) / libm::log(1.0 - p_good);
                if k.is_finite() {
                    needed = (libm::ceil(k) as usize).max(it);
                }
            }
            best = Some((inl, err, m));
        }
    }
    let (inl, _, m) = best.ok_or(GeomError::NoConsensus(0))?;
    if inl.len() < 4 {
        return Err(GeomError::NoConsensus(inl.len()));
    }
    Ok(local_optimize(m, inl, src, dst, params.threshold_px))
}

/// Least-squares refits on the consensus set with an inlier threshold that
/// starts wide and shrinks to the nominal one. Recovers high-leverage inliers
/// that a model fitted to a minimal sample extrapolates poorly to.
fn local_optimize(
    m: Matrix3<f64>,
    inl: Vec<usize>,
    src: &[PixelPoint],
    dst: &[PixelPoint],
    threshold: f64,
) -> (Matrix3<f64>, Vec<usize>) {
    let mut best_err = rmse(&m, src, dst, &inl);
    let mut best = (m, inl);
    let mut cur = best.0;
    for k in [4.0, 3.0, 2.0, 1.5, 1.0] {
        let wide = inliers_of(&cur, src, dst, threshold * k);
        if wide.len() < 4 {
            break;
        }
        let Ok(fit) = dlt(&subset(src, &wide), &subset(dst, &wide)) else {
            break;
        };
        cur = fit;
        let scored = inliers_of(&cur, src, dst, threshold);
        let err = rmse(&cur, src, dst, &scored);
        if scored.len() > best.1.len() || (scored.len() == best.1.len() && err < best_err) {
            best_err = err;
            best = (cur, scored);
        }
    }
    best
}

/// Estimates `H` with `target ≅ H · source`.
///
/// Correspondences are taken in the order given; for window-corner
/// rectification the caller supplies TL, TR, BR, BL on both sides.
pub fn estimate_homography(
    source: &[PixelPoint],
    target: &[PixelPoint],
    cfg: &EstimatorConfig,
) -> Result<Homography, GeomError> {
    if source.len() != target.len() {
        return Err(GeomError::CountMismatch(source.len(), target.len()));
    }
    if source.len() < 4 {
        return Err(GeomError::InsufficientCorrespondences(source.len()));
    }
    if source.iter().chain(target).any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(GeomError::DegenerateConfiguration);
    }
    check_degenerate(source)?;
    check_degenerate(target)?;

    let (mut m, mut inliers) = match cfg.method {
        EstimationMethod::Dlt => (dlt(source, target)?, (0..source.len()).collect()),
        EstimationMethod::Ransac(p) => ransac(source, target, &p)?,
    };
    if cfg.refine && inliers.len() > 4 {
        let s = subset(source, &inliers);
        let d = subset(target, &inliers);
        let refined = refine(m, &s, &d);
        if let Ok(r) = normalize_matrix(refined) {
            if sq_cost(&r, &s, &d) <= sq_cost(&m, &s, &d) {
                m = r;
            }
        }
        if let EstimationMethod::Ransac(p) = cfg.method {
            let again = inliers_of(&m, source, target, p.threshold_px);
            if again.len() >= 4 {
                inliers = again;
            }
        }
    }
    let m = normalize_matrix(m)?;
    let reprojection_rmse = rmse(&m, source, target, &inliers);
    Ok(Homography { matrix: m, source: source.to_vec(), target: target.to_vec(), inliers, reprojection_rmse })
}

/// Pixels-to-metres scale of a rectified facade.
///
/// `s == width_m / width_px`. A second, vertical scale `s_y` is carried for
/// anisotropic canvases; areas use `s_x · s_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricScale {
    pub width_m: f64,
    pub width_px: f64,
    pub s: f64,
    pub s_y: f64,
}

impl MetricScale {
    #[inline]
    pub fn s_x(&self) -> f64 {
        self.s
    }

    /// Separate horizontal and vertical scales.
    pub fn anisotropic(width_m: f64, width_px: f64, height_m: f64, height_px: f64) -> Result<Self, GeomError> {
        let mut base = compute_scale(width_m, width_px)?;
        base.s_y = compute_scale(height_m, height_px)?.s;
        Ok(base)
    }

    /// Square metres per square pixel.
    #[inline]
    pub fn area_factor(&self) -> f64 {
        self.s * self.s_y
    }
}

pub fn compute_scale(width_m: f64, width_px: f64) -> Result<MetricScale, GeomError> {
    if !(width_m > 0.0 && width_px > 0.0 && width_m.is_finite() && width_px.is_finite()) {
        return Err(GeomError::NonPositiveInput);
    }
    let s = width_m / width_px;
    Ok(MetricScale { width_m, width_px, s, s_y: s })
}

/// Propagation of a relative facade-width error into area and energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSensitivityReport {
    pub width_error_fraction: f64,
    pub area_error_fraction: f64,
    /// Energy is linear in area with everything else fixed.
    pub energy_error_fraction: f64,
}

/// Both metric axes inherit the width error, so area error is `(1+e)² − 1`,
/// evaluated as `e² + 2e` with a single rounding.
pub fn scale_sensitivity(width_error_fraction: f64) -> Result<ScaleSensitivityReport, GeomError> {
    let e = width_error_fraction;
    if !(e > -1.0) || !e.is_finite() {
        return Err(GeomError::NonPositiveInput);
    }
    let area = libm::fma(e, e, 2.0 * e);
    Ok(ScaleSensitivityReport { width_error_fraction: e, area_error_fraction: area, energy_error_fraction: area })
}
