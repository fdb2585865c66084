//! Comparison of predicted layouts and segmentations against ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use facade_pv_core::facade::ComponentClass;
use facade_pv_core::metrics::{area_error, boundary_f, jaccard, miou, summarize, MetricsError};
use facade_pv_core::{BoundingBox, FacadeDescription};
use serde::Serialize;
use thiserror::Error;

use crate::io::{FacadeRecord, LayoutRecord, MetricsRecord, RecordError};

/// Boundary match tolerance when none is given.
pub const DEFAULT_TOLERANCE_PX: f64 = 2.0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Missing(String),
}

/// Per-class IoU of two segmentations of the same facade. Classes absent
/// from both sides are skipped; a class present on one side only scores 0.
pub fn class_ious(truth: &FacadeDescription, pred: &FacadeDescription) -> BTreeMap<ComponentClass, f64> {
    ComponentClass::ALL
        .iter()
        .filter_map(|&c| {
            let (t, p) = (truth.boxes_of(c), pred.boxes_of(c));
            match jaccard(&t, &p) {
                Ok(j) => Some((c, j)),
                Err(_) => None,
            }
        })
        .collect()
}

/// Area error, region overlap and boundary agreement of a predicted layout.
pub fn compare_layouts(
    facade: &FacadeDescription,
    truth: &[BoundingBox],
    pred: &[BoundingBox],
    tolerance_px: f64,
) -> Result<MetricsRecord, EvalError> {
    let e = area_error(truth, pred, facade.scale())?;
    let j = if pred.is_empty() { 0.0 } else { jaccard(truth, pred)? };
    let f = if pred.is_empty() { 0.0 } else { boundary_f(truth, pred, tolerance_px)? };
    Ok(MetricsRecord {
        epsilon: e.epsilon,
        s1_m2: e.s_false_negative,
        s2_m2: e.s_false_positive,
        jaccard: j,
        boundary_f: f,
        miou: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildingMetrics {
    pub building_id: String,
    #[serde(flatten)]
    pub metrics: MetricsRecord,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub class_iou: BTreeMap<String, f64>,
}

/// Mean area error with both spreads, since "±" alone is ambiguous.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSummary {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub ci95_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub buildings: Vec<BuildingMetrics>,
    pub epsilon: Option<EpsilonSummary>,
    pub mean_miou: Option<f64>,
}

pub struct EvalInputs {
    /// Facade records giving each building's scale (and its reference
    /// segmentation).
    pub facades: PathBuf,
    /// Ground-truth layout records, `<building_id>.json`.
    pub truth: PathBuf,
    /// Predicted layout records, `<building_id>.json`.
    pub pred: PathBuf,
    /// Predicted segmentations, `<building_id>.json`, for mIoU.
    pub pred_facades: Option<PathBuf>,
    pub tolerance_px: f64,
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .map_err(|e| EvalError::Missing(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    Ok(v)
}

/// Scores every building that has both a truth and a predicted layout.
pub fn evaluate(inputs: &EvalInputs) -> Result<EvaluationReport, EvalError> {
    let mut buildings = Vec::new();
    for path in json_files(&inputs.facades)? {
        let record = FacadeRecord::load(&path)?;
        let facade = record.to_facade(0)?.facade;
        let id = facade.building_id().to_string();
        let truth_path = inputs.truth.join(format!("{id}.json"));
        let pred_path = inputs.pred.join(format!("{id}.json"));
        if !truth_path.is_file() || !pred_path.is_file() {
            continue;
        }
        let truth = LayoutRecord::load(&truth_path)?.rects()?;
        let pred = LayoutRecord::load(&pred_path)?.rects()?;
        let mut metrics = compare_layouts(&facade, &truth, &pred, inputs.tolerance_px)?;
        let mut class_iou = BTreeMap::new();
        if let Some(dir) = &inputs.pred_facades {
            let p = dir.join(format!("{id}.json"));
            if p.is_file() {
                let seg = FacadeRecord::load(&p)?.to_facade(0)?.facade;
                let per_class = class_ious(&facade, &seg);
                metrics.miou = miou(&per_class).ok();
                class_iou = per_class.into_iter().map(|(c, v)| (c.as_str().to_string(), v)).collect();
            }
        }
        buildings.push(BuildingMetrics { building_id: id, metrics, class_iou });
    }
    if buildings.is_empty() {
        return Err(EvalError::Missing("no building has both a truth and a predicted layout".into()));
    }
    let eps: Vec<f64> = buildings.iter().map(|b| b.metrics.epsilon).collect();
    let mious: Vec<f64> = buildings.iter().filter_map(|b| b.metrics.miou).collect();
    Ok(EvaluationReport {
        epsilon: summarize(&eps).map(|s| EpsilonSummary {
            n: s.n,
            mean: s.mean,
            std_dev: s.std_dev,
            ci95_half_width: s.ci95_half_width,
        }),
        mean_miou: (!mious.is_empty()).then(|| mious.iter().sum::<f64>() / mious.len() as f64),
        buildings,
    })
}
