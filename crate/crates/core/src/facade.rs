//! Facade data model: semantic components, box-level cleanup and
//! segmentation bias correction.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::bbox::BoundingBox;
use crate::geom::MetricScale;
use crate::region;

/// Semantic class of a facade component. Unknown labels become `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComponentClass {
    Wall,
    Window,
    Door,
    Balcony,
    Roof,
    Other,
}

impl ComponentClass {
    pub const ALL: [ComponentClass; 6] = [
        ComponentClass::Wall,
        ComponentClass::Window,
        ComponentClass::Door,
        ComponentClass::Balcony,
        ComponentClass::Roof,
        ComponentClass::Other,
    ];

    /// Case-insensitive; tolerates surrounding whitespace and plural forms.
    pub fn parse(label: &str) -> Self {
        let l = label.trim();
        let eq = |s: &str| l.eq_ignore_ascii_case(s);
        if eq("wall") || eq("walls") {
            Self::Wall
        } else if eq("window") || eq("windows") {
            Self::Window
        } else if eq("door") || eq("doors") {
            Self::Door
        } else if eq("balcony") || eq("balconies") {
            Self::Balcony
        } else if eq("roof") || eq("roofs") {
            Self::Roof
        } else {
            Self::Other
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Wall => "wall",
            Self::Window => "window",
            Self::Door => "door",
            Self::Balcony => "balcony",
            Self::Roof => "roof",
            Self::Other => "other",
        }
    }

    /// Everything except wall blocks PV installation.
    pub fn is_obstruction(&self) -> bool {
        !matches!(self, Self::Wall)
    }
}

impl fmt::Display for ComponentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub class: ComponentClass,
    pub bbox: BoundingBox,
}

impl Component {
    pub fn new(class: ComponentClass, bbox: BoundingBox) -> Self {
        Self { class, bbox }
    }
}

/// Unvalidated facade input, as read from an interchange record.
#[derive(Debug, Clone, PartialEq)]
pub struct FacadeParts {
    pub building_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub azimuth_deg: f64,
    pub width_px: f64,
    pub height_px: f64,
    pub width_m: f64,
    pub height_m: f64,
    /// `(class, [x_min, y_min, x_max, y_max])`
    pub components: Vec<(ComponentClass, [f64; 4])>,
    /// Optional declared metres-per-pixel; must agree with `width_m / width_px`.
    pub declared_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FacadeError {
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("component {index} ({class}) lies outside the wall")]
    GeometryViolation { index: usize, class: ComponentClass },
    #[error("declared scale {declared} m/px disagrees with width_m/width_px = {derived}")]
    ScaleMismatch { declared: f64, derived: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FacadeWarning {
    /// No wall component was given; the whole canvas is used.
    ImplicitWall,
    /// Component `index` was clipped to the canvas or wall extent.
    Clipped { index: usize, class: ComponentClass, original: [f64; 4] },
}

impl fmt::Display for FacadeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ImplicitWall => f.write_str("no wall component; using the full canvas"),
            Self::Clipped { index, class, original } => {
                write!(f, "component {index} ({class}) {original:?} clipped to the wall extent")
            }
        }
    }
}

/// A validated facade.
///
/// Every obstruction lies inside the hull of the wall boxes, which itself lies
/// inside the canvas `[0, 0, width_px, height_px]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FacadeDescription {
    building_id: String,
    latitude: f64,
    longitude: f64,
    azimuth_deg: f64,
    width_px: f64,
    height_px: f64,
    width_m: f64,
    height_m: f64,
    components: Vec<Component>,
    scale: MetricScale,
}

fn schema(msg: &str) -> FacadeError {
    FacadeError::SchemaViolation(String::from(msg))
}

fn hull(boxes: impl Iterator<Item = BoundingBox>) -> Option<BoundingBox> {
    boxes.reduce(|a, b| a.union_hull(&b))
}

impl FacadeDescription {
    /// Validates and normalizes raw facade input, clipping boxes as needed.
    pub fn build(parts: FacadeParts) -> Result<(Self, Vec<FacadeWarning>), FacadeError> {
        let FacadeParts {
            building_id,
            latitude,
            longitude,
            azimuth_deg,
            width_px,
            height_px,
            width_m,
            height_m,
            components,
            declared_scale,
        } = parts;
        if building_id.trim().is_empty() {
            return Err(schema("building_id must be nonempty"));
        }
        if !(latitude.abs() <= 90.0) {
            return Err(schema("latitude must lie in [-90, 90]"));
        }
        if !(longitude.abs() <= 180.0) {
            return Err(schema("longitude must lie in [-180, 180]"));
        }
        if !azimuth_deg.is_finite() {
            return Err(schema("azimuth_deg must be finite"));
        }
        let scale = MetricScale::anisotropic(width_m, width_px, height_m, height_px)
            .map_err(|_| schema("canvas and metric dimensions must be positive"))?;
        if let Some(declared) = declared_scale {
            if !((declared - scale.s).abs() <= 1e-9 * scale.s.max(1.0)) {
                return Err(FacadeError::ScaleMismatch { declared, derived: scale.s });
            }
        }

        let canvas = BoundingBox::new(0.0, 0.0, width_px, height_px).map_err(|_| schema("canvas must be positive"))?;
        let mut warnings = Vec::new();
        let mut raw = Vec::with_capacity(components.len());
        for (index, (class, c)) in components.iter().enumerate() {
            let b = BoundingBox::from_array(*c).map_err(|_| FacadeError::GeometryViolation { index, class: *class })?;
            raw.push((index, *class, b));
        }

        let mut walls = Vec::new();
        for &(index, class, b) in raw.iter().filter(|r| r.1 == ComponentClass::Wall) {
            let clipped = b.intersection(&canvas).ok_or(FacadeError::GeometryViolation { index, class })?;
            if clipped != b {
                warnings.push(FacadeWarning::Clipped { index, class, original: b.to_array() });
            }
            walls.push(Component::new(class, clipped));
        }
        if walls.is_empty() {
            warnings.push(FacadeWarning::ImplicitWall);
            walls.push(Component::new(ComponentClass::Wall, canvas));
        }
        let wall_boxes: Vec<BoundingBox> = walls.iter().map(|w| w.bbox).collect();
        let extent = hull(wall_boxes.iter().copied()).expect("at least one wall");

        let mut out = walls;
        for &(index, class, b) in raw.iter().filter(|r| r.1 != ComponentClass::Wall) {
            let err = FacadeError::GeometryViolation { index, class };
            let clipped = b.intersection(&extent).ok_or(err.clone())?;
            if region::overlay(&[clipped], &wall_boxes).both <= 0.0 {
                return Err(err);
            }
            if clipped != b {
                warnings.push(FacadeWarning::Clipped { index, class, original: b.to_array() });
            }
            out.push(Component::new(class, clipped));
        }

        Ok((
            Self {
                building_id,
                latitude,
                longitude,
                azimuth_deg: crate::wrap(azimuth_deg, 360.0),
                width_px,
                height_px,
                width_m,
                height_m,
                components: out,
                scale,
            },
            warnings,
        ))
    }

    /// Re-validates after replacing the component list (e.g. after tidying).
    pub fn with_components(&self, components: &[Component]) -> Result<(Self, Vec<FacadeWarning>), FacadeError> {
        Self::build(FacadeParts {
            building_id: self.building_id.clone(),
            latitude: self.latitude,
            longitude: self.longitude,
            azimuth_deg: self.azimuth_deg,
            width_px: self.width_px,
            height_px: self.height_px,
            width_m: self.width_m,
            height_m: self.height_m,
            components: components.iter().map(|c| (c.class, c.bbox.to_array())).collect(),
            declared_scale: None,
        })
    }

    pub fn building_id(&self) -> &str {
        &self.building_id
    }
    pub fn latitude(&self) -> f64 {
        self.latitude
    }
    pub fn longitude(&self) -> f64 {
        self.longitude
    }
    /// Surface-normal azimuth, degrees clockwise from true north, in `[0, 360)`.
    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_deg
    }
    pub fn width_px(&self) -> f64 {
        self.width_px
    }
    pub fn height_px(&self) -> f64 {
        self.height_px
    }
    pub fn width_m(&self) -> f64 {
        self.width_m
    }
    pub fn height_m(&self) -> f64 {
        self.height_m
    }
    pub fn scale(&self) -> &MetricScale {
        &self.scale
    }
    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn canvas(&self) -> BoundingBox {
        BoundingBox { x_min: 0.0, y_min: 0.0, x_max: self.width_px, y_max: self.height_px }
    }

    pub fn walls(&self) -> Vec<BoundingBox> {
        self.boxes_of(ComponentClass::Wall)
    }

    pub fn obstructions(&self) -> Vec<BoundingBox> {
        self.components.iter().filter(|c| c.class.is_obstruction()).map(|c| c.bbox).collect()
    }

    pub fn boxes_of(&self, class: ComponentClass) -> Vec<BoundingBox> {
        self.components.iter().filter(|c| c.class == class).map(|c| c.bbox).collect()
    }
}

/// Thresholds for [`tidy_components`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TidyParams {
    pub min_area_px2: f64,
    pub merge_gap_px: f64,
}

impl TidyParams {
    /// 0.25 % of the canvas area and 1 % of the canvas width.
    pub fn for_canvas(width_px: f64, height_px: f64) -> Self {
        Self { min_area_px2: 0.0025 * width_px * height_px, merge_gap_px: 0.01 * width_px }
    }
}

fn mergeable(a: &BoundingBox, b: &BoundingBox, gap: f64) -> bool {
    let gap_x = a.x_min.max(b.x_min) - a.x_max.min(b.x_max);
    let gap_y = a.y_min.max(b.y_min) - a.y_max.min(b.y_max);
    // A negative gap is an overlap of the projections on that axis.
    (gap_x <= gap && gap_y < 0.0) || (gap_y <= gap && gap_x < 0.0)
}

/// Box-level morphology: same-class boxes closer than `merge_gap_px` (with
/// overlapping projections on the other axis) are fused into their joint
/// hull until nothing changes, then boxes under `min_area_px2` are dropped.
///
/// Output is sorted by class, then reading order, and the operation is
/// idempotent.
pub fn tidy_components(components: &[Component], min_area_px2: f64, merge_gap_px: f64) -> Vec<Component> {
    let mut items: Vec<Component> = components.to_vec();
    'outer: loop {
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                if items[i].class == items[j].class && mergeable(&items[i].bbox, &items[j].bbox, merge_gap_px) {
                    let merged = items[i].bbox.union_hull(&items[j].bbox);
                    items[i].bbox = merged;
                    items.remove(j);
                    continue 'outer;
                }
            }
        }
        break;
    }
    items.retain(|c| c.bbox.area() >= min_area_px2);
    items.sort_by(|a, b| a.class.cmp(&b.class).then(a.bbox.reading_order(&b.bbox)));
    items
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BiasError {
    #[error("calibration set is empty")]
    EmptyCalibrationSet,
    #[error("truth and prediction lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("total ground-truth area is zero")]
    ZeroTruthArea,
    #[error("bias {0} is not below 1")]
    BiasAtUnity(f64),
}

/// Systematic relative under-estimation of one component class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasModel {
    /// `(Σ truth − Σ predicted) / Σ truth`; negative means over-estimation.
    pub bias: f64,
    pub class_scope: ComponentClass,
    pub calibration_n: usize,
}

impl BiasModel {
    pub fn new(bias: f64, class_scope: ComponentClass, calibration_n: usize) -> Result<Self, BiasError> {
        if !(bias < 1.0) {
            return Err(BiasError::BiasAtUnity(bias));
        }
        if calibration_n == 0 {
            return Err(BiasError::EmptyCalibrationSet);
        }
        Ok(Self { bias, class_scope, calibration_n })
    }

    /// Shipped defaults: walls under-segmented by 3.2 %, windows
    /// over-segmented by 2.1 %; other classes uncorrected.
    pub fn default_for(class: ComponentClass) -> Self {
        let bias = match class {
            ComponentClass::Wall => 0.032,
            ComponentClass::Window => -0.021,
            _ => 0.0,
        };
        Self { bias, class_scope: class, calibration_n: 20 }
    }
}

pub fn calibrate_bias(
    truth_areas: &[f64],
    predicted_areas: &[f64],
    class_scope: ComponentClass,
) -> Result<BiasModel, BiasError> {
    if truth_areas.len() != predicted_areas.len() {
        return Err(BiasError::LengthMismatch(truth_areas.len(), predicted_areas.len()));
    }
    if truth_areas.is_empty() {
        return Err(BiasError::EmptyCalibrationSet);
    }
    let truth: f64 = truth_areas.iter().sum();
    let pred: f64 = predicted_areas.iter().sum();
    if !(truth > 0.0) {
        return Err(BiasError::ZeroTruthArea);
    }
    BiasModel::new((truth - pred) / truth, class_scope, truth_areas.len())
}

/// `predicted / (1 − bias)`.
pub fn correct_area(predicted: f64, model: &BiasModel) -> Result<f64, BiasError> {
    if !(model.bias < 1.0) {
        return Err(BiasError::BiasAtUnity(model.bias));
    }
    Ok(predicted / (1.0 - model.bias))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    fn worked_example_parts() -> FacadeParts {
        FacadeParts {
            building_id: "a1".into(),
            latitude: 39.08,
            longitude: 117.20,
            azimuth_deg: 180.0,
            width_px: 1200.0,
            height_px: 800.0,
            width_m: 12.0,
            height_m: 6.0,
            components: vec![
                (ComponentClass::Wall, [0.0, 0.0, 1200.0, 800.0]),
                (ComponentClass::Window, [50.0, 200.0, 250.0, 400.0]),
                (ComponentClass::Window, [300.0, 200.0, 450.0, 400.0]),
                (ComponentClass::Window, [850.0, 100.0, 1150.0, 500.0]),
                (ComponentClass::Door, [600.0, 520.0, 750.0, 800.0]),
            ],
            declared_scale: None,
        }
    }

    #[test]
    fn class_parse_is_lenient() {
        assert_eq!(ComponentClass::parse("WINDOW"), ComponentClass::Window);
        assert_eq!(ComponentClass::parse(" Wall "), ComponentClass::Wall);
        assert_eq!(ComponentClass::parse("chimney"), ComponentClass::Other);
    }

    #[test]
    fn worked_example_facade_builds() {
        let (f, w) = FacadeDescription::build(worked_example_parts()).unwrap();
        assert!(w.is_empty());
        assert_eq!(f.components().len(), 5);
        assert_eq!(f.scale().s_x(), 0.01);
        assert_eq!(f.scale().s_y, 0.0075);
        assert_eq!(f.obstructions().len(), 4);
    }

    #[test]
    fn wall_only_and_implicit_wall() {
        let mut p = worked_example_parts();
        p.components.truncate(1);
        let (f, w) = FacadeDescription::build(p.clone()).unwrap();
        assert!(w.is_empty());
        assert_eq!(f.components().len(), 1);
        p.components.clear();
        let (f, w) = FacadeDescription::build(p).unwrap();
        assert_eq!(w, vec![FacadeWarning::ImplicitWall]);
        assert_eq!(f.walls(), vec![b(0.0, 0.0, 1200.0, 800.0)]);
    }

    #[test]
    fn straddling_window_is_clipped_with_warning() {
        let mut p = worked_example_parts();
        p.components[0].1 = [0.0, 0.0, 1000.0, 800.0];
        p.components.push((ComponentClass::Window, [950.0, 10.0, 1100.0, 60.0]));
        let (f, w) = FacadeDescription::build(p).unwrap();
        assert!(w.iter().any(|x| matches!(x, FacadeWarning::Clipped { index: 5, .. })));
        let last = f.components().last().unwrap();
        assert_eq!(last.bbox, b(950.0, 10.0, 1000.0, 60.0));
        let extent = f.walls()[0];
        assert!(f.obstructions().iter().all(|o| extent.contains(o)));
    }

    #[test]
    fn obstruction_outside_wall_is_rejected() {
        let mut p = worked_example_parts();
        p.components[0].1 = [0.0, 0.0, 500.0, 800.0];
        assert!(matches!(FacadeDescription::build(p), Err(FacadeError::GeometryViolation { index: 3, .. })));
    }

    #[test]
    fn scale_mismatch_detected() {
        let mut p = worked_example_parts();
        p.declared_scale = Some(0.02);
        assert!(matches!(FacadeDescription::build(p.clone()), Err(FacadeError::ScaleMismatch { .. })));
        p.declared_scale = Some(0.01);
        assert!(FacadeDescription::build(p).is_ok());
    }

    #[test]
    fn bad_schema_values() {
        let mut p = worked_example_parts();
        p.latitude = 95.0;
        assert!(matches!(FacadeDescription::build(p), Err(FacadeError::SchemaViolation(_))));
        let mut p = worked_example_parts();
        p.width_m = 0.0;
        assert!(matches!(FacadeDescription::build(p), Err(FacadeError::SchemaViolation(_))));
    }

    #[test]
    fn tidy_merges_close_windows() {
        let c = vec![
            Component::new(ComponentClass::Window, b(0.0, 0.0, 10.0, 10.0)),
            Component::new(ComponentClass::Window, b(12.0, 0.0, 22.0, 10.0)),
        ];
        let t = tidy_components(&c, 0.0, 3.0);
        assert_eq!(t, vec![Component::new(ComponentClass::Window, b(0.0, 0.0, 22.0, 10.0))]);
        // Different classes never merge.
        let c2 = vec![c[0], Component::new(ComponentClass::Door, b(12.0, 0.0, 22.0, 10.0))];
        assert_eq!(tidy_components(&c2, 0.0, 3.0).len(), 2);
    }

    #[test]
    fn tidy_drops_specks() {
        let c = vec![Component::new(ComponentClass::Other, b(5.0, 5.0, 7.0, 7.0))];
        assert!(tidy_components(&c, 25.0, 0.0).is_empty());
    }

    #[test]
    fn bias_examples() {
        let m = calibrate_bias(&[100.0], &[100.0], ComponentClass::Wall).unwrap();
        assert_eq!(m.bias, 0.0);
        let m = calibrate_bias(&[100.0], &[96.8], ComponentClass::Wall).unwrap();
        assert!((m.bias - 0.032).abs() < 1e-12);
        let m = calibrate_bias(&[50.0, 150.0], &[40.0, 160.0], ComponentClass::Wall).unwrap();
        assert_eq!(m.bias, 0.0);
        let m = BiasModel::new(0.032, ComponentClass::Wall, 1).unwrap();
        assert!((correct_area(96.8, &m).unwrap() - 100.0).abs() < 1e-12);
        let z = BiasModel::new(0.0, ComponentClass::Wall, 1).unwrap();
        assert_eq!(correct_area(42.5, &z).unwrap(), 42.5);
    }

    #[test]
    fn bias_errors() {
        assert_eq!(calibrate_bias(&[], &[], ComponentClass::Wall), Err(BiasError::EmptyCalibrationSet));
        assert_eq!(calibrate_bias(&[0.0], &[1.0], ComponentClass::Wall), Err(BiasError::ZeroTruthArea));
        assert!(matches!(calibrate_bias(&[10.0], &[0.0], ComponentClass::Wall), Err(BiasError::BiasAtUnity(_))));
        let bad = BiasModel { bias: 1.0, class_scope: ComponentClass::Wall, calibration_n: 1 };
        assert!(correct_area(1.0, &bad).is_err());
    }
}
