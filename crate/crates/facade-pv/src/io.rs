//! Interchange records: facade JSON, layout JSON, metrics JSON and hourly
//! weather CSV.

use std::fs;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use facade_pv_core::facade::{ComponentClass, FacadeError, FacadeParts, FacadeWarning};
use facade_pv_core::geom::{
    estimate_homography, warp_boxes, EstimationMethod, EstimatorConfig, GeomError, PixelPoint, RansacParams,
};
use facade_pv_core::solar::{SimError, Timestamp, WeatherRecord, WeatherSeries, WeatherValues};
use facade_pv_core::{BoundingBox, FacadeDescription};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("facade has no metric block; width_m is required")]
    MissingScale,
    #[error(transparent)]
    Facade(#[from] FacadeError),
    #[error("rectification failed: {0}")]
    Rectify(#[from] GeomError),
    #[error("weather: {0}")]
    Weather(#[from] SimError),
    #[error("weather row {row}: {reason}")]
    WeatherRow { row: usize, reason: String },
}

fn read(path: &Path) -> Result<String, RecordError> {
    fs::read_to_string(path).map_err(|source| RecordError::Read { path: path.display().to_string(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canvas {
    pub width_px: f64,
    pub height_px: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub width_m: f64,
    pub height_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub class: String,
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
}

/// Keypoints of a reference rectangle (usually a window) in the photo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectifyRecord {
    /// Corners in TL, TR, BR, BL order.
    pub source: Vec<[f64; 2]>,
    /// Side of the target square in pixels; defaults to the mean source edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_side: Option<f64>,
    /// Explicit targets, one per source point. With more than four pairs the
    /// homography is fitted robustly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<[f64; 2]>>,
}

/// The facade interchange record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacadeRecord {
    pub building_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub azimuth_deg: f64,
    pub canvas: Canvas,
    /// `null` until someone measures the facade width.
    pub metric: Option<Metric>,
    pub components: Vec<ComponentRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub building_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altitude_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_m_per_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rectify: Option<RectifyRecord>,
}

/// A parsed facade together with the record metadata the pipeline reports.
#[derive(Debug, Clone)]
pub struct LoadedFacade {
    pub facade: FacadeDescription,
    pub warnings: Vec<FacadeWarning>,
    pub location: String,
    pub building_type: String,
    pub altitude_m: f64,
}

impl FacadeRecord {
    pub fn from_json(text: &str) -> Result<Self, RecordError> {
        serde_json::from_str(text).map_err(|e| RecordError::Schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RecordError> {
        Self::from_json(&read(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    fn components(&self) -> Vec<(ComponentClass, [f64; 4])> {
        self.components.iter().map(|c| (ComponentClass::parse(&c.class), c.bbox)).collect()
    }

    /// Validates the record, rectifying component boxes first when keypoints
    /// are present.
    /// `seed` drives the robust fit when more than four keypoints are given.
    pub fn to_facade(&self, seed: u64) -> Result<LoadedFacade, RecordError> {
        let metric = self.metric.ok_or(RecordError::MissingScale)?;
        let mut width_px = self.canvas.width_px;
        let mut height_px = self.canvas.height_px;
        let mut components = self.components();
        if let Some(r) = &self.rectify {
            let (w, h, warped) = rectify_components(r, &components, seed)?;
            width_px = w;
            height_px = h;
            components = warped;
        }
        let (facade, warnings) = FacadeDescription::build(FacadeParts {
            building_id: self.building_id.clone(),
            latitude: self.latitude,
            longitude: self.longitude,
            azimuth_deg: self.azimuth_deg,
            width_px,
            height_px,
            width_m: metric.width_m,
            height_m: metric.height_m,
            components,
            declared_scale: self.scale_m_per_px,
        })?;
        Ok(LoadedFacade {
            facade,
            warnings,
            location: self.location.clone().unwrap_or_default(),
            building_type: self.building_type.clone().unwrap_or_default(),
            altitude_m: self.altitude_m.unwrap_or(0.0),
        })
    }
}

/// Parses and validates a facade interchange document.
pub fn parse_facade(document: &str) -> Result<FacadeDescription, RecordError> {
    Ok(FacadeRecord::from_json(document)?.to_facade(0)?.facade)
}

/// Fits the rectifying homography, warps every box and shifts the result so
/// the wall hull starts at the origin. Without explicit targets the four
/// keypoints map onto an axis-aligned square anchored at the first one.
/// Returns the new canvas size and the warped components.
type RawComponent = (ComponentClass, [f64; 4]);

fn rectify_components(
    r: &RectifyRecord,
    components: &[RawComponent],
    seed: u64,
) -> Result<(f64, f64, Vec<RawComponent>), RecordError> {
    let src: Vec<_> = r.source.iter().map(|p| PixelPoint::new(p[0], p[1])).collect();
    let dst: Vec<_> = match &r.target {
        Some(t) => {
            if t.len() != src.len() {
                return Err(RecordError::Schema(format!(
                    "rectify.target has {} points for {} sources",
                    t.len(),
                    src.len()
                )));
            }
            t.iter().map(|p| PixelPoint::new(p[0], p[1])).collect()
        }
        None => {
            if src.len() != 4 {
                return Err(RecordError::Schema(format!("rectify.source needs 4 corners, got {}", src.len())));
            }
            let side =
                r.target_side.unwrap_or_else(|| (0..4).map(|i| src[i].distance(&src[(i + 1) % 4])).sum::<f64>() / 4.0);
            if !(side > 0.0 && side.is_finite()) {
                return Err(RecordError::Schema("rectify.target_side must be positive".into()));
            }
            let (x0, y0) = (src[0].x, src[0].y);
            [(0.0, 0.0), (side, 0.0), (side, side), (0.0, side)]
                .map(|(dx, dy)| PixelPoint::new(x0 + dx, y0 + dy))
                .to_vec()
        }
    };
    let cfg = if src.len() > 4 {
        EstimatorConfig { method: EstimationMethod::Ransac(RansacParams { seed, ..Default::default() }), refine: true }
    } else {
        EstimatorConfig::dlt()
    };
    let h = estimate_homography(&src, &dst, &cfg)?;
    let boxes = components
        .iter()
        .map(|(_, b)| BoundingBox::from_array(*b))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| RecordError::Schema(e.to_string()))?;
    let warped = warp_boxes(&h, &boxes, None)?;
    let walls: Vec<_> =
        components.iter().zip(&warped).filter(|((c, _), _)| *c == ComponentClass::Wall).map(|(_, b)| *b).collect();
    let hull_of = if walls.is_empty() { &warped } else { &walls };
    let frame = hull_of
        .iter()
        .copied()
        .reduce(|a, b| a.union_hull(&b))
        .ok_or_else(|| RecordError::Schema("no components to rectify".into()))?;
    let out = components
        .iter()
        .zip(&warped)
        .map(|((c, _), b)| (*c, b.translate(-frame.x_min, -frame.y_min).to_array()))
        .collect();
    Ok((frame.width(), frame.height(), out))
}

/// `{"installable_rectangles": [[x1,y1,x2,y2], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRecord {
    pub installable_rectangles: Vec<[f64; 4]>,
}

impl LayoutRecord {
    pub fn from_rects(rects: &[BoundingBox]) -> Self {
        Self { installable_rectangles: rects.iter().map(|r| r.to_array()).collect() }
    }

    pub fn rects(&self) -> Result<Vec<BoundingBox>, RecordError> {
        self.installable_rectangles
            .iter()
            .map(|a| BoundingBox::from_array(*a).map_err(|e| RecordError::Schema(e.to_string())))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self, RecordError> {
        serde_json::from_str(&read(path)?).map_err(|e| RecordError::Schema(e.to_string()))
    }

    /// One rectangle per line, integral coordinates without a fraction.
    pub fn to_json(&self) -> String {
        if self.installable_rectangles.is_empty() {
            return "{\n  \"installable_rectangles\": []\n}".into();
        }
        let rows: Vec<String> =
            self.installable_rectangles.iter().map(|r| format!("    [{}]", r.map(format_coord).join(", "))).collect();
        format!("{{\n  \"installable_rectangles\": [\n{}\n  ]\n}}", rows.join(",\n"))
    }
}

/// Integers print without a fraction; anything else uses the shortest
/// round-trip form.
pub fn format_coord(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x:.0}")
    } else {
        format!("{x}")
    }
}

/// Output of the evaluation harness for one building.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epsilon: f64,
    pub s1_m2: f64,
    pub s2_m2: f64,
    pub jaccard: f64,
    pub boundary_f: f64,
    pub miou: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct WeatherRow {
    timestamp: String,
    ghi: Option<f64>,
    dni: Option<f64>,
    dhi: Option<f64>,
    temp_air: Option<f64>,
    wind_speed: Option<f64>,
}

/// Accepts RFC 3339 (offsets are converted to UTC) or naive ISO date-times,
/// which are taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(Timestamp(t.timestamp()));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| Timestamp(t.and_utc().timestamp()))
}

/// Reads `timestamp,ghi,dni,dhi,temp_air,wind_speed`. Rows with an empty
/// field become missing hours.
pub fn read_weather_csv<R: std::io::Read>(input: R) -> Result<WeatherSeries, RecordError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut records = Vec::new();
    for (i, row) in rdr.deserialize::<WeatherRow>().enumerate() {
        let row = row.map_err(|e| RecordError::WeatherRow { row: i + 1, reason: e.to_string() })?;
        let timestamp = parse_timestamp(&row.timestamp).ok_or_else(|| RecordError::WeatherRow {
            row: i + 1,
            reason: format!("bad timestamp {:?}", row.timestamp),
        })?;
        let values = match (row.ghi, row.dni, row.dhi, row.temp_air, row.wind_speed) {
            (Some(ghi), Some(dni), Some(dhi), Some(temp_air), Some(wind_speed)) => {
                Some(WeatherValues { ghi, dni, dhi, temp_air, wind_speed })
            }
            _ => None,
        };
        records.push(WeatherRecord { timestamp, values });
    }
    Ok(WeatherSeries::new(records)?)
}

pub fn load_weather(path: &Path) -> Result<WeatherSeries, RecordError> {
    let file = fs::File::open(path).map_err(|source| RecordError::Read { path: path.display().to_string(), source })?;
    read_weather_csv(std::io::BufReader::new(file))
}

/// Writes a series in the same CSV layout [`read_weather_csv`] accepts.
pub fn write_weather_csv<W: std::io::Write>(series: &WeatherSeries, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "ghi", "dni", "dhi", "temp_air", "wind_speed"])?;
    for r in series.records() {
        let t = DateTime::from_timestamp(r.timestamp.unix_seconds(), 0)
            .expect("timestamp in range")
            .format("%Y-%m-%dT%H:%M:%SZ")
            .to_string();
        match r.values {
            Some(v) => w.write_record([
                t,
                v.ghi.to_string(),
                v.dni.to_string(),
                v.dhi.to_string(),
                v.temp_air.to_string(),
                v.wind_speed.to_string(),
            ])?,
            None => w.write_record([t.as_str(), "", "", "", "", ""])?,
        }
    }
    w.flush()?;
    Ok(())
}
