//! rectify → model → layout → simulate → report, for one facade or a batch.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use facade_pv_core::facade::{correct_area, tidy_components, BiasModel, ComponentClass, TidyParams};
use facade_pv_core::layout::{deterministic_layout, LayoutConstraints};
use facade_pv_core::solar::clearsky::ClearSkyParams;
use facade_pv_core::solar::time::hours_in_year;
use facade_pv_core::solar::{
    simulate, ElectricalMode, PvArray, SimError, SingleDiodeParams, SurfaceOrientation, SystemConfig, WeatherSeries,
};
use facade_pv_core::{LayoutResult, Provenance};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::io::{load_weather, FacadeRecord, LayoutRecord, LoadedFacade, RecordError};
use crate::llm::{reason_layout, LlmConfig, ReasonError, Transport};

/// Where panels go and how they are found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutMode {
    Deterministic,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sky {
    #[serde(rename = "clearsky")]
    ClearSky,
    Tmy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Electrical {
    Efficiency,
    SingleDiode,
}

impl fmt::Display for Sky {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sky::ClearSky => "clearsky",
            Sky::Tmy => "tmy",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub facades_dir: PathBuf,
    /// Hourly CSVs named `<building_id>.csv` or `<location>.csv`; tmy only.
    pub weather_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub layout_mode: LayoutMode,
    pub sky: Sky,
    pub electrical: Electrical,
    pub constraints: LayoutConstraints,
    pub llm: LlmConfig,
    pub jobs: usize,
    pub seed: u64,
    /// Calendar year of synthesized clear-sky weather.
    pub year: i32,
    pub linke_turbidity: f64,
    /// Ambient conditions assumed for clear-sky runs.
    pub clear_sky_temp_air: f64,
    pub clear_sky_wind_speed: f64,
    pub system: SystemConfig,
    pub module: SingleDiodeParams,
    /// Clean up component boxes before layout.
    pub tidy: bool,
    /// Also simulate the same area as a horizontal roof.
    pub compare_rooftop: bool,
}

impl RunConfig {
    pub fn new(facades_dir: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            facades_dir: facades_dir.into(),
            weather_dir: None,
            out_dir: out_dir.into(),
            layout_mode: LayoutMode::Deterministic,
            sky: Sky::ClearSky,
            electrical: Electrical::Efficiency,
            constraints: LayoutConstraints::default(),
            llm: LlmConfig::default(),
            jobs: 1,
            seed: 0,
            year: 2023,
            linke_turbidity: 3.0,
            clear_sky_temp_air: 20.0,
            clear_sky_wind_speed: 1.0,
            system: SystemConfig::default(),
            module: SingleDiodeParams::default(),
            tidy: false,
            compare_rooftop: false,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !self.facades_dir.is_dir() {
            return Err(PipelineError::Config(format!(
                "facade directory {} does not exist",
                self.facades_dir.display()
            )));
        }
        if self.sky == Sky::Tmy {
            match &self.weather_dir {
                Some(d) if d.is_dir() => {}
                Some(d) => {
                    return Err(PipelineError::Config(format!("weather directory {} does not exist", d.display())))
                }
                None => return Err(PipelineError::Config("tmy runs need a weather directory".into())),
            }
        }
        if self.jobs < 1 {
            return Err(PipelineError::Config("jobs must be at least 1".into()));
        }
        if self.llm.max_attempts < 1 {
            return Err(PipelineError::Config("max_attempts must be at least 1".into()));
        }
        self.constraints.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.system.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    fn mode(&self) -> ElectricalMode {
        match self.electrical {
            Electrical::Efficiency => ElectricalMode::Efficiency,
            Electrical::SingleDiode => ElectricalMode::SingleDiode(self.module),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no facade records (*.json) in {0}")]
    EmptyBatch(String),
    #[error("llm mode needs a transport")]
    NoTransport,
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

#[derive(Debug, Error)]
pub enum BuildingError {
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Reason(#[from] ReasonError),
    #[error("no layout: the model gave no acceptable answer and fallback is off")]
    NoLayout,
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
}

/// Facade versus equal-area horizontal roof at the same site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RooftopComparison {
    pub facade_kwh: f64,
    pub rooftop_kwh: f64,
    /// `facade_kwh / rooftop_kwh`, 0 when the facade yields nothing.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingReportRow {
    pub building_id: String,
    pub location: String,
    pub building_type: String,
    /// `None` on success.
    pub error: Option<String>,
    pub azimuth_deg: f64,
    pub estimated_area_m2: f64,
    /// Area divided by `1 − bias` of the wall bias model.
    pub bias_corrected_area_m2: f64,
    pub module_count: u32,
    pub modules_by_area: u32,
    pub annual_irradiation_kwh_m2: f64,
    pub annual_yield_kwh: f64,
    pub monthly_kwh: [f64; 12],
    pub provenance: Option<Provenance>,
    pub attempts_used: usize,
    pub missing_hours: usize,
    pub rooftop: Option<RooftopComparison>,
}

impl BuildingReportRow {
    fn failed(building_id: String, location: String, building_type: String, e: &BuildingError) -> Self {
        Self {
            building_id,
            location,
            building_type,
            error: Some(e.to_string()),
            azimuth_deg: 0.0,
            estimated_area_m2: 0.0,
            bias_corrected_area_m2: 0.0,
            module_count: 0,
            modules_by_area: 0,
            annual_irradiation_kwh_m2: 0.0,
            annual_yield_kwh: 0.0,
            monthly_kwh: [0.0; 12],
            provenance: None,
            attempts_used: 0,
            missing_hours: 0,
            rooftop: None,
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Wall-clock seconds per stage; kept out of the reproducible reports.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timings {
    pub model_s: f64,
    pub layout_s: f64,
    pub energy_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone)]
pub struct BuildingOutcome {
    pub row: BuildingReportRow,
    pub layout: Option<LayoutResult>,
    pub failure_log: Vec<(usize, String)>,
    pub timings: Timings,
}

/// Re-simulates the facade's area as a horizontal surface with the same
/// module count and compares yields.
pub fn compare_facade_rooftop(
    facade_kwh: f64,
    array: &PvArray,
    weather: &WeatherSeries,
    sys: &SystemConfig,
    mode: &ElectricalMode,
) -> Result<RooftopComparison, SimError> {
    let roof = PvArray { surface: SurfaceOrientation { tilt: 0.0, ..array.surface }, ..*array };
    let rooftop_kwh = simulate(&roof, weather, sys, mode)?.annual_kwh;
    let ratio = if facade_kwh == 0.0 || rooftop_kwh == 0.0 { 0.0 } else { facade_kwh / rooftop_kwh };
    Ok(RooftopComparison { facade_kwh, rooftop_kwh, ratio })
}

fn weather_for(loaded: &LoadedFacade, cfg: &RunConfig) -> Result<WeatherSeries, BuildingError> {
    let f = &loaded.facade;
    match cfg.sky {
        Sky::ClearSky => Ok(WeatherSeries::clear_sky(
            f.latitude(),
            f.longitude(),
            cfg.year,
            &ClearSkyParams { altitude_m: loaded.altitude_m, linke_turbidity: cfg.linke_turbidity },
            cfg.clear_sky_temp_air,
            cfg.clear_sky_wind_speed,
        )),
        Sky::Tmy => {
            let dir = cfg.weather_dir.as_deref().unwrap_or(Path::new("."));
            let candidates = [f.building_id(), loaded.location.as_str()];
            match candidates
                .iter()
                .filter(|n| !n.is_empty())
                .map(|n| dir.join(format!("{n}.csv")))
                .find(|p| p.is_file())
            {
                Some(p) => Ok(load_weather(&p)?),
                None => {
                    let expected = hours_in_year(cfg.year);
                    Err(SimError::WeatherGap {
                        missing: expected,
                        expected,
                        allowed: (expected as f64 * facade_pv_core::solar::sim::MAX_MISSING_FRACTION) as usize,
                    }
                    .into())
                }
            }
        }
    }
}

/// `(attempt, reason)` for every rejected model reply.
type FailureLog = Vec<(usize, String)>;

fn layout_for(
    loaded: &LoadedFacade,
    cfg: &RunConfig,
    transport: Option<&dyn Transport>,
) -> Result<(LayoutResult, usize, FailureLog), BuildingError> {
    let f = &loaded.facade;
    match (cfg.layout_mode, transport) {
        (LayoutMode::Deterministic, _) => Ok((deterministic_layout(f, &cfg.constraints), 0, Vec::new())),
        (LayoutMode::Llm, Some(t)) => {
            let out = reason_layout(f, &cfg.constraints, &cfg.llm, t)?;
            let layout = out.layout.ok_or(BuildingError::NoLayout)?;
            Ok((layout, out.attempts_used, out.failure_log))
        }
        (LayoutMode::Llm, None) => Err(ReasonError::Transport("no transport configured".into()).into()),
    }
}

/// Runs the whole chain for one facade record. Errors end up in the row,
/// never in a panic.
pub fn run_building(record: &FacadeRecord, cfg: &RunConfig, transport: Option<&dyn Transport>) -> BuildingOutcome {
    let start = Instant::now();
    let mut timings = Timings::default();
    let location = record.location.clone().unwrap_or_default();
    let building_type = record.building_type.clone().unwrap_or_default();
    let mut failure_log = Vec::new();
    let mut layout_out = None;
    let result = (|| -> Result<BuildingReportRow, BuildingError> {
        let t = Instant::now();
        let mut loaded = record.to_facade(cfg.seed)?;
        if cfg.tidy {
            let f = &loaded.facade;
            let p = TidyParams::for_canvas(f.width_px(), f.height_px());
            let tidied = tidy_components(f.components(), p.min_area_px2, p.merge_gap_px);
            loaded.facade = f.with_components(&tidied).map_err(RecordError::from)?.0;
        }
        timings.model_s = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let (layout, attempts_used, log) = layout_for(&loaded, cfg, transport)?;
        failure_log = log;
        timings.layout_s = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let weather = weather_for(&loaded, cfg)?;
        let f = &loaded.facade;
        let array = PvArray {
            latitude: f.latitude(),
            longitude: f.longitude(),
            surface: SurfaceOrientation::facade(f.azimuth_deg()),
            area_m2: layout.total_area_m2,
            module_count: layout.modules_by_area,
        };
        let mode = cfg.mode();
        let energy = simulate(&array, &weather, &cfg.system, &mode)?;
        let rooftop = if cfg.compare_rooftop {
            Some(compare_facade_rooftop(energy.annual_kwh, &array, &weather, &cfg.system, &mode)?)
        } else {
            None
        };
        timings.energy_s = t.elapsed().as_secs_f64();

        let bias = BiasModel::default_for(ComponentClass::Wall);
        let row = BuildingReportRow {
            building_id: f.building_id().to_string(),
            location: loaded.location.clone(),
            building_type: loaded.building_type.clone(),
            error: None,
            azimuth_deg: f.azimuth_deg(),
            estimated_area_m2: layout.total_area_m2,
            bias_corrected_area_m2: correct_area(layout.total_area_m2, &bias).unwrap_or(layout.total_area_m2),
            module_count: layout.module_count,
            modules_by_area: layout.modules_by_area,
            annual_irradiation_kwh_m2: energy.annual_irradiation_kwh_m2,
            annual_yield_kwh: energy.annual_kwh,
            monthly_kwh: energy.monthly_kwh,
            provenance: Some(layout.provenance),
            attempts_used,
            missing_hours: energy.missing_hours,
            rooftop,
        };
        layout_out = Some(layout);
        Ok(row)
    })();
    timings.total_s = start.elapsed().as_secs_f64();
    let row =
        result.unwrap_or_else(|e| BuildingReportRow::failed(record.building_id.clone(), location, building_type, &e));
    BuildingOutcome { row, layout: layout_out, failure_log, timings }
}

/// Per-group sums over successful buildings.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct GroupTotals {
    pub buildings: usize,
    pub total_area_m2: f64,
    pub clearsky_kwh: Option<f64>,
    pub tmy_kwh: Option<f64>,
    pub rooftop_kwh: Option<f64>,
    pub facade_to_rooftop_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub layout_mode: LayoutMode,
    pub sky: Sky,
    pub electrical: Electrical,
    pub year: i32,
    pub seed: u64,
    /// The roof geometry is an assumption, not data.
    pub rooftop_model: Option<&'static str>,
    pub buildings: usize,
    pub failed: usize,
    pub total: GroupTotals,
    pub by_building_type: BTreeMap<String, GroupTotals>,
    pub by_location: BTreeMap<String, GroupTotals>,
}

fn totals<'a>(rows: impl Iterator<Item = &'a BuildingReportRow>, sky: Sky, rooftop: bool) -> GroupTotals {
    let mut g = GroupTotals::default();
    let mut kwh = 0.0;
    let mut roof = 0.0;
    for r in rows.filter(|r| r.ok()) {
        g.buildings += 1;
        g.total_area_m2 += r.estimated_area_m2;
        kwh += r.annual_yield_kwh;
        roof += r.rooftop.map_or(0.0, |c| c.rooftop_kwh);
    }
    match sky {
        Sky::ClearSky => g.clearsky_kwh = Some(kwh),
        Sky::Tmy => g.tmy_kwh = Some(kwh),
    }
    if rooftop {
        g.rooftop_kwh = Some(roof);
        g.facade_to_rooftop_ratio = Some(if kwh == 0.0 || roof == 0.0 { 0.0 } else { kwh / roof });
    }
    g
}

fn group_key(s: &str) -> String {
    if s.is_empty() {
        "unspecified".into()
    } else {
        s.to_string()
    }
}

/// Groups successful rows by building type and by location.
pub fn aggregate(rows: &[BuildingReportRow], cfg: &RunConfig) -> Aggregate {
    let group = |key: fn(&BuildingReportRow) -> &str| {
        let mut keys: Vec<String> = rows.iter().filter(|r| r.ok()).map(|r| group_key(key(r))).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|k| {
                let t = totals(rows.iter().filter(|r| group_key(key(r)) == k), cfg.sky, cfg.compare_rooftop);
                (k, t)
            })
            .collect()
    };
    Aggregate {
        layout_mode: cfg.layout_mode,
        sky: cfg.sky,
        electrical: cfg.electrical,
        year: cfg.year,
        seed: cfg.seed,
        rooftop_model: cfg.compare_rooftop.then_some("horizontal surface, tilt 0 deg, equal area (assumed)"),
        buildings: rows.len(),
        failed: rows.iter().filter(|r| !r.ok()).count(),
        total: totals(rows.iter(), cfg.sky, cfg.compare_rooftop),
        by_building_type: group(|r| &r.building_type),
        by_location: group(|r| &r.location),
    }
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    /// Sorted by building id.
    pub outcomes: Vec<BuildingOutcome>,
    pub aggregate: Aggregate,
}

impl BatchReport {
    pub fn rows(&self) -> impl Iterator<Item = &BuildingReportRow> {
        self.outcomes.iter().map(|o| &o.row)
    }

    pub fn all_ok(&self) -> bool {
        self.rows().all(|r| r.ok())
    }
}

fn facade_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let entries = fs::read_dir(dir).map_err(|e| PipelineError::Config(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn load_or_fail(path: &Path, cfg: &RunConfig, transport: Option<&dyn Transport>) -> BuildingOutcome {
    match FacadeRecord::load(path) {
        Ok(rec) => run_building(&rec, cfg, transport),
        Err(e) => {
            let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            BuildingOutcome {
                row: BuildingReportRow::failed(id, String::new(), String::new(), &e.into()),
                layout: None,
                failure_log: Vec::new(),
                timings: Timings::default(),
            }
        }
    }
}

/// Runs every `*.json` record in the facade directory, `cfg.jobs` at a time.
pub fn run_batch(cfg: &RunConfig, transport: Option<&dyn Transport>) -> Result<BatchReport, PipelineError> {
    cfg.validate()?;
    if cfg.layout_mode == LayoutMode::Llm && transport.is_none() {
        return Err(PipelineError::NoTransport);
    }
    let files = facade_files(&cfg.facades_dir)?;
    if files.is_empty() {
        return Err(PipelineError::EmptyBatch(cfg.facades_dir.display().to_string()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut outcomes: Vec<BuildingOutcome> =
        pool.install(|| files.par_iter().map(|p| load_or_fail(p, cfg, transport)).collect());
    // Stable, so duplicate ids keep file order.
    outcomes.sort_by(|a, b| a.row.building_id.cmp(&b.row.building_id));
    let rows: Vec<_> = outcomes.iter().map(|o| o.row.clone()).collect();
    Ok(BatchReport { aggregate: aggregate(&rows, cfg), outcomes })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// `buildings.csv`: one row per building, months as `m01..m12`.
pub fn buildings_csv(report: &BatchReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "building_id",
        "location",
        "building_type",
        "status",
        "error",
        "azimuth_deg",
        "estimated_area_m2",
        "bias_corrected_area_m2",
        "module_count",
        "modules_by_area",
        "annual_irradiation_kwh_m2",
        "annual_yield_kwh",
    ]
    .map(String::from)
    .to_vec();
    header.extend((1..=12).map(|m| format!("m{m:02}")));
    header.extend(
        ["provenance", "attempts_used", "missing_hours", "rooftop_yield_kwh", "facade_to_rooftop_ratio"]
            .map(String::from),
    );
    w.write_record(&header).expect("in-memory write");
    for r in report.rows() {
        let mut rec = vec![
            r.building_id.clone(),
            r.location.clone(),
            r.building_type.clone(),
            if r.ok() { "ok" } else { "failed" }.to_string(),
            r.error.clone().unwrap_or_default(),
            r.azimuth_deg.to_string(),
            r.estimated_area_m2.to_string(),
            r.bias_corrected_area_m2.to_string(),
            r.module_count.to_string(),
            r.modules_by_area.to_string(),
            r.annual_irradiation_kwh_m2.to_string(),
            r.annual_yield_kwh.to_string(),
        ];
        rec.extend(r.monthly_kwh.iter().map(f64::to_string));
        rec.extend([
            r.provenance.map(|p| p.to_string()).unwrap_or_default(),
            r.attempts_used.to_string(),
            r.missing_hours.to_string(),
            opt(r.rooftop.map(|c| c.rooftop_kwh)),
            opt(r.rooftop.map(|c| c.ratio)),
        ]);
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// `monthly_long.csv`: `building_id,month,kwh` for plotting.
pub fn monthly_long_csv(report: &BatchReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["building_id", "month", "kwh"]).expect("in-memory write");
    for r in report.rows().filter(|r| r.ok()) {
        for (m, kwh) in r.monthly_kwh.iter().enumerate() {
            w.write_record([r.building_id.clone(), (m + 1).to_string(), kwh.to_string()]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn timings_csv(report: &BatchReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["building_id", "model_s", "layout_s", "energy_s", "total_s"]).expect("in-memory write");
    for o in &report.outcomes {
        let t = o.timings;
        w.write_record([
            o.row.building_id.clone(),
            format!("{:.6}", t.model_s),
            format!("{:.6}", t.layout_s),
            format!("{:.6}", t.energy_s),
            format!("{:.6}", t.total_s),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn file_stem_for(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' }).collect()
}

fn write(path: &Path, contents: &str) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Write { path: path.display().to_string(), source })
}

/// Writes `buildings.csv`, `monthly_long.csv`, `aggregate.json`,
/// `layouts/<id>.json`, `llm_log.json` (llm mode) and `timings.csv`. All but
/// the timings are byte-identical across runs of the same deterministic
/// configuration.
pub fn write_reports(report: &BatchReport, out_dir: &Path) -> Result<(), PipelineError> {
    let mkdir = |p: &Path| {
        fs::create_dir_all(p).map_err(|source| PipelineError::Write { path: p.display().to_string(), source })
    };
    let layouts = out_dir.join("layouts");
    mkdir(&layouts)?;
    write(&out_dir.join("buildings.csv"), &buildings_csv(report))?;
    write(&out_dir.join("monthly_long.csv"), &monthly_long_csv(report))?;
    let agg = serde_json::to_string_pretty(&report.aggregate).expect("aggregate serializes");
    write(&out_dir.join("aggregate.json"), &(agg + "\n"))?;
    write(&out_dir.join("timings.csv"), &timings_csv(report))?;
    for o in &report.outcomes {
        if let Some(l) = &o.layout {
            let path = layouts.join(format!("{}.json", file_stem_for(&o.row.building_id)));
            write(&path, &(LayoutRecord::from_rects(&l.rectangles).to_json() + "\n"))?;
        }
    }
    if report.aggregate.layout_mode == LayoutMode::Llm {
        let log: BTreeMap<&str, &Vec<(usize, String)>> =
            report.outcomes.iter().map(|o| (o.row.building_id.as_str(), &o.failure_log)).collect();
        let text = serde_json::to_string_pretty(&log).expect("log serializes");
        write(&out_dir.join("llm_log.json"), &(text + "\n"))?;
    }
    Ok(())
}
