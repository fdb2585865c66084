use std::fs;
use std::path::{Path, PathBuf};

use facade_pv::io::{write_weather_csv, FacadeRecord};
use facade_pv::llm::MockTransport;
use facade_pv::pipeline::{
    aggregate, compare_facade_rooftop, run_batch, run_building, write_reports, Electrical, LayoutMode, PipelineError,
    RunConfig, Sky,
};
use facade_pv_core::layout::Provenance;
use facade_pv_core::solar::clearsky::ClearSkyParams;
use facade_pv_core::solar::{ElectricalMode, PvArray, SurfaceOrientation, SystemConfig, WeatherSeries};
use tempfile::TempDir;

fn stub() -> FacadeRecord {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata/facades/worked_example.json");
    FacadeRecord::load(&p).unwrap()
}

fn variant(id: &str, location: &str, kind: &str, azimuth: f64) -> FacadeRecord {
    let mut r = stub();
    r.building_id = id.into();
    r.location = Some(location.into());
    r.building_type = Some(kind.into());
    r.azimuth_deg = azimuth;
    r
}

fn write_records(dir: &Path, records: &[FacadeRecord]) {
    fs::create_dir_all(dir).unwrap();
    for r in records {
        fs::write(dir.join(format!("{}.json", r.building_id)), r.to_json()).unwrap();
    }
}

fn batch_dir(records: &[FacadeRecord]) -> TempDir {
    let tmp = TempDir::new().unwrap();
    write_records(&tmp.path().join("facades"), records);
    tmp
}

fn config(tmp: &TempDir) -> RunConfig {
    RunConfig::new(tmp.path().join("facades"), tmp.path().join("out"))
}

#[test]
fn reference_facade_yields_a_sane_row() {
    let tmp = TempDir::new().unwrap();
    let out = run_building(&stub(), &config(&tmp), None);
    let row = out.row;
    assert!(row.ok(), "{:?}", row.error);
    // Wall area minus every obstruction bounds the installable area.
    assert!(row.estimated_area_m2 <= 54.6 + 1e-9);
    assert!((row.estimated_area_m2 - 28.05).abs() < 1e-9);
    assert!(row.annual_yield_kwh > 0.0);
    let sum: f64 = row.monthly_kwh.iter().sum();
    assert!((sum - row.annual_yield_kwh).abs() <= 1e-9 * row.annual_yield_kwh);
    assert_eq!(row.provenance, Some(Provenance::Deterministic));
    assert_eq!(row.attempts_used, 0);
    assert_eq!(row.missing_hours, 0);
    assert!(row.rooftop.is_none());
    assert_eq!(out.layout.unwrap().rectangles.len(), 3);
}

#[test]
fn fully_obstructed_facade_yields_zero_without_error() {
    let mut r = stub();
    r.components.truncate(2);
    r.components[1].bbox = [0.0, 0.0, 1200.0, 800.0];
    let tmp = TempDir::new().unwrap();
    let mut cfg = config(&tmp);
    cfg.compare_rooftop = true;
    let row = run_building(&r, &cfg, None).row;
    assert!(row.ok(), "{:?}", row.error);
    assert_eq!(row.estimated_area_m2, 0.0);
    assert_eq!(row.annual_yield_kwh, 0.0);
    assert_eq!(row.module_count, 0);
    assert_eq!(row.rooftop.unwrap().ratio, 0.0);
}

#[test]
fn missing_weather_is_a_per_building_error() {
    let tmp = batch_dir(&[stub()]);
    fs::create_dir_all(tmp.path().join("weather")).unwrap();
    let mut cfg = config(&tmp);
    cfg.sky = Sky::Tmy;
    cfg.weather_dir = Some(tmp.path().join("weather"));
    let report = run_batch(&cfg, None).unwrap();
    assert!(!report.all_ok());
    let row = report.rows().next().unwrap();
    assert!(row.error.as_deref().unwrap().contains("8760 of 8760 hours missing"), "{:?}", row.error);
    assert_eq!(report.aggregate.failed, 1);
    assert_eq!(report.aggregate.total.buildings, 0);
}

#[test]
fn tmy_file_matching_clear_sky_reproduces_the_clear_sky_yield() {
    let tmp = batch_dir(&[stub()]);
    let wdir = tmp.path().join("weather");
    fs::create_dir_all(&wdir).unwrap();
    let cfg = config(&tmp);
    let w = WeatherSeries::clear_sky(
        39.08,
        117.2,
        cfg.year,
        &ClearSkyParams { altitude_m: 0.0, linke_turbidity: cfg.linke_turbidity },
        cfg.clear_sky_temp_air,
        cfg.clear_sky_wind_speed,
    );
    let mut f = fs::File::create(wdir.join("Tianjin.csv")).unwrap();
    write_weather_csv(&w, &mut f).unwrap();
    drop(f);

    let clear = run_batch(&cfg, None).unwrap();
    let mut tmy_cfg = config(&tmp);
    tmy_cfg.sky = Sky::Tmy;
    tmy_cfg.weather_dir = Some(wdir);
    let tmy = run_batch(&tmy_cfg, None).unwrap();
    let (a, b) = (clear.rows().next().unwrap(), tmy.rows().next().unwrap());
    assert!(b.ok(), "{:?}", b.error);
    assert_eq!(a.annual_yield_kwh, b.annual_yield_kwh);
    assert_eq!(tmy.aggregate.total.tmy_kwh, Some(b.annual_yield_kwh));
    assert_eq!(tmy.aggregate.total.clearsky_kwh, None);
}

#[test]
fn single_building_aggregate_equals_its_row() {
    let tmp = batch_dir(&[stub()]);
    let mut cfg = config(&tmp);
    cfg.compare_rooftop = true;
    let report = run_batch(&cfg, None).unwrap();
    let row = report.rows().next().unwrap().clone();
    let t = &report.aggregate.total;
    assert_eq!(t.buildings, 1);
    assert_eq!(t.total_area_m2, row.estimated_area_m2);
    assert_eq!(t.clearsky_kwh, Some(row.annual_yield_kwh));
    let roof = row.rooftop.unwrap();
    assert_eq!(t.rooftop_kwh, Some(roof.rooftop_kwh));
    assert_eq!(t.facade_to_rooftop_ratio, Some(roof.ratio));
    assert_eq!(roof.ratio, row.annual_yield_kwh / roof.rooftop_kwh);
    assert!(roof.ratio > 0.0 && roof.ratio < 1.0);
}

#[test]
fn group_totals_add_up() {
    let records = [
        variant("a", "Tianjin", "low-rise", 180.0),
        variant("b", "Tianjin", "high-rise", 90.0),
        variant("c", "", "low-rise", 270.0),
        variant("d", "Beijing", "", 135.0),
    ];
    let tmp = batch_dir(&records);
    let report = run_batch(&config(&tmp), None).unwrap();
    let agg = &report.aggregate;
    let total = agg.total.clearsky_kwh.unwrap();
    let sum = |m: &std::collections::BTreeMap<String, facade_pv::pipeline::GroupTotals>| {
        m.values().map(|g| g.clearsky_kwh.unwrap()).sum::<f64>()
    };
    assert!((sum(&agg.by_location) - total).abs() < 1e-9 * total);
    assert!((sum(&agg.by_building_type) - total).abs() < 1e-9 * total);
    assert!(agg.by_location.contains_key("unspecified"));
    assert!(agg.by_building_type.contains_key("unspecified"));
    assert_eq!(agg.by_location["Tianjin"].buildings, 2);

    let rows: Vec<_> = report.rows().cloned().collect();
    assert_eq!(&aggregate(&rows, &config(&tmp)), agg);
}

#[test]
fn rooftop_ratio_is_one_for_a_horizontal_array() {
    let w = WeatherSeries::clear_sky(39.08, 117.2, 2023, &ClearSkyParams::default(), 20.0, 1.0);
    let array = PvArray {
        latitude: 39.08,
        longitude: 117.2,
        surface: SurfaceOrientation { tilt: 0.0, azimuth: 180.0, albedo: 0.2 },
        area_m2: 20.0,
        module_count: 16,
    };
    let sys = SystemConfig::default();
    let mode = ElectricalMode::Efficiency;
    let own = facade_pv_core::solar::simulate(&array, &w, &sys, &mode).unwrap().annual_kwh;
    let c = compare_facade_rooftop(own, &array, &w, &sys, &mode).unwrap();
    assert_eq!(c.ratio, 1.0);
    assert_eq!(compare_facade_rooftop(0.0, &array, &w, &sys, &mode).unwrap().ratio, 0.0);
}

fn read_reports(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for name in ["buildings.csv", "monthly_long.csv", "aggregate.json"] {
        out.push((name.to_string(), fs::read(dir.join(name)).unwrap()));
    }
    let mut layouts: Vec<_> = fs::read_dir(dir.join("layouts")).unwrap().map(|e| e.unwrap().path()).collect();
    layouts.sort();
    for p in layouts {
        out.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
    }
    out
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let records: Vec<_> = (0..6)
        .map(|i| variant(&format!("b{i}"), ["X", "Y"][i % 2], ["low", "high"][i % 2], 90.0 + 30.0 * i as f64))
        .collect();
    let tmp = batch_dir(&records);
    let mut runs = Vec::new();
    for (jobs, out) in [(1, "o1"), (4, "o2"), (3, "o3")] {
        let mut cfg = config(&tmp);
        cfg.jobs = jobs;
        cfg.compare_rooftop = true;
        cfg.electrical = Electrical::SingleDiode;
        cfg.out_dir = tmp.path().join(out);
        let report = run_batch(&cfg, None).unwrap();
        write_reports(&report, &cfg.out_dir).unwrap();
        assert!(cfg.out_dir.join("timings.csv").is_file());
        runs.push(read_reports(&cfg.out_dir));
    }
    assert_eq!(runs[0].len(), 3 + 6);
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn stricter_size_limits_never_add_area() {
    let tmp = batch_dir(&[stub()]);
    let mut last = f64::INFINITY;
    for (s, l) in [(0.5, 0.6), (1.0, 1.2), (1.5, 2.0), (2.0, 3.0), (3.0, 5.0), (10.0, 10.0)] {
        let mut cfg = config(&tmp);
        cfg.constraints.min_short_edge_m = s;
        cfg.constraints.min_long_edge_m = l;
        let row = run_building(&stub(), &cfg, None).row;
        assert!(row.estimated_area_m2 <= last, "{s} {l}");
        last = row.estimated_area_m2;
    }
    assert_eq!(last, 0.0);
}

#[test]
fn configuration_errors_stop_the_batch() {
    let tmp = TempDir::new().unwrap();
    fs::create_dir_all(tmp.path().join("facades")).unwrap();
    assert!(matches!(run_batch(&config(&tmp), None), Err(PipelineError::EmptyBatch(_))));

    let tmp = batch_dir(&[stub()]);
    let mut cfg = config(&tmp);
    cfg.sky = Sky::Tmy;
    assert!(matches!(run_batch(&cfg, None), Err(PipelineError::Config(_))));

    let mut cfg = config(&tmp);
    cfg.layout_mode = LayoutMode::Llm;
    assert!(matches!(run_batch(&cfg, None), Err(PipelineError::NoTransport)));

    let mut cfg = config(&tmp);
    cfg.constraints.min_short_edge_m = -1.0;
    assert!(matches!(run_batch(&cfg, None), Err(PipelineError::Config(_))));

    let cfg = RunConfig::new(tmp.path().join("nope"), tmp.path().join("out"));
    assert!(matches!(run_batch(&cfg, None), Err(PipelineError::Config(_))));
}

#[test]
fn unreadable_records_fail_alone() {
    let tmp = batch_dir(&[stub()]);
    fs::write(tmp.path().join("facades/broken.json"), "{ not json").unwrap();
    let report = run_batch(&config(&tmp), None).unwrap();
    let rows: Vec<_> = report.rows().collect();
    assert_eq!(rows.len(), 2);
    let broken = rows.iter().find(|r| r.building_id == "broken").unwrap();
    assert!(broken.error.is_some());
    assert!(rows.iter().find(|r| r.building_id == "worked_example").unwrap().ok());
    assert_eq!(report.aggregate.failed, 1);
}

#[test]
fn llm_mode_batch_writes_its_log() {
    let reply = r#"{"installable_rectangles": [[450, 200, 850, 400], [0, 520, 600, 800], [750, 520, 1200, 800]]}"#;
    let tmp = batch_dir(&[stub()]);
    let mut cfg = config(&tmp);
    cfg.layout_mode = LayoutMode::Llm;
    let t = MockTransport::new(["garbage", reply]);
    let report = run_batch(&cfg, Some(&t)).unwrap();
    let row = report.rows().next().unwrap();
    assert_eq!(row.provenance, Some(Provenance::LlmValidated));
    assert_eq!(row.attempts_used, 2);
    write_reports(&report, &cfg.out_dir).unwrap();
    let log: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.out_dir.join("llm_log.json")).unwrap()).unwrap();
    assert_eq!(log["worked_example"].as_array().unwrap().len(), 1);
    let csv = fs::read_to_string(cfg.out_dir.join("buildings.csv")).unwrap();
    assert!(csv.contains("llm_validated"));
}
