use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use facade_pv::eval::{evaluate, EvalInputs, DEFAULT_TOLERANCE_PX};
use facade_pv::llm::{HttpTransport, LlmConfig, MockTransport, Throttled, Transport};
use facade_pv::pipeline::{run_batch, write_reports, Electrical, LayoutMode, RunConfig, Sky};
use log::{error, info, warn};

#[derive(Parser)]
#[command(name = "facade-pv", version, about = "Facade photovoltaic potential assessment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lay out panels and simulate a year of yield for every facade record.
    Assess(Box<AssessArgs>),
    /// Score predicted layouts (and optionally segmentations) against truth.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Deterministic,
    Llm,
}

#[derive(Clone, Copy, ValueEnum)]
enum SkyArg {
    Clearsky,
    Tmy,
}

#[derive(Clone, Copy, ValueEnum)]
enum ElectricalArg {
    Efficiency,
    SingleDiode,
}

#[derive(Args)]
struct AssessArgs {
    /// Directory of facade records (*.json).
    #[arg(long)]
    facades: PathBuf,
    /// Directory of hourly weather CSVs named <building_id>.csv or <location>.csv.
    #[arg(long)]
    weather: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "deterministic")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "clearsky")]
    sky: SkyArg,
    #[arg(long, value_enum, default_value = "efficiency")]
    electrical: ElectricalArg,
    /// Output directory for reports.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Minimum short edge of an installable rectangle, metres.
    #[arg(long)]
    min_short_edge: Option<f64>,
    /// Minimum long edge of an installable rectangle, metres.
    #[arg(long)]
    min_long_edge: Option<f64>,
    /// Clearance kept free along wall edges, metres.
    #[arg(long)]
    edge_margin: Option<f64>,
    /// Year used for synthesized clear-sky weather.
    #[arg(long, default_value_t = 2023)]
    year: i32,
    #[arg(long, default_value_t = 3.0)]
    linke_turbidity: f64,
    /// Also simulate each facade's area as a horizontal roof.
    #[arg(long)]
    rooftop: bool,
    /// Merge near-touching boxes and drop specks before layout.
    #[arg(long)]
    tidy: bool,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct LlmArgs {
    /// Chat-completion endpoint URL.
    #[arg(long)]
    llm_endpoint: Option<String>,
    #[arg(long)]
    llm_model: Option<String>,
    /// Header that carries the credential.
    #[arg(long)]
    llm_auth_header: Option<String>,
    /// Environment variable holding the credential.
    #[arg(long)]
    llm_auth_env: Option<String>,
    #[arg(long)]
    llm_max_attempts: Option<usize>,
    /// Per-request timeout, seconds.
    #[arg(long)]
    llm_timeout: Option<u64>,
    #[arg(long)]
    llm_max_in_flight: Option<usize>,
    #[arg(long)]
    llm_temperature: Option<f64>,
    /// Replay replies from a JSON array of strings instead of calling out.
    #[arg(long)]
    llm_mock: Option<PathBuf>,
    /// Report a failure instead of using the deterministic layout.
    #[arg(long)]
    no_fallback: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Facade records providing each building's scale.
    #[arg(long)]
    facades: PathBuf,
    /// Ground-truth layout records, <building_id>.json.
    #[arg(long)]
    truth: PathBuf,
    /// Predicted layout records, <building_id>.json.
    #[arg(long)]
    pred: PathBuf,
    /// Predicted facade records, compared class by class with --facades.
    #[arg(long)]
    pred_facades: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE_PX)]
    tolerance_px: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn llm_config(a: &LlmArgs) -> LlmConfig {
    let mut c = LlmConfig::default();
    if let Some(v) = &a.llm_endpoint {
        c.endpoint_url = v.clone();
    }
    if let Some(v) = &a.llm_model {
        c.model_name = v.clone();
    }
    if let Some(v) = &a.llm_auth_header {
        c.auth_header = v.clone();
    }
    if let Some(v) = &a.llm_auth_env {
        c.auth_env = v.clone();
    }
    if let Some(v) = a.llm_max_attempts {
        c.max_attempts = v;
    }
    if let Some(v) = a.llm_timeout {
        c.timeout_s = v;
    }
    if let Some(v) = a.llm_max_in_flight {
        c.max_in_flight = v;
    }
    if let Some(v) = a.llm_temperature {
        c.temperature = v;
    }
    c.fallback = !a.no_fallback;
    c
}

fn assess(a: AssessArgs) -> Result<bool, String> {
    let mut cfg = RunConfig::new(&a.facades, &a.out);
    cfg.weather_dir = a.weather.clone();
    cfg.layout_mode = match a.mode {
        ModeArg::Deterministic => LayoutMode::Deterministic,
        ModeArg::Llm => LayoutMode::Llm,
    };
    cfg.sky = match a.sky {
        SkyArg::Clearsky => Sky::ClearSky,
        SkyArg::Tmy => Sky::Tmy,
    };
    cfg.electrical = match a.electrical {
        ElectricalArg::Efficiency => Electrical::Efficiency,
        ElectricalArg::SingleDiode => Electrical::SingleDiode,
    };
    cfg.seed = a.seed;
    cfg.jobs = a.jobs;
    cfg.year = a.year;
    cfg.linke_turbidity = a.linke_turbidity;
    cfg.compare_rooftop = a.rooftop;
    cfg.tidy = a.tidy;
    if let Some(v) = a.min_short_edge {
        cfg.constraints.min_short_edge_m = v;
    }
    if let Some(v) = a.min_long_edge {
        cfg.constraints.min_long_edge_m = v;
    }
    if let Some(v) = a.edge_margin {
        cfg.constraints.edge_margin_m = v;
    }
    cfg.llm = llm_config(&a.llm);

    let inner: Option<Box<dyn Transport>> = match (cfg.layout_mode, &a.llm.llm_mock) {
        (LayoutMode::Deterministic, _) => None,
        (LayoutMode::Llm, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mock = MockTransport::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            Some(Box::new(mock))
        }
        (LayoutMode::Llm, None) => {
            if std::env::var(&cfg.llm.auth_env).is_err() {
                warn!("{} is not set; sending requests without credentials", cfg.llm.auth_env);
            }
            Some(Box::new(HttpTransport::new(&cfg.llm)))
        }
    };
    let throttled = inner.map(|t| Throttled::new(t, cfg.llm.max_in_flight));
    let transport = throttled.as_ref().map(|t| t as &dyn Transport);

    let report = run_batch(&cfg, transport).map_err(|e| e.to_string())?;
    write_reports(&report, &cfg.out_dir).map_err(|e| e.to_string())?;
    for r in report.rows() {
        match &r.error {
            None => info!(
                "{}: {:.2} m2, {:.1} kWh/yr ({})",
                r.building_id,
                r.estimated_area_m2,
                r.annual_yield_kwh,
                r.provenance.map(|p| p.as_str()).unwrap_or("-")
            ),
            Some(e) => error!("{}: {e}", r.building_id),
        }
    }
    let agg = &report.aggregate;
    println!("{} buildings, {} failed; reports in {}", agg.buildings, agg.failed, cfg.out_dir.display());
    Ok(report.all_ok())
}

fn run_evaluate(a: EvaluateArgs) -> Result<(), String> {
    let report = evaluate(&EvalInputs {
        facades: a.facades,
        truth: a.truth,
        pred: a.pred,
        pred_facades: a.pred_facades,
        tolerance_px: a.tolerance_px,
    })
    .map_err(|e| e.to_string())?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match a.out {
        Some(p) => fs::write(&p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Assess(a) => match assess(*a) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(2),
            Err(e) => {
                error!("{e}");
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Command::Evaluate(a) => match run_evaluate(a) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
