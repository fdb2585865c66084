//! Hourly photovoltaic physics: sun position, clear-sky irradiance,
//! plane-of-array transposition, module temperature, the single-diode
//! electrical model and the annual energy simulation.

pub mod clearsky;
pub mod diode;
pub mod poa;
pub mod position;
pub mod sim;
pub mod thermal;
pub mod time;

pub use clearsky::{clear_sky, ClearSkyParams, IrradianceSample};
pub use diode::{diode_current, max_power_point, open_circuit_voltage, DiodeError, SingleDiodeParams};
pub use poa::{aoi, transpose_poa, PoaComponents, SurfaceOrientation};
pub use position::{solar_position, SolarPosition};
pub use sim::{
    simulate, simulate_year, ElectricalMode, EnergyReport, HourlyPoint, PvArray, SimError, SystemConfig, WeatherRecord,
    WeatherSeries, WeatherValues,
};
pub use thermal::{cell_temperature, ModuleThermalParams};
pub use time::Timestamp;
