//! Hour-by-hour energy simulation of one facade array over a calendar year.
//!
//! Each hourly record is labelled by the start of its interval; sun geometry
//! (and clear-sky synthesis) is evaluated at the interval midpoint.

use alloc::vec::Vec;

use thiserror::Error;

use super::clearsky::{clear_sky, ClearSkyParams, IrradianceSample};
use super::diode::{max_power_point, DiodeError, SingleDiodeParams};
use super::poa::{transpose_poa, SurfaceOrientation};
use super::position::solar_position;
use super::thermal::{cell_temperature, ModuleThermalParams};
use super::time::{hours_in_year, Timestamp};
use crate::facade::FacadeDescription;
use crate::layout::LayoutResult;

/// Offset from an hour label to the instant used for sun geometry.
pub const MID_HOUR_S: i64 = 1800;
/// Largest tolerated share of missing hours in a year.
pub const MAX_MISSING_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("weather series is empty")]
    EmptySeries,
    #[error("weather timestamps misaligned at record {index}: {reason}")]
    MisalignedTimestamps { index: usize, reason: &'static str },
    #[error("{missing} of {expected} hours missing (at most {allowed} tolerated)")]
    WeatherGap { missing: usize, expected: usize, allowed: usize },
    #[error("invalid system configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Diode(#[from] DiodeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherValues {
    pub ghi: f64,
    pub dni: f64,
    pub dhi: f64,
    /// °C
    pub temp_air: f64,
    /// m/s
    pub wind_speed: f64,
}

/// One hourly row; `values` is `None` when any field was missing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherRecord {
    pub timestamp: Timestamp,
    pub values: Option<WeatherValues>,
}

/// A validated hourly year of weather.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    year: i32,
    records: Vec<WeatherRecord>,
    missing_hours: usize,
}

impl WeatherSeries {
    /// Checks that timestamps fall on whole hours, strictly increase and stay
    /// within one calendar year, and that no more than 1% of the year's hours
    /// are absent or incomplete.
    pub fn new(records: Vec<WeatherRecord>) -> Result<Self, SimError> {
        let first = records.first().ok_or(SimError::EmptySeries)?;
        let year = first.timestamp.year();
        for (index, r) in records.iter().enumerate() {
            if !r.timestamp.is_whole_hour() {
                return Err(SimError::MisalignedTimestamps { index, reason: "not on a whole hour" });
            }
            if r.timestamp.year() != year {
                return Err(SimError::MisalignedTimestamps { index, reason: "crosses a year boundary" });
            }
            if index > 0 && r.timestamp <= records[index - 1].timestamp {
                return Err(SimError::MisalignedTimestamps { index, reason: "not strictly increasing" });
            }
            if let Some(v) = r.values {
                let all = [v.ghi, v.dni, v.dhi, v.temp_air, v.wind_speed];
                if all.iter().any(|x| !x.is_finite()) {
                    return Err(SimError::MisalignedTimestamps { index, reason: "non-finite value" });
                }
            }
        }
        let expected = hours_in_year(year);
        let present = records.iter().filter(|r| r.values.is_some()).count();
        let missing = expected - present.min(expected);
        let allowed = (expected as f64 * MAX_MISSING_FRACTION) as usize;
        if missing > allowed {
            return Err(SimError::WeatherGap { missing, expected, allowed });
        }
        Ok(Self { year, records, missing_hours: missing })
    }

    /// A full year of clear-sky irradiance at `(lat, lon)` with constant air
    /// temperature and wind.
    pub fn clear_sky(lat: f64, lon: f64, year: i32, params: &ClearSkyParams, temp_air: f64, wind_speed: f64) -> Self {
        let start = Timestamp::from_ymd_hms(year, 1, 1, 0, 0, 0);
        let records = (0..hours_in_year(year) as i64)
            .map(|h| {
                let timestamp = start.plus_seconds(h * 3600);
                let pos = solar_position(lat, lon, timestamp.plus_seconds(MID_HOUR_S));
                let s = clear_sky(&pos, params);
                WeatherRecord {
                    timestamp,
                    values: Some(WeatherValues { ghi: s.ghi, dni: s.dni, dhi: s.dhi, temp_air, wind_speed }),
                }
            })
            .collect();
        Self { year, records, missing_hours: 0 }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn records(&self) -> &[WeatherRecord] {
        &self.records
    }

    pub fn missing_hours(&self) -> usize {
        self.missing_hours
    }

    /// Copy with every irradiance component multiplied by `factor`.
    pub fn scaled_irradiance(&self, factor: f64) -> Self {
        let records = self
            .records
            .iter()
            .map(|r| WeatherRecord {
                timestamp: r.timestamp,
                values: r.values.map(|v| WeatherValues {
                    ghi: v.ghi * factor,
                    dni: v.dni * factor,
                    dhi: v.dhi * factor,
                    ..v
                }),
            })
            .collect();
        Self { records, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub module_efficiency: f64,
    pub inverter_efficiency: f64,
    /// Lumped derate for wiring, soiling, mismatch and the like.
    pub other_losses: f64,
    pub module_area_m2: f64,
    /// Power temperature coefficient, 1/K.
    pub gamma: f64,
    pub thermal: ModuleThermalParams,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            module_efficiency: 0.20,
            inverter_efficiency: 0.97,
            other_losses: 0.86,
            module_area_m2: 1.2,
            gamma: -0.004,
            thermal: ModuleThermalParams::default(),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(self.module_efficiency) || !unit(self.inverter_efficiency) {
            return Err(SimError::InvalidConfig("efficiencies must lie in (0, 1]"));
        }
        if !unit(self.other_losses) {
            return Err(SimError::InvalidConfig("derate must lie in (0, 1]"));
        }
        if !(self.module_area_m2 > 0.0 && self.module_area_m2.is_finite()) {
            return Err(SimError::InvalidConfig("module area must be positive"));
        }
        if !self.gamma.is_finite() {
            return Err(SimError::InvalidConfig("temperature coefficient must be finite"));
        }
        if self.thermal.delta_t < 0.0 || self.thermal.e0 <= 0.0 {
            return Err(SimError::InvalidConfig("thermal parameters out of range"));
        }
        Ok(())
    }

    /// Combined AC-side factor `η_inv · derate`.
    pub fn ac_factor(&self) -> f64 {
        self.inverter_efficiency * self.other_losses
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ElectricalMode {
    /// Area times module efficiency with a linear temperature correction.
    #[default]
    Efficiency,
    /// Maximum power point of the single-diode model per module, photocurrent
    /// proportional to plane-of-array irradiance.
    SingleDiode(SingleDiodeParams),
}

/// What the simulation needs to know about an installation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvArray {
    pub latitude: f64,
    pub longitude: f64,
    pub surface: SurfaceOrientation,
    pub area_m2: f64,
    pub module_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourlyPoint {
    pub timestamp: Timestamp,
    /// W/m²
    pub poa: f64,
    /// °C
    pub t_cell: f64,
    /// W
    pub p_dc: f64,
    /// W
    pub p_ac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub year: i32,
    pub hourly: Vec<HourlyPoint>,
    pub monthly_kwh: [f64; 12],
    pub annual_kwh: f64,
    pub monthly_irradiation_kwh_m2: [f64; 12],
    pub annual_irradiation_kwh_m2: f64,
    pub missing_hours: usize,
}

fn power_dc(
    e_poa: f64,
    t_cell: f64,
    array: &PvArray,
    sys: &SystemConfig,
    mode: &ElectricalMode,
) -> Result<f64, SimError> {
    if e_poa <= 0.0 || array.area_m2 <= 0.0 {
        return Ok(0.0);
    }
    let temp = 1.0 + sys.gamma * (t_cell - 25.0);
    let p = match mode {
        ElectricalMode::Efficiency => e_poa * array.area_m2 * sys.module_efficiency * temp,
        ElectricalMode::SingleDiode(params) => {
            if array.module_count == 0 {
                return Ok(0.0);
            }
            let module = params.with_photocurrent_scaled(e_poa / sys.thermal.e0);
            let (_, _, p_mp) = max_power_point(&module)?;
            p_mp * temp * array.module_count as f64
        }
    };
    // The array cannot deliver more than it intercepts.
    Ok(p.max(0.0).min(e_poa * array.area_m2))
}

/// Runs every hour of `weather` through sun position, transposition, cell
/// temperature, the electrical model and the AC loss chain.
pub fn simulate(
    array: &PvArray,
    weather: &WeatherSeries,
    sys: &SystemConfig,
    mode: &ElectricalMode,
) -> Result<EnergyReport, SimError> {
    sys.validate()?;
    if let ElectricalMode::SingleDiode(p) = mode {
        p.validate()?;
    }
    let mut hourly = Vec::with_capacity(weather.records.len());
    let mut monthly_kwh = [0.0; 12];
    let mut monthly_irr = [0.0; 12];
    for r in &weather.records {
        let Some(v) = r.values else { continue };
        let pos = solar_position(array.latitude, array.longitude, r.timestamp.plus_seconds(MID_HOUR_S));
        let e_poa = if pos.is_up() {
            let irr = IrradianceSample {
                ghi: v.ghi.max(0.0),
                dni: v.dni.max(0.0),
                dhi: v.dhi.max(0.0),
                timestamp: r.timestamp,
            };
            transpose_poa(&irr, &pos, &array.surface).e_poa
        } else {
            0.0
        };
        let (_, t_cell) = cell_temperature(e_poa, v.temp_air, v.wind_speed, &sys.thermal);
        let p_dc = power_dc(e_poa, t_cell, array, sys, mode)?;
        let p_ac = p_dc * sys.ac_factor();
        let m = r.timestamp.month() as usize - 1;
        monthly_kwh[m] += p_ac / 1000.0;
        monthly_irr[m] += e_poa / 1000.0;
        hourly.push(HourlyPoint { timestamp: r.timestamp, poa: e_poa, t_cell, p_dc, p_ac });
    }
    Ok(EnergyReport {
        year: weather.year,
        hourly,
        annual_kwh: monthly_kwh.iter().sum(),
        monthly_kwh,
        annual_irradiation_kwh_m2: monthly_irr.iter().sum(),
        monthly_irradiation_kwh_m2: monthly_irr,
        missing_hours: weather.missing_hours,
    })
}

/// Simulates a facade's qualified layout: the array covers the layout's
/// total area and, in single-diode mode, `modules_by_area` modules.
pub fn simulate_year(
    facade: &FacadeDescription,
    layout: &LayoutResult,
    surface: &SurfaceOrientation,
    weather: &WeatherSeries,
    sys: &SystemConfig,
    mode: &ElectricalMode,
) -> Result<EnergyReport, SimError> {
    let array = PvArray {
        latitude: facade.latitude(),
        longitude: facade.longitude(),
        surface: *surface,
        area_m2: layout.total_area_m2,
        module_count: layout.modules_by_area,
    };
    simulate(&array, weather, sys, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn south_wall(area_m2: f64) -> PvArray {
        PvArray {
            latitude: 39.08,
            longitude: 117.2,
            surface: SurfaceOrientation::facade(180.0),
            area_m2,
            module_count: (area_m2 / 1.2) as u32,
        }
    }

    fn hour(t: Timestamp, v: Option<WeatherValues>) -> WeatherRecord {
        WeatherRecord { timestamp: t, values: v }
    }

    #[test]
    fn clear_sky_year_lengths() {
        let p = ClearSkyParams::default();
        assert_eq!(WeatherSeries::clear_sky(39.0, 117.0, 2023, &p, 20.0, 1.0).records().len(), 8760);
        assert_eq!(WeatherSeries::clear_sky(39.0, 117.0, 2024, &p, 20.0, 1.0).records().len(), 8784);
    }

    #[test]
    fn zero_area_yields_nothing() {
        let w = WeatherSeries::clear_sky(39.08, 117.2, 2023, &ClearSkyParams::default(), 20.0, 1.0);
        let r = simulate(&south_wall(0.0), &w, &SystemConfig::default(), &ElectricalMode::Efficiency).unwrap();
        assert_eq!(r.annual_kwh, 0.0);
        assert!(r.annual_irradiation_kwh_m2 > 0.0);
    }

    #[test]
    fn gap_and_alignment_errors() {
        let t0 = Timestamp::from_ymd_hms(2023, 1, 1, 0, 0, 0);
        let v = WeatherValues { ghi: 0.0, dni: 0.0, dhi: 0.0, temp_air: 10.0, wind_speed: 1.0 };
        let full: Vec<_> = (0..8760).map(|h| hour(t0.plus_seconds(h * 3600), Some(v))).collect();
        assert!(WeatherSeries::new(full.clone()).is_ok());

        let mut gappy = full.clone();
        for r in gappy.iter_mut().take(87) {
            r.values = None;
        }
        assert_eq!(WeatherSeries::new(gappy.clone()).unwrap().missing_hours(), 87);
        gappy[87].values = None;
        assert!(matches!(WeatherSeries::new(gappy), Err(SimError::WeatherGap { missing: 88, .. })));

        let mut off = full.clone();
        off[5].timestamp = off[5].timestamp.plus_seconds(60);
        assert!(matches!(WeatherSeries::new(off), Err(SimError::MisalignedTimestamps { index: 5, .. })));

        let mut swapped = full;
        swapped.swap(10, 11);
        assert!(matches!(WeatherSeries::new(swapped), Err(SimError::MisalignedTimestamps { index: 11, .. })));
    }

    #[test]
    fn one_bright_hour() {
        // Flat surface lit by diffuse light only: e_poa is exactly the DHI.
        let t0 = Timestamp::from_ymd_hms(2024, 3, 20, 11, 0, 0);
        let pos = solar_position(0.0, 0.0, t0.plus_seconds(MID_HOUR_S));
        let ghi = 1000.0;
        let array = PvArray {
            latitude: 0.0,
            longitude: 0.0,
            surface: SurfaceOrientation::new(0.0, 180.0, 0.2).unwrap(),
            area_m2: 1.0,
            module_count: 0,
        };
        let mut records: Vec<_> = (0..8784)
            .map(|h| {
                let t = Timestamp::from_ymd_hms(2024, 1, 1, 0, 0, 0).plus_seconds(h * 3600);
                hour(t, Some(WeatherValues { ghi: 0.0, dni: 0.0, dhi: 0.0, temp_air: 25.0, wind_speed: 1.0 }))
            })
            .collect();
        let idx = records.iter().position(|r| r.timestamp == t0).unwrap();
        records[idx].values = Some(WeatherValues { ghi, dni: 0.0, dhi: ghi, temp_air: 25.0, wind_speed: 1.0 });
        let w = WeatherSeries::new(records).unwrap();
        let sys = SystemConfig { other_losses: 1.0, gamma: 0.0, ..Default::default() };
        let r = simulate(&array, &w, &sys, &ElectricalMode::Efficiency).unwrap();
        assert!(pos.is_up());
        assert!((r.annual_kwh - 0.194).abs() < 1e-12, "{}", r.annual_kwh);
        assert!((r.annual_irradiation_kwh_m2 - 1.0).abs() < 1e-12);
    }
}
