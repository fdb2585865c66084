//! Ineichen–Perez clear-sky irradiance with Kasten–Young air mass and the
//! Spencer extraterrestrial irradiance series.

use core::f64::consts::PI;

use libm::{cos, exp, pow, sin};

use super::position::SolarPosition;
use super::time::Timestamp;

pub const SOLAR_CONSTANT: f64 = 1366.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearSkyParams {
    pub altitude_m: f64,
    pub linke_turbidity: f64,
}

impl Default for ClearSkyParams {
    fn default() -> Self {
        Self { altitude_m: 0.0, linke_turbidity: 3.0 }
    }
}

/// Horizontal and normal irradiance components, W/m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrradianceSample {
    pub ghi: f64,
    pub dni: f64,
    pub dhi: f64,
    pub timestamp: Timestamp,
}

impl IrradianceSample {
    pub fn dark(timestamp: Timestamp) -> Self {
        Self { ghi: 0.0, dni: 0.0, dhi: 0.0, timestamp }
    }
}

/// Extraterrestrial normal irradiance for a 1-based day of year.
pub fn extraterrestrial_normal(day_of_year: u32) -> f64 {
    let b = 2.0 * PI / 365.0 * (day_of_year as f64 - 1.0);
    let r = 1.00011 + 0.034221 * cos(b) + 0.00128 * sin(b) + 0.000719 * cos(2.0 * b) + 7.7e-5 * sin(2.0 * b);
    SOLAR_CONSTANT * r
}

/// Kasten–Young relative air mass; `None` with the sun below the horizon.
pub fn relative_airmass(zenith_deg: f64) -> Option<f64> {
    if zenith_deg > 90.0 {
        return None;
    }
    Some(1.0 / (cos(zenith_deg.to_radians()) + 0.50572 * pow(6.07995 + 90.0 - zenith_deg, -1.6364)))
}

/// Standard-atmosphere pressure (Pa) at an altitude in metres.
pub fn altitude_to_pressure(altitude_m: f64) -> f64 {
    100.0 * pow((44331.514 - altitude_m) / 11880.516, 1.0 / 0.1902632)
}

/// The Ineichen–Perez closed form for an apparent zenith, absolute air mass
/// and extraterrestrial normal irradiance. Returns `(ghi, dni, dhi)`.
pub fn ineichen(
    apparent_zenith: f64,
    airmass_absolute: f64,
    linke_turbidity: f64,
    altitude_m: f64,
    dni_extra: f64,
) -> (f64, f64, f64) {
    let cos_z = cos(apparent_zenith.to_radians()).max(0.0);
    if cos_z <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let tl = linke_turbidity;
    let fh1 = exp(-altitude_m / 8000.0);
    let fh2 = exp(-altitude_m / 1250.0);
    let cg1 = 5.09e-5 * altitude_m + 0.868;
    let cg2 = 3.92e-5 * altitude_m + 0.0387;

    let ghi = cg1 * dni_extra * cos_z * exp(-cg2 * airmass_absolute * (fh1 + fh2 * (tl - 1.0))).max(0.0);
    let b = 0.664 + 0.163 / fh1;
    let bnci = dni_extra * (b * exp(-0.09 * airmass_absolute * (tl - 1.0))).max(0.0);
    let bnci_2 = ghi * ((1.0 - (0.1 - 0.2 * exp(-tl)) / (0.1 + 0.882 / fh1)) / cos_z).clamp(0.0, 1e20);
    let dni = bnci.min(bnci_2);
    let dhi = ghi - dni * cos_z;
    (ghi, dni, dhi)
}

/// Clear-sky irradiance at a sun position; zero at night.
pub fn clear_sky(pos: &SolarPosition, params: &ClearSkyParams) -> IrradianceSample {
    let Some(am) = relative_airmass(pos.zenith) else {
        return IrradianceSample::dark(pos.timestamp);
    };
    if !pos.is_up() {
        return IrradianceSample::dark(pos.timestamp);
    }
    let am_abs = am * altitude_to_pressure(params.altitude_m) / 101_325.0;
    let extra = extraterrestrial_normal(pos.timestamp.day_of_year());
    let (ghi, dni, dhi) = ineichen(pos.zenith, am_abs, params.linke_turbidity, params.altitude_m, extra);
    IrradianceSample { ghi, dni, dhi, timestamp: pos.timestamp }
}
