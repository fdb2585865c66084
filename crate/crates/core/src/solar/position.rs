//! Sun position from the NOAA solar calculator formulas (Meeus low-precision
//! series), good to a few hundredths of a degree for dates within a few
//! centuries of J2000. Includes the NOAA atmospheric refraction correction.

use libm::{acos, asin, atan2, cos, sin, tan};

use super::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarPosition {
    /// Apparent (refraction-corrected) zenith angle, degrees.
    pub zenith: f64,
    /// Degrees clockwise from true north, `[0, 360)`.
    pub azimuth: f64,
    /// `90 − zenith`.
    pub apparent_elevation: f64,
    pub timestamp: Timestamp,
}

impl SolarPosition {
    /// Builds a position directly from angles (useful for tests and for
    /// externally supplied ephemerides).
    pub fn from_angles(zenith: f64, azimuth: f64, timestamp: Timestamp) -> Self {
        Self { zenith, azimuth: crate::wrap(azimuth, 360.0), apparent_elevation: 90.0 - zenith, timestamp }
    }

    pub fn is_up(&self) -> bool {
        self.zenith < 90.0
    }
}

#[inline]
fn rad(d: f64) -> f64 {
    d.to_radians()
}

#[inline]
fn deg(r: f64) -> f64 {
    r.to_degrees()
}

/// Atmospheric refraction in degrees for a geometric elevation in degrees.
fn refraction(elev: f64) -> f64 {
    let arcsec = if elev > 85.0 {
        0.0
    } else if elev > 5.0 {
        let t = tan(rad(elev));
        58.1 / t - 0.07 / (t * t * t) + 0.000086 / (t * t * t * t * t)
    } else if elev > -0.575 {
        1735.0 + elev * (-518.2 + elev * (103.4 + elev * (-12.79 + elev * 0.711)))
    } else {
        -20.772 / tan(rad(elev))
    };
    arcsec / 3600.0
}

/// Solar declination (degrees) and equation of time (minutes).
pub fn declination_and_eot(t: Timestamp) -> (f64, f64) {
    let jc = (t.julian_day() - 2_451_545.0) / 36_525.0;
    let l0 = crate::wrap(280.46646 + jc * (36000.76983 + jc * 0.0003032), 360.0);
    let m = 357.52911 + jc * (35999.05029 - 0.0001537 * jc);
    let e = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc);
    let c = sin(rad(m)) * (1.914602 - jc * (0.004817 + 0.000014 * jc))
        + sin(rad(2.0 * m)) * (0.019993 - 0.000101 * jc)
        + sin(rad(3.0 * m)) * 0.000289;
    let true_long = l0 + c;
    let omega = 125.04 - 1934.136 * jc;
    let app_long = true_long - 0.00569 - 0.00478 * sin(rad(omega));
    let eps0 = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0;
    let eps = eps0 + 0.00256 * cos(rad(omega));
    let decl = deg(asin(sin(rad(eps)) * sin(rad(app_long))));
    let y = tan(rad(eps / 2.0)) * tan(rad(eps / 2.0));
    let eot = 4.0
        * deg(y * sin(2.0 * rad(l0)) - 2.0 * e * sin(rad(m)) + 4.0 * e * y * sin(rad(m)) * cos(2.0 * rad(l0))
            - 0.5 * y * y * sin(4.0 * rad(l0))
            - 1.25 * e * e * sin(2.0 * rad(m)));
    (decl, eot)
}

/// Sun position seen from `(lat, lon)` (degrees, east positive) at `t`.
pub fn solar_position(lat: f64, lon: f64, t: Timestamp) -> SolarPosition {
    let (decl, eot) = declination_and_eot(t);
    let minutes = t.seconds_of_day() as f64 / 60.0;
    let tst = crate::wrap(minutes + eot + 4.0 * lon, 1440.0);
    let mut ha = tst / 4.0 - 180.0;
    if ha < -180.0 {
        ha += 360.0;
    }
    let (phi, delta, h) = (rad(lat), rad(decl), rad(ha));
    let cos_zen = (sin(phi) * sin(delta) + cos(phi) * cos(delta) * cos(h)).clamp(-1.0, 1.0);
    let zen = deg(acos(cos_zen));
    let az = deg(atan2(sin(h), cos(h) * sin(phi) - tan(delta) * cos(phi))) + 180.0;
    let elev = 90.0 - zen;
    let app_elev = elev + refraction(elev);
    SolarPosition::from_angles(90.0 - app_elev, az, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Time of local solar noon (UTC seconds of day) found by scanning.
    fn noon(lat: f64, lon: f64, y: i32, m: u32, d: u32) -> SolarPosition {
        let start = Timestamp::from_ymd_hms(y, m, d, 0, 0, 0);
        (0..86_400)
            .step_by(30)
            .map(|s| solar_position(lat, lon, start.plus_seconds(s)))
            .min_by(|a, b| a.zenith.total_cmp(&b.zenith))
            .unwrap()
    }

    #[test]
    fn equator_equinox_noon_is_overhead() {
        let p = noon(0.0, 0.0, 2024, 3, 20);
        assert!(p.zenith < 1.0, "{p:?}");
    }

    #[test]
    fn tianjin_winter_solstice_noon() {
        let p = noon(39.08, 117.20, 2023, 12, 21);
        let expected = 90.0 - 39.08 - 23.44;
        assert!((p.apparent_elevation - expected).abs() < 0.5, "{p:?}");
        assert!((p.azimuth - 180.0).abs() < 1.0);
    }

    #[test]
    fn midnight_sun_is_down() {
        // 117.2° E: local midnight is about 16:10 UTC.
        let p = solar_position(39.08, 117.20, Timestamp::from_ymd_hms(2023, 6, 1, 16, 10, 0));
        assert!(p.zenith > 90.0);
        assert!((p.apparent_elevation + p.zenith - 90.0).abs() < 1e-12);
    }

    #[test]
    fn matches_reference_ephemeris() {
        // (lat, lon, y, m, d, h, min, apparent zenith, azimuth) from the NREL
        // SPA implementation in pvlib, sun above the horizon only.
        let cases = [
            (40.0, -105.0, 2023, 6, 21, 18, 0, 21.072456, 137.161339),
            (39.08, 117.2, 2023, 12, 21, 4, 0, 62.519890, 177.681615),
            (39.08, 117.2, 2023, 9, 10, 7, 30, 56.769097, 246.581832),
            (62.47, 6.15, 2023, 6, 21, 18, 0, 71.852765, 286.160152),
            (62.47, 6.15, 2024, 3, 20, 12, 0, 62.378714, 184.878804),
            (62.47, 6.15, 2023, 9, 10, 7, 30, 72.308766, 114.352434),
        ];
        for (lat, lon, y, m, d, h, mi, zen, az) in cases {
            let p = solar_position(lat, lon, Timestamp::from_ymd_hms(y, m, d, h, mi, 0));
            assert!((p.zenith - zen).abs() < 0.05, "{p:?} vs {zen}");
            assert!((p.azimuth - az).abs() < 0.05, "{p:?} vs {az}");
        }
    }
}
