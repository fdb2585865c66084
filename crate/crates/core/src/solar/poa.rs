//! Isotropic-sky transposition of horizontal irradiance onto a tilted plane.

use libm::{acos, cos, sin};
use thiserror::Error;

use super::clearsky::IrradianceSample;
use super::position::SolarPosition;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid surface orientation: {0}")]
pub struct OrientationError(pub &'static str);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceOrientation {
    /// Degrees from horizontal; 90 for a facade.
    pub tilt: f64,
    /// Direction the surface faces, degrees clockwise from north.
    pub azimuth: f64,
    pub albedo: f64,
}

impl SurfaceOrientation {
    pub fn new(tilt: f64, azimuth: f64, albedo: f64) -> Result<Self, OrientationError> {
        if !(0.0..=180.0).contains(&tilt) {
            return Err(OrientationError("tilt outside [0, 180]"));
        }
        if !azimuth.is_finite() {
            return Err(OrientationError("azimuth not finite"));
        }
        if !(0.0..=1.0).contains(&albedo) {
            return Err(OrientationError("albedo outside [0, 1]"));
        }
        Ok(Self { tilt, azimuth: crate::wrap(azimuth, 360.0), albedo })
    }

    /// A vertical wall facing `azimuth` with the default ground albedo 0.2.
    pub fn facade(azimuth: f64) -> Self {
        Self { tilt: 90.0, azimuth: crate::wrap(azimuth, 360.0), albedo: 0.2 }
    }
}

/// Plane-of-array components, W/m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoaComponents {
    pub e_dir: f64,
    pub e_dif: f64,
    pub e_ref: f64,
    pub e_poa: f64,
    /// Angle of incidence, degrees.
    pub aoi: f64,
}

fn cos_aoi(pos: &SolarPosition, surf: &SurfaceOrientation) -> f64 {
    let (z, beta) = (pos.zenith.to_radians(), surf.tilt.to_radians());
    let daz = (pos.azimuth - surf.azimuth).to_radians();
    (cos(z) * cos(beta) + sin(z) * sin(beta) * cos(daz)).clamp(-1.0, 1.0)
}

/// Angle between the sun direction and the surface normal, degrees.
pub fn aoi(pos: &SolarPosition, surf: &SurfaceOrientation) -> f64 {
    acos(cos_aoi(pos, surf)).to_degrees()
}

pub fn transpose_poa(irr: &IrradianceSample, pos: &SolarPosition, surf: &SurfaceOrientation) -> PoaComponents {
    let angle = aoi(pos, surf);
    let cos_beta = cos(surf.tilt.to_radians());
    let e_dir = if pos.is_up() && angle < 90.0 { irr.dni * cos_aoi(pos, surf).max(0.0) } else { 0.0 };
    let e_dif = irr.dhi * (1.0 + cos_beta) / 2.0;
    let e_ref = irr.ghi * surf.albedo * (1.0 - cos_beta) / 2.0;
    PoaComponents { e_dir, e_dif, e_ref, e_poa: e_dir + e_dif + e_ref, aoi: angle }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solar::time::Timestamp;

    fn sun(zenith: f64, azimuth: f64) -> SolarPosition {
        SolarPosition::from_angles(zenith, azimuth, Timestamp(0))
    }

    fn sample(ghi: f64, dni: f64, dhi: f64) -> IrradianceSample {
        IrradianceSample { ghi, dni, dhi, timestamp: Timestamp(0) }
    }

    #[test]
    fn sun_on_the_normal() {
        let s = SurfaceOrientation::new(35.0, 200.0, 0.2).unwrap();
        assert!(aoi(&sun(35.0, 200.0), &s) < 1e-6);
    }

    #[test]
    fn south_wall_angles() {
        let wall = SurfaceOrientation::facade(180.0);
        assert!(aoi(&sun(90.0, 180.0), &wall) < 1e-6);
        assert!((aoi(&sun(30.0, 180.0), &wall) - 60.0).abs() < 1e-9);
    }

    #[test]
    fn components() {
        let flat = SurfaceOrientation::new(0.0, 180.0, 0.2).unwrap();
        let p = transpose_poa(&sample(0.0, 1000.0, 0.0), &sun(0.0, 0.0), &flat);
        assert!((p.e_poa - 1000.0).abs() < 1e-9);

        let wall = SurfaceOrientation::facade(180.0);
        let p = transpose_poa(&sample(500.0, 0.0, 200.0), &sun(40.0, 180.0), &wall);
        assert!((p.e_dif - 100.0).abs() < 1e-9);
        assert!((p.e_ref - 50.0).abs() < 1e-9);

        let p = transpose_poa(&sample(0.0, 800.0, 0.0), &sun(30.0, 180.0), &wall);
        assert!((p.e_dir - 400.0).abs() < 1e-9);
        assert_eq!(p.e_poa, p.e_dir + p.e_dif + p.e_ref);
    }

    #[test]
    fn sun_behind_the_wall() {
        let wall = SurfaceOrientation::facade(0.0);
        let p = transpose_poa(&sample(800.0, 900.0, 100.0), &sun(30.0, 180.0), &wall);
        assert!(p.aoi > 90.0);
        assert_eq!(p.e_dir, 0.0);
        assert!(p.e_poa > 0.0);
    }

    #[test]
    fn rejects_bad_orientation() {
        assert!(SurfaceOrientation::new(-1.0, 0.0, 0.2).is_err());
        assert!(SurfaceOrientation::new(90.0, 0.0, 1.5).is_err());
        assert_eq!(SurfaceOrientation::new(90.0, -90.0, 0.2).unwrap().azimuth, 270.0);
    }
}
