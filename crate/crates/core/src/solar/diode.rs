//! Five-parameter single-diode module model.
//!
//! `I = I_L − I_0·(exp((V + I·R_s)/(n·N_s·V_th)) − 1) − (V + I·R_s)/R_sh`
//!
//! The right-hand side minus `I` is strictly decreasing and concave in `I`
//! (and in `V`), so Newton's method started to the right of the root walks
//! monotonically onto it without damping.

use libm::{exp, log, sqrt};
use thiserror::Error;

pub const MAX_ITERATIONS: usize = 100;
pub const CURRENT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiodeError {
    #[error("single-diode solve did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("invalid diode parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleDiodeParams {
    /// Photocurrent, A.
    pub i_l: f64,
    /// Diode saturation current, A.
    pub i_0: f64,
    /// Series resistance, Ω.
    pub r_s: f64,
    /// Shunt resistance, Ω. May be infinite.
    pub r_sh: f64,
    /// Diode ideality factor.
    pub n: f64,
    /// Cells in series.
    pub n_s: f64,
    /// Thermal voltage per cell, V.
    pub v_th: f64,
}

impl Default for SingleDiodeParams {
    /// A generic 60-cell crystalline module of roughly 238 W at STC.
    fn default() -> Self {
        Self { i_l: 7.8, i_0: 5e-10, r_s: 0.3, r_sh: 400.0, n: 1.1, n_s: 60.0, v_th: 0.025693 }
    }
}

impl SingleDiodeParams {
    pub fn validate(&self) -> Result<(), DiodeError> {
        let positive = |x: f64| x > 0.0 && !x.is_nan();
        if !positive(self.i_l) || !positive(self.i_0) {
            return Err(DiodeError::InvalidParams("currents must be positive"));
        }
        if !(self.r_s >= 0.0 && self.r_s.is_finite()) {
            return Err(DiodeError::InvalidParams("series resistance must be finite and non-negative"));
        }
        if !positive(self.r_sh) || self.r_sh <= self.r_s {
            return Err(DiodeError::InvalidParams("shunt resistance must exceed series resistance"));
        }
        if !positive(self.n) || !positive(self.n_s) || !positive(self.v_th) {
            return Err(DiodeError::InvalidParams("n, n_s and v_th must be positive"));
        }
        Ok(())
    }

    /// Modified ideality factor `n·N_s·V_th`, V.
    pub fn a(&self) -> f64 {
        self.n * self.n_s * self.v_th
    }

    /// Same module with the photocurrent multiplied by `factor`.
    pub fn with_photocurrent_scaled(&self, factor: f64) -> Self {
        Self { i_l: self.i_l * factor, ..*self }
    }

    /// `RHS(V, I) − I`; zero on the I–V curve.
    pub fn residual(&self, v: f64, i: f64) -> f64 {
        let vd = v + i * self.r_s;
        self.i_l - self.i_0 * (exp(vd / self.a()) - 1.0) - vd / self.r_sh - i
    }
}

/// Module current at terminal voltage `v`.
pub fn diode_current(v: f64, p: &SingleDiodeParams) -> Result<f64, DiodeError> {
    p.validate()?;
    let a = p.a();
    let mut i = p.i_l;
    for _ in 0..MAX_ITERATIONS {
        let e = p.i_0 * exp((v + i * p.r_s) / a);
        let f = p.residual(v, i);
        if f.abs() < CURRENT_TOLERANCE {
            return Ok(i);
        }
        let df = -e * p.r_s / a - p.r_s / p.r_sh - 1.0;
        let next = i - f / df;
        if next == i {
            return Ok(i);
        }
        i = next;
    }
    if p.residual(v, i).abs() < CURRENT_TOLERANCE {
        Ok(i)
    } else {
        Err(DiodeError::NoConvergence(MAX_ITERATIONS))
    }
}

/// Short-circuit current.
pub fn short_circuit_current(p: &SingleDiodeParams) -> Result<f64, DiodeError> {
    diode_current(0.0, p)
}

/// Open-circuit voltage, the root of the curve at `I = 0`.
pub fn open_circuit_voltage(p: &SingleDiodeParams) -> Result<f64, DiodeError> {
    p.validate()?;
    let a = p.a();
    // Exact when the shunt is open; otherwise to the right of the root.
    let mut v = a * log(p.i_l / p.i_0 + 1.0);
    for _ in 0..MAX_ITERATIONS {
        let f = p.residual(v, 0.0);
        if f.abs() < CURRENT_TOLERANCE * 1e-2 {
            return Ok(v);
        }
        let df = -p.i_0 * exp(v / a) / a - 1.0 / p.r_sh;
        let next = v - f / df;
        if next == v {
            return Ok(v);
        }
        v = next;
    }
    Err(DiodeError::NoConvergence(MAX_ITERATIONS))
}

/// Maximum power point `(v_mp, i_mp, p_mp)` by golden-section search on
/// `[0, V_oc]`.
pub fn max_power_point(p: &SingleDiodeParams) -> Result<(f64, f64, f64), DiodeError> {
    let voc = open_circuit_voltage(p)?;
    let power = |v: f64| diode_current(v, p).map(|i| v * i);
    let inv_phi = (sqrt(5.0) - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, voc);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = power(x1)?;
    let mut f2 = power(x2)?;
    while hi - lo > 1e-9 * voc.max(1.0) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = power(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = power(x1)?;
        }
    }
    let v = (lo + hi) / 2.0;
    let i = diode_current(v, p)?;
    Ok((v, i, v * i))
}
