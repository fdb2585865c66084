//! Sandia module and cell temperature model.

use libm::exp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleThermalParams {
    pub a: f64,
    /// s/m
    pub b: f64,
    /// Cell-to-back temperature difference at `e0`, K.
    pub delta_t: f64,
    pub e0: f64,
}

impl Default for ModuleThermalParams {
    /// Open-rack glass/polymer coefficients.
    fn default() -> Self {
        Self { a: -3.56, b: -0.075, delta_t: 3.0, e0: 1000.0 }
    }
}

/// Returns `(t_module, t_cell)` in °C.
pub fn cell_temperature(e_poa: f64, t_ambient: f64, wind: f64, p: &ModuleThermalParams) -> (f64, f64) {
    let t_module = e_poa * exp(p.a + p.b * wind) + t_ambient;
    let t_cell = t_module + e_poa / p.e0 * p.delta_t;
    (t_module, t_cell)
}
