//! Grid states and the variable conversions between them.

use crate::error::{Error, Result};
use crate::params::ModelParameters;

/// Minimal number of cells the scheme stencil supports.
pub const MIN_CELLS: usize = 5;

/// Pseudo-pressure `p(r) = -v_ref * ln(1 - r)` of the normalized density
/// `r = rho * h`. Monotone increasing with `p(0) = 0`.
pub fn pressure(r: f64, v_ref: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain(
            "pressure",
            format!("normalized density must lie in [0, 1), got {r}"),
        ));
    }
    Ok(-v_ref * (1.0 - r).ln())
}

/// Inverse of [`pressure`]: `r = 1 - exp(-p/v_ref)`, clamped to the
/// largest f64 below 1 so the codomain bound survives rounding at huge p.
pub fn pressure_inverse(p: f64, v_ref: f64) -> Result<f64> {
    if p < 0.0 {
        return Err(Error::domain(
            "pressure_inverse",
            format!("pseudo-pressure must be >= 0, got {p}"),
        ));
    }
    const BELOW_ONE: f64 = 0.999_999_999_999_999_9; // largest f64 < 1
    Ok((1.0 - (-p / v_ref).exp()).min(BELOW_ONE))
}

/// Which pair of fields a [`MacroState`] stores.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariableSet {
    /// (rho, m = rho * u)
    Momentum,
    /// (rho, y = rho * (u + p(rho * h)))
    ConservativeY,
}

/// Cell-sampled fields on a uniform 1-D grid.
///
/// `rho` is the number density and `m` the second field of the active
/// variable set. Cell `i` is centered at `x0 + (i + 1/2) * dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroState {
    pub x0: f64,
    pub dx: f64,
    pub t: f64,
    pub variable_set: VariableSet,
    pub rho: Vec<f64>,
    pub m: Vec<f64>,
}

impl MacroState {
    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.dx
    }

    /// Build a state from primitive fields (rho, u).
    pub fn from_primitive(
        x0: f64,
        dx: f64,
        t: f64,
        variable_set: VariableSet,
        rho: Vec<f64>,
        u: &[f64],
        params: &ModelParameters,
    ) -> Result<Self> {
        if rho.len() != u.len() {
            return Err(Error::InvalidState(format!(
                "rho and u lengths differ: {} vs {}",
                rho.len(),
                u.len()
            )));
        }
        let m = rho
            .iter()
            .zip(u)
            .map(|(&r, &v)| match variable_set {
                VariableSet::Momentum => Ok(r * v),
                VariableSet::ConservativeY => {
                    let rn = params.clamp_density(r) * params.h;
                    Ok(r * (v + pressure(rn, params.v_ref)?))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let state = MacroState {
            x0,
            dx,
            t,
            variable_set,
            rho,
            m,
        };
        Ok(state)
    }

    /// Per-cell primitive fields (rho, u). Cells below the vacuum floor
    /// report u = 0 and a density clamped to be non-negative.
    pub fn to_primitive(&self, params: &ModelParameters) -> (Vec<f64>, Vec<f64>) {
        let floor = params.vacuum_floor();
        let mut rho_out = Vec::with_capacity(self.rho.len());
        let mut u_out = Vec::with_capacity(self.rho.len());
        for (&r, &m) in self.rho.iter().zip(&self.m) {
            if r < floor {
                rho_out.push(r.max(0.0));
                u_out.push(0.0);
            } else {
                rho_out.push(r);
                let u = match self.variable_set {
                    VariableSet::Momentum => m / r,
                    VariableSet::ConservativeY => {
                        let rn = params.clamp_density(r) * params.h;
                        // rn < 1 after clamping, so the log is finite.
                        m / r + params.v_ref * (1.0 - rn).ln()
                    }
                };
                u_out.push(u);
            }
        }
        (rho_out, u_out)
    }

    /// Total mass on the grid, `sum(rho) * dx`.
    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.dx
    }

    pub fn is_finite(&self) -> bool {
        self.rho.iter().chain(&self.m).all(|v| v.is_finite())
    }

    /// Validate an input state against the grid and range invariants.
    pub fn validate(&self, params: &ModelParameters) -> Result<()> {
        if self.rho.len() != self.m.len() {
            return Err(Error::InvalidState(format!(
                "field lengths differ: {} vs {}",
                self.rho.len(),
                self.m.len()
            )));
        }
        if self.rho.len() < MIN_CELLS {
            return Err(Error::InvalidState(format!(
                "grid needs at least {MIN_CELLS} cells, got {}",
                self.rho.len()
            )));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::InvalidState(format!(
                "dx must be positive, got {}",
                self.dx
            )));
        }
        if !self.is_finite() {
            return Err(Error::InvalidState("non-finite field value".into()));
        }
        let rho_max = params.rho_max();
        for (i, &r) in self.rho.iter().enumerate() {
            if !(0.0..rho_max).contains(&r) {
                return Err(Error::InvalidState(format!(
                    "rho[{i}] = {r} outside [0, {rho_max})"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ModelParameters {
        ModelParameters::normalized()
    }

    #[test]
    fn pressure_at_zero_is_zero() {
        assert_eq!(pressure(0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn pressure_at_half() {
        // -ln(0.5) = ln 2
        assert_relative_eq!(
            pressure(0.5, 1.0).unwrap(),
            std::f64::consts::LN_2,
            max_relative = 1e-14
        );
        assert_relative_eq!(pressure(0.5, 1.0).unwrap(), 0.693147, max_relative = 1e-5);
    }

    #[test]
    fn pressure_matches_inverse_near_jam() {
        // the congested plateau density of the jam problem pairs with
        // p = 1 + ln 2; checked through the inverse
        let rho = 1.0 - (-(1.0 + std::f64::consts::LN_2)).exp();
        assert_relative_eq!(rho, 0.8161, max_relative = 1e-4);
        let p = pressure(rho, 1.0).unwrap();
        assert_relative_eq!(p, 1.69315, max_relative = 1e-5);
        assert_relative_eq!(p, 1.0 + std::f64::consts::LN_2, max_relative = 1e-12);
        assert_relative_eq!(pressure_inverse(p, 1.0).unwrap(), rho, max_relative = 1e-12);
    }

    #[test]
    fn pressure_domain_errors() {
        assert!(pressure(1.0, 1.0).is_err());
        assert!(pressure(-0.1, 1.0).is_err());
        assert!(pressure_inverse(-1e-9, 1.0).is_err());
    }

    #[test]
    fn pressure_inverse_stays_below_one() {
        assert_eq!(pressure_inverse(0.0, 1.0).unwrap(), 0.0);
        assert!(pressure_inverse(1e6, 1.0).unwrap() < 1.0);
        assert_relative_eq!(
            pressure_inverse(0.693147, 1.0).unwrap(),
            0.5,
            max_relative = 1e-6
        );
    }

    #[test]
    fn pressure_round_trip_on_grid() {
        for k in 0..=9 {
            let r = 0.1 * k as f64;
            let back = pressure_inverse(pressure(r, 1.0).unwrap(), 1.0).unwrap();
            assert!((back - r).abs() < 1e-12, "rho = {r}: got {back}");
        }
        // and with a physical reference velocity
        for k in 1..=9 {
            let r = 0.1 * k as f64;
            let back = pressure_inverse(pressure(r, 27.8).unwrap(), 27.8).unwrap();
            assert!((back - r).abs() < 1e-12);
        }
    }

    #[test]
    fn momentum_primitives() {
        let p = params();
        let s = MacroState {
            x0: 0.0,
            dx: 0.1,
            t: 0.0,
            variable_set: VariableSet::Momentum,
            rho: vec![0.5; 5],
            m: vec![0.25; 5],
        };
        let (_, u) = s.to_primitive(&p);
        assert!(u.iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn conservative_primitives() {
        let p = params();
        // y = rho * (u + p(rho)) for u = 1: 0.5 * (1 + ln 2)
        let y = 0.5 * (1.0 + std::f64::consts::LN_2);
        let s = MacroState {
            x0: 0.0,
            dx: 0.1,
            t: 0.0,
            variable_set: VariableSet::ConservativeY,
            rho: vec![0.5; 5],
            m: vec![y; 5],
        };
        let (_, u) = s.to_primitive(&p);
        // u = y/rho + ln(1 - rho) = 1
        assert_relative_eq!(u[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn vacuum_cells_report_zero_velocity() {
        let p = params();
        let s = MacroState {
            x0: 0.0,
            dx: 0.1,
            t: 0.0,
            variable_set: VariableSet::Momentum,
            rho: vec![0.0, 1e-13, 0.5, 0.5, 0.5],
            m: vec![0.0, 1e-13, 0.25, 0.25, 0.25],
        };
        let (rho, u) = s.to_primitive(&p);
        assert_eq!(u[0], 0.0);
        assert_eq!(u[1], 0.0);
        assert_eq!(rho[0], 0.0);
        assert!(u[2] > 0.0);
    }

    #[test]
    fn primitive_round_trip_both_variable_sets() {
        let p = params();
        let rho: Vec<f64> = (0..32).map(|i| 0.05 + 0.85 * (i as f64) / 31.0).collect();
        let u: Vec<f64> = (0..32)
            .map(|i| 0.9 * ((i * 7 % 11) as f64) / 10.0)
            .collect();
        for vs in [VariableSet::Momentum, VariableSet::ConservativeY] {
            let s = MacroState::from_primitive(0.0, 0.01, 0.0, vs, rho.clone(), &u, &p).unwrap();
            let (r2, u2) = s.to_primitive(&p);
            for i in 0..rho.len() {
                assert!((r2[i] - rho[i]).abs() < 1e-12);
                assert!((u2[i] - u[i]).abs() < 1e-12, "{vs:?} cell {i}");
            }
        }
    }

    #[test]
    fn validation_rejects_bad_grids() {
        let p = params();
        let mut s = MacroState {
            x0: 0.0,
            dx: 0.1,
            t: 0.0,
            variable_set: VariableSet::Momentum,
            rho: vec![0.5; 4],
            m: vec![0.25; 4],
        };
        assert!(s.validate(&p).is_err()); // too few cells
        s.rho = vec![0.5; 5];
        s.m = vec![0.25; 5];
        s.validate(&p).unwrap();
        s.rho[2] = 1.5;
        assert!(s.validate(&p).is_err()); // above rho_max
        s.rho[2] = f64::NAN;
        assert!(s.validate(&p).is_err());
    }
}
