//! Physical and kinetic model parameters, and the model selector.

use crate::error::{Error, Result};

/// Normalized vacuum floor: cells with `rho * H` below this are treated as
/// empty road (u = 0, no coefficient evaluation, zero wave speed).
pub const VACUUM_FLOOR_NORMALIZED: f64 = 1e-10;

/// Normalized clamp applied before coefficient evaluation; the coefficients
/// blow up as the normalized density approaches 1.
pub const DENSITY_CEILING_NORMALIZED: f64 = 1.0 - 1e-10;

/// Which momentum closure the solver applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Quasilinear Aw-Rascle-type system in (rho, rho*u) variables.
    AwRascleType,
    /// Momentum source proportional to |u_x| * u_x.
    HamiltonJacobi,
    /// Hamilton-Jacobi closure with the gradient factor capped at `c_limit`.
    Merged,
    /// Aw-Rascle system in conservative (rho, y) variables,
    /// y = rho * (u + p(rho)); this is the form with correct shock speeds.
    ConservativeAwRascle,
}

impl ModelKind {
    /// Short label used in CSV output and file names.
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::AwRascleType => "ar",
            ModelKind::HamiltonJacobi => "hj",
            ModelKind::Merged => "merged",
            ModelKind::ConservativeAwRascle => "ar-cons",
        }
    }

    /// True for the two models solved in conservative (rho, y) variables.
    pub fn is_conservative(&self) -> bool {
        matches!(self, ModelKind::ConservativeAwRascle)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ar" => Ok(ModelKind::AwRascleType),
            "hj" => Ok(ModelKind::HamiltonJacobi),
            "merged" => Ok(ModelKind::Merged),
            "ar-cons" => Ok(ModelKind::ConservativeAwRascle),
            other => Err(Error::domain(
                "model",
                format!("unknown model `{other}` (expected ar, hj, merged or ar-cons)"),
            )),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// All physical and kinetic constants of the models.
///
/// Densities are number densities (vehicles per unit length); the maximal
/// density is `1/h`. The default is the normalized unit system `h = 1`,
/// `v_ref = 1`, so the normalized density `rho * h` coincides with `rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParameters {
    /// Minimal headway length (vehicle length plus minimal distance).
    pub h: f64,
    /// Acceleration threshold distance.
    pub h_a: f64,
    /// Braking threshold distance.
    pub h_b: f64,
    /// Reference velocity.
    pub v_ref: f64,
    /// Maximal velocity.
    pub w_max: f64,
    /// Acceleration interaction-rate weight.
    pub q_a: f64,
    /// Braking interaction-rate weight.
    pub q_b: f64,
    /// Upper acceleration bound factor of the second Boltzmann interaction law.
    pub alpha: f64,
    /// Lower braking bound factor of the second Boltzmann interaction law.
    pub beta: f64,
    /// Exponent of the Fokker-Planck force law, 1 or 2.
    pub eta: u8,
    /// Force scale of the Fokker-Planck law (`v_ref` for eta = 1,
    /// dimensionless for eta = 2).
    pub c_eta: f64,
    /// Gradient cap of the merged model.
    pub c_limit: f64,
}

impl ModelParameters {
    /// Normalized unit system: `h = h_a = h_b = 1`, `v_ref = w = 1`.
    pub fn normalized() -> Self {
        ModelParameters {
            h: 1.0,
            h_a: 1.0,
            h_b: 1.0,
            v_ref: 1.0,
            w_max: 1.0,
            q_a: 1.0,
            q_b: 1.0,
            alpha: 2.0,
            beta: 0.5,
            eta: 1,
            c_eta: 1.0,
            c_limit: 10.0,
        }
    }

    /// Maximal admissible number density.
    pub fn rho_max(&self) -> f64 {
        1.0 / self.h
    }

    /// Number-density vacuum floor.
    pub fn vacuum_floor(&self) -> f64 {
        VACUUM_FLOOR_NORMALIZED / self.h
    }

    /// Clamp a number density below the singular ceiling of the
    /// coefficient formulas (and below `1/h_b` where that is tighter).
    pub fn clamp_density(&self, rho: f64) -> f64 {
        let ceiling = DENSITY_CEILING_NORMALIZED / self.h.max(self.h_b);
        rho.min(ceiling)
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, name: &'static str, message: String) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, message })
            }
        }
        check(self.h > 0.0, "h", format!("H must be > 0, got {}", self.h))?;
        check(
            self.h_b > 0.0,
            "h_b",
            format!("H_B must be > 0, got {}", self.h_b),
        )?;
        check(
            self.h_a >= self.h_b,
            "h_a",
            format!(
                "H_A must be >= H_B, got H_A = {}, H_B = {}",
                self.h_a, self.h_b
            ),
        )?;
        check(
            self.v_ref > 0.0,
            "v_ref",
            format!("v_ref must be > 0, got {}", self.v_ref),
        )?;
        check(
            self.w_max > 0.0,
            "w_max",
            format!("w must be > 0, got {}", self.w_max),
        )?;
        check(
            self.q_a >= 0.0,
            "q_a",
            format!("q_A must be >= 0, got {}", self.q_a),
        )?;
        check(
            self.q_b >= 0.0,
            "q_b",
            format!("q_B must be >= 0, got {}", self.q_b),
        )?;
        check(
            self.alpha > 1.0,
            "alpha",
            format!("alpha must be > 1, got {}", self.alpha),
        )?;
        check(
            self.beta > 0.0 && self.beta < 1.0,
            "beta",
            format!("beta must lie in (0, 1), got {}", self.beta),
        )?;
        check(
            self.eta == 1 || self.eta == 2,
            "eta",
            format!("eta must be 1 or 2, got {}", self.eta),
        )?;
        check(
            self.c_eta > 0.0,
            "c_eta",
            format!("c_eta must be > 0, got {}", self.c_eta),
        )?;
        check(
            self.c_limit > 0.0,
            "c_limit",
            format!("C must be > 0, got {}", self.c_limit),
        )?;
        for (name, v) in [
            ("h", self.h),
            ("h_a", self.h_a),
            ("h_b", self.h_b),
            ("v_ref", self.v_ref),
            ("w_max", self.w_max),
            ("q_a", self.q_a),
            ("q_b", self.q_b),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("c_eta", self.c_eta),
            ("c_limit", self.c_limit),
        ] {
            check(v.is_finite(), name, format!("must be finite, got {v}"))?;
        }
        Ok(())
    }
}

impl Default for ModelParameters {
    fn default() -> Self {
        Self::normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_defaults_validate() {
        ModelParameters::normalized().validate().unwrap();
    }

    #[test]
    fn each_violation_reports_its_field() {
        let cases: Vec<(&'static str, Box<dyn Fn(&mut ModelParameters)>)> = vec![
            ("h", Box::new(|p| p.h = 0.0)),
            ("h_b", Box::new(|p| p.h_b = -1.0)),
            ("h_a", Box::new(|p| p.h_a = 0.5)),
            ("v_ref", Box::new(|p| p.v_ref = 0.0)),
            ("w_max", Box::new(|p| p.w_max = -2.0)),
            ("q_a", Box::new(|p| p.q_a = -0.1)),
            ("q_b", Box::new(|p| p.q_b = -0.1)),
            ("alpha", Box::new(|p| p.alpha = 1.0)),
            ("beta", Box::new(|p| p.beta = 1.0)),
            ("eta", Box::new(|p| p.eta = 3)),
            ("c_eta", Box::new(|p| p.c_eta = 0.0)),
            ("c_limit", Box::new(|p| p.c_limit = 0.0)),
            ("h", Box::new(|p| p.h = f64::NAN)),
        ];
        for (expect, mutate) in cases {
            let mut p = ModelParameters::normalized();
            mutate(&mut p);
            match p.validate() {
                Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, expect),
                other => panic!("expected InvalidParameter for {expect}, got {other:?}"),
            }
        }
    }

    #[test]
    fn model_labels_round_trip() {
        for kind in [
            ModelKind::AwRascleType,
            ModelKind::HamiltonJacobi,
            ModelKind::Merged,
            ModelKind::ConservativeAwRascle,
        ] {
            assert_eq!(kind.label().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("nope".parse::<ModelKind>().is_err());
    }
}
