//! Simulation configuration and the flat key-value config file format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::closure::CoefficientProfile;
use crate::error::{Error, Result};
use crate::params::{ModelKind, ModelParameters};
use crate::solver::BoundaryMode;
use crate::state::{MacroState, VariableSet};

/// Initial data for a run.
#[derive(Clone)]
pub enum InitialCondition {
    Riemann {
        rho_l: f64,
        u_l: f64,
        rho_r: f64,
        u_r: f64,
        x0: f64,
    },
    /// Smooth profile `x -> (rho, u)`.
    Profile(Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>),
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::Riemann {
                rho_l,
                u_l,
                rho_r,
                u_r,
                x0,
            } => write!(
                f,
                "Riemann {{ left: ({rho_l}, {u_l}), right: ({rho_r}, {u_r}), x0: {x0} }}"
            ),
            InitialCondition::Profile(_) => f.write_str("Profile(..)"),
        }
    }
}

/// Everything a macroscopic run needs.
#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub model: ModelKind,
    pub params: ModelParameters,
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_cells: usize,
    pub t_end: f64,
    pub cfl: f64,
    pub initial: InitialCondition,
    /// Extra snapshot times; empty means "final time only".
    pub output_times: Vec<f64>,
    pub boundary: BoundaryMode,
    pub profile: CoefficientProfile,
}

impl SimulationConfig {
    /// Riemann problem on [0, 1] with the default CFL number 0.45.
    #[allow(clippy::too_many_arguments)]
    pub fn riemann(
        model: ModelKind,
        params: ModelParameters,
        rho_l: f64,
        u_l: f64,
        rho_r: f64,
        u_r: f64,
        x0: f64,
        n_cells: usize,
        t_end: f64,
    ) -> Self {
        SimulationConfig {
            model,
            params,
            x_lo: 0.0,
            x_hi: 1.0,
            n_cells,
            t_end,
            cfl: 0.45,
            initial: InitialCondition::Riemann {
                rho_l,
                u_l,
                rho_r,
                u_r,
                x0,
            },
            output_times: Vec::new(),
            boundary: BoundaryMode::Outflow,
            profile: CoefficientProfile::Simplified,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n_cells as f64
    }

    pub fn variable_set(&self) -> VariableSet {
        if self.model.is_conservative() {
            VariableSet::ConservativeY
        } else {
            VariableSet::Momentum
        }
    }

    /// Sorted list of times the driver must hit exactly.
    pub fn effective_output_times(&self) -> Vec<f64> {
        let mut times = if self.output_times.is_empty() {
            vec![self.t_end]
        } else {
            self.output_times.clone()
        };
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        times
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::domain(
                "config",
                format!("cfl_number must lie in (0, 0.5], got {}", self.cfl),
            ));
        }
        if self.n_cells < 10 {
            return Err(Error::domain(
                "config",
                format!("n_cells must be at least 10, got {}", self.n_cells),
            ));
        }
        if !(self.x_lo < self.x_hi) {
            return Err(Error::domain(
                "config",
                format!("domain [{}, {}] is empty", self.x_lo, self.x_hi),
            ));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::domain(
                "config",
                format!("t_end must be finite and >= 0, got {}", self.t_end),
            ));
        }
        for &t in &self.output_times {
            if !(0.0..=self.t_end).contains(&t) {
                return Err(Error::domain(
                    "config",
                    format!("output time {t} outside [0, {}]", self.t_end),
                ));
            }
        }
        if let InitialCondition::Riemann {
            rho_l,
            u_l,
            rho_r,
            u_r,
            x0,
        } = &self.initial
        {
            if !(self.x_lo < *x0 && *x0 < self.x_hi) {
                return Err(Error::domain(
                    "config",
                    format!("x0 = {x0} must lie inside ({}, {})", self.x_lo, self.x_hi),
                ));
            }
            let rho_max = self.params.rho_max();
            for (name, rho) in [("rho_l", *rho_l), ("rho_r", *rho_r)] {
                if !(0.0..rho_max).contains(&rho) {
                    return Err(Error::domain(
                        "config",
                        format!("{name} = {rho} outside [0, {rho_max})"),
                    ));
                }
            }
            for (name, u) in [("u_l", *u_l), ("u_r", *u_r)] {
                if !(0.0..=self.params.w_max).contains(&u) {
                    return Err(Error::domain(
                        "config",
                        format!("{name} = {u} outside [0, {}]", self.params.w_max),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Sample the initial condition at cell centers.
    pub fn initial_state(&self) -> Result<MacroState> {
        let n = self.n_cells;
        let dx = self.dx();
        let mut rho = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        for i in 0..n {
            let x = self.x_lo + (i as f64 + 0.5) * dx;
            let (r, v) = match &self.initial {
                InitialCondition::Riemann {
                    rho_l,
                    u_l,
                    rho_r,
                    u_r,
                    x0,
                } => {
                    if x < *x0 {
                        (*rho_l, *u_l)
                    } else {
                        (*rho_r, *u_r)
                    }
                }
                InitialCondition::Profile(f) => f(x),
            };
            rho.push(r);
            u.push(v);
        }
        let state = MacroState::from_primitive(
            self.x_lo,
            dx,
            0.0,
            self.variable_set(),
            rho,
            &u,
            &self.params,
        )?;
        state.validate(&self.params)?;
        Ok(state)
    }
}

/// Optional values read from a flat `key = value` config file. Flags given
/// on the command line override these.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FileConfig {
    pub model: Option<ModelKind>,
    pub rho_l: Option<f64>,
    pub u_l: Option<f64>,
    pub rho_r: Option<f64>,
    pub u_r: Option<f64>,
    pub x0: Option<f64>,
    pub dx: Option<f64>,
    pub t_end: Option<f64>,
    pub cfl: Option<f64>,
    pub domain_lo: Option<f64>,
    pub domain_hi: Option<f64>,
    pub out: Option<PathBuf>,
    pub h: Option<f64>,
    pub h_a: Option<f64>,
    pub h_b: Option<f64>,
    pub v_ref: Option<f64>,
    pub w_max: Option<f64>,
    pub q_a: Option<f64>,
    pub q_b: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub eta: Option<u8>,
    pub c_eta: Option<f64>,
    pub c_limit: Option<f64>,
}

impl FileConfig {
    /// Apply the parameter overrides onto a base parameter set.
    pub fn apply_params(&self, params: &mut ModelParameters) {
        if let Some(v) = self.h {
            params.h = v;
        }
        if let Some(v) = self.h_a {
            params.h_a = v;
        }
        if let Some(v) = self.h_b {
            params.h_b = v;
        }
        if let Some(v) = self.v_ref {
            params.v_ref = v;
        }
        if let Some(v) = self.w_max {
            params.w_max = v;
        }
        if let Some(v) = self.q_a {
            params.q_a = v;
        }
        if let Some(v) = self.q_b {
            params.q_b = v;
        }
        if let Some(v) = self.alpha {
            params.alpha = v;
        }
        if let Some(v) = self.beta {
            params.beta = v;
        }
        if let Some(v) = self.eta {
            params.eta = v;
        }
        if let Some(v) = self.c_eta {
            params.c_eta = v;
        }
        if let Some(v) = self.c_limit {
            params.c_limit = v;
        }
    }
}

/// Read a flat config file: one `key = value` per line, `#` starts a
/// comment, blank lines are ignored, later entries override earlier ones.
pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = FileConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            path: path.to_path_buf(),
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |message: String| Error::Config {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let parse_f64 = |value: &str| {
            value
                .parse::<f64>()
                .map_err(|_| bad(format!("`{value}` is not a number")))
        };
        match key {
            "model" => {
                cfg.model = Some(value.parse::<ModelKind>().map_err(|e| bad(e.to_string()))?)
            }
            "rho_l" => cfg.rho_l = Some(parse_f64(value)?),
            "u_l" => cfg.u_l = Some(parse_f64(value)?),
            "rho_r" => cfg.rho_r = Some(parse_f64(value)?),
            "u_r" => cfg.u_r = Some(parse_f64(value)?),
            "x0" => cfg.x0 = Some(parse_f64(value)?),
            "dx" => cfg.dx = Some(parse_f64(value)?),
            "t_end" => cfg.t_end = Some(parse_f64(value)?),
            "cfl" => cfg.cfl = Some(parse_f64(value)?),
            "domain_lo" => cfg.domain_lo = Some(parse_f64(value)?),
            "domain_hi" => cfg.domain_hi = Some(parse_f64(value)?),
            "out" => cfg.out = Some(PathBuf::from(value)),
            "h" => cfg.h = Some(parse_f64(value)?),
            "h_a" => cfg.h_a = Some(parse_f64(value)?),
            "h_b" => cfg.h_b = Some(parse_f64(value)?),
            "v_ref" => cfg.v_ref = Some(parse_f64(value)?),
            "w_max" | "w" => cfg.w_max = Some(parse_f64(value)?),
            "q_a" => cfg.q_a = Some(parse_f64(value)?),
            "q_b" => cfg.q_b = Some(parse_f64(value)?),
            "alpha" => cfg.alpha = Some(parse_f64(value)?),
            "beta" => cfg.beta = Some(parse_f64(value)?),
            "eta" => {
                cfg.eta = Some(
                    value
                        .parse::<u8>()
                        .map_err(|_| bad(format!("`{value}` is not a small integer")))?,
                )
            }
            "c_eta" => cfg.c_eta = Some(parse_f64(value)?),
            "c_limit" => cfg.c_limit = Some(parse_f64(value)?),
            other => {
                return Err(bad(format!("unknown key `{other}`")));
            }
        }
    }
    Ok(cfg)
}
