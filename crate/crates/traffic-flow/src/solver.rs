//! Staggered second-order central scheme for equations of the form
//! `d_t phi + H(phi, phi_x) = 0`, with MinMod-limited second differences,
//! analytic Jacobians for the midpoint predictor, and CFL-adaptive driving.
//!
//! A step works on the original grid: project to interface values, advance
//! the staggered quantities with a midpoint predictor/corrector, then
//! recenter so callers never see the half-shifted grid.

use std::time::{Duration, Instant};

use crate::closure::{Branch, CoefficientProfile};
use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::parallel::{map_indexed, max_indexed};
use crate::params::{ModelKind, ModelParameters};
use crate::state::{MacroState, VariableSet, MIN_CELLS};

/// Ghost cells required by the recentered stencil.
const GHOST: usize = 3;

/// Hard cap on steps per run; trips when the time step collapses.
const MAX_STEPS: usize = 5_000_000;

/// How ghost cells are filled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Constant extrapolation of the edge cells (outflow).
    #[default]
    Outflow,
    /// Periodic wrap-around; used by conservation and convergence tests.
    Periodic,
}

/// Three-argument MinMod limiter: the smallest argument if all are
/// positive, the largest if all are negative, zero on mixed signs.
pub fn minmod3(x1: f64, x2: f64, x3: f64) -> f64 {
    if x1 > 0.0 && x2 > 0.0 && x3 > 0.0 {
        x1.min(x2).min(x3)
    } else if x1 < 0.0 && x2 < 0.0 && x3 < 0.0 {
        x1.max(x2).max(x3)
    } else {
        0.0
    }
}

/// Value of H(phi, phi_x) together with both analytic Jacobians.
#[derive(Clone, Copy, Debug, Default)]
pub struct HamiltonianEval {
    pub value: [f64; 2],
    /// dH/dphi at fixed phi_x.
    pub d_phi: [[f64; 2]; 2],
    /// dH/dphi_x at fixed phi; its spectral radius drives the CFL bound.
    pub d_phix: [[f64; 2]; 2],
}

/// Gradient factor of the Hamilton-Jacobi momentum term and its derivative:
/// `g(z) = |z| z` uncapped, `g(z) = C z` once `|z|` reaches the cap. The
/// uncapped branch performs the identical operations for the plain and the
/// merged model, which keeps the two bitwise equal while the cap is idle.
fn gradient_factor(ux: f64, cap: Option<f64>) -> (f64, f64) {
    let abs = ux.abs();
    match cap {
        Some(c) if abs >= c => (c * ux, c),
        _ => (abs * ux, 2.0 * abs),
    }
}

fn gradient_cap(model: ModelKind, params: &ModelParameters) -> Option<f64> {
    match model {
        ModelKind::Merged => Some(params.c_limit),
        _ => None,
    }
}

/// Evaluate the model Hamiltonian and its Jacobians at one point.
///
/// Below the vacuum floor everything is zero. For the momentum-variable
/// models `u = m/rho` and `u_x = (m_x - u rho_x)/rho`; the conservative
/// model returns `H = F'(phi) phi_x` for the flux `F = (rho u, y u)`.
pub fn hamiltonian(
    model: ModelKind,
    phi: [f64; 2],
    phi_x: [f64; 2],
    params: &ModelParameters,
    profile: CoefficientProfile,
) -> HamiltonianEval {
    let rho = phi[0];
    if rho < params.vacuum_floor() {
        return HamiltonianEval::default();
    }
    let m = phi[1];
    let rho_x = phi_x[0];
    let m_x = phi_x[1];
    match model {
        ModelKind::AwRascleType => {
            let u = m / rho;
            let u_rho = -u / rho;
            let u_m = 1.0 / rho;
            let ux = (m_x - u * rho_x) / rho;
            let branch = Branch::from_gradient(ux);
            let a = profile.a(rho, u, branch, params);
            let a_rho = a.d_rho + a.d_u * u_rho;
            let a_m = a.d_u * u_m;
            HamiltonianEval {
                value: [
                    m_x,
                    (2.0 * u - a.value) * m_x + (a.value * u - u * u) * rho_x,
                ],
                d_phi: [
                    [0.0, 0.0],
                    [
                        (2.0 * u_rho - a_rho) * m_x
                            + (a_rho * u + a.value * u_rho - 2.0 * u * u_rho) * rho_x,
                        (2.0 * u_m - a_m) * m_x + (a_m * u + a.value * u_m - 2.0 * u * u_m) * rho_x,
                    ],
                ],
                d_phix: [[0.0, 1.0], [a.value * u - u * u, 2.0 * u - a.value]],
            }
        }
        ModelKind::HamiltonJacobi | ModelKind::Merged => {
            let cap = gradient_cap(model, params);
            let u = m / rho;
            let u_rho = -u / rho;
            let u_m = 1.0 / rho;
            let ux = (m_x - u * rho_x) / rho;
            let branch = Branch::from_gradient(ux);
            let b = profile.b(rho, u, branch, params);
            let b_rho = b.d_rho + b.d_u * u_rho;
            let b_m = b.d_u * u_m;
            let (g, gp) = gradient_factor(ux, cap);
            let dux_drho = (-m_x + 2.0 * u * rho_x) / (rho * rho);
            let dux_dm = -rho_x / (rho * rho);
            HamiltonianEval {
                value: [m_x, 2.0 * u * m_x - u * u * rho_x - rho * b.value * g],
                d_phi: [
                    [0.0, 0.0],
                    [
                        2.0 * u_rho * m_x
                            - 2.0 * u * u_rho * rho_x
                            - (b.value + rho * b_rho) * g
                            - rho * b.value * gp * dux_drho,
                        2.0 * u_m * m_x
                            - 2.0 * u * u_m * rho_x
                            - rho * b_m * g
                            - rho * b.value * gp * dux_dm,
                    ],
                ],
                d_phix: [
                    [0.0, 1.0],
                    [-u * u + u * b.value * gp, 2.0 * u - b.value * gp],
                ],
            }
        }
        ModelKind::ConservativeAwRascle => {
            let y = m;
            let v = y / rho; // v = u + p(r)
            let h = params.h;
            let r = params.clamp_density(rho) * h;
            let p = -params.v_ref * (1.0 - r).ln();
            let dp = params.v_ref / (1.0 - r);
            let ddp = params.v_ref / ((1.0 - r) * (1.0 - r));
            let u = v - p;
            let rp = r * dp;
            let f11 = -(p + rp);
            let f21 = -v * (v + rp);
            let f22 = u + v;
            let d11_drho = -h * (2.0 * dp + r * ddp);
            let d21_drho = (v / rho) * (2.0 * v + rp) - v * h * (dp + r * ddp);
            let d21_dy = -(2.0 * v + rp) / rho;
            let d22_drho = -2.0 * v / rho - h * dp;
            let d22_dy = 2.0 / rho;
            HamiltonianEval {
                value: [f11 * rho_x + m_x, f21 * rho_x + f22 * m_x],
                d_phi: [
                    [d11_drho * rho_x, 0.0],
                    [
                        d21_drho * rho_x + d22_drho * m_x,
                        d21_dy * rho_x + d22_dy * m_x,
                    ],
                ],
                d_phix: [[f11, 1.0], [f21, f22]],
            }
        }
    }
}

/// Largest |eigenvalue| of dH/dphi_x at one evaluation point.
fn eigen_speed(
    model: ModelKind,
    rho: f64,
    m: f64,
    ux: f64,
    params: &ModelParameters,
    profile: CoefficientProfile,
) -> (f64, f64) {
    // returns (|lambda|_max, |u|); rho is assumed at or above the floor
    match model {
        ModelKind::AwRascleType => {
            let u = m / rho;
            let a = profile.a(rho, u, Branch::from_gradient(ux), params).value;
            (u.abs().max((u - a).abs()), u.abs())
        }
        ModelKind::HamiltonJacobi | ModelKind::Merged => {
            let u = m / rho;
            let b = profile.b(rho, u, Branch::from_gradient(ux), params).value;
            let (_, gp) = gradient_factor(ux, gradient_cap(model, params));
            (u.abs().max((u - b * gp).abs()), u.abs())
        }
        ModelKind::ConservativeAwRascle => {
            let r = params.clamp_density(rho) * params.h;
            let p = -params.v_ref * (1.0 - r).ln();
            let u = m / rho - p;
            let a = params.v_ref * r / (1.0 - r);
            (u.abs().max((u - a).abs()), u.abs())
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct WaveSpeedDetail {
    pub max_abs_eig: f64,
    pub max_abs_ux: f64,
    pub gradient_limited: bool,
}

pub(crate) fn wave_speed_detail(
    state: &MacroState,
    model: ModelKind,
    params: &ModelParameters,
    profile: CoefficientProfile,
) -> WaveSpeedDetail {
    let n = state.n_cells();
    let floor = params.vacuum_floor();
    let dx = state.dx;
    // evaluation points: cells with zero slope, then interfaces with the
    // interface slope; point k yields (|lambda|, |u|, |u_x|)
    let point = |k: usize| -> (f64, f64, f64) {
        if k < n {
            if state.rho[k] < floor {
                return (0.0, 0.0, 0.0);
            }
            let (eig, u) = eigen_speed(model, state.rho[k], state.m[k], 0.0, params, profile);
            (eig, u, 0.0)
        } else {
            let i = k - n;
            let rho = 0.5 * (state.rho[i] + state.rho[i + 1]);
            if rho < floor {
                return (0.0, 0.0, 0.0);
            }
            let m = 0.5 * (state.m[i] + state.m[i + 1]);
            let rho_x = (state.rho[i + 1] - state.rho[i]) / dx;
            let m_x = (state.m[i + 1] - state.m[i]) / dx;
            let ux = match state.variable_set {
                VariableSet::Momentum => (m_x - (m / rho) * rho_x) / rho,
                VariableSet::ConservativeY => {
                    // primitive difference; the conservative eigenvalues do
                    // not involve the gradient, this only feeds the report
                    if state.rho[i] >= floor && state.rho[i + 1] >= floor {
                        let u_of = |rr: f64, mm: f64| {
                            let r = params.clamp_density(rr) * params.h;
                            mm / rr + params.v_ref * (1.0 - r).ln()
                        };
                        (u_of(state.rho[i + 1], state.m[i + 1]) - u_of(state.rho[i], state.m[i]))
                            / dx
                    } else {
                        0.0
                    }
                }
            };
            let (eig, u) = eigen_speed(model, rho, m, ux, params, profile);
            (eig, u, ux.abs())
        }
    };
    let n_points = 2 * n - 1;
    let max_eig = max_indexed(n_points, |k| point(k).0).max(0.0);
    let max_u = max_indexed(n_points, |k| point(k).1).max(0.0);
    let max_ux = max_indexed(n_points, |k| point(k).2).max(0.0);
    let gradient_limited = matches!(model, ModelKind::HamiltonJacobi | ModelKind::Merged)
        && max_eig > max_u * (1.0 + 1e-12);
    WaveSpeedDetail {
        max_abs_eig: max_eig,
        max_abs_ux: max_ux,
        gradient_limited,
    }
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct StepReport {
    pub dt: f64,
    /// Largest |eigenvalue| of dH/dphi_x over the grid, before the step.
    pub max_abs_eig: f64,
    /// Largest |d_x u| over interior interfaces, before the step.
    pub max_abs_ux: f64,
    pub mass_before: f64,
    pub mass_after: f64,
    /// True when the CFL bound came from the gradient-dependent eigenvalue
    /// rather than the advective speed (Hamilton-Jacobi family only).
    pub gradient_limited: bool,
}

/// A configured scheme: model, parameters, coefficient profile, boundary
/// treatment and CFL limit.
#[derive(Clone, Copy, Debug)]
pub struct Scheme<'a> {
    pub model: ModelKind,
    pub params: &'a ModelParameters,
    pub profile: CoefficientProfile,
    pub boundary: BoundaryMode,
    pub cfl: f64,
}

impl<'a> Scheme<'a> {
    pub fn new(model: ModelKind, params: &'a ModelParameters) -> Self {
        Scheme {
            model,
            params,
            profile: CoefficientProfile::default(),
            boundary: BoundaryMode::Outflow,
            cfl: 0.45,
        }
    }

    /// Largest |eigenvalue| of dH/dphi_x over cells and interfaces.
    pub fn max_wave_speed(&self, state: &MacroState) -> f64 {
        wave_speed_detail(state, self.model, self.params, self.profile).max_abs_eig
    }

    pub fn step(&self, state: &MacroState, dt: f64) -> Result<(MacroState, StepReport)> {
        central_step(state, dt, self)
    }

    fn expected_variable_set(&self) -> VariableSet {
        if self.model.is_conservative() {
            VariableSet::ConservativeY
        } else {
            VariableSet::Momentum
        }
    }
}

fn pad(state: &MacroState, boundary: BoundaryMode) -> Vec<[f64; 2]> {
    let n = state.n_cells();
    (0..n + 2 * GHOST)
        .map(|j| {
            let i = match boundary {
                BoundaryMode::Outflow => {
                    (j as isize - GHOST as isize).clamp(0, n as isize - 1) as usize
                }
                BoundaryMode::Periodic => {
                    (j as isize - GHOST as isize).rem_euclid(n as isize) as usize
                }
            };
            [state.rho[i], state.m[i]]
        })
        .collect()
}

/// One full staggered-and-recentered step of the central scheme.
///
/// Constant states are preserved exactly. Errors on a CFL violation and on
/// non-finite results.
pub fn central_step(
    state: &MacroState,
    dt: f64,
    scheme: &Scheme,
) -> Result<(MacroState, StepReport)> {
    if state.variable_set != scheme.expected_variable_set() {
        return Err(Error::InvalidState(format!(
            "model {} expects {:?} variables, state holds {:?}",
            scheme.model,
            scheme.expected_variable_set(),
            state.variable_set
        )));
    }
    let n = state.n_cells();
    if n < MIN_CELLS || state.m.len() != n {
        return Err(Error::InvalidState(format!(
            "grid needs at least {MIN_CELLS} cells with equal field lengths, got {n}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidState(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let detail = wave_speed_detail(state, scheme.model, scheme.params, scheme.profile);
    let ratio = dt * detail.max_abs_eig / state.dx;
    if ratio > scheme.cfl * (1.0 + 1e-12) {
        return Err(Error::CflViolation {
            ratio,
            limit: scheme.cfl,
        });
    }

    let dx = state.dx;
    let ext = pad(state, scheme.boundary);
    let n_ifaces = ext.len() - 1;

    // first differences per interface (too cheap to parallelize)
    let d1: Vec<[f64; 2]> = (0..n_ifaces)
        .map(|k| [ext[k + 1][0] - ext[k][0], ext[k + 1][1] - ext[k][1]])
        .collect();
    // MinMod-limited second differences per interface
    let d2: Vec<[f64; 2]> = (0..n_ifaces)
        .map(|k| {
            if k == 0 || k == n_ifaces - 1 {
                return [0.0, 0.0];
            }
            let mut out = [0.0; 2];
            for c in 0..2 {
                out[c] = minmod3(
                    d1[k + 1][c] - d1[k][c],
                    0.5 * (d1[k + 1][c] - d1[k - 1][c]),
                    d1[k][c] - d1[k - 1][c],
                );
            }
            out
        })
        .collect();
    // staggered predictor/corrector per interface; this map carries the
    // Hamiltonian evaluations and is the data-parallel hot spot
    let psi_new: Vec<[f64; 2]> = map_indexed(n_ifaces, |k| {
        if k == 0 || k == n_ifaces - 1 {
            return [0.0, 0.0];
        }
        let psi = [
            0.5 * (ext[k][0] + ext[k + 1][0]) - 0.125 * d2[k][0],
            0.5 * (ext[k][1] + ext[k + 1][1]) - 0.125 * d2[k][1],
        ];
        let sx = [d1[k][0] / dx, d1[k][1] / dx];
        let e = hamiltonian(scheme.model, psi, sx, scheme.params, scheme.profile);
        let half = [
            psi[0] - 0.5 * dt * e.value[0],
            psi[1] - 0.5 * dt * e.value[1],
        ];
        let dd = [d2[k][0] / (dx * dx), d2[k][1] / (dx * dx)];
        let mut sx_half = [0.0; 2];
        for c in 0..2 {
            sx_half[c] = sx[c]
                - 0.5
                    * dt
                    * (e.d_phi[c][0] * sx[0]
                        + e.d_phi[c][1] * sx[1]
                        + e.d_phix[c][0] * dd[0]
                        + e.d_phix[c][1] * dd[1]);
        }
        let e_half = hamiltonian(scheme.model, half, sx_half, scheme.params, scheme.profile);
        [psi[0] - dt * e_half.value[0], psi[1] - dt * e_half.value[1]]
    });
    // recenter onto the original grid
    let recentered: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let j = i + GHOST;
            let mut out = [0.0; 2];
            for c in 0..2 {
                let dm1 = psi_new[j - 1][c] - psi_new[j - 2][c];
                let d0 = psi_new[j][c] - psi_new[j - 1][c];
                let dp1 = psi_new[j + 1][c] - psi_new[j][c];
                let dd = minmod3(dp1 - d0, 0.5 * (dp1 - dm1), d0 - dm1);
                out[c] = psi_new[j - 1][c] + 0.5 * d0 - 0.125 * dd;
            }
            out
        })
        .collect();

    let new_t = state.t + dt;
    let mut rho = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    for cell in &recentered {
        rho.push(cell[0]);
        m.push(cell[1]);
    }
    let next = MacroState {
        x0: state.x0,
        dx: state.dx,
        t: new_t,
        variable_set: state.variable_set,
        rho,
        m,
    };
    if !next.is_finite() {
        return Err(Error::NonFiniteState { step: 0, t: new_t });
    }
    let report = StepReport {
        dt,
        max_abs_eig: detail.max_abs_eig,
        max_abs_ux: detail.max_abs_ux,
        mass_before: state.mass(),
        mass_after: next.mass(),
        gradient_limited: detail.gradient_limited,
    };
    Ok((next, report))
}

/// Full run of the adaptive driver.
#[derive(Clone, Debug)]
pub struct MacroRun {
    /// States at the requested output times (a clone of the initial state
    /// when `t_end = 0`).
    pub outputs: Vec<MacroState>,
    /// Total mass at each output time.
    pub output_masses: Vec<f64>,
    pub reports: Vec<StepReport>,
    pub steps: usize,
    pub wall: Duration,
}

/// Advance a configuration from t = 0 to its end time with CFL-adaptive
/// steps, capping dt so every requested output time is hit exactly.
pub fn run_macro(config: &SimulationConfig) -> Result<MacroRun> {
    config.validate()?;
    let started = Instant::now();
    let scheme = Scheme {
        model: config.model,
        params: &config.params,
        profile: config.profile,
        boundary: config.boundary,
        cfl: config.cfl,
    };
    let mut state = config.initial_state()?;
    let dx = state.dx;
    let mut outputs = Vec::new();
    let mut output_masses = Vec::new();
    let mut reports = Vec::new();
    let mut steps = 0usize;

    let mut targets = config.effective_output_times();
    targets.retain(|&t| t > 0.0);
    if config.t_end == 0.0 || config.output_times.iter().any(|&t| t == 0.0) {
        outputs.push(state.clone());
        output_masses.push(state.mass());
    }

    for target in targets {
        while state.t < target - 1e-14 * target.max(1.0) {
            let lambda = scheme.max_wave_speed(&state);
            let dt_cfl = if lambda > 1e-300 {
                config.cfl * dx / lambda
            } else {
                target - state.t
            };
            let dt = dt_cfl.min(target - state.t);
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::NonFiniteState {
                    step: steps,
                    t: state.t,
                });
            }
            let (next, report) = scheme.step(&state, dt).map_err(|e| match e {
                Error::NonFiniteState { .. } => Error::NonFiniteState {
                    step: steps,
                    t: state.t,
                },
                other => other,
            })?;
            state = next;
            reports.push(report);
            steps += 1;
            if steps >= MAX_STEPS {
                return Err(Error::StepLimit {
                    limit: MAX_STEPS,
                    t_end: config.t_end,
                });
            }
        }
        state.t = target;
        outputs.push(state.clone());
        output_masses.push(state.mass());
    }

    Ok(MacroRun {
        outputs,
        output_masses,
        reports,
        steps,
        wall: started.elapsed(),
    })
}
