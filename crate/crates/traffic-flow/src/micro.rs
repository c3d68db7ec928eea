//! Microscopic car-following models, an explicit RK4 integrator, and the
//! micro-to-macro density reconstruction used for cross-scale checks.
//!
//! Cars are ordered left to right; car `i` follows car `i + 1`. The last
//! car has no leader and keeps its velocity (a virtual leader at infinite
//! distance). `h` is the per-run headway normalization chosen so that the
//! initial occupied space equals `h * n_cars`.

use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::params::ModelParameters;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MicroModel {
    /// Acceleration `(h v_ref / l) * dv / (l - h)`.
    RascleFollow,
    /// Acceleration `(h / l^2) * |dv| dv / (l - h)`.
    HJFollow,
}

impl MicroModel {
    pub fn label(&self) -> &'static str {
        match self {
            MicroModel::RascleFollow => "micro-rf",
            MicroModel::HJFollow => "micro-hj",
        }
    }
}

impl std::str::FromStr for MicroModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rf" => Ok(MicroModel::RascleFollow),
            "hj" => Ok(MicroModel::HJFollow),
            other => Err(Error::domain(
                "micro model",
                format!("unknown micro model `{other}` (expected rf or hj)"),
            )),
        }
    }
}

/// Behaviour of the front car.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LeaderPolicy {
    /// The front car keeps its current velocity (zero acceleration).
    #[default]
    ConstantVelocity,
}

/// Positions and velocities of `n` cars, ordered left to right.
#[derive(Clone, Debug)]
pub struct MicroState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// Headway normalization of this run.
    pub h: f64,
    pub t: f64,
    pub leader: LeaderPolicy,
}

impl MicroState {
    pub fn n_cars(&self) -> usize {
        self.x.len()
    }

    /// Check ordering with gaps strictly above `h` and finite velocities.
    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.v.len() {
            return Err(Error::InvalidState(format!(
                "position and velocity lengths differ: {} vs {}",
                self.x.len(),
                self.v.len()
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidState(format!(
                "h must be positive, got {}",
                self.h
            )));
        }
        check_gaps(&self.x, self.h)?;
        if !self.v.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidState("non-finite velocity".into()));
        }
        Ok(())
    }
}

fn check_gaps(x: &[f64], h: f64) -> Result<()> {
    for i in 0..x.len().saturating_sub(1) {
        let gap = x[i + 1] - x[i];
        if !(gap > h) {
            return Err(Error::Collision { index: i, gap, h });
        }
    }
    Ok(())
}

fn accelerations(
    model: MicroModel,
    x: &[f64],
    v: &[f64],
    h: f64,
    params: &ModelParameters,
) -> Result<Vec<f64>> {
    check_gaps(x, h)?;
    let n = x.len();
    Ok(map_indexed(n, |i| {
        if i + 1 == n {
            return 0.0; // leader holds its velocity
        }
        let l = x[i + 1] - x[i];
        let dv = v[i + 1] - v[i];
        match model {
            MicroModel::RascleFollow => h * params.v_ref / l * dv / (l - h),
            MicroModel::HJFollow => h / (l * l) * dv.abs() * dv / (l - h),
        }
    }))
}

/// Per-car accelerations of the chosen following law.
pub fn micro_rhs(
    model: MicroModel,
    state: &MicroState,
    params: &ModelParameters,
) -> Result<Vec<f64>> {
    accelerations(model, &state.x, &state.v, state.h, params)
}

/// Advance the state by exactly `dt` with classical RK4. If any stage
/// leaves the admissible set (gap > h), the step is rejected and retried
/// as two half steps, up to 20 halvings deep.
pub fn rk4_step(
    state: &MicroState,
    dt: f64,
    model: MicroModel,
    params: &ModelParameters,
) -> Result<MicroState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidState(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let mut out = state.clone();
    advance(&mut out, dt, model, params, 0)?;
    Ok(out)
}

fn advance(
    state: &mut MicroState,
    dt: f64,
    model: MicroModel,
    params: &ModelParameters,
    depth: usize,
) -> Result<()> {
    match try_rk4(state, dt, model, params) {
        Ok((x, v)) => {
            state.x = x;
            state.v = v;
            state.t += dt;
            Ok(())
        }
        Err(Error::Collision { .. }) => {
            if depth >= 20 {
                return Err(Error::StepFailure { halvings: depth });
            }
            advance(state, 0.5 * dt, model, params, depth + 1)?;
            advance(state, 0.5 * dt, model, params, depth + 1)
        }
        Err(other) => Err(other),
    }
}

fn try_rk4(
    state: &MicroState,
    dt: f64,
    model: MicroModel,
    params: &ModelParameters,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = state.n_cars();
    let stage = |x0: &[f64], v0: &[f64], kx: &[f64], kv: &[f64], c: f64| {
        let x: Vec<f64> = (0..n).map(|i| x0[i] + c * dt * kx[i]).collect();
        let v: Vec<f64> = (0..n).map(|i| v0[i] + c * dt * kv[i]).collect();
        (x, v)
    };
    // k1
    let k1v = accelerations(model, &state.x, &state.v, state.h, params)?;
    let k1x = state.v.clone();
    // k2
    let (x2, v2) = stage(&state.x, &state.v, &k1x, &k1v, 0.5);
    let k2v = accelerations(model, &x2, &v2, state.h, params)?;
    let k2x = v2;
    // k3
    let (x3, v3) = stage(&state.x, &state.v, &k2x, &k2v, 0.5);
    let k3v = accelerations(model, &x3, &v3, state.h, params)?;
    let k3x = v3;
    // k4
    let (x4, v4) = stage(&state.x, &state.v, &k3x, &k3v, 1.0);
    let k4v = accelerations(model, &x4, &v4, state.h, params)?;
    let k4x = v4;

    let sixth = dt / 6.0;
    let x: Vec<f64> = (0..n)
        .map(|i| state.x[i] + sixth * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]))
        .collect();
    let v: Vec<f64> = (0..n)
        .map(|i| {
            (state.v[i] + sixth * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]))
                .clamp(0.0, params.w_max)
        })
        .collect();
    check_gaps(&x, state.h)?;
    Ok((x, v))
}

/// Midpoint headway samples `(x_mid, rho, v)` with `rho = h / l`.
pub fn headway_samples(state: &MicroState) -> Vec<(f64, f64, f64)> {
    (0..state.n_cars().saturating_sub(1))
        .map(|i| {
            let l = state.x[i + 1] - state.x[i];
            (0.5 * (state.x[i] + state.x[i + 1]), state.h / l, state.v[i])
        })
        .collect()
}

/// Resample the piecewise-constant headway density onto a uniform grid by
/// exact overlap integration. Cells not covered by the platoon get zero
/// density and zero velocity.
pub fn density_reconstruct(
    state: &MicroState,
    x_lo: f64,
    dx: f64,
    n_cells: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut mass = vec![0.0f64; n_cells];
    let mut momentum = vec![0.0f64; n_cells];
    for i in 0..state.n_cars().saturating_sub(1) {
        let (a, b) = (state.x[i], state.x[i + 1]);
        let rho = state.h / (b - a);
        let v = state.v[i];
        let j_lo = (((a - x_lo) / dx).floor().max(0.0)) as usize;
        let j_hi = (((b - x_lo) / dx).ceil().min(n_cells as f64)).max(0.0) as usize;
        for j in j_lo..j_hi.min(n_cells) {
            let cell_a = x_lo + j as f64 * dx;
            let cell_b = cell_a + dx;
            let overlap = (b.min(cell_b) - a.max(cell_a)).max(0.0);
            mass[j] += rho * overlap;
            momentum[j] += rho * v * overlap;
        }
    }
    let rho: Vec<f64> = mass.iter().map(|m| m / dx).collect();
    let u: Vec<f64> = mass
        .iter()
        .zip(&momentum)
        .map(|(&m, &p)| if m > 0.0 { p / m } else { 0.0 })
        .collect();
    (rho, u)
}

/// Place `n_cars` cars so each carries the same mass of the piecewise
/// constant Riemann density on `[x_lo, x_hi]`, with `h = mass / n_cars`.
/// Velocities sample the initial velocity field.
#[allow(clippy::too_many_arguments)]
pub fn riemann_placement(
    rho_l: f64,
    u_l: f64,
    rho_r: f64,
    u_r: f64,
    x0: f64,
    x_lo: f64,
    x_hi: f64,
    n_cars: usize,
) -> Result<MicroState> {
    if n_cars < 2 {
        return Err(Error::InvalidState("need at least 2 cars".into()));
    }
    for (name, rho) in [("rho_l", rho_l), ("rho_r", rho_r)] {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::domain(
                "riemann_placement",
                format!("{name} = {rho} outside [0, 1)"),
            ));
        }
    }
    let mass_l = rho_l * (x0 - x_lo).max(0.0);
    let mass_r = rho_r * (x_hi - x0).max(0.0);
    let mass = mass_l + mass_r;
    if mass <= 0.0 {
        return Err(Error::domain(
            "riemann_placement",
            "initial density is zero everywhere".to_string(),
        ));
    }
    let h = mass / n_cars as f64;
    let mut x = Vec::with_capacity(n_cars);
    let mut v = Vec::with_capacity(n_cars);
    for i in 0..n_cars {
        let target = i as f64 * h;
        let pos = if target < mass_l {
            x_lo + target / rho_l
        } else {
            x0 + (target - mass_l) / rho_r
        };
        x.push(pos);
        v.push(if pos < x0 { u_l } else { u_r });
    }
    let state = MicroState {
        x,
        v,
        h,
        t: 0.0,
        leader: LeaderPolicy::default(),
    };
    state.validate()?;
    Ok(state)
}

/// Configuration of a microscopic run with Riemann-type initial data.
#[derive(Clone, Debug)]
pub struct MicroConfig {
    pub model: MicroModel,
    pub params: ModelParameters,
    pub n_cars: usize,
    pub rho_l: f64,
    pub u_l: f64,
    pub rho_r: f64,
    pub u_r: f64,
    pub x0: f64,
    /// Placement interval; extend it leftward of the comparison window so
    /// the truncated platoon tail cannot influence the window.
    pub x_lo: f64,
    pub x_hi: f64,
    pub t_end: f64,
    /// Fixed step; defaults to `0.2 * h / v_ref`.
    pub dt: Option<f64>,
    /// Reconstruction grid: left edge, cell width, cell count.
    pub grid: (f64, f64, usize),
    pub output_times: Vec<f64>,
}

/// One snapshot of a micro run: the state plus its reconstruction.
#[derive(Clone, Debug)]
pub struct MicroSnapshot {
    pub t: f64,
    pub state: MicroState,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MicroRun {
    pub snapshots: Vec<MicroSnapshot>,
    pub steps: usize,
}

/// Integrate a micro configuration and reconstruct (rho, u) at each output
/// time.
pub fn run_micro(config: &MicroConfig) -> Result<MicroRun> {
    let mut state = riemann_placement(
        config.rho_l,
        config.u_l,
        config.rho_r,
        config.u_r,
        config.x0,
        config.x_lo,
        config.x_hi,
        config.n_cars,
    )?;
    let dt = config.dt.unwrap_or(0.2 * state.h / config.params.v_ref);
    let mut targets = if config.output_times.is_empty() {
        vec![config.t_end]
    } else {
        config.output_times.clone()
    };
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (gx, gdx, gn) = config.grid;
    let mut snapshots = Vec::new();
    let mut steps = 0usize;
    for target in targets {
        while state.t < target - 1e-14 * target.max(1.0) {
            let step_dt = dt.min(target - state.t);
            state = rk4_step(&state, step_dt, config.model, &config.params)?;
            steps += 1;
        }
        state.t = target;
        let (rho, u) = density_reconstruct(&state, gx, gdx, gn);
        snapshots.push(MicroSnapshot {
            t: target,
            state: state.clone(),
            rho,
            u,
        });
    }
    Ok(MicroRun { snapshots, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ModelParameters {
        ModelParameters::normalized()
    }

    fn two_cars(gap: f64, v0: f64, v1: f64, h: f64) -> MicroState {
        MicroState {
            x: vec![0.0, gap],
            v: vec![v0, v1],
            h,
            t: 0.0,
            leader: LeaderPolicy::default(),
        }
    }

    #[test]
    fn equal_velocities_are_an_equilibrium() {
        let p = params();
        let s = MicroState {
            x: vec![0.0, 1.7, 3.1, 5.0],
            v: vec![0.4; 4],
            h: 1.0,
            t: 0.0,
            leader: LeaderPolicy::default(),
        };
        for model in [MicroModel::RascleFollow, MicroModel::HJFollow] {
            let acc = micro_rhs(model, &s, &p).unwrap();
            assert!(acc.iter().all(|&a| a == 0.0), "{model:?}");
        }
    }

    #[test]
    fn following_law_values() {
        let p = params();
        // l = 2, dv = 1, h = 1, v_ref = 1
        let s = two_cars(2.0, 0.0, 1.0, 1.0);
        let acc = micro_rhs(MicroModel::RascleFollow, &s, &p).unwrap();
        assert_relative_eq!(acc[0], 0.5, epsilon = 1e-15);
        assert_eq!(acc[1], 0.0);
        let acc = micro_rhs(MicroModel::HJFollow, &s, &p).unwrap();
        assert_relative_eq!(acc[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn hj_law_is_odd_in_relative_velocity() {
        let p = params();
        for dv in [0.1, 0.35, 0.8] {
            let fwd =
                micro_rhs(MicroModel::HJFollow, &two_cars(2.0, 0.5, 0.5 + dv, 1.0), &p).unwrap()[0];
            let bwd =
                micro_rhs(MicroModel::HJFollow, &two_cars(2.0, 0.5, 0.5 - dv, 1.0), &p).unwrap()[0];
            assert!((fwd + bwd).abs() < 1e-12);
        }
    }

    #[test]
    fn collision_is_reported() {
        let p = params();
        let s = two_cars(0.9, 0.0, 0.0, 1.0);
        match micro_rhs(MicroModel::RascleFollow, &s, &p) {
            Err(Error::Collision { index: 0, .. }) => {}
            other => panic!("expected collision, got {other:?}"),
        }
    }

    #[test]
    fn uniform_platoon_translates_rigidly() {
        let p = params();
        let s = MicroState {
            x: vec![0.0, 2.0, 4.0],
            v: vec![0.5; 3],
            h: 1.0,
            t: 0.0,
            leader: LeaderPolicy::default(),
        };
        let next = rk4_step(&s, 0.4, MicroModel::RascleFollow, &p).unwrap();
        for i in 0..3 {
            assert_relative_eq!(next.x[i], s.x[i] + 0.2, epsilon = 1e-14);
            assert_eq!(next.v[i], 0.5);
        }
    }

    #[test]
    fn follower_approaches_leader_monotonically() {
        // dv shrinks monotonically; the coupling weakens as the gap opens,
        // so the follower closes in on the leader speed without reaching it.
        let p = params();
        let mut s = two_cars(2.0, 0.0, 1.0, 1.0);
        let mut dv = 1.0f64;
        for _ in 0..2000 {
            s = rk4_step(&s, 0.01, MicroModel::RascleFollow, &p).unwrap();
            let new_dv = s.v[1] - s.v[0];
            assert!(new_dv <= dv + 1e-12);
            assert!(new_dv >= 0.0);
            dv = new_dv;
        }
        assert!(dv < 0.6, "relative velocity should have shrunk: dv = {dv}");
    }

    #[test]
    fn rk4_self_convergence_is_fourth_order() {
        let p = params();
        let initial = two_cars(2.0, 0.2, 0.8, 1.0);
        let run = |dt: f64| {
            let mut s = initial.clone();
            let steps = (1.0 / dt).round() as usize;
            for _ in 0..steps {
                s = rk4_step(&s, dt, MicroModel::RascleFollow, &p).unwrap();
            }
            s
        };
        let c = run(0.02);
        let m = run(0.01);
        let f = run(0.005);
        let e1 = (c.x[0] - m.x[0]).abs() + (c.v[0] - m.v[0]).abs();
        let e2 = (m.x[0] - f.x[0]).abs() + (m.v[0] - f.v[0]).abs();
        let order = (e1 / e2).log2();
        assert!(
            order >= 3.8,
            "measured order {order} (e1 = {e1}, e2 = {e2})"
        );
    }

    #[test]
    fn hopeless_step_fails_after_twenty_halvings() {
        let p = params();
        // follower about to ram a standing leader; even 2^-20 of the step
        // still closes the remaining 1e-9 gap margin
        let s = two_cars(1.0 + 1e-9, 1.0, 0.0, 1.0);
        match rk4_step(&s, 1.0, MicroModel::RascleFollow, &p) {
            Err(Error::StepFailure { halvings: 20 }) => {}
            other => panic!("expected step failure, got {other:?}"),
        }
    }

    #[test]
    fn ordering_and_velocity_bounds_hold_along_a_run() {
        let p = params();
        let mut s = riemann_placement(0.5, 1.0, 0.5, 0.0, 0.5, -0.2, 1.0, 60).unwrap();
        for _ in 0..400 {
            s = rk4_step(&s, 0.2 * s.h, MicroModel::RascleFollow, &p).unwrap();
            s.validate().unwrap();
            assert!(s.v.iter().all(|&v| (0.0..=p.w_max).contains(&v)));
        }
    }

    #[test]
    fn reconstruction_of_equal_spacing() {
        let s = MicroState {
            x: (0..21).map(|i| i as f64 * 2.0).collect(),
            v: vec![0.7; 21],
            h: 1.0,
            t: 0.0,
            leader: LeaderPolicy::default(),
        };
        let (rho, u) = density_reconstruct(&s, 0.0, 0.5, 80);
        // interior cells all read h / l = 0.5
        for j in 0..80 {
            assert_relative_eq!(rho[j], 0.5, epsilon = 1e-12);
            assert_relative_eq!(u[j], 0.7, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_pair_yields_one_sample() {
        let s = two_cars(2.0, 0.3, 0.9, 1.0);
        let samples = headway_samples(&s);
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0], (1.0, 0.5, 0.3));
        let (rho, _) = density_reconstruct(&s, -1.0, 0.5, 8);
        // mass h = 1 lands entirely inside [0, 2]
        let total: f64 = rho.iter().sum::<f64>() * 0.5;
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        assert_eq!(rho[0], 0.0);
    }

    #[test]
    fn placement_inverts_reconstruction() {
        // platoon initialized from piecewise-constant densities comes back
        // as that profile up to one cell at the jump and platoon edges
        let s = riemann_placement(0.5, 0.0, 0.9, 0.5, 0.5, 0.0, 1.0, 400).unwrap();
        let n = 50;
        let dx = 1.0 / n as f64;
        let (rho, _) = density_reconstruct(&s, 0.0, dx, n);
        for j in 2..n - 2 {
            let x = (j as f64 + 0.5) * dx;
            if (x - 0.5).abs() < 1.5 * dx {
                continue;
            }
            let expected = if x < 0.5 { 0.5 } else { 0.9 };
            assert!(
                (rho[j] - expected).abs() < 0.05,
                "cell {j} at x = {x}: rho = {}",
                rho[j]
            );
        }
    }

    #[test]
    fn run_micro_keeps_platoon_with_empty_road_behind() {
        // tail of a moving group: nobody slows down
        let cfg = MicroConfig {
            model: MicroModel::RascleFollow,
            params: params(),
            n_cars: 40,
            rho_l: 0.0,
            u_l: 1.0,
            rho_r: 0.5,
            u_r: 1.0,
            x0: 0.5,
            x_lo: 0.0,
            x_hi: 1.0,
            t_end: 0.2,
            dt: None,
            grid: (0.0, 0.01, 100),
            output_times: vec![],
        };
        let run = run_micro(&cfg).unwrap();
        let last = run.snapshots.last().unwrap();
        assert!(last.state.v.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        // the platoon translated by 0.2
        assert_relative_eq!(last.state.x[0], 0.5 + 0.2, epsilon = 1e-9);
    }

    #[test]
    fn two_cars_same_speed_keep_spacing() {
        let cfg = MicroConfig {
            model: MicroModel::HJFollow,
            params: params(),
            n_cars: 2,
            rho_l: 0.4,
            u_l: 0.5,
            rho_r: 0.4,
            u_r: 0.5,
            x0: 0.5,
            x_lo: 0.0,
            x_hi: 1.0,
            t_end: 0.3,
            dt: None,
            grid: (0.0, 0.1, 10),
            output_times: vec![],
        };
        let run = run_micro(&cfg).unwrap();
        let s = &run.snapshots.last().unwrap().state;
        assert_relative_eq!(s.x[1] - s.x[0], 0.5, epsilon = 1e-10);
    }
}
