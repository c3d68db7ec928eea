//! Exact Riemann solution for the Aw-Rascle-type system with the pressure
//! law `p(rho) = -v_ref ln(1 - rho)`, used as ground truth for the Riemann
//! experiments.
//!
//! The first characteristic family transports `w = u + p(rho)`; its shock
//! and rarefaction curves coincide in (rho, w), so the intermediate state
//! follows from matching `w_l` against the downstream velocity. The second
//! family is the contact moving at `u_r`. Densities here are normalized
//! (`rho in [0, 1)`).

use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::params::ModelParameters;
use crate::state::{pressure, pressure_inverse};

/// First-family wave of the solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FirstWave {
    /// Degenerate (equal matched states or vacuum left data).
    None,
    Shock {
        speed: f64,
    },
    Rarefaction {
        head: f64,
        tail: f64,
    },
}

/// Complete description of the self-similar solution.
#[derive(Clone, Debug)]
pub struct WaveStructure {
    pub left: (f64, f64),
    pub right: (f64, f64),
    pub first_wave: FirstWave,
    /// State between the first wave and the contact; `(0, w_l)` when the
    /// solution opens a vacuum.
    pub middle: (f64, f64),
    /// Similarity-coordinate interval with zero density, if any.
    pub vacuum: Option<(f64, f64)>,
    /// Speed of the contact discontinuity (= u_r).
    pub contact_speed: f64,
    pub v_ref: f64,
}

fn a_of(rho: f64, v_ref: f64) -> f64 {
    v_ref * rho / (1.0 - rho)
}

fn lambda1(rho: f64, u: f64, v_ref: f64) -> f64 {
    u - a_of(rho, v_ref)
}

/// Solve the Riemann problem for normalized left/right states `(rho, u)`.
///
/// A vacuum region opens when `u_r` exceeds the escape velocity
/// `u_l + p(rho_l)`. Left vacuum data (`rho_l = 0`) leaves only the
/// contact; both-sides-vacuum data is rejected.
pub fn solve_riemann(
    left: (f64, f64),
    right: (f64, f64),
    params: &ModelParameters,
) -> Result<WaveStructure> {
    let v_ref = params.v_ref;
    let (rho_l, u_l) = left;
    let (rho_r, u_r) = right;
    for (name, rho) in [("rho_l", rho_l), ("rho_r", rho_r)] {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::domain(
                "solve_riemann",
                format!("{name} = {rho} outside [0, 1)"),
            ));
        }
    }
    for u in [u_l, u_r] {
        if !u.is_finite() {
            return Err(Error::domain(
                "solve_riemann",
                "non-finite velocity".to_string(),
            ));
        }
    }
    if rho_l == 0.0 && rho_r == 0.0 {
        return Err(Error::UnsupportedRiemannData(
            "both states are vacuum".into(),
        ));
    }

    if rho_l == 0.0 {
        // No 1-wave can emerge from vacuum; a single contact remains.
        return Ok(WaveStructure {
            left,
            right,
            first_wave: FirstWave::None,
            middle: (0.0, u_r),
            vacuum: None,
            contact_speed: u_r,
            v_ref,
        });
    }

    let w_l = u_l + pressure(rho_l, v_ref)?;
    let head = lambda1(rho_l, u_l, v_ref);

    if rho_r == 0.0 {
        // Full rarefaction into an empty road; no contact behind it.
        return Ok(WaveStructure {
            left,
            right,
            first_wave: FirstWave::Rarefaction { head, tail: w_l },
            middle: (0.0, w_l),
            vacuum: Some((w_l, f64::INFINITY)),
            contact_speed: u_r,
            v_ref,
        });
    }

    if u_r > w_l {
        // Escape velocity exceeded: rarefaction down to vacuum, then a
        // vacuum interval up to the contact.
        return Ok(WaveStructure {
            left,
            right,
            first_wave: FirstWave::Rarefaction { head, tail: w_l },
            middle: (0.0, w_l),
            vacuum: Some((w_l, u_r)),
            contact_speed: u_r,
            v_ref,
        });
    }

    // Matched intermediate state: w constant across the 1-wave, u matches
    // the contact.
    let rho_m = pressure_inverse(w_l - u_r, v_ref)?;
    let u_m = u_r;
    let first_wave = if u_l > u_m {
        // compression: 1-shock with the Rankine-Hugoniot speed
        let speed = (rho_m * u_m - rho_l * u_l) / (rho_m - rho_l);
        FirstWave::Shock { speed }
    } else if u_l < u_m {
        FirstWave::Rarefaction {
            head,
            tail: lambda1(rho_m, u_m, v_ref),
        }
    } else {
        FirstWave::None
    };
    Ok(WaveStructure {
        left,
        right,
        first_wave,
        middle: (rho_m, u_m),
        vacuum: None,
        contact_speed: u_r,
        v_ref,
    })
}

/// Density inside a rarefaction fan: solve `lambda_1(rho) = xi` along
/// `w = w_l` by bisection (`lambda_1` is monotone along the fan).
fn fan_density(ws: &WaveStructure, xi: f64) -> f64 {
    let w_l = ws.left.1 + pressure(ws.left.0, ws.v_ref).expect("validated on construction");
    let mut lo = ws.middle.0; // smallest density in the fan
    let mut hi = ws.left.0;
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let lam = w_l - pressure(mid, ws.v_ref).unwrap() - a_of(mid, ws.v_ref);
        if lam > xi {
            // fan speed too fast -> density too small
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Evaluate the self-similar solution at `xi = x / t`.
///
/// Inside a vacuum interval the density is zero and the velocity is
/// reported as zero (matching the vacuum convention of the solver).
pub fn sample(ws: &WaveStructure, xi: f64) -> (f64, f64) {
    let w_l = if ws.left.0 > 0.0 {
        ws.left.1 + pressure(ws.left.0, ws.v_ref).expect("validated on construction")
    } else {
        ws.left.1
    };
    match ws.first_wave {
        FirstWave::None => {
            if xi < ws.contact_speed {
                if ws.left.0 == 0.0 {
                    ws.left
                } else {
                    ws.middle
                }
            } else {
                ws.right
            }
        }
        FirstWave::Shock { speed } => {
            if xi < speed {
                ws.left
            } else if xi < ws.contact_speed {
                ws.middle
            } else {
                ws.right
            }
        }
        FirstWave::Rarefaction { head, tail } => {
            if xi < head {
                return ws.left;
            }
            if xi <= tail {
                let rho = fan_density(ws, xi);
                let u = w_l - pressure(rho, ws.v_ref).unwrap();
                return (rho, u);
            }
            if let Some((lo, hi)) = ws.vacuum {
                if xi >= lo && xi < hi {
                    return (0.0, 0.0);
                }
            }
            if xi < ws.contact_speed {
                ws.middle
            } else {
                ws.right
            }
        }
    }
}

/// Sample the solution of a Riemann problem centered at `x0` at time `t`
/// onto cell centers of a uniform grid. At `t = 0` this is the initial
/// step function.
pub fn sample_on_grid(
    ws: &WaveStructure,
    x0: f64,
    t: f64,
    x_lo: f64,
    dx: f64,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let samples = map_indexed(n, |i| {
        let x = x_lo + (i as f64 + 0.5) * dx;
        if t > 0.0 {
            sample(ws, (x - x0) / t)
        } else if x < x0 {
            ws.left
        } else {
            ws.right
        }
    });
    samples.into_iter().unzip()
}

/// Largest weak-form residual of the structure: Rankine-Hugoniot across the
/// 1-shock and the contact, and the spread of `w = u + p(rho)` along the
/// rarefaction fan. Used by consistency tests.
pub fn weak_form_residual(ws: &WaveStructure) -> f64 {
    let mut worst = 0.0f64;
    let flux = |rho: f64, u: f64| {
        let w = u + pressure(rho, ws.v_ref).unwrap_or(0.0);
        ([rho, rho * w], [rho * u, rho * w * u])
    };
    let rh = |a: (f64, f64), b: (f64, f64), s: f64| -> f64 {
        let (ua, fa) = flux(a.0, a.1);
        let (ub, fb) = flux(b.0, b.1);
        let mut r = 0.0f64;
        for c in 0..2 {
            r = r.max((s * (ub[c] - ua[c]) - (fb[c] - fa[c])).abs());
        }
        r
    };
    match ws.first_wave {
        FirstWave::Shock { speed } => {
            worst = worst.max(rh(ws.left, ws.middle, speed));
            // w must be preserved exactly across the 1-shock
            let w_l = ws.left.1 + pressure(ws.left.0, ws.v_ref).unwrap();
            let w_m = ws.middle.1 + pressure(ws.middle.0, ws.v_ref).unwrap();
            worst = worst.max((w_l - w_m).abs());
        }
        FirstWave::Rarefaction { head, tail } => {
            let w_l = ws.left.1 + pressure(ws.left.0, ws.v_ref).unwrap();
            for k in 0..=32 {
                let xi = head + (tail - head) * k as f64 / 32.0;
                let (rho, u) = sample(ws, xi);
                if rho > 0.0 {
                    let w = u + pressure(rho, ws.v_ref).unwrap();
                    worst = worst.max((w - w_l).abs());
                }
            }
        }
        FirstWave::None => {}
    }
    if ws.vacuum.is_none() && ws.right.0 > 0.0 && ws.middle.0 > 0.0 {
        worst = worst.max(rh(ws.middle, ws.right, ws.contact_speed));
    }
    worst
}
