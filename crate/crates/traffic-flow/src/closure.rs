//! Kinetic closure formulas: reduced density, headway distribution, braking
//! probability, the closed Enskog interaction terms for the four interaction
//! laws, and the coefficient families a(rho, u) and b(rho, u) they induce.

use crate::error::{Error, Result};
use crate::params::ModelParameters;

/// Interaction law behind the closed Enskog term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosureVariant {
    /// Equidistributed post-interaction velocities.
    BoltzmannEx1,
    /// Post-interaction velocities bounded by `beta * v` and `min(alpha*v, w)`.
    BoltzmannEx2,
    /// Linear force law (eta = 1).
    FokkerPlanckEta1,
    /// Quadratic force law (eta = 2).
    FokkerPlanckEta2,
}

/// Which coefficient branch applies, decided by the sign of the velocity
/// gradient ahead. Zero gradient is mapped to `Braking`; every gradient
/// term vanishes there, so the choice only fixes which branch value the
/// Jacobians see at the kink.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Braking,
    Accelerating,
}

impl Branch {
    pub fn from_gradient(du_dx: f64) -> Branch {
        if du_dx > 0.0 {
            Branch::Accelerating
        } else {
            Branch::Braking
        }
    }
}

fn check_density(rho: f64, h_b: f64, context: &'static str) -> Result<()> {
    if !rho.is_finite() || rho < 0.0 || rho * h_b >= 1.0 {
        return Err(Error::domain(
            context,
            format!("density {rho} outside [0, 1/H_B) with H_B = {h_b}"),
        ));
    }
    Ok(())
}

/// Reduced density `rho / (1 - rho * h_b)`: the density left after removing
/// the minimal-headway space.
pub fn reduced_density(rho: f64, h_b: f64) -> Result<f64> {
    check_density(rho, h_b, "reduced_density")?;
    Ok(rho / (1.0 - rho * h_b))
}

/// Headway probability density `q(h; rho)`: a shifted exponential with
/// support `[h_b, inf)`, rate `reduced_density(rho)` and mean `1/rho`.
pub fn headway_pdf(h: f64, rho: f64, h_b: f64) -> Result<f64> {
    check_density(rho, h_b, "headway_pdf")?;
    if rho == 0.0 {
        return Err(Error::domain(
            "headway_pdf",
            "undefined at rho = 0".to_string(),
        ));
    }
    if h < h_b {
        return Ok(0.0);
    }
    let rt = rho / (1.0 - rho * h_b);
    Ok(rt * (-rt * (h - h_b)).exp())
}

/// Probability that a driver has to brake,
/// `P_B = 1 - (1 - rho*h_b) * exp(-reduced_density * h_b)`.
pub fn braking_probability(rho: f64, h_b: f64) -> Result<f64> {
    check_density(rho, h_b, "braking_probability")?;
    let rt = rho / (1.0 - rho * h_b);
    Ok(1.0 - (1.0 - rho * h_b) * (-rt * h_b).exp())
}

/// Closed Enskog interaction term E for the chosen interaction law.
///
/// The braking branch applies for `du_dx < 0` (weights `q_b`, `P_B`, `h_b`),
/// the acceleration branch for `du_dx > 0` (weights `q_a`, `h_a`), and the
/// term vanishes at zero gradient. E enters the momentum balance as
/// `d_t(rho u) + d_x(rho u^2) + E = 0`, so E >= 0 brakes and E <= 0
/// accelerates.
pub fn enskog_term(
    variant: ClosureVariant,
    rho: f64,
    u: f64,
    du_dx: f64,
    params: &ModelParameters,
) -> Result<f64> {
    check_density(rho, params.h_b, "enskog_term")?;
    if !(0.0..=params.w_max).contains(&u) {
        return Err(Error::domain(
            "enskog_term",
            format!("velocity {u} outside [0, {}]", params.w_max),
        ));
    }
    if du_dx == 0.0 {
        return Ok(0.0);
    }
    let e = if du_dx < 0.0 {
        let pb = braking_probability(rho, params.h_b)?;
        let qb = params.q_b;
        let hb = params.h_b;
        match variant {
            ClosureVariant::BoltzmannEx1 => -qb * pb * rho * hb * hb * du_dx * du_dx.abs(),
            ClosureVariant::BoltzmannEx2 => {
                -qb * pb * rho * hb * (1.0 - params.beta) / 2.0 * u * du_dx
            }
            ClosureVariant::FokkerPlanckEta1 => -params.v_ref * qb * pb * rho * hb * du_dx,
            ClosureVariant::FokkerPlanckEta2 => {
                -params.c_eta * qb * pb * rho * hb * hb * du_dx.abs() * du_dx
            }
        }
    } else {
        let qa = params.q_a;
        let ha = params.h_a;
        match variant {
            ClosureVariant::BoltzmannEx1 => -qa * rho * ha * ha * du_dx * du_dx.abs(),
            ClosureVariant::BoltzmannEx2 => {
                let target = (params.alpha * u).min(params.w_max);
                -qa * rho * ha * (target - u) / 2.0 * du_dx
            }
            ClosureVariant::FokkerPlanckEta1 => -params.v_ref * qa * rho * ha * du_dx,
            ClosureVariant::FokkerPlanckEta2 => {
                -params.c_eta * qa * rho * ha * ha * du_dx.abs() * du_dx
            }
        }
    };
    Ok(e)
}

/// General coefficient a(rho, u) of the quasilinear momentum closure, with
/// injectable velocity factors `f_a`, `f_b` (both default to the constant
/// `v_ref` elsewhere in the crate).
///
/// The interaction-rate weights are absorbed into the headway distribution
/// here: the braking branch carries `q(h_b; rho) = reduced_density` and the
/// acceleration branch `q(h_a; rho)`. Explicit `q_a`/`q_b` weights only
/// enter the raw [`enskog_term`] evaluators.
pub fn coeff_a(
    rho: f64,
    u: f64,
    branch: Branch,
    params: &ModelParameters,
    f_a: impl Fn(f64) -> f64,
    f_b: impl Fn(f64) -> f64,
) -> Result<f64> {
    let rt = reduced_density(rho, params.h_b)?;
    Ok(match branch {
        Branch::Braking => {
            let pb = braking_probability(rho, params.h_b)?;
            params.h_b * pb * rt * f_b(u)
        }
        Branch::Accelerating => {
            let dh = params.h_a - params.h_b;
            params.h_a * rt * (-rt * dh).exp() * f_a(u)
        }
    })
}

/// Hamilton-Jacobi coefficient b(rho): same structure as [`coeff_a`] with
/// squared threshold distances and no velocity factor.
pub fn coeff_b(rho: f64, branch: Branch, params: &ModelParameters) -> Result<f64> {
    let rt = reduced_density(rho, params.h_b)?;
    Ok(match branch {
        Branch::Braking => {
            let pb = braking_probability(rho, params.h_b)?;
            params.h_b * params.h_b * pb * rt
        }
        Branch::Accelerating => {
            let dh = params.h_a - params.h_b;
            params.h_a * params.h_a * rt * (-rt * dh).exp()
        }
    })
}

/// Simplified single-threshold coefficient `a(rho) = v_ref / (1/(rho h) - 1)`.
pub fn coeff_a_simplified(rho: f64, params: &ModelParameters) -> f64 {
    let r = params.clamp_density(rho.max(0.0)) * params.h;
    params.v_ref * r / (1.0 - r)
}

/// Simplified single-threshold coefficient `b(rho) = h / (1/(rho h) - 1)`.
pub fn coeff_b_simplified(rho: f64, params: &ModelParameters) -> f64 {
    let r = params.clamp_density(rho.max(0.0)) * params.h;
    params.h * r / (1.0 - r)
}

/// Effective coefficient of the merged model,
/// `b(rho) * min(|du_dx|, C)` with the simplified b.
pub fn merged_coefficient(rho: f64, du_dx: f64, params: &ModelParameters) -> Result<f64> {
    check_density(rho, params.h, "merged_coefficient")?;
    Ok(coeff_b_simplified(rho, params) * du_dx.abs().min(params.c_limit))
}

/// Coefficient value together with its partial derivatives, as consumed by
/// the analytic Jacobians of the solver.
#[derive(Clone, Copy, Debug)]
pub struct CoeffEval {
    pub value: f64,
    pub d_rho: f64,
    pub d_u: f64,
}

/// How the solver evaluates the momentum coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CoefficientProfile {
    /// Single-threshold family: `a(rho) = v_ref/(1/(rho h) - 1)` and
    /// `b(rho) = h/(1/(rho h) - 1)`; both branches coincide.
    #[default]
    Simplified,
    /// Full two-threshold family with the constant velocity factors
    /// `f_A = f_B = v_ref`; branch selected by the gradient sign.
    Kinetic,
}

impl CoefficientProfile {
    /// Evaluate a(rho, u) with a density clamped below the singular ceiling.
    pub fn a(&self, rho: f64, _u: f64, branch: Branch, params: &ModelParameters) -> CoeffEval {
        let rho = params.clamp_density(rho.max(0.0));
        match self {
            CoefficientProfile::Simplified => {
                let r = rho * params.h;
                CoeffEval {
                    value: params.v_ref * r / (1.0 - r),
                    d_rho: params.v_ref * params.h / ((1.0 - r) * (1.0 - r)),
                    d_u: 0.0,
                }
            }
            CoefficientProfile::Kinetic => {
                let (base, d_base) = kinetic_base(rho, branch, params);
                CoeffEval {
                    value: params.v_ref * threshold(branch, params) * base,
                    d_rho: params.v_ref * threshold(branch, params) * d_base,
                    d_u: 0.0,
                }
            }
        }
    }

    /// Evaluate b(rho, u) with a density clamped below the singular ceiling.
    pub fn b(&self, rho: f64, _u: f64, branch: Branch, params: &ModelParameters) -> CoeffEval {
        let rho = params.clamp_density(rho.max(0.0));
        match self {
            CoefficientProfile::Simplified => {
                let r = rho * params.h;
                CoeffEval {
                    value: params.h * r / (1.0 - r),
                    d_rho: params.h * params.h / ((1.0 - r) * (1.0 - r)),
                    d_u: 0.0,
                }
            }
            CoefficientProfile::Kinetic => {
                let (base, d_base) = kinetic_base(rho, branch, params);
                let th = threshold(branch, params);
                CoeffEval {
                    value: th * th * base,
                    d_rho: th * th * d_base,
                    d_u: 0.0,
                }
            }
        }
    }
}

fn threshold(branch: Branch, params: &ModelParameters) -> f64 {
    match branch {
        Branch::Braking => params.h_b,
        Branch::Accelerating => params.h_a,
    }
}

/// Branch-dependent density factor of the kinetic coefficient table and its
/// rho-derivative: `P_B * reduced_density` when braking,
/// `reduced_density * exp(-reduced_density (h_a - h_b))` when accelerating.
fn kinetic_base(rho: f64, branch: Branch, params: &ModelParameters) -> (f64, f64) {
    let hb = params.h_b;
    let one_minus = 1.0 - rho * hb;
    let rt = rho / one_minus;
    let drt = 1.0 / (one_minus * one_minus);
    match branch {
        Branch::Braking => {
            let pb = 1.0 - one_minus * (-rt * hb).exp();
            let dpb = hb * (-rt * hb).exp() * (1.0 + 1.0 / one_minus);
            (pb * rt, dpb * rt + pb * drt)
        }
        Branch::Accelerating => {
            let dh = params.h_a - hb;
            let e = (-rt * dh).exp();
            (rt * e, drt * e * (1.0 - rt * dh))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParameters {
        ModelParameters::normalized()
    }

    #[test]
    fn reduced_density_values() {
        assert_eq!(reduced_density(0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(reduced_density(0.5, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(reduced_density(0.9, 1.0).unwrap(), 9.0, epsilon = 1e-12);
        assert!(reduced_density(1.0, 1.0).is_err());
        assert!(reduced_density(2.0, 0.5).is_err());
        assert!(reduced_density(-0.1, 1.0).is_err());
    }

    #[test]
    fn headway_pdf_support_and_boundary_value() {
        assert_eq!(headway_pdf(0.5, 0.5, 1.0).unwrap(), 0.0);
        // q(h_b; rho) equals the reduced density.
        assert_relative_eq!(headway_pdf(1.0, 0.5, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        // q(h_a; rho) = reduced * exp(-reduced * (h_a - h_b))
        let rt = reduced_density(0.5, 1.0).unwrap();
        assert_relative_eq!(
            headway_pdf(1.5, 0.5, 1.0).unwrap(),
            rt * (-rt * 0.5).exp(),
            epsilon = 1e-15
        );
        assert!(headway_pdf(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn headway_pdf_quadrature_identities() {
        // Normalization 1 and mean headway 1/rho, by adaptive quadrature.
        for k in 1..=9 {
            let rho = 0.1 * k as f64;
            let h_b = 1.0;
            let rt = reduced_density(rho, h_b).unwrap();
            let upper = h_b + 60.0 / rt;
            let norm = adaptive_simpson(|h| headway_pdf(h, rho, h_b).unwrap(), 0.0, upper, 1e-11);
            let mean =
                adaptive_simpson(|h| h * headway_pdf(h, rho, h_b).unwrap(), 0.0, upper, 1e-11);
            assert!((norm - 1.0).abs() < 1e-8, "rho = {rho}: norm = {norm}");
            assert!(
                (mean - 1.0 / rho).abs() < 1e-8,
                "rho = {rho}: mean = {mean}"
            );
        }
    }

    #[test]
    fn braking_probability_values() {
        assert_eq!(braking_probability(0.0, 1.0).unwrap(), 0.0);
        // 1 - 0.5 * exp(-1)
        assert_relative_eq!(
            braking_probability(0.5, 1.0).unwrap(),
            1.0 - 0.5 * (-1.0f64).exp(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            braking_probability(0.5, 1.0).unwrap(),
            0.816060,
            epsilon = 1e-6
        );
        // approaches 1 towards the jam density
        assert!(braking_probability(1.0 - 1e-9, 1.0).unwrap() > 1.0 - 1e-6);
        // monotone increasing (strictly until it saturates at 1 in f64)
        let mut last = 0.0;
        for k in 1..=99 {
            let p = braking_probability(0.01 * k as f64, 1.0).unwrap();
            assert!(p >= last);
            if last < 1.0 - 1e-12 {
                assert!(p > last);
            }
            last = p;
        }
    }

    #[test]
    fn enskog_zero_gradient_vanishes() {
        let p = params();
        for v in [
            ClosureVariant::BoltzmannEx1,
            ClosureVariant::BoltzmannEx2,
            ClosureVariant::FokkerPlanckEta1,
            ClosureVariant::FokkerPlanckEta2,
        ] {
            assert_eq!(enskog_term(v, 0.5, 0.5, 0.0, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn enskog_fokker_planck_braking_value() {
        let p = params();
        let pb = braking_probability(0.5, 1.0).unwrap();
        let e = enskog_term(ClosureVariant::FokkerPlanckEta1, 0.5, 0.5, -1.0, &p).unwrap();
        assert_relative_eq!(e, pb * 0.5, epsilon = 1e-15);
        assert_relative_eq!(e, 0.408030, epsilon = 1e-6);
    }

    #[test]
    fn enskog_boltzmann_ex2_acceleration_value() {
        // -q_a * rho * h_a * (min(alpha*u, w) - u)/2 * du_dx
        // with alpha = 3, u = 0.5, w = 1: -0.5 * 0.25 = -0.125
        let mut p = params();
        p.alpha = 3.0;
        let e = enskog_term(ClosureVariant::BoltzmannEx2, 0.5, 0.5, 1.0, &p).unwrap();
        assert_relative_eq!(e, -0.125, epsilon = 1e-15);
    }

    #[test]
    fn enskog_sign_contract() {
        // E pushes u toward the downstream velocity: E >= 0 when braking
        // (du < 0), E <= 0 when accelerating (du > 0).
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for variant in [
            ClosureVariant::BoltzmannEx1,
            ClosureVariant::BoltzmannEx2,
            ClosureVariant::FokkerPlanckEta1,
            ClosureVariant::FokkerPlanckEta2,
        ] {
            for _ in 0..1000 {
                let rho = rng.gen_range(1e-6..0.999);
                let u = rng.gen_range(0.0..=1.0);
                let du = rng.gen_range(-5.0..5.0);
                let e = enskog_term(variant, rho, u, du, &p).unwrap();
                assert!(
                    e * du <= 0.0,
                    "{variant:?}: E = {e} has the same sign as du = {du}"
                );
            }
        }
    }

    #[test]
    fn enskog_domain_errors() {
        let p = params();
        assert!(enskog_term(ClosureVariant::BoltzmannEx1, 1.0, 0.5, 1.0, &p).is_err());
        assert!(enskog_term(ClosureVariant::BoltzmannEx1, 0.5, 1.5, 1.0, &p).is_err());
        assert!(enskog_term(ClosureVariant::BoltzmannEx1, 0.5, -0.1, 1.0, &p).is_err());
    }

    #[test]
    fn coeff_a_reduces_to_simplified_form() {
        // With h_a = h_b = h and f = v_ref the acceleration branch equals
        // the simplified a(rho) exactly, and the braking branch equals it
        // after dividing out P_B.
        let p = params();
        let vref = |_u: f64| p.v_ref;
        for k in 1..=9 {
            let rho = 0.1 * k as f64;
            let simplified = coeff_a_simplified(rho, &p);
            let accel = coeff_a(rho, 0.5, Branch::Accelerating, &p, vref, vref).unwrap();
            assert_relative_eq!(accel, simplified, epsilon = 1e-12);
            let pb = braking_probability(rho, p.h_b).unwrap();
            let brake = coeff_a(rho, 0.5, Branch::Braking, &p, vref, vref).unwrap();
            assert_relative_eq!(brake / pb, simplified, epsilon = 1e-12);
        }
        assert_relative_eq!(coeff_a_simplified(0.5, &p), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn coeff_b_values_and_branch_ratio() {
        let p = params();
        assert_relative_eq!(coeff_b_simplified(0.5, &p), 1.0, epsilon = 1e-15);
        assert_eq!(coeff_b_simplified(0.0, &p), 0.0);
        // b_brake / b_accel = P_B when h_a = h_b.
        for k in 1..=9 {
            let rho = 0.1 * k as f64;
            let brake = coeff_b(rho, Branch::Braking, &p).unwrap();
            let accel = coeff_b(rho, Branch::Accelerating, &p).unwrap();
            let pb = braking_probability(rho, p.h_b).unwrap();
            assert_relative_eq!(brake / accel, pb, epsilon = 1e-12);
        }
    }

    #[test]
    fn coefficients_positive_on_admissible_range() {
        let mut p = params();
        p.h_a = 1.5;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vref = |_u: f64| p.v_ref;
        for _ in 0..500 {
            let rho = rng.gen_range(1e-9..0.999);
            let u = rng.gen_range(0.0..=1.0);
            for branch in [Branch::Braking, Branch::Accelerating] {
                assert!(coeff_a(rho, u, branch, &p, vref, vref).unwrap() > 0.0);
                assert!(coeff_b(rho, branch, &p).unwrap() > 0.0);
            }
        }
        // a -> 0 as rho -> 0
        assert!(coeff_a(1e-12, 0.5, Branch::Braking, &p, vref, vref).unwrap() < 1e-11);
        assert!(coeff_a(1e-12, 0.5, Branch::Accelerating, &p, vref, vref).unwrap() < 1e-11);
    }

    #[test]
    fn merged_coefficient_caps_the_gradient() {
        let mut p = params();
        p.c_limit = 1.0;
        assert_eq!(merged_coefficient(0.5, 0.0, &p).unwrap(), 0.0);
        // below the cap: b * |du| = 1 * 0.5
        assert_relative_eq!(
            merged_coefficient(0.5, -0.5, &p).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        // cap active: b * C = 1
        assert_relative_eq!(
            merged_coefficient(0.5, 5.0, &p).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn enskog_consistent_with_coefficient_table() {
        // The momentum source -rho * a * du reproduces the eta = 1 braking
        // Enskog term when q_b is set to the reduced density, and the eta=2
        // term reproduces -rho * b * |du| du likewise (c_eta = 1).
        let vref = |_u: f64| 1.0;
        for k in 1..=9 {
            let rho = 0.1 * k as f64;
            let mut p = params();
            p.q_b = reduced_density(rho, p.h_b).unwrap();
            p.q_a = headway_pdf(p.h_a, rho, p.h_b).unwrap();
            for du in [-0.7, 0.9] {
                let branch = Branch::from_gradient(du);
                let a = coeff_a(rho, 0.5, branch, &p, vref, vref).unwrap();
                let e1 = enskog_term(ClosureVariant::FokkerPlanckEta1, rho, 0.5, du, &p).unwrap();
                assert_relative_eq!(e1, -rho * a * du, epsilon = 1e-12);
                let b = coeff_b(rho, branch, &p).unwrap();
                let e2 = enskog_term(ClosureVariant::FokkerPlanckEta2, rho, 0.5, du, &p).unwrap();
                assert_relative_eq!(e2, -rho * b * du.abs() * du, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let mut p = params();
        p.h_a = 1.4;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for profile in [CoefficientProfile::Simplified, CoefficientProfile::Kinetic] {
            for _ in 0..200 {
                let rho = rng.gen_range(0.02..0.6);
                let u = rng.gen_range(0.0..1.0);
                for branch in [Branch::Braking, Branch::Accelerating] {
                    let h = 1e-6;
                    let a = profile.a(rho, u, branch, &p);
                    let fd = (profile.a(rho + h, u, branch, &p).value
                        - profile.a(rho - h, u, branch, &p).value)
                        / (2.0 * h);
                    assert!(
                        (a.d_rho - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                        "{profile:?} {branch:?} a' at rho = {rho}: {} vs {fd}",
                        a.d_rho
                    );
                    let b = profile.b(rho, u, branch, &p);
                    let fd = (profile.b(rho + h, u, branch, &p).value
                        - profile.b(rho - h, u, branch, &p).value)
                        / (2.0 * h);
                    assert!(
                        (b.d_rho - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                        "{profile:?} {branch:?} b' at rho = {rho}: {} vs {fd}",
                        b.d_rho
                    );
                }
            }
        }
    }

    #[test]
    fn kinetic_profile_matches_free_functions() {
        let mut p = params();
        p.h_a = 1.3;
        let vref = |_u: f64| p.v_ref;
        for k in 1..=7 {
            let rho = 0.1 * k as f64;
            for branch in [Branch::Braking, Branch::Accelerating] {
                let a = CoefficientProfile::Kinetic.a(rho, 0.4, branch, &p).value;
                assert_relative_eq!(
                    a,
                    coeff_a(rho, 0.4, branch, &p, vref, vref).unwrap(),
                    epsilon = 1e-14
                );
                let b = CoefficientProfile::Kinetic.b(rho, 0.4, branch, &p).value;
                assert_relative_eq!(b, coeff_b(rho, branch, &p).unwrap(), epsilon = 1e-14);
            }
        }
    }
}
