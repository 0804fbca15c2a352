//! Partial dynamics: the SI epidemic system (no predators) and the SP
//! predator–prey system (no infection).
//!
//! Both reuse [`ModelParams`]; fields a subsystem does not involve are ignored.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate_delta, validate_eps, validate_q0, Condition, CriterionReport, ModelParams, State};
use crate::responses::FunctionalResponse;

/// `(S, I)` for the SI system, `(S, P)` for the SP system.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PlanarState {
    pub first: f64,
    pub second: f64,
}

impl PlanarState {
    pub const fn new(first: f64, second: f64) -> Self {
        Self { first, second }
    }

    /// Embed as `(S, I, 0)`.
    pub fn to_si_state(self) -> State {
        State::new(self.first, self.second, 0.0)
    }

    /// Embed as `(S, 0, P)`.
    pub fn to_sp_state(self) -> State {
        State::new(self.first, 0.0, self.second)
    }
}

fn recruitment_bounds(q0: f64, eps: f64) -> Result<(f64, f64)> {
    validate_q0(q0)?;
    validate_eps(eps)?;
    Ok((q0 * (1.0 - eps), q0 * (1.0 + eps)))
}

// ---------------------------------------------------------------------------
// SI

/// `(Λ − μS − βSI, βSI − cI)`.
pub fn si_vector_field(params: &ModelParams, lambda: f64, x: PlanarState) -> [f64; 2] {
    let PlanarState { first: s, second: i } = x;
    let ds = lambda - params.mu * s - params.beta * s * i;
    let di = if i == 0.0 { 0.0 } else { params.beta * s * i - params.c * i };
    [ds, di]
}

/// Closed interval for `V = S + I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains_tol(&self, v: f64, tol: f64) -> bool {
        self.lo - tol <= v && v <= self.hi + tol
    }
}

/// `V_δ = [Λˡ/c − δ, Λᵘ/μ + δ]`, forward invariant for `0 < δ ≤ Λˡ/c`.
pub fn si_region_v(params: &ModelParams, q0: f64, eps: f64, delta: f64) -> Result<Interval> {
    params.validate()?;
    let (lo, hi) = recruitment_bounds(q0, eps)?;
    let floor = lo / params.c;
    if !(delta > 0.0 && delta <= floor) {
        return Err(Error::invalid(
            "pullback.delta",
            format!("SI region needs 0 < delta <= Lambda_lo/c = {floor}, got {delta}"),
        ));
    }
    Ok(Interval {
        lo: floor - delta,
        hi: hi / params.mu + delta,
    })
}

pub fn in_region_v(region: &Interval, x: PlanarState, tol: f64) -> bool {
    x.first >= 0.0 && x.second >= 0.0 && region.contains_tol(x.first + x.second, tol)
}

/// `Λˡ / (μ + βΛᵘ/μ)`.
pub fn si_persistence_bound(params: &ModelParams, q0: f64, eps: f64) -> Result<f64> {
    params.validate()?;
    let (lo, hi) = recruitment_bounds(q0, eps)?;
    Ok(lo / (params.mu + params.beta * hi / params.mu))
}

/// `βΛᵘ/μ < c` certifies sections `(S*(ω), 0)`.
pub fn si_extinction_criterion(params: &ModelParams, q0: f64, eps: f64) -> Result<CriterionReport> {
    params.validate()?;
    let (_, hi) = recruitment_bounds(q0, eps)?;
    Ok(CriterionReport {
        infected: Some(Condition::from_margin(params.c - params.beta * hi / params.mu)),
        predator: None,
    })
}

// ---------------------------------------------------------------------------
// SP

/// `(Λ − μS − f̄(S,P)P, γf̄(S,P)P − δ₁P − δ₂P²)` with `f̄(S,P) = f(S,0,P)`.
pub fn sp_vector_field<R: FunctionalResponse + ?Sized>(
    params: &ModelParams,
    response: &R,
    lambda: f64,
    x: PlanarState,
) -> [f64; 2] {
    let PlanarState { first: s, second: p } = x;
    let f = response.f(s, 0.0, p);
    let ds = lambda - params.mu * s - f * p;
    let dp = if p == 0.0 {
        0.0
    } else {
        params.gamma * f * p - params.delta1 * p - params.delta2 * p * p
    };
    [ds, dp]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpThresholds {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// `Θ̂ᵘ = γΛᵘ / min{μ, δ₁}`.
    pub theta_hat_u: f64,
    /// `Θ̂_δˡ = max{0, (γΛˡ − δ₂(Θ̂ᵘ+δ)²) / max{μ, δ₁}}`.
    pub theta_hat_l_delta: f64,
    pub delta: f64,
}

impl SpThresholds {
    /// Membership of `W = γS + P` in `W_δ = [Θ̂_δˡ, Θ̂ᵘ + δ]`.
    pub fn in_region_w(&self, gamma: f64, x: PlanarState, tol: f64) -> bool {
        let w = gamma * x.first + x.second;
        x.first >= 0.0 && x.second >= 0.0 && self.theta_hat_l_delta - tol <= w && w <= self.theta_hat_u + self.delta + tol
    }
}

pub fn sp_thresholds(params: &ModelParams, q0: f64, eps: f64, delta: f64) -> Result<SpThresholds> {
    params.validate()?;
    let (lo, hi) = recruitment_bounds(q0, eps)?;
    validate_delta(delta)?;
    let theta_hat_u = params.gamma * hi / params.mu.min(params.delta1);
    let raw = (params.gamma * lo - params.delta2 * (theta_hat_u + delta).powi(2)) / params.mu.max(params.delta1);
    Ok(SpThresholds {
        lambda_lo: lo,
        lambda_hi: hi,
        theta_hat_u,
        theta_hat_l_delta: raw.max(0.0),
        delta,
    })
}

/// `(Λˡ − Θ̂ᵘ f̄(Θ̂ᵘ/γ, 0)) / μ`, signed.
pub fn sp_persistence_bound<R: FunctionalResponse + ?Sized>(
    params: &ModelParams,
    response: &R,
    q0: f64,
    eps: f64,
) -> Result<f64> {
    let th = sp_thresholds(params, q0, eps, 0.0)?;
    let fbar = response.f(th.theta_hat_u / params.gamma, 0.0, 0.0);
    Ok((th.lambda_lo - th.theta_hat_u * fbar) / params.mu)
}

/// `γ f̄(Θ̂ᵘ/γ, 0) < δ₁` certifies sections `(S*(ω), 0)`.
pub fn sp_extinction_criterion<R: FunctionalResponse + ?Sized>(
    params: &ModelParams,
    response: &R,
    q0: f64,
    eps: f64,
) -> Result<CriterionReport> {
    let th = sp_thresholds(params, q0, eps, 0.0)?;
    let fbar = response.f(th.theta_hat_u / params.gamma, 0.0, 0.0);
    Ok(CriterionReport {
        infected: None,
        predator: Some(Condition::from_margin(params.delta1 - params.gamma * fbar)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::vector_field;
    use crate::responses::ResponseSpec;

    fn p1() -> ModelParams {
        ModelParams::default()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn si_field_examples() {
        let [ds, di] = si_vector_field(&p1(), 1.0, PlanarState::new(2.0, 1.0));
        assert!(close(ds, -0.4, 1e-15) && close(di, -0.6, 1e-15));
        assert_eq!(si_vector_field(&p1(), 1.0, PlanarState::new(2.0, 0.0))[1], 0.0);
        assert_eq!(si_vector_field(&p1(), 0.7, PlanarState::new(0.0, 3.0))[0], 0.7);
    }

    #[test]
    fn si_region_examples() {
        let v = si_region_v(&p1(), 1.0, 0.1, 0.5).unwrap();
        assert!(close(v.lo, 0.4, 1e-12) && close(v.hi, 2.7, 1e-12));
        let v = si_region_v(&p1(), 1.0, 0.1, 0.9).unwrap();
        assert_eq!(v.lo, 0.0);
        assert!(si_region_v(&p1(), 1.0, 0.1, 0.95).is_err());
        assert!(si_region_v(&p1(), 1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn si_bounds_and_criterion() {
        let b = si_persistence_bound(&p1(), 1.0, 0.1).unwrap();
        assert!(close(b, 0.9 / 0.94, 1e-12) && close(b, 0.95745, 1e-5));
        let tiny_beta = ModelParams { beta: 1e-12, ..p1() };
        assert!(close(si_persistence_bound(&tiny_beta, 1.0, 0.1).unwrap(), 0.9 / 0.5, 1e-9));
        let small_eps = si_persistence_bound(&p1(), 1.0, 1e-9).unwrap();
        assert!(close(small_eps, 1.0 / (0.5 + 0.2 / 0.5), 1e-8));

        let rep = si_extinction_criterion(&p1(), 1.0, 0.1).unwrap();
        let cond = rep.infected.unwrap();
        assert!(cond.holds && close(cond.margin, 0.56, 1e-12));
        assert!(rep.predator.is_none());

        // βΛᵘ/μ = 0.5·1.5/0.75 = 1 = c exactly.
        let edge = ModelParams { mu: 0.75, beta: 0.5, c: 1.0, ..p1() };
        let cond = si_extinction_criterion(&edge, 1.0, 0.5).unwrap().infected.unwrap();
        assert_eq!(cond.margin, 0.0);
        assert!(!cond.holds);

        let big = ModelParams { beta: 10.0, ..p1() };
        let cond = si_extinction_criterion(&big, 1.0, 0.1).unwrap().infected.unwrap();
        assert!(!cond.holds && cond.margin < 0.0);
    }

    #[test]
    fn sp_field_examples() {
        let h = ResponseSpec::holling1(1.0);
        let [ds, dp] = sp_vector_field(&p1(), &h, 1.0, PlanarState::new(1.0, 1.0));
        assert!(close(ds, -0.5, 1e-15) && close(dp, -0.25, 1e-15));
        assert_eq!(sp_vector_field(&p1(), &h, 1.0, PlanarState::new(3.0, 0.0))[1], 0.0);
        let [ds, dp] = sp_vector_field(&p1(), &h, 0.9, PlanarState::new(0.0, 2.0));
        assert_eq!(ds, 0.9);
        assert!(close(dp, -0.8 * 2.0 - 0.05 * 4.0, 1e-15));
    }

    #[test]
    fn sp_threshold_examples() {
        let th = sp_thresholds(&p1(), 1.0, 0.1, 0.0).unwrap();
        assert!(close(th.theta_hat_u, 1.32, 1e-12));
        assert!(close(th.theta_hat_l_delta, (0.54 - 0.05 * 1.7424) / 0.8, 1e-12));
        assert!(close(th.theta_hat_l_delta, 0.5661, 1e-12));
        assert!(th.in_region_w(0.6, PlanarState::new(1.0, 0.5), 0.0));
        let clamped = sp_thresholds(&ModelParams { delta2: 1e6, ..p1() }, 1.0, 0.1, 0.0).unwrap();
        assert_eq!(clamped.theta_hat_l_delta, 0.0);
    }

    #[test]
    fn sp_bounds_and_criterion() {
        let b = sp_persistence_bound(&p1(), &ResponseSpec::holling1(0.1), 1.0, 0.1).unwrap();
        assert!(close(b, 1.2192, 1e-12));
        let b = sp_persistence_bound(&p1(), &ResponseSpec::holling1(1e-12), 1.0, 0.1).unwrap();
        assert!(close(b, 1.8, 1e-9));
        assert!(sp_persistence_bound(&p1(), &ResponseSpec::holling1(10.0), 1.0, 0.1).unwrap() < 0.0);

        let rep = sp_extinction_criterion(&p1(), &ResponseSpec::holling1(0.3), 1.0, 0.1).unwrap();
        assert!(rep.certified() && close(rep.predator.unwrap().margin, 0.8 - 0.396, 1e-12));
        let rep = sp_extinction_criterion(&p1(), &ResponseSpec::holling1(1.0), 1.0, 0.1).unwrap();
        assert!(!rep.certified());
        let rep = sp_extinction_criterion(&p1(), &ResponseSpec::holling1(1e-9), 1.0, 0.1).unwrap();
        assert!(rep.certified());
    }

    #[test]
    fn embedding_spot_check() {
        let h = ResponseSpec::default_for("crowley_martin").unwrap();
        let x = PlanarState::new(1.3, 0.7);
        let full = vector_field(&p1(), &h, 1.05, x.to_sp_state());
        assert_eq!([full[0], full[2]], sp_vector_field(&p1(), &h, 1.05, x));
        let full = vector_field(&p1(), &h, 1.05, x.to_si_state());
        assert_eq!([full[0], full[1]], si_vector_field(&p1(), 1.05, x));
    }
}
