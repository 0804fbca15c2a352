//! The susceptible / infected / predator system
//!
//! ```text
//! S' = Λ(θ_t ω) − μS − f(S,I,P)P − βSI
//! I' = βSI − η g(S,I,P) I − cI
//! P' = γ f(S,I,P)P + rη g(S,I,P) I − δ₁P − δ₂P²
//! ```
//!
//! together with the derived thresholds that delimit its forward-invariant
//! and absorbing region `K_δ`, the susceptible persistence bound and the
//! simultaneous extinction criterion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::responses::FunctionalResponse;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// Natural death rate of prey.
    pub mu: f64,
    /// Disease incidence rate.
    pub beta: f64,
    /// Predation rate on infected prey.
    pub eta: f64,
    /// Death rate of infected prey.
    pub c: f64,
    /// Conversion of susceptible prey into predator biomass.
    pub gamma: f64,
    /// Conversion of infected prey into predator biomass.
    pub r: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl ModelParams {
    pub const FIELDS: [&'static str; 8] = ["mu", "beta", "eta", "c", "gamma", "r", "delta1", "delta2"];

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.named() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(
                    format!("model.{name}"),
                    format!("must be positive and finite, got {value}"),
                ));
            }
        }
        if !(self.mu < self.c) {
            return Err(Error::invalid(
                "model.mu",
                format!("requires mu < c (got mu={}, c={})", self.mu, self.c),
            ));
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("mu", self.mu),
            ("beta", self.beta),
            ("eta", self.eta),
            ("c", self.c),
            ("gamma", self.gamma),
            ("r", self.r),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
        ]
    }

    pub fn field_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "mu" => &mut self.mu,
            "beta" => &mut self.beta,
            "eta" => &mut self.eta,
            "c" => &mut self.c,
            "gamma" => &mut self.gamma,
            "r" => &mut self.r,
            "delta1" => &mut self.delta1,
            "delta2" => &mut self.delta2,
            _ => return None,
        })
    }

    /// `max{γ, r}`.
    pub fn a_u(&self) -> f64 {
        self.gamma.max(self.r)
    }

    /// `min{γ, r}`.
    pub fn a_l(&self) -> f64 {
        self.gamma.min(self.r)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            mu: 0.5,
            beta: 0.2,
            eta: 0.1,
            c: 1.0,
            gamma: 0.6,
            r: 0.4,
            delta1: 0.8,
            delta2: 0.05,
        }
    }
}

/// Population densities. Every model variant uses this triple; the SI
/// system keeps `p = 0` and the SP system keeps `i = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct State {
    pub s: f64,
    pub i: f64,
    pub p: f64,
}

impl State {
    pub const fn new(s: f64, i: f64, p: f64) -> Self {
        Self { s, i, p }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.s, self.i, self.p]
    }

    pub fn from_array([s, i, p]: [f64; 3]) -> Self {
        Self { s, i, p }
    }

    pub fn min_component(&self) -> f64 {
        self.s.min(self.i).min(self.p)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.s >= 0.0 && self.i >= 0.0 && self.p >= 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.i.is_finite() && self.p.is_finite()
    }

    pub fn distance(&self, other: &State) -> f64 {
        ((self.s - other.s).powi(2) + (self.i - other.i).powi(2) + (self.p - other.p).powi(2)).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.s.abs().max(self.i.abs()).max(self.p.abs())
    }

    pub(crate) fn validate_nonnegative(&self, field: &str) -> Result<()> {
        if self.is_finite() && self.is_nonnegative() {
            Ok(())
        } else {
            Err(Error::invalid(
                field,
                format!("state must be finite and componentwise nonnegative, got ({}, {}, {})", self.s, self.i, self.p),
            ))
        }
    }
}

/// Right-hand side `(dS, dI, dP)` at recruitment `lambda`.
///
/// A compartment that is exactly zero has exactly zero rate for `I` and `P`,
/// so the invariant planes `I = 0` and `P = 0` are preserved bit for bit.
pub fn vector_field<R: FunctionalResponse + ?Sized>(
    params: &ModelParams,
    response: &R,
    lambda: f64,
    x: State,
) -> [f64; 3] {
    let State { s, i, p } = x;
    let f = response.f(s, i, p);
    let g = response.g(s, i, p);
    let ds = lambda - params.mu * s - f * p - params.beta * s * i;
    let di = if i == 0.0 {
        0.0
    } else {
        params.beta * s * i - params.eta * g * i - params.c * i
    };
    let dp = if p == 0.0 {
        0.0
    } else {
        params.gamma * f * p + params.r * params.eta * g * i - params.delta1 * p - params.delta2 * p * p
    };
    [ds, di, dp]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub a_u: f64,
    pub a_l: f64,
    /// Upper bound `Θᵘ` for `N = aᵘS + rI + P`.
    pub theta_u: f64,
    /// Lower bound `Θ_δˡ` for `M = aˡS + rI + P`.
    pub theta_l_delta: f64,
    pub delta: f64,
    /// Signed; only its positivity certifies persistence.
    pub xi_delta: f64,
    pub zeta_delta: f64,
}

pub(crate) fn validate_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("noise.eps", format!("must lie in (0, 1), got {eps}")))
    }
}

pub(crate) fn validate_q0(q0: f64) -> Result<()> {
    if q0.is_finite() && q0 > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("noise.q0", format!("must be positive, got {q0}")))
    }
}

pub(crate) fn validate_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("pullback.delta", format!("must be nonnegative, got {delta}")))
    }
}

/// `Θᵘ = aᵘΛᵘ / min{μ, δ₁}`.
pub fn theta_u(params: &ModelParams, lambda_hi: f64) -> f64 {
    params.a_u() * lambda_hi / params.mu.min(params.delta1)
}

/// `Θ_δˡ = max{0, (aˡΛˡ − δ₂(Θᵘ+δ)²) / max{c, δ₁}}`.
pub fn theta_l(params: &ModelParams, lambda_lo: f64, theta_u: f64, delta: f64) -> f64 {
    let raw = (params.a_l() * lambda_lo - params.delta2 * (theta_u + delta).powi(2)) / params.c.max(params.delta1);
    raw.max(0.0)
}

pub fn compute_thresholds<R: FunctionalResponse + ?Sized>(
    params: &ModelParams,
    response: &R,
    q0: f64,
    eps: f64,
    delta: f64,
) -> Result<Thresholds> {
    params.validate()?;
    validate_q0(q0)?;
    validate_eps(eps)?;
    validate_delta(delta)?;
    let lambda_lo = q0 * (1.0 - eps);
    let lambda_hi = q0 * (1.0 + eps);
    let a_u = params.a_u();
    let theta_u = theta_u(params, lambda_hi);
    let bound = theta_u + delta;
    Ok(Thresholds {
        lambda_lo,
        lambda_hi,
        a_u,
        a_l: params.a_l(),
        theta_u,
        theta_l_delta: theta_l(params, lambda_lo, theta_u, delta),
        delta,
        xi_delta: lambda_lo - response.f(bound / a_u, 0.0, 0.0) * bound,
        zeta_delta: params.mu + params.beta * (bound / params.r),
    })
}

/// `(M, N) = (aˡS + rI + P, aᵘS + rI + P)`.
pub fn mn_values(a_u: f64, a_l: f64, r: f64, x: State) -> (f64, f64) {
    let rest = r * x.i + x.p;
    (a_l * x.s + rest, a_u * x.s + rest)
}

/// Membership in `K_δ = {Θ_δˡ ≤ M, N ≤ Θᵘ + δ}`.
pub fn in_region_k(th: &Thresholds, r: f64, x: State) -> bool {
    in_region_k_tol(th, r, x, 0.0)
}

/// As [`in_region_k`], with both boundary comparisons relaxed by `tol`.
pub fn in_region_k_tol(th: &Thresholds, r: f64, x: State, tol: f64) -> bool {
    let (m, n) = mn_values(th.a_u, th.a_l, r, x);
    x.is_nonnegative() && th.theta_l_delta - tol <= m && n <= th.theta_u + th.delta + tol
}

/// `ξ_δ / ζ_δ`: a lower bound on the susceptible component of every
/// attractor section whenever it is positive.
pub fn persistence_bound(th: &Thresholds) -> f64 {
    th.xi_delta / th.zeta_delta
}

/// A strict inequality `lhs < rhs`, reported as `margin = rhs − lhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition {
    pub holds: bool,
    pub margin: f64,
}

impl Condition {
    pub fn from_margin(margin: f64) -> Self {
        Self {
            holds: margin > 0.0,
            margin,
        }
    }
}

/// Sufficient conditions for the attractor to collapse onto the
/// infection-free and/or predator-free boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionReport {
    /// `βΘᵘ/aᵘ < c` for the full system, `βΛᵘ/μ < c` for SI.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infected: Option<Condition>,
    /// `γ f(Θᵘ/aᵘ, 0, 0) < δ₁` for the full system, `γ f̄(Θ̂ᵘ/γ, 0) < δ₁` for SP.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predator: Option<Condition>,
}

impl CriterionReport {
    /// Every condition present holds.
    pub fn certified(&self) -> bool {
        self.infected.iter().chain(&self.predator).all(|c| c.holds)
    }
}

pub fn extinction_criterion<R: FunctionalResponse + ?Sized>(
    params: &ModelParams,
    response: &R,
    th: &Thresholds,
) -> CriterionReport {
    let s_max = th.theta_u / th.a_u;
    CriterionReport {
        infected: Some(Condition::from_margin(params.c - params.beta * s_max)),
        predator: Some(Condition::from_margin(params.delta1 - params.gamma * response.f(s_max, 0.0, 0.0))),
    }
}

/// The same criterion specialised to `f = kS`, written directly in terms of
/// the recruitment bound: `βΛᵘ/(c·min{μ,δ₁}) < 1` and
/// `γkΛᵘ/(δ₁·min{μ,δ₁}) < 1`. Margins are on the normalised scale.
pub fn holling1_extinction_criterion(params: &ModelParams, k: f64, lambda_hi: f64) -> CriterionReport {
    let slow = params.mu.min(params.delta1);
    CriterionReport {
        infected: Some(Condition::from_margin(1.0 - params.beta * lambda_hi / (params.c * slow))),
        predator: Some(Condition::from_margin(
            1.0 - params.gamma * k * lambda_hi / (params.delta1 * slow),
        )),
    }
}
