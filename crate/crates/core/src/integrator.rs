//! Positivity-preserving explicit Runge–Kutta integration of the
//! non-autonomous field `u' = F(θ_t ω, u)`.
//!
//! Two methods: classical RK4 on a fixed grid and Dormand–Prince 5(4) with
//! adaptive steps. Stages evaluate the recruitment at their exact times
//! `t + cᵢh`. A step whose result has a component below
//! `-10 * positivity_floor` is rejected and retried at half the step; smaller
//! negative round-off is clamped to zero.

use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::dynamics::{Dynamics, Variant};
use crate::error::{Error, Result};
use crate::model::State;
use crate::noise::NoiseRealization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rk4Fixed => "rk4_fixed",
            Method::Rk45Adaptive => "rk45_adaptive",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4_fixed" => Ok(Method::Rk4Fixed),
            "rk45_adaptive" => Ok(Method::Rk45Adaptive),
            other => Err(Error::invalid(
                "integrator.method",
                format!("expected rk4_fixed or rk45_adaptive, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4; initial step for the adaptive method.
    pub step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    pub positivity_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45Adaptive,
            step: 0.1,
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_steps: 10_000_000,
            positivity_floor: 1e-12,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4Fixed,
            step,
            ..Self::default()
        }
    }

    pub fn adaptive(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("integrator.step", self.step),
            ("integrator.abs_tol", self.abs_tol),
            ("integrator.rel_tol", self.rel_tol),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(field, format!("must be positive, got {value}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("integrator.max_steps", "must be at least 1"));
        }
        if !(self.positivity_floor.is_finite() && self.positivity_floor >= 0.0) {
            return Err(Error::invalid(
                "integrator.positivity_floor",
                format!("must be nonnegative, got {}", self.positivity_floor),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub variant: Variant,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, State)> {
        Some((*self.times.last()?, *self.states.last()?))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, State)> + '_ {
        self.times.iter().copied().zip(self.states.iter().copied())
    }

    /// CSV with header `t,S,I,P` (or the variant's columns).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t"];
        header.extend_from_slice(self.variant.columns());
        w.write_record(&header)?;
        for (t, x) in self.iter() {
            let mut row = vec![csv_number(t)];
            row.extend(self.variant.project(x).into_iter().map(csv_number));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn csv_number(v: f64) -> String {
    format!("{v:?}")
}

/// Solve on `[t0, t1]`, recording every accepted step (every grid point for
/// RK4). The last sample is at exactly `t1`.
pub fn integrate(
    dynamics: &Dynamics<'_>,
    omega: &NoiseRealization,
    t0: f64,
    t1: f64,
    x0: State,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if !(t1 > t0) {
        return Err(Error::invalid("t1", format!("must exceed t0 (t0={t0}, t1={t1})")));
    }
    let mut times = vec![t0];
    let mut states = vec![x0];
    drive(dynamics, omega, t0, t1, x0, cfg, |t, x| {
        times.push(t);
        states.push(x);
    })?;
    Ok(Trajectory {
        times,
        states,
        variant: dynamics.variant(),
    })
}

/// The cocycle `φ(t, ω, x0) = u(t; 0, ω, x0)`.
pub fn flow_phi(
    dynamics: &Dynamics<'_>,
    omega: &NoiseRealization,
    t: f64,
    x0: State,
    cfg: &IntegratorConfig,
) -> Result<State> {
    if t == 0.0 {
        check_start(dynamics, x0)?;
        return Ok(x0);
    }
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("flow time must be nonnegative, got {t}")));
    }
    drive(dynamics, omega, 0.0, t, x0, cfg, |_, _| {})
}

/// Endpoint of the solution on `[t0, t1]` without storing samples.
pub fn solve_endpoint(
    dynamics: &Dynamics<'_>,
    omega: &NoiseRealization,
    t0: f64,
    t1: f64,
    x0: State,
    cfg: &IntegratorConfig,
) -> Result<State> {
    if !(t1 > t0) {
        return Err(Error::invalid("t1", format!("must exceed t0 (t0={t0}, t1={t1})")));
    }
    drive(dynamics, omega, t0, t1, x0, cfg, |_, _| {})
}

fn check_start(dynamics: &Dynamics<'_>, x0: State) -> Result<()> {
    x0.validate_nonnegative("x0")?;
    if !dynamics.variant().admits(x0) {
        return Err(Error::invalid(
            "x0",
            format!("inactive compartment must be zero for variant {}", dynamics.variant()),
        ));
    }
    Ok(())
}

fn drive(
    dynamics: &Dynamics<'_>,
    omega: &NoiseRealization,
    t0: f64,
    t1: f64,
    x0: State,
    cfg: &IntegratorConfig,
    observer: impl FnMut(f64, State),
) -> Result<State> {
    cfg.validate()?;
    check_start(dynamics, x0)?;
    let mut stepper = Stepper {
        dynamics,
        omega,
        cfg,
        steps: 0,
        min_step: 1e-12 * (t1 - t0),
        target: t1,
    };
    match cfg.method {
        Method::Rk4Fixed => stepper.run_rk4(t0, t1, x0, observer),
        Method::Rk45Adaptive => stepper.run_dopri(t0, t1, x0, observer),
    }
}

type Vec3 = [f64; 3];

fn axpy(x: Vec3, h: f64, terms: &[(f64, &Vec3)]) -> Vec3 {
    let mut out = x;
    for k in 0..3 {
        let mut acc = 0.0;
        for (coef, v) in terms {
            acc += coef * v[k];
        }
        out[k] = x[k] + h * acc;
    }
    out
}

struct Stepper<'a, 'b> {
    dynamics: &'a Dynamics<'b>,
    omega: &'a NoiseRealization,
    cfg: &'a IntegratorConfig,
    steps: usize,
    min_step: f64,
    target: f64,
}

enum Proposal {
    Accept(Vec3),
    Negative,
}

impl Stepper<'_, '_> {
    fn rhs(&self, t: f64, x: Vec3) -> Result<Vec3> {
        let lambda = self.omega.lambda_at(t)?;
        Ok(self.dynamics.rates(lambda, State::from_array(x)))
    }

    fn count_step(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > self.cfg.max_steps {
            return Err(Error::MaxSteps {
                max_steps: self.cfg.max_steps,
                target: self.target,
            });
        }
        Ok(())
    }

    /// Clamp round-off negatives or flag a genuine positivity violation.
    fn screen(&self, t: f64, mut y: Vec3) -> Result<Proposal> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        let reject_below = -10.0 * self.cfg.positivity_floor;
        for v in &mut y {
            if *v < reject_below {
                return Ok(Proposal::Negative);
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Proposal::Accept(y))
    }

    // -- classical RK4 ------------------------------------------------------

    fn rk4_step(&mut self, t: f64, x: Vec3, h: f64) -> Result<Vec3> {
        self.count_step()?;
        let k1 = self.rhs(t, x)?;
        let k2 = self.rhs(t + 0.5 * h, axpy(x, h, &[(0.5, &k1)]))?;
        let k3 = self.rhs(t + 0.5 * h, axpy(x, h, &[(0.5, &k2)]))?;
        let k4 = self.rhs(t + h, axpy(x, h, &[(1.0, &k3)]))?;
        Ok(axpy(
            x,
            h,
            &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
        ))
    }

    /// One grid interval, recursively halved while positivity fails.
    fn rk4_advance(&mut self, t: f64, x: Vec3, h: f64) -> Result<Vec3> {
        let y = self.rk4_step(t, x, h)?;
        match self.screen(t + h, y)? {
            Proposal::Accept(y) => Ok(y),
            Proposal::Negative => {
                let half = 0.5 * h;
                if half < self.min_step {
                    return Err(Error::StepUnderflow { t, h: half });
                }
                let mid = self.rk4_advance(t, x, half)?;
                self.rk4_advance(t + half, mid, half)
            }
        }
    }

    fn run_rk4(&mut self, t0: f64, t1: f64, x0: State, mut observer: impl FnMut(f64, State)) -> Result<State> {
        let h = self.cfg.step;
        let n = (((t1 - t0) / h) - 1e-9).ceil().max(1.0) as usize;
        let mut x = x0.to_array();
        let mut t = t0;
        for k in 1..=n {
            let next = if k == n { t1 } else { t0 + k as f64 * h };
            x = self.rk4_advance(t, x, next - t)?;
            t = next;
            observer(t, State::from_array(x));
        }
        Ok(State::from_array(x))
    }

    // -- Dormand–Prince 5(4) ---------------------------------------------------

    fn run_dopri(&mut self, t0: f64, t1: f64, x0: State, mut observer: impl FnMut(f64, State)) -> Result<State> {
        const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
        const A21: f64 = 1.0 / 5.0;
        const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
        const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
        const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
        const A6: [f64; 5] = [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
        ];
        // Fifth-order weights (also the last stage row).
        const B: [f64; 6] = [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ];
        // B minus the embedded fourth-order weights.
        const E: [f64; 7] = [
            35.0 / 384.0 - 5179.0 / 57600.0,
            0.0,
            500.0 / 1113.0 - 7571.0 / 16695.0,
            125.0 / 192.0 - 393.0 / 640.0,
            -2187.0 / 6784.0 + 92097.0 / 339200.0,
            11.0 / 84.0 - 187.0 / 2100.0,
            -1.0 / 40.0,
        ];
        const SAFETY: f64 = 0.9;

        let span = t1 - t0;
        let mut t = t0;
        let mut x = x0.to_array();
        let mut h = self.cfg.step.min(span);
        let mut k1 = self.rhs(t, x)?;

        while t < t1 {
            let mut last = t + h >= t1;
            if last {
                h = t1 - t;
            }
            let mut t_new = if last { t1 } else { t + h };
            // Never step across a kink of a piecewise-linear driver.
            let preferred = h;
            let clipped = match self.omega.next_breakpoint(t) {
                Some(b) if b < t_new => {
                    h = b - t;
                    t_new = b;
                    last = false;
                    true
                }
                _ => false,
            };
            self.count_step()?;
            let k2 = self.rhs(t + C[1] * h, axpy(x, h, &[(A21, &k1)]))?;
            let k3 = self.rhs(t + C[2] * h, axpy(x, h, &[(A3[0], &k1), (A3[1], &k2)]))?;
            let k4 = self.rhs(t + C[3] * h, axpy(x, h, &[(A4[0], &k1), (A4[1], &k2), (A4[2], &k3)]))?;
            let k5 = self.rhs(
                t + C[4] * h,
                axpy(x, h, &[(A5[0], &k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]),
            )?;
            let k6 = self.rhs(
                t + C[5] * h,
                axpy(
                    x,
                    h,
                    &[(A6[0], &k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)],
                ),
            )?;
            let y = axpy(
                x,
                h,
                &[(B[0], &k1), (B[2], &k3), (B[3], &k4), (B[4], &k5), (B[5], &k6)],
            );
            let proposal = if y.iter().all(|v| v.is_finite()) {
                self.screen(t_new, y)?
            } else {
                Proposal::Negative
            };
            let accepted = match proposal {
                Proposal::Negative => None,
                Proposal::Accept(y_clamped) => {
                    let k7 = self.rhs(t + C[6] * h, y)?;
                    let mut norm = 0.0f64;
                    for c in 0..3 {
                        let err = h
                            * (E[0] * k1[c] + E[2] * k3[c] + E[3] * k4[c] + E[4] * k5[c] + E[5] * k6[c] + E[6] * k7[c]);
                        let scale = self.cfg.abs_tol + self.cfg.rel_tol * x[c].abs().max(y[c].abs());
                        norm = norm.max(err.abs() / scale);
                    }
                    if norm.is_nan() {
                        norm = f64::INFINITY;
                    }
                    Some((y_clamped, y, k7, norm))
                }
            };

            match accepted {
                Some((y_clamped, y_raw, k7, norm)) if norm <= 1.0 => {
                    t = t_new;
                    k1 = if y_clamped == y_raw { k7 } else { self.rhs(t, y_clamped)? };
                    x = y_clamped;
                    observer(t, State::from_array(x));
                    let factor = if norm == 0.0 {
                        5.0
                    } else {
                        (SAFETY * norm.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if !last {
                        h *= factor;
                    }
                    if clipped {
                        h = h.max(preferred);
                    }
                }
                Some((_, _, _, norm)) => {
                    h *= (SAFETY * norm.powf(-0.2)).clamp(0.1, 1.0);
                }
                None => {
                    h *= 0.5;
                }
            }
            if t < t1 && h < self.min_step {
                return Err(Error::StepUnderflow { t, h });
            }
        }
        Ok(State::from_array(x))
    }
}
