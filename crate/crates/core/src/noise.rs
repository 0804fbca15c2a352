//! Bounded real noise driving the recruitment rate.
//!
//! A [`NoiseRealization`] is one sampled ω together with an accumulated time
//! offset, so that `lambda_at(ω, t)` evaluates Λ(θ_{t+offset} ω). Three drivers
//! are provided:
//!
//! * `Constant`: Λ ≡ q0 (the deterministic limit).
//! * `TorusRotation`: an irrational rotation on the k-torus; the phase is the
//!   sampled point and θ_t advances it by t·ν. Measure preserving and exactly
//!   shift-able.
//! * `SquashedOu`: a stationary Ornstein–Uhlenbeck path generated once on a
//!   fixed window by exact transition sampling, squashed with `tanh` and
//!   linearly interpolated between grid points.
//!
//! Every driver keeps Λ inside `[q0(1-eps), q0(1+eps)]`.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const DEFAULT_OU_STEP: f64 = 1e-2;
pub const DEFAULT_OU_T_MAX: f64 = 1e4;

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    Constant,
    TorusRotation {
        frequencies: Vec<f64>,
    },
    SquashedOu {
        /// Mean-reversion rate `a`.
        rate: f64,
        volatility: f64,
        /// The path is cached on `[-t_max, t_max]`.
        t_max: f64,
        step: f64,
    },
}

impl NoiseKind {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::Constant => "constant",
            NoiseKind::TorusRotation { .. } => "torus_rotation",
            NoiseKind::SquashedOu { .. } => "squashed_ou",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub q0: f64,
    pub eps: f64,
}

impl NoiseSpec {
    pub fn constant(q0: f64, eps: f64) -> Self {
        Self {
            kind: NoiseKind::Constant,
            q0,
            eps,
        }
    }

    pub fn torus(q0: f64, eps: f64, frequencies: Vec<f64>) -> Self {
        Self {
            kind: NoiseKind::TorusRotation { frequencies },
            q0,
            eps,
        }
    }

    pub fn squashed_ou(q0: f64, eps: f64, rate: f64, volatility: f64, t_max: f64, step: f64) -> Self {
        Self {
            kind: NoiseKind::SquashedOu {
                rate,
                volatility,
                t_max,
                step,
            },
            q0,
            eps,
        }
    }

    /// Torus driver with frequencies (√2, √3).
    pub fn default_torus(q0: f64, eps: f64) -> Self {
        Self::torus(q0, eps, vec![2f64.sqrt(), 3f64.sqrt()])
    }

    pub fn lambda_lo(&self) -> f64 {
        self.q0 * (1.0 - self.eps)
    }

    pub fn lambda_hi(&self) -> f64 {
        self.q0 * (1.0 + self.eps)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q0.is_finite() && self.q0 > 0.0) {
            return Err(Error::invalid("noise.q0", format!("must be positive, got {}", self.q0)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid(
                "noise.eps",
                format!("must lie in (0, 1) so that the recruitment stays positive, got {}", self.eps),
            ));
        }
        match &self.kind {
            NoiseKind::Constant => {}
            NoiseKind::TorusRotation { frequencies } => {
                if frequencies.is_empty() {
                    return Err(Error::invalid("noise.frequencies", "torus dimension must be at least 1"));
                }
                if let Some(nu) = frequencies.iter().find(|nu| !nu.is_finite() || **nu == 0.0) {
                    return Err(Error::invalid(
                        "noise.frequencies",
                        format!("every frequency must be finite and nonzero, got {nu}"),
                    ));
                }
            }
            NoiseKind::SquashedOu {
                rate,
                volatility,
                t_max,
                step,
            } => {
                for (field, value) in [
                    ("noise.rate", rate),
                    ("noise.volatility", volatility),
                    ("noise.t_max", t_max),
                    ("noise.step", step),
                ] {
                    if !(value.is_finite() && *value > 0.0) {
                        return Err(Error::invalid(field, format!("must be positive, got {value}")));
                    }
                }
                if step > t_max {
                    return Err(Error::invalid("noise.step", format!("must not exceed noise.t_max={t_max}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Phase {
    Constant,
    Torus(Vec<f64>),
    Ou(Arc<[f64]>),
}

/// One sampled noise path ω, possibly shifted along the driving flow.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    spec: NoiseSpec,
    seed: u64,
    phase: Phase,
    time_offset: f64,
}

/// Draw ω from the driver's invariant measure. Deterministic in `(spec, seed)`.
pub fn sample_realization(spec: &NoiseSpec, seed: u64) -> Result<NoiseRealization> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase = match &spec.kind {
        NoiseKind::Constant => Phase::Constant,
        NoiseKind::TorusRotation { frequencies } => {
            Phase::Torus(frequencies.iter().map(|_| rng.random::<f64>()).collect())
        }
        NoiseKind::SquashedOu {
            rate,
            volatility,
            t_max,
            step,
        } => Phase::Ou(ou_path(&mut rng, *rate, *volatility, *t_max, *step).into()),
    };
    Ok(NoiseRealization {
        spec: spec.clone(),
        seed,
        phase,
        time_offset: 0.0,
    })
}

/// Stationary OU path on the grid `-t_max + j*step`, sampled with the exact
/// Gaussian transition.
fn ou_path(rng: &mut ChaCha8Rng, rate: f64, volatility: f64, t_max: f64, step: f64) -> Vec<f64> {
    let intervals = ((2.0 * t_max / step) - 1e-9).ceil().max(1.0) as usize;
    let decay = (-rate * step).exp();
    let stationary_sd = volatility / (2.0 * rate).sqrt();
    let transition_sd = stationary_sd * (1.0 - decay * decay).sqrt();

    let mut path = Vec::with_capacity(intervals + 1);
    let z: f64 = rng.sample(StandardNormal);
    let mut x = stationary_sd * z;
    path.push(x);
    for _ in 0..intervals {
        let z: f64 = rng.sample(StandardNormal);
        x = decay * x + transition_sd * z;
        path.push(x);
    }
    path
}

impl NoiseRealization {
    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn time_offset(&self) -> f64 {
        self.time_offset
    }

    /// Torus phase ω ∈ [0,1)^k, if this is a torus driver.
    pub fn torus_phase(&self) -> Option<&[f64]> {
        match &self.phase {
            Phase::Torus(p) => Some(p),
            _ => None,
        }
    }

    /// Range of absolute times `t + time_offset` at which Λ can be evaluated.
    pub fn window(&self) -> (f64, f64) {
        match self.spec.kind {
            NoiseKind::SquashedOu { t_max, .. } => (-t_max, t_max),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Λ(θ_{t+offset} ω).
    pub fn lambda_at(&self, t: f64) -> Result<f64> {
        let tau = t + self.time_offset;
        let NoiseSpec { q0, eps, .. } = self.spec;
        match (&self.phase, &self.spec.kind) {
            (Phase::Constant, _) => Ok(q0),
            (Phase::Torus(omega), NoiseKind::TorusRotation { frequencies }) => {
                let sum: f64 = omega
                    .iter()
                    .zip(frequencies)
                    .map(|(w, nu)| (TAU * (w + tau * nu).rem_euclid(1.0)).sin())
                    .sum();
                Ok(q0 * (1.0 + eps * sum / omega.len() as f64))
            }
            (Phase::Ou(path), NoiseKind::SquashedOu { t_max, step, .. }) => {
                if !(tau >= -t_max && tau <= *t_max) {
                    return Err(Error::NoiseWindow {
                        t: tau,
                        lo: -t_max,
                        hi: *t_max,
                    });
                }
                let u = (tau + t_max) / step;
                let j = (u.floor() as usize).min(path.len() - 2);
                let frac = u - j as f64;
                let x = path[j] + frac * (path[j + 1] - path[j]);
                Ok(q0 * (1.0 + eps * x.tanh()))
            }
            _ => unreachable!("phase always matches the noise kind"),
        }
    }

    /// First point after `t` where Λ is not smooth (a node of the
    /// interpolated OU path), in this realization's time. `None` for smooth
    /// drivers. Nodes closer than `10⁻⁶·step` to `t` are skipped.
    pub fn next_breakpoint(&self, t: f64) -> Option<f64> {
        let NoiseKind::SquashedOu { t_max, step, .. } = self.spec.kind else {
            return None;
        };
        let tau = t + self.time_offset;
        let mut j = ((tau + t_max) / step).floor() + 1.0;
        loop {
            let b = -t_max + j * step - self.time_offset;
            if b - t > 1e-6 * step {
                return Some(b);
            }
            j += 1.0;
        }
    }

    /// θ_s ω: the realization seen `s` time units later.
    pub fn shift(&self, s: f64) -> Result<NoiseRealization> {
        let offset = self.time_offset + s;
        let (lo, hi) = self.window();
        if !(offset >= lo && offset <= hi) {
            return Err(Error::NoiseWindow { t: offset, lo, hi });
        }
        Ok(NoiseRealization {
            time_offset: offset,
            ..self.clone()
        })
    }
}
