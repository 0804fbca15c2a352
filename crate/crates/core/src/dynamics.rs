//! Selects which vector field the integrator and pullback machinery drive.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{vector_field, ModelParams, State};
use crate::responses::FunctionalResponse;
use crate::submodels::{si_vector_field, sp_vector_field, PlanarState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Susceptible prey, infected prey and predator.
    Full,
    /// Predators absent: state `(S, I, 0)`.
    Si,
    /// Infection absent: state `(S, 0, P)`.
    Sp,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Si => "si",
            Variant::Sp => "sp",
        }
    }

    /// Column labels of the active compartments.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Variant::Full => &["S", "I", "P"],
            Variant::Si => &["S", "I"],
            Variant::Sp => &["S", "P"],
        }
    }

    pub fn dim(self) -> usize {
        self.columns().len()
    }

    pub fn needs_response(self) -> bool {
        !matches!(self, Variant::Si)
    }

    /// Active components of `x`, in column order.
    pub fn project(self, x: State) -> Vec<f64> {
        match self {
            Variant::Full => vec![x.s, x.i, x.p],
            Variant::Si => vec![x.s, x.i],
            Variant::Sp => vec![x.s, x.p],
        }
    }

    /// Inverse of [`Variant::project`].
    pub fn embed(self, values: &[f64]) -> Result<State> {
        if values.len() != self.dim() {
            return Err(Error::invalid(
                "state",
                format!("variant {} expects {} components, got {}", self.name(), self.dim(), values.len()),
            ));
        }
        Ok(match self {
            Variant::Full => State::new(values[0], values[1], values[2]),
            Variant::Si => State::new(values[0], values[1], 0.0),
            Variant::Sp => State::new(values[0], 0.0, values[1]),
        })
    }

    /// Whether `x` lives in this variant's state space.
    pub fn admits(self, x: State) -> bool {
        match self {
            Variant::Full => true,
            Variant::Si => x.p == 0.0,
            Variant::Sp => x.i == 0.0,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "si" => Ok(Variant::Si),
            "sp" => Ok(Variant::Sp),
            other => Err(Error::invalid(
                "model.variant",
                format!("expected one of full, si, sp, got `{other}`"),
            )),
        }
    }
}

/// A variant bound to its parameters and (for `full` and `sp`) a response.
#[derive(Clone, Copy)]
pub struct Dynamics<'a> {
    variant: Variant,
    params: &'a ModelParams,
    response: Option<&'a dyn FunctionalResponse>,
}

impl<'a> Dynamics<'a> {
    pub fn new(
        variant: Variant,
        params: &'a ModelParams,
        response: Option<&'a dyn FunctionalResponse>,
    ) -> Result<Self> {
        params.validate()?;
        if variant.needs_response() && response.is_none() {
            return Err(Error::invalid(
                "response.family",
                format!("variant {variant} requires a functional response"),
            ));
        }
        Ok(Self {
            variant,
            params,
            response,
        })
    }

    pub fn full(params: &'a ModelParams, response: &'a dyn FunctionalResponse) -> Result<Self> {
        Self::new(Variant::Full, params, Some(response))
    }

    pub fn si(params: &'a ModelParams) -> Result<Self> {
        Self::new(Variant::Si, params, None)
    }

    pub fn sp(params: &'a ModelParams, response: &'a dyn FunctionalResponse) -> Result<Self> {
        Self::new(Variant::Sp, params, Some(response))
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn params(&self) -> &'a ModelParams {
        self.params
    }

    pub fn response(&self) -> Option<&'a dyn FunctionalResponse> {
        self.response
    }

    /// Rates for the active variant, embedded in `(dS, dI, dP)`; the inactive
    /// component's rate is exactly zero.
    pub fn rates(&self, lambda: f64, x: State) -> [f64; 3] {
        match self.variant {
            Variant::Full => vector_field(self.params, self.response.expect("checked in new"), lambda, x),
            Variant::Si => {
                let [ds, di] = si_vector_field(self.params, lambda, PlanarState::new(x.s, x.i));
                [ds, di, 0.0]
            }
            Variant::Sp => {
                let [ds, dp] = sp_vector_field(
                    self.params,
                    self.response.expect("checked in new"),
                    lambda,
                    PlanarState::new(x.s, x.p),
                );
                [ds, 0.0, dp]
            }
        }
    }
}
