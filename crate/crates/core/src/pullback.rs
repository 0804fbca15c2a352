//! Pullback images `φ(t, θ₋ₜω, x₀)`, finite-set estimates of random
//! attractor sections, the susceptible limit `S*(ω)` and the Hausdorff
//! semi-distance used to judge convergence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{Dynamics, Variant};
use crate::error::{Error, Result};
use crate::integrator::{flow_phi, solve_endpoint, IntegratorConfig};
use crate::model::{in_region_k_tol, State, Thresholds};
use crate::noise::NoiseRealization;
use crate::submodels::{in_region_v, Interval, PlanarState, SpThresholds};

/// `φ(t, θ₋ₜω, x₀)`: start at time `-t` on the fixed realization and report
/// the state at time 0.
pub fn pullback_state(
    dynamics: &Dynamics<'_>,
    omega: &NoiseRealization,
    t: f64,
    x0: State,
    cfg: &IntegratorConfig,
) -> Result<State> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("pullback time must be positive, got {t}")));
    }
    flow_phi(dynamics, &omega.shift(-t)?, t, x0, cfg)
}

/// Same quantity as [`pullback_state`], computed by integrating over
/// `[-t, 0]` on the unshifted realization.
pub fn pullback_state_direct(
    dynamics: &Dynamics<'_>,
    omega: &NoiseRealization,
    t: f64,
    x0: State,
    cfg: &IntegratorConfig,
) -> Result<State> {
    solve_endpoint(dynamics, omega, -t, 0.0, x0, cfg)
}

/// `sup_{g∈G} inf_{h∈H} ‖g − h‖`. Not symmetric.
pub fn hausdorff_semidist<P: AsRef<[f64]>>(g: &[P], h: &[P]) -> Result<f64> {
    if g.is_empty() || h.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut sup = 0.0f64;
    for a in g {
        let a = a.as_ref();
        let inf = h
            .iter()
            .map(|b| {
                a.iter()
                    .zip(b.as_ref())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        sup = sup.max(inf);
    }
    Ok(sup)
}

/// `S*(ω) = ∫_{-∞}^0 Λ(θ_s ω) e^{μs} ds`, truncated to `[-horizon, 0]` and
/// evaluated with composite Simpson at (at most) `quad_step`.
///
/// The truncation error is below `(Λᵘ/μ) e^{-μ·horizon}`.
pub fn s_star(omega: &NoiseRealization, mu: f64, horizon: f64, quad_step: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::invalid("model.mu", format!("must be positive, got {mu}")));
    }
    if !(horizon >= 40.0 / mu && horizon.is_finite()) {
        return Err(Error::invalid(
            "horizon",
            format!("must be at least 40/mu = {}, got {horizon}", 40.0 / mu),
        ));
    }
    if !(quad_step > 0.0 && quad_step.is_finite()) {
        return Err(Error::invalid("quad_step", format!("must be positive, got {quad_step}")));
    }
    let mut n = (horizon / quad_step).ceil() as usize;
    n += n % 2;
    let h = horizon / n as f64;
    let integrand = |j: usize| -> Result<f64> {
        let s = -horizon + j as f64 * h;
        Ok(omega.lambda_at(s)? * (mu * s).exp())
    };
    let mut acc = integrand(0)? + integrand(n)?;
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(j)?;
    }
    Ok(acc * h / 3.0)
}

/// [`s_star`] at horizon `40/μ` and step `10⁻³`.
pub fn s_star_default(omega: &NoiseRealization, mu: f64) -> Result<f64> {
    s_star(omega, mu, 40.0 / mu, 1e-3)
}

/// The deterministic forward-invariant, absorbing region of each variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AbsorbingRegion {
    /// `K_δ`, in terms of `M` and `N`.
    K { thresholds: Thresholds, r: f64 },
    /// `V_δ` for `V = S + I`.
    V { interval: Interval },
    /// `W_δ` for `W = γS + P`.
    W { thresholds: SpThresholds, gamma: f64 },
}

impl AbsorbingRegion {
    pub fn variant(&self) -> Variant {
        match self {
            AbsorbingRegion::K { .. } => Variant::Full,
            AbsorbingRegion::V { .. } => Variant::Si,
            AbsorbingRegion::W { .. } => Variant::Sp,
        }
    }

    pub fn contains(&self, x: State, tol: f64) -> bool {
        if !self.variant().admits(x) {
            return false;
        }
        match self {
            AbsorbingRegion::K { thresholds, r } => in_region_k_tol(thresholds, *r, x, tol),
            AbsorbingRegion::V { interval } => in_region_v(interval, PlanarState::new(x.s, x.i), tol),
            AbsorbingRegion::W { thresholds, gamma } => {
                thresholds.in_region_w(*gamma, PlanarState::new(x.s, x.p), tol)
            }
        }
    }

    /// Lower and upper levels of the defining linear functional, and its
    /// coefficients on `(S, I, P)`.
    fn levels(&self) -> ([f64; 2], [f64; 3]) {
        match self {
            AbsorbingRegion::K { thresholds: th, r } => {
                // Upper face uses N's weights; the lower face is handled by
                // the caller through `lower_weights`.
                ([th.theta_l_delta, th.theta_u + th.delta], [th.a_u, *r, 1.0])
            }
            AbsorbingRegion::V { interval } => ([interval.lo, interval.hi], [1.0, 1.0, 0.0]),
            AbsorbingRegion::W { thresholds, gamma } => (
                [thresholds.theta_hat_l_delta, thresholds.theta_hat_u + thresholds.delta],
                [*gamma, 0.0, 1.0],
            ),
        }
    }

    fn lower_weights(&self) -> [f64; 3] {
        match self {
            AbsorbingRegion::K { thresholds, r } => [thresholds.a_l, *r, 1.0],
            _ => self.levels().1,
        }
    }

    /// Vertices of the region on the coordinate axes of the active variables.
    pub fn corners(&self) -> Vec<State> {
        let ([lo, hi], upper) = self.levels();
        let lower = self.lower_weights();
        let mut out: Vec<State> = Vec::new();
        for (level, weights) in [(lo, lower), (hi, upper)] {
            for axis in 0..3 {
                if weights[axis] == 0.0 {
                    continue;
                }
                let mut v = [0.0; 3];
                v[axis] = level / weights[axis];
                let x = State::from_array(v);
                if !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        out
    }

    /// Deterministic sample: the axis corners plus uniform rejection samples
    /// from the interior, `count` points in total.
    pub fn grid(&self, count: usize, seed: u64) -> Vec<State> {
        let mut out = self.corners();
        out.truncate(count);
        let ([_, hi], upper) = self.levels();
        let bounds: Vec<f64> = upper.iter().map(|w| if *w > 0.0 { hi / w } else { 0.0 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while out.len() < count {
            let x = State::new(
                bounds[0] * rng.random::<f64>(),
                bounds[1] * rng.random::<f64>(),
                bounds[2] * rng.random::<f64>(),
            );
            if self.contains(x, 0.0) {
                out.push(x);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackConfig {
    pub time_ladder: Vec<f64>,
    pub grid: Vec<State>,
    pub converge_tol: f64,
    pub singleton_tol: f64,
}

impl PullbackConfig {
    pub const DEFAULT_CONVERGE_TOL: f64 = 1e-6;
    pub const DEFAULT_SINGLETON_TOL: f64 = 1e-5;
    pub const DEFAULT_GRID_COUNT: usize = 64;

    /// `2, 4, 8, …, 512`.
    pub fn default_ladder() -> Vec<f64> {
        (1..=9).map(|k| f64::from(1u32 << k)).collect()
    }

    pub fn new(grid: Vec<State>) -> Self {
        Self {
            time_ladder: Self::default_ladder(),
            grid,
            converge_tol: Self::DEFAULT_CONVERGE_TOL,
            singleton_tol: Self::DEFAULT_SINGLETON_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_ladder.is_empty() {
            return Err(Error::invalid("pullback.ladder", "must not be empty"));
        }
        if self.time_ladder.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::invalid("pullback.ladder", "times must be positive and finite"));
        }
        if self.time_ladder.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("pullback.ladder", "times must be strictly increasing"));
        }
        if self.grid.is_empty() {
            return Err(Error::invalid("pullback.grid_count", "grid must not be empty"));
        }
        for (field, tol) in [
            ("pullback.converge_tol", self.converge_tol),
            ("pullback.singleton_tol", self.singleton_tol),
        ] {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::invalid(field, format!("must be positive, got {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorEstimate {
    pub omega_seed: u64,
    pub noise_kind: &'static str,
    pub ladder: Vec<f64>,
    /// `dist(image_{n+1}, image_n)` for consecutive ladder times.
    pub per_rung_dist: Vec<f64>,
    pub converged: bool,
    /// Largest pairwise distance between endpoints.
    pub diameter: f64,
    /// Pullback images of the grid at the largest ladder time.
    pub endpoints: Vec<State>,
}

impl AttractorEstimate {
    pub fn is_singleton(&self, singleton_tol: f64) -> bool {
        self.diameter <= singleton_tol
    }
}

/// Pullback images of the grid at every ladder time, in ladder order.
pub fn pullback_images(
    dynamics: &Dynamics<'_>,
    omega: &NoiseRealization,
    ladder: &[f64],
    grid: &[State],
    integ: &IntegratorConfig,
) -> Result<Vec<Vec<State>>> {
    ladder
        .iter()
        .map(|&t| {
            grid.par_iter()
                .map(|&x0| pullback_state(dynamics, omega, t, x0, integ))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Finite-set surrogate of the attractor section `A(ω)`: pull the grid back
/// over the ladder and watch consecutive images settle. A non-converged
/// ladder is reported through the flag, not as an error.
pub fn estimate_attractor_section(
    dynamics: &Dynamics<'_>,
    omega: &NoiseRealization,
    cfg: &PullbackConfig,
    integ: &IntegratorConfig,
) -> Result<AttractorEstimate> {
    cfg.validate()?;
    let images = pullback_images(dynamics, omega, &cfg.time_ladder, &cfg.grid, integ)?;
    let arrays: Vec<Vec<[f64; 3]>> = images
        .iter()
        .map(|img| img.iter().map(|x| x.to_array()).collect())
        .collect();
    let per_rung_dist = arrays
        .windows(2)
        .map(|w| hausdorff_semidist(&w[1], &w[0]))
        .collect::<Result<Vec<_>>>()?;
    let converged = per_rung_dist.last().is_some_and(|d| *d <= cfg.converge_tol);
    let endpoints = images.last().cloned().unwrap_or_default();
    let mut diameter = 0.0f64;
    for (a, x) in endpoints.iter().enumerate() {
        for y in &endpoints[a + 1..] {
            diameter = diameter.max(x.distance(y));
        }
    }
    Ok(AttractorEstimate {
        omega_seed: omega.seed(),
        noise_kind: omega.spec().kind.name(),
        ladder: cfg.time_ladder.clone(),
        per_rung_dist,
        converged,
        diameter,
        endpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compute_thresholds, ModelParams};
    use crate::noise::{sample_realization, NoiseSpec};
    use crate::responses::ResponseSpec;

    fn brute_force(g: &[Vec<f64>], h: &[Vec<f64>]) -> f64 {
        let mut best = 0.0f64;
        for a in g {
            let mut nearest = f64::INFINITY;
            for b in h {
                let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                nearest = nearest.min(d);
            }
            best = best.max(nearest);
        }
        best
    }

    #[test]
    fn hausdorff_examples() {
        let g = vec![vec![0.0], vec![2.0]];
        let h = vec![vec![0.0], vec![1.0]];
        assert_eq!(hausdorff_semidist(&g, &g).unwrap(), 0.0);
        assert_eq!(hausdorff_semidist(&g, &h).unwrap(), 1.0);
        assert_eq!(hausdorff_semidist(&h, &g).unwrap(), 1.0);
        assert_eq!(brute_force(&g, &h), 1.0);
        let a = [[0.0, 0.0, 0.0]];
        let b = [[3.0, 4.0, 0.0]];
        assert_eq!(hausdorff_semidist(&a, &b).unwrap(), 5.0);
        let empty: [[f64; 3]; 0] = [];
        assert!(matches!(hausdorff_semidist(&empty, &a), Err(Error::EmptyPointSet)));

        // asymmetric case
        let g = vec![vec![0.0], vec![5.0]];
        let h = vec![vec![0.0]];
        assert_eq!(hausdorff_semidist(&g, &h).unwrap(), 5.0);
        assert_eq!(hausdorff_semidist(&h, &g).unwrap(), 0.0);
    }

    #[test]
    fn s_star_constant_noise() {
        let w = sample_realization(&NoiseSpec::constant(1.0, 0.1), 0).unwrap();
        assert!((s_star_default(&w, 0.5).unwrap() - 2.0).abs() < 1e-8);
        assert!(s_star(&w, 0.5, 10.0, 1e-3).is_err());
    }

    #[test]
    fn s_star_torus_in_bounds() {
        let w = sample_realization(&NoiseSpec::default_torus(1.0, 0.1), 3).unwrap();
        let v = s_star_default(&w, 0.5).unwrap();
        assert!((1.8..=2.2).contains(&v), "{v}");
    }

    #[test]
    fn s_axis_pullback_closed_form() {
        let params = ModelParams::default();
        let h = ResponseSpec::holling1(0.3);
        let d = Dynamics::full(&params, &h).unwrap();
        let w = sample_realization(&NoiseSpec::constant(1.0, 0.1), 0).unwrap();
        let x = pullback_state(&d, &w, 40.0, State::new(7.0, 0.0, 0.0), &IntegratorConfig::default()).unwrap();
        assert!((x.s - (2.0 + 5.0 * (-20.0f64).exp())).abs() < 1e-6);
        assert_eq!((x.i, x.p), (0.0, 0.0));
    }

    #[test]
    fn corners_and_grid_lie_in_region() {
        let params = ModelParams::default();
        let h = ResponseSpec::holling1(0.3);
        let th = compute_thresholds(&params, &h, 1.0, 0.1, 0.066).unwrap();
        let region = AbsorbingRegion::K { thresholds: th, r: params.r };
        let corners = region.corners();
        assert_eq!(corners.len(), 6);
        for x in &corners {
            assert!(region.contains(*x, 1e-12), "{x:?}");
        }
        let grid = region.grid(64, 0);
        assert_eq!(grid.len(), 64);
        assert!(grid.iter().all(|x| region.contains(*x, 1e-12)));
        assert_eq!(grid, region.grid(64, 0));
    }

    #[test]
    fn estimate_on_s_axis_contracts_to_fixed_point() {
        let params = ModelParams::default();
        let h = ResponseSpec::holling1(0.3);
        let d = Dynamics::full(&params, &h).unwrap();
        let w = sample_realization(&NoiseSpec::constant(1.0, 0.1), 0).unwrap();
        let grid: Vec<State> = [0.0, 0.5, 1.0, 4.0, 9.0].iter().map(|s| State::new(*s, 0.0, 0.0)).collect();
        let cfg = PullbackConfig::new(grid);
        let est = estimate_attractor_section(&d, &w, &cfg, &IntegratorConfig::default()).unwrap();
        assert!(est.converged);
        assert_eq!(est.per_rung_dist.len(), cfg.time_ladder.len() - 1);
        assert!(est.diameter < 1e-6, "{est:?}");
        assert!(est.endpoints.iter().all(|x| (x.s - 2.0).abs() < 1e-6));
    }

    #[test]
    fn config_validation() {
        let mut cfg = PullbackConfig::new(vec![State::default()]);
        assert!(cfg.validate().is_ok());
        cfg.time_ladder = vec![4.0, 2.0];
        assert!(cfg.validate().is_err());
        cfg.time_ladder = vec![2.0];
        cfg.grid.clear();
        assert!(cfg.validate().is_err());
    }
}
