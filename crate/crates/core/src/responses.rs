//! Predation functional responses `f` (on susceptible prey) and `g` (on
//! infected prey), plus a lattice checker for the structural hypotheses the
//! model relies on:
//!
//! 1. `S ↦ f` and `P ↦ g` nondecreasing;
//! 2. `I ↦ f`, `P ↦ f`, `S ↦ g`, `I ↦ g` nonincreasing;
//! 3. `f(0, I, P) = 0` and `g(S, I, 0) = 0`;
//! 4. `f(S, 0, 0) > 0` for `S > 0`;
//!
//! together with local Lipschitz continuity.

use serde::Serialize;

use crate::error::{Error, Result};

/// Anything that can play the role of the pair `(f, g)`.
pub trait FunctionalResponse: Send + Sync {
    fn f(&self, s: f64, i: f64, p: f64) -> f64;
    fn g(&self, s: f64, i: f64, p: f64) -> f64;
}

/// Built-in response families. All coefficients default to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResponseSpec {
    /// `f = kS`, `g = kP`.
    Holling1 { k: f64 },
    /// `f = kS / (1 + m(S+I))`.
    Holling2 { k: f64, m: f64 },
    /// `f = kS^α / (1 + m(S+I)^α)`, α ≥ 1.
    Holling3 { k: f64, m: f64, alpha: f64 },
    /// `f = kS / (a + b(S+I) + c(S+I)²)`.
    Holling4 { k: f64, a: f64, b: f64, c: f64 },
    /// `f = kS / (a + b(S+I) + cP)`.
    BeddingtonDeAngelis { k: f64, a: f64, b: f64, c: f64 },
    /// `f = kS / (a + b(S+I) + cP + d(S+I)P)`.
    CrowleyMartin { k: f64, a: f64, b: f64, c: f64, d: f64 },
}

pub const FAMILIES: [&str; 6] = [
    "holling1",
    "holling2",
    "holling3",
    "holling4",
    "beddington_deangelis",
    "crowley_martin",
];

impl ResponseSpec {
    pub fn holling1(k: f64) -> Self {
        ResponseSpec::Holling1 { k }
    }

    /// The named family with every coefficient set to 1.
    pub fn default_for(family: &str) -> Result<Self> {
        Ok(match family {
            "holling1" => ResponseSpec::Holling1 { k: 1.0 },
            "holling2" => ResponseSpec::Holling2 { k: 1.0, m: 1.0 },
            "holling3" => ResponseSpec::Holling3 {
                k: 1.0,
                m: 1.0,
                alpha: 1.0,
            },
            "holling4" => ResponseSpec::Holling4 {
                k: 1.0,
                a: 1.0,
                b: 1.0,
                c: 1.0,
            },
            "beddington_deangelis" => ResponseSpec::BeddingtonDeAngelis {
                k: 1.0,
                a: 1.0,
                b: 1.0,
                c: 1.0,
            },
            "crowley_martin" => ResponseSpec::CrowleyMartin {
                k: 1.0,
                a: 1.0,
                b: 1.0,
                c: 1.0,
                d: 1.0,
            },
            other => {
                return Err(Error::invalid(
                    "response.family",
                    format!("unknown family `{other}` (expected one of {})", FAMILIES.join(", ")),
                ))
            }
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            ResponseSpec::Holling1 { .. } => "holling1",
            ResponseSpec::Holling2 { .. } => "holling2",
            ResponseSpec::Holling3 { .. } => "holling3",
            ResponseSpec::Holling4 { .. } => "holling4",
            ResponseSpec::BeddingtonDeAngelis { .. } => "beddington_deangelis",
            ResponseSpec::CrowleyMartin { .. } => "crowley_martin",
        }
    }

    /// Coefficient names and values, in a fixed order per family.
    pub fn coefficients(&self) -> Vec<(&'static str, f64)> {
        match *self {
            ResponseSpec::Holling1 { k } => vec![("k", k)],
            ResponseSpec::Holling2 { k, m } => vec![("k", k), ("m", m)],
            ResponseSpec::Holling3 { k, m, alpha } => vec![("k", k), ("m", m), ("alpha", alpha)],
            ResponseSpec::Holling4 { k, a, b, c } | ResponseSpec::BeddingtonDeAngelis { k, a, b, c } => {
                vec![("k", k), ("a", a), ("b", b), ("c", c)]
            }
            ResponseSpec::CrowleyMartin { k, a, b, c, d } => {
                vec![("k", k), ("a", a), ("b", b), ("c", c), ("d", d)]
            }
        }
    }

    /// Set one coefficient by name. Unknown names for this family are rejected.
    pub fn set_coefficient(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match (self, name) {
            (ResponseSpec::Holling1 { k }, "k")
            | (ResponseSpec::Holling2 { k, .. }, "k")
            | (ResponseSpec::Holling3 { k, .. }, "k")
            | (ResponseSpec::Holling4 { k, .. }, "k")
            | (ResponseSpec::BeddingtonDeAngelis { k, .. }, "k")
            | (ResponseSpec::CrowleyMartin { k, .. }, "k") => k,
            (ResponseSpec::Holling2 { m, .. }, "m") | (ResponseSpec::Holling3 { m, .. }, "m") => m,
            (ResponseSpec::Holling3 { alpha, .. }, "alpha") => alpha,
            (ResponseSpec::Holling4 { a, .. }, "a")
            | (ResponseSpec::BeddingtonDeAngelis { a, .. }, "a")
            | (ResponseSpec::CrowleyMartin { a, .. }, "a") => a,
            (ResponseSpec::Holling4 { b, .. }, "b")
            | (ResponseSpec::BeddingtonDeAngelis { b, .. }, "b")
            | (ResponseSpec::CrowleyMartin { b, .. }, "b") => b,
            (ResponseSpec::Holling4 { c, .. }, "c")
            | (ResponseSpec::BeddingtonDeAngelis { c, .. }, "c")
            | (ResponseSpec::CrowleyMartin { c, .. }, "c") => c,
            (ResponseSpec::CrowleyMartin { d, .. }, "d") => d,
            (spec, _) => {
                return Err(Error::invalid(
                    format!("response.{name}"),
                    format!("not a coefficient of family {}", spec.family()),
                ))
            }
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.coefficients() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(
                    format!("response.{name}"),
                    format!("must be positive and finite, got {value}"),
                ));
            }
        }
        if let ResponseSpec::Holling3 { alpha, .. } = self {
            if *alpha < 1.0 {
                return Err(Error::invalid(
                    "response.alpha",
                    format!("must be at least 1 for f to be Lipschitz at S=0, got {alpha}"),
                ));
            }
        }
        Ok(())
    }

    /// Shared denominator of `f` and `g`.
    fn denominator(&self, s: f64, i: f64, p: f64) -> f64 {
        let n = s + i;
        match *self {
            ResponseSpec::Holling1 { .. } => 1.0,
            ResponseSpec::Holling2 { m, .. } => 1.0 + m * n,
            ResponseSpec::Holling3 { m, alpha, .. } => 1.0 + m * n.max(0.0).powf(alpha),
            ResponseSpec::Holling4 { a, b, c, .. } => a + b * n + c * n * n,
            ResponseSpec::BeddingtonDeAngelis { a, b, c, .. } => a + b * n + c * p,
            ResponseSpec::CrowleyMartin { a, b, c, d, .. } => a + b * n + c * p + d * n * p,
        }
    }

    fn numerator(&self, x: f64) -> f64 {
        match *self {
            ResponseSpec::Holling3 { k, alpha, .. } => k * x.max(0.0).powf(alpha),
            ResponseSpec::Holling1 { k }
            | ResponseSpec::Holling2 { k, .. }
            | ResponseSpec::Holling4 { k, .. }
            | ResponseSpec::BeddingtonDeAngelis { k, .. }
            | ResponseSpec::CrowleyMartin { k, .. } => k * x,
        }
    }

    pub fn eval_f(&self, s: f64, i: f64, p: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        self.numerator(s) / self.denominator(s, i, p)
    }

    pub fn eval_g(&self, s: f64, i: f64, p: f64) -> f64 {
        if p == 0.0 {
            return 0.0;
        }
        self.numerator(p) / self.denominator(s, i, p)
    }
}

impl FunctionalResponse for ResponseSpec {
    fn f(&self, s: f64, i: f64, p: f64) -> f64 {
        self.eval_f(s, i, p)
    }

    fn g(&self, s: f64, i: f64, p: f64) -> f64 {
        self.eval_g(s, i, p)
    }
}

/// A lattice pair demonstrating a failed sub-check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: [f64; 3],
    pub y: Option<[f64; 3]>,
    pub value_x: f64,
    pub value_y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub box_max: f64,
    pub grid_n: usize,
    pub checks: Vec<HypothesisCheck>,
    /// Largest difference quotient of `f` over all lattice pairs.
    pub lipschitz_f: f64,
    pub lipschitz_g: f64,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Copy)]
enum Which {
    F,
    G,
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Nondecreasing,
    Nonincreasing,
}

struct Lattice {
    n: usize,
    coords: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
}

impl Lattice {
    fn new<R: FunctionalResponse + ?Sized>(response: &R, box_max: f64, n: usize) -> Self {
        let coords: Vec<f64> = (0..n).map(|j| box_max * j as f64 / (n - 1) as f64).collect();
        let mut f = Vec::with_capacity(n * n * n);
        let mut g = Vec::with_capacity(n * n * n);
        for &s in &coords {
            for &i in &coords {
                for &p in &coords {
                    f.push(response.f(s, i, p));
                    g.push(response.g(s, i, p));
                }
            }
        }
        Self {
            n,
            coords,
            f,
            g,
        }
    }

    fn index(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.n + idx[1]) * self.n + idx[2]
    }

    fn point(&self, idx: [usize; 3]) -> [f64; 3] {
        [self.coords[idx[0]], self.coords[idx[1]], self.coords[idx[2]]]
    }

    fn values(&self, which: Which) -> &[f64] {
        match which {
            Which::F => &self.f,
            Which::G => &self.g,
        }
    }

    fn indices(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let n = self.n;
        (0..n).flat_map(move |a| (0..n).flat_map(move |b| (0..n).map(move |c| [a, b, c])))
    }

    fn monotone(&self, name: &'static str, which: Which, axis: usize, dir: Direction) -> HypothesisCheck {
        let values = self.values(which);
        for idx in self.indices() {
            if idx[axis] + 1 == self.n {
                continue;
            }
            let mut next = idx;
            next[axis] += 1;
            let (a, b) = (values[self.index(idx)], values[self.index(next)]);
            let slack = 1e-12 * a.abs().max(b.abs());
            let ok = match dir {
                Direction::Nondecreasing => b >= a - slack,
                Direction::Nonincreasing => b <= a + slack,
            };
            if !ok {
                return failed(
                    name,
                    Witness {
                        x: self.point(idx),
                        y: Some(self.point(next)),
                        value_x: a,
                        value_y: Some(b),
                    },
                );
            }
        }
        passed(name)
    }

    fn vanishes(&self, name: &'static str, which: Which, axis: usize) -> HypothesisCheck {
        let values = self.values(which);
        for idx in self.indices().filter(|idx| idx[axis] == 0) {
            let v = values[self.index(idx)];
            if v != 0.0 {
                return failed(name, single(self.point(idx), v));
            }
        }
        passed(name)
    }

    fn positive_on_s_axis(&self, name: &'static str) -> HypothesisCheck {
        for a in 1..self.n {
            let v = self.f[self.index([a, 0, 0])];
            if !(v > 0.0) {
                return failed(name, single(self.point([a, 0, 0]), v));
            }
        }
        passed(name)
    }

    fn nonnegative_finite(&self, name: &'static str) -> HypothesisCheck {
        for idx in self.indices() {
            let k = self.index(idx);
            for v in [self.f[k], self.g[k]] {
                if !(v.is_finite() && v >= 0.0) {
                    return failed(name, single(self.point(idx), v));
                }
            }
        }
        passed(name)
    }

    /// Maximum difference quotient over all unordered lattice pairs.
    fn lipschitz(&self, which: Which) -> f64 {
        let values = self.values(which);
        let points: Vec<[f64; 3]> = self.indices().map(|idx| self.point(idx)).collect();
        let mut best = 0.0f64;
        for (a, (pa, va)) in points.iter().zip(values).enumerate() {
            for (pb, vb) in points[a + 1..].iter().zip(&values[a + 1..]) {
                let d = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2) + (pa[2] - pb[2]).powi(2)).sqrt();
                let q = (va - vb).abs() / d;
                if !(q <= best) {
                    best = q;
                }
            }
        }
        best
    }
}

fn passed(name: &'static str) -> HypothesisCheck {
    HypothesisCheck {
        name,
        passed: true,
        witness: None,
    }
}

fn failed(name: &'static str, witness: Witness) -> HypothesisCheck {
    HypothesisCheck {
        name,
        passed: false,
        witness: Some(witness),
    }
}

fn single(x: [f64; 3], v: f64) -> Witness {
    Witness {
        x,
        y: None,
        value_x: v,
        value_y: None,
    }
}

/// Verify the structural hypotheses on `f` and `g` over a `grid_n³` lattice
/// spanning `[0, box_max]³`. Failures are reported, not raised.
///
/// The Lipschitz estimate compares every pair of lattice points, so the cost
/// grows like `grid_n⁶`.
pub fn check_hypotheses<R: FunctionalResponse + ?Sized>(
    response: &R,
    box_max: f64,
    grid_n: usize,
) -> Result<HypothesisReport> {
    if grid_n < 2 {
        return Err(Error::invalid("grid_n", format!("must be at least 2, got {grid_n}")));
    }
    if !(box_max.is_finite() && box_max > 0.0) {
        return Err(Error::invalid("box_max", format!("must be positive, got {box_max}")));
    }
    use Direction::*;
    use Which::*;
    let lattice = Lattice::new(response, box_max, grid_n);
    let checks = vec![
        lattice.nonnegative_finite("nonnegative_finite"),
        lattice.monotone("f_nondecreasing_in_s", F, 0, Nondecreasing),
        lattice.monotone("f_nonincreasing_in_i", F, 1, Nonincreasing),
        lattice.monotone("f_nonincreasing_in_p", F, 2, Nonincreasing),
        lattice.monotone("g_nonincreasing_in_s", G, 0, Nonincreasing),
        lattice.monotone("g_nonincreasing_in_i", G, 1, Nonincreasing),
        lattice.monotone("g_nondecreasing_in_p", G, 2, Nondecreasing),
        lattice.vanishes("f_zero_at_s_zero", F, 0),
        lattice.vanishes("g_zero_at_p_zero", G, 2),
        lattice.positive_on_s_axis("f_positive_on_s_axis"),
    ];
    let lipschitz_f = lattice.lipschitz(F);
    let lipschitz_g = lattice.lipschitz(G);
    let mut checks = checks;
    checks.push(HypothesisCheck {
        name: "lipschitz_finite",
        passed: lipschitz_f.is_finite() && lipschitz_g.is_finite(),
        witness: None,
    });
    Ok(HypothesisReport {
        box_max,
        grid_n,
        checks,
        lipschitz_f,
        lipschitz_g,
    })
}
