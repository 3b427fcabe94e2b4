//! Model definition: parameters, the Hill nonlinearity, the positive
//! equilibrium and the linearization about it.
//!
//! State ordering is `(x1, y1, x2, y2)`: P53 mRNA, P53 protein, Mdm2 mRNA,
//! Mdm2 protein. At steady state every delay kernel integrates to one, so the
//! equilibrium does not depend on the kernels.

use serde::{Deserialize, Serialize};

use crate::error::{AnalysisError, Result, SignProfile};
use crate::poly::Poly;

/// Rate constants and Hill parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b12: f64,
    pub c2: f64,
    pub d2: f64,
    /// Protein-protein degradation coupling in the Mdm2 equation. Carried so
    /// parameter files round-trip; every analysis requires it to be zero.
    pub d12: f64,
    /// Hill half-saturation constant.
    pub a: f64,
    /// Hill exponent.
    pub n: u32,
}

impl ModelParams {
    /// The worked parameter set: a1 = 2, a2 = 0.55, b1 = 1, b2 = 0.8,
    /// c2 = 0.1, b12 = 1.5, d2 = 0.1, a = 4, n = 2.
    pub fn reference_set() -> Self {
        ModelParams {
            a1: 2.0,
            a2: 0.55,
            b1: 1.0,
            b2: 0.8,
            b12: 1.5,
            c2: 0.1,
            d2: 0.1,
            d12: 0.0,
            a: 4.0,
            n: 2,
        }
    }

    fn rates(&self) -> [(&'static str, f64); 7] {
        [
            ("a1", self.a1),
            ("a2", self.a2),
            ("b1", self.b1),
            ("b2", self.b2),
            ("b12", self.b12),
            ("c2", self.c2),
            ("d2", self.d2),
        ]
    }

    /// Checks hard constraints and returns soft warnings (rates above one).
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        for (name, value) in self.rates() {
            // zero P53 transcription is accepted; it leaves no positive equilibrium
            let admissible = if name == "a1" { value >= 0.0 } else { value > 0.0 };
            if !admissible || !value.is_finite() {
                return Err(AnalysisError::InvalidParameter {
                    name,
                    value,
                    reason: "rate constants must be positive and finite",
                });
            }
            if value > 1.0 {
                warnings.push(format!("rate {name} = {value} exceeds 1"));
            }
        }
        if !(self.d12 >= 0.0) || !self.d12.is_finite() {
            return Err(AnalysisError::InvalidParameter {
                name: "d12",
                value: self.d12,
                reason: "must be nonnegative",
            });
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(AnalysisError::InvalidParameter {
                name: "a",
                value: self.a,
                reason: "Hill half-saturation constant must be positive",
            });
        }
        if self.n == 0 {
            return Err(AnalysisError::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "Hill exponent must be a positive integer",
            });
        }
        if self.b2 * self.b2 >= self.b1 {
            warnings.push(format!(
                "advisory: b2^2 = {} is not below b1 = {}",
                self.b2 * self.b2,
                self.b1
            ));
        }
        Ok(warnings)
    }

    /// Validation plus the `d12 = 0` requirement shared by all analysis paths.
    pub fn require_analyzable(&self) -> Result<Vec<String>> {
        let warnings = self.validate()?;
        if self.d12 != 0.0 {
            return Err(AnalysisError::UnsupportedCoupling(self.d12));
        }
        Ok(warnings)
    }

    /// Upper end of the admissible interval for y10.
    pub fn y10_upper(&self) -> f64 {
        self.a1 * self.b1 / (self.a2 * self.b2)
    }

    /// Right-hand side of the undelayed model (all lags collapsed), used for
    /// equilibrium residuals.
    pub fn steady_rhs(&self, state: [f64; 4]) -> [f64; 4] {
        let [x1, y1, x2, y2] = state;
        [
            self.a1 - self.a2 * x1,
            self.b1 * x1 - self.b2 * y1 - self.b12 * y1 * y2,
            hill_unchecked(y1.max(0.0), self) - self.c2 * x2,
            x2 - self.d2 * y2,
        ]
    }
}

fn hill_unchecked(x: f64, p: &ModelParams) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let u = (x / p.a).powi(p.n as i32);
    if u.is_infinite() {
        return 1.0;
    }
    u / (1.0 + u)
}

/// `f(x) = x^n / (a^n + x^n)`.
pub fn hill_eval(x: f64, params: &ModelParams) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(AnalysisError::Domain(format!(
            "Hill function needs x >= 0, got {x}"
        )));
    }
    Ok(hill_unchecked(x, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HillDerivatives {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Closed-form first three derivatives of the Hill function.
///
/// With `u = (x/a)^n`:
/// `f' = n u / (x (1+u)^2)`,
/// `f'' = n u ((n-1) - (n+1) u) / (x^2 (1+u)^3)`,
/// `f''' = n u ((n-1)(n-2) - 4(n^2-1) u + (n+1)(n+2) u^2) / (x^3 (1+u)^4)`.
pub fn hill_derivatives(x: f64, params: &ModelParams) -> Result<HillDerivatives> {
    if !(x > 0.0) {
        return Err(AnalysisError::Domain(format!(
            "Hill derivatives need x > 0, got {x}"
        )));
    }
    let n = params.n as f64;
    let u = (x / params.a).powi(params.n as i32);
    let s = 1.0 + u;
    let d1 = n * u / (x * s * s);
    let d2 = n * u * ((n - 1.0) - (n + 1.0) * u) / (x * x * s * s * s);
    let d3 = n
        * u
        * ((n - 1.0) * (n - 2.0) - 4.0 * (n * n - 1.0) * u + (n + 1.0) * (n + 2.0) * u * u)
        / (x * x * x * s * s * s * s);
    Ok(HillDerivatives { d1, d2, d3 })
}

/// Coefficients `(alpha, beta, gamma, delta)` of
/// `alpha x^(n+1) - beta x^n + gamma x - delta = 0`, whose roots in
/// `(0, a1 b1 / (a2 b2))` are the admissible y10 values.
pub fn equilibrium_poly_coeffs(params: &ModelParams) -> Result<(f64, f64, f64, f64)> {
    params.require_analyzable()?;
    let p = params;
    let an = p.a.powi(p.n as i32);
    let alpha = p.a2 * (p.b12 + p.b2 * p.c2 * p.d2);
    let beta = p.a1 * p.b1 * p.c2 * p.d2;
    let gamma = p.a2 * p.b2 * p.c2 * p.d2 * an;
    let delta = p.a1 * p.b1 * p.c2 * p.d2 * an;
    Ok((alpha, beta, gamma, delta))
}

/// The equilibrium polynomial as a [`Poly`].
pub fn equilibrium_poly(params: &ModelParams) -> Result<Poly> {
    let (alpha, beta, gamma, delta) = equilibrium_poly_coeffs(params)?;
    let n = params.n as usize;
    let mut c = vec![0.0; n + 2];
    c[n + 1] += alpha;
    c[n] -= beta;
    c[1] += gamma;
    c[0] -= delta;
    Ok(Poly::new(c))
}

/// Steady state `(x10, y10, x20, y20)` with the max-norm residual of the
/// model's right-hand side there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x10: f64,
    pub y10: f64,
    pub x20: f64,
    pub y20: f64,
    pub residual: f64,
}

impl Equilibrium {
    /// Wraps an arbitrary state, recording how far it is from steady.
    pub fn at_state(params: &ModelParams, state: [f64; 4]) -> Self {
        let rhs = params.steady_rhs(state);
        Equilibrium {
            x10: state[0],
            y10: state[1],
            x20: state[2],
            y20: state[3],
            residual: rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        }
    }

    /// y20 comes from the Mdm2-mRNA balance `c2 d2 y20 = f(y10)`, which
    /// agrees with the P53-protein balance at a root but has no cancellation
    /// when y10 approaches the upper end of its interval.
    fn from_y10(params: &ModelParams, y10: f64) -> Self {
        let p = params;
        let y20 = hill_unchecked(y10, p) / (p.c2 * p.d2);
        Self::at_state(params, [p.a1 / p.a2, y10, p.d2 * y20, y20])
    }

    pub fn state(&self) -> [f64; 4] {
        [self.x10, self.y10, self.x20, self.y20]
    }
}

/// All admissible equilibria, ascending in y10. The principal one is the
/// first (smallest y10).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSet {
    pub roots: Vec<Equilibrium>,
    pub principal: usize,
    pub warnings: Vec<String>,
}

impl EquilibriumSet {
    pub fn principal(&self) -> &Equilibrium {
        &self.roots[self.principal]
    }

    pub fn select(&self, index: usize) -> Result<&Equilibrium> {
        self.roots.get(index).ok_or(AnalysisError::RootIndex {
            index,
            count: self.roots.len(),
        })
    }
}

const SCAN_INTERVALS: usize = 1024;

/// Locates every admissible y10 by a sign-change scan, bisection and Newton
/// polish, then reconstructs and refines the full steady state.
pub fn solve_equilibrium(params: &ModelParams) -> Result<EquilibriumSet> {
    let warnings = params.require_analyzable()?;
    let poly = equilibrium_poly(params)?;
    let upper = params.y10_upper();
    let h = upper / SCAN_INTERVALS as f64;

    let mut ys: Vec<f64> = Vec::new();
    if !(upper > 0.0) {
        return Err(AnalysisError::NoEquilibrium(SignProfile {
            interval: (0.0, upper.max(0.0)),
            samples: vec![(0.0, poly.eval(0.0).signum())],
        }));
    }
    let mut prev_x = 0.0;
    let mut prev_f = poly.eval(0.0);
    for k in 1..SCAN_INTERVALS {
        let x = h * k as f64;
        let fx = poly.eval(x);
        if fx == 0.0 {
            ys.push(x);
        } else if prev_f != 0.0 && fx.signum() != prev_f.signum() {
            ys.push(bisect(&poly, prev_x, x));
        }
        prev_x = x;
        prev_f = fx;
    }
    // a root can sit within rounding of the open upper end when the Hill
    // term is tiny there; the endpoint itself is excluded by the filter below
    let ftop = poly.eval(upper);
    if ftop == 0.0 {
        ys.push(upper);
    } else if prev_f != 0.0 && ftop.signum() != prev_f.signum() {
        ys.push(bisect(&poly, prev_x, upper));
    }

    // `b1 x10 = y (b2 + b12 f(y) / (c2 d2))` has a strictly increasing right
    // side, so a positive a1 always leaves exactly one admissible root; if
    // the cleared polynomial shows no sign change it sits within rounding of
    // the upper end
    if ys.is_empty() && params.a1 > 0.0 {
        ys.push(upper);
    }

    let roots: Vec<Equilibrium> = ys
        .into_iter()
        .map(|y| {
            let polished = refine_y10(params, poly.newton_polish(y));
            if polished > 0.0 && polished <= upper { polished } else { y }
        })
        .filter(|&y| y > 0.0 && y <= upper)
        .map(|y| Equilibrium::from_y10(params, y))
        .filter(|e| e.y20 > 0.0)
        .collect();

    if roots.is_empty() {
        let samples = (0..=16)
            .map(|k| {
                let x = upper * k as f64 / 16.0;
                (x, poly.eval(x).signum())
            })
            .collect();
        return Err(AnalysisError::NoEquilibrium(SignProfile {
            interval: (0.0, upper),
            samples,
        }));
    }

    Ok(EquilibriumSet {
        roots,
        principal: 0,
        warnings,
    })
}

fn bisect(poly: &Poly, mut a: f64, mut b: f64) -> f64 {
    let fa = poly.eval(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = poly.eval(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Newton on `f(y) - c2 d2 y20(y)`, the Mdm2-mRNA balance, which is better
/// conditioned than the cleared polynomial. Steps are kept only while the
/// full residual drops.
fn refine_y10(params: &ModelParams, mut y: f64) -> f64 {
    let p = params;
    let balance = |y: f64| {
        let y20 = (p.a1 * p.b1 - p.a2 * p.b2 * y) / (p.b12 * y * p.a2);
        hill_unchecked(y, p) - p.c2 * p.d2 * y20
    };
    let mut res = Equilibrium::from_y10(params, y).residual;
    for _ in 0..5 {
        let Ok(d) = hill_derivatives(y, params) else {
            break;
        };
        let dy20 = -p.a1 * p.b1 / (p.b12 * p.a2 * y * y);
        let slope = d.d1 - p.c2 * p.d2 * dy20;
        if slope == 0.0 {
            break;
        }
        let cand = y - balance(y) / slope;
        let cand_res = Equilibrium::from_y10(params, cand).residual;
        if cand_res < res {
            y = cand;
            res = cand_res;
        } else {
            break;
        }
    }
    y
}

pub type Mat4 = [[f64; 4]; 4];

/// Linearization about an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearizationCoeffs {
    /// `f'(y10)`
    pub rho: f64,
    /// `f''(y10)`
    pub rho2: f64,
    /// `f'''(y10)`
    pub rho3: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// `rho b12 y10`
    pub r: f64,
    pub mat_a: Mat4,
    pub mat_b1: Mat4,
    pub mat_b2: Mat4,
    pub params: ModelParams,
    pub equilibrium: Equilibrium,
}

impl LinearizationCoeffs {
    /// Effective P53 protein decay `b2 + b12 y20`.
    pub fn protein_decay(&self) -> f64 {
        self.params.b2 + self.params.b12 * self.equilibrium.y20
    }
}

pub fn linearize(params: &ModelParams, eq: &Equilibrium) -> Result<LinearizationCoeffs> {
    params.require_analyzable()?;
    let p = params;
    let (y10, y20) = (eq.y10, eq.y20);
    let h = hill_derivatives(y10, params)?;
    let decay = p.b2 + p.b12 * y20;
    let p2 = p.b2 + p.c2 + p.d2 + p.b12 * y20;
    let p1 = (p.c2 + p.d2) * decay + p.c2 * p.d2;
    let p0 = p.c2 * p.d2 * decay;
    let r = h.d1 * p.b12 * y10;

    let mut mat_a = [[0.0; 4]; 4];
    mat_a[0][0] = -p.a2;
    mat_a[1][0] = p.b1;
    mat_a[1][1] = -decay;
    mat_a[1][3] = -p.b12 * y10;
    mat_a[2][2] = -p.c2;
    mat_a[3][3] = -p.d2;
    let mut mat_b1 = [[0.0; 4]; 4];
    mat_b1[2][1] = h.d1;
    let mut mat_b2 = [[0.0; 4]; 4];
    mat_b2[3][2] = 1.0;

    Ok(LinearizationCoeffs {
        rho: h.d1,
        rho2: h.d2,
        rho3: h.d3,
        p0,
        p1,
        p2,
        r,
        mat_a,
        mat_b1,
        mat_b2,
        params: *params,
        equilibrium: *eq,
    })
}
