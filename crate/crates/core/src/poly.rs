//! Real-coefficient polynomials of small degree.
//!
//! Real roots are isolated by recursion on the derivative: between two
//! consecutive critical points the polynomial is monotone, so each such
//! interval holds at most one simple root, which bisection brackets and
//! Newton polishes. Complex roots come from Aberth-Ehrlich iteration.

use num_complex::Complex64;
use serde::Serialize;

/// Polynomial with coefficients in ascending order (`coeffs[i]` multiplies `x^i`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Poly {
    coeffs: Vec<f64>,
}

/// A real root together with a flag for even multiplicity (a tangential zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealRoot {
    pub value: f64,
    pub double: bool,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    /// Builds from coefficients listed highest degree first.
    pub fn from_descending(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().rev().copied().collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Sum of `|a_i| |x|^i`; the natural scale of rounding error in `eval(x)`.
    pub fn magnitude(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    /// Cauchy bound: every root satisfies `|z| <= 1 + max |a_i / a_n|`.
    pub fn root_bound(&self) -> f64 {
        let lead = *self.coeffs.last().unwrap();
        if lead == 0.0 {
            return 0.0;
        }
        1.0 + self.coeffs[..self.degree()]
            .iter()
            .fold(0.0_f64, |m, c| m.max((c / lead).abs()))
    }

    /// Real roots in the open interval `(lo, hi)`, ascending.
    pub fn real_roots_in(&self, lo: f64, hi: f64) -> Vec<RealRoot> {
        if self.degree() == 0 || !(lo < hi) {
            return Vec::new();
        }
        if self.degree() == 1 {
            let x = -self.coeffs[0] / self.coeffs[1];
            return if x > lo && x < hi {
                vec![RealRoot { value: x, double: false }]
            } else {
                Vec::new()
            };
        }
        let crit: Vec<f64> = self
            .derivative()
            .real_roots_in(lo, hi)
            .into_iter()
            .map(|r| r.value)
            .collect();

        let mut roots = Vec::new();
        let mut knots = Vec::with_capacity(crit.len() + 2);
        knots.push(lo);
        knots.extend(crit.iter().copied());
        knots.push(hi);

        let near_zero = |x: f64| self.eval(x).abs() <= 64.0 * f64::EPSILON * self.magnitude(x);

        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            // interior knots that vanish are reported once, below
            let (fa, fb) = (self.eval(a), self.eval(b));
            if near_zero(a) || near_zero(b) || fa.signum() == fb.signum() {
                continue;
            }
            roots.push(RealRoot {
                value: self.bracketed_root(a, b),
                double: false,
            });
        }
        for &c in &crit {
            if near_zero(c) {
                // odd multiplicity >= 3 flips sign through c but still counts once
                roots.push(RealRoot { value: c, double: true });
            }
        }
        roots.sort_by(|a, b| a.value.total_cmp(&b.value));
        roots
    }

    /// Strictly positive real roots, ascending.
    pub fn positive_real_roots(&self) -> Vec<RealRoot> {
        let hi = self.root_bound() * 1.01 + 1.0;
        self.real_roots_in(0.0, hi)
    }

    fn bracketed_root(&self, mut a: f64, mut b: f64) -> f64 {
        let mut fa = self.eval(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = self.eval(m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        self.newton_polish(0.5 * (a + b))
    }

    /// A few Newton steps, each kept only if it lowers the residual.
    pub fn newton_polish(&self, mut x: f64) -> f64 {
        let d = self.derivative();
        let mut fx = self.eval(x).abs();
        for _ in 0..4 {
            let dx = d.eval(x);
            if dx == 0.0 {
                break;
            }
            let cand = x - self.eval(x) / dx;
            let fc = self.eval(cand).abs();
            if fc < fx {
                x = cand;
                fx = fc;
            } else {
                break;
            }
        }
        x
    }

    /// All complex roots by Aberth-Ehrlich iteration, Newton-polished.
    pub fn complex_roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let d = self.derivative();
        let radius = self.root_bound();
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
                Complex64::from_polar(radius * 0.5 + 0.1, angle)
            })
            .collect();
        for _ in 0..500 {
            let mut moved = 0.0_f64;
            for i in 0..n {
                let p = self.eval_complex(z[i]);
                let dp = d.eval_complex(z[i]);
                if p == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let ratio = p / dp;
                let repulsion: Complex64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                    .sum();
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if step.is_finite() {
                    z[i] -= step;
                    moved = moved.max(step.norm() / (1.0 + z[i].norm()));
                }
            }
            if moved < 1e-15 {
                break;
            }
        }
        for zi in z.iter_mut() {
            for _ in 0..3 {
                let dp = d.eval_complex(*zi);
                if dp.norm() == 0.0 {
                    break;
                }
                let cand = *zi - self.eval_complex(*zi) / dp;
                if self.eval_complex(cand).norm() < self.eval_complex(*zi).norm() {
                    *zi = cand;
                } else {
                    break;
                }
            }
        }
        z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        z
    }
}
