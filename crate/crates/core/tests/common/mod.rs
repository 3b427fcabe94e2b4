//! Oracles shared by the property tests and the acceptance run. Everything
//! here is computed independently of the production path it checks.
#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use p53hopf::model::{hill_derivatives, hill_eval, Equilibrium, LinearizationCoeffs, ModelParams};
use p53hopf::sim::{simulate_discrete, simulate_weak_chain, simulate_weak_quadrature, HistorySpec, SimOptions, Trajectory};
use p53hopf::spectral::{stability_zero_delay, zero_delay_poly, HopfPoint, KernelFamily};
use p53hopf::{critical_delay, eigen_pair, linearize, solve_equilibrium};

pub const WEAK: KernelFamily = KernelFamily::Weak { q2: 0.5 };
pub const TAU2: f64 = 3.0;

pub fn reference() -> (ModelParams, Equilibrium, LinearizationCoeffs) {
    let params = ModelParams::reference_set();
    let eq = *solve_equilibrium(&params).unwrap().principal();
    let lin = linearize(&params, &eq).unwrap();
    (params, eq, lin)
}

pub fn hopf(family: KernelFamily) -> (ModelParams, LinearizationCoeffs, HopfPoint) {
    let (params, _, lin) = reference();
    let h = critical_delay(&lin, family).unwrap();
    (params, lin, h)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rates drawn uniformly from `[0.05, 2]`, Hill constant from `[0.5, 5]`,
/// exponent from `1..=4`.
pub fn random_params(rng: &mut impl Rng) -> ModelParams {
    let mut r = || rng.gen_range(0.05..2.0);
    ModelParams {
        a1: r(),
        a2: r(),
        b1: r(),
        b2: r(),
        b12: r(),
        c2: r(),
        d2: r(),
        d12: 0.0,
        a: 0.5 + 2.25 * r(),
        n: 1 + (r() * 2.0) as u32 % 4,
    }
}

/// Roots of a monic polynomial from the eigenvalues of its companion matrix.
/// `desc` holds the coefficients after the leading one, highest power first.
pub fn companion_roots(desc: &[f64]) -> Vec<Complex64> {
    let n = desc.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (j, c) in desc.iter().enumerate() {
        m[(0, j)] = -c;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Zero-delay stability by explicit roots of the characteristic polynomial
/// assembled here from `p0, p1, p2, r`.
pub fn stable_by_roots(lin: &LinearizationCoeffs, family: KernelFamily) -> bool {
    let (p0, p1, p2, r) = (lin.p0, lin.p1, lin.p2, lin.r);
    let roots = match family {
        KernelFamily::Discrete => companion_roots(&[p2, p1, p0 + r]),
        // (l + q) (l^3 + p2 l^2 + p1 l + p0) + r q
        KernelFamily::Weak { q2: q } => companion_roots(&[p2 + q, p1 + q * p2, p0 + q * p1, q * (p0 + r)]),
    };
    roots.iter().all(|z| z.re < 0.0)
}

/// Count of parameter sets where the Routh-Hurwitz verdict matches the
/// explicit-root verdict, out of `sets` draws for each kernel.
pub fn routh_hurwitz_agreement(sets: usize, seed: u64) -> (usize, usize) {
    let mut rng = rng(seed);
    let (mut agree, mut total) = (0, 0);
    while total < sets {
        let params = random_params(&mut rng);
        let Ok(set) = solve_equilibrium(&params) else { continue };
        let lin = linearize(&params, set.principal()).unwrap();
        let q2 = rng.gen_range(0.05..5.0);
        for family in [KernelFamily::Discrete, KernelFamily::Weak { q2 }] {
            let ok = match stability_zero_delay(&lin, family) {
                Ok(rep) => {
                    debug_assert_eq!(zero_delay_poly(&lin, family).degree(), rep.zero_delay_roots.len());
                    rep.stable == stable_by_roots(&lin, family)
                }
                Err(_) => false,
            };
            agree += ok as usize;
        }
        total += 1;
    }
    (agree, 2 * total)
}

/// Worst error of the closed-form Hill derivatives against central
/// differences of the next-lower derivative, scaled by
/// `|f^(k)| + |f^(k-1)| / x`, over a log grid on `[1e-3, 1e3]`.
///
/// The step is `1e-5 x`: a fixed step of `1e-5` below `x = 1` leaves a
/// truncation error of order `(1e-5 / x)^2` at the small end of the grid.
pub fn hill_fd_worst() -> f64 {
    let mut worst = 0.0_f64;
    for n in 1..=4 {
        for a in [0.5, 4.0, 50.0] {
            let params = ModelParams { a, n, ..ModelParams::reference_set() };
            for i in 0..=120 {
                let x = 10f64.powf(-3.0 + 6.0 * i as f64 / 120.0);
                let h = 1e-5 * x;
                let at = |x: f64| {
                    let d = hill_derivatives(x, &params).unwrap();
                    [hill_eval(x, &params).unwrap(), d.d1, d.d2, d.d3]
                };
                let (lo, mid, hi) = (at(x - h), at(x), at(x + h));
                for k in 1..4 {
                    let fd = (hi[k - 1] - lo[k - 1]) / (2.0 * h);
                    let scale = mid[k].abs() + mid[k - 1].abs() / x;
                    if scale > 0.0 {
                        worst = worst.max((fd - mid[k]).abs() / scale);
                    }
                }
            }
        }
    }
    worst
}

/// `det(l I - A - e^{-l tau1} B1 - e^{-l tau2} B2)` of the full 4x4 system,
/// by cofactor expansion along the decoupled first row.
pub fn full_determinant(lin: &LinearizationCoeffs, l: Complex64, tau1: f64, tau2: f64) -> Complex64 {
    let e1 = (-l * tau1).exp();
    let e2 = (-l * tau2).exp();
    let m = |i: usize, j: usize| {
        let id = if i == j { l } else { Complex64::new(0.0, 0.0) };
        id - lin.mat_a[i][j] - e1 * lin.mat_b1[i][j] - e2 * lin.mat_b2[i][j]
    };
    // the first column below the diagonal only feeds row 1, which the first
    // row's zeros decouple
    let minor = Matrix3::from_fn(|i, j| m(i + 1, j + 1));
    m(0, 0) * minor.determinant()
}

pub fn perturbed(eq: &Equilibrium, dy1: f64) -> HistorySpec {
    let mut s = eq.state();
    s[1] += dy1;
    HistorySpec::ConstantValue { state: s }
}

pub fn max_diff(a: &Trajectory, b: &Trajectory, stride_b: usize, dims: usize) -> f64 {
    let mut worst = 0.0_f64;
    for (i, row) in a.states.iter().enumerate() {
        let other = &b.states[i * stride_b];
        assert!((a.times[i] - b.times[i * stride_b]).abs() < 1e-9);
        for k in 0..dims {
            worst = worst.max((row[k] - other[k]).abs());
        }
    }
    worst
}

/// Max-norm gap between the chain and quadrature forms of the weak kernel at
/// its critical delay, horizon 200, step 0.01.
pub fn chain_vs_quadrature() -> f64 {
    let (params, eq, lin) = reference();
    let tau1 = critical_delay(&lin, WEAK).unwrap().tau_crit;
    let hist = perturbed(&eq, 0.05);
    let opts = SimOptions { horizon: 200.0, step: 0.01 };
    let chain = simulate_weak_chain(&params, tau1, 0.5, &hist, &opts).unwrap();
    let quad = simulate_weak_quadrature(&params, tau1, 0.5, &hist, &opts).unwrap();
    max_diff(&chain, &quad, 1, 4)
}

/// Ratio of max-norm errors at steps `h` and `h/2` against a run at `h/8`,
/// two point delays at the critical total delay, horizon 100.
pub fn convergence_factor(h: f64) -> f64 {
    let (params, eq, lin) = reference();
    let tau = critical_delay(&lin, KernelFamily::Discrete).unwrap().tau_crit;
    let hist = perturbed(&eq, 0.3);
    let run = |step: f64| simulate_discrete(&params, tau - TAU2, TAU2, &hist, &SimOptions { horizon: 100.0, step }).unwrap();
    let reference = run(h / 8.0);
    let coarse = max_diff(&run(h), &reference, 8, 4);
    let fine = max_diff(&run(h / 2.0), &reference, 4, 4);
    coarse / fine
}

/// Linear operator at a Hopf point assembled from the linearization:
/// undelayed part and `(lag, matrix)` pairs. The weak kernel carries the
/// chain variable as a fifth coordinate.
pub fn operator(lin: &LinearizationCoeffs, h: &HopfPoint, tau2: Option<f64>) -> (DMatrix<f64>, Vec<(f64, DMatrix<f64>)>) {
    let n = if tau2.is_some() { 4 } else { 5 };
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..4 {
        for j in 0..4 {
            a[(i, j)] = lin.mat_a[i][j];
        }
    }
    let mut b1 = DMatrix::<f64>::zeros(n, n);
    b1[(2, 1)] = lin.rho;
    match (tau2, h.family) {
        (Some(t2), _) => {
            let mut b2 = DMatrix::<f64>::zeros(n, n);
            b2[(3, 2)] = 1.0;
            (a, vec![(h.tau_crit - t2, b1), (t2, b2)])
        }
        (None, KernelFamily::Weak { q2 }) => {
            a[(3, 4)] = 1.0;
            a[(4, 2)] = q2;
            a[(4, 4)] = -q2;
            (a, vec![(h.tau_crit, b1)])
        }
        (None, KernelFamily::Discrete) => panic!("two point delays need a split"),
    }
}

pub fn char_matrix(l: Complex64, a: &DMatrix<f64>, delayed: &[(f64, DMatrix<f64>)]) -> DMatrix<Complex64> {
    let n = a.nrows();
    let mut m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        let id = if i == j { l } else { Complex64::new(0.0, 0.0) };
        id - a[(i, j)]
    });
    for (tau, b) in delayed {
        let e = (-l * tau).exp();
        m -= b.map(|x| Complex64::new(x, 0.0)) * e;
    }
    m
}

/// `<psi, phi>` for exponential profiles by composite Simpson quadrature of
/// the memory integrals.
pub fn pairing_quadrature(
    w: &[Complex64],
    u: &[Complex64],
    psi: Complex64,
    phi: Complex64,
    delayed: &[(f64, DMatrix<f64>)],
) -> Complex64 {
    let dot = |x: &[Complex64], y: &[Complex64]| -> Complex64 { x.iter().zip(y).map(|(a, b)| a.conj() * b).sum() };
    let mut total = dot(w, u);
    for (tau, b) in delayed {
        let bc = b.map(|x| Complex64::new(x, 0.0));
        let bu: Vec<Complex64> = (&bc * nalgebra::DVector::from_column_slice(u)).iter().copied().collect();
        let coupling = dot(w, &bu);
        let n = 2000;
        let h = tau / n as f64;
        let f = |xi: f64| (psi.conj() * (xi + tau)).exp() * (phi * xi).exp();
        let mut s = f(-tau) + f(0.0);
        for k in 1..n {
            s += f(-tau + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        total += coupling * s * (h / 3.0);
    }
    total
}

/// Worst relative null-vector residual and worst pairing defect over both
/// kernels at the solved equilibrium, all recomputed from an independently
/// assembled operator.
pub fn eigen_checks() -> (f64, f64) {
    let (_, _, lin) = reference();
    let mut resid = 0.0_f64;
    let mut pairing = 0.0_f64;
    let inf = |v: &nalgebra::DVector<Complex64>| v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    for (family, tau2) in [(KernelFamily::Discrete, Some(TAU2)), (WEAK, None)] {
        let h = critical_delay(&lin, family).unwrap();
        let pair = eigen_pair(&lin, &h, tau2).unwrap();
        let (a, delayed) = operator(&lin, &h, tau2);
        let l = h.lambda1();
        let m = char_matrix(l, &a, &delayed);
        let v = nalgebra::DVector::from_vec(pair.v.clone());
        let w = nalgebra::DVector::from_vec(pair.w.clone());
        resid = resid.max(inf(&(&m * &v)) / inf(&v));
        resid = resid.max(inf(&(m.adjoint() * &w)) / inf(&w));
        let vbar: Vec<Complex64> = pair.v.iter().map(|z| z.conj()).collect();
        let hh = pairing_quadrature(&pair.w, &pair.v, l, l, &delayed);
        let hhbar = pairing_quadrature(&pair.w, &vbar, l, l.conj(), &delayed);
        pairing = pairing.max((hh - 1.0).norm()).max(hhbar.norm());
    }
    (resid, pairing)
}
