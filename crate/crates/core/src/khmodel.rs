//! Kramers-Henneberger model in scaled variables.
//!
//! The dressed potential is `−I(z, Λ)/(π ε)` with
//!
//! ```text
//! I(z, Λ) = ∫₋₁¹ dz′ [(z − z′)² + 1/Λ²]^{−1/2} (1 − z′²)^{−1/2}
//! ```
//!
//! which grows like `2 ln Λ + ln Λ · z²` near the origin. The running
//! coupling `α(Λ) = K²/ln Λ` solves `dα/d lnΛ = −α/lnΛ` exactly, and the
//! limiting energies are reported in Rydberg units (`R = 1`).
//!
//! For comparison, the three-dimensional small-field result quoted in the
//! literature is `E₀ ≈ −R/2 + R/(3ε_exp²)`; it is not computed here.

use std::f64::consts::{FRAC_2_PI, PI};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rgflow::{CouplingFlow, FlowError};
use crate::uvreduce::{QuadraticReduction, ReduceError};

/// Default starting order of the Gauss-Chebyshev rule.
pub const DEFAULT_ORDER: usize = 16;
/// Orders beyond this count as non-convergence.
pub const MAX_ORDER: usize = 1 << 16;
/// Relative agreement of successive order doublings.
pub const QUADRATURE_RTOL: f64 = 1e-8;

const MAX_LEGENDRE_LEVEL: usize = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KhError {
    #[error("quadrature did not converge at z = {z}, Λ = {cutoff}: last two values {previous} and {last}")]
    Quadrature {
        z: f64,
        cutoff: f64,
        previous: f64,
        last: f64,
    },
    #[error("fit window is degenerate (w = {w}, {points} points)")]
    FitDegenerate { w: f64, points: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

/// Scaled-model parameters. `λ_L`, `Z`, `e`, `ℰ` and `ω` only enter through
/// `ε_exp` and are not carried.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KhParams {
    pub eps_exp: f64,
    pub cutoff: f64,
    pub order: usize,
    pub k: f64,
}

impl KhParams {
    pub fn new(eps_exp: f64, cutoff: f64, order: usize, k: f64) -> Result<Self, KhError> {
        if !(eps_exp > 0.0) {
            return Err(KhError::InvalidParameter(format!("ε_exp must be positive, got {eps_exp}")));
        }
        if !(cutoff > 1.0) {
            return Err(KhError::InvalidParameter(format!("ln Λ must be positive, got Λ = {cutoff}")));
        }
        if order < 16 || order % 2 != 0 {
            return Err(KhError::InvalidParameter(format!("quadrature order must be even and >= 16, got {order}")));
        }
        Ok(Self {
            eps_exp,
            cutoff,
            order,
            k,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// Equal-weight Chebyshev nodes, order doubled from `n_q`.
    GaussChebyshev,
    /// Angle substitution with a sinh map clustered on the near-singular
    /// point and Gauss-Legendre on each side.
    ClusteredChebyshev,
    /// Gauss-Chebyshev, falling back to the clustered rule when the plain
    /// rule exhausts its order budget (large `Λ`).
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Node count of the last evaluation.
    pub order: usize,
    pub rule: QuadratureRule,
}

#[derive(Clone, Copy)]
enum Kernel {
    Value,
    First,
    Second,
}

impl Kernel {
    /// Kernel at separation `d = z − z′` with `q = d² + δ²`.
    fn eval(self, d: f64, delta2: f64) -> f64 {
        let q = d * d + delta2;
        let r = q.sqrt();
        match self {
            Kernel::Value => 1.0 / r,
            Kernel::First => -d / (q * r),
            Kernel::Second => (3.0 * d * d - q) / (q * q * r),
        }
    }
}

fn check_cutoff(cutoff: f64) -> Result<(), KhError> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(KhError::InvalidParameter(format!("cutoff must be positive and finite, got {cutoff}")));
    }
    Ok(())
}

fn gauss_chebyshev(kernel: Kernel, z: f64, cutoff: f64, n: usize) -> f64 {
    let delta2 = cutoff.powi(-2);
    let step = PI / n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        let zk = ((k as f64 + 0.5) * step).cos();
        acc += kernel.eval(z - zk, delta2);
    }
    acc * step
}

fn chebyshev_doubling(kernel: Kernel, z: f64, cutoff: f64, n_q: usize) -> Result<Quadrature, KhError> {
    let mut n = n_q;
    let mut prev = gauss_chebyshev(kernel, z, cutoff, n);
    while 2 * n <= MAX_ORDER {
        n *= 2;
        let cur = gauss_chebyshev(kernel, z, cutoff, n);
        if (cur - prev).abs() <= QUADRATURE_RTOL * cur.abs() {
            return Ok(Quadrature {
                value: cur,
                order: n,
                rule: QuadratureRule::GaussChebyshev,
            });
        }
        prev = cur;
    }
    Err(KhError::Quadrature {
        z,
        cutoff,
        previous: prev,
        last: gauss_chebyshev(kernel, z, cutoff, n),
    })
}

/// Gauss-Legendre nodes and weights on `[−1, 1]` for `n = 2^level`.
fn legendre_rule(level: usize) -> &'static [(f64, f64)] {
    static RULES: [OnceLock<Vec<(f64, f64)>>; MAX_LEGENDRE_LEVEL + 1] = [const { OnceLock::new() }; MAX_LEGENDRE_LEVEL + 1];
    RULES[level].get_or_init(|| {
        let n = 1usize << level;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule.push((x, w));
            rule.push((-x, w));
        }
        rule
    })
}

/// `∫₀^π K(z − cos θ) dθ` with `θ = θ* ± ω sinh u` on each side of `θ*`.
fn clustered_sum(kernel: Kernel, z: f64, cutoff: f64, level: usize) -> f64 {
    let delta = 1.0 / cutoff;
    let delta2 = delta * delta;
    let (theta_s, gap) = if z >= 1.0 {
        (0.0, z - 1.0)
    } else if z <= -1.0 {
        (PI, z + 1.0)
    } else {
        (z.acos(), 0.0)
    };
    let omega = delta / theta_s.sin().max(delta.sqrt());
    let rule = legendre_rule(level);
    let mut total = 0.0;
    for (sign, span) in [(1.0, PI - theta_s), (-1.0, theta_s)] {
        if span <= 0.0 {
            continue;
        }
        let umax = (span / omega).asinh();
        let half = 0.5 * umax;
        let mut acc = 0.0;
        for &(t, w) in rule {
            let u = half * (t + 1.0);
            let dtheta = sign * omega * u.sinh();
            // z − cos θ without cancellation next to θ*.
            let d = gap + 2.0 * (theta_s + 0.5 * dtheta).sin() * (0.5 * dtheta).sin();
            acc += w * kernel.eval(d, delta2) * omega * u.cosh();
        }
        total += acc * half;
    }
    total
}

fn clustered_doubling(kernel: Kernel, z: f64, cutoff: f64) -> Result<Quadrature, KhError> {
    let mut prev = clustered_sum(kernel, z, cutoff, 4);
    for level in 5..=MAX_LEGENDRE_LEVEL {
        let cur = clustered_sum(kernel, z, cutoff, level);
        if (cur - prev).abs() <= QUADRATURE_RTOL * cur.abs() {
            return Ok(Quadrature {
                value: cur,
                order: 2 << level,
                rule: QuadratureRule::ClusteredChebyshev,
            });
        }
        prev = cur;
    }
    Err(KhError::Quadrature {
        z,
        cutoff,
        previous: prev,
        last: clustered_sum(kernel, z, cutoff, MAX_LEGENDRE_LEVEL),
    })
}

fn integrate(kernel: Kernel, z: f64, cutoff: f64, n_q: usize, rule: QuadratureRule) -> Result<Quadrature, KhError> {
    check_cutoff(cutoff)?;
    if !z.is_finite() {
        return Err(KhError::InvalidParameter(format!("z must be finite, got {z}")));
    }
    if n_q < 16 || n_q % 2 != 0 {
        return Err(KhError::InvalidParameter(format!("quadrature order must be even and >= 16, got {n_q}")));
    }
    match rule {
        QuadratureRule::GaussChebyshev => chebyshev_doubling(kernel, z, cutoff, n_q),
        QuadratureRule::ClusteredChebyshev => clustered_doubling(kernel, z, cutoff),
        QuadratureRule::Auto => {
            chebyshev_doubling(kernel, z, cutoff, n_q).or_else(|_| clustered_doubling(kernel, z, cutoff))
        }
    }
}

/// `I(z, Λ)` with an explicit rule and starting order.
pub fn dressed_potential_integral(z: f64, cutoff: f64, n_q: usize, rule: QuadratureRule) -> Result<Quadrature, KhError> {
    integrate(Kernel::Value, z, cutoff, n_q, rule)
}

/// `I(z, Λ)` with the default rule.
pub fn dressed_integral(z: f64, cutoff: f64) -> Result<f64, KhError> {
    Ok(dressed_potential_integral(z, cutoff, DEFAULT_ORDER, QuadratureRule::Auto)?.value)
}

/// `(I, ∂_z I, ∂²_z I)` by differentiating under the integral.
pub fn dressed_integral_derivatives(z: f64, cutoff: f64) -> Result<(f64, f64, f64), KhError> {
    let i0 = integrate(Kernel::Value, z, cutoff, DEFAULT_ORDER, QuadratureRule::Auto)?.value;
    // ∂_z I vanishes at z = 0; a relative test would never be met there.
    let i1 = if z == 0.0 {
        0.0
    } else {
        integrate(Kernel::First, z, cutoff, DEFAULT_ORDER, QuadratureRule::Auto)?.value
    };
    let i2 = integrate(Kernel::Second, z, cutoff, DEFAULT_ORDER, QuadratureRule::Auto)?.value;
    Ok((i0, i1, i2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogFit {
    pub cutoff: f64,
    pub c0: f64,
    pub c2: f64,
}

impl LogFit {
    pub fn c0_per_log(&self) -> f64 {
        self.c0 / self.cutoff.ln()
    }

    pub fn c2_per_log(&self) -> f64 {
        self.c2 / self.cutoff.ln()
    }
}

/// Least-squares fit `I(z, Λ) ≈ c0 + c2·z²` on `n_fit` equally spaced points of `[−w, w]`.
pub fn log_divergence_fit(cutoffs: &[f64], w: f64, n_fit: usize) -> Result<Vec<LogFit>, KhError> {
    if !(w <= 0.3) || n_fit < 5 {
        return Err(KhError::InvalidParameter(format!(
            "fit needs w <= 0.3 and at least 5 points, got w = {w}, n = {n_fit}"
        )));
    }
    if !(w > 0.0) {
        return Err(KhError::FitDegenerate { w, points: n_fit });
    }
    let zs: Vec<f64> = (0..n_fit)
        .map(|j| -w + 2.0 * w * j as f64 / (n_fit - 1) as f64)
        .collect();
    cutoffs
        .par_iter()
        .map(|&cutoff| {
            let ys = zs
                .iter()
                .map(|&z| dressed_integral(z, cutoff))
                .collect::<Result<Vec<_>, _>>()?;
            let (c0, c2) = fit_even_quadratic(&zs, &ys).ok_or(KhError::FitDegenerate { w, points: n_fit })?;
            Ok(LogFit { cutoff, c0, c2 })
        })
        .collect()
}

/// Normal equations for `y ≈ c0 + c2·t` with `t = z²`.
fn fit_even_quadratic(zs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = zs.len() as f64;
    let t_mean = zs.iter().map(|z| z * z).sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for (z, y) in zs.iter().zip(ys) {
        let dt = z * z - t_mean;
        stt += dt * dt;
        sty += dt * (y - y_mean);
    }
    if stt <= f64::EPSILON * t_mean * t_mean * n {
        return None;
    }
    let c2 = sty / stt;
    Some((y_mean - c2 * t_mean, c2))
}

/// `α(Λ) = K²/ln Λ`.
pub fn cs_solution(k: f64) -> CouplingFlow {
    CouplingFlow::log_law(k)
}

/// `dα/d lnΛ + α/ln Λ` along `flow`.
pub fn cs_residual(flow: &CouplingFlow, cutoff: f64) -> Result<f64, KhError> {
    let alpha = flow.coupling_at(cutoff)?;
    Ok(flow.log_derivative(cutoff)? + alpha / cutoff.ln())
}

/// `Ê₀ = ½√((2/π)(α/ε)ln Λ) + (2/π)(α/ε)ln Λ`.
pub fn hat_ground_energy(alpha: f64, eps_exp: f64, cutoff: f64) -> f64 {
    let s = FRAC_2_PI * alpha / eps_exp * cutoff.ln();
    0.5 * s.sqrt() + s
}

/// `Ê₀` along `α = K²/ln Λ`, where it no longer depends on `Λ`.
pub fn hat_ground_energy_for_k(k: f64, eps_exp: f64) -> f64 {
    let s = FRAC_2_PI * k * k / eps_exp;
    0.5 * s.sqrt() + s
}

/// Quadratic reduction of `−g(c0 + c2 z²)/(π ε)` with `κ = ½`.
pub fn fit_reduction(fit: &LogFit, eps_exp: f64, coupling: f64) -> Result<QuadraticReduction, KhError> {
    let f = -coupling / (PI * eps_exp);
    Ok(QuadraticReduction::new(fit.cutoff, 0.0, f * fit.c2, f * fit.c0, 0.5)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldRegime {
    /// `ε_exp → ∞`, `K = −√(2/(π ε_exp³))`.
    SmallField,
    /// `ε_exp → 0`, `K² = ε_exp`.
    StrongField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEnergy {
    pub regime: FieldRegime,
    pub k: f64,
    /// `E₀` in Rydberg units; for the strong field this is the `+` branch.
    pub energy: f64,
    /// The `−` branch of the strong-field root.
    pub alternate: Option<f64>,
    /// Whether the regime predicts `E₀ ∝ ε_exp²` with `E₀ > 0`.
    pub positive_scaling: bool,
}

pub fn ground_energy_limits(eps_exp: f64, regime: FieldRegime) -> Result<LimitEnergy, KhError> {
    if !(eps_exp > 0.0) {
        return Err(KhError::InvalidParameter(format!("ε_exp must be positive, got {eps_exp}")));
    }
    let e2 = eps_exp * eps_exp;
    Ok(match regime {
        FieldRegime::SmallField => LimitEnergy {
            regime,
            k: -(FRAC_2_PI / eps_exp.powi(3)).sqrt(),
            energy: -0.5 + 1.0 / e2,
            alternate: None,
            positive_scaling: false,
        },
        FieldRegime::StrongField => {
            let root = 0.5 * FRAC_2_PI.sqrt() * e2;
            LimitEnergy {
                regime,
                k: eps_exp.sqrt(),
                energy: FRAC_2_PI * e2 + root,
                alternate: Some(FRAC_2_PI * e2 - root),
                positive_scaling: true,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Complete elliptic integral of the first kind via the AGM, from `1 − k²`.
    fn elliptic_k(kp2: f64) -> f64 {
        let (mut a, mut b) = (1.0, kp2.sqrt());
        for _ in 0..40 {
            let m = 0.5 * (a + b);
            b = (a * b).sqrt();
            a = m;
        }
        PI / (2.0 * a)
    }

    /// `I(0, Λ)` in closed form.
    fn origin_value(cutoff: f64) -> f64 {
        let d2 = cutoff.powi(-2);
        2.0 * elliptic_k(d2 / (1.0 + d2)) / (1.0 + d2).sqrt()
    }

    fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    #[test]
    fn unit_cutoff_matches_direct_integration() {
        let direct = adaptive_simpson(&|t: f64| 1.0 / (t.cos().powi(2) + 1.0).sqrt(), 0.0, PI, 1e-12);
        for rule in [QuadratureRule::GaussChebyshev, QuadratureRule::ClusteredChebyshev] {
            let q = dressed_potential_integral(0.0, 1.0, 16, rule).unwrap();
            assert!((q.value - direct).abs() < 1e-6 * direct, "{rule:?}");
        }
        assert!((direct - origin_value(1.0)).abs() < 1e-10);
    }

    #[test]
    fn origin_matches_elliptic_form() {
        for cutoff in [10.0, 1e2, 1e4, 1e6] {
            let v = dressed_integral(0.0, cutoff).unwrap();
            let exact = origin_value(cutoff);
            assert!((v - exact).abs() < 1e-8 * exact, "Λ={cutoff}: {v} vs {exact}");
        }
    }

    #[test]
    fn origin_grows_like_two_log_cutoff() {
        let pts: Vec<(f64, f64)> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&l| (f64::ln(l), dressed_integral(0.0, l).unwrap()))
            .collect();
        let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
        assert!((slope - 2.0).abs() < 0.04, "{slope}");
    }

    #[test]
    fn integral_is_even() {
        let a = dressed_integral(0.3, 1e3).unwrap();
        let b = dressed_integral(-0.3, 1e3).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn rules_agree_on_test_grid() {
        for &z in &[0.0, 0.1, 0.5, 0.9] {
            for &l in &[10.0, 1e2, 1e4] {
                let q = dressed_potential_integral(z, l, 16, QuadratureRule::Auto).unwrap();
                let c = dressed_potential_integral(z, l, 16, QuadratureRule::ClusteredChebyshev).unwrap();
                assert!((q.value - c.value).abs() < 1e-8 * c.value, "z={z} Λ={l}");
            }
        }
    }

    #[test]
    fn plain_rule_reports_last_values_when_budget_runs_out() {
        let err = dressed_potential_integral(0.0, 1e6, 16, QuadratureRule::GaussChebyshev).unwrap_err();
        assert!(matches!(err, KhError::Quadrature { .. }));
    }

    #[test]
    fn outside_the_interval_is_finite() {
        let v = dressed_integral(1.5, 1e3).unwrap();
        let far = PI / 1.5;
        assert!(v.is_finite() && v > far);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &z in &[0.0, 0.2, 0.6] {
            let (i0, i1, i2) = dressed_integral_derivatives(z, 10.0).unwrap();
            let (f0, f1, f2) = crate::potential::finite_difference_derivatives(|t| dressed_integral(t, 10.0).unwrap(), z);
            assert!((i0 - f0).abs() < 1e-12 * i0);
            assert!((i1 - f1).abs() < 1e-6 * i0, "z={z}: {i1} vs {f1}");
            assert!((i2 - f2).abs() < 1e-4 * i2.abs(), "z={z}: {i2} vs {f2}");
        }
    }

    #[test]
    fn fit_tracks_log_cutoff() {
        let fits = log_divergence_fit(&[1e2, 1e4], 0.2, 21).unwrap();
        let c2 = fits[1].c2_per_log();
        assert!((0.9..=1.1).contains(&c2), "{c2}");
        let slope = (fits[1].c0 - fits[0].c0) / (f64::ln(1e4) - f64::ln(1e2));
        assert!((slope - 2.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn narrower_window_is_stable() {
        let wide = log_divergence_fit(&[1e4], 0.2, 21).unwrap()[0].c2;
        let narrow = log_divergence_fit(&[1e4], 0.1, 21).unwrap()[0].c2;
        assert!((wide - narrow).abs() < 0.02 * wide, "{wide} vs {narrow}");
    }

    #[test]
    fn fit_arguments_validated() {
        assert!(matches!(log_divergence_fit(&[1e2], 0.0, 9), Err(KhError::FitDegenerate { .. })));
        assert!(log_divergence_fit(&[1e2], 0.5, 9).is_err());
        assert!(log_divergence_fit(&[1e2], 0.2, 3).is_err());
    }

    #[test]
    fn cs_solution_examples() {
        let e = std::f64::consts::E;
        assert!((cs_solution(1.0).coupling_at(e).unwrap() - 1.0).abs() < 1e-15);
        assert!((cs_solution(2.0).coupling_at(e.powi(4)).unwrap() - 1.0).abs() < 1e-15);
        let flow = cs_solution(1.3);
        for l in [3.0, 1e2, 1e5, 1e9] {
            assert!(cs_residual(&flow, l).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn hat_energy_constant_along_flow() {
        let (k, eps) = (0.7, 2.0);
        let flow = cs_solution(k);
        let reference = hat_ground_energy_for_k(k, eps);
        for l in [1e2, 1e3, 1e4, 1e5, 1e6] {
            let e = hat_ground_energy(flow.coupling_at(l).unwrap(), eps, l);
            assert!((e - reference).abs() <= 1e-10 * reference);
        }
    }

    #[test]
    fn limit_examples() {
        let small = ground_energy_limits(10.0, FieldRegime::SmallField).unwrap();
        assert!((small.energy + 0.49).abs() < 1e-15);
        assert!((ground_energy_limits(1e6, FieldRegime::SmallField).unwrap().energy + 0.5).abs() < 1e-11);
        let strong = ground_energy_limits(0.1, FieldRegime::StrongField).unwrap();
        let root = 0.5 * FRAC_2_PI.sqrt() * 0.01;
        assert!((strong.energy - (FRAC_2_PI * 0.01 + root)).abs() < 1e-15);
        assert!((strong.alternate.unwrap() - (FRAC_2_PI * 0.01 - root)).abs() < 1e-15);
        assert!(strong.alternate.unwrap() > 0.0);
        assert!((strong.k * strong.k - 0.1).abs() < 1e-15);
        assert!(ground_energy_limits(0.0, FieldRegime::SmallField).is_err());
    }

    #[test]
    fn fit_reduction_reproduces_closed_form_energy() {
        // With the measured bracket replaced by ln Λ·[2 + z²] the oscillator at
        // coupling −α gives exactly the closed-form Ê₀.
        let (alpha, eps, l) = (0.3, 1.5, 1e4);
        let fit = LogFit {
            cutoff: l,
            c0: 2.0 * f64::ln(l),
            c2: f64::ln(l),
        };
        let red = fit_reduction(&fit, eps, -alpha).unwrap();
        let e = crate::uvreduce::ho_ground_energy(&red).energy;
        let closed = hat_ground_energy(alpha, eps, l);
        assert!((e - closed).abs() < 1e-12 * closed);
    }

    #[test]
    fn params_validated() {
        assert!(KhParams::new(1.0, 1e3, 16, 1.0).is_ok());
        assert!(KhParams::new(0.0, 1e3, 16, 1.0).is_err());
        assert!(KhParams::new(1.0, 1.0, 16, 1.0).is_err());
        assert!(KhParams::new(1.0, 1e3, 17, 1.0).is_err());
    }
}
