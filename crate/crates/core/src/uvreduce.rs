//! Quadratic reduction at the cutoff point `x₀ = 1/Λ`.
//!
//! The second-order Taylor polynomial of `V` at `x₀` is rewritten as a shifted
//! oscillator `c·(x − x̄)² + C`, whose ground state is known in closed form.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;
use thiserror::Error;

use crate::potential::{Family, PotentialError, PotentialSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReduceError {
    #[error("degenerate expansion: V''(1/Λ) vanishes at Λ = {cutoff}")]
    Degenerate { cutoff: f64 },
    #[error("cutoff must be positive and finite, got {0}")]
    InvalidCutoff(f64),
    #[error("inverted oscillator (stiffness {stiffness}) has no bound state")]
    NoBoundState { stiffness: f64 },
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Which quadratic form represents the potential at the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exact completion of the square of the Taylor polynomial at `1/Λ`.
    #[default]
    Taylor,
    /// The hand-expanded forms for the Morse well (`a²A x² − A − a²A/Λ²`), the
    /// regularized Coulomb potential (bracket constant `8/Λ²`) and the KH log fit
    /// (`x̄ = 0`, `C = 2c`). Identical to `Taylor` for every other family.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticReduction {
    pub cutoff: f64,
    pub center: f64,
    pub stiffness: f64,
    pub offset: f64,
    pub kinetic_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignBranch {
    Positive,
    Negative,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateSource {
    RgPrediction,
    Oracle,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateEstimate {
    pub energy: f64,
    /// The other root when the branch is ambiguous.
    pub alternate: Option<f64>,
    pub sign_branch: SignBranch,
    pub source: EstimateSource,
}

impl GroundStateEstimate {
    /// Both roots `(upper, lower)` for an ambiguous estimate, or the single value twice.
    pub fn branches(&self) -> (f64, f64) {
        match self.alternate {
            Some(alt) => (self.energy.max(alt), self.energy.min(alt)),
            None => (self.energy, self.energy),
        }
    }
}

/// Normalized Gaussian `(πσ²)^{-1/4} exp(−(x−x̄)²/(2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianState {
    pub center: f64,
    pub width: f64,
}

impl GaussianState {
    pub fn amplitude(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.width;
        (PI * self.width * self.width).powf(-0.25) * (-0.5 * t * t).exp()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.amplitude(x).powi(2)
    }
}

impl QuadraticReduction {
    pub fn new(
        cutoff: f64,
        center: f64,
        stiffness: f64,
        offset: f64,
        kinetic_norm: f64,
    ) -> Result<Self, ReduceError> {
        if stiffness == 0.0 || !stiffness.is_finite() {
            return Err(ReduceError::Degenerate { cutoff });
        }
        Ok(Self {
            cutoff,
            center,
            stiffness,
            offset,
            kinetic_norm,
        })
    }

    /// `c·(x − x̄)² + C`.
    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.center;
        self.stiffness * d * d + self.offset
    }

    /// Coefficients `(p₀, p₁, p₂)` of `p₀ + p₁x + p₂x²`.
    pub fn polynomial(&self) -> (f64, f64, f64) {
        let c = self.stiffness;
        let m = self.center;
        (c * m * m + self.offset, -2.0 * c * m, c)
    }

    /// Oscillator frequency `ω = 2√(κc)` for `c > 0`.
    pub fn frequency(&self) -> Option<f64> {
        (self.stiffness > 0.0).then(|| 2.0 * (self.kinetic_norm * self.stiffness).sqrt())
    }

    /// The reduced Hamiltonian `κp² + c(x−x̄)² + C` as a potential for the oracle.
    pub fn as_potential(&self) -> PotentialSpec {
        let red = *self;
        let shape = crate::potential::CustomShape {
            name: "reduced-oscillator".into(),
            shape: std::sync::Arc::new(move |x| red.eval(x)),
            derivatives: Some(std::sync::Arc::new(move |x| {
                (red.eval(x), 2.0 * red.stiffness * (x - red.center), 2.0 * red.stiffness)
            })),
            even: red.center == 0.0,
        };
        PotentialSpec::custom(shape, 1.0, self.kinetic_norm)
            .expect("kinetic norm was validated upstream")
    }
}

/// Taylor-expands `V` at `1/Λ` and completes the square.
pub fn expand_at_cutoff(spec: &PotentialSpec, cutoff: f64) -> Result<QuadraticReduction, ReduceError> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(ReduceError::InvalidCutoff(cutoff));
    }
    let spec = spec.with_cutoff(cutoff);
    let x0 = 1.0 / cutoff;
    let (v, d1, d2) = spec.derivatives(x0)?;
    if d2 == 0.0 || !d2.is_finite() {
        return Err(ReduceError::Degenerate { cutoff });
    }
    let shift = d1 / d2;
    QuadraticReduction::new(
        cutoff,
        x0 - shift,
        0.5 * d2,
        v - 0.5 * d1 * shift,
        spec.kinetic_norm(),
    )
}

/// Reduction under the requested scheme.
pub fn reduce(spec: &PotentialSpec, cutoff: f64, scheme: Scheme) -> Result<QuadraticReduction, ReduceError> {
    match scheme {
        Scheme::Taylor => expand_at_cutoff(spec, cutoff),
        Scheme::Printed => match printed_reduction(spec, cutoff)? {
            Some(red) => Ok(red),
            None => expand_at_cutoff(spec, cutoff),
        },
    }
}

/// The hand-expanded reductions that differ from the exact Taylor completion.
fn printed_reduction(spec: &PotentialSpec, cutoff: f64) -> Result<Option<QuadraticReduction>, ReduceError> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(ReduceError::InvalidCutoff(cutoff));
    }
    let g = spec.coupling();
    let kappa = spec.kinetic_norm();
    match spec.family() {
        Family::Morse { a, .. } => {
            let c = a * a * g;
            QuadraticReduction::new(cutoff, 0.0, c, -g - c / (cutoff * cutoff), kappa).map(Some)
        }
        Family::SoftCoulomb { .. } => {
            let c = -g * cutoff.powi(3) * SQRT_2 / 16.0;
            QuadraticReduction::new(cutoff, 3.0 / cutoff, c, c * 8.0 / (cutoff * cutoff), kappa)
                .map(Some)
        }
        Family::KramersHenneberger { eps_exp, .. } => {
            if cutoff <= 1.0 {
                return Err(ReduceError::InvalidCutoff(cutoff));
            }
            // −g ln Λ [2 + z²] / (π ε)
            let c = -g * cutoff.ln() / (std::f64::consts::PI * eps_exp);
            QuadraticReduction::new(cutoff, 0.0, c, 2.0 * c, kappa).map(Some)
        }
        _ => Ok(None),
    }
}

/// Ground state of `κp² + c(x−x̄)² + C`: `E₀ = √(κc) + C` for `c > 0`; for an
/// inverted oscillator both roots `±√(κ|c|) + C` are returned as ambiguous.
pub fn ho_ground_energy(red: &QuadraticReduction) -> GroundStateEstimate {
    let root = (red.kinetic_norm * red.stiffness.abs()).sqrt();
    if red.stiffness > 0.0 {
        GroundStateEstimate {
            energy: root + red.offset,
            alternate: None,
            sign_branch: SignBranch::Positive,
            source: EstimateSource::ClosedForm,
        }
    } else {
        GroundStateEstimate {
            energy: root + red.offset,
            alternate: Some(-root + red.offset),
            sign_branch: SignBranch::Ambiguous,
            source: EstimateSource::ClosedForm,
        }
    }
}

/// Gaussian ground state, width `σ = √(2κ/ω)` with `ω = 2√(κc)`.
pub fn ho_ground_wavefunction(red: &QuadraticReduction) -> Result<GaussianState, ReduceError> {
    let omega = red.frequency().ok_or(ReduceError::NoBoundState {
        stiffness: red.stiffness,
    })?;
    Ok(GaussianState {
        center: red.center,
        width: (2.0 * red.kinetic_norm / omega).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    const CUTOFFS: [f64; 4] = [10.0, 1e2, 1e3, 1e4];

    #[test]
    fn quartic_reduction_matches_closed_form() {
        let g = 2.5;
        for &l in &CUTOFFS {
            let red = expand_at_cutoff(&PotentialSpec::quartic(g), l).unwrap();
            assert!(rel(red.stiffness, 6.0 * g / (l * l)) < 1e-12);
            assert!(rel(red.center, 2.0 / (3.0 * l)) < 1e-12);
            assert!(rel(red.offset, g / (3.0 * l.powi(4))) < 1e-12);
            let e = ho_ground_energy(&red);
            let closed = (6.0 * g / (l * l)).sqrt() + g / (3.0 * l.powi(4));
            assert!(rel(e.energy, closed) < 1e-12);
            assert_eq!(e.sign_branch, SignBranch::Positive);
        }
    }

    #[test]
    fn coulomb_reduction_matches_printed_form() {
        for &l in &CUTOFFS {
            let alpha = -0.3 / l.powi(3);
            let red = expand_at_cutoff(&PotentialSpec::coulomb(alpha), l).unwrap();
            assert!(rel(red.stiffness, -alpha * l.powi(3)) < 1e-12);
            assert!(rel(red.center, 1.5 / l) < 1e-12);
            assert!(rel(red.offset, -alpha * l.powi(3) * 0.75 / (l * l)) < 1e-12);
            let printed = 0.5 * (-2.0 * alpha * l.powi(3)).sqrt() - 0.75 * alpha * l;
            assert!(rel(ho_ground_energy(&red).energy, printed) < 1e-12);
        }
    }

    #[test]
    fn morse_taylor_tends_to_printed_limit() {
        let (a_depth, a) = (3.0, 1.2);
        let spec = PotentialSpec::morse(a_depth, a, 1.0).unwrap();
        let red = expand_at_cutoff(&spec, 1e6).unwrap();
        assert!(rel(red.stiffness, a * a * a_depth) < 1e-5);
        assert!(rel(red.offset, -a_depth) < 1e-12);
        assert!(red.center.abs() < 1e-11);

        // The hand-expanded form reproduces the closed-form E₀(Λ) exactly at every cutoff.
        for &l in &CUTOFFS {
            let p = reduce(&spec, l, Scheme::Printed).unwrap();
            let printed = a * (a_depth / 2.0).sqrt() - a_depth - a * a * a_depth / (l * l);
            assert!(rel(ho_ground_energy(&p).energy, printed) < 1e-12);
        }
    }

    #[test]
    fn soft_coulomb_generic_and_printed_brackets_differ() {
        let l = 100.0;
        let spec = PotentialSpec::soft_coulomb(-1e-6, 1.0).unwrap();
        let t = expand_at_cutoff(&spec, l).unwrap();
        let p = reduce(&spec, l, Scheme::Printed).unwrap();
        assert!(rel(t.stiffness, p.stiffness) < 1e-12);
        assert!(rel(t.center, 3.0 / l) < 1e-12);
        assert!(rel(t.offset / t.stiffness, 4.0 / (l * l)) < 1e-12);
        assert!(rel(p.offset / p.stiffness, 8.0 / (l * l)) < 1e-12);
    }

    #[test]
    fn unit_oscillator() {
        let red = QuadraticReduction::new(1.0, 0.0, 0.5, 0.0, 0.5).unwrap();
        assert_eq!(ho_ground_energy(&red).energy, 0.5);
        let psi = ho_ground_wavefunction(&red).unwrap();
        assert_eq!(psi.width, 1.0);
    }

    #[test]
    fn coulomb_fixed_point_gaussian_reaches_origin() {
        let l: f64 = 1e3;
        let red = expand_at_cutoff(&PotentialSpec::coulomb(-0.5 / l.powi(3)), l).unwrap();
        let psi = ho_ground_wavefunction(&red).unwrap();
        assert!(rel(psi.width, 1.0) < 1e-12);
        let expected = (-psi.center * psi.center / (psi.width * psi.width)).exp()
            / (PI * psi.width * psi.width).sqrt();
        assert!(rel(psi.density(0.0), expected) < 1e-14);
        assert!(psi.density(0.0) > 0.0);
    }

    #[test]
    fn inverted_oscillator_is_ambiguous() {
        let red = expand_at_cutoff(&PotentialSpec::coulomb(1.0), 10.0).unwrap();
        assert!(red.stiffness < 0.0);
        let e = ho_ground_energy(&red);
        assert_eq!(e.sign_branch, SignBranch::Ambiguous);
        let (hi, lo) = e.branches();
        assert!(rel(hi - red.offset, (0.5 * 1000.0f64).sqrt()) < 1e-12);
        assert!(rel(lo - red.offset, -(0.5 * 1000.0f64).sqrt()) < 1e-12);
        assert!(matches!(
            ho_ground_wavefunction(&red),
            Err(ReduceError::NoBoundState { .. })
        ));
    }

    #[test]
    fn degenerate_and_singular_expansions_fail() {
        // V″ = 12x² vanishes nowhere at 1/Λ, but a flat custom shape does.
        let flat = crate::potential::CustomShape {
            name: "linear".into(),
            shape: std::sync::Arc::new(|x| x),
            derivatives: Some(std::sync::Arc::new(|x| (x, 1.0, 0.0))),
            even: false,
        };
        let spec = PotentialSpec::custom(flat, 1.0, 1.0).unwrap();
        assert!(matches!(
            expand_at_cutoff(&spec, 10.0),
            Err(ReduceError::Degenerate { .. })
        ));
        assert!(matches!(
            expand_at_cutoff(&PotentialSpec::quartic(1.0), 0.0),
            Err(ReduceError::InvalidCutoff(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reconstruction_identity(
                which in 0usize..4,
                exp in 1.0f64..4.0,
                g in 0.1f64..5.0,
            ) {
                let l = 10f64.powf(exp);
                let spec = match which {
                    0 => PotentialSpec::morse(g, 1.0, 1.0).unwrap(),
                    1 => PotentialSpec::quartic(g),
                    2 => PotentialSpec::coulomb(-g),
                    _ => PotentialSpec::soft_coulomb(-g, 1.0).unwrap(),
                };
                let red = expand_at_cutoff(&spec, l).unwrap();
                let x0 = 1.0 / l;
                let (v, d1, d2) = spec.with_cutoff(l).derivatives(x0).unwrap();
                // Taylor polynomial coefficients in powers of x.
                let taylor = (v - d1 * x0 + 0.5 * d2 * x0 * x0, d1 - d2 * x0, 0.5 * d2);
                let (p0, p1, p2) = red.polynomial();
                let scale = v.abs().max(d1.abs() * x0).max(d2.abs() * x0 * x0);
                prop_assert!((p0 - taylor.0).abs() <= 1e-12 * scale);
                prop_assert!((p1 - taylor.1).abs() * x0 <= 1e-12 * scale);
                prop_assert!((p2 - taylor.2).abs() <= 1e-12 * taylor.2.abs());
            }
        }
    }
}
