//! One-dimensional potential families `V(x) = g·v(x)`.
//!
//! Every family factors a single multiplicative coupling `g` out of a fixed
//! shape `v`, and carries the kinetic normalization `κ` of `H = κp² + V(x)`
//! (`ħ = 1` throughout). Closed-form first and second derivatives are provided
//! for the analytic families; `Custom` shapes fall back to central differences.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::khmodel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("potential is singular at x = {x} ({family})")]
    SingularPoint { family: &'static str, x: f64 },
    #[error("invalid parameter for {family}: {reason}")]
    InvalidParameter { family: &'static str, reason: String },
    #[error("dressed-potential quadrature failed: {0}")]
    Quadrature(String),
}

/// Shape function with optional analytic derivatives, for user-supplied potentials.
pub type ShapeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ShapeDerivativesFn = Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>;

#[derive(Clone)]
pub struct CustomShape {
    pub name: String,
    pub shape: ShapeFn,
    pub derivatives: Option<ShapeDerivativesFn>,
    /// Whether `v(x) = v(-x)`; enables parity-restricted oracle solves.
    pub even: bool,
}

impl fmt::Debug for CustomShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomShape")
            .field("name", &self.name)
            .field("analytic_derivatives", &self.derivatives.is_some())
            .field("even", &self.even)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    /// `v(x) = e^{-2ax} - 2e^{-ax}`, coupling `A`, `κ = 1/(2m)`.
    Morse { a: f64, mass: f64 },
    /// `v(x) = x⁴`, `κ = 1`.
    Quartic,
    /// `v(x) = -1/|x|`, `κ = 1/2`.
    Coulomb1D,
    /// `v(x) = -1/√(x² + 1/Λ²)`, `κ = 1/2`.
    SoftCoulomb { cutoff: f64 },
    /// `v(z) = -(1/(π ε_exp)) ∫₋₁¹ [(z−z′)² + 1/Λ²]^{-1/2} (1−z′²)^{-1/2} dz′`, `κ = 1/2`.
    KramersHenneberger { eps_exp: f64, cutoff: f64 },
    Custom(CustomShape),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Morse { .. } => "morse",
            Family::Quartic => "quartic",
            Family::Coulomb1D => "coulomb",
            Family::SoftCoulomb { .. } => "soft-coulomb",
            Family::KramersHenneberger { .. } => "kh",
            Family::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PotentialSpec {
    family: Family,
    coupling: f64,
    kinetic_norm: f64,
}

impl PotentialSpec {
    pub fn new(family: Family, coupling: f64, kinetic_norm: f64) -> Result<Self, PotentialError> {
        let name = family.name();
        let invalid = |reason: &str| PotentialError::InvalidParameter {
            family: name,
            reason: reason.to_string(),
        };
        if !(kinetic_norm > 0.0 && kinetic_norm.is_finite()) {
            return Err(invalid("kinetic normalization must be positive"));
        }
        if !coupling.is_finite() {
            return Err(invalid("coupling must be finite"));
        }
        match &family {
            Family::Morse { a, mass } => {
                if !(*a > 0.0) {
                    return Err(invalid("Morse range parameter a must be positive"));
                }
                if !(*mass > 0.0) {
                    return Err(invalid("mass must be positive"));
                }
            }
            Family::SoftCoulomb { cutoff } => {
                if !(*cutoff > 0.0) {
                    return Err(invalid("cutoff must be positive"));
                }
            }
            Family::KramersHenneberger { eps_exp, cutoff } => {
                if !(*eps_exp > 0.0) {
                    return Err(invalid("eps_exp must be positive"));
                }
                if !(*cutoff > 0.0) {
                    return Err(invalid("cutoff must be positive"));
                }
            }
            Family::Quartic | Family::Coulomb1D | Family::Custom(_) => {}
        }
        Ok(Self {
            family,
            coupling,
            kinetic_norm,
        })
    }

    /// Morse well with depth `A`, range `a`, and mass `m`.
    pub fn morse(depth: f64, a: f64, mass: f64) -> Result<Self, PotentialError> {
        Self::new(Family::Morse { a, mass }, depth, 0.5 / mass)
    }

    /// `H = p² + g x⁴`.
    pub fn quartic(g: f64) -> Self {
        Self::new(Family::Quartic, g, 1.0).expect("quartic parameters are always valid")
    }

    /// `H = p²/2 − α/|x|`.
    pub fn coulomb(alpha: f64) -> Self {
        Self::new(Family::Coulomb1D, alpha, 0.5).expect("coulomb parameters are always valid")
    }

    /// `H = p²/2 − α/√(x² + 1/Λ²)`; the softening length is `1/Λ`.
    pub fn soft_coulomb(alpha: f64, cutoff: f64) -> Result<Self, PotentialError> {
        Self::new(Family::SoftCoulomb { cutoff }, alpha, 0.5)
    }

    /// The scaled Kramers-Henneberger potential in `z = x/λ_L`.
    pub fn kramers_henneberger(alpha: f64, eps_exp: f64, cutoff: f64) -> Result<Self, PotentialError> {
        Self::new(Family::KramersHenneberger { eps_exp, cutoff }, alpha, 0.5)
    }

    pub fn custom(shape: CustomShape, coupling: f64, kinetic_norm: f64) -> Result<Self, PotentialError> {
        Self::new(Family::Custom(shape), coupling, kinetic_norm)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn kinetic_norm(&self) -> f64 {
        self.kinetic_norm
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self {
            coupling,
            ..self.clone()
        }
    }

    /// Rebinds the shape's cutoff (soft Coulomb, KH) to `cutoff`; other families are unchanged.
    pub fn with_cutoff(&self, cutoff: f64) -> Self {
        let family = match &self.family {
            Family::SoftCoulomb { .. } => Family::SoftCoulomb { cutoff },
            Family::KramersHenneberger { eps_exp, .. } => Family::KramersHenneberger {
                eps_exp: *eps_exp,
                cutoff,
            },
            other => other.clone(),
        };
        Self {
            family,
            ..self.clone()
        }
    }

    pub fn is_even(&self) -> bool {
        match &self.family {
            Family::Morse { .. } => false,
            Family::Quartic
            | Family::Coulomb1D
            | Family::SoftCoulomb { .. }
            | Family::KramersHenneberger { .. } => true,
            Family::Custom(c) => c.even,
        }
    }

    /// Whether closed-form (or quadrature-exact) derivatives are available.
    pub fn has_analytic_derivatives(&self) -> bool {
        match &self.family {
            Family::Custom(c) => c.derivatives.is_some(),
            _ => true,
        }
    }

    /// `V(x) = g·v(x)`.
    pub fn eval(&self, x: f64) -> Result<f64, PotentialError> {
        Ok(self.coupling * self.shape(x)?)
    }

    /// The uncoupled shape `v(x)`.
    pub fn shape(&self, x: f64) -> Result<f64, PotentialError> {
        match &self.family {
            Family::Morse { a, .. } => {
                let u = (-a * x).exp();
                Ok(u * u - 2.0 * u)
            }
            Family::Quartic => Ok(x.powi(4)),
            Family::Coulomb1D => {
                if x == 0.0 {
                    Err(PotentialError::SingularPoint { family: "coulomb", x })
                } else {
                    Ok(-1.0 / x.abs())
                }
            }
            Family::SoftCoulomb { cutoff } => Ok(-1.0 / (x * x + cutoff.powi(-2)).sqrt()),
            Family::KramersHenneberger { eps_exp, cutoff } => {
                let i = khmodel::dressed_integral(x, *cutoff)
                    .map_err(|e| PotentialError::Quadrature(e.to_string()))?;
                Ok(-i / (PI * eps_exp))
            }
            Family::Custom(c) => Ok((c.shape)(x)),
        }
    }

    /// `(V, V′, V″)` at `x0`: analytic where available, finite differences otherwise.
    pub fn derivatives(&self, x0: f64) -> Result<(f64, f64, f64), PotentialError> {
        let (v, d1, d2) = self.shape_derivatives(x0)?;
        let g = self.coupling;
        Ok((g * v, g * d1, g * d2))
    }

    fn shape_derivatives(&self, x: f64) -> Result<(f64, f64, f64), PotentialError> {
        match &self.family {
            Family::Morse { a, .. } => {
                let u = (-a * x).exp();
                Ok((
                    u * u - 2.0 * u,
                    2.0 * a * (u - u * u),
                    2.0 * a * a * (2.0 * u * u - u),
                ))
            }
            Family::Quartic => Ok((x.powi(4), 4.0 * x.powi(3), 12.0 * x * x)),
            Family::Coulomb1D => {
                if x == 0.0 {
                    return Err(PotentialError::SingularPoint { family: "coulomb", x });
                }
                let r = x.abs();
                let s = x.signum();
                Ok((-1.0 / r, s / (r * r), -2.0 / (r * r * r)))
            }
            Family::SoftCoulomb { cutoff } => {
                let q = x * x + cutoff.powi(-2);
                let r = q.sqrt();
                let r3 = q * r;
                Ok((-1.0 / r, x / r3, 1.0 / r3 - 3.0 * x * x / (r3 * q)))
            }
            Family::KramersHenneberger { eps_exp, cutoff } => {
                let (i0, i1, i2) = khmodel::dressed_integral_derivatives(x, *cutoff)
                    .map_err(|e| PotentialError::Quadrature(e.to_string()))?;
                let f = -1.0 / (PI * eps_exp);
                Ok((f * i0, f * i1, f * i2))
            }
            Family::Custom(c) => match &c.derivatives {
                Some(d) => Ok(d(x)),
                None => Ok(finite_difference_derivatives(|t| (c.shape)(t), x)),
            },
        }
    }

    /// Derivatives by the finite-difference fallback, regardless of family.
    pub fn derivatives_numeric(&self, x0: f64) -> Result<(f64, f64, f64), PotentialError> {
        // Surface singular points rather than differencing across them.
        let v0 = self.shape(x0)?;
        let g = self.coupling;
        let mut err = None;
        let f = |t: f64| match self.shape(t) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        };
        let (_, d1, d2) = finite_difference_derivatives(f, x0);
        if let Some(e) = err {
            return Err(e);
        }
        Ok((g * v0, g * d1, g * d2))
    }
}

/// Central differences: `h = max(|x0|, 1)·ε^{1/3}` for `f′` and a five-point
/// stencil with `h = max(|x0|, 1)·ε^{1/4}` for `f″`.
pub fn finite_difference_derivatives<F: FnMut(f64) -> f64>(mut f: F, x0: f64) -> (f64, f64, f64) {
    let scale = x0.abs().max(1.0);
    let f0 = f(x0);

    let h1 = scale * f64::EPSILON.cbrt();
    let d1 = (f(x0 + h1) - f(x0 - h1)) / (2.0 * h1);

    let h2 = scale * f64::EPSILON.powf(0.25);
    let d2 = (-f(x0 + 2.0 * h2) + 16.0 * f(x0 + h2) - 30.0 * f0 + 16.0 * f(x0 - h2)
        - f(x0 - 2.0 * h2))
        / (12.0 * h2 * h2);
    (f0, d1, d2)
}
