//! Running couplings, beta functions and the UV-limit ground-state energy.
//!
//! The cutoff energy `E₀(g, Λ)` of the reduced oscillator is required to be
//! independent of `Λ`. Implicit differentiation of `dE₀/dΛ = 0` gives the beta
//! function `β = dg/d lnΛ = −Λ ∂_Λ E₀ / ∂_g E₀`, which is integrated in
//! `s = ln Λ`.

use std::f64::consts::SQRT_2;

use serde::Serialize;
use thiserror::Error;

use crate::potential::{Family, PotentialSpec};
use crate::uvreduce::{
    ho_ground_energy, reduce, EstimateSource, GroundStateEstimate, ReduceError, Scheme, SignBranch,
};

/// Smallest cutoff accepted for flow work; keeps `ln Λ` away from zero.
pub const CUTOFF_FLOOR: f64 = 2.0;

/// Cutoffs at which the UV limit is sampled: `10³`, `10^4.5`, `10⁶`.
pub const UV_SAMPLE_EXPONENTS: [f64; 3] = [3.0, 4.5, 6.0];

/// Relative agreement required between the last two UV samples.
pub const UV_LIMIT_TOLERANCE: f64 = 1e-4;

/// Relative local error tolerance of the flow integrator.
pub const FLOW_RTOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("cutoff {cutoff} is below the flow floor {CUTOFF_FLOOR}")]
    BelowFloor { cutoff: f64 },
    #[error("cutoff {cutoff} outside the flow's validity range [{min}, {max}]")]
    OutOfRange { cutoff: f64, min: f64, max: f64 },
    #[error("negative radicand in {radical} (value {value})")]
    Domain { radical: &'static str, value: f64 },
    #[error("flow undefined: ∂E₀/∂g vanishes at g = {coupling}, Λ = {cutoff}")]
    Undefined { coupling: f64, cutoff: f64 },
    #[error("reduced stiffness {stiffness} is not a bound oscillator at g = {coupling}, Λ = {cutoff}")]
    InvalidStiffness { coupling: f64, cutoff: f64, stiffness: f64 },
    #[error("no closed-form beta function for family {0}")]
    NoClosedForm(&'static str),
    #[error("no fixed point: {0}")]
    NoFixedPoint(String),
    #[error("integration aborted at Λ = {cutoff}, g = {coupling}: {reason}")]
    IntegrationAbort { cutoff: f64, coupling: f64, reason: String },
    #[error("no UV limit: E₀ samples {samples:?} at Λ = 10^{UV_SAMPLE_EXPONENTS:?} do not settle")]
    NoUvLimit { samples: [f64; 3] },
    #[error("tabulated trajectory must be strictly increasing in Λ with at least two points")]
    BadTable,
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum FlowLaw {
    /// `g(Λ) = c·Λᵏ`; `k = 0` is a constant coupling.
    PowerLaw { prefactor: f64, exponent: f64 },
    /// `g(Λ) = K²/ln Λ`.
    LogLaw { k: f64 },
    /// `(Λ, g)` samples, linearly interpolated in `ln Λ`.
    Tabulated { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingFlow {
    pub law: FlowLaw,
    pub range: (f64, f64),
    /// Set for trajectories that leave the fixed-point law of an attractive
    /// Coulomb-type potential; these are integrated but carry no claimed meaning.
    pub diagnostic_only: bool,
}

impl CouplingFlow {
    pub fn constant(g: f64) -> Self {
        Self::power_law(g, 0.0)
    }

    pub fn power_law(prefactor: f64, exponent: f64) -> Self {
        Self {
            law: FlowLaw::PowerLaw { prefactor, exponent },
            range: (CUTOFF_FLOOR, f64::INFINITY),
            diagnostic_only: false,
        }
    }

    pub fn log_law(k: f64) -> Self {
        Self {
            law: FlowLaw::LogLaw { k },
            range: (CUTOFF_FLOOR, f64::INFINITY),
            diagnostic_only: false,
        }
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self, FlowError> {
        if points.len() < 2 || points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(FlowError::BadTable);
        }
        let range = (points[0].0, points[points.len() - 1].0);
        Ok(Self {
            law: FlowLaw::Tabulated { points },
            range,
            diagnostic_only: false,
        })
    }

    pub fn with_range(mut self, min: f64, max: f64) -> Self {
        self.range = (min, max);
        self
    }

    fn check_range(&self, cutoff: f64) -> Result<(), FlowError> {
        let (min, max) = self.range;
        // Tabulated end points may carry a last-ulp rounding from exp(ln Λ).
        let slack = 1e-12;
        if cutoff < min * (1.0 - slack) || cutoff > max * (1.0 + slack) {
            return Err(FlowError::OutOfRange { cutoff, min, max });
        }
        Ok(())
    }

    pub fn coupling_at(&self, cutoff: f64) -> Result<f64, FlowError> {
        self.check_range(cutoff)?;
        Ok(match &self.law {
            FlowLaw::PowerLaw { prefactor, exponent } => prefactor * cutoff.powf(*exponent),
            FlowLaw::LogLaw { k } => k * k / cutoff.ln(),
            FlowLaw::Tabulated { points } => interpolate(points, cutoff),
        })
    }

    /// `dg/d ln Λ` along the law.
    pub fn log_derivative(&self, cutoff: f64) -> Result<f64, FlowError> {
        self.check_range(cutoff)?;
        Ok(match &self.law {
            FlowLaw::PowerLaw { prefactor, exponent } => exponent * prefactor * cutoff.powf(*exponent),
            FlowLaw::LogLaw { k } => {
                let s = cutoff.ln();
                -k * k / (s * s)
            }
            FlowLaw::Tabulated { points } => {
                let i = bracket(points, cutoff);
                let (l0, g0) = points[i];
                let (l1, g1) = points[i + 1];
                (g1 - g0) / (l1.ln() - l0.ln())
            }
        })
    }
}

fn bracket(points: &[(f64, f64)], cutoff: f64) -> usize {
    let i = points.partition_point(|p| p.0 <= cutoff);
    i.saturating_sub(1).min(points.len() - 2)
}

fn interpolate(points: &[(f64, f64)], cutoff: f64) -> f64 {
    let i = bracket(points, cutoff);
    let (l0, g0) = points[i];
    let (l1, g1) = points[i + 1];
    let t = (cutoff.ln() - l0.ln()) / (l1.ln() - l0.ln());
    g0 + t * (g1 - g0)
}

/// Hand-derived beta functions for the built-in families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ClosedFormBeta {
    /// `β = 2a²A / (Λ² + a² − aΛ²/√(8mA))`.
    Morse { a: f64, mass: f64 },
    /// `β = 2g (9Λ² + 2√(6g/Λ²)) / (9Λ² + √(6g/Λ²))`.
    Quartic,
    /// `β = −3α (2Λ + √(−2αΛ)) / (2Λ + 3√(−2αΛ))`.
    Coulomb,
    /// `β = −α (3Λ + 4√(−2√2 αΛ)) / (Λ + 4√(−2√2 αΛ))`.
    SoftCoulomb,
    /// `β = −α / ln Λ`.
    KramersHenneberger,
}

impl ClosedFormBeta {
    pub fn for_family(family: &Family) -> Result<Self, FlowError> {
        match family {
            Family::Morse { a, mass } => Ok(Self::Morse { a: *a, mass: *mass }),
            Family::Quartic => Ok(Self::Quartic),
            Family::Coulomb1D => Ok(Self::Coulomb),
            Family::SoftCoulomb { .. } => Ok(Self::SoftCoulomb),
            Family::KramersHenneberger { .. } => Ok(Self::KramersHenneberger),
            Family::Custom(_) => Err(FlowError::NoClosedForm("custom")),
        }
    }
}

fn checked_sqrt(radical: &'static str, value: f64) -> Result<f64, FlowError> {
    if value < 0.0 || value.is_nan() {
        Err(FlowError::Domain { radical, value })
    } else {
        Ok(value.sqrt())
    }
}

pub fn beta_closed_form(kind: ClosedFormBeta, g: f64, cutoff: f64) -> Result<f64, FlowError> {
    let l = cutoff;
    match kind {
        ClosedFormBeta::Morse { a, mass } => {
            let root = checked_sqrt("√(8mA)", 8.0 * mass * g)?;
            Ok(2.0 * a * a * g / (l * l + a * a - a * l * l / root))
        }
        ClosedFormBeta::Quartic => {
            let r = checked_sqrt("√(6g/Λ²)", 6.0 * g / (l * l))?;
            Ok(2.0 * g * (9.0 * l * l + 2.0 * r) / (9.0 * l * l + r))
        }
        ClosedFormBeta::Coulomb => {
            let r = checked_sqrt("√(−2αΛ)", -2.0 * g * l)?;
            Ok(-3.0 * g * (2.0 * l + r) / (2.0 * l + 3.0 * r))
        }
        ClosedFormBeta::SoftCoulomb => {
            let r = checked_sqrt("√(−2√2αΛ)", -2.0 * SQRT_2 * g * l)?;
            Ok(-g * (3.0 * l + 4.0 * r) / (l + 4.0 * r))
        }
        ClosedFormBeta::KramersHenneberger => {
            if l <= 1.0 {
                return Err(FlowError::BelowFloor { cutoff: l });
            }
            Ok(-g / l.ln())
        }
    }
}

/// `E₀(g, Λ)` of the reduced oscillator at coupling `g`.
pub fn cutoff_energy(
    spec: &PotentialSpec,
    g: f64,
    cutoff: f64,
    scheme: Scheme,
) -> Result<GroundStateEstimate, FlowError> {
    let red = reduce(&spec.with_coupling(g), cutoff, scheme)?;
    Ok(ho_ground_energy(&red))
}

fn bound_cutoff_energy(spec: &PotentialSpec, g: f64, cutoff: f64, scheme: Scheme) -> Result<f64, FlowError> {
    let red = reduce(&spec.with_coupling(g), cutoff, scheme)?;
    if red.stiffness <= 0.0 {
        return Err(FlowError::InvalidStiffness {
            coupling: g,
            cutoff,
            stiffness: red.stiffness,
        });
    }
    Ok(ho_ground_energy(&red).energy)
}

/// Richardson-extrapolated central difference of `f` at `x` with step `h`.
fn central_derivative<F>(f: F, x: f64, h: f64) -> Result<f64, FlowError>
where
    F: Fn(f64) -> Result<f64, FlowError>,
{
    let d = |h: f64| -> Result<f64, FlowError> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `β = −(∂E₀/∂ lnΛ)/(∂E₀/∂g)` by finite differences of the reduced energy.
pub fn beta_numeric(spec: &PotentialSpec, g: f64, cutoff: f64, scheme: Scheme) -> Result<f64, FlowError> {
    if cutoff < CUTOFF_FLOOR {
        return Err(FlowError::BelowFloor { cutoff });
    }
    let s = cutoff.ln();
    let e0 = bound_cutoff_energy(spec, g, cutoff, scheme)?;
    let d_s = central_derivative(|t| bound_cutoff_energy(spec, g, t.exp(), scheme), s, 1e-2)?;
    let hg = 1e-3 * g.abs().max(f64::MIN_POSITIVE);
    let d_g = central_derivative(|t| bound_cutoff_energy(spec, t, cutoff, scheme), g, hg)?;
    let scale = (e0.abs() / g.abs()).max(f64::MIN_POSITIVE);
    if !(d_g.abs() > 1e-12 * scale) {
        return Err(FlowError::Undefined { coupling: g, cutoff });
    }
    Ok(-d_s / d_g)
}

/// Source of `β(g, Λ)` for the flow integrator.
#[derive(Debug, Clone)]
pub enum BetaSource<'a> {
    Numeric { spec: &'a PotentialSpec, scheme: Scheme },
    ClosedForm(ClosedFormBeta),
}

impl BetaSource<'_> {
    pub fn eval(&self, g: f64, cutoff: f64) -> Result<f64, FlowError> {
        match self {
            BetaSource::Numeric { spec, scheme } => beta_numeric(spec, g, cutoff, *scheme),
            BetaSource::ClosedForm(kind) => beta_closed_form(*kind, g, cutoff),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPointTarget {
    /// `p² + x²` (stiffness 1).
    UnitOscillator,
    /// `½(p² + x²)` (stiffness ½).
    HalfOscillator,
}

impl FixedPointTarget {
    pub fn stiffness(self) -> f64 {
        match self {
            FixedPointTarget::UnitOscillator => 1.0,
            FixedPointTarget::HalfOscillator => 0.5,
        }
    }

    /// The canonical target whose kinetic term matches the model's normalization.
    pub fn matching(spec: &PotentialSpec) -> Self {
        if spec.kinetic_norm() == 1.0 {
            FixedPointTarget::UnitOscillator
        } else {
            FixedPointTarget::HalfOscillator
        }
    }
}

/// Default cutoff range for fixed-point laws and tabulations.
pub const DEFAULT_RANGE: (f64, f64) = (CUTOFF_FLOOR, 1e6);

fn log_grid(min: f64, max: f64, per_decade: usize) -> Vec<f64> {
    let decades = (max / min).log10();
    let steps = ((decades * per_decade as f64).ceil() as usize).max(1);
    let (a, b) = (min.ln(), max.ln());
    (0..=steps)
        .map(|i| {
            if i == steps {
                max
            } else {
                (a + (b - a) * i as f64 / steps as f64).exp()
            }
        })
        .collect()
}

/// Chooses `g(Λ)` so that the reduced stiffness equals the target at every cutoff.
///
/// Returns a `PowerLaw` when the samples follow one exactly, `Tabulated` otherwise.
pub fn solve_fixed_point(
    spec: &PotentialSpec,
    target: FixedPointTarget,
    range: (f64, f64),
    scheme: Scheme,
) -> Result<CouplingFlow, FlowError> {
    let (min, max) = range;
    if min < CUTOFF_FLOOR {
        return Err(FlowError::BelowFloor { cutoff: min });
    }
    let unit = spec.with_coupling(1.0);
    let grid = log_grid(min, max, 20);
    let mut points = Vec::with_capacity(grid.len());
    for &l in &grid {
        let per_coupling = reduce(&unit, l, scheme)
            .map_err(|e| FlowError::NoFixedPoint(format!("at Λ = {l}: {e}")))?
            .stiffness;
        points.push((l, target.stiffness() / per_coupling));
    }
    let sign = points[0].1.signum();
    if points.iter().any(|p| p.1.signum() != sign || !p.1.is_finite()) {
        return Err(FlowError::NoFixedPoint(format!(
            "stiffness changes sign inside [{min}, {max}]"
        )));
    }

    let exponents: Vec<f64> = points
        .windows(2)
        .map(|w| (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln())
        .collect();
    let k = exponents[exponents.len() / 2];
    let exact = exponents.iter().all(|e| (e - k).abs() <= 1e-9 * k.abs().max(1.0));
    if exact {
        let k = if (k - k.round()).abs() <= 1e-9 { k.round() } else { k };
        let (l_ref, g_ref) = points[0];
        let prefactor = g_ref / l_ref.powf(k);
        return Ok(CouplingFlow::power_law(prefactor, k).with_range(min, max));
    }
    CouplingFlow::tabulated(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowOptions {
    pub rtol: f64,
    /// Trajectory samples per decade of Λ.
    pub samples_per_decade: usize,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            rtol: FLOW_RTOL,
            samples_per_decade: 20,
            max_steps: 1_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `dg/ds = β(g, eˢ)` from `(s0, g0)` to `s1` with Dormand-Prince 5(4).
fn dopri_segment<F>(beta: &F, s0: f64, g0: f64, s1: f64, h_init: f64, opts: &FlowOptions, steps: &mut usize) -> Result<(f64, f64), (f64, f64, String)>
where
    F: Fn(f64, f64) -> Result<f64, FlowError>,
{
    let dir = (s1 - s0).signum();
    let atol = opts.rtol * 1e-12 * g0.abs().max(f64::MIN_POSITIVE);
    let (mut s, mut g) = (s0, g0);
    let mut h = h_init.abs().min((s1 - s0).abs()) * dir;
    let rhs = |s: f64, g: f64| -> Result<f64, String> {
        let v = beta(g, s.exp()).map_err(|e| e.to_string())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err("beta function diverged".to_string())
        }
    };
    let mut k = [0.0f64; 7];
    k[0] = rhs(s, g).map_err(|e| (s, g, e))?;
    while (s1 - s) * dir > 0.0 {
        *steps += 1;
        if *steps > opts.max_steps {
            return Err((s, g, "step limit exceeded".into()));
        }
        if (s + h - s1) * dir > 0.0 {
            h = s1 - s;
        }
        let mut failed = None;
        for i in 1..7 {
            let gi = g + h * (0..i).map(|j| DP_A[i][j] * k[j]).sum::<f64>();
            match rhs(s + DP_C[i] * h, gi) {
                Ok(v) => k[i] = v,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        let (err_ratio, g_new) = if let Some(reason) = failed {
            // Shrink into the region where β is defined before giving up.
            if h.abs() < 1e-12 * s.abs().max(1.0) {
                return Err((s, g, reason));
            }
            (f64::INFINITY, g)
        } else {
            let g_new = g + h * (0..6).map(|j| DP_A[6][j] * k[j]).sum::<f64>();
            let err = h * (0..7).map(|j| DP_E[j] * k[j]).sum::<f64>();
            let sc = atol + opts.rtol * g.abs().max(g_new.abs());
            ((err / sc).abs(), g_new)
        };
        if err_ratio <= 1.0 {
            s += h;
            g = g_new;
            k[0] = k[6];
            let factor = if err_ratio == 0.0 { 5.0 } else { (0.9 * err_ratio.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            let factor = if err_ratio.is_finite() { (0.9 * err_ratio.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h *= factor;
            if h.abs() < 1e-14 * s.abs().max(1.0) {
                return Err((s, g, "step size underflow".into()));
            }
        }
    }
    Ok((g, h))
}

/// Integrates the Callan-Symanzik flow `dg/d lnΛ = β(g, Λ)` from `(Λ0, g0)` to `Λ1`.
pub fn integrate_flow(
    beta: &BetaSource<'_>,
    g0: f64,
    cutoff0: f64,
    cutoff1: f64,
    opts: &FlowOptions,
) -> Result<CouplingFlow, FlowError> {
    for &c in &[cutoff0, cutoff1] {
        if c < CUTOFF_FLOOR {
            return Err(FlowError::BelowFloor { cutoff: c });
        }
    }
    let f = |g: f64, l: f64| beta.eval(g, l);
    let marks = if cutoff1 >= cutoff0 {
        log_grid(cutoff0, cutoff1, opts.samples_per_decade)
    } else {
        let mut m = log_grid(cutoff1, cutoff0, opts.samples_per_decade);
        m.reverse();
        m
    };
    let mut points = vec![(cutoff0, g0)];
    let mut g = g0;
    let mut h = 1e-3;
    let mut steps = 0usize;
    for w in marks.windows(2) {
        let (s0, s1) = (w[0].ln(), w[1].ln());
        match dopri_segment(&f, s0, g, s1, h, opts, &mut steps) {
            Ok((g_new, h_last)) => {
                g = g_new;
                h = h_last.abs().max(1e-6);
                points.push((w[1], g));
            }
            Err((s, g_last, reason)) => {
                return Err(FlowError::IntegrationAbort {
                    cutoff: s.exp(),
                    coupling: g_last,
                    reason,
                })
            }
        }
    }
    if cutoff1 < cutoff0 {
        points.reverse();
    }
    let mut flow = CouplingFlow::tabulated(points)?;
    if let BetaSource::Numeric { spec, scheme } = beta {
        flow.diagnostic_only = off_coulomb_fixed_point(spec, g0, cutoff0, *scheme);
    }
    Ok(flow)
}

/// Marks flows of attractive Coulomb-type potentials that do not start on the fixed-point law.
pub fn off_coulomb_fixed_point(spec: &PotentialSpec, g0: f64, cutoff0: f64, scheme: Scheme) -> bool {
    if !matches!(spec.family(), Family::Coulomb1D | Family::SoftCoulomb { .. }) {
        return false;
    }
    let target = FixedPointTarget::matching(spec);
    match reduce(&spec.with_coupling(1.0), cutoff0, scheme) {
        Ok(red) => {
            let fixed = target.stiffness() / red.stiffness;
            (g0 / fixed - 1.0).abs() > 1e-9
        }
        Err(_) => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignPolicy {
    PreferNegative,
    PreferPositive,
    #[default]
    ReportBoth,
}

impl SignPolicy {
    /// Negative root for attractive Coulomb-type potentials, positive otherwise.
    pub fn default_for(spec: &PotentialSpec) -> Self {
        match spec.family() {
            Family::Coulomb1D | Family::SoftCoulomb { .. } | Family::KramersHenneberger { .. } => {
                SignPolicy::PreferNegative
            }
            _ => SignPolicy::PreferPositive,
        }
    }
}

/// Aitken extrapolation of a geometrically converging triple; falls back to the last value.
fn aitken(e: [f64; 3]) -> f64 {
    let d1 = e[1] - e[0];
    let d2 = e[2] - e[1];
    let denom = d2 - d1;
    if d1 * d2 <= 0.0 || denom == 0.0 || d2.abs() >= d1.abs() {
        return e[2];
    }
    e[2] - d2 * d2 / denom
}

/// `E₀(∞)` along `flow`, extrapolated from `Λ = 10³, 10^4.5, 10⁶`.
///
/// The branch is ambiguous when the flowed coupling has the opposite sign to
/// the physical coupling of `spec` (the Coulomb case), or when the reduced
/// oscillator is inverted; `policy` then picks the root.
pub fn uv_limit_energy(
    spec: &PotentialSpec,
    flow: &CouplingFlow,
    policy: SignPolicy,
    scheme: Scheme,
) -> Result<GroundStateEstimate, FlowError> {
    let mut upper = [0.0; 3];
    let mut lower = [0.0; 3];
    let mut ambiguous = false;
    for (i, &p) in UV_SAMPLE_EXPONENTS.iter().enumerate() {
        let l = 10f64.powf(p);
        let g = flow.coupling_at(l)?;
        let est = cutoff_energy(spec, g, l, scheme)?;
        let flipped = spec.coupling() != 0.0 && g.signum() != spec.coupling().signum();
        let red_offset = reduce(&spec.with_coupling(g), l, scheme)?.offset;
        let (hi, lo) = match est.sign_branch {
            SignBranch::Ambiguous => {
                ambiguous = true;
                est.branches()
            }
            _ => {
                if flipped {
                    ambiguous = true;
                }
                (est.energy, 2.0 * red_offset - est.energy)
            }
        };
        upper[i] = hi;
        lower[i] = lo;
    }
    let settled = |e: &[f64; 3]| (e[2] - e[1]).abs() <= UV_LIMIT_TOLERANCE * e[2].abs().max(1.0);
    if !settled(&upper) || (ambiguous && !settled(&lower)) {
        return Err(FlowError::NoUvLimit { samples: upper });
    }
    let hi = aitken(upper);
    if !ambiguous {
        return Ok(GroundStateEstimate {
            energy: hi,
            alternate: None,
            sign_branch: SignBranch::Positive,
            source: EstimateSource::RgPrediction,
        });
    }
    let lo = aitken(lower);
    let (energy, alternate) = match policy {
        SignPolicy::PreferNegative => (lo, hi),
        SignPolicy::PreferPositive | SignPolicy::ReportBoth => (hi, lo),
    };
    Ok(GroundStateEstimate {
        energy,
        alternate: Some(alternate),
        sign_branch: SignBranch::Ambiguous,
        source: EstimateSource::RgPrediction,
    })
}
