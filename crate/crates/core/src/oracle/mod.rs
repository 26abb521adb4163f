//! Finite-difference eigensolver for `H = κp² + V(x)` on a uniform grid.
//!
//! The three-point stencil gives a symmetric tridiagonal matrix; eigenvalues
//! come from Sturm-sequence bisection, eigenvectors from inverse iteration.
//! Each solve is repeated on grids with `h/2` and `h/4` for Richardson
//! extrapolation and a convergence-order check.

mod shooting;
pub mod tridiag;

use serde::Serialize;
use thiserror::Error;

use crate::potential::{PotentialError, PotentialSpec};

pub use shooting::{shoot, ShootingOptions};

/// Boundary amplitude (relative to the peak) above which the domain is too small.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

const MAX_BISECTION_STEPS: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("grid needs an odd point count >= 3 and a positive half-width (got n = {points}, L = {half_width})")]
    BadGrid { points: usize, half_width: f64 },
    #[error("bisection did not converge for eigenvalue index {index}")]
    IterationLimit { index: usize },
    #[error("eigenvalue index {index} exceeds the {available} states of the discretization")]
    IndexOutOfRange { index: usize, available: usize },
    #[error("boundary amplitude {ratio:.3e} of peak exceeds {BOUNDARY_TOLERANCE:e}; enlarge the half-width L = {half_width}")]
    DomainTooSmall { ratio: f64, half_width: f64 },
    #[error("parity restriction needs an even potential on a grid centred at 0")]
    ParityUnavailable,
    #[error("shooting failed: {0}")]
    Shooting(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub center: f64,
    pub half_width: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(half_width: f64, points: usize) -> Result<Self, OracleError> {
        Self::centered(0.0, half_width, points)
    }

    pub fn centered(center: f64, half_width: f64, points: usize) -> Result<Self, OracleError> {
        if points < 3 || points % 2 == 0 || !(half_width > 0.0) || !center.is_finite() {
            return Err(OracleError::BadGrid { points, half_width });
        }
        Ok(Self {
            center,
            half_width,
            points,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        let m = (self.points - 1) / 2;
        self.center + (i as f64 - m as f64) * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|i| self.node(i))
    }

    /// Same interval with the spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            points: 2 * self.points - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Even,
    Odd,
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub index: usize,
    /// Eigenvalue on the requested grid.
    pub eigenvalue: f64,
    /// Normalized so that `Σ ψᵢ² h = 1`, sampled on every node of `grid`.
    pub eigenfunction: Vec<f64>,
    pub grid: Grid,
    pub parity: Parity,
    /// Richardson extrapolation `(4E(h/2) − E(h))/3`.
    pub refinement_estimate: f64,
    /// `(E(h) − E(h/2)) / (E(h/2) − E(h/4))`; ≈ 4 for a second-order scheme.
    pub convergence_ratio: f64,
}

impl OracleResult {
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let h = self.grid.spacing();
        self.grid
            .nodes()
            .zip(&self.eigenfunction)
            .map(|(x, p)| p * p * f(x))
            .sum::<f64>()
            * h
    }

    /// `Σ ψᵢ φ(xᵢ) h`.
    pub fn overlap<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        let h = self.grid.spacing();
        self.grid
            .nodes()
            .zip(&self.eigenfunction)
            .map(|(x, p)| p * phi(x))
            .sum::<f64>()
            * h
    }

    /// Discrete `⟨κp²⟩` from the same stencil as the Hamiltonian.
    pub fn kinetic_expectation(&self, kinetic_norm: f64) -> f64 {
        let h = self.grid.spacing();
        let psi = &self.eigenfunction;
        let n = psi.len();
        let mut acc = 0.0;
        for i in 1..n - 1 {
            acc += psi[i] * (2.0 * psi[i] - psi[i - 1] - psi[i + 1]);
        }
        kinetic_norm * acc / h
    }
}

/// Matrix of one discretization plus the map back to the full grid.
struct Discretization {
    diag: Vec<f64>,
    off: Vec<f64>,
    parity: Parity,
}

fn discretize(spec: &PotentialSpec, grid: &Grid, parity: Parity) -> Result<Discretization, OracleError> {
    let n = grid.points;
    let h = grid.spacing();
    let t = spec.kinetic_norm() / (h * h);
    let mid = (n - 1) / 2;
    let rows: Vec<usize> = match parity {
        Parity::None => (1..n - 1).collect(),
        Parity::Even => (mid..n - 1).collect(),
        Parity::Odd => (mid + 1..n - 1).collect(),
    };
    if parity != Parity::None && (!spec.is_even() || grid.center != 0.0) {
        return Err(OracleError::ParityUnavailable);
    }
    let diag = rows
        .iter()
        .map(|&i| Ok(2.0 * t + spec.eval(grid.node(i))?))
        .collect::<Result<Vec<_>, PotentialError>>()?;
    let mut off = vec![-t; rows.len().saturating_sub(1)];
    if parity == Parity::Even && !off.is_empty() {
        // ψ₋₁ = ψ₁ doubles the coupling of the centre row; symmetrized.
        off[0] = -std::f64::consts::SQRT_2 * t;
    }
    Ok(Discretization { diag, off, parity })
}

fn eigenvalue_on(spec: &PotentialSpec, grid: &Grid, parity: Parity, k: usize) -> Result<(Discretization, f64), OracleError> {
    let disc = discretize(spec, grid, parity)?;
    if k >= disc.diag.len() {
        return Err(OracleError::IndexOutOfRange {
            index: k,
            available: disc.diag.len(),
        });
    }
    let e = tridiag::kth_eigenvalue(&disc.diag, &disc.off, k, MAX_BISECTION_STEPS)
        .ok_or(OracleError::IterationLimit { index: k })?;
    Ok((disc, e))
}

fn full_eigenfunction(disc: &Discretization, grid: &Grid, y: &[f64]) -> Vec<f64> {
    let n = grid.points;
    let mid = (n - 1) / 2;
    let mut psi = vec![0.0; n];
    match disc.parity {
        Parity::None => psi[1..n - 1].copy_from_slice(y),
        Parity::Even => {
            for (j, &v) in y.iter().enumerate() {
                let v = if j == 0 { std::f64::consts::SQRT_2 * v } else { v };
                psi[mid + j] = v;
                psi[mid - j] = v;
            }
        }
        Parity::Odd => {
            for (j, &v) in y.iter().enumerate() {
                psi[mid + j + 1] = v;
                psi[mid - j - 1] = -v;
            }
        }
    }
    let h = grid.spacing();
    let norm = (psi.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
    let peak = psi.iter().fold(0.0f64, |m, &v| if v.abs() > m.abs() { v } else { m });
    let scale = peak.signum() / norm;
    psi.iter_mut().for_each(|v| *v *= scale);
    psi
}

fn detect_parity(spec: &PotentialSpec, grid: &Grid, psi: &[f64]) -> Parity {
    if !spec.is_even() || grid.center != 0.0 {
        return Parity::None;
    }
    let n = psi.len();
    let peak = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut sym, mut anti) = (0.0f64, 0.0f64);
    for i in 0..n / 2 {
        let (a, b) = (psi[i], psi[n - 1 - i]);
        sym = sym.max((a - b).abs());
        anti = anti.max((a + b).abs());
    }
    if sym <= 1e-6 * peak {
        Parity::Even
    } else if anti <= 1e-6 * peak {
        Parity::Odd
    } else {
        Parity::None
    }
}

/// The `k`-th eigenstate (0-based, within the parity sector if one is given).
pub fn solve(spec: &PotentialSpec, grid: &Grid, parity: Option<Parity>, k: usize) -> Result<OracleResult, OracleError> {
    let sector = parity.unwrap_or(Parity::None);
    let (disc, e1) = eigenvalue_on(spec, grid, sector, k)?;
    let (_, e2) = eigenvalue_on(spec, &grid.refined(), sector, k)?;
    let (_, e4) = eigenvalue_on(spec, &grid.refined().refined(), sector, k)?;

    let y = tridiag::inverse_iteration(&disc.diag, &disc.off, e1);
    let psi = full_eigenfunction(&disc, grid, &y);
    let n = psi.len();
    let peak = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ratio = psi[1].abs().max(psi[n - 2].abs()) / peak;
    if ratio > BOUNDARY_TOLERANCE {
        return Err(OracleError::DomainTooSmall {
            ratio,
            half_width: grid.half_width,
        });
    }
    let parity = match parity {
        Some(p) if p != Parity::None => p,
        _ => detect_parity(spec, grid, &psi),
    };
    Ok(OracleResult {
        index: k,
        eigenvalue: e1,
        eigenfunction: psi,
        grid: *grid,
        parity,
        refinement_estimate: (4.0 * e2 - e1) / 3.0,
        convergence_ratio: (e1 - e2) / (e2 - e4),
    })
}

/// Lowest state, optionally restricted to one parity sector.
pub fn ground_state(spec: &PotentialSpec, grid: &Grid, parity: Option<Parity>) -> Result<OracleResult, OracleError> {
    solve(spec, grid, parity, 0)
}

/// The `k`-th eigenvalue of the unrestricted problem, by Sturm count.
pub fn eigenvalue_by_index(spec: &PotentialSpec, grid: &Grid, k: usize) -> Result<OracleResult, OracleError> {
    solve(spec, grid, None, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator() -> PotentialSpec {
        // ½(p² + x²)
        let shape = crate::potential::CustomShape {
            name: "unit-oscillator".into(),
            shape: std::sync::Arc::new(|x| 0.5 * x * x),
            derivatives: None,
            even: true,
        };
        PotentialSpec::custom(shape, 1.0, 0.5).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1.0, 4).is_err());
        assert!(Grid::new(1.0, 1).is_err());
        assert!(Grid::new(0.0, 5).is_err());
        let g = Grid::new(2.0, 5).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.node(2), 0.0);
        assert_eq!(g.refined().points, 9);
    }

    #[test]
    fn unit_oscillator_levels() {
        let grid = Grid::new(12.0, 4001).unwrap();
        let r = ground_state(&oscillator(), &grid, None).unwrap();
        assert!((r.refinement_estimate - 0.5).abs() < 1e-8, "{}", r.refinement_estimate);
        assert_eq!(r.parity, Parity::Even);
        let norm: f64 = r.eigenfunction.iter().map(|v| v * v).sum::<f64>() * grid.spacing();
        assert!((norm - 1.0).abs() < 1e-10);

        let r1 = eigenvalue_by_index(&oscillator(), &grid, 1).unwrap();
        assert!((r1.refinement_estimate - 1.5).abs() < 1e-7);
        assert_eq!(r1.parity, Parity::Odd);
    }

    #[test]
    fn parity_sectors_interleave() {
        let grid = Grid::new(6.0, 801).unwrap();
        let q = PotentialSpec::quartic(1.0);
        let full: Vec<f64> = (0..6)
            .map(|k| eigenvalue_by_index(&q, &grid, k).unwrap().eigenvalue)
            .collect();
        for k in 0..3 {
            let even = solve(&q, &grid, Some(Parity::Even), k).unwrap().eigenvalue;
            let odd = solve(&q, &grid, Some(Parity::Odd), k).unwrap().eigenvalue;
            assert!((even - full[2 * k]).abs() < 1e-9 * full[2 * k].abs());
            assert!((odd - full[2 * k + 1]).abs() < 1e-9 * full[2 * k + 1].abs());
        }
    }

    #[test]
    fn odd_state_vanishes_at_origin() {
        let grid = Grid::new(40.0, 4001).unwrap();
        let r = ground_state(&PotentialSpec::coulomb(1.0), &grid, Some(Parity::Odd)).unwrap();
        assert_eq!(r.eigenfunction[(grid.points - 1) / 2], 0.0);
        assert!((r.refinement_estimate + 0.5).abs() < 1e-4);
    }

    #[test]
    fn singular_node_without_odd_parity_is_an_error() {
        let grid = Grid::new(10.0, 101).unwrap();
        let err = ground_state(&PotentialSpec::coulomb(1.0), &grid, None).unwrap_err();
        assert!(matches!(err, OracleError::Potential(PotentialError::SingularPoint { .. })));
    }

    #[test]
    fn small_domain_is_reported() {
        let grid = Grid::new(1.5, 301).unwrap();
        let err = ground_state(&oscillator(), &grid, None).unwrap_err();
        assert!(matches!(err, OracleError::DomainTooSmall { .. }));
    }

    #[test]
    fn parity_needs_even_potential() {
        let grid = Grid::new(10.0, 101).unwrap();
        let morse = PotentialSpec::morse(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            ground_state(&morse, &grid, Some(Parity::Even)),
            Err(OracleError::ParityUnavailable)
        ));
        let shifted = Grid::centered(1.0, 10.0, 101).unwrap();
        assert!(matches!(
            ground_state(&PotentialSpec::quartic(1.0), &shifted, Some(Parity::Odd)),
            Err(OracleError::ParityUnavailable)
        ));
    }

    #[test]
    fn index_out_of_range() {
        let grid = Grid::new(5.0, 7).unwrap();
        assert!(matches!(
            eigenvalue_by_index(&PotentialSpec::quartic(1.0), &grid, 5),
            Err(OracleError::IndexOutOfRange { .. })
        ));
    }
}
