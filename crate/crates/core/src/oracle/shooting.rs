//! Numerov shooting from the origin for even potentials, bisecting on node count.

use super::{OracleError, Parity};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    /// Outer integration point; `ψ(x_max)` plays the role of the Dirichlet wall.
    pub x_max: f64,
    pub steps: usize,
    pub max_bisections: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            x_max: 6.0,
            steps: 24_000,
            max_bisections: 200,
        }
    }
}

/// Nodes of `ψ` on `(0, x_max]` at trial energy `e`.
fn count_nodes(f: &[f64], h: f64, parity: Parity, e: f64, kappa: f64) -> usize {
    let w = |i: usize| 1.0 - h * h * (f[i] - e) / (12.0 * kappa);
    let (mut prev, mut cur) = match parity {
        Parity::Odd => (0.0, h),
        _ => {
            let f0 = (f[0] - e) / kappa;
            (1.0, (1.0 + 5.0 * h * h * f0 / 12.0) / w(1))
        }
    };
    let mut nodes = 0;
    for i in 1..f.len() - 1 {
        let back = if prev == 0.0 { 0.0 } else { w(i - 1) * prev };
        let next = ((12.0 - 10.0 * w(i)) * cur - back) / w(i + 1);
        if next == 0.0 || next.signum() != cur.signum() {
            nodes += 1;
        }
        prev = cur;
        cur = next;
        if cur.abs() > 1e200 {
            prev *= 1e-200;
            cur *= 1e-200;
        }
    }
    nodes
}

/// The `k`-th state of the given parity of an even potential.
pub fn shoot(spec: &PotentialSpec, parity: Parity, k: usize, opts: ShootingOptions) -> Result<f64, OracleError> {
    if !spec.is_even() || parity == Parity::None {
        return Err(OracleError::ParityUnavailable);
    }
    let h = opts.x_max / opts.steps as f64;
    let kappa = spec.kinetic_norm();
    let mut v = Vec::with_capacity(opts.steps + 1);
    for i in 0..=opts.steps {
        let x = i as f64 * h;
        v.push(if i == 0 && parity == Parity::Odd {
            // Multiplied by ψ(0) = 0 in the recurrence.
            spec.eval(h).unwrap_or(0.0)
        } else {
            spec.eval(x)?
        });
    }
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if !lo.is_finite() {
        return Err(OracleError::Shooting("potential is not finite on the shooting interval".into()));
    }
    let mut hi = lo.abs().max(1.0);
    let mut expand = 0;
    while count_nodes(&v, h, parity, hi, kappa) <= k {
        hi = lo + 2.0 * (hi - lo);
        expand += 1;
        if expand > 200 {
            return Err(OracleError::Shooting("no upper energy bracket".into()));
        }
    }
    for _ in 0..opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if count_nodes(&v, h, parity, mid, kappa) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
