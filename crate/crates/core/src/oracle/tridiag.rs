//! Symmetric tridiagonal eigenvalues by Sturm-sequence bisection and
//! eigenvectors by inverse iteration.

/// Number of eigenvalues strictly below `lambda` (negative LDLᵀ pivots).
pub fn sturm_count(diag: &[f64], off_sq: &[f64], lambda: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let coupling = if i == 0 { 0.0 } else { off_sq[i - 1] / q };
        q = diag[i] - lambda - coupling;
        if q == 0.0 {
            // Perturb an exact zero pivot; the count is unaffected.
            q = -f64::EPSILON * (diag[i].abs() + lambda.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

pub fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based), or `None` if bisection stalls.
pub fn kth_eigenvalue(diag: &[f64], off: &[f64], k: usize, max_iter: usize) -> Option<f64> {
    if k >= diag.len() {
        return None;
    }
    let off_sq: Vec<f64> = off.iter().map(|e| e * e).collect();
    let (mut lo, mut hi) = gershgorin(diag, off);
    let norm = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= f64::EPSILON * norm;
    hi += f64::EPSILON * norm;
    // Bisection cannot resolve below ~ε‖T‖; stop well under that.
    let floor = 1e-3 * f64::EPSILON * norm;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * mid.abs() + floor {
            return Some(mid);
        }
        if sturm_count(diag, &off_sq, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    None
}

/// Solves `(T − σI) x = b` for symmetric tridiagonal `T` by Gaussian
/// elimination with partial pivoting (the `gtsv` scheme).
fn solve_shifted(diag: &[f64], off: &[f64], shift: f64, rhs: &mut [f64]) {
    let n = diag.len();
    let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
    let mut dl: Vec<f64> = off.to_vec();
    let mut du: Vec<f64> = off.to_vec();
    let tiny = f64::EPSILON * diag.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            rhs[i + 1] -= fact * rhs[i];
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            let t = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = t - fact * rhs[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    rhs[n - 1] /= d[n - 1];
    if n >= 2 {
        rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - dl[i] * rhs[i + 2]) / d[i];
    }
}

/// Eigenvector for an eigenvalue already located to high accuracy.
pub fn inverse_iteration(diag: &[f64], off: &[f64], eigenvalue: f64) -> Vec<f64> {
    let n = diag.len();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    for _ in 0..4 {
        solve_shifted(diag, off, eigenvalue, &mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_counts() {
        let d = [1.0, 3.0];
        let e2 = [1.0];
        assert_eq!(sturm_count(&d, &e2, 0.0), 0);
        assert_eq!(sturm_count(&d, &e2, 1.0), 1);
        assert_eq!(sturm_count(&d, &e2, 4.0), 2);
    }

    #[test]
    fn free_chain_spectrum() {
        let n = 60;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        for k in [0, 1, 7, n - 1] {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            let got = kth_eigenvalue(&d, &e, k, 200).unwrap();
            assert!((got - exact).abs() < 1e-13, "k={k}: {got} vs {exact}");
        }
        assert!(kth_eigenvalue(&d, &e, n, 200).is_none());
    }

    #[test]
    fn inverse_iteration_residual_small_for_excited_state() {
        let n = 80;
        let d: Vec<f64> = (0..n).map(|i| 2.0 + 0.01 * (i as f64 - 40.0).powi(2)).collect();
        let e = vec![-1.0; n - 1];
        for k in [0, 3] {
            let lam = kth_eigenvalue(&d, &e, k, 200).unwrap();
            let v = inverse_iteration(&d, &e, lam);
            let mut r = 0.0f64;
            for i in 0..n {
                let mut tv = d[i] * v[i];
                if i > 0 {
                    tv += e[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    tv += e[i] * v[i + 1];
                }
                r = r.max((tv - lam * v[i]).abs());
            }
            assert!(r < 1e-10, "k={k}: residual {r}");
        }
    }
}
