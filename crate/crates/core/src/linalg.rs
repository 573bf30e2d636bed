//! Tridiagonal solvers and a symmetric tridiagonal eigensolver.

use std::ops::{Div, Mul, Sub};

use crate::error::{Error, Result};

/// Solves `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]` by the Thomas algorithm.
///
/// `sub[0]` and `sup[n-1]` are ignored. No pivoting, so the matrix should be
/// diagonally dominant or definite.
pub fn solve_tridiagonal<T>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Vec<T>
where
    T: Copy + Sub<Output = T> + Mul<Output = T> + Div<Output = T>,
{
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    if n == 0 {
        return Vec::new();
    }
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    c.push(sup[0] / diag[0]);
    d.push(rhs[0] / diag[0]);
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c.push(sup[i] / denom);
        d.push((rhs[i] - sub[i] * d[i - 1]) / denom);
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] = x[i] - c[i] * x[i + 1];
    }
    x
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below `x` (Sturm count).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let o2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = if i == 0 { diag[0] - x } else { diag[i] - x - o2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs() + f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
///
/// `off` holds the `n-1` off-diagonal entries.
pub fn tridiagonal_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> Result<f64> {
    let n = diag.len();
    if k >= n || off.len() + 1 != n {
        return Err(Error::Eigensolver(format!("bad request k={k} for n={n}")));
    }
    // Gershgorin interval
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Eigensolver("non-finite matrix entries".into()));
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * scale;
    hi += 1e-12 * scale;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Eigenvector for an isolated eigenvalue near `shift` by inverse iteration.
///
/// `shift` must lie strictly below the target eigenvalue and above nothing
/// else, so that `T - shift` is positive definite and Thomas elimination is stable.
/// Returned vector is unit-norm in the Euclidean sense with a nonnegative sum.
pub fn inverse_iteration(diag: &[f64], off: &[f64], shift: f64, iterations: usize) -> Vec<f64> {
    let n = diag.len();
    let mut sub = vec![0.0; n];
    let mut sup = vec![0.0; n];
    sub[1..].copy_from_slice(off);
    sup[..n - 1].copy_from_slice(off);
    let shifted: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..iterations {
        let w = solve_tridiagonal(&sub, &shifted, &sup, &v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn thomas_matches_dense_product() {
        let sub = [0.0, -1.0, 0.5, 2.0];
        let diag = [4.0, 5.0, 6.0, 7.0];
        let sup = [1.0, -2.0, 1.5, 0.0];
        let x = [1.0, -2.0, 3.0, 0.5];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += sub[i] * x[i - 1];
                }
                if i < 3 {
                    s += sup[i] * x[i + 1];
                }
                s
            })
            .collect();
        let got = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        for (a, b) in got.iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn thomas_complex() {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let sub = [one * 0.0, i, i];
        let diag = [one * 3.0 + i, one * 3.0, one * 3.0 - i];
        let sup = [i, i, one * 0.0];
        let x = [one, -i, one * 2.0];
        let rhs = [
            diag[0] * x[0] + sup[0] * x[1],
            sub[1] * x[0] + diag[1] * x[1] + sup[1] * x[2],
            sub[2] * x[1] + diag[2] * x[2],
        ];
        let got = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        for (a, b) in got.iter().zip(x) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn laplacian_spectrum() {
        // -d2/dx2 on (0,1) with Dirichlet walls: eigenvalues (2/h^2)(1 - cos(k pi h))
        let n = 63;
        let h = 1.0 / (n + 1) as f64;
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        for k in 0..3 {
            let exact = 2.0 / (h * h) * (1.0 - ((k + 1) as f64 * PI * h).cos());
            let got = tridiagonal_eigenvalue(&diag, &off, k).unwrap();
            assert!((got - exact).abs() < 1e-9 * exact, "k={k} got={got} exact={exact}");
        }
        let e0 = tridiagonal_eigenvalue(&diag, &off, 0).unwrap();
        let v = inverse_iteration(&diag, &off, e0 - 1e-6, 4);
        for (j, vj) in v.iter().enumerate() {
            let exact = (PI * (j + 1) as f64 * h).sin() * (2.0 * h).sqrt();
            assert!((vj - exact).abs() < 1e-10);
        }
    }
}
