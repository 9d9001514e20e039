//! Dense linear algebra helpers shared across the crate: spectral norms,
//! a scaling-and-squaring matrix exponential, and solve wrappers.

use ndarray::{Array1, Array2};
use ndarray_linalg::{c64, Factorize, Inverse, Solve, SVD};

use crate::error::Result;

/// Dimension up to which spectral norms and condition numbers use a full SVD.
pub const DENSE_SVD_LIMIT: usize = 600;

/// Relative tolerance of the power-iteration fallback.
pub const POWER_ITER_TOL: f64 = 1e-6;

pub fn vec_norm(v: &Array1<c64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity(n: usize) -> Array2<c64> {
    Array2::eye(n)
}

/// Largest singular value. Full SVD up to `DENSE_SVD_LIMIT`, power iteration
/// on `A^H A` beyond it.
pub fn spectral_norm(a: &Array2<c64>) -> f64 {
    let n = a.nrows().max(a.ncols());
    if n == 0 {
        return 0.0;
    }
    if n <= DENSE_SVD_LIMIT {
        match singular_values(a) {
            Ok(sv) => sv.first().copied().unwrap_or(0.0),
            Err(_) => power_iteration_norm(a),
        }
    } else {
        power_iteration_norm(a)
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &Array2<c64>) -> Result<Vec<f64>> {
    let (_, sv, _) = a.svd(false, false)?;
    let mut values = sv.to_vec();
    values.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(values)
}

fn power_iteration_norm(a: &Array2<c64>) -> f64 {
    let n = a.ncols();
    // Deterministic start: a mildly uneven vector avoids landing exactly in a
    // singular subspace orthogonal to the dominant one.
    let mut v: Array1<c64> = Array1::from_iter(
        (0..n).map(|i| c64::new(1.0 + 0.5 * ((i % 7) as f64) / 7.0, 0.3 * ((i % 3) as f64))),
    );
    let norm = vec_norm(&v);
    v.mapv_inplace(|z| z / norm);
    let ah = a.t().mapv(|z| z.conj());
    let mut estimate = 0.0;
    for _ in 0..500 {
        let w = a.dot(&v);
        let u = ah.dot(&w);
        let un = vec_norm(&u);
        if un == 0.0 {
            return 0.0;
        }
        let next = un.sqrt();
        v = u.mapv(|z| z / un);
        if (next - estimate).abs() <= POWER_ITER_TOL * next.max(f64::MIN_POSITIVE) {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Maximum absolute column sum; drives the exponential scaling choice.
pub fn one_norm(a: &Array2<c64>) -> f64 {
    let mut best = 0.0_f64;
    for col in a.columns() {
        let s: f64 = col.iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Solve the dense system `a x = b` by LU factorization.
pub fn solve(a: &Array2<c64>, b: &Array1<c64>) -> Result<Array1<c64>> {
    Ok(a.solve(b)?)
}

pub fn inverse(a: &Array2<c64>) -> Result<Array2<c64>> {
    Ok(a.inv()?)
}

/// Padé coefficients for the degree-13 approximant.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const PADE_LOW: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];

const THETA13: f64 = 5.371920351148152;

fn pade_coeffs(m: usize) -> Vec<f64> {
    // b_j for the [m/m] approximant, scaled so b_0 = 1:
    // b_j / b_{j-1} = (m - j + 1) / ((2m - j + 1) j)
    let mut b = vec![1.0; m + 1];
    for j in 1..=m {
        b[j] = b[j - 1] * ((m - j + 1) as f64) / (((2 * m - j + 1) * j) as f64);
    }
    b
}

/// Matrix exponential by scaling and squaring with Padé approximants.
///
/// Accurate to near machine precision for the moderate dimensions this crate
/// works at; the approximant degree is chosen from the 1-norm.
pub fn expm(a: &Array2<c64>) -> Array2<c64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return a.clone();
    }
    let norm = one_norm(a);
    for &(m, theta) in &PADE_LOW {
        if norm <= theta {
            return pade_eval(a, &pade_coeffs(m));
        }
    }
    let s = ((norm / THETA13).log2().ceil().max(0.0)) as u32;
    let scaled = a.mapv(|z| z / 2f64.powi(s as i32));
    let mut result = pade_eval(&scaled, &PADE13);
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

fn pade_eval(a: &Array2<c64>, b: &[f64]) -> Array2<c64> {
    let n = a.nrows();
    let a2 = a.dot(a);
    let mut even = identity(n).mapv(|z| z * b[0]);
    let mut odd = identity(n).mapv(|z| z * b[1]);
    // Accumulate even/odd power series in A^2, then U = A * odd part.
    let mut power = identity(n);
    let mut j = 2;
    while j < b.len() {
        power = power.dot(&a2);
        even = even + power.mapv(|z| z * b[j]);
        if j + 1 < b.len() {
            odd = odd + power.mapv(|z| z * b[j + 1]);
        }
        j += 2;
    }
    let u = a.dot(&odd);
    let lhs = &even - &u;
    let rhs = &even + &u;
    let f = lhs.factorize().expect("Pade denominator is nonsingular for scaled input");
    let mut out = Array2::<c64>::zeros((n, n));
    for (jcol, col) in rhs.columns().into_iter().enumerate() {
        let x = f.solve(&col.to_owned()).expect("Pade solve");
        out.column_mut(jcol).assign(&x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn expm_scalar() {
        let a = array![[c(-1.0, 0.0)]];
        let e = expm(&a);
        assert_abs_diff_eq!(e[(0, 0)].re, (-1.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn expm_rotation() {
        let theta = 0.7;
        let a = array![[c(0.0, 0.0), c(-theta, 0.0)], [c(theta, 0.0), c(0.0, 0.0)]];
        let e = expm(&a);
        assert_abs_diff_eq!(e[(0, 0)].re, theta.cos(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[(1, 0)].re, theta.sin(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[(0, 1)].re, -theta.sin(), epsilon = 1e-13);
    }

    #[test]
    fn expm_nilpotent() {
        let a = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        let e = expm(&a);
        assert_abs_diff_eq!(e[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[(0, 1)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[(1, 1)].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        // exp(diag(-30, 10)) needs scaling
        let a = array![[c(-30.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(10.0, 0.0)]];
        let e = expm(&a);
        assert_abs_diff_eq!(e[(0, 0)].re / (-30.0f64).exp(), 1.0, epsilon = 1e-11);
        assert_abs_diff_eq!(e[(1, 1)].re / (10.0f64).exp(), 1.0, epsilon = 1e-11);
    }

    #[test]
    fn expm_imaginary_is_unitary() {
        let a = array![[c(0.0, 2.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -2.0)]];
        let e = expm(&a);
        assert_abs_diff_eq!(e[(0, 0)].norm(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(e[(0, 0)].re, (2.0f64).cos(), epsilon = 1e-13);
    }

    #[test]
    fn spectral_norm_diagonal() {
        let a = array![[c(3.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-4.0, 0.0)]];
        assert_abs_diff_eq!(spectral_norm(&a), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_svd() {
        let a = array![
            [c(1.0, 0.5), c(2.0, 0.0), c(0.0, -1.0)],
            [c(0.0, 0.0), c(-3.0, 0.2), c(1.0, 0.0)],
            [c(0.5, 0.0), c(0.0, 0.0), c(2.5, -0.4)]
        ];
        let exact = singular_values(&a).unwrap()[0];
        let approx_norm = power_iteration_norm(&a);
        assert_abs_diff_eq!(approx_norm / exact, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn solve_round_trip() {
        let a = array![[c(2.0, 0.0), c(1.0, 0.0)], [c(0.0, 1.0), c(3.0, 0.0)]];
        let x = array![c(1.0, -1.0), c(0.5, 2.0)];
        let b = a.dot(&x);
        let back = solve(&a, &b).unwrap();
        for (u, v) in back.iter().zip(x.iter()) {
            assert_abs_diff_eq!((u - v).norm(), 0.0, epsilon = 1e-12);
        }
    }
}
