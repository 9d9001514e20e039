//! Complex polynomial evaluation and root finding.
//!
//! Roots are computed from the eigenvalues of the companion matrix and
//! polished with a few Newton steps. Numerical root finders split multiple
//! roots into tight clusters, so nearby roots are re-merged and reported
//! with a multiplicity.

use ndarray::Array2;
use ndarray_linalg::{c64, Eig};

use crate::error::{Error, Result};

/// Relative threshold below which a leading coefficient is treated as zero.
pub const LEADING_COEFF_TOL: f64 = 1e-12;

/// Roots closer than this are merged into one cluster and reported as a
/// single root with multiplicity equal to the cluster size.
pub const CLUSTER_TOL: f64 = 1e-7;

/// A root together with the number of computed roots that collapsed onto it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootCluster {
    pub value: c64,
    pub multiplicity: usize,
}

/// Root set of a polynomial, with bookkeeping for degree reduction when
/// leading coefficients cancel.
#[derive(Debug, Clone)]
pub struct PolyRoots {
    pub roots: Vec<RootCluster>,
    /// Effective degree after trimming negligible leading coefficients.
    pub degree: usize,
    /// Nominal degree minus effective degree.
    pub degree_drop: usize,
}

/// Evaluate a polynomial with ascending coefficients at `z` (Horner).
pub fn eval(coeffs: &[c64], z: c64) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn eval_derivative(coeffs: &[c64], z: c64) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for (j, &c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + c * (j as f64);
    }
    acc
}

/// All roots of the polynomial with the given ascending coefficients.
///
/// Leading coefficients with magnitude below `LEADING_COEFF_TOL` relative to
/// the largest coefficient are trimmed; the trimmed count is returned as
/// `degree_drop` (those roots have escaped to infinity). An identically zero
/// polynomial is an error.
pub fn roots(coeffs: &[c64]) -> Result<PolyRoots> {
    let nominal = coeffs.len().saturating_sub(1);
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DegeneratePolynomial);
    }
    let mut degree = nominal;
    while degree > 0 && coeffs[degree].norm() <= LEADING_COEFF_TOL * scale {
        degree -= 1;
    }
    let trimmed = &coeffs[..=degree];
    let raw = raw_roots(trimmed)?;
    let polished: Vec<c64> = raw.into_iter().map(|z| polish(trimmed, z)).collect();
    Ok(PolyRoots {
        roots: cluster(&polished),
        degree,
        degree_drop: nominal - degree,
    })
}

fn raw_roots(coeffs: &[c64]) -> Result<Vec<c64>> {
    let degree = coeffs.len() - 1;
    match degree {
        0 => Ok(Vec::new()),
        1 => Ok(vec![-coeffs[0] / coeffs[1]]),
        2 => Ok(quadratic(coeffs[0], coeffs[1], coeffs[2])),
        _ => companion_roots(coeffs),
    }
}

/// Numerically stable quadratic formula for complex coefficients.
fn quadratic(c: c64, b: c64, a: c64) -> Vec<c64> {
    let disc = b * b - 4.0 * a * c;
    let mut s = disc.sqrt();
    // Pick the sign that avoids cancellation in b + s.
    if (b + s).norm() < (b - s).norm() {
        s = -s;
    }
    let q = -(b + s) / 2.0;
    let r1 = q / a;
    let r2 = if q.norm() > 0.0 { c / q } else { r1 };
    vec![r1, r2]
}

fn companion_roots(coeffs: &[c64]) -> Result<Vec<c64>> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let mut comp = Array2::<c64>::zeros((n, n));
    for i in 1..n {
        comp[(i, i - 1)] = c64::new(1.0, 0.0);
    }
    for i in 0..n {
        comp[(i, n - 1)] = -coeffs[i] / lead;
    }
    let (eigs, _) = comp.eig()?;
    Ok(eigs.to_vec())
}

fn polish(coeffs: &[c64], mut z: c64) -> c64 {
    for _ in 0..4 {
        let p = eval(coeffs, z);
        let dp = eval_derivative(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

fn cluster(roots: &[c64]) -> Vec<RootCluster> {
    let mut clusters: Vec<(c64, usize)> = Vec::new();
    let mut sorted: Vec<c64> = roots.to_vec();
    sorted.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    for z in sorted {
        match clusters
            .iter_mut()
            .find(|(center, _)| (*center - z).norm() < CLUSTER_TOL)
        {
            Some((center, count)) => {
                // Running centroid keeps the representative in the middle of
                // the cluster as members accumulate.
                *center = (*center * (*count as f64) + z) / ((*count + 1) as f64);
                *count += 1;
            }
            None => clusters.push((z, 1)),
        }
    }
    clusters
        .into_iter()
        .map(|(value, multiplicity)| RootCluster {
            value,
            multiplicity,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn linear_root() {
        // z - 1
        let r = roots(&[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(r.degree, 1);
        assert_eq!(r.roots.len(), 1);
        assert_abs_diff_eq!(r.roots[0].value.re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn quadratic_complex_pair() {
        // z^2 + 1
        let r = roots(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let mut ims: Vec<f64> = r.roots.iter().map(|r| r.value.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(ims[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ims[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn double_root_clusters() {
        // (z - 1/2)^2 = z^2 - z + 1/4
        let r = roots(&[c(0.25, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert_eq!(r.roots[0].multiplicity, 2);
        assert_abs_diff_eq!(r.roots[0].value.re, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn quartic_residuals_small() {
        // (z-1)(z+2)(z-i)(z+i) = (z^2+z-2)(z^2+1)
        let coeffs = [
            c(-2.0, 0.0),
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
        ];
        let r = roots(&coeffs).unwrap();
        assert_eq!(r.degree, 4);
        let total: usize = r.roots.iter().map(|c| c.multiplicity).sum();
        assert_eq!(total, 4);
        for root in &r.roots {
            assert!(eval(&coeffs, root.value).norm() < 1e-12);
        }
    }

    #[test]
    fn leading_cancellation_drops_degree() {
        // 1e-15 z^2 + z - 1 behaves as z - 1
        let r = roots(&[c(-1.0, 0.0), c(1.0, 0.0), c(1e-15, 0.0)]).unwrap();
        assert_eq!(r.degree, 1);
        assert_eq!(r.degree_drop, 1);
        assert_abs_diff_eq!(r.roots[0].value.re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_polynomial_is_error() {
        assert!(matches!(
            roots(&[c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::DegeneratePolynomial)
        ));
    }

    #[test]
    fn constant_polynomial_has_no_roots() {
        let r = roots(&[c(3.0, 0.0)]).unwrap();
        assert!(r.roots.is_empty());
        assert_eq!(r.degree, 0);
    }
}
