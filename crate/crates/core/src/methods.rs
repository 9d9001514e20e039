//! Linear multistep methods and their stability/order analysis.
//!
//! A k-step method is the recurrence
//!
//! ```text
//! sum_{l=0}^{k} alpha_l x_{j+l} = dt sum_{l=0}^{k} beta_l [A x_{j+l} + b]
//! ```
//!
//! defined by the coefficient pair `(alpha, beta)`. Coefficients are stored
//! as exact rationals normalized so that `alpha_k = 1`; order conditions are
//! checked in exact arithmetic, while stability (root locus of
//! `rho(z) - mu sigma(z)`) uses floating-point root finding.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use ndarray_linalg::c64;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{self, PolyRoots};

/// Tie-break tolerance when classifying roots against the unit circle.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Largest order probed by `order()` when callers do not supply a cap.
pub const DEFAULT_ORDER_CAP: usize = 10;

/// A k-step linear multistep method with exact rational coefficients.
///
/// Invariants enforced at construction: `alphas.len() == betas.len() == k+1`,
/// `alpha_k != 0`, and the stored coefficients are rescaled so `alpha_k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultistepMethod {
    name: String,
    alphas: Vec<BigRational>,
    betas: Vec<BigRational>,
    alphas_f64: Vec<f64>,
    betas_f64: Vec<f64>,
}

impl MultistepMethod {
    pub fn new(
        name: impl Into<String>,
        alphas: Vec<BigRational>,
        betas: Vec<BigRational>,
    ) -> Result<Self> {
        let name = name.into();
        if alphas.len() != betas.len() {
            return Err(Error::InvalidMethod(format!(
                "{name}: alphas has {} entries, betas has {}",
                alphas.len(),
                betas.len()
            )));
        }
        if alphas.len() < 2 {
            return Err(Error::InvalidMethod(format!(
                "{name}: a method needs at least k+1 = 2 coefficients"
            )));
        }
        let lead = alphas.last().unwrap().clone();
        if lead.is_zero() {
            return Err(Error::InvalidMethod(format!("{name}: alpha_k must be nonzero")));
        }
        let alphas: Vec<BigRational> = alphas.into_iter().map(|a| a / lead.clone()).collect();
        let betas: Vec<BigRational> = betas.into_iter().map(|b| b / lead.clone()).collect();
        let alphas_f64 = alphas.iter().map(rat_to_f64).collect();
        let betas_f64 = betas.iter().map(rat_to_f64).collect();
        Ok(Self {
            name,
            alphas,
            betas,
            alphas_f64,
            betas_f64,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Step count k.
    pub fn k(&self) -> usize {
        self.alphas.len() - 1
    }

    pub fn alphas(&self) -> &[BigRational] {
        &self.alphas
    }

    pub fn betas(&self) -> &[BigRational] {
        &self.betas
    }

    pub fn alphas_f64(&self) -> &[f64] {
        &self.alphas_f64
    }

    pub fn betas_f64(&self) -> &[f64] {
        &self.betas_f64
    }

    /// sum_l beta_l as f64; multiplies the inhomogeneity in assembled rows.
    pub fn beta_sum_f64(&self) -> f64 {
        let sum: BigRational = self.betas.iter().cloned().sum();
        rat_to_f64(&sum)
    }

    /// Whether the method is implicit (`beta_k != 0`).
    pub fn is_implicit(&self) -> bool {
        !self.betas.last().unwrap().is_zero()
    }

    /// The generating polynomials `(rho, sigma)` as ascending coefficient
    /// vectors: `rho[j] = alpha_j`, `sigma[j] = beta_j`.
    pub fn generating_polynomials(&self) -> (Vec<BigRational>, Vec<BigRational>) {
        (self.alphas.clone(), self.betas.clone())
    }

    /// Exact consistency check: `rho(1) = 0`.
    pub fn is_consistent(&self) -> bool {
        let rho1: BigRational = self.alphas.iter().cloned().sum();
        rho1.is_zero()
    }

    /// Taylor coefficient `c_q` of `rho(e^h) - h sigma(e^h)`, computed in
    /// exact rational arithmetic:
    ///
    /// ```text
    /// c_q = sum_j alpha_j j^q / q!  -  sum_j beta_j j^{q-1} / (q-1)!
    /// ```
    ///
    /// with `j^0 = 1` including `j = 0`, and no sigma term for `q = 0`.
    pub fn taylor_coefficient(&self, q: usize) -> BigRational {
        let mut c = BigRational::zero();
        let qf = factorial(q);
        for (j, alpha) in self.alphas.iter().enumerate() {
            c += alpha * BigRational::new(int_pow(j, q), qf.clone());
        }
        if q >= 1 {
            let qm1f = factorial(q - 1);
            for (j, beta) in self.betas.iter().enumerate() {
                c -= beta * BigRational::new(int_pow(j, q - 1), qm1f.clone());
            }
        }
        c
    }

    /// The largest `p <= p_max` such that `c_q = 0` for all `q = 0..=p`.
    ///
    /// Returns 0 for an inconsistent method (`c_0 != 0`).
    pub fn order(&self, p_max: usize) -> usize {
        for q in 0..=p_max {
            if !self.taylor_coefficient(q).is_zero() {
                return q.saturating_sub(1);
            }
        }
        p_max
    }

    /// Coefficients of `rho(z) - mu sigma(z)`, ascending.
    pub fn stability_polynomial(&self, mu: c64) -> Vec<c64> {
        self.alphas_f64
            .iter()
            .zip(&self.betas_f64)
            .map(|(&a, &b)| c64::new(a, 0.0) - mu * b)
            .collect()
    }
}

impl fmt::Display for MultistepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (k = {})", self.name, self.k())
    }
}

fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational outside f64 range")
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// j^q with the convention 0^0 = 1.
fn int_pow(j: usize, q: usize) -> BigInt {
    if q == 0 {
        BigInt::one()
    } else {
        BigInt::from(j).pow(q as u32)
    }
}

fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Forward Euler in multistep form: `x_{j+1} - x_j = dt f_j`.
pub fn euler() -> MultistepMethod {
    MultistepMethod::new("euler", vec![rat(-1, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)])
        .expect("registry method is valid")
}

/// Trapezoidal rule: `x_{j+1} - x_j = dt (f_j + f_{j+1}) / 2`.
pub fn trapezoidal() -> MultistepMethod {
    MultistepMethod::new(
        "trapezoidal",
        vec![rat(-1, 1), rat(1, 1)],
        vec![rat(1, 2), rat(1, 2)],
    )
    .expect("registry method is valid")
}

/// Backward differentiation formula with k steps (2 <= k <= 6).
///
/// Derived exactly from `sum_{m=1}^{k} (1/m) nabla^m x_n = dt f_n` and then
/// normalized so the leading alpha is 1.
pub fn bdf(k: usize) -> Result<MultistepMethod> {
    if !(2..=6).contains(&k) {
        return Err(Error::InvalidMethod(format!(
            "bdf{k}: step count must be between 2 and 6"
        )));
    }
    // coefficient of x_{n-i} is sum_{m >= max(1,i)} (1/m) (-1)^i C(m, i)
    let mut by_lag = vec![BigRational::zero(); k + 1];
    for m in 1..=k {
        for i in 0..=m {
            let sign = if i % 2 == 0 { 1 } else { -1 };
            let term = BigRational::new(BigInt::from(sign) * binomial(m, i), BigInt::from(m));
            by_lag[i] += term;
        }
    }
    // lag i corresponds to position l = k - i in ascending multistep form
    let mut alphas = vec![BigRational::zero(); k + 1];
    for (i, coeff) in by_lag.into_iter().enumerate() {
        alphas[k - i] = coeff;
    }
    let mut betas = vec![BigRational::zero(); k + 1];
    betas[k] = BigRational::one();
    MultistepMethod::new(format!("bdf{k}"), alphas, betas)
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// The shipped method registry: Euler, trapezoidal, BDF2, BDF3, BDF4.
pub fn registry() -> Vec<MultistepMethod> {
    vec![
        euler(),
        trapezoidal(),
        bdf(2).unwrap(),
        bdf(3).unwrap(),
        bdf(4).unwrap(),
    ]
}

/// Look up a registry method by its lowercase name.
pub fn by_name(name: &str) -> Option<MultistepMethod> {
    match name.to_ascii_lowercase().as_str() {
        "euler" => Some(euler()),
        "trapezoidal" | "trapezoid" => Some(trapezoidal()),
        "bdf2" => bdf(2).ok(),
        "bdf3" => bdf(3).ok(),
        "bdf4" => bdf(4).ok(),
        _ => None,
    }
}

/// Roots of `rho(z) - mu sigma(z) = 0` with multiplicities and degree-drop
/// bookkeeping for leading-coefficient cancellation.
pub fn stability_roots(method: &MultistepMethod, mu: c64) -> Result<PolyRoots> {
    poly::roots(&method.stability_polynomial(mu))
}

fn satisfies_root_condition(roots: &PolyRoots) -> bool {
    roots.roots.iter().all(|r| {
        if r.multiplicity > 1 {
            r.value.norm() < 1.0 - BOUNDARY_TOL
        } else {
            r.value.norm() <= 1.0 + BOUNDARY_TOL
        }
    })
}

/// Whether `mu` lies in the stability domain: every root of
/// `rho(z) - mu sigma(z)` satisfies `|z| <= 1`, strictly for multiple roots
/// (within `BOUNDARY_TOL`).
///
/// A polynomial that degenerates to identically zero pins nothing and is
/// reported as unstable.
pub fn in_stability_domain(method: &MultistepMethod, mu: c64) -> bool {
    match stability_roots(method, mu) {
        Ok(roots) => satisfies_root_condition(&roots),
        Err(_) => false,
    }
}

/// Whether the roots of `sigma` satisfy the unit-disk root condition
/// (stability at infinity). Errors when `sigma` is identically zero.
pub fn is_stable_at_infinity(method: &MultistepMethod) -> Result<bool> {
    if method.betas.iter().all(|b| b.is_zero()) {
        return Err(Error::SigmaIdenticallyZero);
    }
    let coeffs: Vec<c64> = method.betas_f64.iter().map(|&b| c64::new(b, 0.0)).collect();
    let roots = poly::roots(&coeffs)?;
    Ok(satisfies_root_condition(&roots))
}

/// Sampled lower estimate of the A(alpha) angle.
///
/// Scans angles `theta = 0, res, 2 res, ..., pi/2` and returns the largest
/// sampled angle such that `mu = -r e^{+-i theta}` lies in the stability
/// domain for every radius and every smaller sampled angle. The result
/// carries an implicit `+- angular_resolution` uncertainty and is clamped to
/// `[0, pi/2]`; 0 means no positive wedge was confirmed.
pub fn estimate_alpha_angle(
    method: &MultistepMethod,
    radii: &[f64],
    angular_resolution: f64,
) -> Result<f64> {
    if radii.is_empty() {
        return Err(Error::InvalidInput("alpha-angle estimation needs at least one radius".into()));
    }
    if !(angular_resolution > 0.0 && angular_resolution <= 0.01) {
        return Err(Error::InvalidInput(format!(
            "angular resolution must be in (0, 0.01] rad, got {angular_resolution}"
        )));
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidInput("all sampling radii must be positive".into()));
    }
    let mut thetas: Vec<f64> = Vec::new();
    let mut theta = 0.0;
    while theta < FRAC_PI_2 {
        thetas.push(theta);
        theta += angular_resolution;
    }
    thetas.push(FRAC_PI_2);

    let mut best = 0.0;
    'outer: for &theta in &thetas {
        for &r in radii {
            for sign in [1.0, -1.0] {
                let mu = -r * c64::new(0.0, sign * theta).exp();
                if !in_stability_domain(method, mu) {
                    break 'outer;
                }
            }
        }
        best = theta;
    }
    Ok(best)
}

/// Rectangle in the complex mu-plane with a raster resolution.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DomainGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub cols: usize,
    pub rows: usize,
}

impl DomainGrid {
    /// Center of cell (i, j) with i indexing the real axis.
    pub fn center(&self, i: usize, j: usize) -> c64 {
        let re = self.re_min + (self.re_max - self.re_min) * (i as f64 + 0.5) / self.cols as f64;
        let im = self.im_min + (self.im_max - self.im_min) * (j as f64 + 0.5) / self.rows as f64;
        c64::new(re, im)
    }
}

/// Boolean raster of the stability domain over a grid; `cells[j * cols + i]`
/// is true iff the center of cell (i, j) lies in the stability domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainMask {
    pub grid: DomainGrid,
    pub cells: Vec<bool>,
}

impl DomainMask {
    pub fn cell(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.grid.cols + i]
    }
}

/// Full stability/order report for one method.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub method: String,
    pub k: usize,
    pub order: usize,
    pub stable_at_infinity: bool,
    pub alpha_angle_radians: f64,
    pub alpha_angle_resolution: f64,
    pub domain_mask: DomainMask,
}

/// Default radii for alpha-angle sampling, logarithmically spaced.
pub fn default_alpha_radii() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0, 100.0, 1000.0]
}

/// Rasterize the stability domain over a grid.
pub fn domain_mask(method: &MultistepMethod, grid: DomainGrid) -> DomainMask {
    let mut cells = Vec::with_capacity(grid.cols * grid.rows);
    for j in 0..grid.rows {
        for i in 0..grid.cols {
            cells.push(in_stability_domain(method, grid.center(i, j)));
        }
    }
    DomainMask { grid, cells }
}

/// Run the full analysis: order, stability at infinity, sampled A(alpha)
/// angle, and a domain raster.
pub fn analyze(
    method: &MultistepMethod,
    p_max: usize,
    radii: &[f64],
    angular_resolution: f64,
    grid: DomainGrid,
) -> Result<StabilityReport> {
    let order = method.order(p_max);
    let stable_at_infinity = is_stable_at_infinity(method)?;
    let alpha = estimate_alpha_angle(method, radii, angular_resolution)?;
    Ok(StabilityReport {
        method: method.name().to_string(),
        k: method.k(),
        order,
        stable_at_infinity,
        alpha_angle_radians: alpha,
        alpha_angle_resolution: angular_resolution,
        domain_mask: domain_mask(method, grid),
    })
}

/// Serialized form of a method definition file.
#[derive(Debug, Serialize, Deserialize)]
pub struct MethodFile {
    pub name: String,
    pub k: usize,
    /// (numerator, denominator) pairs, ascending in l.
    pub alphas: Vec<(i64, i64)>,
    pub betas: Vec<(i64, i64)>,
}

impl MethodFile {
    pub fn into_method(self) -> Result<MultistepMethod> {
        if self.alphas.len() != self.k + 1 || self.betas.len() != self.k + 1 {
            return Err(Error::InvalidMethod(format!(
                "{}: k = {} requires {} coefficients, got {} alphas / {} betas",
                self.name,
                self.k,
                self.k + 1,
                self.alphas.len(),
                self.betas.len()
            )));
        }
        for &(_, den) in self.alphas.iter().chain(&self.betas) {
            if den == 0 {
                return Err(Error::InvalidMethod(format!("{}: zero denominator", self.name)));
            }
        }
        let alphas = self.alphas.iter().map(|&(n, d)| rat(n, d)).collect();
        let betas = self.betas.iter().map(|&(n, d)| rat(n, d)).collect();
        MultistepMethod::new(self.name, alphas, betas)
    }

    pub fn from_method(method: &MultistepMethod) -> Self {
        let pair = |r: &BigRational| {
            (
                r.numer().to_i64().expect("numerator fits i64"),
                r.denom().to_i64().expect("denominator fits i64"),
            )
        };
        Self {
            name: method.name().to_string(),
            k: method.k(),
            alphas: method.alphas().iter().map(pair).collect(),
            betas: method.betas().iter().map(pair).collect(),
        }
    }
}

/// Parse a method definition from JSON text.
pub fn method_from_json(text: &str) -> Result<MultistepMethod> {
    let file: MethodFile = serde_json::from_str(text)?;
    file.into_method()
}
