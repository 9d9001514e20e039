//! Classical ground truth: eigendecomposition with conditioning data, the
//! closed-form solution via the matrix exponential, sequential multistep
//! time stepping, and derivative norm bounds.

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{c64, Eig, Factorize, Solve};

use crate::encoder::StartingScheme;
use crate::error::{Error, Result};
use crate::linalg;
use crate::methods::MultistepMethod;
use crate::problem::OdeProblem;

/// Relative residual above which an eigendecomposition is rejected as
/// defective or near-defective.
pub const DEFECTIVE_RESIDUAL_TOL: f64 = 1e-8;

/// Relative threshold below which an eigenvalue is treated as zero
/// (outside every wedge).
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

/// Eigendecomposition `A = V D V^{-1}` with the conditioning and wedge data
/// the error bounds depend on.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<c64>,
    pub v: Array2<c64>,
    /// `||V|| ||V^{-1}||` in the spectral norm.
    pub kappa_v: f64,
    /// `max_i |arg(-lambda_i)|`; pi marks a zero eigenvalue (no wedge
    /// contains mu = 0).
    pub wedge_angle: f64,
}

impl SpectralData {
    /// Whether every eigenvalue sits strictly inside the left-half-plane
    /// wedge (`max |arg(-lambda)| < pi/2`).
    pub fn wedge_satisfied(&self) -> bool {
        self.wedge_angle < FRAC_PI_2
    }
}

/// Eigendecomposition of `A` with reconstruction check, `kappa_V`, and the
/// eigenvalue wedge angle.
pub fn eigen_condition(a: &Array2<c64>) -> Result<SpectralData> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let a_norm = linalg::spectral_norm(a);
    let (eigenvalues, v) = a.eig()?;
    let tolerance = DEFECTIVE_RESIDUAL_TOL * a_norm;
    let v_inv = match linalg::inverse(&v) {
        Ok(inv) => inv,
        Err(_) => {
            return Err(Error::DefectiveMatrix {
                residual: f64::INFINITY,
                tolerance,
            })
        }
    };
    let d = Array2::from_diag(&eigenvalues);
    let reconstructed = v.dot(&d).dot(&v_inv);
    let residual = linalg::spectral_norm(&(&reconstructed - a));
    if residual > tolerance {
        return Err(Error::DefectiveMatrix { residual, tolerance });
    }
    let sv = linalg::singular_values(&v)?;
    let (smax, smin) = (sv[0], *sv.last().unwrap());
    if smin <= 0.0 {
        return Err(Error::DefectiveMatrix {
            residual: f64::INFINITY,
            tolerance,
        });
    }
    let kappa_v = smax / smin;

    let lambda_scale = eigenvalues
        .iter()
        .map(|z| z.norm())
        .fold(a_norm, f64::max);
    let mut wedge_angle: f64 = 0.0;
    for lambda in eigenvalues.iter() {
        if lambda.norm() <= ZERO_EIGENVALUE_TOL * lambda_scale || lambda_scale == 0.0 {
            wedge_angle = PI;
            break;
        }
        wedge_angle = wedge_angle.max((-lambda).arg().abs());
    }
    Ok(SpectralData {
        eigenvalues: eigenvalues.to_vec(),
        v,
        kappa_v,
        wedge_angle,
    })
}

/// Exact solution of `x' = A x + b` at time `t`, evaluated through the
/// matrix exponential and held constant after `t0 + delta_t`.
///
/// Nonsingular `A` uses `e^{A tau}(x_in + A^{-1} b) - A^{-1} b`. Singular `A`
/// falls back to `e^{A tau} x_in + tau phi1(A tau) b` with
/// `phi1(z) = (e^z - 1)/z`, evaluated through an augmented exponential; this
/// regime is outside the wedge hypothesis and is logged as such.
pub fn exact_solution(problem: &OdeProblem, t: f64) -> Result<Array1<c64>> {
    if t < problem.t0 {
        return Err(Error::InvalidInput(format!(
            "time {t} precedes t0 = {}",
            problem.t0
        )));
    }
    let tau = (t - problem.t0).min(problem.delta_t);
    let n = problem.n_x();
    let sv = linalg::singular_values(&problem.a)?;
    let singular = sv[0] == 0.0 || sv[sv.len() - 1] < 1e-12 * sv[0];
    if singular {
        log::warn!(
            "A is singular or nearly singular; using the phi1 integral form, \
             outside the eigenvalue wedge hypothesis"
        );
        // exp of [[A, b], [0, 0]] carries tau*phi1(A tau) b in its last column
        let mut aug = Array2::<c64>::zeros((n + 1, n + 1));
        aug.slice_mut(s![..n, ..n])
            .assign(&problem.a.mapv(|z| z * tau));
        for i in 0..n {
            aug[(i, n)] = problem.b[i] * tau;
        }
        let e = linalg::expm(&aug);
        let ea = e.slice(s![..n, ..n]);
        let drive = e.slice(s![..n, n]);
        Ok(ea.dot(&problem.x_in) + &drive)
    } else {
        let a_inv_b = linalg::solve(&problem.a, &problem.b)?;
        let e = linalg::expm(&problem.a.mapv(|z| z * tau));
        Ok(e.dot(&(&problem.x_in + &a_inv_b)) - &a_inv_b)
    }
}

/// Discrete trajectory on the uniform grid `t_j = t0 + j dt`, constant after
/// the midpoint index.
#[derive(Debug, Clone)]
pub struct SolutionHistory {
    pub times: Vec<f64>,
    pub vectors: Vec<Array1<c64>>,
}

impl SolutionHistory {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The held final value (identical from the midpoint on).
    pub fn final_value(&self) -> &Array1<c64> {
        self.vectors.last().expect("history is nonempty")
    }

    /// Squared norms `||x_j||^2` for all grid points.
    pub fn norms_sq(&self) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|v| v.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Flatten into one stacked vector of dimension `(N_t + 1) N_x`.
    pub fn stacked(&self) -> Array1<c64> {
        let n_x = self.vectors[0].len();
        let mut out = Array1::<c64>::zeros(self.len() * n_x);
        for (j, v) in self.vectors.iter().enumerate() {
            out.slice_mut(s![j * n_x..(j + 1) * n_x]).assign(v);
        }
        out
    }
}

/// Run the multistep recurrence sequentially: starting steps for the first
/// `k - 1` values, the k-step implicit update through the midpoint, then the
/// constant extension.
pub fn multistep_solve(
    problem: &OdeProblem,
    method: &MultistepMethod,
    n_t: usize,
    starting: StartingScheme,
) -> Result<SolutionHistory> {
    let k = method.k();
    check_step_count(n_t, k)?;
    let n = problem.n_x();
    let dt = 2.0 * problem.delta_t / n_t as f64;
    let eye = linalg::identity(n);
    let a_dt = problem.a.mapv(|z| z * dt);
    let b_dt = problem.b.mapv(|z| z * dt);

    let mut xs: Vec<Array1<c64>> = Vec::with_capacity(n_t + 1);
    xs.push(problem.x_in.clone());

    match starting {
        StartingScheme::Euler => {
            for _ in 1..k {
                let prev = xs.last().unwrap();
                let next = (&eye + &a_dt).dot(prev) + &b_dt;
                xs.push(next);
            }
        }
        StartingScheme::PadeOrder4 => {
            if k >= 2 {
                let (q, p) = pade22_blocks(&a_dt, n);
                let f = q
                    .factorize()
                    .map_err(|e| Error::SingularImplicitStep(e.to_string()))?;
                for _ in 1..k {
                    let prev = xs.last().unwrap();
                    let rhs = p.dot(prev) + &b_dt;
                    xs.push(f.solve(&rhs).map_err(|e| Error::SingularImplicitStep(e.to_string()))?);
                }
            }
        }
    }

    let alphas = method.alphas_f64();
    let betas = method.betas_f64();
    // (alpha_k I - beta_k A dt) x_{j+k} = dt sum_{l<k} beta_l (A x_{j+l} + b)
    //                                     - sum_{l<k} alpha_l x_{j+l} + dt beta_k b
    let lhs = &eye.mapv(|z| z * alphas[k]) - &a_dt.mapv(|z| z * betas[k]);
    let lhs_f = lhs
        .factorize()
        .map_err(|e| Error::SingularImplicitStep(e.to_string()))?;
    for j in 0..=(n_t / 2 - k) {
        let mut rhs = b_dt.mapv(|z| z * betas[k]);
        for (l, (&alpha, &beta)) in alphas.iter().zip(betas).enumerate().take(k) {
            let x = &xs[j + l];
            if beta != 0.0 {
                rhs = rhs + (a_dt.dot(x) + &b_dt).mapv(|z| z * beta);
            }
            rhs = rhs - x.mapv(|z| z * alpha);
        }
        xs.push(
            lhs_f
                .solve(&rhs)
                .map_err(|e| Error::SingularImplicitStep(e.to_string()))?,
        );
    }

    let held = xs[n_t / 2].clone();
    for _ in (n_t / 2 + 1)..=n_t {
        xs.push(held.clone());
    }

    let times = (0..=n_t).map(|j| problem.t0 + j as f64 * dt).collect();
    Ok(SolutionHistory { times, vectors: xs })
}

/// Shared step-count validation for assembly and sequential stepping.
pub(crate) fn check_step_count(n_t: usize, k: usize) -> Result<()> {
    if n_t % 2 != 0 {
        return Err(Error::InvalidInput(format!("N_t must be even, got {n_t}")));
    }
    if n_t < 2 * k {
        return Err(Error::InvalidInput(format!(
            "N_t = {n_t} is below the minimum 2k = {}",
            2 * k
        )));
    }
    Ok(())
}

/// The (2,2) Pade step blocks `(Q, P)` with `Q x_next = P x_prev + b dt`:
/// `Q = I - M/2 + M^2/12`, `P = I + M/2 + M^2/12`, `M = A dt`. Locally
/// fourth-order accurate; used as the high-order starting scheme.
pub(crate) fn pade22_blocks(a_dt: &Array2<c64>, n: usize) -> (Array2<c64>, Array2<c64>) {
    let eye = linalg::identity(n);
    let m2 = a_dt.dot(a_dt).mapv(|z| z / 12.0);
    let half = a_dt.mapv(|z| z / 2.0);
    let q = &(&eye - &half) + &m2;
    let p = &(&eye + &half) + &m2;
    (q, p)
}

/// Derivative norm bound `kappa_V (||A||^l ||x_in|| + ||A||^{l-1} ||b||)`.
///
/// Requires `l >= 1` and the eigenvalue wedge hypothesis.
pub fn derivative_norm_bound(
    problem: &OdeProblem,
    spectral: &SpectralData,
    ell: usize,
) -> Result<f64> {
    if ell == 0 {
        return Err(Error::InvalidInput("derivative order must be >= 1".into()));
    }
    if !spectral.wedge_satisfied() {
        return Err(Error::WedgeViolated {
            angle: spectral.wedge_angle,
        });
    }
    let a_norm = problem.a_norm();
    Ok(spectral.kappa_v
        * (a_norm.powi(ell as i32) * problem.x_in_norm()
            + a_norm.powi(ell as i32 - 1) * problem.b_norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn scalar_problem(a: f64, b: f64, x0: f64, delta_t: f64) -> OdeProblem {
        OdeProblem::new(
            None,
            array![[c(a, 0.0)]],
            array![c(b, 0.0)],
            array![c(x0, 0.0)],
            0.0,
            delta_t,
            None,
        )
        .unwrap()
    }

    fn diag_problem() -> OdeProblem {
        OdeProblem::new(
            None,
            array![[c(-1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-2.0, 0.0)]],
            array![c(1.0, 0.0), c(0.5, 0.0)],
            array![c(1.0, 0.0), c(1.0, 0.0)],
            0.0,
            1.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn eigen_diag_is_trivial() {
        let p = diag_problem();
        let spec = eigen_condition(&p.a).unwrap();
        assert_abs_diff_eq!(spec.kappa_v, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(spec.wedge_angle, 0.0, epsilon = 1e-12);
        let mut eigs: Vec<f64> = spec.eigenvalues.iter().map(|z| z.re).collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(eigs[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eigs[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_rotation_wedge_angle() {
        let a = array![[c(-0.1, 0.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(-0.1, 0.0)]];
        let spec = eigen_condition(&a).unwrap();
        assert_abs_diff_eq!(spec.wedge_angle, (1.0f64 / 0.1).atan(), epsilon = 1e-10);
        assert!(spec.wedge_satisfied());
    }

    #[test]
    fn eigen_defective_rejected() {
        let a = array![[c(-1.0, 0.0), c(10.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
        match eigen_condition(&a) {
            Err(Error::DefectiveMatrix { .. }) => {}
            Ok(spec) => assert!(spec.kappa_v > 1e6, "kappa_v = {}", spec.kappa_v),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn eigen_zero_eigenvalue_flags_wedge() {
        let a = array![[c(0.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
        let spec = eigen_condition(&a).unwrap();
        assert!(!spec.wedge_satisfied());
    }

    #[test]
    fn exact_scalar_decay() {
        let p = scalar_problem(-1.0, 0.0, 1.0, 1.0);
        let x = exact_solution(&p, 1.0).unwrap();
        assert_abs_diff_eq!(x[0].re, (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn exact_equilibrium_limit() {
        // x' = -2x + 2 relaxes to 1; the constant extension holds it there
        let p = scalar_problem(-2.0, 2.0, 0.0, 40.0);
        let x = exact_solution(&p, 1000.0).unwrap();
        assert_abs_diff_eq!(x[0].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_matches_componentwise_closed_form() {
        let p = diag_problem();
        let x = exact_solution(&p, 0.5).unwrap();
        // each component solves a scalar problem
        for (i, (lambda, b)) in [(-1.0, 1.0), (-2.0, 0.5)].iter().enumerate() {
            let expected = (lambda * 0.5f64).exp() * (1.0 + b / lambda) - b / lambda;
            assert_abs_diff_eq!(x[i].re, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_initial_point_is_exact() {
        let p = diag_problem();
        let x = exact_solution(&p, 0.0).unwrap();
        assert_abs_diff_eq!((&x - &p.x_in).map(|z| z.norm()).sum(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn exact_constant_extension() {
        let p = diag_problem();
        let a = exact_solution(&p, 1.0).unwrap();
        let b = exact_solution(&p, 7.5).unwrap();
        assert_abs_diff_eq!(linalg::vec_norm(&(&a - &b)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn exact_singular_a_uses_phi1() {
        // x' = b: linear ramp
        let p = scalar_problem(0.0, 3.0, 0.0, 2.0);
        let x = exact_solution(&p, 0.5).unwrap();
        assert_abs_diff_eq!(x[0].re, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn euler_single_step() {
        let p = scalar_problem(-1.0, 0.0, 1.0, 1.0);
        // dt = 2*1/20 = 0.1
        let hist = multistep_solve(&p, &methods::euler(), 20, StartingScheme::Euler).unwrap();
        assert_abs_diff_eq!(hist.vectors[1][0].re, 0.9, epsilon = 1e-14);
    }

    #[test]
    fn constant_slope_ramp_is_exact() {
        // x' = 3 with dt = 0.5: x_j climbs by 1.5 per step for every method
        let p = scalar_problem(0.0, 3.0, 0.0, 2.0);
        for m in methods::registry() {
            let hist = multistep_solve(&p, &m, 8, StartingScheme::Euler).unwrap();
            for (j, x) in hist.vectors.iter().enumerate().take(5) {
                assert_abs_diff_eq!(x[0].re, 1.5 * j as f64, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bdf2_accuracy_on_diag() {
        let p = diag_problem();
        // dt = 0.01 -> N_t = 200
        let hist = multistep_solve(&p, &methods::bdf(2).unwrap(), 200, StartingScheme::Euler).unwrap();
        let exact = exact_solution(&p, 1.0).unwrap();
        let err = linalg::vec_norm(&(hist.vectors[100].clone() - exact));
        assert!(err <= 1e-3, "err = {err:.3e}");
    }

    #[test]
    fn history_constant_after_midpoint() {
        let p = diag_problem();
        let hist = multistep_solve(&p, &methods::bdf(3).unwrap(), 16, StartingScheme::Euler).unwrap();
        for j in 9..=16 {
            assert_eq!(hist.vectors[j], hist.vectors[8]);
        }
        assert_eq!(hist.len(), 17);
        assert_eq!(hist.times.len(), 17);
    }

    #[test]
    fn rejects_odd_or_small_step_counts() {
        let p = diag_problem();
        assert!(multistep_solve(&p, &methods::euler(), 7, StartingScheme::Euler).is_err());
        assert!(multistep_solve(&p, &methods::bdf(3).unwrap(), 4, StartingScheme::Euler).is_err());
    }

    #[test]
    fn convergence_rates_match_order() {
        // halving dt cuts the final error by about 2^p
        let p = diag_problem();
        let cases = [
            (methods::euler(), 1.0),
            (methods::trapezoidal(), 2.0),
            (methods::bdf(2).unwrap(), 2.0),
            (methods::bdf(3).unwrap(), 3.0),
            (methods::bdf(4).unwrap(), 4.0),
        ];
        let exact = exact_solution(&p, 1.0).unwrap();
        for (m, order) in cases {
            let mut errs = Vec::new();
            let nts = [16usize, 32, 64, 128, 256];
            for &n_t in &nts {
                let hist = multistep_solve(&p, &m, n_t, StartingScheme::PadeOrder4).unwrap();
                errs.push(linalg::vec_norm(&(hist.vectors[n_t / 2].clone() - exact.clone())));
            }
            // least-squares slope of log(err) against log(nt)
            let xs: Vec<f64> = nts.iter().map(|&n| (n as f64).ln()).collect();
            let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
            let xm = xs.iter().sum::<f64>() / xs.len() as f64;
            let ym = ys.iter().sum::<f64>() / ys.len() as f64;
            let slope: f64 = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (x - xm) * (y - ym))
                .sum::<f64>()
                / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
            assert!(
                (-slope - order).abs() <= 0.3,
                "{}: measured order {:.3}, expected {order}",
                m.name(),
                -slope
            );
        }
    }

    #[test]
    fn derivative_bounds() {
        let p = scalar_problem(-1.0, 0.0, 1.0, 1.0);
        let spec = eigen_condition(&p.a).unwrap();
        assert_abs_diff_eq!(derivative_norm_bound(&p, &spec, 2).unwrap(), 1.0, epsilon = 1e-12);

        let p2 = scalar_problem(-2.0, 4.0, 0.0, 1.0);
        let spec2 = eigen_condition(&p2.a).unwrap();
        assert_abs_diff_eq!(derivative_norm_bound(&p2, &spec2, 1).unwrap(), 4.0, epsilon = 1e-12);

        let a = array![[c(-0.1, 0.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(-0.1, 0.0)]];
        let p3 = OdeProblem::new(
            None,
            a.clone(),
            array![c(0.3, 0.0), c(0.0, 0.0)],
            array![c(1.0, 0.0), c(1.0, 0.0)],
            0.0,
            1.0,
            None,
        )
        .unwrap();
        let spec3 = eigen_condition(&a).unwrap();
        let a_norm = p3.a_norm();
        let expected = spec3.kappa_v * (a_norm.powi(3) * p3.x_in_norm() + a_norm.powi(2) * p3.b_norm());
        assert_abs_diff_eq!(
            derivative_norm_bound(&p3, &spec3, 3).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn derivative_bound_needs_wedge() {
        let p = scalar_problem(0.0, 1.0, 1.0, 1.0);
        let spec = eigen_condition(&p.a).unwrap();
        assert!(matches!(
            derivative_norm_bound(&p, &spec, 1),
            Err(Error::WedgeViolated { .. })
        ));
    }

    #[test]
    fn normal_decay_norm_non_increasing() {
        // homogeneous problems with normal A and Re(lambda) <= 0
        let problems = [
            OdeProblem::new(
                None,
                array![[c(-1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-2.0, 0.0)]],
                array![c(0.0, 0.0), c(0.0, 0.0)],
                array![c(1.0, 0.0), c(1.0, 0.0)],
                0.0,
                2.0,
                None,
            )
            .unwrap(),
            OdeProblem::new(
                None,
                array![[c(-0.01, 0.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(-0.01, 0.0)]],
                array![c(0.0, 0.0), c(0.0, 0.0)],
                array![c(1.0, 0.0), c(0.0, 0.0)],
                0.0,
                2.0,
                None,
            )
            .unwrap(),
        ];
        for p in &problems {
            let mut prev = f64::INFINITY;
            for i in 0..=20 {
                let t = i as f64 * 0.1;
                let x = exact_solution(p, t).unwrap();
                let n = linalg::vec_norm(&x);
                assert!(n <= prev + 1e-12, "norm grew at t = {t}");
                prev = n;
            }
        }
    }
}
