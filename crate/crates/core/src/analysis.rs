//! Empirical verification of the norm, condition-number, and error-scaling
//! bounds: condition numbers by SVD or power iteration, log-log scaling
//! fits over step-count sweeps, and randomized inverse-norm probes.

use ndarray::{Array1, Array2};
use ndarray_linalg::{c64, Factorize, Solve};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::encoder::{build_system, EncodedSystem, StartingScheme};
use crate::error::{Error, Result};
use crate::linalg;
use crate::methods::MultistepMethod;
use crate::problem::OdeProblem;
use crate::reference::{eigen_condition, exact_solution, multistep_solve};

/// Dimension up to which condition numbers use a full SVD.
pub const COND_SVD_LIMIT: usize = 2000;

/// `sigma_min / sigma_max` below which a matrix is reported singular.
pub const SINGULARITY_CUTOFF: f64 = 1e-14;

/// Relative tolerance of the iterative condition-number path.
pub const COND_ITER_TOL: f64 = 1e-4;

/// Sweep points with `dt ||A||` above this are excluded from scaling fits;
/// the bounds under test are asymptotic statements.
pub const FIT_WINDOW_DT_NORM: f64 = 0.5;

/// Spectral condition number `sigma_max / sigma_min`.
///
/// Full SVD up to [`COND_SVD_LIMIT`]; beyond that, power iteration for the
/// norm and inverse power iteration through an LU factorization for the
/// smallest singular value, both to [`COND_ITER_TOL`] relative.
pub fn condition_number(a: &Array2<c64>) -> Result<f64> {
    condition_number_with_cutoff(a, SINGULARITY_CUTOFF)
}

pub fn condition_number_with_cutoff(a: &Array2<c64>, cutoff: f64) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "condition number requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() <= COND_SVD_LIMIT {
        let sv = linalg::singular_values(a)?;
        let (smax, smin) = (sv[0], *sv.last().unwrap());
        if smin < cutoff * smax {
            return Err(Error::NumericallySingular {
                ratio: if smax > 0.0 { smin / smax } else { 0.0 },
            });
        }
        Ok(smax / smin)
    } else {
        let smax = linalg::spectral_norm(a);
        let inv_norm = inverse_spectral_norm(a)?;
        let smin = 1.0 / inv_norm;
        if smin < cutoff * smax {
            return Err(Error::NumericallySingular { ratio: smin / smax });
        }
        Ok(smax * inv_norm)
    }
}

/// `||A^{-1}||` by power iteration on `A^{-1} A^{-H}` through an LU solve.
fn inverse_spectral_norm(a: &Array2<c64>) -> Result<f64> {
    let n = a.nrows();
    let f = a
        .factorize()
        .map_err(|_| Error::NumericallySingular { ratio: 0.0 })?;
    let ah = a.t().mapv(|z| z.conj());
    let fh = ah
        .factorize()
        .map_err(|_| Error::NumericallySingular { ratio: 0.0 })?;
    let mut v: Array1<c64> =
        Array1::from_iter((0..n).map(|i| c64::new(1.0 + ((i % 5) as f64) * 0.2, 0.1)));
    let norm = linalg::vec_norm(&v);
    v.mapv_inplace(|z| z / norm);
    let mut estimate = 0.0;
    for _ in 0..500 {
        let w = f.solve(&v).map_err(|e| Error::Linalg(e.to_string()))?;
        let u = fh.solve(&w).map_err(|e| Error::Linalg(e.to_string()))?;
        let un = linalg::vec_norm(&u);
        if un == 0.0 {
            return Err(Error::NumericallySingular { ratio: 0.0 });
        }
        let next = un.sqrt();
        v = u.mapv(|z| z / un);
        if (next - estimate).abs() <= COND_ITER_TOL * next {
            return Ok(next);
        }
        estimate = next;
    }
    Ok(estimate)
}

/// Least-squares power-law fit on log-log axes.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    /// Slope of `ln y` against `ln x`.
    pub exponent: f64,
    /// Intercept in log space.
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

/// Fit `y ~ exp(intercept) x^exponent` to at least three strictly positive
/// points.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "scaling fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidInput(
            "scaling fit requires strictly positive coordinates".into(),
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let xm = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(
            "scaling fit requires at least two distinct abscissas".into(),
        ));
    }
    let exponent = sxy / sxx;
    let intercept = ym - exponent * xm;
    let ss_res: f64 = logs
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + exponent * p.0);
            r * r
        })
        .sum();
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - ym) * (p.1 - ym)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ScalingFit {
        exponent,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}

/// One point of a condition-number sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaRow {
    pub n_t: usize,
    pub dt: f64,
    pub kappa: f64,
    /// `kappa / (N_t kappa_V)`.
    pub ratio: f64,
}

/// Condition-number sweep against the `O(N_t kappa_V)` bound.
#[derive(Debug, Clone, Serialize)]
pub struct KappaSweep {
    pub rows: Vec<KappaRow>,
    pub fit: ScalingFit,
    pub kappa_v: f64,
    /// Set when the ratio `kappa / (N_t kappa_V)` drifts by more than 10x
    /// across the sweep, i.e. the claimed linearity fails empirically.
    pub violation: bool,
}

/// Sweep `kappa(A_system)` over step counts and fit the growth exponent.
///
/// Requires `dt ||A|| <= 1` across the sweep and a diagonalizable `A` with
/// eigenvalues in the left-half-plane wedge.
pub fn verify_kappa_bound(
    problem: &OdeProblem,
    method: &MultistepMethod,
    nt_sweep: &[usize],
) -> Result<KappaSweep> {
    let spectral = eigen_condition(&problem.a)?;
    if !spectral.wedge_satisfied() {
        return Err(Error::WedgeViolated {
            angle: spectral.wedge_angle,
        });
    }
    let a_norm = problem.a_norm();
    let mut rows = Vec::with_capacity(nt_sweep.len());
    for &n_t in nt_sweep {
        let dt = 2.0 * problem.delta_t / n_t as f64;
        if dt * a_norm > 1.0 {
            return Err(Error::InvalidInput(format!(
                "dt ||A|| = {:.3e} at N_t = {n_t} exceeds 1; refine the sweep",
                dt * a_norm
            )));
        }
        let system = build_system(problem, method, n_t, StartingScheme::Euler)?;
        let kappa = condition_number(&system.to_dense())?;
        rows.push(KappaRow {
            n_t,
            dt,
            kappa,
            ratio: kappa / (n_t as f64 * spectral.kappa_v),
        });
    }
    let fit = fit_scaling(
        &rows
            .iter()
            .map(|r| (r.n_t as f64, r.kappa))
            .collect::<Vec<_>>(),
    )?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let rmin = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmax = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(KappaSweep {
        rows,
        fit,
        kappa_v: spectral.kappa_v,
        violation: rmax > 10.0 * rmin,
    })
}

/// Max response norm `||A_system^{-1} y||` over random unit excitations.
///
/// Every excitation of a stable discretization displaces the solution by a
/// bounded amount for the remaining steps, so the response stays within a
/// method constant of `N_t kappa_V`.
pub fn inverse_norm_probe(system: &EncodedSystem, trials: usize, rng_seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidInput("probe needs at least one trial".into()));
    }
    let dense = system.to_dense();
    let f = dense
        .factorize()
        .map_err(|e| Error::Linalg(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let dim = system.dim();
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let y = random_unit_vector(dim, &mut rng);
        let z = f.solve(&y).map_err(|_| Error::NumericallySingular { ratio: 0.0 })?;
        worst = worst.max(linalg::vec_norm(&z));
    }
    Ok(worst)
}

pub(crate) fn random_unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Array1<c64> {
    let normal = StandardNormal;
    let mut y = Array1::<c64>::zeros(dim);
    for z in y.iter_mut() {
        let re: f64 = normal.sample(rng);
        let im: f64 = normal.sample(rng);
        *z = c64::new(re, im);
    }
    let norm = linalg::vec_norm(&y);
    y.mapv(|z| z / norm)
}

/// Measured final-time error against the scaling bound with unit constant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GlobalError {
    pub n_t: usize,
    pub dt: f64,
    pub dt_a_norm: f64,
    /// `||x(t0 + delta_t) - x_{N_t/2}||`.
    pub error: f64,
    /// `kappa_V^2 (||x_in|| + ||b||/||A||) [kappa_V (dt ||A||)^2 + m (dt ||A||)^{p+1}]`
    /// with unit constant and `m = N_t/2`.
    pub bound: f64,
}

/// Run the recurrence and compare its held final value against the closed
/// form, alongside the error bound with unit constant.
pub fn global_error(
    problem: &OdeProblem,
    method: &MultistepMethod,
    n_t: usize,
    starting: StartingScheme,
) -> Result<GlobalError> {
    let history = multistep_solve(problem, method, n_t, starting)?;
    let exact = exact_solution(problem, problem.t0 + problem.delta_t)?;
    let error = linalg::vec_norm(&(history.vectors[n_t / 2].clone() - exact));
    let dt = 2.0 * problem.delta_t / n_t as f64;
    let a_norm = problem.a_norm();
    let bound = if a_norm == 0.0 {
        0.0
    } else {
        let spectral = eigen_condition(&problem.a)?;
        let p = method.order(crate::methods::DEFAULT_ORDER_CAP) as i32;
        let x = dt * a_norm;
        let m = (n_t / 2) as f64;
        spectral.kappa_v.powi(2)
            * problem.norm_sum()
            * (spectral.kappa_v * x.powi(2) + m * x.powi(p + 1))
    };
    Ok(GlobalError {
        n_t,
        dt,
        dt_a_norm: dt * a_norm,
        error,
        bound,
    })
}

/// Error sweep over step counts with a scaling fit on the points inside the
/// asymptotic window (`dt ||A|| <= FIT_WINDOW_DT_NORM`). The fit is absent
/// when fewer than three usable points remain or errors are identically zero.
pub fn error_sweep(
    problem: &OdeProblem,
    method: &MultistepMethod,
    nt_sweep: &[usize],
    starting: StartingScheme,
) -> Result<(Vec<GlobalError>, Option<ScalingFit>)> {
    error_sweep_with_window(problem, method, nt_sweep, starting, FIT_WINDOW_DT_NORM)
}

pub fn error_sweep_with_window(
    problem: &OdeProblem,
    method: &MultistepMethod,
    nt_sweep: &[usize],
    starting: StartingScheme,
    window: f64,
) -> Result<(Vec<GlobalError>, Option<ScalingFit>)> {
    let mut rows = Vec::with_capacity(nt_sweep.len());
    for &n_t in nt_sweep {
        rows.push(global_error(problem, method, n_t, starting)?);
    }
    let usable: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.dt_a_norm <= window && r.error > 0.0)
        .map(|r| (r.n_t as f64, r.error))
        .collect();
    let fit = fit_scaling(&usable).ok();
    Ok((rows, fit))
}
