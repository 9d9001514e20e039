//! The first-order linear ODE problem `x' = A x + b` on `[t0, t0 + delta_t]`
//! with initial value `x_in` and a declared sparsity bound, plus its JSON
//! file format.

use ndarray::{Array1, Array2};
use ndarray_linalg::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Constant-coefficient linear ODE problem.
///
/// `s` bounds the number of nonzero entries in any row or column of `A` and
/// the nonzero counts of `b` and `x_in`; the element/locate oracles expose at
/// most `s` entries per query sweep.
#[derive(Debug, Clone)]
pub struct OdeProblem {
    pub name: Option<String>,
    pub a: Array2<c64>,
    pub b: Array1<c64>,
    pub x_in: Array1<c64>,
    pub t0: f64,
    pub delta_t: f64,
    pub s: usize,
}

/// Observed nonzero structure of a problem.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SparsityAudit {
    pub max_row_nnz: usize,
    pub max_col_nnz: usize,
    pub b_nnz: usize,
    pub x_in_nnz: usize,
}

impl SparsityAudit {
    pub fn required_bound(&self) -> usize {
        self.max_row_nnz
            .max(self.max_col_nnz)
            .max(self.b_nnz)
            .max(self.x_in_nnz)
    }
}

impl OdeProblem {
    /// Build a problem, checking dimensions and the sparsity declaration.
    /// With `s = None` the observed bound is adopted.
    pub fn new(
        name: Option<String>,
        a: Array2<c64>,
        b: Array1<c64>,
        x_in: Array1<c64>,
        t0: f64,
        delta_t: f64,
        s: Option<usize>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != n || x_in.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {n}x{n} but b has {} entries and x_in has {}",
                b.len(),
                x_in.len()
            )));
        }
        if !(delta_t > 0.0) {
            return Err(Error::InvalidInput(format!(
                "delta_t must be positive, got {delta_t}"
            )));
        }
        let mut problem = Self {
            name,
            a,
            b,
            x_in,
            t0,
            delta_t,
            s: 0,
        };
        let audit = problem.sparsity_audit();
        let required = audit.required_bound().max(1);
        match s {
            None => problem.s = required,
            Some(declared) => {
                if declared < required {
                    return Err(Error::InvalidInput(format!(
                        "declared sparsity s = {declared} is below the observed bound {required} \
                         (max row nnz {}, max col nnz {}, b nnz {}, x_in nnz {})",
                        audit.max_row_nnz, audit.max_col_nnz, audit.b_nnz, audit.x_in_nnz
                    )));
                }
                problem.s = declared;
            }
        }
        Ok(problem)
    }

    pub fn n_x(&self) -> usize {
        self.a.nrows()
    }

    /// Spectral norm of `A`.
    pub fn a_norm(&self) -> f64 {
        linalg::spectral_norm(&self.a)
    }

    pub fn b_norm(&self) -> f64 {
        linalg::vec_norm(&self.b)
    }

    pub fn x_in_norm(&self) -> f64 {
        linalg::vec_norm(&self.x_in)
    }

    /// `||x_in|| + ||b|| / ||A||`; the norm combination every bound carries.
    /// Returns `||x_in||` when `A = 0`.
    pub fn norm_sum(&self) -> f64 {
        let an = self.a_norm();
        if an == 0.0 {
            self.x_in_norm()
        } else {
            self.x_in_norm() + self.b_norm() / an
        }
    }

    pub fn sparsity_audit(&self) -> SparsityAudit {
        let n = self.n_x();
        let mut max_row = 0;
        let mut max_col = 0;
        for i in 0..n {
            let row = (0..n).filter(|&j| self.a[(i, j)] != c64::new(0.0, 0.0)).count();
            let col = (0..n).filter(|&j| self.a[(j, i)] != c64::new(0.0, 0.0)).count();
            max_row = max_row.max(row);
            max_col = max_col.max(col);
        }
        SparsityAudit {
            max_row_nnz: max_row,
            max_col_nnz: max_col,
            b_nnz: self.b.iter().filter(|z| **z != c64::new(0.0, 0.0)).count(),
            x_in_nnz: self.x_in.iter().filter(|z| **z != c64::new(0.0, 0.0)).count(),
        }
    }

    /// Rows of `A` whose nonzero count exceeds the declared bound; used by
    /// validation to point at offending rows.
    pub fn rows_exceeding(&self, bound: usize) -> Vec<(usize, usize)> {
        let n = self.n_x();
        (0..n)
            .filter_map(|i| {
                let nnz = (0..n).filter(|&j| self.a[(i, j)] != c64::new(0.0, 0.0)).count();
                (nnz > bound).then_some((i, nnz))
            })
            .collect()
    }
}

/// A scalar entry in a problem file: a bare number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntrySpec {
    Real(f64),
    Complex([f64; 2]),
}

impl EntrySpec {
    fn to_c64(self) -> c64 {
        match self {
            EntrySpec::Real(re) => c64::new(re, 0.0),
            EntrySpec::Complex([re, im]) => c64::new(re, im),
        }
    }
}

/// A coordinate entry: `[i, j, re]` or `[i, j, re, im]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CooEntry {
    Real(usize, usize, f64),
    Complex(usize, usize, f64, f64),
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dense: Option<Vec<Vec<EntrySpec>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coo: Option<Vec<CooEntry>>,
}

/// Problem file schema.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "A")]
    pub a: MatrixSpec,
    pub b: Vec<EntrySpec>,
    pub x_in: Vec<EntrySpec>,
    pub t0: f64,
    pub delta_t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<OdeProblem> {
        let n = self.b.len();
        let a = match (self.a.dense, self.a.coo) {
            (Some(rows), None) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::DimensionMismatch(format!(
                        "dense A must be {n}x{n} to match b"
                    )));
                }
                let mut m = Array2::<c64>::zeros((n, n));
                for (i, row) in rows.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        m[(i, j)] = e.to_c64();
                    }
                }
                m
            }
            (None, Some(entries)) => {
                let mut m = Array2::<c64>::zeros((n, n));
                for e in entries {
                    let (i, j, v) = match e {
                        CooEntry::Real(i, j, re) => (i, j, c64::new(re, 0.0)),
                        CooEntry::Complex(i, j, re, im) => (i, j, c64::new(re, im)),
                    };
                    if i >= n || j >= n {
                        return Err(Error::DimensionMismatch(format!(
                            "coo entry ({i}, {j}) outside {n}x{n} matrix"
                        )));
                    }
                    m[(i, j)] = v;
                }
                m
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInput(
                    "A must specify exactly one of dense or coo, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidInput("A must specify dense or coo".into()))
            }
        };
        let b = Array1::from_iter(self.b.iter().map(|e| e.to_c64()));
        let x_in = Array1::from_iter(self.x_in.iter().map(|e| e.to_c64()));
        OdeProblem::new(self.name, a, b, x_in, self.t0, self.delta_t, self.s)
    }

    pub fn from_problem(p: &OdeProblem) -> Self {
        let n = p.n_x();
        let entry = |z: c64| {
            if z.im == 0.0 {
                EntrySpec::Real(z.re)
            } else {
                EntrySpec::Complex([z.re, z.im])
            }
        };
        let dense = (0..n)
            .map(|i| (0..n).map(|j| entry(p.a[(i, j)])).collect())
            .collect();
        Self {
            name: p.name.clone(),
            a: MatrixSpec {
                dense: Some(dense),
                coo: None,
            },
            b: p.b.iter().map(|&z| entry(z)).collect(),
            x_in: p.x_in.iter().map(|&z| entry(z)).collect(),
            t0: p.t0,
            delta_t: p.delta_t,
            s: Some(p.s),
        }
    }
}

/// Parse a problem from JSON text.
pub fn problem_from_json(text: &str) -> Result<OdeProblem> {
    let file: ProblemFile = serde_json::from_str(text)?;
    file.into_problem()
}

/// Outcome of structural validation of a problem file, with human-readable
/// errors and non-fatal advisories.
#[derive(Debug, Default)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub advisories: Vec<String>,
    pub problem: Option<OdeProblem>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Validate JSON text: parse, check dimensions and the declared sparsity, and
/// attach spectral advisories (eigenvalue wedge, conditioning of the
/// eigenbasis). Spectral defects are advisories, not errors.
pub fn validate_problem_json(text: &str) -> ValidationReport {
    let mut report = ValidationReport::default();
    let file: ProblemFile = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => {
            report.errors.push(format!("parse error: {e}"));
            return report;
        }
    };
    let declared = file.s;
    let problem = match file.into_problem() {
        Ok(p) => p,
        Err(e) => {
            // Point at the offending rows when the sparsity bound is the issue.
            report.errors.push(e.to_string());
            if let Some(bound) = declared {
                if let Ok(loose) = reparse_without_sparsity(text) {
                    for (row, nnz) in loose.rows_exceeding(bound) {
                        report
                            .errors
                            .push(format!("row {row} of A has {nnz} nonzeros > declared s = {bound}"));
                    }
                }
            }
            return report;
        }
    };
    match crate::reference::eigen_condition(&problem.a) {
        Ok(spectral) => {
            if !spectral.wedge_satisfied() {
                report.advisories.push(format!(
                    "eigenvalue wedge violated: max |arg(-lambda)| = {:.6} rad >= pi/2; \
                     stability and error bounds do not apply",
                    spectral.wedge_angle
                ));
            } else {
                report.advisories.push(format!(
                    "wedge angle {:.6} rad, kappa_V = {:.6e}",
                    spectral.wedge_angle, spectral.kappa_v
                ));
            }
        }
        Err(e) => report
            .advisories
            .push(format!("spectral analysis unavailable: {e}")),
    }
    report.problem = Some(problem);
    report
}

fn reparse_without_sparsity(text: &str) -> Result<OdeProblem> {
    let mut file: ProblemFile = serde_json::from_str(text)?;
    file.s = None;
    file.into_problem()
}
