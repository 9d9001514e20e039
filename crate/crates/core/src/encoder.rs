//! Assembly of the block linear system encoding a multistep discretization.
//!
//! For an even step count `N_t >= 2k` the system has `N_t + 1` block rows of
//! dimension `N_x`:
//!
//! - row 0 pins the initial value,
//! - rows `1..k` are starting steps,
//! - rows `k..=N_t/2` carry the k-step recurrence
//!   `A_{j,j-k+l} = alpha_l I - beta_l A dt`,
//! - rows above `N_t/2` enforce `x_{j} - x_{j-1} = 0`, holding the solution
//!   constant over the second half so a time measurement in that window
//!   yields the final state.
//!
//! Assembly reads the problem only through the counted oracles.

use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2};
use ndarray_linalg::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::methods::MultistepMethod;
use crate::oracle::{OracleCounter, OracleCounts, ProblemOracles};
use crate::problem::OdeProblem;
use crate::reference::{check_step_count, pade22_blocks};

/// `dt ||A||` above which assembly logs a warning: the norm bound on the
/// assembled matrix assumes `dt = O(1/||A||)`.
pub const DT_NORM_WARN_THRESHOLD: f64 = 1.0;

/// The scheme used for the starting rows `1 <= j < k`.
///
/// `Euler` is the explicit first-order scheme the block layout is defined
/// with. Its starting values carry `O(dt^2)` error, which caps the observable
/// global order of k-step methods with `p > 2`; `PadeOrder4` replaces the
/// starting rows with locally fourth-order (2,2) Pade steps so that methods
/// up to order 4 exhibit their full convergence rate. Both schemes use the
/// same right-hand side and keep the system block-lower-banded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartingScheme {
    #[default]
    Euler,
    PadeOrder4,
}

impl StartingScheme {
    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "euler" => Ok(Self::Euler),
            "pade4" | "pade22" | "pade_order4" => Ok(Self::PadeOrder4),
            other => Err(Error::InvalidInput(format!(
                "unknown starting scheme '{other}' (expected euler or pade4)"
            ))),
        }
    }
}

impl std::fmt::Display for StartingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Euler => write!(f, "euler"),
            Self::PadeOrder4 => write!(f, "pade4"),
        }
    }
}

/// Structural role of a block in the assembled matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BlockKind {
    /// Identity on the diagonal (initial row and constant rows).
    Identity,
    /// `-I` under the diagonal in the constant rows.
    NegIdentity,
    /// Diagonal block of a starting row.
    StartDiag,
    /// Subdiagonal block of a starting row.
    StartSub,
    /// `alpha_l I - beta_l A dt` at offset `l` in a recurrence row.
    Multistep(usize),
}

/// One block placement: block row, block column, and the block's role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockEntry {
    pub row: usize,
    pub col: usize,
    pub kind: BlockKind,
}

/// The assembled block system with its right-hand side and the oracle-call
/// tally from assembly. Blocks are deduplicated: placements reference one
/// materialized matrix per role.
#[derive(Debug, Clone)]
pub struct EncodedSystem {
    pub method: MultistepMethod,
    pub starting: StartingScheme,
    pub n_t: usize,
    pub n_x: usize,
    pub dt: f64,
    pub entries: Vec<BlockEntry>,
    blocks: BTreeMap<BlockKind, Array2<c64>>,
    pub rhs: Array1<c64>,
    pub oracle_counts: OracleCounts,
    /// Spectral norm of `A` observed during assembly.
    pub a_norm: f64,
    /// `dt ||A||`; above [`DT_NORM_WARN_THRESHOLD`] the norm bound degrades.
    pub dt_a_norm: f64,
}

impl EncodedSystem {
    /// Total scalar dimension `(N_t + 1) N_x`.
    pub fn dim(&self) -> usize {
        (self.n_t + 1) * self.n_x
    }

    /// The materialized matrix for a block role.
    pub fn block(&self, kind: BlockKind) -> &Array2<c64> {
        &self.blocks[&kind]
    }

    /// Block placed at (row, col), if any.
    pub fn block_at(&self, row: usize, col: usize) -> Option<&Array2<c64>> {
        self.entries
            .iter()
            .find(|e| e.row == row && e.col == col)
            .map(|e| self.block(e.kind))
    }

    /// Dense realization of the block matrix.
    pub fn to_dense(&self) -> Array2<c64> {
        let n = self.n_x;
        let mut out = Array2::<c64>::zeros((self.dim(), self.dim()));
        for e in &self.entries {
            out.slice_mut(s![e.row * n..(e.row + 1) * n, e.col * n..(e.col + 1) * n])
                .assign(self.block(e.kind));
        }
        out
    }

    /// Scalar coordinate triplets (row, col, value) of all nonzero entries.
    pub fn scalar_triplets(&self) -> Vec<(usize, usize, c64)> {
        let n = self.n_x;
        let mut out = Vec::new();
        for e in &self.entries {
            let block = self.block(e.kind);
            for i in 0..n {
                for j in 0..n {
                    let v = block[(i, j)];
                    if v != c64::new(0.0, 0.0) {
                        out.push((e.row * n + i, e.col * n + j, v));
                    }
                }
            }
        }
        out.sort_by_key(|&(i, j, _)| (i, j));
        out
    }

    /// Number of nonzero scalar entries.
    pub fn nnz(&self) -> usize {
        self.scalar_triplets().len()
    }

    /// Solve the assembled system densely by LU.
    pub fn solve_dense(&self) -> Result<Array1<c64>> {
        linalg::solve(&self.to_dense(), &self.rhs)
    }

    /// Solution history reshaped into per-step blocks.
    pub fn solve_history(&self) -> Result<Vec<Array1<c64>>> {
        let x = self.solve_dense()?;
        Ok((0..=self.n_t)
            .map(|j| x.slice(s![j * self.n_x..(j + 1) * self.n_x]).to_owned())
            .collect())
    }

    pub fn rhs_norm(&self) -> f64 {
        linalg::vec_norm(&self.rhs)
    }
}

/// Assemble the block system, counting oracle calls into `counter`.
pub fn build_system_counted(
    problem: &OdeProblem,
    method: &MultistepMethod,
    n_t: usize,
    starting: StartingScheme,
    counter: &OracleCounter,
) -> Result<EncodedSystem> {
    let k = method.k();
    check_step_count(n_t, k)?;
    let n = problem.n_x();
    let dt = 2.0 * problem.delta_t / n_t as f64;

    // Pull A, b, x_in once through the oracles; all blocks reuse the result.
    let oracles = ProblemOracles::new(problem, counter);
    let mut a = Array2::<c64>::zeros((n, n));
    for col in 0..n {
        for row in oracles.column_nonzero_rows(col) {
            a[(row, col)] = oracles.a_element(row, col);
        }
    }
    let mut b = Array1::<c64>::zeros(n);
    for (i, v) in oracles.b_nonzeros() {
        b[i] = v;
    }
    let mut x_in = Array1::<c64>::zeros(n);
    for (i, v) in oracles.x_in_nonzeros() {
        x_in[i] = v;
    }

    let a_norm = linalg::spectral_norm(&a);
    let dt_a_norm = dt * a_norm;
    if dt_a_norm > DT_NORM_WARN_THRESHOLD {
        log::warn!(
            "dt ||A|| = {dt_a_norm:.3e} exceeds {DT_NORM_WARN_THRESHOLD}; \
             the O(1) norm bound on the assembled matrix no longer applies"
        );
    }

    let eye = linalg::identity(n);
    let a_dt = a.mapv(|z| z * dt);

    let mut blocks = BTreeMap::new();
    blocks.insert(BlockKind::Identity, eye.clone());
    blocks.insert(BlockKind::NegIdentity, eye.mapv(|z| -z));
    if k >= 2 {
        let (diag, sub) = match starting {
            StartingScheme::Euler => (eye.clone(), (&eye + &a_dt).mapv(|z| -z)),
            StartingScheme::PadeOrder4 => {
                let (q, p) = pade22_blocks(&a_dt, n);
                (q, p.mapv(|z| -z))
            }
        };
        blocks.insert(BlockKind::StartDiag, diag);
        blocks.insert(BlockKind::StartSub, sub);
    }
    for (l, (&alpha, &beta)) in method
        .alphas_f64()
        .iter()
        .zip(method.betas_f64())
        .enumerate()
    {
        let m = &eye.mapv(|z| z * alpha) - &a_dt.mapv(|z| z * beta);
        blocks.insert(BlockKind::Multistep(l), m);
    }

    let mut entries = Vec::new();
    entries.push(BlockEntry {
        row: 0,
        col: 0,
        kind: BlockKind::Identity,
    });
    for j in 1..k {
        entries.push(BlockEntry {
            row: j,
            col: j,
            kind: BlockKind::StartDiag,
        });
        entries.push(BlockEntry {
            row: j,
            col: j - 1,
            kind: BlockKind::StartSub,
        });
    }
    for j in k..=(n_t / 2) {
        for l in 0..=k {
            entries.push(BlockEntry {
                row: j,
                col: j - k + l,
                kind: BlockKind::Multistep(l),
            });
        }
    }
    for j in (n_t / 2 + 1)..=n_t {
        entries.push(BlockEntry {
            row: j,
            col: j,
            kind: BlockKind::Identity,
        });
        entries.push(BlockEntry {
            row: j,
            col: j - 1,
            kind: BlockKind::NegIdentity,
        });
    }
    entries.sort_by_key(|e| (e.row, e.col));
    debug_assert!(
        entries.windows(2).all(|w| (w[0].row, w[0].col) != (w[1].row, w[1].col)),
        "duplicate block placement"
    );

    let beta_sum = method.beta_sum_f64();
    let b_dt = b.mapv(|z| z * dt);
    let mut rhs = Array1::<c64>::zeros((n_t + 1) * n);
    rhs.slice_mut(s![0..n]).assign(&x_in);
    for j in 1..k {
        rhs.slice_mut(s![j * n..(j + 1) * n]).assign(&b_dt);
    }
    for j in k..=(n_t / 2) {
        rhs.slice_mut(s![j * n..(j + 1) * n])
            .assign(&b_dt.mapv(|z| z * beta_sum));
    }

    Ok(EncodedSystem {
        method: method.clone(),
        starting,
        n_t,
        n_x: n,
        dt,
        entries,
        blocks,
        rhs,
        oracle_counts: counter.snapshot(),
        a_norm,
        dt_a_norm,
    })
}

/// Assemble with a fresh oracle counter; the tally lands in
/// `EncodedSystem::oracle_counts`.
pub fn build_system(
    problem: &OdeProblem,
    method: &MultistepMethod,
    n_t: usize,
    starting: StartingScheme,
) -> Result<EncodedSystem> {
    let counter = OracleCounter::new();
    build_system_counted(problem, method, n_t, starting, &counter)
}

/// Step-count choice for a target error budget.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimeStepChoice {
    /// Chosen step count: the scaling value rounded up to the next even
    /// integer and clamped to at least `2k`.
    pub n_t: usize,
    /// Raw value of `C (||A|| dt)^{1+1/p} sqrt(kappa_V^3 (||x_in|| + ||b||/||A||) / eps)`.
    pub scaling_value: f64,
    /// The simpler `(||A|| dt)^{1+1/p} / eps^{1/p}` comparison value.
    pub simple_value: f64,
}

/// Choose `N_t` from the error budget.
///
/// With `||A|| = 0` the solution is linear in time and any admissible step
/// count works; the minimum `max(2k, 2)` is returned.
pub fn choose_time_steps(
    problem: &OdeProblem,
    method: &MultistepMethod,
    epsilon: f64,
    kappa_v: f64,
    constant: f64,
) -> Result<TimeStepChoice> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(kappa_v >= 1.0) {
        return Err(Error::InvalidInput(format!("kappa_V must be >= 1, got {kappa_v}")));
    }
    if !(constant > 0.0) {
        return Err(Error::InvalidInput(format!("constant must be positive, got {constant}")));
    }
    let p = method.order(crate::methods::DEFAULT_ORDER_CAP);
    if p == 0 {
        return Err(Error::InvalidMethod(format!(
            "{} is inconsistent (order 0); no step count achieves the budget",
            method.name()
        )));
    }
    let k = method.k();
    let a_norm = problem.a_norm();
    if a_norm == 0.0 {
        return Ok(TimeStepChoice {
            n_t: (2 * k).max(2),
            scaling_value: 0.0,
            simple_value: 0.0,
        });
    }
    let x = a_norm * problem.delta_t;
    let pf = p as f64;
    let scaling_value =
        constant * x.powf(1.0 + 1.0 / pf) * (kappa_v.powi(3) * problem.norm_sum() / epsilon).sqrt();
    let simple_value = x.powf(1.0 + 1.0 / pf) / epsilon.powf(1.0 / pf);
    let n_t = even_ceil(scaling_value).max(2 * k);
    Ok(TimeStepChoice {
        n_t,
        scaling_value,
        simple_value,
    })
}

fn even_ceil(v: f64) -> usize {
    let c = v.ceil().max(2.0) as usize;
    if c % 2 == 0 {
        c
    } else {
        c + 1
    }
}

/// Triangle-inequality norm bound across block diagonals, against the
/// computed spectral norm of the assembled matrix.
#[derive(Debug, Clone, Serialize)]
pub struct NormBound {
    /// Sum over block diagonals of the largest block norm on that diagonal.
    pub bound: f64,
    /// Largest singular value of the assembled matrix.
    pub computed_norm: f64,
    /// Largest block norm per diagonal offset `0..=k`.
    pub diagonal_bounds: Vec<f64>,
}

/// Compute the block-diagonal norm bound and the actual spectral norm.
pub fn matrix_norm_bound(system: &EncodedSystem) -> NormBound {
    let k = system.method.k();
    let mut block_norms: BTreeMap<BlockKind, f64> = BTreeMap::new();
    for e in &system.entries {
        block_norms
            .entry(e.kind)
            .or_insert_with(|| linalg::spectral_norm(system.block(e.kind)));
    }
    let mut diagonal_bounds = vec![0.0_f64; k + 1];
    for e in &system.entries {
        let offset = e.row - e.col;
        diagonal_bounds[offset] = diagonal_bounds[offset].max(block_norms[&e.kind]);
    }
    NormBound {
        bound: diagonal_bounds.iter().sum(),
        computed_norm: linalg::spectral_norm(&system.to_dense()),
        diagonal_bounds,
    }
}
