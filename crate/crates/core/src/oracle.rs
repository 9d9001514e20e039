//! Oracle-call accounting for the sparse access model.
//!
//! Assembly touches the problem data only through [`ProblemOracles`], which
//! mirrors the black-box access model: an element oracle for `A`, a locate
//! oracle for its nonzero positions, and value/locate oracles for `b` and
//! `x_in`. Every access increments the shared [`OracleCounter`].

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray_linalg::c64;
use serde::Serialize;

use crate::problem::OdeProblem;

/// Thread-safe oracle-call counters: monotone, reset only explicitly.
#[derive(Debug, Default)]
pub struct OracleCounter {
    a_element: AtomicU64,
    a_locate: AtomicU64,
    b: AtomicU64,
    x_in: AtomicU64,
}

/// A plain snapshot of [`OracleCounter`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OracleCounts {
    pub a_element_queries: u64,
    pub a_locate_queries: u64,
    pub b_queries: u64,
    pub x_in_queries: u64,
}

impl OracleCounts {
    pub fn total(&self) -> u64 {
        self.a_element_queries + self.a_locate_queries + self.b_queries + self.x_in_queries
    }
}

impl OracleCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> OracleCounts {
        OracleCounts {
            a_element_queries: self.a_element.load(Ordering::Relaxed),
            a_locate_queries: self.a_locate.load(Ordering::Relaxed),
            b_queries: self.b.load(Ordering::Relaxed),
            x_in_queries: self.x_in.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.a_element.store(0, Ordering::Relaxed);
        self.a_locate.store(0, Ordering::Relaxed);
        self.b.store(0, Ordering::Relaxed);
        self.x_in.store(0, Ordering::Relaxed);
    }
}

/// Counted access to a problem's data.
pub struct ProblemOracles<'a> {
    problem: &'a OdeProblem,
    counter: &'a OracleCounter,
}

impl<'a> ProblemOracles<'a> {
    pub fn new(problem: &'a OdeProblem, counter: &'a OracleCounter) -> Self {
        Self { problem, counter }
    }

    /// Row indices of nonzero entries in column `col`; one locate call per
    /// returned position.
    pub fn column_nonzero_rows(&self, col: usize) -> Vec<usize> {
        let rows: Vec<usize> = (0..self.problem.n_x())
            .filter(|&i| self.problem.a[(i, col)] != c64::new(0.0, 0.0))
            .collect();
        self.counter.a_locate.fetch_add(rows.len() as u64, Ordering::Relaxed);
        rows
    }

    /// Element oracle for `A`.
    pub fn a_element(&self, row: usize, col: usize) -> c64 {
        self.counter.a_element.fetch_add(1, Ordering::Relaxed);
        self.problem.a[(row, col)]
    }

    /// Nonzero entries of `b` as (index, value); one query per entry.
    pub fn b_nonzeros(&self) -> Vec<(usize, c64)> {
        let entries: Vec<(usize, c64)> = self
            .problem
            .b
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != c64::new(0.0, 0.0))
            .map(|(i, z)| (i, *z))
            .collect();
        self.counter.b.fetch_add(entries.len() as u64, Ordering::Relaxed);
        entries
    }

    /// Nonzero entries of `x_in` as (index, value); one query per entry.
    pub fn x_in_nonzeros(&self) -> Vec<(usize, c64)> {
        let entries: Vec<(usize, c64)> = self
            .problem
            .x_in
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != c64::new(0.0, 0.0))
            .map(|(i, z)| (i, *z))
            .collect();
        self.counter.x_in.fetch_add(entries.len() as u64, Ordering::Relaxed);
        entries
    }
}
