//! Encode first-order linear ODEs `x' = A x + b` as one sparse block linear
//! system via linear multistep methods, verify the stability, error, norm,
//! and condition-number behavior of the encoding classically, and model the
//! quantum linear-systems solution pipeline (history state, post-selection,
//! error budget, oracle-call estimates) at desk scale.
//!
//! # Modules
//!
//! - [`methods`]: multistep method registry (Euler, trapezoidal, BDF2-4),
//!   exact rational order conditions, stability domains and A(alpha) angles.
//! - [`encoder`]: assembly of the block system with oracle-call accounting,
//!   step-count selection, and the block-diagonal norm bound.
//! - [`reference`]: classical ground truth (matrix exponential, sequential
//!   multistep recurrence, eigendecomposition with conditioning data).
//! - [`analysis`]: condition-number sweeps, scaling fits, inverse-norm
//!   probes, global-error measurements.
//! - [`qlsa`]: history-state construction, post-selection with solver-error
//!   injection, and the oracle-call resource formulas.
//!
//! # Example
//!
//! ```
//! use ndarray::array;
//! use ndarray_linalg::c64;
//! use odeqls::{encoder, methods, problem::OdeProblem, qlsa};
//!
//! let problem = OdeProblem::new(
//!     None,
//!     array![[c64::new(-1.0, 0.0)]],
//!     array![c64::new(0.0, 0.0)],
//!     array![c64::new(1.0, 0.0)],
//!     0.0,
//!     1.0,
//!     None,
//! )
//! .unwrap();
//! let method = methods::bdf(2).unwrap();
//! let system = encoder::build_system(&problem, &method, 32, Default::default()).unwrap();
//! let state = qlsa::history_state(&system).unwrap();
//! assert!(state.p_time() > 0.25);
//! ```

pub mod analysis;
pub mod encoder;
pub mod error;
pub mod linalg;
pub mod methods;
pub mod oracle;
pub mod poly;
pub mod problem;
pub mod qlsa;
pub mod reference;

pub use error::{Error, Result};
