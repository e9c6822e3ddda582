//! Reject-option strategies for classifiers facing out-of-distribution inputs.
//!
//! The crate covers three layers:
//!
//! * [`synth_world`] and [`reject_models`]: a known 1-D Gaussian world where
//!   the Bayes classifier, its conditional risk `r(x)` and the OOD/ID
//!   likelihood ratio `g(x)` are exact, plus the optimal selective rules of
//!   the cost-based, bounded TPR-FPR and bounded precision-recall models,
//!   evaluated by quadrature.
//! * [`posthoc`], [`curves`] and [`scorefile`]: empirical tuning of
//!   single-score rules `s(x) <= λ` and double-score rules
//!   `s_r(x)·cos α + s_g(x)·sin α <= λ` on validation score files, with ROC,
//!   PR, risk-coverage-at-FPR and CCR-FPR curves.
//! * [`finite_lp`]: the exact bounded TPR-FPR problem on a finite input
//!   space, solved as a two-row linear program.
//!
//! [`cli`] wires everything into the `ood-reject` binary.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod curves;
pub mod error;
pub mod finite_lp;
pub mod posthoc;
pub mod quadrature;
pub mod reject_models;
pub mod scorefile;
pub mod simplex;
pub mod svg;
pub mod synth_world;

pub use error::{Error, Result};
