//! Gauge (Kurzweil-Henstock) integration for real functions with a finite set
//! of exceptional points.
//!
//! The crate is `no_std` and needs only `alloc`. It provides:
//!
//! * [`partition`]: intervals, tagged partitions, restriction to point sets,
//!   and δ-fineness.
//! * [`builder`]: constructive Cousin's lemma, anchored partitions, and
//!   straddle-verified partitions driven by a [`builder::RefinementSchedule`].
//! * [`model`]: a function `F`, its derivative `f` off the exceptional set
//!   `E`, and the zero extensions `F_ex`, `D_ex F`.
//! * [`summation`]: Riemann sums `Ξ_f`, increment sums `Σ_Φ`, and the
//!   E-restricted basic-sum sequence.
//! * [`integrator`]: the total integral `ℑ = F(b) − F(a)`, plain KH estimates,
//!   the decomposition `ℑ = A + ℜ`, and the residue identity.
//! * [`funcdsl`]: a small piecewise-function language and a catalog of
//!   reference models.

#![cfg_attr(not(test), no_std)]
// `!(a < b)` is used where NaN must take the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod builder;
pub mod funcdsl;
pub mod integrator;
pub mod model;
pub mod partition;
pub mod summation;
pub mod verdict;

pub use builder::{BuildError, BuildLimits, DepthParams, RefinementSchedule, TagPolicy};
pub use integrator::{
    decompose, plain_kh, residue_check, total_kh, DecomposeOptions, DecompositionReport,
    ResidueError, ResidueReport, TotalOptions, TotalReport,
};
pub use model::{EvalError, ExceptionalSet, RealFunction, SingularFunctionModel};
pub use partition::{Gauge, Interval, TaggedPair, TaggedPartition};
pub use verdict::{classify, classify_with, trace_of, ConvergenceVerdict, DepthValue, SequenceOptions, Sign};
