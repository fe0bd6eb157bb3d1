//! Calculus of multiplicative flows, cocycles and semi-additive functionals,
//! as used in the study of self-similar symmetric α-stable mixed moving
//! averages.
//!
//! The crate provides:
//!
//! * the three canonical nonsingular flow normal forms (identity,
//!   dissipative translation, cyclic seesaw) together with special-flow
//!   representations ([`flowspace`]),
//! * cocycle constructors and a sampling law verifier ([`cocycle`]),
//! * closed-form 1- and 2-semi-additive functional solutions per flow
//!   family, coboundary/special-flow constructions, and the `G̃ₙ`
//!   calculus ([`functional`]),
//! * mixed-moving-average kernels, the generation-relation residual and
//!   self-similarity certification through the α-norm characteristic
//!   exponent ([`kernel`], [`quadrature`]),
//! * SαS random variates and reproducible Monte Carlo path simulation
//!   with empirical characteristic-function validation ([`simulate`]),
//! * a key-value configuration layer shared with the CLI ([`config`]).
//!
//! Heavy inner loops (verification sampling, quadrature cells, Monte
//! Carlo paths) are data-parallel. With the default `parallel` feature
//! they run on rayon; results are bit-identical to the sequential
//! fallback because every work item owns its own random substream and
//! reductions are performed in a fixed order.

pub mod cocycle;
pub mod config;
pub mod defaults;
pub mod error;
pub mod exec;
pub mod expr;
pub mod flowspace;
pub mod functional;
pub mod kernel;
pub mod quadrature;
pub mod report;
pub mod simulate;

pub use cocycle::{verify_cocycle, Codomain, Cocycle, Hurst, VerifyConfig};
pub use error::{Error, Result};
pub use exec::RunMode;
pub use flowspace::{floor_mod, group_law_check, Action, FlowSpace, Point, SpecialRep};
pub use functional::{
    decompose_check, g_tilde_n, verify_functional, FunctionalKind, SemiAdditiveFunctional,
    SignSpec,
};
pub use kernel::{
    charfun_exponent, check_self_similarity, check_stationary_increments, ExponentConfig, Kernel,
    KernelFiber, KernelShape,
};
pub use report::VerificationReport;
pub use simulate::{
    empirical_charfun, graded_grid, mc_charfun_check, sas_sample, selfsim_mc_check,
    simulate_paths, GridConfig, PathMatrix, SimConfig, SimGrid,
};
