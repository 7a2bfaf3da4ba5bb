//! Lower and upper bounds for the autoconvolution constant
//! `c = inf_f sup_x (f*f)(x)` over nonnegative `f` on `(-1/4, 1/4)` with unit mass.
//!
//! Splitting `(-1/4, 1/4)` into `2n` intervals turns any such `f` into a
//! coefficient vector in the simplex `A_n`, and every window average of `f*f`
//! is bounded below by a quadratic form in those coefficients. The minimum
//! over `A_n` of the largest window form, `a_n`, is therefore a lower bound
//! for `c`.
//!
//! - [`objective`] evaluates the window max for one profile.
//! - [`lattice`] and [`certify`] turn a finite mesh into a certified lower bound on `a_n`.
//! - [`search`] finds profiles with small objective (upper bounds on `a_n`).

pub mod certify;
pub mod constants;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod objective;
pub mod profile;
pub mod scalar;
pub mod search;
pub mod window;

pub use certify::{
    certify_cells, certify_global, lipschitz_constant, resume, run, Certificate, CertifyJob, CertifyOutcome,
    Checkpoint, Method, RunOptions,
};
pub use constants::{c_from_sigma, sigma_from_c, ScaledConstants};
pub use error::{Error, Result};
pub use lattice::{
    composition_count, covering_radius_l1, enumerate_compositions, exact_window_numerator, ChunkCursor,
    LatticePoint, MeshSpec,
};
pub use objective::{
    autoconvolve, objective, objective_bruteforce, step_sup, window_value, AutoconvolutionSequence, Evaluation,
};
pub use profile::{make_profile, project_to_simplex, CoefficientProfile, RationalProfile};
pub use search::{local_descent, multistart, polish_symmetric, random_profile, SearchConfig, SearchResult};
pub use window::{window_set, RangeMode, WindowIndex};
