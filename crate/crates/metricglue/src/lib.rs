//! Numerical toolkit for *curvature-safe boundary deformations* of Riemannian
//! metrics on manifolds with boundary.
//!
//! Given a background metric `g` on a collar neighbourhood of the boundary and
//! a second metric `g̃` that agrees with `g` on the boundary itself, the crate
//! builds a one-parameter family of metrics `ĝ_λ` that
//!
//! * equals `g` outside a collar of width `δ`,
//! * equals `g̃` in a thin layer at the boundary (so e.g. a totally geodesic
//!   boundary for `g̃` becomes totally geodesic for `ĝ_λ`), and
//! * converges to `g` in `C⁰` (and in `C^α` for `α < 1`) as `λ → ∞`,
//!
//! while *nearly preserving* pointwise curvature positivity: positive
//! curvature operator, the three isotropic-curvature cones (PIC, PIC1, PIC2)
//! and positive scalar curvature.
//!
//! Everything is evaluated through **exact jets** — closed-form first and
//! second coordinate derivatives — never through finite differencing, because
//! the inner branch of the deformation lives at normal depths as small as
//! `e^{-λ²}`, far below any workable finite-difference step.
//!
//! The crate is organised in six modules:
//!
//! * [`tensor`] — dense symmetric forms, algebraic curvature tensors,
//!   complex 2-vectors, Kulkarni–Nomizu products and eigenvalue helpers;
//! * [`fields`] — collar charts, metric jets and the built-in example
//!   manifolds (spherical cap, round cylinder, flat ball, random polynomial
//!   metrics, warped collars);
//! * [`curvature`] — Christoffel symbols, the Riemann tensor, second
//!   fundamental forms, covariant derivatives and the perturbed-curvature
//!   expansion with its direct cross-check;
//! * [`deform`] — the smooth cutoffs, the collar strain tensor `S`, the
//!   two-branch deformation family and its interface diagnostics;
//! * [`cones`] — the curvature-positivity conditions and the deterministic
//!   frame-search minimiser;
//! * [`scenario`] — JSON scenario configs, sweep drivers and CSV/JSON report
//!   emission used by the `metricglue` binary.

pub mod cones;
pub mod curvature;
pub mod deform;
pub mod fields;
pub mod jetcheck;
pub mod scenario;
pub mod tensor;

pub use cones::{
    classify_boundary, frame_difference_min, min_over_frames, q_frame, q_frame_complex,
    BoundaryClass, BoundaryReport, CheckReport, ConditionKind, WitnessData,
};
pub use curvature::{
    christoffel, christoffel_with_derivs, covariant_derivative, curvature_at, perturbed_riemann,
    riemann, scalar_curvature, second_fundamental_form, BoundaryShape, HessianTerm,
};
pub use deform::{
    build_strain, interface_residual, structural_threshold, Branch, CutoffBeta, CutoffChi,
    DeformationData, InterfaceResidual, StrainField,
};
pub use fields::{
    CollarChart, EuclideanBall, FnField, MetricField, MetricJet, PolyRandom, PolyTensor,
    RoundCylinder, SphericalCap, TensorField, TensorJet, WarpedCollar,
};
pub use jetcheck::{verify_metric_jets, verify_tensor_jets, JetDeviation};
pub use scenario::{
    load_scenario, run_lambda, run_sweep, CheckRow, LambdaReport, ScenarioConfig, SweepResult,
};
pub use tensor::{
    curvature_operator_matrix, kulkarni_nomizu, quadratic_form, sym_eigen, Curv4, Frame4, SymForm,
    TwoVectorC,
};

/// Errors shared by every module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("perturbation too large: |h|_g = {norm:.6} exceeds the 1/2 bound")]
    PerturbationTooLarge { norm: f64 },

    #[error("deformation strength lambda = {lambda} is below the structural threshold {required:.6}")]
    LambdaBelowThreshold { lambda: f64, required: f64 },

    #[error("point outside chart: s = {s:.6e} not in [0, {max_s:.6e}]")]
    PointOutsideChart { s: f64, max_s: f64 },

    #[error("metrics disagree on the boundary: max |g - g_tilde| = {max_diff:.6e}")]
    BoundaryMismatch { max_diff: f64 },

    #[error("isotropic frames need dimension >= 4, got {0}")]
    DimensionTooSmall(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

// The README's example doubles as a doc-test for the same reason the book
// chapters below do: drift fails the build.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub struct ReadmeDoctests;

// The book chapters double as doc-tests so the guide can never drift from the
// public API: every fenced Rust snippet in `book/src` is compiled and run by
// `cargo test`.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:expr) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }

    chapter!(Introduction, "../../../book/src/introduction.md");
    chapter!(ChartsAndJets, "../../../book/src/charts-and-jets.md");
    chapter!(CurvatureEngine, "../../../book/src/curvature.md");
    chapter!(TensorAlgebra, "../../../book/src/tensor-algebra.md");
    chapter!(DeformationFamily, "../../../book/src/deformation.md");
    chapter!(PositivityChecks, "../../../book/src/positivity.md");
    chapter!(ScenariosAndCli, "../../../book/src/scenarios.md");
}
