//! Matrix cocycles over subshifts of finite type.
//!
//! This crate computes with locally constant linear cocycles over two-sided
//! subshifts of finite type: extremal Lyapunov exponents (exact at periodic
//! points, sampled under Markov measures), fiber-bunching certificates via
//! maximum-mean-cycle analysis, stable/unstable holonomies, invariant
//! conformal structures on `SL(d,R)/SO(d,R)`, coboundary and irreducibility
//! tests, and the shadowing periodic-orbit construction that links orbit
//! growth to bunching membership.
//!
//! Module map:
//!
//! * [`sft`] -- subshift combinatorics: points, metric, bracket, periodic
//!   orbits, connecting words, mixing.
//! * [`measure`] -- Markov measures, cylinder weights, Jacobians, sampling.
//! * [`cocycle`] -- locally constant generators, cocycle products, exponents.
//! * [`conformal`] -- the symmetric space of conformal structures and its
//!   isometric action, barycenters, elliptic fixed points.
//! * [`holonomy`] -- the sets `D(N, theta)`, certificates, holonomies, and
//!   the structure-extension formula.
//! * [`shadowing`] -- the mixed periodic-point construction and the
//!   growth/membership experiment.
//! * [`analysis`] -- end-to-end drivers: invariance and coboundary
//!   verification, quasiconformality, irreducibility, construction.
//! * [`presets`] -- built-in example systems used across the test suites.

pub mod analysis;
pub mod cocycle;
pub mod conformal;
pub mod error;
mod linalg;
pub mod measure;
pub mod presets;
pub mod sft;
pub mod shadowing;
pub mod holonomy;

pub use analysis::{
    common_invariant_subspace, construct_invariant_structure, quasiconformality_report,
    transport_field, verify_coboundary, verify_invariant_field, ConformalField, ConstructOutcome,
    ConstructedStructure, InvariantSubspace, Obstruction, QuasiconformalityReport, TransferField,
};
pub use cocycle::{BirkhoffEstimate, LocalMap, LocallyConstantGenerator, LyapunovPair, ScaledMatrix};
pub use conformal::{
    distance, geodesic, invariant_structure_elliptic, karcher_mean, midpoint, pull, push,
    ConformalStructure,
};
pub use error::{Error, Result};
pub use holonomy::{
    block_graph, bunching_membership_periodic, certify_uniform_bunching, extend_structure,
    gap_check, max_mean_cycle, periodic_certificate, stable_holonomy, uniform_bunching_theta,
    unstable_holonomy, BunchingCertificate, CertificateScope, GapReport, PeriodicBunching,
};
pub use measure::MarkovMeasure;
pub use sft::{
    agreement_radius, bracket, on_same_stable_set, on_same_unstable_set, Sft, Symbol,
    SymbolicPoint, Word,
};
pub use shadowing::{
    build_shadowing_point, growth_and_membership_experiment, select_block_parameters,
    shadow_norm_estimate, shadowing_bounds_hold, shadowing_inequalities, tune_parameters,
    BlockSelection, ExperimentReport, ExperimentRow, ShadowBandEstimate, ShadowingFamily,
    ShadowingSpec, TunedParameters,
};

/// Spectral norm of a matrix (largest singular value), the operator norm
/// used throughout.
pub fn spectral_norm(m: &nalgebra::DMatrix<f64>) -> f64 {
    linalg::spectral_norm(m)
}
