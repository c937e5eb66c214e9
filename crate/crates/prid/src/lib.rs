//! Analytic decomposition of the predictive information in multivariate
//! stationary processes.
//!
//! Given a vector autoregressive model with Gaussian innovations, this crate
//! computes how much the collective past of the system tells about its next
//! state (the predictive information), and splits that amount into
//! redundant, unique and synergistic contributions of the individual units.
//! Everything is evaluated in closed form from the model parameters via
//! stationary covariances; no information estimator touches raw samples.
//!
//! The pieces, bottom to top:
//!
//! * [`var`]: model representation, simulation, least-squares estimation and
//!   order selection;
//! * [`moments`]: stationary lagged covariances (discrete Lyapunov solve)
//!   and subset-restricted linear models;
//! * [`info`]: Gaussian predictive information and subset mutual
//!   informations derived from those covariances;
//! * [`lattice`]: the redundancy lattice over source subsets, its
//!   minimum-mutual-information redundancy measure, Moebius inversion and
//!   the resulting decomposition;
//! * [`surrogate`]: permutation surrogates and significance tests;
//! * [`analysis`]: the fit-then-decompose pipeline shared by front ends.

pub mod analysis;
pub mod error;
pub mod info;
pub mod lattice;
mod linalg;
pub mod moments;
pub mod sources;
pub mod surrogate;
pub mod var;

pub use analysis::{
    decompose_model, run_analysis, AnalysisConfig, AnalysisOutcome, OrderSpec, SigmaXMode,
};
pub use error::{ErrorKind, PridError, Result};
pub use info::{InfoContext, SigmaXSource};
pub use lattice::{
    atom_category, decompose, decompose_detailed, mmi_redundancy, Atom, AtomCategory,
    CoarseGraining, PridResult, RedundancyLattice, Units,
};
pub use linalg::solve_discrete_lyapunov;
pub use moments::{lag_covariances, restricted_model, LagCovarianceSet, RestrictedModel};
pub use sources::SourceSet;
pub use surrogate::{
    make_surrogate, significance_test, MeasureSignificance, SignificanceReport, SurrogateConfig,
    Tail,
};
pub use var::{
    estimate_var, select_order, OrderSelection, StabilityReport, TimeSeries, VarModel,
    DEFAULT_BURN_IN,
};
