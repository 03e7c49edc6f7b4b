//! Numerical linearization of one-parameter holomorphic families near an
//! indifferent fixed point.
//!
//! The crate computes Koenigs and Siegel conjugacies as truncated power
//! series, the Yoccoz function `w(lambda)` and its harmonic log-modulus,
//! estimates of the conformal radius of Siegel discs, the quasi-analytic
//! norms used to compare linearizations, and a finite-depth version of the
//! recursive rotation-number construction that produces Siegel discs with
//! prescribed conformal radius.

// NaN must fail range checks, and index loops mirror the recurrences.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod construction;
pub mod error;
pub mod families;
pub mod linearize;
pub mod qanorm;
pub mod radius;
pub mod series;

pub use error::{Error, ErrorClass, Result};
pub use families::{family_catalog, family_eval, family_series, FamilyId, FamilySpec};
pub use linearize::{
    koenigs_eval, koenigs_series, siegel_series, yoccoz_w, KoenigsSeries, LinearizeOptions, SiegelSeries,
    YoccozEvaluator, YoccozValue,
};
pub use series::{Precision, TruncatedSeries};

pub use config::{OutputFormat, RunConfig};
pub use construction::{
    boundary_report, find_alpha_with_rho, run_construction, BoundaryReport, ConstructionConfig, ConstructionReport,
};
pub use qanorm::{qa_distance, qa_norm, NormResult};
pub use radius::{
    rho_coefficient, rho_radial, rotation_from_cf, Method, RadiusEstimate, RhoEstimator, RhoValue, RotationNumber,
};
