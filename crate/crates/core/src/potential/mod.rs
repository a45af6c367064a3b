//! The potential function and the certificates built on it.

pub mod certificate;
pub mod lineage;
pub mod value;

pub use certificate::{certificate_report, finite_diff_check, CertificateEntry, CertificateReport, Check, FiniteDiffReport};
pub use lineage::{lineage_y, OptimalPlay};
pub use value::{eval_potential, rates, PathIndicator, PotentialValue, Rates};
