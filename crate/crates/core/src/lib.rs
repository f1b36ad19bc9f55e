//! Functional size measurement toolkit.
//!
//! * [`fpa`]: IFPUG complexity tables and function point sizes.
//! * [`ef`]: Functional Elements (EF, EFt, EFd) from linear per-type forms.
//! * [`nesma`]: enhancement impact factors and maintenance points.
//! * [`stats`]: zero-intercept OLS with t/F significance.
//! * [`derivation`]: regenerates the EF coefficients from the FPA tables.
//! * [`dataset`]: service-order CSV ingestion.
//! * [`evaluation`]: effort-versus-size regressions per system and metric.
//! * [`governance`]: EF-based indicators and the multi-indicator SVG chart.

pub mod dataset;
pub mod derivation;
pub mod ef;
pub mod evaluation;
pub mod exec;
pub mod fpa;
pub mod governance;
pub mod nesma;
pub mod stats;

pub use ef::{CoefficientSet, EfBreakdown, RequestOperation, TypeCoefficients};
pub use exec::Execution;
pub use fpa::{AttributeCounts, ComplexityLevel, FpaRules, FunctionType};
