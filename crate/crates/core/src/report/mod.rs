//! Solution validation, benchmark reports and geometry export.

pub mod benchmark;
pub mod obj;
pub mod validate;

pub use benchmark::{benchmark, write_csv, BenchmarkLimits, InstanceResult, Method, MethodOutcome};
pub use obj::{export_geometry, write_obj, ObjOptions};
pub use validate::{validate, validate_standalone, CheckKind, ValidationReport, Witness};
