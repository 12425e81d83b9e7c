//! Concrete configurations: representation, XML form, validation, deltas
//! and picking.

mod cdd;
mod delta;
mod pick;
mod validate;
pub mod xml;

pub use cdd::{Cdd, Connection, Instance};
pub use delta::{apply, delta, DeltaError, DeploymentDelta, Weights};
pub use pick::{pick, NoConfiguration, Pick, PickerPolicy, PolicyKind};
pub use validate::{
    evaluate_term, validate, validate_with, CheckResult, ComplianceReport, PropertySource, Status,
    ValidateError,
};
pub use xml::{parse as parse_cdd, serialize as serialize_cdd, CddError};
