//! Projection-based controllers: sector design, partial projection of the
//! controller state onto a sector, closed-loop simulation and diagnostics.
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod controllers;
pub mod error;
pub mod model;
pub mod plants;
pub mod projection;
pub mod sector;
pub mod sim;

pub use error::{PbcError, Result};
pub use model::{
    unprojected_field, ClosedLoopState, ControllerModel, DissipativityTriple, Divergence,
    PlantModel, Sample, SectorBounds, SectorCertificate, Storage, Trajectory,
};
pub use projection::{partial_project, project_z1_rate, repair_state};
pub use sector::{
    admissible_interval, classify_mode, design_sector, sector_residual,
    synthesize_certificate_search, verify_certificate, BoundaryMode,
};
pub use sim::{simulate, sliding_fraction, IntegratorConfig, Scenario};
