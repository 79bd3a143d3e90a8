//! Private-state nonlocality workbench.
//!
//! Builds multipartite private states from twisting recipes, reduces their
//! key part with local two-branch channels, and certifies the nonlocality of
//! the result two independent ways: explicit Clauser-Horne Bell tests with
//! analytically optimal settings, and a linear-feasibility membership check
//! against the local-hidden-variable polytope.

pub mod bell;
pub mod distill;
pub mod error;
pub mod numeric;
pub mod par;
pub mod polytope;
pub mod private;
pub mod report;

pub use bell::{verify_nonlocality_pipeline, NonlocalityReport, PipelineOptions};
pub use distill::{distill_key_state, DistillationOutcome};
pub use error::{Error, Result};
pub use numeric::{Complex64, ComplexMatrix, DensityMatrix, Seed};
pub use polytope::{check_membership, LocalityVerdict};
pub use private::{KeyPartState, PrivateStateSpec};
