//! Hierarchical heavy hitters over prefix lattices.
//!
//! One Space Saving summary is kept per lattice node; every stream element
//! updates the summary of each of its generalizations. Output walks the
//! lattice bottom-up and emits every prefix whose conservatively estimated
//! conditioned count reaches `phi * N`.

pub mod bounds;
pub mod error;
pub mod fraction;
pub mod gen;
pub mod hhh;
pub mod lattice;
pub mod merge;
pub mod oracle;
pub mod report;
pub mod space_saving;
pub mod state_io;
pub mod tcam;
pub mod trace;

pub use error::{Error, Result};
pub use fraction::Fraction;
pub use hhh::{Candidate, Evaluation, HhhState};
pub use lattice::{DimSpec, Glb, HierarchySpec, Label, Notation, Prefix};
pub use report::{HhhReport, OutputEntry};
pub use space_saving::{Counter, Estimate, SpaceSaving, UpdateMode};
