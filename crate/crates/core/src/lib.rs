//! Semantic role labeling toolkit: BIO span algebra, column-format ingestion,
//! predicate-conditioned tagging, dependency-aware diagnostics, scoring and
//! cross-lingual label projection.

pub mod bench;
pub mod bio;
pub mod bridge;
pub mod corpus;
pub mod diagnostics;
pub mod encoding;
pub mod error;
pub mod evaluation;
mod hash;
pub mod inference;
pub mod ingest;
mod percent;
pub mod projection;
pub mod role;
pub mod synth;

pub use bio::{BioSequence, BioTag, Frame, LabeledSpan, SrlInstance, Token, Violation, ViolationKind};
pub use error::BioError;
pub use percent::Percent;
pub use role::{BaseRole, Modifier, RoleLabel, RoleLink};
