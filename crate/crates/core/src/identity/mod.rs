//! Player identities: roster lookup, collision arbitration, and output.

pub mod output;
pub mod resolve;

pub use output::{build_metadata, emit_output, ApiInfo, OutputDocument, OutputMetadata, OutputRecord, RosterPlayer};
pub use resolve::{resolve_collisions, resolve_identities, resolve_player, PlayerIdentity};
