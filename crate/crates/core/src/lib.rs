//! Finite-level computations around Stallings graphs, Cayley graphs of
//! finite groups, constellations and their dissolution by universal
//! extensions, iterated extension towers, and product membership in free
//! groups.

pub mod cayley;
pub mod constellations;
pub mod error;
pub mod extension;
pub mod groups;
pub mod rational;
pub mod rewriting;
pub mod stallings;
pub mod tower;
pub mod words;

pub use error::{Error, Result};
pub use groups::{ElemId, FinGroup};
pub use stallings::{CoreGraph, LabeledGraph};
pub use words::{Alphabet, Letter, Word};
