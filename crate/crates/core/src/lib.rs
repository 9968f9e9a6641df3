//! Grading engine for SQL exercises: canonicalization, edit distance and
//! edit-sequence search over resolved query trees.

pub mod canon;
pub mod corpus;
pub mod distance;
pub mod edit;
pub mod error;
pub mod eval;
pub mod flat;
pub mod grader;
pub mod ir;
pub mod rational;
pub mod schema;
pub mod search;
pub mod sql;

pub use error::{Error, Result};
