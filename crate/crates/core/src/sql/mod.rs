//! SQL text to resolved query tree.

pub mod ast;
mod parser;
mod render;
mod resolve;

pub use parser::parse;
pub use render::render;
pub use resolve::{resolve, ResolvedQuery, WithOrigin};

pub(crate) fn is_reserved(word: &str) -> bool {
    parser::is_reserved(word)
}
