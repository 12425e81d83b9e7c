//! The desired-state description language: tokenizer, parser, resolver and
//! canonical printer.

pub mod ast;
pub mod diag;
pub mod lexer;
pub mod model;
pub mod parser;
pub mod pretty;
pub mod resolve;

pub use diag::{Diagnostic, Diagnostics, Pos, Severity};
pub use model::Dsd;

/// Tokenizes, parses and resolves `source` into a description named `name`.
pub fn load(source: &str, name: &str) -> Result<Dsd, Diagnostics> {
    let tokens = lexer::tokenize(source)?;
    let ast = parser::parse(&tokens)?;
    resolve::resolve(&ast, name)
}

/// Name used for a description loaded from `path`: the file stem.
pub fn name_from_path(path: &std::path::Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dsd".to_string())
}
