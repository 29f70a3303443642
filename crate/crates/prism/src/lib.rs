//! A DTMC subset of the PRISM modelling language: parsing, static checks,
//! constant binding and printing.

pub mod ast;
pub mod bind;
pub mod error;
mod lexer;
pub mod parser;
pub mod printer;
pub mod typecheck;
pub mod value;

pub use ast::*;
pub use bind::bind_constants;
pub use error::{BindError, Diagnostic, DiagnosticKind, ParseError, Severity};
pub use parser::{parse, parse_expr};
pub use printer::print;
pub use typecheck::{is_well_formed, typecheck};
pub use value::{eval, EvalError, Type, Value};
