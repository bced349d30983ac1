//! Parsing expression grammars with regex-like capture annotations.
//!
//! A grammar written with `{ e #Label }` (capture) and `e1 (^{ e2 #Label })*`
//! (left fold) is both a recognizer for input strings and a description of
//! the labeled trees it produces. This crate provides:
//!
//! - [`grammar`]: the expression AST, the grammar container, the textual
//!   grammar format and desugaring of the surface operators.
//! - [`analysis`]: load-time checks (well-formedness, left recursion).
//! - [`tree`]: normalized labeled unranked trees and their text/JSON forms.
//! - [`eval`]: a deterministic recursive-descent interpreter producing trees.
//! - [`types`]: regular expression types over hedges, tree membership.
//! - [`infer`]: type inference from a grammar, run before any parsing.
//!
//! ```
//! use cpeg::{parse_grammar, parse, infer_grammar, member, ParseOptions};
//!
//! let grammar = parse_grammar("ProdL = Val (^{ '*' Val #Mul })*\nVal = { [0-9]+ #Int }").unwrap();
//! let result = parse(&grammar, "1*2*3", &ParseOptions::default()).unwrap();
//! let tree = result.tree().unwrap();
//! assert_eq!(tree.to_sexpr(), "#Mul[#Mul[#Int['1'] #Int['2']] #Int['3']]");
//!
//! let schema = infer_grammar(&grammar).unwrap();
//! assert!(member(tree, &schema.root_type, &schema.bindings).unwrap());
//! ```

pub mod analysis;
pub mod eval;
pub mod grammar;
pub mod infer;
mod graph;
mod label;
pub mod tree;
pub mod types;

pub use analysis::{
    check_well_formed, recursive_nonterminals, reject_left_recursion, LeftRecursionError,
    RecursionInfo, Violation, WellFormednessReport,
};
pub use eval::{parse, EvalError, ParseOptions, ParseOutcome, ParseResult, Parser};
pub use grammar::{desugar, parse_grammar, Expression, Grammar, GrammarError, SugaredExpression};
pub use infer::{alpha_equal, infer_expr, infer_grammar, FreshSupply, InferenceError, InferenceResult, TypeEnv};
pub use label::Label;
pub use tree::{Node, Tree};
pub use types::{member, string_nullable, GlobalSet, RegexType, TypeError, TypeVar};
