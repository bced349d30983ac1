//! Recursive-descent interpretation of grammar expressions into trees.
//!
//! Positions index into the input as a sequence of Unicode scalar values.
//! A failing expression never moves the caller's position.
//!
//! Two cases that would otherwise diverge are cut short: a repetition (or
//! the tail loop of a fold) stops at the first iteration that succeeds
//! without consuming input, discarding that iteration's value.

use thiserror::Error;

use crate::grammar::{Expression, Grammar};
use crate::label::Label;
use crate::tree::Tree;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseOutcome {
    Success { value: Tree, end: usize },
    Failure,
}

impl ParseOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, ParseOutcome::Success { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("recursion limit of {limit} nested evaluations exceeded at position {position}")]
    DepthExceeded { limit: usize, position: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOptions {
    /// Treat a success that leaves input unconsumed as a failure.
    pub full_match: bool,
    /// Maximum nesting of expression evaluations.
    pub max_depth: usize,
}

pub const DEFAULT_MAX_DEPTH: usize = 2_000;

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            full_match: false,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseResult {
    pub outcome: ParseOutcome,
    /// Characters left after the start expression; the whole input on failure.
    pub unconsumed: usize,
    /// Furthest position at which a character test failed.
    pub farthest: usize,
}

impl ParseResult {
    pub fn tree(&self) -> Option<&Tree> {
        match &self.outcome {
            ParseOutcome::Success { value, .. } => Some(value),
            ParseOutcome::Failure => None,
        }
    }
}

/// Runs the grammar's start expression on `input`.
pub fn parse(g: &Grammar, input: &str, options: &ParseOptions) -> Result<ParseResult, EvalError> {
    let chars: Vec<char> = input.chars().collect();
    let mut parser = Parser::new(g, &chars).with_max_depth(options.max_depth);
    let outcome = parser.eval(g.start(), 0)?;
    let farthest = parser.farthest;
    let (outcome, unconsumed) = match outcome {
        ParseOutcome::Success { end, .. } if options.full_match && end < chars.len() => {
            (ParseOutcome::Failure, chars.len())
        }
        ParseOutcome::Success { value, end } => (ParseOutcome::Success { value, end }, chars.len() - end),
        ParseOutcome::Failure => (ParseOutcome::Failure, chars.len()),
    };
    Ok(ParseResult {
        outcome,
        unconsumed,
        farthest,
    })
}

/// Evaluation state over one input. Not shared between concurrent parses;
/// the grammar is.
pub struct Parser<'g, 'i> {
    grammar: &'g Grammar,
    input: &'i [char],
    depth: usize,
    max_depth: usize,
    farthest: usize,
}

type Step = Option<(Tree, usize)>;

impl<'g, 'i> Parser<'g, 'i> {
    pub fn new(grammar: &'g Grammar, input: &'i [char]) -> Self {
        Parser {
            grammar,
            input,
            depth: 0,
            max_depth: DEFAULT_MAX_DEPTH,
            farthest: 0,
        }
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    /// Evaluates `e` at `pos`.
    pub fn eval(&mut self, e: &Expression, pos: usize) -> Result<ParseOutcome, EvalError> {
        assert!(pos <= self.input.len(), "position out of range");
        Ok(match self.step(e, pos)? {
            Some((value, end)) => ParseOutcome::Success { value, end },
            None => ParseOutcome::Failure,
        })
    }

    fn step(&mut self, e: &Expression, pos: usize) -> Result<Step, EvalError> {
        if self.depth >= self.max_depth {
            return Err(EvalError::DepthExceeded {
                limit: self.max_depth,
                position: pos,
            });
        }
        self.depth += 1;
        let r = self.step_inner(e, pos);
        self.depth -= 1;
        r
    }

    fn char_test(&mut self, pos: usize, test: impl Fn(char) -> bool) -> Step {
        match self.input.get(pos) {
            Some(&c) if test(c) => Some((Tree::Str(c.to_string()), pos + 1)),
            _ => {
                self.farthest = self.farthest.max(pos);
                None
            }
        }
    }

    fn step_inner(&mut self, e: &Expression, pos: usize) -> Result<Step, EvalError> {
        Ok(match e {
            Expression::Empty => Some((Tree::empty(), pos)),
            Expression::Terminal(a) => self.char_test(pos, |c| c == *a),
            Expression::Any => self.char_test(pos, |_| true),
            Expression::Nonterminal(name) => {
                let body = self
                    .grammar
                    .rule(name)
                    .expect("grammar references are checked on construction");
                self.step(body, pos)?
            }
            Expression::Sequence(..) => {
                // the right spine of a sequence is walked iteratively
                let mut acc = Tree::empty();
                let mut at = pos;
                let mut cur = e;
                loop {
                    let (first, rest) = match cur {
                        Expression::Sequence(a, b) => (&**a, Some(&**b)),
                        other => (other, None),
                    };
                    match self.step(first, at)? {
                        Some((v, next)) => {
                            acc = acc.concat(v);
                            at = next;
                        }
                        None => return Ok(None),
                    }
                    match rest {
                        Some(r) => cur = r,
                        None => break Some((acc, at)),
                    }
                }
            }
            Expression::Choice(..) => {
                let mut cur = e;
                loop {
                    match cur {
                        Expression::Choice(a, b) => {
                            if let Some(r) = self.step(a, pos)? {
                                return Ok(Some(r));
                            }
                            cur = b;
                        }
                        other => break self.step(other, pos)?,
                    }
                }
            }
            Expression::Repetition(body) => {
                let mut acc = Tree::empty();
                let mut at = pos;
                while let Some((v, next)) = self.step(body, at)? {
                    if next == at {
                        break;
                    }
                    acc = acc.concat(v);
                    at = next;
                }
                Some((acc, at))
            }
            Expression::Not(body) => match self.step(body, pos)? {
                Some(_) => None,
                None => Some((Tree::empty(), pos)),
            },
            Expression::Capture(label, body) => self
                .step(body, pos)?
                .map(|(v, end)| (Tree::node(label.clone(), v), end)),
            Expression::FoldCapture(label, base, tail) => match self.step(base, pos)? {
                None => None,
                Some((first, mut at)) => {
                    let mut acc = first;
                    while let Some((v, next)) = self.step(tail, at)? {
                        if next == at {
                            break;
                        }
                        acc = fold_step(label, acc, v);
                        at = next;
                    }
                    Some((acc, at))
                }
            },
        })
    }
}

fn fold_step(label: &Label, acc: Tree, v: Tree) -> Tree {
    Tree::node(label.clone(), acc.concat(v))
}
