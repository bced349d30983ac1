//! Grammar expressions, the grammar container and the textual grammar format.

mod sugar;
mod syntax;

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

pub use crate::label::Label;
pub use sugar::{desugar, SugaredExpression, MAX_CLASS_SIZE};
pub use syntax::{parse_grammar, parse_sugared_rules};

/// Core expression forms. Surface operators (`+`, `?`, `&`, string literals,
/// character classes, non-repetitive folds) are rewritten into these by
/// [`desugar`] and never reach the interpreter or the type inferencer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expression {
    Empty,
    Terminal(char),
    /// `.`: any single character.
    Any,
    Nonterminal(String),
    Sequence(Box<Expression>, Box<Expression>),
    /// Ordered choice: the right operand is tried only if the left one fails.
    Choice(Box<Expression>, Box<Expression>),
    Repetition(Box<Expression>),
    Not(Box<Expression>),
    Capture(Label, Box<Expression>),
    /// `e1 (^{ e2 #L })*`: left-folds every `e2` value into an `L` node
    /// together with the tree built so far.
    FoldCapture(Label, Box<Expression>, Box<Expression>),
}

impl Expression {
    pub fn terminal(c: char) -> Self {
        Expression::Terminal(c)
    }

    pub fn nt(name: impl Into<String>) -> Self {
        Expression::Nonterminal(name.into())
    }

    pub fn seq(first: Expression, second: Expression) -> Self {
        Expression::Sequence(Box::new(first), Box::new(second))
    }

    pub fn choice(first: Expression, second: Expression) -> Self {
        Expression::Choice(Box::new(first), Box::new(second))
    }

    pub fn rep(body: Expression) -> Self {
        Expression::Repetition(Box::new(body))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(body: Expression) -> Self {
        Expression::Not(Box::new(body))
    }

    pub fn capture(label: impl Into<Label>, body: Expression) -> Self {
        Expression::Capture(label.into(), Box::new(body))
    }

    pub fn fold(label: impl Into<Label>, base: Expression, tail: Expression) -> Self {
        Expression::FoldCapture(label.into(), Box::new(base), Box::new(tail))
    }

    /// Right-nested sequence of `items`; `Empty` when there are none.
    pub fn seq_all(items: impl IntoIterator<Item = Expression>) -> Self {
        let mut items: Vec<_> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Expression::Empty;
        };
        while let Some(e) = items.pop() {
            acc = Expression::seq(e, acc);
        }
        acc
    }

    /// `'abc'` as `'a' 'b' 'c'`.
    pub fn literal(text: &str) -> Self {
        Expression::seq_all(text.chars().map(Expression::Terminal))
    }

    /// Immediate subexpressions, left to right.
    pub fn children(&self) -> Vec<&Expression> {
        match self {
            Expression::Empty
            | Expression::Terminal(_)
            | Expression::Any
            | Expression::Nonterminal(_) => Vec::new(),
            Expression::Sequence(a, b)
            | Expression::Choice(a, b)
            | Expression::FoldCapture(_, a, b) => vec![a, b],
            Expression::Repetition(e) | Expression::Not(e) | Expression::Capture(_, e) => vec![e],
        }
    }

    /// Visits every subexpression in pre-order, including `self`.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expression)) {
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            f(e);
            stack.extend(e.children().into_iter().rev());
        }
    }

    /// Nonterminal names referenced anywhere in the expression.
    pub fn referenced_nonterminals(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expression::Nonterminal(name) = e {
                out.push(name.as_str());
            }
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("rule `{0}` is defined more than once")]
    DuplicateRule(String),
    #[error("undefined nonterminal `{name}` referenced in {context}")]
    UndefinedNonterminal { name: String, context: String },
    #[error("unknown nonterminal `{0}`")]
    UnknownNonterminal(String),
    #[error("grammar has no rules")]
    NoRules,
}

/// A grammar: production rules, a start expression, and the terminal and
/// label alphabets collected from the rules.
///
/// Every nonterminal referenced by a rule body or the start expression has
/// exactly one rule; this is checked on construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    rules: IndexMap<String, Expression>,
    start: Expression,
    alphabet: BTreeSet<char>,
    labels: BTreeSet<Label>,
}

impl Grammar {
    pub fn new(
        rules: impl IntoIterator<Item = (String, Expression)>,
        start: Expression,
    ) -> Result<Self, GrammarError> {
        let mut map = IndexMap::new();
        for (name, body) in rules {
            if map.contains_key(&name) {
                return Err(GrammarError::DuplicateRule(name));
            }
            map.insert(name, body);
        }
        let check = |e: &Expression, context: String| -> Result<(), GrammarError> {
            match e
                .referenced_nonterminals()
                .into_iter()
                .find(|n| !map.contains_key(*n))
            {
                Some(name) => Err(GrammarError::UndefinedNonterminal {
                    name: name.to_string(),
                    context,
                }),
                None => Ok(()),
            }
        };
        for (name, body) in &map {
            check(body, format!("rule `{name}`"))?;
        }
        check(&start, "the start expression".to_string())?;

        let mut alphabet = BTreeSet::new();
        let mut labels = BTreeSet::new();
        for e in map.values().chain(std::iter::once(&start)) {
            e.walk(&mut |sub| match sub {
                Expression::Terminal(c) => {
                    alphabet.insert(*c);
                }
                Expression::Capture(l, _) | Expression::FoldCapture(l, _, _) => {
                    labels.insert(l.clone());
                }
                _ => {}
            });
        }
        Ok(Grammar {
            rules: map,
            start,
            alphabet,
            labels,
        })
    }

    /// Grammar whose start expression is the first rule's nonterminal.
    pub fn from_rules(
        rules: impl IntoIterator<Item = (String, Expression)>,
    ) -> Result<Self, GrammarError> {
        let rules: Vec<_> = rules.into_iter().collect();
        let first = rules.first().ok_or(GrammarError::NoRules)?.0.clone();
        Grammar::new(rules, Expression::Nonterminal(first))
    }

    pub fn lookup_rule(&self, name: &str) -> Result<&Expression, GrammarError> {
        self.rules
            .get(name)
            .ok_or_else(|| GrammarError::UnknownNonterminal(name.to_string()))
    }

    pub fn rule(&self, name: &str) -> Option<&Expression> {
        self.rules.get(name)
    }

    /// Rules in declaration order.
    pub fn rules(&self) -> impl Iterator<Item = (&str, &Expression)> {
        self.rules.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }

    pub fn start(&self) -> &Expression {
        &self.start
    }

    /// Terminals literally mentioned by the rules.
    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    pub fn labels(&self) -> &BTreeSet<Label> {
        &self.labels
    }

    /// Position of a rule in declaration order.
    pub(crate) fn rule_index(&self, name: &str) -> Option<usize> {
        self.rules.get_index_of(name)
    }

    pub(crate) fn rule_at(&self, index: usize) -> (&str, &Expression) {
        let (k, v) = self.rules.get_index(index).expect("rule index in range");
        (k.as_str(), v)
    }

    pub(crate) fn rule_count(&self) -> usize {
        self.rules.len()
    }
}

impl fmt::Display for Grammar {
    /// Writes the grammar in the textual format accepted by
    /// [`parse_grammar`]. The start expression is implied by rule order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, body) in &self.rules {
            writeln!(f, "{name} = {body}")?;
        }
        Ok(())
    }
}
