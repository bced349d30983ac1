//! Load-time grammar checks: recursion structure, well-formedness and
//! left recursion.
//!
//! Well-formedness restricts where recursive nonterminals may appear so that
//! the inferred types stay regular: an occurrence of a recursive nonterminal
//! must either be in tail position, or nothing that can build a node may be
//! sequenced after it.
//!
//! Positions are defined structurally. A rule body is in tail position; if
//! `e1 e2` is, then so is `e2`; if `e1 / e2` is, so are both branches. The
//! bodies of `e*`, `!e`, `{e #L}` and both operands of a fold are never in
//! tail position. What "follows" an occurrence is everything sequenced after
//! it up to the nearest enclosing capture or fold tail, whose value ends up
//! inside a fresh node. A repetition body is followed by the repetition
//! itself. Occurrences under `!` are not checked, since a predicate's value
//! is discarded.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::grammar::{Expression, Grammar};
use crate::graph::{cycle_through, strongly_connected};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecursionInfo {
    /// Nonterminals that can reach themselves through rule bodies.
    pub recursive_nonterminals: BTreeSet<String>,
    /// One cycle per strongly connected group of left-recursive rules,
    /// starting from its earliest-declared member.
    pub left_recursive_cycles: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: String,
    /// Child indices from the rule body down to the offending occurrence.
    pub path: Vec<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WellFormednessReport {
    pub is_well_formed: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("left recursion: {}", .cycle.iter().chain(.cycle.first()).cloned().collect::<Vec<_>>().join(" -> "))]
pub struct LeftRecursionError {
    pub cycle: Vec<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<_> = self.path.iter().map(usize::to_string).collect();
        let path = if path.is_empty() { "body".to_string() } else { path.join(".") };
        write!(f, "rule `{}` at {}: {}", self.rule, path, self.reason)
    }
}

impl fmt::Display for WellFormednessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_well_formed {
            return writeln!(f, "well-formed");
        }
        writeln!(f, "not well-formed ({} violation(s))", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Rule-indexed facts derived by fixpoint iteration.
struct RuleFacts<'g> {
    grammar: &'g Grammar,
    /// May succeed without consuming input.
    nullable: Vec<bool>,
    /// May produce a node.
    builds_nodes: Vec<bool>,
}

impl<'g> RuleFacts<'g> {
    fn new(grammar: &'g Grammar) -> Self {
        let n = grammar.rule_count();
        let mut facts = RuleFacts {
            grammar,
            nullable: vec![false; n],
            builds_nodes: vec![false; n],
        };
        loop {
            let mut changed = false;
            for i in 0..n {
                let body = grammar.rule_at(i).1;
                let nullable = facts.expr_nullable(body);
                let builds = facts.expr_builds_nodes(body);
                if nullable != facts.nullable[i] || builds != facts.builds_nodes[i] {
                    facts.nullable[i] = nullable;
                    facts.builds_nodes[i] = builds;
                    changed = true;
                }
            }
            if !changed {
                return facts;
            }
        }
    }

    fn index(&self, name: &str) -> usize {
        self.grammar.rule_index(name).expect("grammar references are checked on construction")
    }

    fn expr_nullable(&self, e: &Expression) -> bool {
        match e {
            Expression::Empty | Expression::Repetition(_) | Expression::Not(_) => true,
            Expression::Terminal(_) | Expression::Any => false,
            Expression::Nonterminal(n) => self.nullable[self.index(n)],
            Expression::Sequence(a, b) => self.expr_nullable(a) && self.expr_nullable(b),
            Expression::Choice(a, b) => self.expr_nullable(a) || self.expr_nullable(b),
            Expression::Capture(_, a) | Expression::FoldCapture(_, a, _) => self.expr_nullable(a),
        }
    }

    fn expr_builds_nodes(&self, e: &Expression) -> bool {
        match e {
            Expression::Capture(..) | Expression::FoldCapture(..) => true,
            Expression::Empty | Expression::Terminal(_) | Expression::Any | Expression::Not(_) => false,
            Expression::Nonterminal(n) => self.builds_nodes[self.index(n)],
            Expression::Sequence(a, b) | Expression::Choice(a, b) => {
                self.expr_builds_nodes(a) || self.expr_builds_nodes(b)
            }
            Expression::Repetition(a) => self.expr_builds_nodes(a),
        }
    }

    /// Nonterminals that may be reached before any input is consumed.
    fn leftmost(&self, e: &Expression, out: &mut BTreeSet<usize>) {
        match e {
            Expression::Empty | Expression::Terminal(_) | Expression::Any => {}
            Expression::Nonterminal(n) => {
                out.insert(self.index(n));
            }
            Expression::Sequence(a, b) | Expression::FoldCapture(_, a, b) => {
                self.leftmost(a, out);
                if self.expr_nullable(a) {
                    self.leftmost(b, out);
                }
            }
            Expression::Choice(a, b) => {
                self.leftmost(a, out);
                self.leftmost(b, out);
            }
            Expression::Repetition(a) | Expression::Not(a) | Expression::Capture(_, a) => {
                self.leftmost(a, out)
            }
        }
    }
}

fn reference_graph(g: &Grammar) -> Vec<BTreeSet<usize>> {
    g.rules()
        .map(|(_, body)| {
            body.referenced_nonterminals()
                .into_iter()
                .filter_map(|n| g.rule_index(n))
                .collect()
        })
        .collect()
}

fn reaches_itself(graph: &[BTreeSet<usize>], start: usize) -> bool {
    let mut seen = vec![false; graph.len()];
    let mut stack: Vec<usize> = graph[start].iter().copied().collect();
    while let Some(n) = stack.pop() {
        if n == start {
            return true;
        }
        if !std::mem::replace(&mut seen[n], true) {
            stack.extend(graph[n].iter().copied());
        }
    }
    false
}

pub fn recursive_nonterminals(g: &Grammar) -> RecursionInfo {
    let graph = reference_graph(g);
    let name = |i: usize| g.rule_at(i).0.to_string();
    let recursive_nonterminals = (0..graph.len())
        .filter(|&i| reaches_itself(&graph, i))
        .map(name)
        .collect();

    let facts = RuleFacts::new(g);
    let left: Vec<BTreeSet<usize>> = g
        .rules()
        .map(|(_, body)| {
            let mut out = BTreeSet::new();
            facts.leftmost(body, &mut out);
            out
        })
        .collect();
    let mut cycles: Vec<Vec<usize>> = strongly_connected(&left)
        .into_iter()
        .filter(|c| c.len() > 1 || left[c[0]].contains(&c[0]))
        .map(|c| cycle_through(&left, &c, c[0]))
        .collect();
    cycles.sort();
    RecursionInfo {
        recursive_nonterminals,
        left_recursive_cycles: cycles
            .into_iter()
            .map(|c| c.into_iter().map(name).collect())
            .collect(),
    }
}

pub fn check_well_formed(g: &Grammar) -> WellFormednessReport {
    let graph = reference_graph(g);
    let recursive: Vec<bool> = (0..graph.len()).map(|i| reaches_itself(&graph, i)).collect();
    let facts = RuleFacts::new(g);
    let mut violations = Vec::new();
    for (name, body) in g.rules() {
        let mut walker = Walker {
            facts: &facts,
            recursive: &recursive,
            rule: name,
            path: Vec::new(),
            violations: &mut violations,
        };
        walker.walk(body, true, false);
    }
    WellFormednessReport {
        is_well_formed: violations.is_empty(),
        violations,
    }
}

struct Walker<'a, 'g> {
    facts: &'a RuleFacts<'g>,
    recursive: &'a [bool],
    rule: &'a str,
    path: Vec<usize>,
    violations: &'a mut Vec<Violation>,
}

impl Walker<'_, '_> {
    fn child(&mut self, index: usize, e: &Expression, tail: bool, followed_by_nodes: bool) {
        self.path.push(index);
        self.walk(e, tail, followed_by_nodes);
        self.path.pop();
    }

    fn walk(&mut self, e: &Expression, tail: bool, followed_by_nodes: bool) {
        match e {
            Expression::Empty | Expression::Terminal(_) | Expression::Any => {}
            Expression::Nonterminal(n) => {
                let i = self.facts.index(n);
                if self.recursive[i] && !tail && followed_by_nodes {
                    self.violations.push(Violation {
                        rule: self.rule.to_string(),
                        path: self.path.clone(),
                        reason: format!(
                            "recursive nonterminal `{n}` is not in tail position and is followed by an expression that can capture"
                        ),
                    });
                }
            }
            Expression::Sequence(a, b) => {
                let next = followed_by_nodes || self.facts.expr_builds_nodes(b);
                self.child(0, a, false, next);
                self.child(1, b, tail, followed_by_nodes);
            }
            Expression::Choice(a, b) => {
                self.child(0, a, tail, followed_by_nodes);
                self.child(1, b, tail, followed_by_nodes);
            }
            Expression::Repetition(a) => {
                let next = followed_by_nodes || self.facts.expr_builds_nodes(a);
                self.child(0, a, false, next);
            }
            // a predicate's value is discarded, so nothing under it is checked
            Expression::Not(_) => {}
            Expression::Capture(_, a) => self.child(0, a, false, false),
            Expression::FoldCapture(_, a, b) => {
                self.child(0, a, false, followed_by_nodes);
                self.child(1, b, false, false);
            }
        }
    }
}

/// Fails with the first left-recursive cycle, if any.
pub fn reject_left_recursion(g: &Grammar) -> Result<(), LeftRecursionError> {
    match recursive_nonterminals(g).left_recursive_cycles.into_iter().next() {
        Some(cycle) => Err(LeftRecursionError { cycle }),
        None => Ok(()),
    }
}
