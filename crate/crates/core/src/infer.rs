//! Type inference: computes the type of every value a grammar can produce,
//! before any input is parsed.
//!
//! A nonterminal that is not yet in scope gets a fresh variable bound to the
//! type of its rule body, inferred with the nonterminal in scope. Each such
//! occurrence is inferred again, so a rule used twice yields two bindings.
//! A fold `e1 (^{ e2 #L })*` gets a fresh `X` with `type X = L[X, T2] | T1`.
//! Variables are numbered in pre-order: a node's own variable is allocated
//! before those of its subexpressions.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::analysis::{check_well_formed, WellFormednessReport};
use crate::grammar::{Expression, Grammar};
use crate::types::{
    check_guarded, check_regular, dedup_bindings, serialize_types, types_to_json, GlobalSet,
    RegexType, TypeError, TypeVar,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferenceError {
    #[error("grammar is not well-formed:\n{0}")]
    NotWellFormed(WellFormednessReport),
    #[error("inferred types are not tail-recursive: {0}")]
    Irregular(TypeError),
    #[error("more than {limit} type variables needed")]
    TooManyVariables { limit: usize },
    /// Two subderivations bound the same variable; the supply never reissues
    /// names, so this indicates a bug.
    #[error("internal error: {0}")]
    Internal(TypeError),
}

/// Nonterminals currently in scope, with their variables.
#[derive(Debug, Clone, Default)]
pub struct TypeEnv {
    entries: Vec<(String, TypeVar)>,
}

impl TypeEnv {
    pub fn new() -> Self {
        TypeEnv::default()
    }

    pub fn lookup(&self, nonterminal: &str) -> Option<&TypeVar> {
        self.entries.iter().rev().find(|(n, _)| n == nonterminal).map(|(_, x)| x)
    }

    pub fn push(&mut self, nonterminal: impl Into<String>, x: TypeVar) {
        self.entries.push((nonterminal.into(), x));
    }

    pub fn pop(&mut self) -> Option<(String, TypeVar)> {
        self.entries.pop()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Issues `X1`, `X2`, ... and never repeats a name.
#[derive(Debug, Clone)]
pub struct FreshSupply {
    prefix: String,
    next: usize,
    limit: usize,
}

pub const DEFAULT_VARIABLE_LIMIT: usize = 100_000;

impl Default for FreshSupply {
    fn default() -> Self {
        FreshSupply {
            prefix: "X".to_string(),
            next: 1,
            limit: DEFAULT_VARIABLE_LIMIT,
        }
    }
}

impl FreshSupply {
    pub fn new() -> Self {
        FreshSupply::default()
    }

    pub fn with_prefix(prefix: impl Into<String>) -> Self {
        FreshSupply {
            prefix: prefix.into(),
            ..FreshSupply::default()
        }
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn fresh(&mut self) -> Result<TypeVar, InferenceError> {
        if self.next > self.limit {
            return Err(InferenceError::TooManyVariables { limit: self.limit });
        }
        let x = TypeVar::new(format!("{}{}", self.prefix, self.next));
        self.next += 1;
        Ok(x)
    }

    /// Number of names issued so far.
    pub fn issued(&self) -> usize {
        self.next - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceResult {
    pub root_type: RegexType,
    pub bindings: GlobalSet,
    /// Variables introduced by the derivation; the domain of `bindings`.
    pub introduced: BTreeSet<TypeVar>,
}

impl InferenceResult {
    fn leaf(root_type: RegexType) -> Self {
        InferenceResult {
            root_type,
            bindings: GlobalSet::new(),
            introduced: BTreeSet::new(),
        }
    }

    fn absorb(&mut self, other: InferenceResult) -> Result<RegexType, InferenceError> {
        self.bindings.merge(other.bindings).map_err(InferenceError::Internal)?;
        self.introduced.extend(other.introduced);
        Ok(other.root_type)
    }

    fn bind(&mut self, x: TypeVar, t: RegexType) -> Result<(), InferenceError> {
        self.bindings.define(x.clone(), t).map_err(InferenceError::Internal)?;
        self.introduced.insert(x);
        Ok(())
    }

    /// Strict guardedness of the bindings: every cycle passes through a label.
    pub fn guardedness(&self) -> Result<(), TypeError> {
        check_guarded(&self.bindings)
    }

    /// Merges bindings with identical bodies.
    pub fn deduplicated(&self) -> InferenceResult {
        let (bindings, root_type) = dedup_bindings(&self.bindings, &self.root_type);
        let introduced = bindings.vars().cloned().collect();
        InferenceResult {
            root_type,
            bindings,
            introduced,
        }
    }

    pub fn to_text(&self) -> String {
        serialize_types(&self.bindings, &self.root_type)
    }

    pub fn to_json(&self) -> String {
        types_to_json(&self.bindings, &self.root_type)
    }
}

/// Infers the type of `e` under `env`, drawing new variables from `supply`.
pub fn infer_expr(
    e: &Expression,
    env: &mut TypeEnv,
    supply: &mut FreshSupply,
    g: &Grammar,
) -> Result<InferenceResult, InferenceError> {
    match e {
        Expression::Empty | Expression::Terminal(_) | Expression::Any | Expression::Not(_) => {
            Ok(InferenceResult::leaf(RegexType::Empty))
        }
        Expression::Nonterminal(name) => {
            if let Some(x) = env.lookup(name) {
                return Ok(InferenceResult::leaf(RegexType::Var(x.clone())));
            }
            let x = supply.fresh()?;
            let body = g.rule(name).expect("grammar references are checked on construction");
            env.push(name.clone(), x.clone());
            let inner = infer_expr(body, env, supply, g);
            env.pop();
            let mut out = InferenceResult::leaf(RegexType::Var(x.clone()));
            let t = out.absorb(inner?)?;
            out.bind(x, t)?;
            Ok(out)
        }
        Expression::Sequence(..) | Expression::Choice(..) => {
            // right spines are handled iteratively
            let is_seq = matches!(e, Expression::Sequence(..));
            let mut items = Vec::new();
            let mut cur = e;
            loop {
                match (cur, is_seq) {
                    (Expression::Sequence(a, b), true) | (Expression::Choice(a, b), false) => {
                        items.push(&**a);
                        cur = b;
                    }
                    (other, _) => {
                        items.push(other);
                        break;
                    }
                }
            }
            let mut out = InferenceResult::leaf(RegexType::Empty);
            let mut types = Vec::with_capacity(items.len());
            for item in items {
                types.push(out.absorb(infer_expr(item, env, supply, g)?)?);
            }
            let mut acc = types.pop().expect("a spine has at least two items");
            while let Some(t) = types.pop() {
                acc = if is_seq {
                    RegexType::concat(t, acc)
                } else if t == acc {
                    // `T | T` is `T`; keeps character classes at `Empty`
                    acc
                } else {
                    RegexType::union(t, acc)
                };
            }
            out.root_type = acc;
            Ok(out)
        }
        Expression::Repetition(body) => {
            let mut out = infer_expr(body, env, supply, g)?;
            out.root_type = RegexType::star(out.root_type);
            Ok(out)
        }
        Expression::Capture(label, body) => {
            let mut out = infer_expr(body, env, supply, g)?;
            out.root_type = RegexType::label(label.clone(), out.root_type);
            Ok(out)
        }
        Expression::FoldCapture(label, base, tail) => {
            let x = supply.fresh()?;
            let mut out = InferenceResult::leaf(RegexType::Var(x.clone()));
            let t1 = out.absorb(infer_expr(base, env, supply, g)?)?;
            let t2 = out.absorb(infer_expr(tail, env, supply, g)?)?;
            let body = RegexType::union(
                RegexType::label(label.clone(), RegexType::concat(RegexType::Var(x.clone()), t2)),
                t1,
            );
            out.bind(x, body)?;
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct InferOptions {
    /// Infer even when the grammar is not well-formed, skipping the check
    /// on the resulting types as well.
    pub force: bool,
    /// Upper bound on the number of type variables; `None` for the default.
    pub max_variables: Option<usize>,
}

/// The type of the grammar's start expression.
pub fn infer_grammar(g: &Grammar) -> Result<InferenceResult, InferenceError> {
    infer_grammar_with(g, &InferOptions::default())
}

pub fn infer_grammar_with(g: &Grammar, options: &InferOptions) -> Result<InferenceResult, InferenceError> {
    if !options.force {
        let report = check_well_formed(g);
        if !report.is_well_formed {
            return Err(InferenceError::NotWellFormed(report));
        }
    }
    let mut supply = FreshSupply::new();
    if let Some(limit) = options.max_variables {
        supply = supply.with_limit(limit);
    }
    let result = infer_expr(g.start(), &mut TypeEnv::new(), &mut supply, g)?;
    if !options.force {
        check_regular(&result.bindings).map_err(InferenceError::Irregular)?;
    }
    Ok(result)
}

/// Whether a bijective renaming of variables makes the two results equal.
pub fn alpha_equal(r1: &InferenceResult, r2: &InferenceResult) -> bool {
    if r1.bindings.len() != r2.bindings.len() {
        return false;
    }
    let mut m = Renaming::default();
    if !m.unify(&r1.root_type, &r2.root_type) || !m.settle(r1, r2) {
        return false;
    }
    m.extend_unreached(r1, r2)
}

#[derive(Clone, Default)]
struct Renaming {
    forward: HashMap<TypeVar, TypeVar>,
    backward: HashMap<TypeVar, TypeVar>,
    pending: Vec<(TypeVar, TypeVar)>,
}

impl Renaming {
    fn pair(&mut self, x: &TypeVar, y: &TypeVar) -> bool {
        match (self.forward.get(x), self.backward.get(y)) {
            (Some(fy), _) => fy == y,
            (None, Some(_)) => false,
            (None, None) => {
                self.forward.insert(x.clone(), y.clone());
                self.backward.insert(y.clone(), x.clone());
                self.pending.push((x.clone(), y.clone()));
                true
            }
        }
    }

    fn unify(&mut self, t1: &RegexType, t2: &RegexType) -> bool {
        match (t1, t2) {
            (RegexType::Empty, RegexType::Empty) => true,
            (RegexType::Var(x), RegexType::Var(y)) => self.pair(x, y),
            (RegexType::Concat(a1, b1), RegexType::Concat(a2, b2))
            | (RegexType::Union(a1, b1), RegexType::Union(a2, b2)) => {
                self.unify(a1, a2) && self.unify(b1, b2)
            }
            (RegexType::Star(a1), RegexType::Star(a2)) => self.unify(a1, a2),
            (RegexType::Label(l1, a1), RegexType::Label(l2, a2)) => l1 == l2 && self.unify(a1, a2),
            _ => false,
        }
    }

    /// Compares the bodies of newly paired variables until none are left.
    fn settle(&mut self, r1: &InferenceResult, r2: &InferenceResult) -> bool {
        while let Some((x, y)) = self.pending.pop() {
            match (r1.bindings.get(&x), r2.bindings.get(&y)) {
                (Some(t1), Some(t2)) => {
                    if !self.unify(t1, t2) {
                        return false;
                    }
                }
                (None, None) => {}
                _ => return false,
            }
        }
        true
    }

    /// Pairs the bindings not reachable from the roots, backtracking over
    /// candidate partners.
    fn extend_unreached(&self, r1: &InferenceResult, r2: &InferenceResult) -> bool {
        let Some(x) = r1.bindings.vars().find(|x| !self.forward.contains_key(*x)) else {
            return true;
        };
        r2.bindings.vars().filter(|y| !self.backward.contains_key(*y)).any(|y| {
            let mut attempt = self.clone();
            attempt.pair(x, y) && attempt.settle(r1, r2) && attempt.extend_unreached(r1, r2)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;
    use crate::types::parse_types;

    fn result_from_text(text: &str) -> InferenceResult {
        let (bindings, root_type) = parse_types(text).unwrap();
        let introduced = bindings.vars().cloned().collect();
        InferenceResult { root_type, bindings, introduced }
    }

    #[test]
    fn product_grammar_numbering() {
        let g = parse_grammar("Prod = Val (^{ '*' Val #Prod })*\nVal = { [0-9] #Int }").unwrap();
        let r = infer_grammar(&g).unwrap();
        assert_eq!(
            r.to_text(),
            "type X1 = X2\n\
             type X2 = Prod[X2, Empty, X4] | X3\n\
             type X3 = Int[Empty]\n\
             type X4 = Int[Empty]\n\
             X1\n"
        );
        assert_eq!(r.introduced.len(), 4);
        assert_eq!(r.guardedness(), Ok(()));
    }

    #[test]
    fn capture_under_outer_scope() {
        let g = parse_grammar("Prod = Val\nVal = { [0-9] #Int }").unwrap();
        let val = g.rule("Val").unwrap();
        let mut env = TypeEnv::new();
        env.push("Prod", "X1".into());
        let r = infer_expr(val, &mut env, &mut FreshSupply::new(), &g).unwrap();
        assert_eq!(r.root_type, RegexType::label("Int", RegexType::Empty));
        assert!(r.bindings.is_empty());
        let r = infer_expr(&Expression::Terminal('*'), &mut env, &mut FreshSupply::new(), &g).unwrap();
        assert_eq!(r.root_type, RegexType::Empty);
        let r = infer_expr(&Expression::nt("Prod"), &mut env, &mut FreshSupply::new(), &g).unwrap();
        assert_eq!(r.root_type, RegexType::var("X1"));
    }

    #[test]
    fn trivial_grammars() {
        let r = infer_grammar(&parse_grammar("A = ''").unwrap()).unwrap();
        assert_eq!(r.to_text(), "type X1 = Empty\nX1\n");
        let r = infer_grammar(&parse_grammar("A = { 'a' #L } A / ''").unwrap()).unwrap();
        assert_eq!(r.to_text(), "type X1 = (L[Empty], X1) | Empty\nX1\n");
        assert!(r.guardedness().is_err());
    }

    #[test]
    fn refuses_ill_formed_grammars() {
        let g = parse_grammar("A = { 'a' #L } A { 'b' #M } / ''").unwrap();
        assert!(matches!(infer_grammar(&g), Err(InferenceError::NotWellFormed(_))));
        let forced = infer_grammar_with(&g, &InferOptions { force: true, ..Default::default() }).unwrap();
        assert!(matches!(check_regular(&forced.bindings), Err(TypeError::NotRegular { .. })));
    }

    #[test]
    fn variable_limit() {
        let g = parse_grammar("A = B B\nB = C C\nC = D D\nD = 'd'").unwrap();
        let options = InferOptions { max_variables: Some(5), ..Default::default() };
        assert_eq!(infer_grammar_with(&g, &options), Err(InferenceError::TooManyVariables { limit: 5 }));
        assert_eq!(infer_grammar(&g).unwrap().bindings.len(), 15);
    }

    #[test]
    fn alpha_equivalence() {
        let prod = result_from_text(
            "type X1 = X2\ntype X2 = Prod[X2, Empty, X4] | X3\ntype X3 = Int[Empty]\ntype X4 = Int[Empty]\nX1",
        );
        let swapped = result_from_text(
            "type X1 = X2\ntype X2 = Prod[X2, Empty, X3] | X4\ntype X3 = Int[Empty]\ntype X4 = Int[Empty]\nX1",
        );
        let renamed = result_from_text(
            "type A = B\ntype B = Prod[B, Empty, D] | C\ntype C = Int[Empty]\ntype D = Int[Empty]\nA",
        );
        assert!(alpha_equal(&prod, &swapped));
        assert!(alpha_equal(&prod, &renamed));
        let a = result_from_text("type X1 = Empty\nX1");
        let b = result_from_text("type X1 = L[Empty]\nX1");
        assert!(!alpha_equal(&a, &b));
        // unreachable bindings still need partners
        let c = result_from_text("type X1 = Empty\ntype X2 = L[X2]\nX1");
        let d = result_from_text("type Y1 = Empty\ntype Y2 = L[Y1]\nY1");
        assert!(!alpha_equal(&c, &d));
        let e = result_from_text("type Y1 = Empty\ntype Y2 = L[Y2]\nY1");
        assert!(alpha_equal(&c, &e));
    }

    #[test]
    fn dedup_is_optional() {
        let g = parse_grammar("Prod = Val (^{ '*' Val #Prod })*\nVal = { [0-9] #Int }").unwrap();
        let r = infer_grammar(&g).unwrap().deduplicated();
        assert_eq!(r.to_text(), "type X1 = X2\ntype X2 = Prod[X2, Empty, X3] | X3\ntype X3 = Int[Empty]\nX1\n");
    }
}
