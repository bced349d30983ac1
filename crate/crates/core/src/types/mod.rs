//! Regular expression types over hedges.
//!
//! A type describes sequences of labeled trees. Strings carry no type
//! content: `Empty` admits any string, and a string adjacent to a node is
//! absorbed by normalization, so only node structure is checked.
//!
//! Type variables are given meaning by a single [`GlobalSet`] of
//! `type X = T` bindings. Recursion through a variable is expected to pass
//! through a label; [`check_guarded`] verifies this strictly and
//! [`check_regular`] verifies a weaker tail-position condition.

mod member;
mod syntax;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{cycle_through, strongly_connected};
use crate::label::Label;

pub use member::member;
pub use syntax::{parse_types, serialize_types};

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeVar(String);

impl TypeVar {
    pub fn new(name: impl Into<String>) -> Self {
        TypeVar(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Splits a trailing decimal suffix off the name.
    fn split_numeric(&self) -> (&str, &str) {
        let digits = self.0.bytes().rev().take_while(u8::is_ascii_digit).count();
        self.0.split_at(self.0.len() - digits)
    }
}

impl Ord for TypeVar {
    /// Orders `X2` before `X10`.
    fn cmp(&self, other: &Self) -> Ordering {
        let (p1, d1) = self.split_numeric();
        let (p2, d2) = other.split_numeric();
        let t1 = d1.trim_start_matches('0');
        let t2 = d2.trim_start_matches('0');
        p1.cmp(p2)
            .then(t1.len().cmp(&t2.len()))
            .then(t1.cmp(t2))
            .then(self.0.cmp(&other.0))
    }
}

impl PartialOrd for TypeVar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for TypeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for TypeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TypeVar {
    fn from(s: &str) -> Self {
        TypeVar::new(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegexType {
    Empty,
    Concat(Box<RegexType>, Box<RegexType>),
    Union(Box<RegexType>, Box<RegexType>),
    Star(Box<RegexType>),
    Label(Label, Box<RegexType>),
    Var(TypeVar),
}

impl RegexType {
    pub fn concat(first: RegexType, second: RegexType) -> Self {
        RegexType::Concat(Box::new(first), Box::new(second))
    }

    pub fn union(first: RegexType, second: RegexType) -> Self {
        RegexType::Union(Box::new(first), Box::new(second))
    }

    pub fn star(body: RegexType) -> Self {
        RegexType::Star(Box::new(body))
    }

    pub fn label(label: impl Into<Label>, body: RegexType) -> Self {
        RegexType::Label(label.into(), Box::new(body))
    }

    pub fn var(name: impl Into<TypeVar>) -> Self {
        RegexType::Var(name.into())
    }

    /// Right-nested concatenation; `Empty` for no items.
    pub fn concat_all(items: impl IntoIterator<Item = RegexType>) -> Self {
        let mut items: Vec<_> = items.into_iter().collect();
        let mut acc = match items.pop() {
            Some(last) => last,
            None => return RegexType::Empty,
        };
        while let Some(prev) = items.pop() {
            acc = RegexType::concat(prev, acc);
        }
        acc
    }

    /// Variables mentioned anywhere in the type, in first-occurrence order.
    pub fn variables(&self) -> Vec<&TypeVar> {
        let mut out = Vec::new();
        self.collect_vars(&mut out, false);
        out
    }

    /// Variables reachable without passing through a label.
    fn unguarded_variables(&self) -> Vec<&TypeVar> {
        let mut out = Vec::new();
        self.collect_vars(&mut out, true);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a TypeVar>, stop_at_labels: bool) {
        match self {
            RegexType::Empty => {}
            RegexType::Var(x) => {
                if !out.contains(&x) {
                    out.push(x)
                }
            }
            RegexType::Concat(a, b) | RegexType::Union(a, b) => {
                a.collect_vars(out, stop_at_labels);
                b.collect_vars(out, stop_at_labels);
            }
            RegexType::Star(a) => a.collect_vars(out, stop_at_labels),
            RegexType::Label(_, a) => {
                if !stop_at_labels {
                    a.collect_vars(out, stop_at_labels)
                }
            }
        }
    }

    /// Applies `f` to every variable occurrence.
    pub fn rename(&self, f: &impl Fn(&TypeVar) -> TypeVar) -> RegexType {
        match self {
            RegexType::Empty => RegexType::Empty,
            RegexType::Var(x) => RegexType::Var(f(x)),
            RegexType::Concat(a, b) => RegexType::concat(a.rename(f), b.rename(f)),
            RegexType::Union(a, b) => RegexType::union(a.rename(f), b.rename(f)),
            RegexType::Star(a) => RegexType::star(a.rename(f)),
            RegexType::Label(l, a) => RegexType::label(l.clone(), a.rename(f)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unbound type variable {0}")]
    Unbound(TypeVar),
    #[error("type variable {0} is defined twice")]
    Redefined(TypeVar),
    #[error("recursion without a label: {}", render_cycle(.cycle))]
    Unguarded { cycle: Vec<TypeVar> },
    #[error("recursion without a label followed by nodes: {}", render_cycle(.cycle))]
    NotRegular { cycle: Vec<TypeVar> },
    #[error("type syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
}

fn render_cycle(cycle: &[TypeVar]) -> String {
    cycle
        .iter()
        .chain(cycle.first())
        .map(TypeVar::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// The bindings `type X = T`, ordered by variable name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GlobalSet {
    defs: BTreeMap<TypeVar, RegexType>,
}

impl GlobalSet {
    pub fn new() -> Self {
        GlobalSet::default()
    }

    pub fn from_bindings(
        bindings: impl IntoIterator<Item = (TypeVar, RegexType)>,
    ) -> Result<Self, TypeError> {
        let mut set = GlobalSet::new();
        for (x, t) in bindings {
            set.define(x, t)?;
        }
        Ok(set)
    }

    pub fn define(&mut self, x: TypeVar, t: RegexType) -> Result<(), TypeError> {
        if self.defs.contains_key(&x) {
            return Err(TypeError::Redefined(x));
        }
        self.defs.insert(x, t);
        Ok(())
    }

    /// Adds every binding of `other`; the domains must be disjoint.
    pub fn merge(&mut self, other: GlobalSet) -> Result<(), TypeError> {
        if let Some(x) = other.defs.keys().find(|x| self.defs.contains_key(*x)) {
            return Err(TypeError::Redefined(x.clone()));
        }
        self.defs.extend(other.defs);
        Ok(())
    }

    /// The body bound to `x`, without chasing further variables.
    pub fn resolve(&self, x: &TypeVar) -> Result<&RegexType, TypeError> {
        self.defs.get(x).ok_or_else(|| TypeError::Unbound(x.clone()))
    }

    pub fn get(&self, x: &TypeVar) -> Option<&RegexType> {
        self.defs.get(x)
    }

    pub fn contains(&self, x: &TypeVar) -> bool {
        self.defs.contains_key(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TypeVar, &RegexType)> {
        self.defs.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &TypeVar> {
        self.defs.keys()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// Fails on the first variable mentioned by a body or by `root` that has
    /// no binding.
    pub fn check_closed(&self, root: &RegexType) -> Result<(), TypeError> {
        for t in std::iter::once(root).chain(self.defs.values()) {
            if let Some(x) = t.variables().into_iter().find(|x| !self.contains(x)) {
                return Err(TypeError::Unbound(x.clone()));
            }
        }
        Ok(())
    }

    fn index(&self) -> (Vec<&TypeVar>, HashMap<&TypeVar, usize>) {
        let names: Vec<&TypeVar> = self.defs.keys().collect();
        let index = names.iter().enumerate().map(|(i, x)| (*x, i)).collect();
        (names, index)
    }

    /// Edges `X -> Y` for each `Y` reachable from `X`'s body without
    /// passing through a label.
    fn unguarded_graph(&self) -> Result<(Vec<&TypeVar>, Vec<BTreeSet<usize>>), TypeError> {
        let (names, index) = self.index();
        let mut graph = vec![BTreeSet::new(); names.len()];
        for (i, t) in self.defs.values().enumerate() {
            for y in t.unguarded_variables() {
                let j = *index.get(y).ok_or_else(|| TypeError::Unbound(y.clone()))?;
                graph[i].insert(j);
            }
        }
        Ok((names, graph))
    }
}

impl<'a> IntoIterator for &'a GlobalSet {
    type Item = (&'a TypeVar, &'a RegexType);
    type IntoIter = std::collections::btree_map::Iter<'a, TypeVar, RegexType>;

    fn into_iter(self) -> Self::IntoIter {
        self.defs.iter()
    }
}

fn cyclic_components(graph: &[BTreeSet<usize>]) -> Vec<Vec<usize>> {
    strongly_connected(graph)
        .into_iter()
        .filter(|c| c.len() > 1 || graph[c[0]].contains(&c[0]))
        .collect()
}

/// Every cycle among the bindings must pass through a label constructor.
pub fn check_guarded(e: &GlobalSet) -> Result<(), TypeError> {
    let (names, graph) = e.unguarded_graph()?;
    match cyclic_components(&graph).into_iter().min_by_key(|c| c.iter().min().copied()) {
        None => Ok(()),
        Some(c) => {
            let start = *c.iter().min().expect("components are non-empty");
            let cycle = cycle_through(&graph, &c, start);
            Err(TypeError::Unguarded {
                cycle: cycle.into_iter().map(|i| names[i].clone()).collect(),
            })
        }
    }
}

/// A weaker guardedness condition, the counterpart on types of the
/// grammar's tail-position restriction. An unguarded cycle is tolerated as
/// long as nothing that can contain a label is concatenated after the
/// recursive reference, so `type X = (L[Empty], X) | Empty` passes while
/// `type X = (X, L[Empty]) | Empty` does not. Bindings that pass are
/// right-linear in their node content.
pub fn check_regular(e: &GlobalSet) -> Result<(), TypeError> {
    let (names, graph) = e.unguarded_graph()?;
    let (_, index) = e.index();
    let labelled = labelled_vars(e);

    let mut component = vec![usize::MAX; names.len()];
    for (n, c) in cyclic_components(&graph).into_iter().enumerate() {
        for v in c {
            component[v] = n;
        }
    }

    for (i, t) in e.defs.values().enumerate() {
        let mut offending = Vec::new();
        followed_refs(t, false, &labelled, &mut offending);
        for y in offending {
            let j = index[y];
            if component[i] != usize::MAX && component[i] == component[j] {
                let members: Vec<usize> =
                    (0..names.len()).filter(|&k| component[k] == component[i]).collect();
                let mut cycle = cycle_through(&graph, &members, j);
                // rotate so the offending edge's source comes first
                let at = cycle.iter().position(|&k| k == i).unwrap_or(0);
                cycle.rotate_left(at);
                return Err(TypeError::NotRegular {
                    cycle: cycle.into_iter().map(|k| names[k].clone()).collect(),
                });
            }
        }
    }
    Ok(())
}

/// Variables whose denotation may mention a label.
fn labelled_vars(e: &GlobalSet) -> BTreeSet<&TypeVar> {
    let mut set = BTreeSet::new();
    loop {
        let before = set.len();
        for (x, t) in e.iter() {
            if !set.contains(x) && has_label(t, &set) {
                set.insert(x);
            }
        }
        if set.len() == before {
            return set;
        }
    }
}

fn has_label(t: &RegexType, labelled: &BTreeSet<&TypeVar>) -> bool {
    match t {
        RegexType::Empty => false,
        RegexType::Label(..) => true,
        RegexType::Var(x) => labelled.contains(x),
        RegexType::Concat(a, b) | RegexType::Union(a, b) => {
            has_label(a, labelled) || has_label(b, labelled)
        }
        RegexType::Star(a) => has_label(a, labelled),
    }
}

/// Unguarded references that something label-bearing may follow. `follow`
/// says whether the context after `t` can contain a label.
fn followed_refs<'a>(
    t: &'a RegexType,
    follow: bool,
    labelled: &BTreeSet<&TypeVar>,
    out: &mut Vec<&'a TypeVar>,
) {
    match t {
        RegexType::Empty | RegexType::Label(..) => {}
        RegexType::Var(x) => {
            if follow {
                out.push(x)
            }
        }
        RegexType::Concat(a, b) => {
            followed_refs(a, follow || has_label(b, labelled), labelled, out);
            followed_refs(b, follow, labelled, out);
        }
        RegexType::Union(a, b) => {
            followed_refs(a, follow, labelled, out);
            followed_refs(b, follow, labelled, out);
        }
        RegexType::Star(a) => followed_refs(a, follow || has_label(a, labelled), labelled, out),
    }
}

/// Which plain strings a type admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StringClass {
    /// No string at all.
    None,
    /// Only the empty string.
    EmptyOnly,
    /// Every string.
    Any,
}

impl StringClass {
    fn concat(self, other: StringClass) -> StringClass {
        match (self, other) {
            (StringClass::None, _) | (_, StringClass::None) => StringClass::None,
            (StringClass::Any, _) | (_, StringClass::Any) => StringClass::Any,
            _ => StringClass::EmptyOnly,
        }
    }

    fn star(self) -> StringClass {
        self.max(StringClass::EmptyOnly)
    }

    pub fn admits(self, s: &str) -> bool {
        match self {
            StringClass::None => false,
            StringClass::EmptyOnly => s.is_empty(),
            StringClass::Any => true,
        }
    }
}

/// Least-fixpoint string classes of every bound variable.
pub(crate) fn string_classes(e: &GlobalSet) -> HashMap<&TypeVar, StringClass> {
    let mut table: HashMap<&TypeVar, StringClass> =
        e.vars().map(|x| (x, StringClass::None)).collect();
    loop {
        let mut changed = false;
        for (x, t) in e.iter() {
            let c = class_of(t, &table);
            if c != table[x] {
                table.insert(x, c);
                changed = true;
            }
        }
        if !changed {
            return table;
        }
    }
}

/// Class of `t` given classes for its variables; unknown variables count as
/// admitting nothing.
pub(crate) fn class_of(t: &RegexType, table: &HashMap<&TypeVar, StringClass>) -> StringClass {
    match t {
        RegexType::Empty => StringClass::Any,
        RegexType::Label(..) => StringClass::None,
        RegexType::Var(x) => table.get(x).copied().unwrap_or(StringClass::None),
        RegexType::Concat(a, b) => class_of(a, table).concat(class_of(b, table)),
        RegexType::Union(a, b) => class_of(a, table).max(class_of(b, table)),
        RegexType::Star(a) => class_of(a, table).star(),
    }
}

pub fn string_class(t: &RegexType, e: &GlobalSet) -> Result<StringClass, TypeError> {
    e.check_closed(t)?;
    Ok(class_of(t, &string_classes(e)))
}

/// Whether some node-free value inhabits `t`.
pub fn string_nullable(t: &RegexType, e: &GlobalSet) -> Result<bool, TypeError> {
    Ok(string_class(t, e)? != StringClass::None)
}

/// Merges bindings with identical bodies into the earliest such variable,
/// repeating until nothing changes. Only the names change; the denotation
/// of every type is preserved.
pub fn dedup_bindings(e: &GlobalSet, root: &RegexType) -> (GlobalSet, RegexType) {
    let mut set = e.clone();
    let mut root = root.clone();
    loop {
        let mut first: HashMap<&RegexType, &TypeVar> = HashMap::new();
        let mut alias: HashMap<TypeVar, TypeVar> = HashMap::new();
        for (x, t) in set.iter() {
            match first.get(t) {
                Some(&y) => {
                    alias.insert(x.clone(), y.clone());
                }
                None => {
                    first.insert(t, x);
                }
            }
        }
        if alias.is_empty() {
            return (set, root);
        }
        let f = |x: &TypeVar| alias.get(x).cloned().unwrap_or_else(|| x.clone());
        set = GlobalSet {
            defs: set
                .iter()
                .filter(|(x, _)| !alias.contains_key(*x))
                .map(|(x, t)| (x.clone(), t.rename(&f)))
                .collect(),
        };
        root = root.rename(&f);
    }
}

/// The JSON rendering used by tooling: `{"root": ..., "bindings": {...}}`.
pub fn types_to_json(e: &GlobalSet, root: &RegexType) -> String {
    #[derive(Serialize)]
    struct Document<'a> {
        root: &'a RegexType,
        bindings: &'a GlobalSet,
    }
    serde_json::to_string(&Document { root, bindings: e }).expect("types serialize to JSON")
}
