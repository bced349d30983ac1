//! Tree membership.
//!
//! A string value matches a type according to its [`StringClass`]. A
//! sequence of nodes is matched by computing, for a type and a start
//! position, the set of positions where a match can end. Variables are
//! tabulated per start position and the table is grown to a least fixpoint,
//! so recursion without a label cannot loop.

use std::collections::{HashMap, HashSet};

use super::{class_of, string_classes, GlobalSet, RegexType, StringClass, TypeError, TypeVar};
use crate::tree::{Node, Tree};

/// Whether `v : t` is derivable under the bindings `e`.
pub fn member(v: &Tree, t: &RegexType, e: &GlobalSet) -> Result<bool, TypeError> {
    e.check_closed(t)?;
    let ctx = Context {
        set: e,
        classes: string_classes(e),
    };
    Ok(ctx.matches(v, t))
}

struct Context<'e> {
    set: &'e GlobalSet,
    classes: HashMap<&'e TypeVar, StringClass>,
}

impl<'e> Context<'e> {
    fn matches(&self, v: &Tree, t: &'e RegexType) -> bool {
        match v {
            Tree::Str(s) => class_of(t, &self.classes).admits(s),
            Tree::Nodes(nodes) => HedgeMatcher::new(self, nodes).accepts(t),
        }
    }
}

/// End positions `0..=n` as a bit set.
#[derive(Clone, PartialEq, Eq)]
struct Positions(Vec<u64>);

impl Positions {
    fn empty(n: usize) -> Self {
        Positions(vec![0; n / 64 + 1])
    }

    fn single(n: usize, i: usize) -> Self {
        let mut p = Positions::empty(n);
        p.insert(i);
        p
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }

    fn union_with(&mut self, other: &Positions) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64).filter(move |b| bits & (1 << b) != 0).map(move |b| w * 64 + b)
        })
    }
}

struct HedgeMatcher<'c, 'e, 'v> {
    ctx: &'c Context<'e>,
    nodes: &'v [Node],
    /// Current approximation of each variable's end positions.
    table: HashMap<(&'e TypeVar, usize), Positions>,
    /// Entries already recomputed in this round.
    done: HashSet<(&'e TypeVar, usize)>,
    changed: bool,
    children: HashMap<(usize, *const RegexType), bool>,
}

impl<'c, 'e, 'v> HedgeMatcher<'c, 'e, 'v> {
    fn new(ctx: &'c Context<'e>, nodes: &'v [Node]) -> Self {
        HedgeMatcher {
            ctx,
            nodes,
            table: HashMap::new(),
            done: HashSet::new(),
            changed: false,
            children: HashMap::new(),
        }
    }

    fn accepts(&mut self, t: &'e RegexType) -> bool {
        loop {
            self.changed = false;
            self.done.clear();
            let ends = self.ends(t, 0);
            if !self.changed {
                return ends.contains(self.nodes.len());
            }
        }
    }

    fn ends(&mut self, t: &'e RegexType, i: usize) -> Positions {
        let n = self.nodes.len();
        match t {
            RegexType::Empty => Positions::single(n, i),
            RegexType::Label(label, body) => {
                if i < n && self.nodes[i].label == *label && self.child_matches(i, body) {
                    Positions::single(n, i + 1)
                } else {
                    Positions::empty(n)
                }
            }
            RegexType::Union(a, b) => {
                let mut out = self.ends(a, i);
                out.union_with(&self.ends(b, i));
                out
            }
            RegexType::Concat(a, b) => {
                let mut out = Positions::empty(n);
                for j in self.ends(a, i).iter().collect::<Vec<_>>() {
                    out.union_with(&self.ends(b, j));
                }
                out
            }
            RegexType::Star(body) => {
                let mut out = Positions::single(n, i);
                let mut frontier = vec![i];
                while let Some(j) = frontier.pop() {
                    for k in self.ends(body, j).iter().collect::<Vec<_>>() {
                        if !out.contains(k) {
                            out.insert(k);
                            frontier.push(k);
                        }
                    }
                }
                out
            }
            RegexType::Var(x) => self.var_ends(x, i),
        }
    }

    fn var_ends(&mut self, x: &'e TypeVar, i: usize) -> Positions {
        let (x, body) = self
            .ctx
            .set
            .defs
            .get_key_value(x)
            .expect("variables are checked before matching");
        let key = (x, i);
        if !self.done.insert(key) {
            // in progress or already settled this round
            return self.current(key);
        }
        let fresh = self.ends(body, i);
        let mut entry = self.current(key);
        let before = entry.clone();
        entry.union_with(&fresh);
        if entry != before {
            self.changed = true;
        }
        self.table.insert(key, entry.clone());
        entry
    }

    fn current(&self, key: (&'e TypeVar, usize)) -> Positions {
        self.table
            .get(&key)
            .cloned()
            .unwrap_or_else(|| Positions::empty(self.nodes.len()))
    }

    fn child_matches(&mut self, i: usize, body: &'e RegexType) -> bool {
        let key = (i, body as *const RegexType);
        if let Some(&r) = self.children.get(&key) {
            return r;
        }
        let r = self.ctx.matches(&self.nodes[i].children, body);
        self.children.insert(key, r);
        r
    }
}
