//! Independent oracles and shared corpora for the integration tests.
//!
//! `relation` enumerates every derivation of the big-step evaluation rules,
//! building unnormalized values and normalizing them separately.
//! `derivable` searches for a derivation of `v : T` with the tree typing
//! rules by trying every way of splitting a value. Neither uses the
//! library's evaluator, normalizing concatenation or membership checker.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use cpeg::{Expression, GlobalSet, Grammar, Label, Node, RegexType, Tree};

/// A value as built by the rules, before normalization.
#[derive(Clone, Debug)]
pub enum Raw {
    Eps,
    Char(char),
    Pair(Box<Raw>, Box<Raw>),
    Node(Label, Box<Raw>),
}

enum Item {
    Text(String),
    Node(Node),
}

fn flatten(r: &Raw, out: &mut Vec<Item>) {
    match r {
        Raw::Eps => {}
        Raw::Char(c) => out.push(Item::Text(c.to_string())),
        Raw::Pair(a, b) => {
            flatten(a, out);
            flatten(b, out);
        }
        Raw::Node(l, body) => out.push(Item::Node(Node {
            label: l.clone(),
            children: normalize(body),
        })),
    }
}

/// Strings merge, and any string next to a node disappears.
pub fn normalize(r: &Raw) -> Tree {
    let mut items = Vec::new();
    flatten(r, &mut items);
    let nodes: Vec<Node> = items
        .iter()
        .filter_map(|i| match i {
            Item::Node(n) => Some(n.clone()),
            Item::Text(_) => None,
        })
        .collect();
    if nodes.is_empty() {
        let text: String = items
            .into_iter()
            .map(|i| match i {
                Item::Text(s) => s,
                Item::Node(_) => unreachable!(),
            })
            .collect();
        Tree::Str(text)
    } else {
        Tree::from_nodes(nodes)
    }
}

/// `None` is failure.
pub type Derivation = (Option<Raw>, usize);

pub struct Relation<'g> {
    grammar: &'g Grammar,
    input: Vec<char>,
    active: HashSet<(usize, usize, bool)>,
    /// Names of the rules used by some derivation so far.
    pub fired: BTreeSet<&'static str>,
}

impl<'g> Relation<'g> {
    pub fn new(grammar: &'g Grammar, input: &str) -> Self {
        Relation {
            grammar,
            input: input.chars().collect(),
            active: HashSet::new(),
            fired: BTreeSet::new(),
        }
    }

    /// All conclusions `e ⇓ o` derivable for the suffix starting at `pos`.
    /// A judgment that would need itself as a premise has no finite
    /// derivation, so re-entering one yields nothing.
    pub fn derive(&mut self, e: &Expression, pos: usize) -> Vec<Derivation> {
        let key = (e as *const Expression as usize, pos, false);
        if !self.active.insert(key) {
            return Vec::new();
        }
        let out = self.rules(e, pos);
        self.active.remove(&key);
        out
    }

    fn fire(&mut self, rule: &'static str) {
        self.fired.insert(rule);
    }

    fn rules(&mut self, e: &Expression, pos: usize) -> Vec<Derivation> {
        let mut out = Vec::new();
        match e {
            Expression::Empty => {
                self.fire("E-Empty");
                out.push((Some(Raw::Eps), pos));
            }
            Expression::Terminal(a) => match self.input.get(pos) {
                Some(c) if c == a => {
                    self.fire("E-Term1");
                    out.push((Some(Raw::Char(*a)), pos + 1));
                }
                Some(_) => {
                    self.fire("E-Term2");
                    out.push((None, pos));
                }
                // end of input fails like a mismatch
                None => out.push((None, pos)),
            },
            Expression::Any => match self.input.get(pos) {
                Some(c) => out.push((Some(Raw::Char(*c)), pos + 1)),
                None => out.push((None, pos)),
            },
            Expression::Nonterminal(name) => {
                let body = self.grammar.rule(name).expect("defined");
                for d in self.derive(body, pos) {
                    self.fire("E-Nt");
                    out.push(d);
                }
            }
            Expression::Sequence(e1, e2) => {
                for (o1, p1) in self.derive(e1, pos) {
                    match o1 {
                        None => {
                            self.fire("E-Seq2");
                            out.push((None, pos));
                        }
                        Some(v1) => {
                            for (o2, p2) in self.derive(e2, p1) {
                                match o2 {
                                    Some(v2) => {
                                        self.fire("E-Seq1");
                                        out.push((Some(Raw::Pair(Box::new(v1.clone()), Box::new(v2))), p2));
                                    }
                                    None => {
                                        self.fire("E-Seq3");
                                        out.push((None, pos));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Expression::Choice(e1, e2) => {
                for (o1, p1) in self.derive(e1, pos) {
                    match o1 {
                        Some(v1) => {
                            self.fire("E-Alt1");
                            out.push((Some(v1), p1));
                        }
                        None => {
                            for (o2, p2) in self.derive(e2, pos) {
                                match o2 {
                                    Some(v2) => {
                                        self.fire("E-Alt2");
                                        out.push((Some(v2), p2));
                                    }
                                    None => {
                                        self.fire("E-Alt3");
                                        out.push((None, pos));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Expression::Repetition(body) => {
                for (o, p) in self.derive(body, pos) {
                    match o {
                        Some(v1) => {
                            for (o2, p2) in self.derive(e, p) {
                                if let Some(v2) = o2 {
                                    self.fire("E-Rep1");
                                    out.push((Some(Raw::Pair(Box::new(v1.clone()), Box::new(v2))), p2));
                                }
                            }
                        }
                        None => {
                            self.fire("E-Rep2");
                            out.push((Some(Raw::Eps), pos));
                        }
                    }
                }
            }
            Expression::Not(body) => {
                for (o, _) in self.derive(body, pos) {
                    if o.is_some() {
                        self.fire("E-Not1");
                        out.push((None, pos));
                    } else {
                        self.fire("E-Not2");
                        out.push((Some(Raw::Eps), pos));
                    }
                }
            }
            Expression::Capture(label, body) => {
                for (o, p) in self.derive(body, pos) {
                    match o {
                        Some(v) => {
                            self.fire("E-Capture1");
                            out.push((Some(Raw::Node(label.clone(), Box::new(v))), p));
                        }
                        None => {
                            self.fire("E-Capture2");
                            out.push((None, pos));
                        }
                    }
                }
            }
            Expression::FoldCapture(label, e1, e2) => {
                for (o1, p1) in self.derive(e1, pos) {
                    let Some(v1) = o1 else {
                        self.fire("E-FoldCap2");
                        out.push((None, pos));
                        continue;
                    };
                    for (tail, end) in self.chain(e2, p1) {
                        if tail.is_empty() {
                            self.fire("E-FoldCap3");
                            out.push((Some(v1.clone()), end));
                            continue;
                        }
                        self.fire("E-FoldCap1");
                        if tail.len() >= 2 {
                            self.fire("E-FoldCap1 n>=3");
                        }
                        let mut acc = v1.clone();
                        for v in tail {
                            acc = Raw::Node(label.clone(), Box::new(Raw::Pair(Box::new(acc), Box::new(v))));
                        }
                        out.push((Some(acc), end));
                    }
                }
            }
        }
        out
    }

    /// Successive successes of `e2` ending with a failure, as in the
    /// premises of the fold rules.
    fn chain(&mut self, e2: &Expression, pos: usize) -> Vec<(Vec<Raw>, usize)> {
        let key = (e2 as *const Expression as usize, pos, true);
        if !self.active.insert(key) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (o, p) in self.derive(e2, pos) {
            match o {
                None => out.push((Vec::new(), pos)),
                Some(v) => {
                    for (rest, end) in self.chain(e2, p) {
                        let mut items = vec![v.clone()];
                        items.extend(rest);
                        out.push((items, end));
                    }
                }
            }
        }
        self.active.remove(&key);
        out
    }
}

/// Every normalized outcome derivable for the start expression, as
/// `(tree or failure, characters consumed)`.
pub fn relation(g: &Grammar, input: &str) -> (Vec<(Option<Tree>, usize)>, BTreeSet<&'static str>) {
    let mut r = Relation::new(g, input);
    let results = r
        .derive(g.start(), 0)
        .into_iter()
        .map(|(o, p)| (o.as_ref().map(normalize), p))
        .collect();
    (results, r.fired)
}

/// Derivation search for `v : t`.
pub fn derivable(v: &Tree, t: &RegexType, e: &GlobalSet) -> bool {
    Search {
        set: e,
        path: HashSet::new(),
    }
    .check(v, t)
}

struct Search<'e> {
    set: &'e GlobalSet,
    /// Judgments on the current branch; a minimal derivation never repeats
    /// one along a path.
    path: HashSet<(String, usize)>,
}

/// Strings a piece absorbed next to a node may stand for.
const ABSORBED: [&str; 3] = ["", "a", "ab"];

impl Search<'_> {
    fn check(&mut self, v: &Tree, t: &RegexType) -> bool {
        let key = (format!("{v:?}"), t as *const RegexType as usize);
        if !self.path.insert(key.clone()) {
            return false;
        }
        let r = self.rules(v, t);
        self.path.remove(&key);
        r
    }

    fn rules(&mut self, v: &Tree, t: &RegexType) -> bool {
        match t {
            // S-Empty
            RegexType::Empty => matches!(v, Tree::Str(_)),
            // S-Seq
            RegexType::Concat(t1, t2) => splits(v)
                .into_iter()
                .any(|(v1, v2)| self.check(&v1, t1) && self.check(&v2, t2)),
            // S-Or1, S-Or2
            RegexType::Union(t1, t2) => self.check(v, t1) || self.check(v, t2),
            // S-Rep
            RegexType::Star(body) => pieces(v)
                .into_iter()
                .any(|ps| ps.iter().all(|p| self.check(p, body))),
            // S-Node
            RegexType::Label(l, body) => match v {
                Tree::Nodes(ns) if ns.len() == 1 && ns[0].label == *l => self.check(&ns[0].children, body),
                _ => false,
            },
            // S-Var
            RegexType::Var(x) => match self.set.get(x) {
                Some(body) => self.check(v, body),
                None => false,
            },
        }
    }
}

fn hedge(nodes: &[Node]) -> Tree {
    Tree::from_nodes(nodes.to_vec())
}

/// Pairs `(v1, v2)` whose normalized concatenation is `v`.
fn splits(v: &Tree) -> Vec<(Tree, Tree)> {
    match v {
        Tree::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            (0..=chars.len())
                .map(|i| {
                    (
                        Tree::Str(chars[..i].iter().collect()),
                        Tree::Str(chars[i..].iter().collect()),
                    )
                })
                .collect()
        }
        Tree::Nodes(ns) => {
            let mut out = Vec::new();
            for j in 0..=ns.len() {
                let lefts: Vec<Tree> = if j == 0 {
                    ABSORBED.iter().map(|s| Tree::string(*s)).collect()
                } else {
                    vec![hedge(&ns[..j])]
                };
                let rights: Vec<Tree> = if j == ns.len() {
                    ABSORBED.iter().map(|s| Tree::string(*s)).collect()
                } else {
                    vec![hedge(&ns[j..])]
                };
                for l in &lefts {
                    for r in &rights {
                        out.push((l.clone(), r.clone()));
                    }
                }
            }
            out
        }
    }
}

/// Ways of writing `v` as `v1, ..., vn` for the repetition rule. String
/// pieces beside nodes are dropped, since leaving them out gives the same
/// value from fewer premises.
fn pieces(v: &Tree) -> Vec<Vec<Tree>> {
    match v {
        Tree::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            let mut out = Vec::new();
            if chars.is_empty() {
                out.push(Vec::new());
                out.push(vec![Tree::empty()]);
            }
            for cut in compositions(chars.len()) {
                out.push(
                    cut.windows(2)
                        .map(|w| Tree::Str(chars[w[0]..w[1]].iter().collect()))
                        .collect(),
                );
            }
            out
        }
        Tree::Nodes(ns) => compositions(ns.len())
            .into_iter()
            .map(|cut| cut.windows(2).map(|w| hedge(&ns[w[0]..w[1]])).collect())
            .collect(),
    }
}

/// Cut points `0 = c0 < c1 < ... < ck = n` of `0..n` into non-empty parts.
fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return Vec::new();
    }
    (0..1u32 << (n - 1))
        .map(|mask| {
            let mut cut = vec![0];
            for i in 1..n {
                if mask & (1 << (i - 1)) != 0 {
                    cut.push(i);
                }
            }
            cut.push(n);
            cut
        })
        .collect()
}

/// All normalized values with exactly `n` nodes over `labels`; string
/// leaves are drawn from `leaves`.
pub fn values_with_nodes(n: usize, labels: &[&str], leaves: &[&str]) -> Vec<Tree> {
    if n == 0 {
        return leaves.iter().map(|s| Tree::string(*s)).collect();
    }
    forests(n, labels, leaves).into_iter().map(Tree::from_nodes).collect()
}

fn forests(n: usize, labels: &[&str], leaves: &[&str]) -> Vec<Vec<Node>> {
    let mut out = Vec::new();
    // the first tree takes 1 + k nodes, the rest of the hedge n - 1 - k
    for k in 0..n {
        let children = values_with_nodes(k, labels, leaves);
        let rests: Vec<Vec<Node>> = if n - 1 - k == 0 {
            vec![Vec::new()]
        } else {
            forests(n - 1 - k, labels, leaves)
        };
        for l in labels {
            for c in &children {
                for rest in &rests {
                    let mut hedge = vec![Node {
                        label: Label::new(l),
                        children: c.clone(),
                    }];
                    hedge.extend(rest.iter().cloned());
                    out.push(hedge);
                }
            }
        }
    }
    out
}

/// Every string over `alphabet` of length at most `max_len`, shortest first.
pub fn strings_up_to(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| {
                alphabet.iter().map(move |c| {
                    let mut t = s.clone();
                    t.push(*c);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

pub const VAL: &str = "Val = { [0-9]+ #Int }";

/// Product grammars, each with a start rule and `Val`.
pub fn product_grammars() -> Vec<(&'static str, String)> {
    vec![
        ("Val", VAL.to_string()),
        ("Prod2", format!("Prod2 = {{ Val '*' Val #Mul }}\n{VAL}")),
        ("ProdM", format!("ProdM = {{ Val ('*' Val)* #Mul }}\n{VAL}")),
        ("Prod", format!("Prod = {{ Val ('*' Prod) #Mul }} / Val\n{VAL}")),
        ("ProdL", format!("ProdL = Val (^{{ '*' Val #Mul }})*\n{VAL}")),
    ]
}

pub const PRODUCT_GRAMMAR: &str = "Prod = Val (^{ '*' Val #Prod })*\nVal = { [0-9] #Int }";

pub const PRODUCT_TYPES: &str = "type X1 = X2\n\
                                type X2 = Prod[X2, Empty, X4] | X3\n\
                                type X3 = Int[Empty]\n\
                                type X4 = Int[Empty]\n\
                                X1\n";

/// Well-formedness examples, with the expected
/// classification.
pub fn well_formedness_examples() -> Vec<(&'static str, bool)> {
    vec![
        ("A = {'x' #L1} A {'y' #L2} / 'e'", false),
        ("A = {'x' #L1} A / 'e'", true),
        ("A = {'x' #L1} A 'a' / 'e'", true),
        ("A = {'x' #L1} B 'a' / 'e'\nB = {'y' #L2} A / 'f'", true),
    ]
}

/// Well-formed grammars without left recursion, with the alphabet their
/// inputs are drawn from.
pub fn soundness_corpus() -> Vec<(String, Vec<char>)> {
    let digits = vec!['1', '2', '*'];
    let mut corpus: Vec<(String, Vec<char>)> = product_grammars()
        .into_iter()
        .map(|(_, g)| (g, digits.clone()))
        .collect();
    corpus.push((PRODUCT_GRAMMAR.to_string(), digits.clone()));
    corpus.push((format!("Prod2 = Val ^{{ '*' Val #Mul }}\n{VAL}"), digits.clone()));
    for (g, ok) in well_formedness_examples() {
        if ok {
            corpus.push((g.to_string(), vec!['x', 'y', 'a', 'e', 'f']));
        }
    }
    corpus.push((
        "Expr = Term (^{ '+' Term #Add })*\nTerm = { [0-9] #Num } / '(' Expr ')'".to_string(),
        vec!['1', '+', '(', ')'],
    ));
    corpus.push((
        "List = { Item (',' Item)* #List }\nItem = { 'a' #A } / { 'b' #B }".to_string(),
        vec!['a', 'b', ','],
    ));
    corpus.push((
        "E = { 'a' #A } (^{ '+' { 'a' #A } #Plus } / ^{ '-' { 'a' #A } #Minus })?".to_string(),
        vec!['a', '+', '-'],
    ));
    corpus.push((
        "S = ({ !'b' . #NotB } / 'b')* &'c' { 'c'? #End }".to_string(),
        vec!['a', 'b', 'c'],
    ));
    corpus.push((
        "Tree = { '(' Tree ')' #Node } / { [ab] #Leaf }".to_string(),
        vec!['(', ')', 'a'],
    ));
    corpus
}

/// Labeled types over `A` and `B` that pass the strict guardedness check.
pub const GUARDED_TYPES: &[&str] = &[
    "Empty",
    "A[Empty]",
    "B[Empty]",
    "A[Empty] | B[Empty]",
    "A[Empty], B[Empty]",
    "A[Empty]*",
    "(A[Empty] | B[Empty])*",
    "A[B[Empty]]",
    "A[B[Empty]*]",
    "A[Empty], Empty",
    "Empty | A[Empty]",
    "A[Empty]*, B[Empty]",
    "A[A[Empty] | Empty]",
    "(A[Empty], B[Empty])*",
    "A[Empty*]",
    "A[B[Empty], Empty]*",
    "type X = A[X] | Empty\nX",
    "type X = A[X] | B[Empty]\nX",
    "type X = A[X, X] | B[Empty]\nX",
    "type X = B[Y*]\ntype Y = A[Empty]\nX",
    "type X = A[Y]\ntype Y = B[X] | Empty\nX",
    "type X = A[X*]\nX",
    "type X = A[Empty]\ntype Y = X, X\nY",
    "type X = Y\ntype Y = A[Empty]*\nX",
    "type X = A[X | Empty], B[Empty]*\nX",
    "type P = A[P, Q] | Q\ntype Q = B[Empty]\nP",
];
