//! Labeled unranked trees over labels and strings.
//!
//! A tree value is either a string or a non-empty sequence of labeled nodes.
//! Values are kept normalized by construction:
//!
//! - `x, y` is the string `xy`;
//! - `L[v], x` and `x, L[v]` are `L[v]` (strings next to nodes are dropped).
//!
//! so structural equality is equality up to these equations.

use std::fmt::{self, Write as _};
use std::ops::Deref;

use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::label::{is_identifier, Label};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tree {
    /// A string leaf; `Str("")` is the empty tree.
    Str(String),
    Nodes(Hedge),
}

/// A non-empty ordered sequence of nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Hedge(Vec<Node>);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub label: Label,
    pub children: Tree,
}

impl Hedge {
    /// `None` for an empty vector.
    pub fn new(nodes: Vec<Node>) -> Option<Self> {
        if nodes.is_empty() {
            None
        } else {
            Some(Hedge(nodes))
        }
    }

    pub fn into_vec(self) -> Vec<Node> {
        self.0
    }
}

impl Deref for Hedge {
    type Target = [Node];

    fn deref(&self) -> &[Node] {
        &self.0
    }
}

impl Default for Tree {
    fn default() -> Self {
        Tree::empty()
    }
}

impl Tree {
    pub fn empty() -> Self {
        Tree::Str(String::new())
    }

    pub fn string(s: impl Into<String>) -> Self {
        Tree::Str(s.into())
    }

    /// `L[v]`.
    pub fn node(label: impl Into<Label>, children: Tree) -> Self {
        Tree::Nodes(Hedge(vec![Node {
            label: label.into(),
            children,
        }]))
    }

    /// A hedge from a list of nodes; the empty list is the empty string.
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        match Hedge::new(nodes) {
            Some(h) => Tree::Nodes(h),
            None => Tree::empty(),
        }
    }

    /// Normalizing concatenation `v1, v2`.
    pub fn concat(self, other: Tree) -> Tree {
        match (self, other) {
            (Tree::Str(mut a), Tree::Str(b)) => {
                a.push_str(&b);
                Tree::Str(a)
            }
            (Tree::Nodes(mut a), Tree::Nodes(b)) => {
                a.0.extend(b.0);
                Tree::Nodes(a)
            }
            (n @ Tree::Nodes(_), Tree::Str(_)) | (Tree::Str(_), n @ Tree::Nodes(_)) => n,
        }
    }

    pub fn is_empty_string(&self) -> bool {
        matches!(self, Tree::Str(s) if s.is_empty())
    }

    /// The nodes of this value; empty for a string.
    pub fn nodes(&self) -> &[Node] {
        match self {
            Tree::Str(_) => &[],
            Tree::Nodes(h) => h,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes()
            .iter()
            .map(|n| 1 + n.children.node_count())
            .sum()
    }

    /// Text form: `#Mul[#Int['123'] #Int['45']]`, strings as quoted
    /// literals, sibling nodes separated by spaces.
    pub fn to_sexpr(&self) -> String {
        self.to_string()
    }

    pub fn from_sexpr(text: &str) -> Result<Tree, TreeFormatError> {
        let mut r = SexprReader {
            chars: text.chars().collect(),
            pos: 0,
        };
        let tree = r.tree()?;
        r.skip_ws();
        if r.pos != r.chars.len() {
            return Err(r.error("trailing input"));
        }
        Ok(tree)
    }

    /// JSON form: a string for a string leaf, `{"label": .., "children": [..]}`
    /// for a node, and an array for a hedge of several nodes. A node's
    /// `children` holds either one string or its child nodes.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Tree, TreeFormatError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| TreeFormatError::Json(e.to_string()))?;
        tree_from_value(&value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeFormatError {
    #[error("at offset {offset}: {message}")]
    Sexpr { offset: usize, message: String },
    #[error("invalid JSON tree: {0}")]
    Json(String),
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Str(s) => write_quoted(f, s),
            Tree::Nodes(h) => {
                for (i, n) in h.iter().enumerate() {
                    if i > 0 {
                        f.write_char(' ')?;
                    }
                    write!(f, "{n}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}[{}]", self.label, self.children)
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_char('\'')?;
    for c in s.chars() {
        match c {
            '\'' => f.write_str("\\'")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c if c.is_control() => write!(f, "\\u{{{:x}}}", c as u32)?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('\'')
}

struct SexprReader {
    chars: Vec<char>,
    pos: usize,
}

impl SexprReader {
    fn error(&self, message: &str) -> TreeFormatError {
        TreeFormatError::Sexpr {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.get(self.pos), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn tree(&mut self) -> Result<Tree, TreeFormatError> {
        self.skip_ws();
        match self.chars.get(self.pos) {
            Some('\'') => self.string().map(Tree::Str),
            Some('#') => {
                let mut nodes = vec![self.node()?];
                loop {
                    self.skip_ws();
                    if self.chars.get(self.pos) == Some(&'#') {
                        nodes.push(self.node()?);
                    } else {
                        break;
                    }
                }
                Ok(Tree::Nodes(Hedge(nodes)))
            }
            _ => Err(self.error("expected `'` or `#`")),
        }
    }

    fn node(&mut self) -> Result<Node, TreeFormatError> {
        self.pos += 1; // '#'
        let start = self.pos;
        while matches!(self.chars.get(self.pos), Some(c) if c.is_ascii_alphanumeric() || *c == '_') {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        if !is_identifier(&name) {
            return Err(self.error("expected label"));
        }
        if self.chars.get(self.pos) != Some(&'[') {
            return Err(self.error("expected `[`"));
        }
        self.pos += 1;
        let children = self.tree()?;
        self.skip_ws();
        if self.chars.get(self.pos) != Some(&']') {
            return Err(self.error("expected `]`"));
        }
        self.pos += 1;
        Ok(Node {
            label: Label::new(name),
            children,
        })
    }

    fn string(&mut self) -> Result<String, TreeFormatError> {
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(&c) = self.chars.get(self.pos) else {
                return Err(self.error("unterminated string"));
            };
            self.pos += 1;
            match c {
                '\'' => return Ok(out),
                '\\' => {
                    let Some(&e) = self.chars.get(self.pos) else {
                        return Err(self.error("unterminated escape"));
                    };
                    self.pos += 1;
                    out.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        '\\' | '\'' => e,
                        'u' => self.unicode_escape()?,
                        _ => return Err(self.error("unknown escape")),
                    });
                }
                c => out.push(c),
            }
        }
    }

    fn unicode_escape(&mut self) -> Result<char, TreeFormatError> {
        if self.chars.get(self.pos) != Some(&'{') {
            return Err(self.error("expected `{`"));
        }
        self.pos += 1;
        let start = self.pos;
        while matches!(self.chars.get(self.pos), Some(c) if c.is_ascii_hexdigit()) {
            self.pos += 1;
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        if self.chars.get(self.pos) != Some(&'}') {
            return Err(self.error("expected `}`"));
        }
        self.pos += 1;
        u32::from_str_radix(&digits, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.error("invalid unicode escape"))
    }
}

impl Serialize for Tree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Tree::Str(s) => serializer.serialize_str(s),
            Tree::Nodes(h) if h.len() == 1 => h[0].serialize(serializer),
            Tree::Nodes(h) => {
                let mut seq = serializer.serialize_seq(Some(h.len()))?;
                for n in h.iter() {
                    seq.serialize_element(n)?;
                }
                seq.end()
            }
        }
    }
}

/// Children as a JSON array: `[string]` or the child nodes.
struct Children<'a>(&'a Tree);

impl Serialize for Children<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Tree::Str(s) => {
                let mut seq = serializer.serialize_seq(Some(1))?;
                seq.serialize_element(s)?;
                seq.end()
            }
            Tree::Nodes(h) => {
                let mut seq = serializer.serialize_seq(Some(h.len()))?;
                for n in h.iter() {
                    seq.serialize_element(n)?;
                }
                seq.end()
            }
        }
    }
}

impl Serialize for Node {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Node", 2)?;
        st.serialize_field("label", self.label.as_str())?;
        st.serialize_field("children", &Children(&self.children))?;
        st.end()
    }
}

fn json_error(message: &str) -> TreeFormatError {
    TreeFormatError::Json(message.to_string())
}

fn tree_from_value(value: &Value) -> Result<Tree, TreeFormatError> {
    match value {
        Value::String(s) => Ok(Tree::Str(s.clone())),
        Value::Object(_) => Ok(Tree::Nodes(Hedge(vec![node_from_value(value)?]))),
        Value::Array(items) if !items.is_empty() => {
            let nodes = items.iter().map(node_from_value).collect::<Result<_, _>>()?;
            Ok(Tree::Nodes(Hedge(nodes)))
        }
        _ => Err(json_error("expected a string, a node object or a non-empty array of nodes")),
    }
}

fn node_from_value(value: &Value) -> Result<Node, TreeFormatError> {
    let obj = value.as_object().ok_or_else(|| json_error("expected a node object"))?;
    let label = obj
        .get("label")
        .and_then(Value::as_str)
        .ok_or_else(|| json_error("node without a string `label`"))?;
    let children = obj
        .get("children")
        .and_then(Value::as_array)
        .ok_or_else(|| json_error("node without a `children` array"))?;
    let children = match children.as_slice() {
        [] => Tree::empty(),
        [Value::String(s)] => Tree::Str(s.clone()),
        items => Tree::Nodes(Hedge(
            items.iter().map(node_from_value).collect::<Result<_, _>>()?,
        )),
    };
    Ok(Node {
        label: Label::new(label),
        children,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(s: &str) -> Tree {
        Tree::node("Int", Tree::string(s))
    }

    #[test]
    fn string_concatenation_merges() {
        assert_eq!(Tree::string("12").concat(Tree::string("3")), Tree::string("123"));
    }

    #[test]
    fn nodes_absorb_strings() {
        assert_eq!(int("123").concat(Tree::string("*")), int("123"));
        assert_eq!(Tree::string("*").concat(int("45")), int("45"));
    }

    #[test]
    fn empty_string_is_identity() {
        for v in [Tree::empty(), Tree::string("ab"), int("1"), int("1").concat(int("2"))] {
            assert_eq!(Tree::empty().concat(v.clone()), v);
            assert_eq!(v.clone().concat(Tree::empty()), v);
        }
    }

    #[test]
    fn node_concatenation_keeps_order() {
        let v = int("1").concat(int("2"));
        let labels: Vec<_> = v.nodes().iter().map(|n| n.children.clone()).collect();
        assert_eq!(labels, [Tree::string("1"), Tree::string("2")]);
        assert_ne!(v, int("2").concat(int("1")));
    }

    #[test]
    fn make_node() {
        assert_eq!(int("123").to_sexpr(), "#Int['123']");
        let mul = Tree::node("Mul", int("123").concat(int("45")));
        assert_eq!(mul.to_sexpr(), "#Mul[#Int['123'] #Int['45']]");
        assert_eq!(Tree::node("L", Tree::empty()).to_sexpr(), "#L['']");
        assert_eq!(mul.node_count(), 3);
    }

    #[test]
    fn sexpr_forms() {
        assert_eq!(Tree::empty().to_sexpr(), "''");
        assert_eq!(Tree::string("it's\n").to_sexpr(), r"'it\'s\n'");
        let v = Tree::from_sexpr("  #A[ #B['x']  #C[''] ] #D['\\u{1}'] ").unwrap();
        assert_eq!(v.to_sexpr(), "#A[#B['x'] #C['']] #D['\\u{1}']");
        assert!(Tree::from_sexpr("#A['x'").is_err());
        assert!(Tree::from_sexpr("#A['x'] 'y'").is_err());
    }

    #[test]
    fn json_forms() {
        let mul = Tree::node("Mul", int("123").concat(int("45")));
        assert_eq!(
            mul.to_json(),
            r#"{"label":"Mul","children":[{"label":"Int","children":["123"]},{"label":"Int","children":["45"]}]}"#
        );
        assert_eq!(Tree::empty().to_json(), r#""""#);
        let two = int("1").concat(int("2"));
        assert_eq!(Tree::from_json(&two.to_json()).unwrap(), two);
        assert_eq!(
            Tree::from_json(r#"{"label":"L","children":[]}"#).unwrap(),
            Tree::node("L", Tree::empty())
        );
        assert!(Tree::from_json("[]").is_err());
        assert!(Tree::from_json(r#"{"label":"L"}"#).is_err());
    }
}
