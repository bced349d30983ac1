//! Text form of types.
//!
//! ```text
//! type X1 = X2
//! type X2 = Prod[X2, Empty, X4] | X3
//! type X3 = Int[Empty]
//! type X4 = Int[Empty]
//! X1
//! ```
//!
//! One binding per line, then the root type on a line of its own. In a type,
//! `,` is concatenation and binds tighter than `|`; `*` is postfix. An
//! identifier directly followed by `[` is a label, any other identifier is a
//! variable, and `Empty` is the empty sequence.

use std::fmt;

use super::{GlobalSet, RegexType, TypeError, TypeVar};
use crate::label::{is_identifier, Label};

/// Bindings in variable order followed by the root type.
pub fn serialize_types(e: &GlobalSet, root: &RegexType) -> String {
    let mut out = String::new();
    for (x, t) in e.iter() {
        out.push_str(&format!("type {x} = {t}\n"));
    }
    out.push_str(&format!("{root}\n"));
    out
}

/// Reads the output of [`serialize_types`]. Blank lines are ignored.
pub fn parse_types(text: &str) -> Result<(GlobalSet, RegexType), TypeError> {
    let mut set = GlobalSet::new();
    let mut root = None;
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        let error = |column: usize, message: &str| TypeError::Syntax {
            line: line_no,
            column: line[..column.min(line.len())].chars().count() + 1,
            message: message.to_string(),
        };
        if let Some(rest) = trimmed.strip_prefix("type ") {
            let (name, body) = rest
                .split_once('=')
                .ok_or_else(|| error(indent, "expected `type X = T`"))?;
            let name = name.trim();
            if !is_identifier(name) || name == "Empty" {
                return Err(error(indent + 5, "expected a type variable name"));
            }
            let offset = indent + 5 + rest.find('=').expect("split above") + 1;
            let t = TypeReader::new(body, offset).read().map_err(|(c, m)| error(c, &m))?;
            set.define(TypeVar::new(name), t)?;
        } else {
            if root.is_some() {
                return Err(error(indent, "more than one root type"));
            }
            root = Some(TypeReader::new(trimmed, indent).read().map_err(|(c, m)| error(c, &m))?);
        }
    }
    let root = root.ok_or(TypeError::Syntax {
        line: text.lines().count().max(1),
        column: 1,
        message: "missing root type".to_string(),
    })?;
    Ok((set, root))
}

/// Recursive descent over one type; errors carry a byte column into the line.
struct TypeReader<'a> {
    text: &'a str,
    pos: usize,
    base: usize,
}

type ReadResult<T> = Result<T, (usize, String)>;

impl<'a> TypeReader<'a> {
    fn new(text: &'a str, base: usize) -> Self {
        TypeReader { text, pos: 0, base }
    }

    fn read(mut self) -> ReadResult<RegexType> {
        let t = self.union()?;
        self.skip_ws();
        if self.pos < self.text.len() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(t)
    }

    fn error(&self, message: &str) -> (usize, String) {
        (self.base + self.pos, message.to_string())
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn union(&mut self) -> ReadResult<RegexType> {
        let first = self.concat()?;
        if self.eat('|') {
            Ok(RegexType::union(first, self.union()?))
        } else {
            Ok(first)
        }
    }

    fn concat(&mut self) -> ReadResult<RegexType> {
        let first = self.postfix()?;
        if self.eat(',') {
            Ok(RegexType::concat(first, self.concat()?))
        } else {
            Ok(first)
        }
    }

    fn postfix(&mut self) -> ReadResult<RegexType> {
        let mut t = self.atom()?;
        while self.eat('*') {
            t = RegexType::star(t);
        }
        Ok(t)
    }

    fn atom(&mut self) -> ReadResult<RegexType> {
        if self.eat('(') {
            let t = self.union()?;
            if !self.eat(')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(t);
        }
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .char_indices()
            .find(|&(i, c)| !(c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit())))
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return Err(self.error("expected a type"));
        }
        let name = &rest[..len];
        self.pos += len;
        // a label's bracket must follow the name directly
        if self.text[self.pos..].starts_with('[') {
            self.pos += 1;
            let body = if self.peek() == Some(']') {
                RegexType::Empty
            } else {
                self.union()?
            };
            if !self.eat(']') {
                return Err(self.error("expected `]`"));
            }
            return Ok(RegexType::Label(Label::new(name), Box::new(body)));
        }
        Ok(if name == "Empty" {
            RegexType::Empty
        } else {
            RegexType::Var(TypeVar::new(name))
        })
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Prec {
    Union,
    Concat,
    Postfix,
}

fn prec(t: &RegexType) -> Prec {
    match t {
        RegexType::Union(..) => Prec::Union,
        RegexType::Concat(..) => Prec::Concat,
        _ => Prec::Postfix,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, t: &RegexType, min: Prec) -> fmt::Result {
    if prec(t) < min {
        write!(f, "(")?;
        write_type(f, t)?;
        write!(f, ")")
    } else {
        write_type(f, t)
    }
}

fn write_type(f: &mut fmt::Formatter<'_>, t: &RegexType) -> fmt::Result {
    match t {
        RegexType::Empty => write!(f, "Empty"),
        RegexType::Var(x) => write!(f, "{x}"),
        RegexType::Label(l, body) => {
            write!(f, "{}[", l.as_str())?;
            write_type(f, body)?;
            write!(f, "]")
        }
        RegexType::Star(body) => {
            write_at(f, body, Prec::Postfix)?;
            write!(f, "*")
        }
        RegexType::Concat(a, b) => {
            write_at(f, a, Prec::Postfix)?;
            write!(f, ", ")?;
            write_at(f, b, Prec::Concat)
        }
        RegexType::Union(a, b) => {
            // concatenations are bracketed under a union for readability
            let side = |t: &RegexType| if matches!(t, RegexType::Concat(..)) { Prec::Postfix } else { Prec::Concat };
            write_at(f, a, side(a))?;
            write!(f, " | ")?;
            if matches!(**b, RegexType::Union(..)) {
                write_type(f, b)
            } else {
                write_at(f, b, side(b))
            }
        }
    }
}

impl fmt::Display for RegexType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_type(f, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> RegexType {
        RegexType::var(name)
    }

    const PRODUCT: &str = "type X1 = X2\n\
                          type X2 = Prod[X2, Empty, X4] | X3\n\
                          type X3 = Int[Empty]\n\
                          type X4 = Int[Empty]\n\
                          X1\n";

    #[test]
    fn product_round_trip() {
        let (e, root) = parse_types(PRODUCT).unwrap();
        assert_eq!(root, v("X1"));
        assert_eq!(e.len(), 4);
        assert_eq!(
            e.resolve(&"X2".into()).unwrap(),
            &RegexType::union(
                RegexType::label("Prod", RegexType::concat_all([v("X2"), RegexType::Empty, v("X4")])),
                v("X3")
            )
        );
        assert_eq!(serialize_types(&e, &root), PRODUCT);
    }

    #[test]
    fn empty_set() {
        assert_eq!(serialize_types(&GlobalSet::new(), &RegexType::Empty), "Empty\n");
        assert_eq!(parse_types("Empty").unwrap(), (GlobalSet::new(), RegexType::Empty));
    }

    #[test]
    fn bracketing() {
        let l = RegexType::label("L", RegexType::Empty);
        let t = RegexType::union(RegexType::concat(l.clone(), v("X1")), RegexType::Empty);
        assert_eq!(t.to_string(), "(L[Empty], X1) | Empty");
        let t = RegexType::concat(RegexType::concat(l.clone(), v("A")), v("B"));
        assert_eq!(t.to_string(), "(L[Empty], A), B");
        let t = RegexType::star(RegexType::union(l.clone(), v("A")));
        assert_eq!(t.to_string(), "(L[Empty] | A)*");
        let t = RegexType::union(RegexType::union(v("A"), v("B")), v("C"));
        assert_eq!(t.to_string(), "(A | B) | C");
        let t = RegexType::concat(RegexType::union(v("A"), v("B")), RegexType::star(RegexType::star(l)));
        assert_eq!(t.to_string(), "(A | B), L[Empty]**");
        for s in ["(L[Empty], A), B", "(L[Empty] | A)*", "(A | B) | C", "(A | B), L[Empty]**", "M[]"] {
            let text = format!("{s}\n");
            let (_, t) = parse_types(&text).unwrap();
            let again = format!("{t}\n");
            assert_eq!(parse_types(&again).unwrap().1, t, "{s}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_types(""), Err(TypeError::Syntax { message, .. }) if message == "missing root type"));
        assert!(matches!(parse_types("A\nB"), Err(TypeError::Syntax { line: 2, .. })));
        assert!(matches!(parse_types("type X = (A"), Err(TypeError::Syntax { line: 1, column: 12, .. })));
        assert!(matches!(parse_types("type X = A\ntype X = B\nX"), Err(TypeError::Redefined(_))));
        assert!(matches!(parse_types("type Empty = A\nA"), Err(TypeError::Syntax { .. })));
    }
}
