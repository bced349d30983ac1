//! Textual grammar format.
//!
//! ```text
//! // comment
//! Prod = Val (^{ '*' Val #Mul })*
//! Val  = { [0-9]+ #Int }
//! ```
//!
//! A rule is `Name = expression`, optionally followed by `;`. A rule ends
//! where the next `Name =` begins. The first rule is the start rule.

use std::fmt::{self, Write as _};

use super::sugar::{expand_class, MAX_CLASS_SIZE};
use super::{desugar, Expression, Grammar, GrammarError, Label, SugaredExpression};
use crate::label::is_identifier;

type S = SugaredExpression;

/// Parses a grammar file and desugars every rule.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let rules = parse_sugared_rules(text)?;
    Grammar::from_rules(rules.iter().map(|(name, e)| (name.clone(), desugar(e))))
}

/// Parses a grammar file without desugaring.
pub fn parse_sugared_rules(text: &str) -> Result<Vec<(String, SugaredExpression)>, GrammarError> {
    let mut p = SyntaxParser {
        chars: text.chars().collect(),
        pos: 0,
    };
    let mut rules = Vec::new();
    p.skip_trivia();
    while !p.at_end() {
        let name = p.identifier()?;
        p.skip_trivia();
        p.expect('=')?;
        let body = p.choice()?;
        p.skip_trivia();
        if p.peek() == Some(';') {
            p.pos += 1;
            p.skip_trivia();
        }
        if rules.iter().any(|(n, _)| n == &name) {
            return Err(GrammarError::DuplicateRule(name));
        }
        rules.push((name, body));
    }
    if rules.is_empty() {
        return Err(GrammarError::NoRules);
    }
    Ok(rules)
}

struct SyntaxParser {
    chars: Vec<char>,
    pos: usize,
}

/// A parsed `^{ e #L }` group with its postfix operator.
struct FoldSuffix {
    alternatives: Vec<(Label, SugaredExpression)>,
    postfix: Option<char>,
    at: usize,
}

impl SyntaxParser {
    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn error_at(&self, pos: usize, message: impl Into<String>) -> GrammarError {
        let mut line = 1;
        let mut column = 1;
        for &c in &self.chars[..pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
        GrammarError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> GrammarError {
        self.error_at(self.pos, message)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => self.pos += 1,
                Some('/') if self.peek_at(1) == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                _ => return,
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<(), GrammarError> {
        self.skip_trivia();
        match self.peek() {
            Some(found) if found == c => {
                self.pos += 1;
                Ok(())
            }
            Some(found) => Err(self.error(format!("expected `{c}`, found `{found}`"))),
            None => Err(self.error(format!("expected `{c}`, found end of input"))),
        }
    }

    fn identifier(&mut self) -> Result<String, GrammarError> {
        self.skip_trivia();
        let start = self.pos;
        while let Some(c) = self.peek() {
            let ok = if self.pos == start {
                c.is_ascii_alphabetic() || c == '_'
            } else {
                c.is_ascii_alphanumeric() || c == '_'
            };
            if !ok {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(match self.peek() {
                Some(c) => self.error(format!("expected identifier, found `{c}`")),
                None => self.error("expected identifier, found end of input"),
            });
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    /// True if an identifier followed by `=` starts here (the next rule).
    fn at_rule_start(&self) -> bool {
        let mut i = self.pos;
        match self.chars.get(i) {
            Some(c) if c.is_ascii_alphabetic() || *c == '_' => {}
            _ => return false,
        }
        while matches!(self.chars.get(i), Some(c) if c.is_ascii_alphanumeric() || *c == '_') {
            i += 1;
        }
        while matches!(self.chars.get(i), Some(c) if c.is_whitespace()) {
            i += 1;
        }
        self.chars.get(i) == Some(&'=')
    }

    fn choice(&mut self) -> Result<SugaredExpression, GrammarError> {
        let mut alternatives = vec![self.sequence()?];
        loop {
            self.skip_trivia();
            if self.peek() == Some('/') && self.peek_at(1) != Some('/') {
                self.pos += 1;
                alternatives.push(self.sequence()?);
            } else {
                break;
            }
        }
        let mut acc = alternatives.pop().expect("non-empty");
        while let Some(e) = alternatives.pop() {
            acc = S::Choice(Box::new(e), Box::new(acc));
        }
        Ok(acc)
    }

    fn sequence(&mut self) -> Result<SugaredExpression, GrammarError> {
        let mut items: Vec<SugaredExpression> = Vec::new();
        loop {
            self.skip_trivia();
            match self.peek() {
                None | Some(')' | '}' | '#' | ';') => break,
                Some('/') if self.peek_at(1) != Some('/') => break,
                _ if self.at_rule_start() => break,
                _ => {}
            }
            if let Some(fold) = self.fold_suffix()? {
                if items.is_empty() {
                    return Err(self.error_at(fold.at, "fold-capture `^{ ... }` needs a left operand"));
                }
                let base = Box::new(sequence_of(std::mem::take(&mut items)));
                items.push(build_fold(base, fold, self)?);
            } else {
                items.push(self.prefixed()?);
            }
        }
        if items.is_empty() {
            return Err(self.error("expected expression"));
        }
        Ok(sequence_of(items))
    }

    fn starts_fold_group(&self) -> bool {
        if self.peek() == Some('^') {
            return true;
        }
        if self.peek() != Some('(') {
            return false;
        }
        let mut i = self.pos + 1;
        while matches!(self.chars.get(i), Some(c) if c.is_whitespace()) {
            i += 1;
        }
        self.chars.get(i) == Some(&'^')
    }

    /// Parses `^{..}`, `(^{..} / ^{..})` and the `(^{..}) / (^{..})` form,
    /// each with an optional trailing `*` or `?`.
    fn fold_suffix(&mut self) -> Result<Option<FoldSuffix>, GrammarError> {
        if !self.starts_fold_group() {
            return Ok(None);
        }
        let at = self.pos;
        let mut alternatives = Vec::new();
        let mut postfix = None;
        let mut groups = 0;
        loop {
            groups += 1;
            self.skip_trivia();
            let group_postfix = if self.peek() == Some('(') {
                self.pos += 1;
                loop {
                    alternatives.push(self.fold_braces()?);
                    self.skip_trivia();
                    if self.peek() == Some('/') && self.peek_at(1) != Some('/') {
                        self.pos += 1;
                        self.skip_trivia();
                    } else {
                        break;
                    }
                }
                self.expect(')')?;
                self.fold_postfix()
            } else {
                alternatives.push(self.fold_braces()?);
                self.fold_postfix()
            };
            if group_postfix.is_some() {
                if groups > 1 {
                    return Err(self.error_at(
                        at,
                        "a postfix operator cannot follow `(^{..}) / (^{..})`; group the alternatives instead",
                    ));
                }
                postfix = group_postfix;
                break;
            }
            // `e1 (^{..}) / (^{..})`: a `/` followed by another fold continues the group.
            let save = self.pos;
            self.skip_trivia();
            if self.peek() == Some('/') && self.peek_at(1) != Some('/') {
                self.pos += 1;
                self.skip_trivia();
                if self.starts_fold_group() {
                    continue;
                }
            }
            self.pos = save;
            break;
        }
        Ok(Some(FoldSuffix {
            alternatives,
            postfix,
            at,
        }))
    }

    fn fold_braces(&mut self) -> Result<(Label, SugaredExpression), GrammarError> {
        self.expect('^')?;
        self.expect('{')?;
        let body = self.choice()?;
        let label = self.label()?;
        self.expect('}')?;
        Ok((label, body))
    }

    fn fold_postfix(&mut self) -> Option<char> {
        let save = self.pos;
        self.skip_trivia();
        match self.peek() {
            Some(c @ ('*' | '?')) => {
                self.pos += 1;
                Some(c)
            }
            _ => {
                self.pos = save;
                None
            }
        }
    }

    fn label(&mut self) -> Result<Label, GrammarError> {
        self.expect('#')?;
        if matches!(self.peek(), Some(c) if c.is_whitespace()) {
            return Err(self.error("expected label name directly after `#`"));
        }
        Ok(Label::new(self.identifier()?))
    }

    fn prefixed(&mut self) -> Result<SugaredExpression, GrammarError> {
        self.skip_trivia();
        match self.peek() {
            Some('&') => {
                self.pos += 1;
                Ok(S::And(Box::new(self.prefixed()?)))
            }
            Some('!') => {
                self.pos += 1;
                Ok(S::Not(Box::new(self.prefixed()?)))
            }
            _ => self.suffixed(),
        }
    }

    fn suffixed(&mut self) -> Result<SugaredExpression, GrammarError> {
        let mut e = self.primary()?;
        loop {
            let save = self.pos;
            self.skip_trivia();
            e = match self.peek() {
                Some('*') => S::Repetition(Box::new(e)),
                Some('+') => S::OneOrMore(Box::new(e)),
                Some('?') => S::Optional(Box::new(e)),
                _ => {
                    self.pos = save;
                    return Ok(e);
                }
            };
            self.pos += 1;
        }
    }

    fn primary(&mut self) -> Result<SugaredExpression, GrammarError> {
        self.skip_trivia();
        let Some(c) = self.peek() else {
            return Err(self.error("expected expression, found end of input"));
        };
        match c {
            '\'' | '"' => {
                self.pos += 1;
                Ok(S::StringLiteral(self.quoted(c)?))
            }
            '[' => {
                self.pos += 1;
                self.class()
            }
            '.' => {
                self.pos += 1;
                Ok(S::Any)
            }
            '(' => {
                self.pos += 1;
                let e = self.choice()?;
                self.expect(')')?;
                Ok(e)
            }
            '{' => {
                self.pos += 1;
                let body = self.choice()?;
                let label = self.label()?;
                self.expect('}')?;
                Ok(S::Capture(label, Box::new(body)))
            }
            '^' => Err(self.error("fold-capture `^{ ... }` is only allowed after a left operand")),
            c if c.is_ascii_alphabetic() || c == '_' => Ok(S::Nonterminal(self.identifier()?)),
            c => Err(self.error(format!("unexpected character `{c}`"))),
        }
    }

    fn escape(&mut self) -> Result<char, GrammarError> {
        let at = self.pos;
        self.pos += 1; // backslash
        let Some(c) = self.peek() else {
            return Err(self.error("unterminated escape sequence"));
        };
        self.pos += 1;
        Ok(match c {
            'n' => '\n',
            't' => '\t',
            'r' => '\r',
            '\\' | '\'' | '"' | ']' | '[' | '-' | '^' => c,
            'u' => {
                if self.peek() != Some('{') {
                    return Err(self.error("expected `{` after `\\u`"));
                }
                self.pos += 1;
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_hexdigit()) {
                    self.pos += 1;
                }
                let digits: String = self.chars[start..self.pos].iter().collect();
                if self.peek() != Some('}') {
                    return Err(self.error("expected `}` closing `\\u{...}`"));
                }
                self.pos += 1;
                u32::from_str_radix(&digits, 16)
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or_else(|| self.error_at(at, "invalid unicode escape"))?
            }
            other => return Err(self.error_at(at, format!("unknown escape `\\{other}`"))),
        })
    }

    fn quoted(&mut self, quote: char) -> Result<String, GrammarError> {
        let start = self.pos - 1;
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error_at(start, "unterminated string literal")),
                Some(c) if c == quote => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some('\\') => out.push(self.escape()?),
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn class_char(&mut self) -> Result<char, GrammarError> {
        match self.peek() {
            None => Err(self.error("unterminated character class")),
            Some('\\') => self.escape(),
            Some(c) => {
                self.pos += 1;
                Ok(c)
            }
        }
    }

    fn class(&mut self) -> Result<SugaredExpression, GrammarError> {
        let start = self.pos - 1;
        if self.peek() == Some('^') {
            return Err(self.error("negated character classes are not supported; write `!'x' .` instead"));
        }
        let mut ranges = Vec::new();
        loop {
            match self.peek() {
                None => return Err(self.error_at(start, "unterminated character class")),
                Some(']') => {
                    self.pos += 1;
                    break;
                }
                _ => {}
            }
            let lo_at = self.pos;
            let lo = self.class_char()?;
            if self.peek() == Some('-') && !matches!(self.peek_at(1), Some(']') | None) {
                self.pos += 1;
                let hi = self.class_char()?;
                if hi < lo {
                    return Err(self.error_at(lo_at, format!("invalid range `{lo}-{hi}`")));
                }
                ranges.push((lo, hi));
            } else {
                ranges.push((lo, lo));
            }
        }
        let size: usize = ranges.iter().map(|&(lo, hi)| hi as usize - lo as usize + 1).sum();
        if size > MAX_CLASS_SIZE && expand_class(&ranges).len() > MAX_CLASS_SIZE {
            return Err(self.error_at(
                start,
                format!("character class has more than {MAX_CLASS_SIZE} characters"),
            ));
        }
        Ok(S::CharClass(ranges))
    }
}

fn sequence_of(mut items: Vec<SugaredExpression>) -> SugaredExpression {
    let mut acc = items.pop().expect("non-empty sequence");
    while let Some(e) = items.pop() {
        acc = S::Sequence(Box::new(e), Box::new(acc));
    }
    acc
}

fn build_fold(
    base: Box<SugaredExpression>,
    fold: FoldSuffix,
    p: &SyntaxParser,
) -> Result<SugaredExpression, GrammarError> {
    let FoldSuffix {
        mut alternatives,
        postfix,
        at,
    } = fold;
    Ok(match postfix {
        Some('*') => {
            if alternatives.len() != 1 {
                return Err(p.error_at(at, "a repeated fold-capture takes exactly one `^{ ... }`"));
            }
            let (label, tail) = alternatives.pop().expect("one alternative");
            S::FoldCapture(label, base, Box::new(tail))
        }
        Some(_) => S::FoldOptional { base, alternatives },
        None if alternatives.len() == 1 => {
            let (label, tail) = alternatives.pop().expect("one alternative");
            S::Fold {
                base,
                label,
                tail: Box::new(tail),
            }
        }
        None => S::FoldChoice { base, alternatives },
    })
}

// ---------------------------------------------------------------------------
// Printing

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Choice,
    Sequence,
    Prefix,
    Postfix,
}

fn prec(e: &Expression) -> Prec {
    match e {
        Expression::Choice(..) => Prec::Choice,
        Expression::Sequence(..) => Prec::Sequence,
        Expression::Not(_) => Prec::Prefix,
        _ => Prec::Postfix,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expression, min: Prec) -> fmt::Result {
    if prec(e) < min {
        f.write_char('(')?;
        write_expr(f, e)?;
        f.write_char(')')
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expression) -> fmt::Result {
    match e {
        Expression::Empty => f.write_str("''"),
        Expression::Terminal(c) => {
            f.write_char('\'')?;
            write_escaped(f, *c)?;
            f.write_char('\'')
        }
        Expression::Any => f.write_char('.'),
        Expression::Nonterminal(n) => f.write_str(n),
        Expression::Sequence(a, b) => {
            // a left-nested sequence keeps its parentheses so it parses back unchanged
            write_at(f, a, Prec::Prefix)?;
            f.write_char(' ')?;
            write_at(f, b, Prec::Sequence)
        }
        Expression::Choice(a, b) => {
            write_at(f, a, Prec::Sequence)?;
            f.write_str(" / ")?;
            write_at(f, b, Prec::Choice)
        }
        Expression::Repetition(a) => {
            write_at(f, a, Prec::Postfix)?;
            f.write_char('*')
        }
        Expression::Not(a) => {
            f.write_char('!')?;
            write_at(f, a, Prec::Prefix)
        }
        Expression::Capture(l, a) => {
            f.write_str("{ ")?;
            write_expr(f, a)?;
            write!(f, " #{l} }}")
        }
        Expression::FoldCapture(l, a, b) => {
            f.write_char('(')?;
            write_at(f, a, Prec::Prefix)?;
            f.write_str(" (^{ ")?;
            write_expr(f, b)?;
            write!(f, " #{l} }})*)")
        }
    }
}

fn write_escaped(f: &mut fmt::Formatter<'_>, c: char) -> fmt::Result {
    match c {
        '\'' => f.write_str("\\'"),
        '\\' => f.write_str("\\\\"),
        '\n' => f.write_str("\\n"),
        '\t' => f.write_str("\\t"),
        '\r' => f.write_str("\\r"),
        c if c.is_control() => write!(f, "\\u{{{:x}}}", c as u32),
        c => f.write_char(c),
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

impl Grammar {
    /// True if every rule name and label can be written in the grammar format.
    pub fn is_printable(&self) -> bool {
        self.nonterminals().all(is_identifier) && self.labels().iter().all(|l| is_identifier(l.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(c: char) -> Expression {
        Expression::Terminal(c)
    }

    fn digits() -> Expression {
        desugar(&S::CharClass(vec![('0', '9')]))
    }

    #[test]
    fn val_rule() {
        let g = parse_grammar("Val = { [0-9]+ #Int }").unwrap();
        assert_eq!(
            g.lookup_rule("Val").unwrap(),
            &Expression::capture("Int", Expression::seq(digits(), Expression::rep(digits())))
        );
        assert_eq!(g.start(), &Expression::nt("Val"));
        assert_eq!(g.alphabet().len(), 10);
    }

    #[test]
    fn empty_literal_is_empty() {
        let g = parse_grammar("A = ''").unwrap();
        assert_eq!(g.lookup_rule("A").unwrap(), &Expression::Empty);
    }

    #[test]
    fn undefined_reference_is_rejected() {
        assert!(matches!(
            parse_grammar("A = B"),
            Err(GrammarError::UndefinedNonterminal { ref name, .. }) if name == "B"
        ));
    }

    #[test]
    fn duplicate_rule_is_rejected() {
        assert_eq!(
            parse_grammar("A = 'a'\nA = 'b'"),
            Err(GrammarError::DuplicateRule("A".into()))
        );
    }

    #[test]
    fn rules_split_on_name_equals() {
        let g = parse_grammar("A = B 'x'\n  B\n = 'b' // trailing\nC = ''; D = C").unwrap();
        let names: Vec<_> = g.nonterminals().collect();
        assert_eq!(names, ["A", "B", "C", "D"]);
        assert_eq!(g.lookup_rule("A").unwrap(), &Expression::seq(Expression::nt("B"), t('x')));
    }

    #[test]
    fn fold_forms() {
        let g = parse_grammar(
            "P = V (^{ '*' V #Mul })*\n\
             Q = V ^{ '*' V #Mul }\n\
             R = V (^{ '*' #Mul }) / (^{ '+' #Add })\n\
             S = V (^{ '*' #Mul } / ^{ '+' #Add })\n\
             T = V (^{ '*' #Mul })?\n\
             V = 'v'",
        )
        .unwrap();
        let v = || Expression::nt("V");
        assert_eq!(
            g.lookup_rule("P").unwrap(),
            &Expression::fold("Mul", v(), Expression::seq(t('*'), v()))
        );
        assert_eq!(
            g.lookup_rule("Q").unwrap(),
            &Expression::capture("Mul", Expression::seq(v(), Expression::seq(t('*'), v())))
        );
        let two = Expression::choice(
            Expression::capture("Mul", Expression::seq(v(), t('*'))),
            Expression::capture("Add", Expression::seq(v(), t('+'))),
        );
        assert_eq!(g.lookup_rule("R").unwrap(), &two);
        assert_eq!(g.lookup_rule("S").unwrap(), &two);
        assert_eq!(
            g.lookup_rule("T").unwrap(),
            &Expression::choice(Expression::capture("Mul", Expression::seq(v(), t('*'))), v())
        );
    }

    #[test]
    fn fold_takes_the_whole_prefix_and_continues() {
        let g = parse_grammar("A = '(' 'x' (^{ 'y' #L })* ')'").unwrap();
        assert_eq!(
            g.lookup_rule("A").unwrap(),
            &Expression::seq(
                Expression::fold("L", Expression::seq(t('('), t('x')), t('y')),
                t(')')
            )
        );
    }

    #[test]
    fn misplaced_folds_are_rejected() {
        for text in ["A = ^{ 'x' #L }", "A = 'a' / ^{ 'x' #L }", "A = 'a' (^{ 'x' #L } / ^{ 'y' #M })*"] {
            assert!(
                matches!(parse_grammar(text), Err(GrammarError::Syntax { .. })),
                "{text}"
            );
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_grammar("A = 'a'\nB = { 'b' }") {
            Err(GrammarError::Syntax { line, column, .. }) => {
                assert_eq!((line, column), (2, 11));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_grammar("A = 'abc"), Err(GrammarError::Syntax { line: 1, column: 5, .. })));
        assert!(matches!(parse_grammar("A = [b-a]"), Err(GrammarError::Syntax { .. })));
        assert!(matches!(parse_grammar("A = 'a' )"), Err(GrammarError::Syntax { .. })));
        assert_eq!(parse_grammar("  // nothing\n"), Err(GrammarError::NoRules));
    }

    #[test]
    fn escapes() {
        let g = parse_grammar(r"A = '\n\t\\\'' [\]\-] '\u{263a}'").unwrap();
        let body = g.lookup_rule("A").unwrap();
        let mut chars = Vec::new();
        body.walk(&mut |e| {
            if let Expression::Terminal(c) = e {
                chars.push(*c);
            }
        });
        assert_eq!(chars, ['\n', '\t', '\\', '\'', ']', '-', '☺']);
    }

    #[test]
    fn printing_round_trips() {
        let text = "P = V (^{ '*' V #Mul })* !'x' &.\nV = { [0-9]+ #Int } / ('a' 'b') 'c' / ''\n";
        let g = parse_grammar(text).unwrap();
        let printed = g.to_string();
        let again = parse_grammar(&printed).unwrap();
        assert_eq!(g, again, "{printed}");
        assert_eq!(printed, again.to_string());
    }
}
