use super::{Expression, Label};

/// Largest number of distinct characters a character class may expand to.
pub const MAX_CLASS_SIZE: usize = 1 << 16;

/// Surface expressions as written in grammar files, before desugaring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SugaredExpression {
    Empty,
    Terminal(char),
    Any,
    Nonterminal(String),
    Sequence(Box<SugaredExpression>, Box<SugaredExpression>),
    Choice(Box<SugaredExpression>, Box<SugaredExpression>),
    Repetition(Box<SugaredExpression>),
    Not(Box<SugaredExpression>),
    Capture(Label, Box<SugaredExpression>),
    FoldCapture(Label, Box<SugaredExpression>, Box<SugaredExpression>),
    StringLiteral(String),
    /// Inclusive character ranges, in source order.
    CharClass(Vec<(char, char)>),
    OneOrMore(Box<SugaredExpression>),
    Optional(Box<SugaredExpression>),
    And(Box<SugaredExpression>),
    /// `e1 ^{ e2 #L }`
    Fold {
        base: Box<SugaredExpression>,
        label: Label,
        tail: Box<SugaredExpression>,
    },
    /// `e1 (^{ e2 #L }) / (^{ e3 #L' })`, two or more alternatives.
    FoldChoice {
        base: Box<SugaredExpression>,
        alternatives: Vec<(Label, SugaredExpression)>,
    },
    /// `e1 (^{ e2 #L })?`
    FoldOptional {
        base: Box<SugaredExpression>,
        alternatives: Vec<(Label, SugaredExpression)>,
    },
}

impl From<Expression> for SugaredExpression {
    fn from(e: Expression) -> Self {
        use SugaredExpression as S;
        let b = |e: Box<Expression>| Box::new(S::from(*e));
        match e {
            Expression::Empty => S::Empty,
            Expression::Terminal(c) => S::Terminal(c),
            Expression::Any => S::Any,
            Expression::Nonterminal(n) => S::Nonterminal(n),
            Expression::Sequence(a, c) => S::Sequence(b(a), b(c)),
            Expression::Choice(a, c) => S::Choice(b(a), b(c)),
            Expression::Repetition(a) => S::Repetition(b(a)),
            Expression::Not(a) => S::Not(b(a)),
            Expression::Capture(l, a) => S::Capture(l, b(a)),
            Expression::FoldCapture(l, a, c) => S::FoldCapture(l, b(a), b(c)),
        }
    }
}

/// Rewrites surface operators into core expressions:
///
/// | surface                          | core                         |
/// |----------------------------------|------------------------------|
/// | `'abc'`                          | `'a' 'b' 'c'`                |
/// | `[abc]`                          | `'a' / 'b' / 'c'`            |
/// | `e+`                             | `e e*`                       |
/// | `e?`                             | `e / ''`                     |
/// | `&e`                             | `!!e`                        |
/// | `e1 ^{e2 #L}`                    | `{e1 e2 #L}`                 |
/// | `e1 (^{e2 #L}) / (^{e3 #M})`     | `{e1 e2 #L} / {e1 e3 #M}`    |
/// | `e1 (^{e2 #L})?`                 | `{e1 e2 #L} / e1`            |
///
/// The repetitive fold `e1 (^{e2 #L})*` has no capture-only equivalent and
/// is kept as [`Expression::FoldCapture`].
///
/// Large classes are split into a balanced tree of choices; the terminals
/// are disjoint, so the nesting does not change what matches. An empty
/// class becomes `!''`, which always fails.
pub fn desugar(e: &SugaredExpression) -> Expression {
    use SugaredExpression as S;
    let d = |e: &SugaredExpression| desugar(e);
    match e {
        S::Empty => Expression::Empty,
        S::Terminal(c) => Expression::Terminal(*c),
        S::Any => Expression::Any,
        S::Nonterminal(n) => Expression::Nonterminal(n.clone()),
        S::Sequence(a, b) => Expression::seq(d(a), d(b)),
        S::Choice(a, b) => Expression::choice(d(a), d(b)),
        S::Repetition(a) => Expression::rep(d(a)),
        S::Not(a) => Expression::not(d(a)),
        S::Capture(l, a) => Expression::Capture(l.clone(), Box::new(d(a))),
        S::FoldCapture(l, a, b) => Expression::FoldCapture(l.clone(), Box::new(d(a)), Box::new(d(b))),
        S::StringLiteral(s) => Expression::literal(s),
        S::CharClass(ranges) => class_choice(&expand_class(ranges)),
        S::OneOrMore(a) => {
            let body = d(a);
            Expression::seq(body.clone(), Expression::rep(body))
        }
        S::Optional(a) => Expression::choice(d(a), Expression::Empty),
        S::And(a) => Expression::not(Expression::not(d(a))),
        S::Fold { base, label, tail } => {
            Expression::Capture(label.clone(), Box::new(Expression::seq(d(base), d(tail))))
        }
        S::FoldChoice { base, alternatives } => {
            let base = d(base);
            choice_chain(fold_alternatives(&base, alternatives))
        }
        S::FoldOptional { base, alternatives } => {
            let base = d(base);
            let mut options = fold_alternatives(&base, alternatives);
            options.push(base);
            choice_chain(options)
        }
    }
}

fn fold_alternatives(base: &Expression, alternatives: &[(Label, SugaredExpression)]) -> Vec<Expression> {
    alternatives
        .iter()
        .map(|(label, tail)| {
            Expression::Capture(label.clone(), Box::new(Expression::seq(base.clone(), desugar(tail))))
        })
        .collect()
}

fn choice_chain(mut options: Vec<Expression>) -> Expression {
    let mut acc = options.pop().expect("at least one alternative");
    while let Some(e) = options.pop() {
        acc = Expression::choice(e, acc);
    }
    acc
}

/// Characters of a class in first-occurrence order, without duplicates.
pub(crate) fn expand_class(ranges: &[(char, char)]) -> Vec<char> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for &(lo, hi) in ranges {
        for c in lo..=hi {
            if seen.insert(c) {
                out.push(c);
            }
        }
    }
    out
}

fn class_choice(chars: &[char]) -> Expression {
    match chars {
        [] => Expression::not(Expression::Empty),
        [c] => Expression::Terminal(*c),
        _ => {
            let mid = chars.len() / 2;
            Expression::choice(class_choice(&chars[..mid]), class_choice(&chars[mid..]))
        }
    }
}
