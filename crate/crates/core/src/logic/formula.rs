//! Propositional modal formulas with a single box operator, plus a parser
//! and a printer for the ASCII syntax
//!
//! ```text
//! atoms  p0 p1 p2 …
//! unary  ~φ  []φ          (bind tightest)
//! binary φ & ψ            (left associative)
//!        φ | ψ            (left associative)
//!        φ -> ψ           (right associative, loosest)
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModalFormula {
    Atom(u32),
    Not(Box<ModalFormula>),
    Implies(Box<ModalFormula>, Box<ModalFormula>),
    And(Box<ModalFormula>, Box<ModalFormula>),
    Or(Box<ModalFormula>, Box<ModalFormula>),
    /// `[]φ`, read as "φ is provable".
    Box(Box<ModalFormula>),
}

impl ModalFormula {
    pub fn atom(index: u32) -> Self {
        Self::Atom(index)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(phi: Self) -> Self {
        Self::Not(Box::new(phi))
    }

    pub fn implies(a: Self, b: Self) -> Self {
        Self::Implies(Box::new(a), Box::new(b))
    }

    pub fn and(a: Self, b: Self) -> Self {
        Self::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Self, b: Self) -> Self {
        Self::Or(Box::new(a), Box::new(b))
    }

    pub fn boxed(phi: Self) -> Self {
        Self::Box(Box::new(phi))
    }

    /// `[]([]p -> p) -> []p` for the given atom.
    pub fn lob_axiom(atom: u32) -> Self {
        let p = Self::atom(atom);
        Self::implies(Self::boxed(Self::implies(Self::boxed(p.clone()), p.clone())), Self::boxed(p))
    }

    /// `[]p -> p` for the given atom.
    pub fn reflection(atom: u32) -> Self {
        let p = Self::atom(atom);
        Self::implies(Self::boxed(p.clone()), p)
    }

    pub fn children(&self) -> Vec<&ModalFormula> {
        match self {
            Self::Atom(_) => vec![],
            Self::Not(a) | Self::Box(a) => vec![a],
            Self::Implies(a, b) | Self::And(a, b) | Self::Or(a, b) => vec![a, b],
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(ModalFormula::size).sum::<usize>()
    }

    pub fn box_depth(&self) -> usize {
        let inner = self.children().into_iter().map(ModalFormula::box_depth).max().unwrap_or(0);
        match self {
            Self::Box(_) => inner + 1,
            _ => inner,
        }
    }

    pub fn atoms(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Self::Atom(i) = f {
                out.insert(*i);
            }
        });
        out
    }

    /// Distinct subformulas, including the formula itself.
    pub fn subformulas(&self) -> BTreeSet<&ModalFormula> {
        let mut out = BTreeSet::new();
        fn walk<'a>(f: &'a ModalFormula, out: &mut BTreeSet<&'a ModalFormula>) {
            if out.insert(f) {
                for c in f.children() {
                    walk(c, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }

    /// Number of distinct subformulas of the form `[]ψ`.
    pub fn box_subformula_count(&self) -> usize {
        self.subformulas().into_iter().filter(|f| matches!(f, Self::Box(_))).count()
    }

    fn visit(&self, f: &mut impl FnMut(&ModalFormula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Self::Implies(..) => 1,
            Self::Or(..) => 2,
            Self::And(..) => 3,
            Self::Not(_) | Self::Box(_) => 4,
            Self::Atom(_) => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let parens = self.precedence() < min;
        if parens {
            f.write_str("(")?;
        }
        match self {
            Self::Atom(i) => write!(f, "p{i}")?,
            Self::Not(a) => {
                f.write_str("~")?;
                a.write_at(f, 4)?;
            }
            Self::Box(a) => {
                f.write_str("[]")?;
                a.write_at(f, 4)?;
            }
            Self::Implies(a, b) => {
                a.write_at(f, 2)?;
                f.write_str(" -> ")?;
                b.write_at(f, 1)?;
            }
            Self::Or(a, b) => {
                a.write_at(f, 2)?;
                f.write_str(" | ")?;
                b.write_at(f, 3)?;
            }
            Self::And(a, b) => {
                a.write_at(f, 3)?;
                f.write_str(" & ")?;
                b.write_at(f, 4)?;
            }
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for ModalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl std::str::FromStr for ModalFormula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at position {position}: {message}")]
pub struct ParseError {
    /// 0-based character offset.
    pub position: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Token {
    Atom(u32),
    Not,
    Box,
    And,
    Or,
    Arrow,
    Open,
    Close,
    End,
}

fn describe(tok: Token) -> String {
    match tok {
        Token::Atom(i) => format!("atom p{i}"),
        Token::Not => "'~'".into(),
        Token::Box => "'[]'".into(),
        Token::And => "'&'".into(),
        Token::Or => "'|'".into(),
        Token::Arrow => "'->'".into(),
        Token::Open => "'('".into(),
        Token::Close => "')'".into(),
        Token::End => "end of input".into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |position: usize, message: &str| ParseError { position, message: message.to_string() };
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '~' => out.push((Token::Not, start)),
            '&' => out.push((Token::And, start)),
            '|' => out.push((Token::Or, start)),
            '(' => out.push((Token::Open, start)),
            ')' => out.push((Token::Close, start)),
            '[' => {
                if chars.get(i + 1) != Some(&']') {
                    return Err(err(start, "expected '[]'"));
                }
                i += 1;
                out.push((Token::Box, start));
            }
            '-' => {
                if chars.get(i + 1) != Some(&'>') {
                    return Err(err(start, "expected '->'"));
                }
                i += 1;
                out.push((Token::Arrow, start));
            }
            'p' => {
                let digits: String = chars[i + 1..].iter().take_while(|c| c.is_ascii_digit()).collect();
                if digits.is_empty() {
                    return Err(err(start, "atom 'p' must be followed by an index"));
                }
                let index = digits.parse().map_err(|_| err(start, "atom index too large"))?;
                i += digits.len();
                out.push((Token::Atom(index), start));
            }
            other => return Err(err(start, &format!("unexpected character {other:?}"))),
        }
        i += 1;
    }
    out.push((Token::End, chars.len()));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> (Token, usize) {
        self.tokens[self.pos]
    }

    fn bump(&mut self) -> (Token, usize) {
        let t = self.tokens[self.pos];
        if t.0 != Token::End {
            self.pos += 1;
        }
        t
    }

    fn implication(&mut self) -> Result<ModalFormula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek().0 == Token::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(ModalFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<ModalFormula, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.peek().0 == Token::Or {
            self.bump();
            lhs = ModalFormula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<ModalFormula, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek().0 == Token::And {
            self.bump();
            lhs = ModalFormula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ModalFormula, ParseError> {
        match self.bump() {
            (Token::Not, _) => Ok(ModalFormula::not(self.unary()?)),
            (Token::Box, _) => Ok(ModalFormula::boxed(self.unary()?)),
            (Token::Atom(i), _) => Ok(ModalFormula::atom(i)),
            (Token::Open, _) => {
                let inner = self.implication()?;
                match self.bump() {
                    (Token::Close, _) => Ok(inner),
                    (tok, position) => {
                        Err(ParseError { position, message: format!("expected ')', found {}", describe(tok)) })
                    }
                }
            }
            (tok, position) => {
                Err(ParseError { position, message: format!("expected a formula, found {}", describe(tok)) })
            }
        }
    }
}

pub fn parse_formula(text: &str) -> Result<ModalFormula, ParseError> {
    let mut parser = Parser { tokens: tokenize(text)?, pos: 0 };
    let phi = parser.implication()?;
    match parser.peek() {
        (Token::End, _) => Ok(phi),
        (tok, position) => Err(ParseError { position, message: format!("unexpected {}", describe(tok)) }),
    }
}
