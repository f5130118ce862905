//! Guard expressions: lexer, recursive-descent parser and canonical printer.
//!
//! ```text
//! expr   := term ('||' term)*
//! term   := factor ('&&' factor)*
//! factor := '!' factor | '(' expr ')' | 'forall' ident ':' factor
//!         | 'exists' ident ':' factor | atom
//! atom   := ident ('=' | '!=') value
//! ```

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GuardExpr {
    Atom { var: String, op: CmpOp, value: String },
    Not(Box<GuardExpr>),
    /// At least two operands.
    And(Vec<GuardExpr>),
    /// At least two operands.
    Or(Vec<GuardExpr>),
    Forall { var: String, body: Box<GuardExpr> },
    Exists { var: String, body: Box<GuardExpr> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct GuardSyntaxError {
    /// 1-based character column within the expression text.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Eq,
    Ne,
    Not,
    And,
    Or,
    LParen,
    RParen,
    Colon,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Ne => f.write_str("`!=`"),
            Tok::Not => f.write_str("`!`"),
            Tok::And => f.write_str("`&&`"),
            Tok::Or => f.write_str("`||`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Colon => f.write_str("`:`"),
        }
    }
}

/// Characters allowed in identifiers and value tokens.
pub fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '@' | '#' | '-')
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, GuardSyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let err = |m: &str| GuardSyntaxError { column: col, message: m.to_string() };
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => out.push((Tok::LParen, col)),
            ')' => out.push((Tok::RParen, col)),
            ':' => out.push((Tok::Colon, col)),
            '=' => out.push((Tok::Eq, col)),
            '!' if chars.get(i + 1) == Some(&'=') => {
                out.push((Tok::Ne, col));
                i += 1;
            }
            '!' => out.push((Tok::Not, col)),
            '&' if chars.get(i + 1) == Some(&'&') => {
                out.push((Tok::And, col));
                i += 1;
            }
            '|' if chars.get(i + 1) == Some(&'|') => {
                out.push((Tok::Or, col));
                i += 1;
            }
            '&' | '|' => return Err(err("expected a doubled operator (`&&` or `||`)")),
            c if is_word_char(c) => {
                let start = i;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                out.push((Tok::Word(chars[start..i].iter().collect()), col));
                continue;
            }
            other => return Err(err(&format!("unexpected character `{other}`"))),
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn error(&self, message: String) -> GuardSyntaxError {
        GuardSyntaxError { column: self.col(), message }
    }

    fn expect(&mut self, want: Tok) -> Result<(), GuardSyntaxError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected {want}, found {t}"))),
            None => Err(self.error(format!("expected {want}, found end of input"))),
        }
    }

    fn word(&mut self, what: &str) -> Result<String, GuardSyntaxError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            Some(t) => Err(self.error(format!("expected {what}, found {t}"))),
            None => Err(self.error(format!("expected {what}, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<GuardExpr, GuardSyntaxError> {
        let mut items = vec![self.term()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            items.push(self.term()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { GuardExpr::Or(items) })
    }

    fn term(&mut self) -> Result<GuardExpr, GuardSyntaxError> {
        let mut items = vec![self.factor()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            items.push(self.factor()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { GuardExpr::And(items) })
    }

    fn factor(&mut self) -> Result<GuardExpr, GuardSyntaxError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(GuardExpr::Not(Box::new(self.factor()?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Word(w)) if (w == "forall" || w == "exists") && self.is_quantifier() => {
                let universal = w == "forall";
                self.pos += 1;
                let var = self.word("a bound variable")?;
                self.expect(Tok::Colon)?;
                let body = Box::new(self.factor()?);
                Ok(if universal {
                    GuardExpr::Forall { var, body }
                } else {
                    GuardExpr::Exists { var, body }
                })
            }
            Some(Tok::Word(_)) => self.atom(),
            Some(t) => Err(self.error(format!("expected an expression, found {t}"))),
            None => Err(self.error("expected an expression, found end of input".into())),
        }
    }

    /// `forall`/`exists` followed by `ident :` is a quantifier; otherwise the
    /// word is an ordinary variable name.
    fn is_quantifier(&self) -> bool {
        matches!(
            (self.toks.get(self.pos + 1), self.toks.get(self.pos + 2)),
            (Some((Tok::Word(_), _)), Some((Tok::Colon, _)))
        )
    }

    fn atom(&mut self) -> Result<GuardExpr, GuardSyntaxError> {
        let var = self.word("a variable")?;
        let op = match self.peek() {
            Some(Tok::Eq) => CmpOp::Eq,
            Some(Tok::Ne) => CmpOp::Ne,
            Some(t) => return Err(self.error(format!("expected `=` or `!=`, found {t}"))),
            None => return Err(self.error("expected `=` or `!=`, found end of input".into())),
        };
        self.pos += 1;
        let value = self.word("a value")?;
        Ok(GuardExpr::Atom { var, op, value })
    }
}

pub fn parse_guard(src: &str) -> Result<GuardExpr, GuardSyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, end_col: src.chars().count() + 1 };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(p.error(format!("unexpected trailing {t}")));
    }
    Ok(e)
}

impl GuardExpr {
    pub fn atom(var: &str, op: CmpOp, value: &str) -> Self {
        GuardExpr::Atom { var: var.to_string(), op, value: value.to_string() }
    }

    pub fn eq(var: &str, value: &str) -> Self {
        Self::atom(var, CmpOp::Eq, value)
    }

    pub fn ne(var: &str, value: &str) -> Self {
        Self::atom(var, CmpOp::Ne, value)
    }

    pub fn and(items: Vec<GuardExpr>) -> Self {
        GuardExpr::And(items)
    }

    /// Every atom in the expression, outermost first.
    pub fn atoms(&self) -> Vec<(&str, CmpOp, &str)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(&'a str, CmpOp, &'a str)>) {
        match self {
            GuardExpr::Atom { var, op, value } => out.push((var, *op, value)),
            GuardExpr::Not(e) => e.collect_atoms(out),
            GuardExpr::And(xs) | GuardExpr::Or(xs) => xs.iter().for_each(|x| x.collect_atoms(out)),
            GuardExpr::Forall { body, .. } | GuardExpr::Exists { body, .. } => body.collect_atoms(out),
        }
    }

    fn fmt_factor(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardExpr::And(_) | GuardExpr::Or(_) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

impl fmt::Display for GuardExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardExpr::Atom { var, op, value } => {
                let op = match op {
                    CmpOp::Eq => "=",
                    CmpOp::Ne => "!=",
                };
                write!(f, "{var}{op}{value}")
            }
            GuardExpr::Not(e) => {
                f.write_str("!")?;
                e.fmt_factor(f)
            }
            GuardExpr::And(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" && ")?;
                    }
                    x.fmt_factor(f)?;
                }
                Ok(())
            }
            GuardExpr::Or(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" || ")?;
                    }
                    match x {
                        GuardExpr::Or(_) => write!(f, "({x})")?,
                        _ => write!(f, "{x}")?,
                    }
                }
                Ok(())
            }
            GuardExpr::Forall { var, body } => {
                write!(f, "forall {var}: ")?;
                body.fmt_factor(f)
            }
            GuardExpr::Exists { var, body } => {
                write!(f, "exists {var}: ")?;
                body.fmt_factor(f)
            }
        }
    }
}
