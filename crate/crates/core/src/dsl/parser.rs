//! Recursive-descent parser producing an unresolved syntax tree.

use super::lexer::{lex, Tok, Token};
use super::Diagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexRef {
    Named(String),
    Fixed(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Index {
    pub r: IndexRef,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModeLabel {
    Zero,
    Label(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Num(u64),
    /// A field, parameter or the field-strength abbreviation `F`.
    Ident {
        name: String,
        mode: Option<ModeLabel>,
        indices: Vec<Index>,
    },
    Momentum {
        field: String,
        mode: Option<ModeLabel>,
        indices: Vec<Index>,
    },
    Multiplier {
        name: String,
        mode: Option<ModeLabel>,
    },
    GaugeParam {
        name: String,
        mode: Option<ModeLabel>,
    },
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, i32),
    Deriv(Index, Box<Ast>),
    Lap(i32, Box<Ast>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ast {
    pub node: Node,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawParity {
    Even,
    Odd,
}

#[derive(Debug, Clone)]
pub struct RawField {
    pub name: String,
    pub vector: bool,
    pub parity: Vec<(Option<Index>, RawParity)>,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub struct RawTheory {
    pub name: String,
    pub dim: Option<(u64, usize, usize)>,
    pub metric: Option<Vec<i8>>,
    pub compact: Option<(String, String)>,
    pub params: Vec<(String, usize, usize)>,
    pub fields: Vec<RawField>,
    pub lagrangian: Option<Ast>,
    pub lagrangian_pos: (usize, usize),
    pub gauges: Vec<(String, Vec<Ast>)>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let t = self.peek();
        Err(Diagnostic::new(
            t.line,
            t.col,
            format!("expected {expected}, found {}", t.tok.describe()),
        ))
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_sym(&mut self, c: char) -> PResult<Token> {
        if self.is_sym(c) {
            Ok(self.bump())
        } else {
            self.error(&format!("`{c}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Token> {
        if self.is_kw(kw) {
            Ok(self.bump())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<(String, usize, usize)> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, t.line, t.col))
            }
            _ => self.error("identifier"),
        }
    }

    fn int(&mut self) -> PResult<(u64, usize, usize)> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Int(n) => {
                self.bump();
                Ok((n, t.line, t.col))
            }
            _ => self.error("integer"),
        }
    }

    fn theory(&mut self) -> PResult<RawTheory> {
        self.expect_kw("theory")?;
        let (name, _, _) = self.ident()?;
        self.expect_sym('{')?;
        let mut th = RawTheory {
            name,
            dim: None,
            metric: None,
            compact: None,
            params: Vec::new(),
            fields: Vec::new(),
            lagrangian: None,
            lagrangian_pos: (0, 0),
            gauges: Vec::new(),
        };
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Sym('}') => {
                    self.bump();
                    break;
                }
                Tok::Ident(kw) => match kw.as_str() {
                    "dim" => {
                        self.bump();
                        th.dim = Some(self.int()?);
                        self.expect_sym(';')?;
                    }
                    "metric" => {
                        self.bump();
                        th.metric = Some(self.metric()?);
                        self.expect_sym(';')?;
                    }
                    "compact" => {
                        self.bump();
                        let (coord, _, _) = self.ident()?;
                        self.expect_kw("on")?;
                        if self.peek().tok != Tok::Orbifold {
                            return self.error("`S1/Z2`");
                        }
                        self.bump();
                        self.expect_kw("radius")?;
                        let (radius, _, _) = self.ident()?;
                        self.expect_sym(';')?;
                        th.compact = Some((coord, radius));
                    }
                    "param" => {
                        self.bump();
                        th.params.push(self.ident()?);
                        while self.is_sym(',') {
                            self.bump();
                            th.params.push(self.ident()?);
                        }
                        self.expect_sym(';')?;
                    }
                    "field" => {
                        self.bump();
                        th.fields.push(self.field()?);
                    }
                    "lagrangian" => {
                        self.bump();
                        self.expect_sym('=')?;
                        let p = self.peek().clone();
                        th.lagrangian_pos = (p.line, p.col);
                        if self.is_sym(';') {
                            return Err(Diagnostic::new(p.line, p.col, "empty density"));
                        }
                        th.lagrangian = Some(self.expr()?);
                        self.expect_sym(';')?;
                    }
                    "gauge_fixing" => {
                        self.bump();
                        let (name, _, _) = self.ident()?;
                        self.expect_sym('{')?;
                        let mut conds = Vec::new();
                        while !self.is_sym('}') {
                            conds.push(self.expr()?);
                            self.expect_sym('=')?;
                            let (z, l, c) = self.int()?;
                            if z != 0 {
                                return Err(Diagnostic::new(l, c, "gauge conditions must read `<expr> = 0`"));
                            }
                            self.expect_sym(';')?;
                        }
                        self.bump();
                        if conds.is_empty() {
                            return Err(Diagnostic::new(t.line, t.col, format!("gauge set `{name}` is empty")));
                        }
                        th.gauges.push((name, conds));
                    }
                    _ => return self.error("a declaration"),
                },
                _ => return self.error("a declaration or `}`"),
            }
        }
        if self.peek().tok != Tok::Eof {
            return self.error("end of input");
        }
        Ok(th)
    }

    fn metric(&mut self) -> PResult<Vec<i8>> {
        self.expect_sym('(')?;
        let mut sig = Vec::new();
        loop {
            if self.is_sym('+') {
                self.bump();
                sig.push(1);
            } else if self.is_sym('-') {
                self.bump();
                sig.push(-1);
            } else {
                return self.error("`+` or `-`");
            }
            if self.is_sym(',') {
                self.bump();
            }
            if self.is_sym(')') {
                self.bump();
                return Ok(sig);
            }
        }
    }

    fn field(&mut self) -> PResult<RawField> {
        let (name, line, col) = self.ident()?;
        let vector = if self.is_kw("vector") {
            self.bump();
            true
        } else if self.is_kw("scalar") {
            self.bump();
            false
        } else {
            return self.error("`scalar` or `vector`");
        };
        let mut parity = Vec::new();
        if self.is_kw("parity") {
            self.bump();
            self.expect_sym('(')?;
            loop {
                let sel = if matches!(self.peek_at(1), Tok::Sym(':')) {
                    let idx = self.index()?;
                    self.expect_sym(':')?;
                    Some(idx)
                } else {
                    None
                };
                let p = if self.is_kw("even") {
                    RawParity::Even
                } else if self.is_kw("odd") {
                    RawParity::Odd
                } else {
                    return self.error("`even` or `odd`");
                };
                self.bump();
                parity.push((sel, p));
                if self.is_sym(',') {
                    self.bump();
                    continue;
                }
                self.expect_sym(')')?;
                break;
            }
        }
        self.expect_sym(';')?;
        Ok(RawField {
            name,
            vector,
            parity,
            line,
            col,
        })
    }

    fn index(&mut self) -> PResult<Index> {
        let t = self.peek().clone();
        let r = match t.tok {
            Tok::Int(n) if n <= 9 => IndexRef::Fixed(n as u8),
            Tok::Ident(s) => IndexRef::Named(s),
            _ => return self.error("an index"),
        };
        self.bump();
        Ok(Index {
            r,
            line: t.line,
            col: t.col,
        })
    }

    fn indices(&mut self) -> PResult<Vec<Index>> {
        let mut out = Vec::new();
        if self.is_sym('[') {
            self.bump();
            out.push(self.index()?);
            while self.is_sym(',') {
                self.bump();
                out.push(self.index()?);
            }
            self.expect_sym(']')?;
        }
        Ok(out)
    }

    fn mode(&mut self) -> PResult<Option<ModeLabel>> {
        if !self.is_sym('{') {
            return Ok(None);
        }
        self.bump();
        let t = self.peek().clone();
        let m = match t.tok {
            Tok::Int(0) => ModeLabel::Zero,
            Tok::Ident(s) => ModeLabel::Label(s),
            _ => return self.error("`0` or a mode label"),
        };
        self.bump();
        self.expect_sym('}')?;
        Ok(Some(m))
    }

    pub fn expr(&mut self) -> PResult<Ast> {
        let mut lhs = self.term()?;
        loop {
            let t = self.peek().clone();
            if self.is_sym('+') {
                self.bump();
                let rhs = self.term()?;
                lhs = mk(Node::Add(Box::new(lhs), Box::new(rhs)), &t);
            } else if self.is_sym('-') {
                self.bump();
                let rhs = self.term()?;
                lhs = mk(Node::Sub(Box::new(lhs), Box::new(rhs)), &t);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> PResult<Ast> {
        let mut lhs = self.unary()?;
        loop {
            let t = self.peek().clone();
            if self.is_sym('*') {
                self.bump();
                let rhs = self.unary()?;
                lhs = mk(Node::Mul(Box::new(lhs), Box::new(rhs)), &t);
            } else if self.is_sym('/') {
                self.bump();
                let rhs = self.unary()?;
                lhs = mk(Node::Div(Box::new(lhs), Box::new(rhs)), &t);
            } else if self.starts_factor() {
                // juxtaposition is multiplication: `d[i] A[i]` after an operand
                let rhs = self.unary()?;
                lhs = mk(Node::Mul(Box::new(lhs), Box::new(rhs)), &t);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek().tok, Tok::Ident(_) | Tok::Int(_) | Tok::Sym('('))
    }

    fn unary(&mut self) -> PResult<Ast> {
        let t = self.peek().clone();
        if self.is_sym('-') {
            self.bump();
            let inner = self.unary()?;
            return Ok(mk(Node::Neg(Box::new(inner)), &t));
        }
        if self.is_sym('+') {
            self.bump();
            return self.unary();
        }
        self.prefixed()
    }

    /// Prefix operators `d[..]`, `lap`, `invlap` act on the following power.
    fn prefixed(&mut self) -> PResult<Ast> {
        let t = self.peek().clone();
        if self.is_kw("d") && matches!(self.peek_at(1), Tok::Sym('[')) {
            self.bump();
            self.expect_sym('[')?;
            let idx = self.index()?;
            self.expect_sym(']')?;
            let inner = self.prefixed()?;
            return Ok(mk(Node::Deriv(idx, Box::new(inner)), &t));
        }
        if self.is_kw("lap") || self.is_kw("invlap") {
            let k = if self.is_kw("lap") { 1 } else { -1 };
            self.bump();
            let inner = self.prefixed()?;
            return Ok(mk(Node::Lap(k, Box::new(inner)), &t));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Ast> {
        let base = self.primary()?;
        if !self.is_sym('^') {
            return Ok(base);
        }
        let t = self.bump();
        let e = if self.is_sym('(') {
            self.bump();
            let neg = if self.is_sym('-') {
                self.bump();
                true
            } else {
                false
            };
            let (n, _, _) = self.int()?;
            self.expect_sym(')')?;
            if neg {
                -(n as i64)
            } else {
                n as i64
            }
        } else {
            self.int()?.0 as i64
        };
        if e.abs() > 64 {
            return Err(Diagnostic::new(t.line, t.col, "exponent out of range"));
        }
        Ok(mk(Node::Pow(Box::new(base), e as i32), &t))
    }

    fn primary(&mut self) -> PResult<Ast> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(n) => {
                let n = *n;
                self.bump();
                Ok(mk(Node::Num(n), &t))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(s) => {
                let s = s.clone();
                let wrapped = matches!(self.peek_at(1), Tok::Sym('('));
                match s.as_str() {
                    "pi" | "mult" | "gauge" if wrapped => {
                        self.bump();
                        self.expect_sym('(')?;
                        let (inner, _, _) = self.ident()?;
                        self.expect_sym(')')?;
                        let mode = self.mode()?;
                        let node = match s.as_str() {
                            "pi" => Node::Momentum {
                                field: inner,
                                mode,
                                indices: self.indices()?,
                            },
                            "mult" => Node::Multiplier { name: inner, mode },
                            _ => Node::GaugeParam { name: inner, mode },
                        };
                        Ok(mk(node, &t))
                    }
                    _ => {
                        self.bump();
                        let mode = self.mode()?;
                        let indices = self.indices()?;
                        Ok(mk(Node::Ident { name: s, mode, indices }, &t))
                    }
                }
            }
            _ => self.error("an expression"),
        }
    }
}

fn mk(node: Node, t: &Token) -> Ast {
    Ast {
        node,
        line: t.line,
        col: t.col,
    }
}

pub fn parse_raw(src: &str) -> Result<RawTheory, Diagnostic> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    p.theory()
}

/// Parses a standalone expression (used by tests and the CLI).
pub fn parse_expr_raw(src: &str) -> Result<Ast, Diagnostic> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if p.peek().tok != Tok::Eof {
        return p.error("end of expression");
    }
    Ok(e)
}
