use num_traits::Signed;

use super::lexer::{lex, ParseError, Pos, Tok};
use crate::model::{BinOp, CmpOp, Expr, Pred, Rational, SetRef, Sort, Value};

const RESERVED: &[&str] =
    &["if", "then", "else", "exists", "true", "false", "min", "max", "rat", "div", "case", "otherwise", "let", "enum"];

/// Recursive-descent parser over a token stream shared by every file format.
pub struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: lex(src)?, i: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].0
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.pos(), msg)
    }

    pub fn unexpected(&self, wanted: &str) -> ParseError {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.to_string()))
        }
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    /// An identifier usable as a variable or literal name.
    pub fn name(&mut self) -> Result<String, ParseError> {
        if let Tok::Ident(s) = self.peek() {
            if RESERVED.contains(&s.as_str()) {
                return Err(self.error(format!("`{s}` is a keyword")));
            }
        }
        self.ident()
    }

    pub fn integer(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Num(n) if n.is_integer() => {
                self.bump();
                Ok(if neg { -n.to_integer() } else { n.to_integer() })
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    pub fn comma_list<T>(
        &mut self,
        close: Tok,
        mut item: impl FnMut(&mut Parser) -> Result<T, ParseError>,
    ) -> Result<Vec<T>, ParseError> {
        let mut out = Vec::new();
        if self.eat(&close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat(&close) {
                return Ok(out);
            }
            self.expect(Tok::Comma)?;
        }
    }

    // ---- sorts ----

    pub fn sort(&mut self) -> Result<Sort, ParseError> {
        let mut s = self.sort_atom()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let lit = self.name()?;
            s = Sort::Extended(Box::new(s), lit);
        }
        Ok(s)
    }

    pub fn sort_atom(&mut self) -> Result<Sort, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                if let Some(s) = Sort::is_keyword_sort(&name) {
                    self.bump();
                    return Ok(s);
                }
                if name == "enum" {
                    self.bump();
                    self.expect(Tok::LBrace)?;
                    let lits = self.comma_list(Tok::RBrace, |p| p.name())?;
                    if lits.is_empty() {
                        return Err(self.error("enumeration needs at least one literal"));
                    }
                    return Ok(Sort::Enum(lits));
                }
                Err(self.unexpected("a sort"))
            }
            Tok::Num(_) | Tok::Minus => {
                let lo = self.integer()?;
                self.expect(Tok::DotDot)?;
                let hi = self.integer()?;
                if lo > hi {
                    return Err(self.error(format!("empty range {lo}..{hi}")));
                }
                Ok(Sort::Range(lo, hi))
            }
            Tok::LParen => {
                self.bump();
                let mut items = self.comma_list(Tok::RParen, |p| p.sort())?;
                match items.len() {
                    0 => Err(self.error("empty tuple sort")),
                    1 => Ok(items.pop().unwrap()),
                    _ => Ok(Sort::Tuple(items)),
                }
            }
            _ => Err(self.unexpected("a sort")),
        }
    }

    // ---- values ----

    /// A constant value: number, `inf`, `tau`, literal name, `rat(n, d)` or tuple.
    pub fn value(&mut self) -> Result<Value, ParseError> {
        match self.peek().clone() {
            Tok::Num(_) | Tok::Minus => {
                let neg = self.eat(&Tok::Minus);
                match self.bump() {
                    Tok::Num(n) => Ok(Value::Num(if neg { -n } else { n })),
                    _ => Err(self.unexpected("a number")),
                }
            }
            Tok::Inf => {
                self.bump();
                Ok(Value::Inf)
            }
            Tok::Tau => {
                self.bump();
                Ok(Value::Tau)
            }
            Tok::LParen => {
                self.bump();
                Ok(Value::Tuple(self.comma_list(Tok::RParen, |p| p.value())?))
            }
            Tok::Ident(s) if s == "rat" => Ok(Value::Num(self.rat_literal()?)),
            Tok::Ident(_) => Ok(Value::Lit(self.name()?)),
            _ => Err(self.unexpected("a value")),
        }
    }

    fn rat_literal(&mut self) -> Result<Rational, ParseError> {
        self.expect_kw("rat")?;
        self.expect(Tok::LParen)?;
        let n = self.integer()?;
        self.expect(Tok::Comma)?;
        let d = self.integer()?;
        self.expect(Tok::RParen)?;
        if d == 0 {
            return Err(self.error("zero denominator"));
        }
        Ok(Rational::new(n, d))
    }

    // ---- predicates ----

    pub fn pred(&mut self) -> Result<Pred, ParseError> {
        let lhs = self.pred_or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.pred()?;
            return Ok(Pred::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn pred_or(&mut self) -> Result<Pred, ParseError> {
        let mut items = vec![self.pred_and()?];
        while self.eat(&Tok::Or) {
            items.push(self.pred_and()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Pred::Or(items) })
    }

    fn pred_and(&mut self) -> Result<Pred, ParseError> {
        let mut items = vec![self.pred_unary()?];
        while self.eat(&Tok::And) {
            items.push(self.pred_unary()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Pred::And(items) })
    }

    fn pred_unary(&mut self) -> Result<Pred, ParseError> {
        if self.eat(&Tok::Not) {
            return Ok(Pred::not(self.pred_unary()?));
        }
        if self.eat_kw("exists") {
            let mut vars = vec![self.name()?];
            while self.eat(&Tok::Comma) {
                vars.push(self.name()?);
            }
            self.expect(Tok::Colon)?;
            let body = self.pred()?;
            return Ok(Pred::Exists(vars, Box::new(body)));
        }
        if self.eat_kw("true") {
            return Ok(Pred::True);
        }
        if self.eat_kw("false") {
            return Ok(Pred::False);
        }
        if *self.peek() == Tok::LParen {
            let save = self.i;
            let first = match self.comparison() {
                Ok(p) => return Ok(p),
                Err(e) => e,
            };
            self.i = save;
            self.bump();
            let second = self.pred().and_then(|p| {
                self.expect(Tok::RParen)?;
                Ok(p)
            });
            return second.map_err(|e2| furthest(first, e2));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Pred, ParseError> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            Tok::In => {
                self.bump();
                let set = self.set_ref()?;
                return Ok(Pred::In(lhs, set));
            }
            _ => return Err(self.unexpected("a comparison")),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Pred::Cmp(op, lhs, rhs))
    }

    fn set_ref(&mut self) -> Result<SetRef, ParseError> {
        if self.eat(&Tok::LBrace) {
            return Ok(SetRef::Values(self.comma_list(Tok::RBrace, |p| p.value())?));
        }
        Ok(SetRef::Sort(self.sort_atom()?))
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Ident(s) if s == "div" => BinOp::IntDiv,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            if let Tok::Num(n) = self.peek().clone() {
                if !matches!(self.peek_at(1), Tok::Dot) {
                    self.bump();
                    return Ok(Expr::Const(Value::Num(-n)));
                }
            }
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let mut e = self.primary()?;
        while *self.peek() == Tok::Dot {
            self.bump();
            match self.bump() {
                Tok::Num(n) if n.is_integer() && !n.is_negative() => {
                    e = Expr::Proj(Box::new(e), n.to_integer() as usize);
                }
                _ => return Err(self.error("expected a component index after `.`")),
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Const(Value::Num(n)))
            }
            Tok::Inf => {
                self.bump();
                Ok(Expr::Const(Value::Inf))
            }
            Tok::Tau => {
                self.bump();
                Ok(Expr::Const(Value::Tau))
            }
            Tok::LParen => {
                self.bump();
                let mut items = self.comma_list(Tok::RParen, |p| p.expr())?;
                match items.len() {
                    0 => Err(self.error("empty tuple")),
                    1 => Ok(items.pop().unwrap()),
                    _ => Ok(Expr::Tuple(items)),
                }
            }
            Tok::Ident(s) => match s.as_str() {
                "if" => {
                    self.bump();
                    let c = self.pred()?;
                    self.expect_kw("then")?;
                    let a = self.expr()?;
                    self.expect_kw("else")?;
                    let b = self.expr()?;
                    Ok(Expr::Ite(Box::new(c), Box::new(a), Box::new(b)))
                }
                "min" | "max" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let args = self.comma_list(Tok::RParen, |p| p.expr())?;
                    if args.is_empty() {
                        return Err(self.error(format!("`{s}` needs arguments")));
                    }
                    Ok(if s == "min" { Expr::Min(args) } else { Expr::Max(args) })
                }
                "rat" => Ok(Expr::Const(Value::Num(self.rat_literal()?))),
                _ => {
                    let name = self.name()?;
                    if self.eat(&Tok::LParen) {
                        let args = self.comma_list(Tok::RParen, |p| p.expr())?;
                        Ok(Expr::Apply(name, args))
                    } else {
                        Ok(Expr::Var(name))
                    }
                }
            },
            _ => Err(self.unexpected("an expression")),
        }
    }
}

fn furthest(a: ParseError, b: ParseError) -> ParseError {
    if (b.line, b.col) >= (a.line, a.col) {
        b
    } else {
        a
    }
}
