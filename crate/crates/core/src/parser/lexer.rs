use std::fmt;

use num_traits::Zero;

use crate::model::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(Rational),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Dot,
    DotDot,
    At,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    And,
    Or,
    Not,
    Implies,
    Arrow,
    Inf,
    Tau,
    In,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Num(n) => return write!(f, "number {n}"),
            Tok::Str(s) => return write!(f, "string \"{s}\""),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::At => "@",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::And => "&",
            Tok::Or => "|",
            Tok::Not => "!",
            Tok::Implies => "=>",
            Tok::Arrow => "->",
            Tok::Inf => "inf",
            Tok::Tau => "tau",
            Tok::In => "in",
            Tok::Eof => return write!(f, "end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn at(pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError { line: pos.line, col: pos.col, message: message.into() }
    }
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out: Vec<(Tok, Pos)> = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let peek = chars.get(i + 1).copied();
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && peek == Some('-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let mut width = 1;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i + width < chars.len()
                && (chars[i + width].is_ascii_alphanumeric() || matches!(chars[i + width], '_' | '\''))
            {
                width += 1;
            }
            let word: String = chars[start..start + width].iter().collect();
            match word.as_str() {
                "and" => Tok::And,
                "or" => Tok::Or,
                "not" => Tok::Not,
                "in" => Tok::In,
                "inf" | "infinity" => Tok::Inf,
                "tau" => Tok::Tau,
                _ => Tok::Ident(word),
            }
        } else if c.is_ascii_digit() {
            let after_dot = matches!(out.last(), Some((Tok::Dot, _)));
            let mut n = Rational::zero();
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                let d = chars[j].to_digit(10).unwrap() as i64;
                n = n * Rational::from_integer(10) + Rational::from_integer(d);
                j += 1;
            }
            let frac_follows =
                !after_dot && chars.get(j) == Some(&'.') && chars.get(j + 1).is_some_and(|c| c.is_ascii_digit());
            if frac_follows {
                j += 1;
                let mut scale = Rational::from_integer(1);
                while chars.get(j).is_some_and(|c| c.is_ascii_digit()) {
                    scale /= Rational::from_integer(10);
                    let d = chars[j].to_digit(10).unwrap() as i64;
                    n += scale * Rational::from_integer(d);
                    j += 1;
                }
            }
            width = j - i;
            Tok::Num(n)
        } else if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                j += 1;
            }
            if chars.get(j) != Some(&'"') {
                return Err(ParseError::at(pos, "unterminated string"));
            }
            width = j + 1 - i;
            Tok::Str(chars[start..j].iter().collect())
        } else {
            let two = |a: char| peek == Some(a);
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                '@' => Tok::At,
                '+' => Tok::Plus,
                '*' | '×' => Tok::Star,
                '.' if two('.') => {
                    width = 2;
                    Tok::DotDot
                }
                '.' => Tok::Dot,
                '=' if two('>') => {
                    width = 2;
                    Tok::Implies
                }
                '=' => Tok::Eq,
                '!' if two('=') => {
                    width = 2;
                    Tok::Ne
                }
                '!' | '¬' => Tok::Not,
                '<' if two('=') => {
                    width = 2;
                    Tok::Le
                }
                '<' => Tok::Lt,
                '>' if two('=') => {
                    width = 2;
                    Tok::Ge
                }
                '>' => Tok::Gt,
                '-' if two('>') => {
                    width = 2;
                    Tok::Arrow
                }
                '-' => Tok::Minus,
                '/' if two('\\') => {
                    width = 2;
                    Tok::And
                }
                '/' => Tok::Slash,
                '\\' if two('/') => {
                    width = 2;
                    Tok::Or
                }
                '&' | '∧' => Tok::And,
                '|' | '∨' => Tok::Or,
                '≠' => Tok::Ne,
                '≤' => Tok::Le,
                '≥' => Tok::Ge,
                '⇒' => Tok::Implies,
                '→' => Tok::Arrow,
                '∞' => Tok::Inf,
                'τ' => Tok::Tau,
                '∈' => Tok::In,
                other => return Err(ParseError::at(pos, format!("unexpected character `{other}`"))),
            }
        };
        out.push((tok, pos));
        i += width;
        col += width;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}
