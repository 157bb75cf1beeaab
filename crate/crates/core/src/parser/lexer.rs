use num_rational::BigRational;

use super::{ParseError, ParseErrorKind, SourceSpan};
use crate::scalar::decimal_to_rational;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// Unsigned integer literal, kept as text so it can be reused as a lag
    /// or an exponent.
    Int(String),
    Decimal(BigRational),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Equals,
    Colon,
    Comma,
    Newline,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(s) => format!("number `{s}`"),
            Tok::Decimal(_) => "decimal number".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, start: usize, line: usize, col: usize) -> SourceSpan {
        SourceSpan {
            start,
            end: self.pos,
            line,
            column: col,
        }
    }

    fn digits(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
        }
        s
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        text,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        if c == '#' {
            while cur.peek().is_some_and(|c| c != '\n') {
                cur.bump();
            }
            continue;
        }
        if c == '\n' {
            cur.bump();
            out.push(Token {
                tok: Tok::Newline,
                span: cur.span_from(start, line, col),
            });
            continue;
        }
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                s.push(c);
                cur.bump();
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let int = cur.digits();
            if cur.peek() == Some('.') {
                cur.bump();
                let frac = cur.digits();
                if frac.is_empty() {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        cur.span_from(start, line, col),
                        "expected digits after decimal point",
                    ));
                }
                Tok::Decimal(decimal_to_rational(&int, &frac))
            } else {
                Tok::Int(int)
            }
        } else {
            cur.bump();
            match c {
                '+' => Tok::Plus,
                '-' | '\u{2212}' => Tok::Minus,
                '*' | '\u{b7}' => Tok::Star,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '=' => Tok::Equals,
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                other => {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        cur.span_from(start, line, col),
                        format!("unexpected character `{other}`"),
                    ))
                }
            }
        };
        out.push(Token {
            tok,
            span: cur.span_from(start, line, col),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan {
            start: text.len(),
            end: text.len(),
            line: cur.line,
            column: cur.col,
        },
    });
    Ok(out)
}
