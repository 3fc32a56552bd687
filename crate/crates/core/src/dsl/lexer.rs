//! Tokenizer shared by the space, query and model formats.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Word(String),
    /// Digits with an optional `.digits` or `/digits` tail, kept verbatim.
    Number(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Eq,
    NotEq,
    Semi,
    Amp,
    Pipe,
    Bang,
    Arrow,
    Dot,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Number(n) => format!("`{n}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::NotEq => "`!=`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// Byte offsets into the source.
    pub start: usize,
    pub end: usize,
}

fn is_word_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let (start, c) = chars[i];
        let (tline, tcol) = (line, col);
        let take = |n: usize, tok: Tok, out: &mut Vec<Token>| {
            let end = chars.get(i + n).map_or(src.len(), |x| x.0);
            out.push(Token { tok, line: tline, col: tcol, start, end });
            n
        };
        let n = match c {
            '\n' => {
                take(1, Tok::Newline, &mut out);
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => 1,
            '#' => {
                let mut n = 0;
                while i + n < chars.len() && chars[i + n].1 != '\n' {
                    n += 1;
                }
                n
            }
            '{' => take(1, Tok::LBrace, &mut out),
            '}' => take(1, Tok::RBrace, &mut out),
            '(' => take(1, Tok::LParen, &mut out),
            ')' => take(1, Tok::RParen, &mut out),
            ',' => take(1, Tok::Comma, &mut out),
            ';' => take(1, Tok::Semi, &mut out),
            '&' => take(1, Tok::Amp, &mut out),
            '|' => take(1, Tok::Pipe, &mut out),
            '.' => take(1, Tok::Dot, &mut out),
            '=' => take(1, Tok::Eq, &mut out),
            '!' if chars.get(i + 1).map(|x| x.1) == Some('=') => take(2, Tok::NotEq, &mut out),
            '!' => take(1, Tok::Bang, &mut out),
            '-' if chars.get(i + 1).map(|x| x.1) == Some('>') => take(2, Tok::Arrow, &mut out),
            c if c.is_ascii_digit() => {
                let mut n = 1;
                while i + n < chars.len() && chars[i + n].1.is_ascii_digit() {
                    n += 1;
                }
                if i + n + 1 < chars.len()
                    && (chars[i + n].1 == '.' || chars[i + n].1 == '/')
                    && chars[i + n + 1].1.is_ascii_digit()
                {
                    n += 2;
                    while i + n < chars.len() && chars[i + n].1.is_ascii_digit() {
                        n += 1;
                    }
                }
                let end = chars.get(i + n).map_or(src.len(), |x| x.0);
                take(n, Tok::Number(src[start..end].to_string()), &mut out)
            }
            c if is_word_start(c) => {
                let mut n = 1;
                while i + n < chars.len() && is_word_char(chars[i + n].1) {
                    // `->` ends a word.
                    if chars[i + n].1 == '-' && chars.get(i + n + 1).map(|x| x.1) == Some('>') {
                        break;
                    }
                    n += 1;
                }
                let end = chars.get(i + n).map_or(src.len(), |x| x.0);
                take(n, Tok::Word(src[start..end].to_string()), &mut out)
            }
            other => {
                return Err(Error::Parse { line, col, msg: format!("unexpected character `{other}`") });
            }
        };
        i += n;
        col += n;
    }
    out.push(Token { tok: Tok::Eof, line, col, start: src.len(), end: src.len() });
    Ok(out)
}

/// Cursor over a token stream with the helpers every format needs.
pub struct Cursor<'a> {
    pub src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    /// Whether newlines are skipped transparently.
    pub skip_newlines: bool,
}

impl<'a> Cursor<'a> {
    pub fn new(src: &'a str, skip_newlines: bool) -> Result<Self> {
        Ok(Cursor { src, toks: tokenize(src)?, pos: 0, skip_newlines })
    }

    fn skip(&mut self) {
        if self.skip_newlines {
            while self.toks[self.pos].tok == Tok::Newline {
                self.pos += 1;
            }
        }
    }

    pub fn peek(&mut self) -> &Token {
        self.skip();
        &self.toks[self.pos]
    }

    pub fn peek_tok(&mut self) -> &Tok {
        &self.peek().tok
    }

    /// Token after the next one (newline skipping applies to both).
    pub fn peek2(&mut self) -> &Tok {
        self.skip();
        let mut j = self.pos + 1;
        if self.skip_newlines {
            while j < self.toks.len() && self.toks[j].tok == Tok::Newline {
                j += 1;
            }
        }
        &self.toks[j.min(self.toks.len() - 1)].tok
    }

    pub fn bump(&mut self) -> Token {
        self.skip();
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    /// End offset of the most recently consumed token.
    pub fn last_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end
        }
    }

    pub fn error_at(t: &Token, msg: impl Into<String>) -> Error {
        Error::Parse { line: t.line, col: t.col, msg: msg.into() }
    }

    pub fn semantic_at(t: &Token, msg: impl Into<String>) -> Error {
        Error::Semantic { line: t.line, col: t.col, msg: msg.into() }
    }

    pub fn unexpected(&mut self, wanted: &str) -> Error {
        let t = self.peek().clone();
        Self::error_at(&t, format!("expected {wanted}, found {}", t.tok.describe()))
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek_tok() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<Token> {
        if self.peek_tok() == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    pub fn is_keyword(&mut self, kw: &str) -> bool {
        matches!(self.peek_tok(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<Token> {
        if self.is_keyword(kw) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn word(&mut self, what: &str) -> Result<(String, Token)> {
        match self.peek_tok().clone() {
            Tok::Word(w) => Ok((w, self.bump())),
            _ => Err(self.unexpected(what)),
        }
    }

    /// A label: a word or a number, taken verbatim.
    pub fn label(&mut self) -> Result<(String, Token)> {
        match self.peek_tok().clone() {
            Tok::Word(w) | Tok::Number(w) => Ok((w, self.bump())),
            _ => Err(self.unexpected("a label")),
        }
    }

    /// `world.component`.
    pub fn qualified(&mut self) -> Result<(String, Token)> {
        let (w, t) = self.word("a coordinate `world.component`")?;
        self.expect(&Tok::Dot)?;
        let (label, _) = self.label()?;
        Ok((format!("{w}.{label}"), t))
    }

    pub fn at_eof(&mut self) -> bool {
        *self.peek_tok() == Tok::Eof
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("(F.class=Y) = 0.32 # note\n3/17 a->b !x != y"),
            vec![
                Tok::LParen,
                Tok::Word("F".into()),
                Tok::Dot,
                Tok::Word("class".into()),
                Tok::Eq,
                Tok::Word("Y".into()),
                Tok::RParen,
                Tok::Eq,
                Tok::Number("0.32".into()),
                Tok::Newline,
                Tok::Number("3/17".into()),
                Tok::Word("a".into()),
                Tok::Arrow,
                Tok::Word("b".into()),
                Tok::Bang,
                Tok::Word("x".into()),
                Tok::NotEq,
                Tok::Word("y".into()),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn positions_and_errors() {
        let t = tokenize("a\n  bc").unwrap();
        assert_eq!((t[2].line, t[2].col), (2, 3));
        assert_eq!(
            tokenize("a\n $").unwrap_err(),
            Error::Parse { line: 2, col: 2, msg: "unexpected character `$`".into() }
        );
    }

    #[test]
    fn numeric_labels_after_dot() {
        assert_eq!(toks("X.w1=0"), vec![
            Tok::Word("X".into()),
            Tok::Dot,
            Tok::Word("w1".into()),
            Tok::Eq,
            Tok::Number("0".into()),
            Tok::Eof
        ]);
        assert_eq!(toks("1."), vec![Tok::Number("1".into()), Tok::Dot, Tok::Eof]);
    }
}
