// SPDX-License-Identifier: MIT
//! Tokenizer shared by the model and pattern languages.

use super::{ModelIoError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Digit-led word; only valid as a domain value.
    Number(String),
    Str(String),
    Colon,
    Comma,
    Semi,
    Assign,
    EqEq,
    LArrow,
    RArrow,
    FatArrow,
    Bang,
    Amp,
    Pipe,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Newline,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Assign => "`=`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::LArrow => "`<-`".into(),
            Tok::RArrow => "`->`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// Newlines inside `{ }` are dropped so tables and domains may span lines.
pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ModelIoError> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut last = SourceSpan { line: 1, column: 1, length: 1 };
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let at = |col: usize, length: usize| SourceSpan { line: li + 1, column: col + 1, length: length.max(1) };
        while i < chars.len() {
            let c = chars[i];
            let start = i;
            let tok = match c {
                '#' => break,
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().collect();
                    let tok = if c.is_ascii_alphabetic() {
                        Tok::Ident(word)
                    } else if c.is_ascii_digit() {
                        Tok::Number(word)
                    } else {
                        return Err(ModelIoError::parse(at(start, i - start), "identifiers must start with a letter"));
                    };
                    out.push(Token { tok, span: at(start, i - start) });
                    continue;
                }
                '"' => {
                    i += 1;
                    let mut s = String::new();
                    loop {
                        match chars.get(i) {
                            None => return Err(ModelIoError::parse(at(start, i - start), "unterminated string")),
                            Some('"') => break,
                            Some('\\') => {
                                match chars.get(i + 1) {
                                    Some('"') => s.push('"'),
                                    Some('\\') => s.push('\\'),
                                    _ => return Err(ModelIoError::parse(at(i, 2), "unknown escape; use \\\" or \\\\")),
                                }
                                i += 2;
                            }
                            Some(&ch) => {
                                s.push(ch);
                                i += 1;
                            }
                        }
                    }
                    i += 1;
                    out.push(Token { tok: Tok::Str(s), span: at(start, i - start) });
                    continue;
                }
                _ => {
                    let next = chars.get(i + 1).copied();
                    let (tok, len) = match (c, next) {
                        ('=', Some('=')) => (Tok::EqEq, 2),
                        ('=', Some('>')) => (Tok::FatArrow, 2),
                        ('<', Some('-')) => (Tok::LArrow, 2),
                        ('-', Some('>')) => (Tok::RArrow, 2),
                        ('=', _) => (Tok::Assign, 1),
                        (':', _) => (Tok::Colon, 1),
                        (',', _) => (Tok::Comma, 1),
                        (';', _) => (Tok::Semi, 1),
                        ('!', _) => (Tok::Bang, 1),
                        ('&', _) => (Tok::Amp, 1),
                        ('|', _) => (Tok::Pipe, 1),
                        ('(', _) => (Tok::LParen, 1),
                        (')', _) => (Tok::RParen, 1),
                        ('{', _) => (Tok::LBrace, 1),
                        ('}', _) => (Tok::RBrace, 1),
                        _ => return Err(ModelIoError::parse(at(i, 1), format!("unexpected character `{c}`"))),
                    };
                    i += len;
                    tok
                }
            };
            match tok {
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth = depth.saturating_sub(1),
                _ => {}
            }
            out.push(Token { tok, span: at(start, i - start) });
        }
        last = at(chars.len(), 1);
        if depth == 0 {
            out.push(Token { tok: Tok::Newline, span: last });
        }
    }
    out.push(Token { tok: Tok::Eof, span: last });
    Ok(out)
}
