//! Tokenizer for the C-like mini-language.
//!
//! Lexical grammar (fixed):
//!
//! * `Identifier  = [A-Za-z_][A-Za-z0-9_]*`
//! * `IntLiteral  = [0-9]+`
//! * `StrLiteral` = double-quoted, backslash escapes any following character,
//!   raw newlines are not allowed inside a literal
//! * `Operator    ∈ { = == != < <= > >= + - * / % && || ! }`
//! * `Punct       ∈ { ( ) { } [ ] ; , }`
//! * `//` line comments and `/* */` block comments are skipped, as is
//!   whitespace
//!
//! Tokenization is maximal munch and deterministic; token spans are byte
//! offsets into the source, strictly increasing and non-overlapping, and the
//! token texts plus the skipped gaps reproduce the source exactly.
//!
//! [`classify_identifiers`] marks the user-renameable identifiers: every
//! `Identifier` token except call heads (an identifier whose strictly next
//! token is `(`) and the reserved placeholder names used by view
//! construction (`<ID>`, `VAR_<n>`).

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Keywords of the mini-language. Maximal munch makes an identifier with a
/// keyword spelling impossible.
pub const KEYWORDS: [&str; 11] = [
    "int", "float", "return", "if", "else", "while", "for", "void", "char", "break", "continue",
];

const TWO_CHAR_OPERATORS: [&str; 6] = ["==", "!=", "<=", ">=", "&&", "||"];
const ONE_CHAR_OPERATORS: [char; 9] = ['=', '<', '>', '+', '-', '*', '/', '%', '!'];
const PUNCT: [char; 8] = ['(', ')', '{', '}', '[', ']', ';', ','];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    IntLiteral,
    StrLiteral,
    Operator,
    Punct,
}

/// Byte range `[start, end)` into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    pub span: Span,
}

/// Tokens of one source string, in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenList {
    pub tokens: Vec<Token>,
    pub source_len: usize,
}

impl TokenList {
    pub fn texts(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    pub fn kinds(&self) -> Vec<TokenKind> {
        self.tokens.iter().map(|t| t.kind).collect()
    }

    /// Keeps the first `max_len` tokens. `source_len` is retained so spans
    /// stay valid offsets into the original source.
    pub fn truncated(&self, max_len: usize) -> TokenList {
        TokenList {
            tokens: self.tokens.iter().take(max_len).cloned().collect(),
            source_len: self.source_len,
        }
    }
}

/// Indices of user-renameable identifier tokens within a [`TokenList`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdentifierSet {
    positions: BTreeSet<usize>,
}

impl IdentifierSet {
    pub fn from_positions(positions: impl IntoIterator<Item = usize>) -> Self {
        Self {
            positions: positions.into_iter().collect(),
        }
    }

    pub fn contains(&self, index: usize) -> bool {
        self.positions.contains(&index)
    }

    /// Positions in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.positions.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Drops positions at or beyond `max_len`.
    pub fn truncated(&self, max_len: usize) -> IdentifierSet {
        Self {
            positions: self.positions.iter().copied().filter(|&p| p < max_len).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unexpected character at byte offset {offset}: {message}")]
pub struct LexError {
    pub offset: usize,
    pub message: String,
}

impl LexError {
    fn new(offset: usize, message: impl fmt::Display) -> Self {
        Self {
            offset,
            message: message.to_string(),
        }
    }
}

/// Tokenizes `source` under the mini-language grammar.
pub fn tokenize(source: &str) -> Result<TokenList, LexError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < bytes.len() {
        let b = bytes[i];

        // Whitespace.
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }

        // Comments.
        if b == b'/' && i + 1 < bytes.len() {
            match bytes[i + 1] {
                b'/' => {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                    continue;
                }
                b'*' => {
                    let start = i;
                    i += 2;
                    loop {
                        if i + 1 >= bytes.len() {
                            return Err(LexError::new(start, "unterminated block comment"));
                        }
                        if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                            i += 2;
                            break;
                        }
                        i += 1;
                    }
                    continue;
                }
                _ => {}
            }
        }

        // Identifier / keyword.
        if b == b'_' || b.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i] == b'_' || bytes[i].is_ascii_alphanumeric()) {
                i += 1;
            }
            let text = &source[start..i];
            let kind = if KEYWORDS.contains(&text) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            tokens.push(Token {
                text: text.to_string(),
                kind,
                span: Span { start, end: i },
            });
            continue;
        }

        // Integer literal.
        if b.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            tokens.push(Token {
                text: source[start..i].to_string(),
                kind: TokenKind::IntLiteral,
                span: Span { start, end: i },
            });
            continue;
        }

        // String literal.
        if b == b'"' {
            let start = i;
            i += 1;
            loop {
                if i >= bytes.len() {
                    return Err(LexError::new(start, "unterminated string literal"));
                }
                match bytes[i] {
                    b'"' => {
                        i += 1;
                        break;
                    }
                    b'\\' => {
                        if i + 1 >= bytes.len() {
                            return Err(LexError::new(start, "unterminated string literal"));
                        }
                        // The escape consumes the next character, which may
                        // be multi-byte.
                        i += 1;
                        i += utf8_len(bytes[i]);
                    }
                    b'\n' => {
                        return Err(LexError::new(i, "raw newline inside string literal"));
                    }
                    c => {
                        i += utf8_len(c);
                    }
                }
            }
            tokens.push(Token {
                text: source[start..i].to_string(),
                kind: TokenKind::StrLiteral,
                span: Span { start, end: i },
            });
            continue;
        }

        // Punctuation.
        if PUNCT.contains(&(b as char)) {
            tokens.push(Token {
                text: (b as char).to_string(),
                kind: TokenKind::Punct,
                span: Span { start: i, end: i + 1 },
            });
            i += 1;
            continue;
        }

        // Operators, longest match first.
        if i + 1 < bytes.len() {
            let pair = &source[i..i + 2];
            if TWO_CHAR_OPERATORS.contains(&pair) {
                tokens.push(Token {
                    text: pair.to_string(),
                    kind: TokenKind::Operator,
                    span: Span { start: i, end: i + 2 },
                });
                i += 2;
                continue;
            }
        }
        if ONE_CHAR_OPERATORS.contains(&(b as char)) {
            tokens.push(Token {
                text: (b as char).to_string(),
                kind: TokenKind::Operator,
                span: Span { start: i, end: i + 1 },
            });
            i += 1;
            continue;
        }

        return Err(LexError::new(
            i,
            format!("'{}' does not start any token", source[i..].chars().next().unwrap()),
        ));
    }

    Ok(TokenList {
        tokens,
        source_len: source.len(),
    })
}

fn utf8_len(first_byte: u8) -> usize {
    match first_byte {
        b if b < 0x80 => 1,
        b if b >> 5 == 0b110 => 2,
        b if b >> 4 == 0b1110 => 3,
        _ => 4,
    }
}

/// True for the placeholder spellings reserved by view construction.
/// They are never treated as user identifiers, so abstracted code can be fed
/// back through the pipeline without its placeholders being renamed again.
pub fn is_reserved_placeholder(text: &str) -> bool {
    if text == "<ID>" {
        return true;
    }
    match text.strip_prefix("VAR_") {
        Some(digits) => !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()),
        None => false,
    }
}

/// Returns the indices of user-renameable identifiers: every `Identifier`
/// token except call heads (strictly next token is `(`) and reserved
/// placeholder spellings.
pub fn classify_identifiers(toks: &TokenList) -> IdentifierSet {
    let positions = toks
        .tokens
        .iter()
        .enumerate()
        .filter(|(i, t)| {
            t.kind == TokenKind::Identifier
                && !is_reserved_placeholder(&t.text)
                && toks.tokens.get(i + 1).map_or(true, |next| next.text != "(")
        })
        .map(|(i, _)| i)
        .collect();
    IdentifierSet { positions }
}
