//! Closed token vocabulary and token sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the length of any token sequence.
pub const MAX_LEN: usize = 256;

/// Number of tokens in the vocabulary.
pub const VOCAB_SIZE: usize = 42;

const LEXEMES: [&str; VOCAB_SIZE] = [
    "def", "if", "else", "for", "while", "return", "pass", "raise", "in", // keywords
    "a", "b", "c", "d", "e", "f", "g", "x", "y", "z", "foo", "bar", // identifiers
    "0", "1", "2", "\"s\"", // literals
    "=", "==", "+", "-", "*", "<", ">", // operators
    "(", ")", "[", "]", ",", ":", ".", // punctuation
    "<NL>", "<I>", "<D>", // structural
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Keyword,
    Identifier,
    Literal,
    Operator,
    Punctuation,
    Structural,
}

/// A vocabulary token. The wrapped index is the token's position in the
/// canonical vocabulary order, so every `Token` value is in-vocabulary.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(u8);

impl Token {
    pub const DEF: Token = Token(0);
    pub const IF: Token = Token(1);
    pub const ELSE: Token = Token(2);
    pub const FOR: Token = Token(3);
    pub const WHILE: Token = Token(4);
    pub const RETURN: Token = Token(5);
    pub const PASS: Token = Token(6);
    pub const RAISE: Token = Token(7);
    pub const IN: Token = Token(8);
    pub const ASSIGN: Token = Token(25);
    pub const LPAREN: Token = Token(32);
    pub const RPAREN: Token = Token(33);
    pub const LBRACK: Token = Token(34);
    pub const RBRACK: Token = Token(35);
    pub const COMMA: Token = Token(36);
    pub const COLON: Token = Token(37);
    pub const DOT: Token = Token(38);
    pub const NL: Token = Token(39);
    pub const INDENT: Token = Token(40);
    pub const DEDENT: Token = Token(41);

    pub fn from_index(index: usize) -> Option<Token> {
        (index < VOCAB_SIZE).then_some(Token(index as u8))
    }

    pub fn from_lexeme(lexeme: &str) -> Option<Token> {
        LEXEMES.iter().position(|l| *l == lexeme).map(|i| Token(i as u8))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn lexeme(self) -> &'static str {
        LEXEMES[self.index()]
    }

    pub fn kind(self) -> TokenKind {
        match self.0 {
            0..=8 => TokenKind::Keyword,
            9..=20 => TokenKind::Identifier,
            21..=24 => TokenKind::Literal,
            25..=31 => TokenKind::Operator,
            32..=38 => TokenKind::Punctuation,
            _ => TokenKind::Structural,
        }
    }

    pub fn is_identifier(self) -> bool {
        self.kind() == TokenKind::Identifier
    }

    pub fn is_literal(self) -> bool {
        self.kind() == TokenKind::Literal
    }

    pub fn is_structural(self) -> bool {
        self.kind() == TokenKind::Structural
    }

    /// Binary operators usable between atoms (everything but `=`).
    pub fn is_binary_op(self) -> bool {
        self.kind() == TokenKind::Operator && self != Token::ASSIGN
    }

    pub fn is_opener(self) -> bool {
        self == Token::LPAREN || self == Token::LBRACK
    }

    pub fn is_closer(self) -> bool {
        self == Token::RPAREN || self == Token::RBRACK
    }

    pub fn is_header_keyword(self) -> bool {
        matches!(self, Token::DEF | Token::IF | Token::ELSE | Token::FOR | Token::WHILE)
    }

    /// Rank of this token's lexeme in byte-wise string order; comparing rank
    /// sequences is equivalent to comparing lexeme sequences.
    pub fn lexeme_rank(self) -> u8 {
        LEXEME_RANK[self.index()]
    }
}

const LEXEME_RANK: [u8; VOCAB_SIZE] = {
    let mut ranks = [0u8; VOCAB_SIZE];
    let mut i = 0;
    while i < VOCAB_SIZE {
        let mut r = 0;
        let mut j = 0;
        while j < VOCAB_SIZE {
            if str_lt(LEXEMES[j], LEXEMES[i]) {
                r += 1;
            }
            j += 1;
        }
        ranks[i] = r;
        i += 1;
    }
    ranks
};

const fn str_lt(a: &str, b: &str) -> bool {
    let (a, b) = (a.as_bytes(), b.as_bytes());
    let mut i = 0;
    while i < a.len() && i < b.len() {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
        i += 1;
    }
    a.len() < b.len()
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Token({})", self.lexeme())
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.lexeme())
    }
}

/// The full vocabulary in canonical order: keywords, identifiers, literals,
/// operators, punctuation, structural.
pub fn vocabulary() -> Vec<Token> {
    (0..VOCAB_SIZE).map(|i| Token(i as u8)).collect()
}

/// A program: an ordered sequence of vocabulary tokens.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSeq(Vec<Token>);

impl TokenSeq {
    pub fn new(tokens: Vec<Token>) -> Result<TokenSeq> {
        if tokens.len() > MAX_LEN {
            return Err(Error::TooLong(tokens.len()));
        }
        Ok(TokenSeq(tokens))
    }

    /// Builds a sequence without the length check. Callers guarantee the
    /// cap (edits on capped programs stay well under it).
    pub(crate) fn from_vec(tokens: Vec<Token>) -> TokenSeq {
        debug_assert!(tokens.len() <= MAX_LEN + 8);
        TokenSeq(tokens)
    }

    pub fn empty() -> TokenSeq {
        TokenSeq(Vec::new())
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.0
    }

    /// Orders by lexeme sequence, the order used for decoder tie-breaks.
    pub fn cmp_lexical(&self, other: &TokenSeq) -> std::cmp::Ordering {
        cmp_lexical(&self.0, &other.0)
    }

    /// Space-separated lexemes.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.0.len() * 3);
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(t.lexeme());
        }
        out
    }
}

pub(crate) fn cmp_lexical(a: &[Token], b: &[Token]) -> std::cmp::Ordering {
    a.iter()
        .map(|t| t.lexeme_rank())
        .cmp(b.iter().map(|t| t.lexeme_rank()))
}

impl FromStr for TokenSeq {
    type Err = Error;

    /// Parses the space-separated text form. Any lexeme outside the
    /// vocabulary is rejected.
    fn from_str(s: &str) -> Result<TokenSeq> {
        let tokens = s
            .split_whitespace()
            .map(|lex| Token::from_lexeme(lex).ok_or_else(|| Error::OutOfVocabulary(lex.to_string())))
            .collect::<Result<Vec<_>>>()?;
        TokenSeq::new(tokens)
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TokenSeq[{}]", self.to_text())
    }
}

impl Serialize for TokenSeq {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for TokenSeq {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for Token {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.lexeme())
    }
}

impl<'de> Deserialize<'de> for Token {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Token::from_lexeme(&text).ok_or_else(|| serde::de::Error::custom(format!("out-of-vocabulary token {text:?}")))
    }
}

/// Shorthand for tests and examples: parses text that is known to be valid.
#[cfg(test)]
pub(crate) fn seq(text: &str) -> TokenSeq {
    text.parse().expect("valid token text")
}
