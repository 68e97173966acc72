//! The parser critic.
//!
//! A program is good when three rule families hold:
//!
//! * brackets are matched and properly nested, and a round bracket never
//!   spans a `<NL>` (square brackets may),
//! * `<I>`/`<D>` appear only at logical line starts, every block header is
//!   followed by exactly one `<I>`, and the indent depth never goes negative
//!   (dedents still owed at end of input are implicit),
//! * every logical line parses under the statement grammar.
//!
//! Bracket faults take priority over the other two; among indentation and
//! grammar faults the first one in token order is reported.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::token::{Token, TokenSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MajorCategory {
    UnbalancedParentheses,
    IndentationError,
    InvalidSyntax,
}

impl MajorCategory {
    pub const ALL: [MajorCategory; 3] = [
        MajorCategory::UnbalancedParentheses,
        MajorCategory::IndentationError,
        MajorCategory::InvalidSyntax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MajorCategory::UnbalancedParentheses => "UnbalancedParentheses",
            MajorCategory::IndentationError => "IndentationError",
            MajorCategory::InvalidSyntax => "InvalidSyntax",
        }
    }
}

impl fmt::Display for MajorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// First-error category. Each variant is a minor category; its major
/// category is implied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCategory {
    UnclosedLeftNested,
    UnclosedLeftFlat,
    RedundantRight,
    ExpectedIndent,
    UnexpectedIndent,
    MissingColon,
    MissingCommaSingleLine,
    MissingCommaMultiLine,
    RedundantComma,
    MissingParenPair,
    RedundantParenPair,
    Other,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 12] = [
        ErrorCategory::UnclosedLeftNested,
        ErrorCategory::UnclosedLeftFlat,
        ErrorCategory::RedundantRight,
        ErrorCategory::ExpectedIndent,
        ErrorCategory::UnexpectedIndent,
        ErrorCategory::MissingColon,
        ErrorCategory::MissingCommaSingleLine,
        ErrorCategory::MissingCommaMultiLine,
        ErrorCategory::RedundantComma,
        ErrorCategory::MissingParenPair,
        ErrorCategory::RedundantParenPair,
        ErrorCategory::Other,
    ];

    pub fn major(self) -> MajorCategory {
        use ErrorCategory::*;
        match self {
            UnclosedLeftNested | UnclosedLeftFlat | RedundantRight => MajorCategory::UnbalancedParentheses,
            ExpectedIndent | UnexpectedIndent => MajorCategory::IndentationError,
            _ => MajorCategory::InvalidSyntax,
        }
    }

    pub fn minor(self) -> &'static str {
        use ErrorCategory::*;
        match self {
            UnclosedLeftNested => "unclosed-left-nested",
            UnclosedLeftFlat => "unclosed-left-flat",
            RedundantRight => "redundant-right",
            ExpectedIndent => "expected-indent",
            UnexpectedIndent => "unexpected-indent",
            MissingColon => "missing-colon",
            MissingCommaSingleLine => "missing-comma-single-line",
            MissingCommaMultiLine => "missing-comma-multi-line",
            RedundantComma => "redundant-comma",
            MissingParenPair => "missing-paren-pair",
            RedundantParenPair => "redundant-paren-pair",
            Other => "other",
        }
    }

    pub fn from_minor(name: &str) -> Option<ErrorCategory> {
        ErrorCategory::ALL.into_iter().find(|c| c.minor() == name)
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.major(), self.minor())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bad = 0,
    Good = 1,
}

/// Critic verdict. Bad verdicts always carry a category and a position
/// inside the judged sequence; good verdicts carry neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Critique {
    fault: Option<(ErrorCategory, usize)>,
}

impl Critique {
    pub const GOOD: Critique = Critique { fault: None };

    fn bad(category: ErrorCategory, position: usize) -> Critique {
        Critique {
            fault: Some((category, position)),
        }
    }

    pub fn verdict(&self) -> Verdict {
        if self.fault.is_some() {
            Verdict::Bad
        } else {
            Verdict::Good
        }
    }

    pub fn is_good(&self) -> bool {
        self.fault.is_none()
    }

    pub fn is_bad(&self) -> bool {
        self.fault.is_some()
    }

    pub fn category(&self) -> Option<ErrorCategory> {
        self.fault.map(|(c, _)| c)
    }

    pub fn position(&self) -> Option<usize> {
        self.fault.map(|(_, p)| p)
    }
}

/// Judges a program. Pure: equal inputs give equal critiques.
pub fn critic(seq: &TokenSeq) -> Critique {
    let toks = seq.tokens();
    match Brackets::scan(toks) {
        Ok(brackets) => LineParser::new(toks, &brackets).run(),
        Err(fault) => fault.into(),
    }
}

/// Convenience for callers that only need the verdict.
pub fn is_good(seq: &TokenSeq) -> bool {
    critic(seq).is_good()
}

#[derive(Debug, Clone, Copy)]
struct Fault {
    category: ErrorCategory,
    position: usize,
}

impl Fault {
    fn new(category: ErrorCategory, position: usize) -> Fault {
        Fault { category, position }
    }
}

impl From<Fault> for Critique {
    fn from(f: Fault) -> Critique {
        Critique::bad(f.category, f.position)
    }
}

struct Brackets {
    /// For each opener, whether its region contains a `<NL>`.
    spans_nl: Vec<bool>,
}

struct Open {
    index: usize,
    saw_inner: bool,
}

impl Brackets {
    fn scan(toks: &[Token]) -> Result<Brackets, Fault> {
        let mut stack: Vec<Open> = Vec::new();
        let mut spans_nl = vec![false; toks.len()];

        // An unclosed opener counts as nested when another bracket is open
        // around it or a bracket group was opened inside it.
        fn unclosed(stack: &[Open], k: usize) -> Fault {
            let nested = stack.len() >= 2 || stack[k].saw_inner;
            let category = if nested {
                ErrorCategory::UnclosedLeftNested
            } else {
                ErrorCategory::UnclosedLeftFlat
            };
            Fault::new(category, stack[k].index)
        }

        for (i, &t) in toks.iter().enumerate() {
            if t.is_opener() {
                for open in stack.iter_mut() {
                    open.saw_inner = true;
                }
                stack.push(Open {
                    index: i,
                    saw_inner: false,
                });
            } else if t.is_closer() {
                let Some(top) = stack.last() else {
                    return Err(Fault::new(ErrorCategory::RedundantRight, i));
                };
                let expected = if toks[top.index] == Token::LPAREN {
                    Token::RPAREN
                } else {
                    Token::RBRACK
                };
                if t != expected {
                    return Err(unclosed(&stack, stack.len() - 1));
                }
                stack.pop();
            } else if t == Token::NL {
                if let Some(k) = stack.iter().rposition(|o| toks[o.index] == Token::LPAREN) {
                    return Err(unclosed(&stack, k));
                }
                for open in &stack {
                    spans_nl[open.index] = true;
                }
            }
        }
        if !stack.is_empty() {
            return Err(unclosed(&stack, stack.len() - 1));
        }
        Ok(Brackets { spans_nl })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Atom {
    BareId,
    Literal,
    Call,
    List,
    Paren,
    Attr,
}

#[derive(Debug, Clone, Copy)]
struct Expr {
    single: bool,
    last: Atom,
}

impl Expr {
    fn is_target(self) -> bool {
        self.single && matches!(self.last, Atom::BareId | Atom::Attr)
    }
}

struct LineParser<'a> {
    toks: &'a [Token],
    brackets: &'a Brackets,
    pos: usize,
    line_end: usize,
}

impl<'a> LineParser<'a> {
    fn new(toks: &'a [Token], brackets: &'a Brackets) -> Self {
        LineParser {
            toks,
            brackets,
            pos: 0,
            line_end: 0,
        }
    }

    fn run(mut self) -> Critique {
        match self.lines() {
            Ok(()) => Critique::GOOD,
            Err(fault) => fault.into(),
        }
    }

    fn lines(&mut self) -> Result<(), Fault> {
        use ErrorCategory::{ExpectedIndent, Other, UnexpectedIndent};
        let n = self.toks.len();
        let mut depth: i64 = 0;
        let mut expect_block = false;
        loop {
            let mut opened = false;
            while self.pos < n && matches!(self.toks[self.pos], Token::INDENT | Token::DEDENT) {
                if self.toks[self.pos] == Token::INDENT {
                    if expect_block && !opened {
                        opened = true;
                        depth += 1;
                    } else {
                        return Err(Fault::new(UnexpectedIndent, self.pos));
                    }
                } else if opened {
                    return Err(Fault::new(UnexpectedIndent, self.pos));
                } else if expect_block {
                    return Err(Fault::new(ExpectedIndent, self.pos));
                } else {
                    depth -= 1;
                    if depth < 0 {
                        return Err(Fault::new(UnexpectedIndent, self.pos));
                    }
                }
                self.pos += 1;
            }
            if self.pos == n {
                if expect_block {
                    return Err(Fault::new(ExpectedIndent, n - 1));
                }
                return Ok(());
            }
            if expect_block && !opened {
                return Err(Fault::new(ExpectedIndent, self.pos));
            }
            if self.toks[self.pos] == Token::NL {
                // blank logical line
                return Err(Fault::new(Other, self.pos));
            }
            self.line_end = self.find_line_end();
            expect_block = self.statement()?;
            self.pos = self.line_end;
            if self.pos < n {
                self.pos += 1;
            }
        }
    }

    /// Index of the `<NL>` ending the logical line starting at `pos`, or the
    /// sequence length. Brackets are balanced here, so depth tracking is safe.
    fn find_line_end(&self) -> usize {
        let mut depth = 0usize;
        for (i, &t) in self.toks.iter().enumerate().skip(self.pos) {
            if t.is_opener() {
                depth += 1;
            } else if t.is_closer() {
                depth -= 1;
            } else if t == Token::NL && depth == 0 {
                return i;
            }
        }
        self.toks.len()
    }

    /// Next meaningful token of the current line. `<NL>` inside square
    /// brackets is a continuation and is skipped.
    fn peek(&mut self) -> Option<Token> {
        while self.pos < self.line_end && self.toks[self.pos] == Token::NL {
            self.pos += 1;
        }
        (self.pos < self.line_end).then(|| self.toks[self.pos])
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn end_position(&self) -> usize {
        self.line_end.min(self.toks.len() - 1)
    }

    /// Parses one logical line; returns whether it is a block header.
    fn statement(&mut self) -> Result<bool, Fault> {
        let Some(first) = self.peek() else {
            unreachable!("statement() is only called on non-empty lines")
        };
        let mut header = false;
        match first {
            Token::DEF => {
                header = true;
                self.bump();
                self.expect_identifier(None)?;
                match self.peek() {
                    Some(Token::LPAREN) => {
                        let open = self.pos;
                        self.bump();
                        self.args(open, true)?;
                    }
                    _ => return Err(self.unexpected_after(None, Atom::Call)),
                }
                self.expect_colon(Atom::Call)?;
            }
            Token::IF | Token::WHILE => {
                header = true;
                self.bump();
                let e = self.expr(None)?;
                self.expect_colon(e.last)?;
            }
            Token::ELSE => {
                header = true;
                self.bump();
                self.expect_colon(Atom::Literal)?;
            }
            Token::FOR => {
                header = true;
                self.bump();
                self.expect_identifier(None)?;
                match self.peek() {
                    Some(Token::IN) => self.bump(),
                    _ => return Err(self.unexpected_after(None, Atom::BareId)),
                }
                let e = self.expr(None)?;
                self.expect_colon(e.last)?;
            }
            Token::RETURN => {
                self.bump();
                if self.peek().is_some() {
                    let e = self.expr(None)?;
                    self.expect_line_end(e.last)?;
                }
            }
            Token::PASS => {
                self.bump();
                self.expect_line_end(Atom::Literal)?;
            }
            Token::RAISE => {
                self.bump();
                let e = self.expr(None)?;
                self.expect_line_end(e.last)?;
            }
            _ => {
                let e = self.expr(None)?;
                if self.peek() == Some(Token::ASSIGN) {
                    if !e.is_target() {
                        return Err(Fault::new(ErrorCategory::Other, self.pos));
                    }
                    self.bump();
                    let rhs = self.expr(None)?;
                    self.expect_line_end(rhs.last)?;
                } else {
                    self.expect_line_end(e.last)?;
                }
            }
        }
        Ok(header)
    }

    fn expect_line_end(&mut self, last: Atom) -> Result<(), Fault> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.unexpected_after(None, last)),
        }
    }

    fn expect_colon(&mut self, last: Atom) -> Result<(), Fault> {
        match self.peek() {
            None => Err(Fault::new(ErrorCategory::MissingColon, self.end_position())),
            Some(Token::COLON) => {
                self.bump();
                self.expect_line_end(Atom::Literal)
            }
            Some(_) => Err(self.unexpected_after(None, last)),
        }
    }

    fn expect_identifier(&mut self, enclosing: Option<usize>) -> Result<(), Fault> {
        match self.peek() {
            Some(t) if t.is_identifier() => {
                self.bump();
                Ok(())
            }
            _ => Err(self.expected_atom(enclosing)),
        }
    }

    fn expr(&mut self, enclosing: Option<usize>) -> Result<Expr, Fault> {
        let mut last = self.atom(enclosing)?;
        let mut single = true;
        while matches!(self.peek(), Some(t) if t.is_binary_op()) {
            self.bump();
            last = self.atom(enclosing)?;
            single = false;
        }
        Ok(Expr { single, last })
    }

    fn atom(&mut self, enclosing: Option<usize>) -> Result<Atom, Fault> {
        let Some(t) = self.peek() else {
            return Err(self.expected_atom(enclosing));
        };
        let mut atom = if t.is_identifier() {
            self.bump();
            if self.peek() == Some(Token::LPAREN) {
                let open = self.pos;
                self.bump();
                self.args(open, false)?;
                Atom::Call
            } else {
                Atom::BareId
            }
        } else if t.is_literal() {
            self.bump();
            Atom::Literal
        } else if t == Token::LBRACK {
            let open = self.pos;
            self.bump();
            self.args(open, false)?;
            Atom::List
        } else if t == Token::LPAREN {
            let open = self.pos;
            self.bump();
            let inner = self.expr(Some(open))?;
            if self.peek() != Some(Token::RPAREN) {
                return Err(self.unexpected_after(Some(open), inner.last));
            }
            self.bump();
            if inner.single && inner.last == Atom::Paren {
                return Err(Fault::new(ErrorCategory::RedundantParenPair, open));
            }
            Atom::Paren
        } else {
            return Err(self.expected_atom(enclosing));
        };
        while self.peek() == Some(Token::DOT) {
            self.bump();
            self.expect_identifier(enclosing)?;
            atom = Atom::Attr;
        }
        Ok(atom)
    }

    /// Comma-separated list after the opener at `open`, through its closer.
    fn args(&mut self, open: usize, params: bool) -> Result<(), Fault> {
        let closer = if self.toks[open] == Token::LPAREN {
            Token::RPAREN
        } else {
            Token::RBRACK
        };
        if self.peek() == Some(closer) {
            self.bump();
            return Ok(());
        }
        loop {
            let last = if params {
                self.expect_identifier(Some(open))?;
                Atom::BareId
            } else {
                self.expr(Some(open))?.last
            };
            match self.peek() {
                Some(Token::COMMA) => {
                    let comma = self.pos;
                    self.bump();
                    if self.peek() == Some(closer) {
                        return Err(Fault::new(ErrorCategory::RedundantComma, comma));
                    }
                }
                Some(t) if t == closer => {
                    self.bump();
                    return Ok(());
                }
                _ => return Err(self.unexpected_after(Some(open), last)),
            }
        }
    }

    /// Fault for a token where an atom (or identifier) must start.
    fn expected_atom(&self, enclosing: Option<usize>) -> Fault {
        if self.pos >= self.line_end {
            return Fault::new(ErrorCategory::Other, self.end_position());
        }
        let t = self.toks[self.pos];
        let category = if matches!(t, Token::INDENT | Token::DEDENT) {
            ErrorCategory::UnexpectedIndent
        } else if t == Token::COMMA && enclosing.is_some() {
            ErrorCategory::RedundantComma
        } else {
            ErrorCategory::Other
        };
        Fault::new(category, self.pos)
    }

    /// Fault for an unexpected token following a complete atom.
    fn unexpected_after(&self, enclosing: Option<usize>, last: Atom) -> Fault {
        if self.pos >= self.line_end {
            return Fault::new(ErrorCategory::Other, self.end_position());
        }
        let t = self.toks[self.pos];
        let starts_atom = t.is_identifier() || t.is_literal() || t.is_opener();
        let category = if matches!(t, Token::INDENT | Token::DEDENT) {
            ErrorCategory::UnexpectedIndent
        } else if let Some(open) = enclosing {
            if !starts_atom {
                ErrorCategory::Other
            } else if self.brackets.spans_nl[open] {
                ErrorCategory::MissingCommaMultiLine
            } else {
                ErrorCategory::MissingCommaSingleLine
            }
        } else if last == Atom::BareId && (t.is_identifier() || t.is_literal()) {
            ErrorCategory::MissingParenPair
        } else {
            ErrorCategory::Other
        };
        Fault::new(category, self.pos)
    }
}
