//! A second, deliberately naive critic: bracket scan, logical-line split,
//! then a memoized range recognizer for the line grammar.
#![allow(dead_code)]

use std::collections::HashMap;

use bifi_core::{critic, ErrorCategory, Token, TokenSeq};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Kind {
    Id,
    Lit,
    Call,
    List,
    Paren,
    Attr,
}

fn is_id(t: Token) -> bool {
    (9..=20).contains(&t.index())
}

fn is_lit(t: Token) -> bool {
    (21..=24).contains(&t.index())
}

fn is_binop(t: Token) -> bool {
    (26..=31).contains(&t.index())
}

struct Line<'a> {
    t: &'a [Token],
    atoms: HashMap<(usize, usize), Vec<Kind>>,
    exprs: HashMap<(usize, usize), Vec<(bool, Kind)>>,
    lists: HashMap<(usize, usize, bool), bool>,
}

impl<'a> Line<'a> {
    fn new(t: &'a [Token]) -> Self {
        Line {
            t,
            atoms: HashMap::new(),
            exprs: HashMap::new(),
            lists: HashMap::new(),
        }
    }

    fn atom(&mut self, i: usize, j: usize) -> Vec<Kind> {
        if let Some(v) = self.atoms.get(&(i, j)) {
            return v.clone();
        }
        let t = self.t;
        let mut out = Vec::new();
        if j == i + 1 {
            if is_id(t[i]) {
                out.push(Kind::Id);
            }
            if is_lit(t[i]) {
                out.push(Kind::Lit);
            }
        }
        if j >= i + 3 && is_id(t[i]) && t[i + 1] == Token::LPAREN && t[j - 1] == Token::RPAREN && self.list(i + 2, j - 1, false) {
            out.push(Kind::Call);
        }
        if j >= i + 2 && t[i] == Token::LBRACK && t[j - 1] == Token::RBRACK && self.list(i + 1, j - 1, false) {
            out.push(Kind::List);
        }
        if j >= i + 3 && t[i] == Token::LPAREN && t[j - 1] == Token::RPAREN {
            let inner = self.expr(i + 1, j - 1);
            if inner.iter().any(|&(single, k)| !(single && k == Kind::Paren)) {
                out.push(Kind::Paren);
            }
        }
        if j >= i + 3 && t[j - 2] == Token::DOT && is_id(t[j - 1]) && !self.atom(i, j - 2).is_empty() {
            out.push(Kind::Attr);
        }
        self.atoms.insert((i, j), out.clone());
        out
    }

    fn expr(&mut self, i: usize, j: usize) -> Vec<(bool, Kind)> {
        if let Some(v) = self.exprs.get(&(i, j)) {
            return v.clone();
        }
        let mut out: Vec<(bool, Kind)> = self.atom(i, j).into_iter().map(|k| (true, k)).collect();
        for m in i + 1..j.saturating_sub(1) {
            if is_binop(self.t[m]) && !self.expr(i, m).is_empty() {
                for k in self.atom(m + 1, j) {
                    out.push((false, k));
                }
            }
        }
        self.exprs.insert((i, j), out.clone());
        out
    }

    /// Possibly empty comma list of expressions (or identifiers).
    fn list(&mut self, i: usize, j: usize, params: bool) -> bool {
        i == j || self.list1(i, j, params)
    }

    fn item(&mut self, i: usize, j: usize, params: bool) -> bool {
        if params {
            j == i + 1 && is_id(self.t[i])
        } else {
            !self.expr(i, j).is_empty()
        }
    }

    fn list1(&mut self, i: usize, j: usize, params: bool) -> bool {
        if let Some(&v) = self.lists.get(&(i, j, params)) {
            return v;
        }
        let mut ok = self.item(i, j, params);
        for m in i + 1..j {
            if ok {
                break;
            }
            ok = self.t[m] == Token::COMMA && self.item(i, m, params) && self.list1(m + 1, j, params);
        }
        self.lists.insert((i, j, params), ok);
        ok
    }

    /// `Some(is_header)` if the whole line is one statement.
    fn statement(&mut self) -> Option<bool> {
        let t = self.t;
        let n = t.len();
        let colon_end = n >= 2 && t[n - 1] == Token::COLON;
        match t[0] {
            Token::DEF => {
                let ok = colon_end
                    && n >= 5
                    && is_id(t[1])
                    && t[2] == Token::LPAREN
                    && t[n - 2] == Token::RPAREN
                    && self.list(3, n - 2, true);
                ok.then_some(true)
            }
            Token::IF | Token::WHILE => (colon_end && !self.expr(1, n - 1).is_empty()).then_some(true),
            Token::ELSE => (n == 2 && colon_end).then_some(true),
            Token::FOR => {
                let ok = colon_end && n >= 5 && is_id(t[1]) && t[2] == Token::IN && !self.expr(3, n - 1).is_empty();
                ok.then_some(true)
            }
            Token::RETURN => (n == 1 || !self.expr(1, n).is_empty()).then_some(false),
            Token::PASS => (n == 1).then_some(false),
            Token::RAISE => (!self.expr(1, n).is_empty()).then_some(false),
            _ => {
                if !self.expr(0, n).is_empty() {
                    return Some(false);
                }
                for m in 1..n {
                    if t[m] == Token::ASSIGN
                        && self.expr(0, m).iter().any(|&(s, k)| s && matches!(k, Kind::Id | Kind::Attr))
                        && !self.expr(m + 1, n).is_empty()
                    {
                        return Some(false);
                    }
                }
                None
            }
        }
    }
}

fn brackets_ok(t: &[Token]) -> bool {
    let mut stack = Vec::new();
    for &x in t {
        match x {
            Token::LPAREN | Token::LBRACK => stack.push(x),
            Token::RPAREN => {
                if stack.pop() != Some(Token::LPAREN) {
                    return false;
                }
            }
            Token::RBRACK => {
                if stack.pop() != Some(Token::LBRACK) {
                    return false;
                }
            }
            Token::NL if stack.contains(&Token::LPAREN) => return false,
            _ => {}
        }
    }
    stack.is_empty()
}

/// Splits into (structural prefix, content) logical lines. Content keeps
/// no `<NL>`; the final element may have empty content (trailing prefix).
fn logical_lines(t: &[Token]) -> Vec<(Vec<Token>, Vec<Token>)> {
    let mut lines = Vec::new();
    let mut prefix = Vec::new();
    let mut content: Vec<Token> = Vec::new();
    let mut depth = 0i32;
    let mut terminated = true;
    for &x in t {
        if content.is_empty() && matches!(x, Token::INDENT | Token::DEDENT) {
            prefix.push(x);
            continue;
        }
        match x {
            Token::LPAREN | Token::LBRACK => depth += 1,
            Token::RPAREN | Token::RBRACK => depth -= 1,
            _ => {}
        }
        if x == Token::NL {
            if depth == 0 {
                lines.push((std::mem::take(&mut prefix), std::mem::take(&mut content)));
                terminated = true;
            }
            continue;
        }
        content.push(x);
        terminated = false;
    }
    if !terminated || !prefix.is_empty() || !content.is_empty() {
        lines.push((prefix, content));
    }
    lines
}

pub fn oracle_good(seq: &TokenSeq) -> bool {
    let t = seq.tokens();
    if !brackets_ok(t) {
        return false;
    }
    let lines = logical_lines(t);
    let mut depth = 0i64;
    let mut expect_block = false;
    for (idx, (prefix, content)) in lines.iter().enumerate() {
        let last = idx + 1 == lines.len();
        if expect_block {
            if prefix.as_slice() != [Token::INDENT] {
                return false;
            }
            depth += 1;
        } else {
            for &p in prefix {
                if p == Token::INDENT {
                    return false;
                }
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
        }
        if content.is_empty() {
            // only a trailing prefix at end of input may be empty, and a
            // block header must still get its body
            if !last || expect_block || t.last() == Some(&Token::NL) {
                return false;
            }
            continue;
        }
        if content.iter().any(|x| matches!(*x, Token::INDENT | Token::DEDENT)) {
            return false;
        }
        match Line::new(content).statement() {
            Some(h) => expect_block = h,
            None => return false,
        }
    }
    !expect_block
}

pub fn toks(text: &str) -> Vec<Token> {
    text.split_whitespace().map(|s| Token::from_lexeme(s).unwrap()).collect()
}

pub fn all_sequences(alpha: &[Token], max_len: usize, f: &mut impl FnMut(&TokenSeq)) {
    fn rec(alpha: &[Token], cur: &mut Vec<Token>, left: usize, f: &mut impl FnMut(&TokenSeq)) {
        f(&TokenSeq::new(cur.clone()).unwrap());
        if left == 0 {
            return;
        }
        for &a in alpha {
            cur.push(a);
            rec(alpha, cur, left - 1, f);
            cur.pop();
        }
    }
    rec(alpha, &mut Vec::new(), max_len, f);
}

pub const ALPHABETS: &[&str] = &[
    "x ( )",
    "x [ ]",
    "( ) ,",
    "x ( ,",
    "x [ ,",
    "x , ]",
    "x + (",
    "x . (",
    "x . y",
    "x = +",
    "x = 1",
    "x <NL> <I>",
    "x <NL> <D>",
    "<NL> <I> <D>",
    "x <I> <D>",
    "[ <NL> ]",
    "x [ <NL>",
    "( <NL> )",
    "if x :",
    "while : <NL>",
    "else : <I>",
    ": <NL> <I>",
    "def f (",
    "f ( )",
    "for in x",
    "return x +",
    "pass raise x",
    "x 1 (",
    "= ( )",
    "x == )",
];


const GOLDEN: &str = include_str!("../data/critic_golden.tsv");

/// `(label, sequence)` rows of the hand-labelled file; the label is a minor
/// category name or `good`.
pub fn golden() -> Vec<(&'static str, TokenSeq)> {
    GOLDEN
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (label, text) = l.split_once('\t').expect("label<TAB>tokens");
            (label, text.parse().unwrap_or_else(|e| panic!("{text}: {e}")))
        })
        .collect()
}

pub fn critic_label(s: &TokenSeq) -> &'static str {
    critic(s).category().map_or("good", ErrorCategory::minor)
}

/// Sequences of length up to 6 over every curated alphabet, with the
/// number the two critics disagree on and the number both accept.
pub fn exhaustive_disagreements() -> (usize, usize, Vec<String>) {
    let mut n = 0;
    let mut good = 0;
    let mut wrong = Vec::new();
    for alpha in ALPHABETS {
        all_sequences(&toks(alpha), 6, &mut |s| {
            n += 1;
            let c = critic(s).is_good();
            good += c as usize;
            if c != oracle_good(s) {
                wrong.push(s.to_string());
            }
        });
    }
    (n, good, wrong)
}
