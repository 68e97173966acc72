//! Good-program generation, the hidden human-error channel, and corpus
//! assembly.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noiser::{make_synthetic_pairs, NoiseSpec};
use crate::seed::{self, stream};
use crate::toylang::{critic, Token, TokenSeq};

pub const MIN_GOOD_LEN: usize = 10;
pub const MAX_GOOD_LEN: usize = 128;
const MAX_ATTEMPTS: usize = 1000;

// Grammar sampling weights.
const HEADER_PROB: f64 = 0.4;
const NESTED_HEADER_PROB: f64 = 0.15;
const ELSE_PROB: f64 = 0.3;
const NESTING_PROB: f64 = 0.35;
const TOP_COMPOSITE_PROB: f64 = 0.5;
const MAX_EXPR_DEPTH: usize = 3;
const LIST_BREAK_PROB: f64 = 0.35;

const IDENTS: [&str; 12] = ["a", "b", "c", "d", "e", "f", "g", "x", "y", "z", "foo", "bar"];
const LITERALS: [&str; 4] = ["0", "1", "2", "\"s\""];
const BINOPS: [&str; 6] = ["==", "+", "-", "*", "<", ">"];

fn tok(lex: &str) -> Token {
    Token::from_lexeme(lex).expect("grammar lexeme in vocabulary")
}

struct Line {
    depth: usize,
    tokens: Vec<Token>,
}

struct Sampler<'r> {
    rng: &'r mut ChaCha8Rng,
}

impl Sampler<'_> {
    fn coin(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn ident(&mut self) -> Token {
        tok(IDENTS[self.rng.gen_range(0..IDENTS.len())])
    }

    fn program(&mut self) -> Vec<Token> {
        let n_stmts = self.rng.gen_range(2..=7);
        let mut lines = Vec::new();
        for _ in 0..n_stmts {
            self.statement(0, &mut lines);
        }
        render(&lines)
    }

    fn statement(&mut self, depth: usize, lines: &mut Vec<Line>) {
        let header_prob = if depth == 0 { HEADER_PROB } else { NESTED_HEADER_PROB };
        if depth < 2 && self.coin(header_prob) {
            self.block(depth, lines);
        } else {
            let tokens = self.simple();
            lines.push(Line { depth, tokens });
        }
    }

    fn block(&mut self, depth: usize, lines: &mut Vec<Line>) {
        let mut head = Vec::new();
        let roll: f64 = self.rng.gen();
        let is_if = if roll < 0.25 {
            head.extend([Token::DEF, self.ident(), Token::LPAREN]);
            let n_params = self.rng.gen_range(0..=3);
            for i in 0..n_params {
                if i > 0 {
                    head.push(Token::COMMA);
                }
                head.push(self.ident());
            }
            head.push(Token::RPAREN);
            false
        } else if roll < 0.55 {
            head.push(Token::IF);
            self.expr(0, false, &mut head);
            true
        } else if roll < 0.8 {
            head.extend([Token::FOR, self.ident(), Token::IN]);
            self.expr(0, false, &mut head);
            false
        } else {
            head.push(Token::WHILE);
            self.expr(0, false, &mut head);
            false
        };
        head.push(Token::COLON);
        lines.push(Line { depth, tokens: head });
        self.body(depth + 1, lines);
        if is_if && self.coin(ELSE_PROB) {
            lines.push(Line {
                depth,
                tokens: vec![Token::ELSE, Token::COLON],
            });
            self.body(depth + 1, lines);
        }
    }

    fn body(&mut self, depth: usize, lines: &mut Vec<Line>) {
        let n = self.rng.gen_range(1..=3);
        for _ in 0..n {
            self.statement(depth, lines);
        }
    }

    fn simple(&mut self) -> Vec<Token> {
        let mut out = Vec::new();
        let roll: f64 = self.rng.gen();
        if roll < 0.38 {
            out.extend([self.ident(), Token::ASSIGN]);
            self.expr(0, false, &mut out);
        } else if roll < 0.43 {
            out.extend([self.ident(), Token::DOT, self.ident(), Token::ASSIGN]);
            self.expr(0, false, &mut out);
        } else if roll < 0.73 {
            self.call(0, &mut out);
        } else if roll < 0.85 {
            out.push(Token::RETURN);
            self.expr(0, false, &mut out);
        } else if roll < 0.88 {
            out.push(Token::RETURN);
        } else if roll < 0.93 {
            out.push(Token::PASS);
        } else {
            out.push(Token::RAISE);
            self.call(1, &mut out);
        }
        out
    }

    /// `in_round` is set inside round brackets, where `<NL>` may not appear.
    fn expr(&mut self, depth: usize, in_round: bool, out: &mut Vec<Token>) {
        self.atom(depth, in_round, out);
        let roll: f64 = self.rng.gen();
        let n_ops = if roll < 0.65 {
            0
        } else if roll < 0.95 {
            1
        } else {
            2
        };
        for _ in 0..n_ops {
            out.push(tok(BINOPS[self.rng.gen_range(0..BINOPS.len())]));
            self.atom(depth, in_round, out);
        }
    }

    fn atom(&mut self, depth: usize, in_round: bool, out: &mut Vec<Token>) {
        let composite_prob = if depth == 0 { TOP_COMPOSITE_PROB } else { NESTING_PROB };
        if depth < MAX_EXPR_DEPTH && self.coin(composite_prob) {
            let roll: f64 = self.rng.gen();
            if roll < 0.55 {
                self.call(depth + 1, out);
            } else if roll < 0.8 {
                self.list(depth + 1, in_round, out);
            } else {
                // A parenthesized expression always holds an operator, so it
                // never directly wraps another parenthesized expression.
                out.push(Token::LPAREN);
                self.atom(depth + 1, true, out);
                out.push(tok(BINOPS[self.rng.gen_range(0..BINOPS.len())]));
                self.atom(depth + 1, true, out);
                out.push(Token::RPAREN);
            }
            return;
        }
        let roll: f64 = self.rng.gen();
        if roll < 0.62 {
            out.push(self.ident());
        } else if roll < 0.93 {
            out.push(tok(LITERALS[self.rng.gen_range(0..LITERALS.len())]));
        } else {
            out.extend([self.ident(), Token::DOT, self.ident()]);
        }
    }

    fn call(&mut self, depth: usize, out: &mut Vec<Token>) {
        out.extend([self.ident(), Token::LPAREN]);
        let n_args = if self.coin(0.15) { 0 } else { self.rng.gen_range(1..=3) };
        for i in 0..n_args {
            if i > 0 {
                out.push(Token::COMMA);
            }
            self.expr(depth, true, out);
        }
        out.push(Token::RPAREN);
    }

    fn list(&mut self, depth: usize, in_round: bool, out: &mut Vec<Token>) {
        out.push(Token::LBRACK);
        let n_items = if self.coin(0.1) { 0 } else { self.rng.gen_range(1..=3) };
        for i in 0..n_items {
            if i > 0 {
                out.push(Token::COMMA);
                if !in_round && self.coin(LIST_BREAK_PROB) {
                    out.push(Token::NL);
                }
            }
            self.expr(depth, in_round, out);
        }
        out.push(Token::RBRACK);
    }
}

fn render(lines: &[Line]) -> Vec<Token> {
    let mut out = Vec::new();
    let mut prev = 0usize;
    for line in lines {
        if line.depth > prev {
            out.push(Token::INDENT);
        } else {
            out.extend(std::iter::repeat_n(Token::DEDENT, prev - line.depth));
        }
        out.extend_from_slice(&line.tokens);
        out.push(Token::NL);
        prev = line.depth;
    }
    out.extend(std::iter::repeat_n(Token::DEDENT, prev));
    out
}

/// One good program drawn from its own generator.
fn sample_good(rng: &mut ChaCha8Rng) -> Result<TokenSeq> {
    for _ in 0..MAX_ATTEMPTS {
        let tokens = Sampler { rng: &mut *rng }.program();
        if !(MIN_GOOD_LEN..=MAX_GOOD_LEN).contains(&tokens.len()) {
            continue;
        }
        let s = TokenSeq::from_vec(tokens);
        if critic(&s).is_good() {
            return Ok(s);
        }
    }
    Err(Error::GeneratorExhausted(MAX_ATTEMPTS))
}

fn good_at(seed: u64, index: usize) -> Result<TokenSeq> {
    sample_good(&mut seed::rng(seed::derive(seed, stream::GOOD, index as u64)))
}

/// Samples `n` good programs of length 10..=128. Item `i` depends only on
/// `(seed, i)`.
pub fn generate_good(n: usize, seed: u64) -> Result<Vec<TokenSeq>> {
    if n == 0 {
        return Err(Error::InvalidArgument("generate_good needs n >= 1".into()));
    }
    (0..n).into_par_iter().map(|i| good_at(seed, i)).collect()
}

/// Corruption rules of the human-error channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HumanRule {
    /// Delete a `)` whose opener sits inside another open bracket.
    H1,
    /// Delete the `)` of a flat pair.
    H2,
    /// Insert a spurious `)`.
    H3,
    /// Delete the `<I>` after a header.
    H4,
    /// Indent a non-header line with a paired `<I>` ... `<D>`.
    H5,
    /// Delete the `:` of a header.
    H6,
    /// Delete a comma inside brackets.
    H7,
    /// Wrap a parenthesized expression in another `( )`.
    H8,
}

impl HumanRule {
    pub const ALL: [HumanRule; 8] = [
        HumanRule::H1,
        HumanRule::H2,
        HumanRule::H3,
        HumanRule::H4,
        HumanRule::H5,
        HumanRule::H6,
        HumanRule::H7,
        HumanRule::H8,
    ];

    /// Sampling weight; the eight weights sum to 1.
    pub fn weight(self) -> f64 {
        match self {
            HumanRule::H1 => 0.17,
            HumanRule::H2 => 0.017,
            HumanRule::H3 => 0.07,
            HumanRule::H4 => 0.28,
            HumanRule::H5 => 0.14,
            HumanRule::H6 => 0.10,
            HumanRule::H7 => 0.12,
            HumanRule::H8 => 0.103,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HumanRule::H1 => "H1",
            HumanRule::H2 => "H2",
            HumanRule::H3 => "H3",
            HumanRule::H4 => "H4",
            HumanRule::H5 => "H5",
            HumanRule::H6 => "H6",
            HumanRule::H7 => "H7",
            HumanRule::H8 => "H8",
        }
    }
}

impl fmt::Display for HumanRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a rule can fire: the edit to apply and its relative weight.
#[derive(Debug, Clone, Copy)]
enum Site {
    Delete(usize),
    Insert(usize, Token),
    /// Insert `first` before index `i` and `second` before index `j` (i < j),
    /// both indices in the original sequence.
    InsertPair(usize, Token, usize, Token),
}

fn apply_site(toks: &[Token], site: Site) -> Vec<Token> {
    let mut out = toks.to_vec();
    match site {
        Site::Delete(i) => {
            out.remove(i);
        }
        Site::Insert(i, t) => out.insert(i, t),
        Site::InsertPair(i, a, j, b) => {
            out.insert(j, b);
            out.insert(i, a);
        }
    }
    out
}

/// Bracket and line layout of a good program.
struct Layout {
    partner: Vec<usize>,
    /// Number of brackets open around each opener.
    enclosing: Vec<usize>,
    /// `(line start, index of the terminating <NL> or len)` per logical line.
    lines: Vec<(usize, usize)>,
}

impl Layout {
    fn of(toks: &[Token]) -> Layout {
        let n = toks.len();
        let mut partner = vec![usize::MAX; n];
        let mut enclosing = vec![0; n];
        let mut stack = Vec::new();
        let mut lines = Vec::new();
        let mut start = 0;
        for (i, &t) in toks.iter().enumerate() {
            if t.is_opener() {
                enclosing[i] = stack.len();
                stack.push(i);
            } else if t.is_closer() {
                if let Some(o) = stack.pop() {
                    partner[o] = i;
                    partner[i] = o;
                }
            } else if t == Token::NL && stack.is_empty() {
                lines.push((start, i));
                start = i + 1;
            }
        }
        if start < n {
            lines.push((start, n));
        }
        Layout {
            partner,
            enclosing,
            lines,
        }
    }

    fn line_end_after(&self, i: usize) -> usize {
        self.lines
            .iter()
            .find(|(s, e)| *s <= i && i < *e)
            .map(|(_, e)| *e)
            .unwrap_or(i)
    }
}

fn sites(rule: HumanRule, toks: &[Token], layout: &Layout) -> Vec<(Site, f64)> {
    let n = toks.len();
    let mut out = Vec::new();
    match rule {
        HumanRule::H1 => {
            for (j, &t) in toks.iter().enumerate() {
                if t == Token::RPAREN && layout.enclosing[layout.partner[j]] >= 1 {
                    out.push((Site::Delete(j), 1.0));
                }
            }
        }
        HumanRule::H2 => {
            for (j, &t) in toks.iter().enumerate() {
                if t != Token::RPAREN {
                    continue;
                }
                let o = layout.partner[j];
                let flat = layout.enclosing[o] == 0 && !toks[o + 1..j].iter().any(|t| t.is_opener() || t.is_closer());
                let end = layout.line_end_after(j);
                let trailing_clear = !toks[j + 1..end].iter().any(|t| t.is_opener() || t.is_closer());
                if flat && trailing_clear {
                    out.push((Site::Delete(j), 1.0));
                }
            }
        }
        HumanRule::H3 => {
            for k in 0..=n {
                let after_closer = k > 0 && toks[k - 1].is_closer();
                let before_nl = k < n && toks[k] == Token::NL;
                if after_closer || before_nl || k == n {
                    out.push((Site::Insert(k, Token::RPAREN), 1.0));
                }
            }
        }
        HumanRule::H4 => {
            for (i, &t) in toks.iter().enumerate() {
                if t == Token::INDENT {
                    out.push((Site::Delete(i), 1.0));
                }
            }
        }
        HumanRule::H5 => {
            for &(start, end) in &layout.lines {
                let mut c = start;
                while c < end && toks[c] == Token::DEDENT {
                    c += 1;
                }
                let indented = c < end && toks[c] == Token::INDENT;
                let has_content = c < end && !toks[c].is_structural();
                if !indented && has_content && !toks[c].is_header_keyword() && end < n {
                    out.push((Site::InsertPair(c, Token::INDENT, end + 1, Token::DEDENT), 1.0));
                }
            }
        }
        HumanRule::H6 => {
            for (i, &t) in toks.iter().enumerate() {
                if t == Token::COLON {
                    out.push((Site::Delete(i), 1.0));
                }
            }
        }
        HumanRule::H7 => {
            let mut stack: Vec<usize> = Vec::new();
            for (i, &t) in toks.iter().enumerate() {
                if t.is_opener() {
                    stack.push(i);
                } else if t.is_closer() {
                    stack.pop();
                } else if t == Token::COMMA {
                    if let Some(&o) = stack.last() {
                        let multi = toks[o..layout.partner[o]].contains(&Token::NL);
                        out.push((Site::Delete(i), if multi { 2.0 } else { 1.0 }));
                    }
                }
            }
        }
        HumanRule::H8 => {
            for (i, &t) in toks.iter().enumerate() {
                let call_paren = i > 0 && toks[i - 1].is_identifier();
                if t == Token::LPAREN && !call_paren {
                    out.push((Site::InsertPair(i, Token::LPAREN, layout.partner[i] + 1, Token::RPAREN), 1.0));
                }
            }
        }
    }
    out
}

fn pick_weighted<T: Copy>(rng: &mut ChaCha8Rng, items: &[(T, f64)]) -> usize {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut r = rng.gen::<f64>() * total;
    for (i, (_, w)) in items.iter().enumerate() {
        if r < *w {
            return i;
        }
        r -= w;
    }
    items.len() - 1
}

/// Tries the sites of one rule in weighted random order; the first one that
/// breaks the program wins.
fn try_rule(rule: HumanRule, toks: &[Token], layout: &Layout, rng: &mut ChaCha8Rng) -> Option<Vec<Token>> {
    let mut candidates = sites(rule, toks, layout);
    while !candidates.is_empty() {
        let k = pick_weighted(rng, &candidates);
        let (site, _) = candidates.swap_remove(k);
        let out = apply_site(toks, site);
        if critic(&TokenSeq::from_vec(out.clone())).is_bad() {
            return Some(out);
        }
    }
    None
}

/// Applies one human-channel rule to a good program and reports which rule
/// fired. Rules without an applicable site are dropped and the draw is
/// repeated; if nothing applies, a spurious `)` is appended.
pub fn human_corrupt_with_rule(y: &TokenSeq, seed: u64) -> (TokenSeq, HumanRule) {
    let mut rng = seed::rng(seed);
    let toks = y.tokens();
    let layout = Layout::of(toks);
    let mut remaining: Vec<(HumanRule, f64)> = HumanRule::ALL.iter().map(|&r| (r, r.weight())).collect();
    while !remaining.is_empty() {
        let k = pick_weighted(&mut rng, &remaining);
        let (rule, _) = remaining.remove(k);
        if let Some(out) = try_rule(rule, toks, &layout, &mut rng) {
            return (TokenSeq::from_vec(out), rule);
        }
    }
    let out = apply_site(toks, Site::Insert(toks.len(), Token::RPAREN));
    (TokenSeq::from_vec(out), HumanRule::H3)
}

pub fn human_corrupt(y: &TokenSeq, seed: u64) -> TokenSeq {
    human_corrupt_with_rule(y, seed).0
}

/// Applies one specific rule, if it has a breaking site.
pub fn apply_rule(rule: HumanRule, y: &TokenSeq, seed: u64) -> Option<TokenSeq> {
    let mut rng = seed::rng(seed);
    let layout = Layout::of(y.tokens());
    try_rule(rule, y.tokens(), &layout, &mut rng).map(TokenSeq::from_vec)
}

/// Ground truth for one bad program. Only evaluation oracles read it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub bad_id: u64,
    pub orig_tokens: TokenSeq,
    pub rule: HumanRule,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub good: Vec<TokenSeq>,
    pub bad_pool: Vec<TokenSeq>,
    pub bad_test: Vec<TokenSeq>,
    /// Aligned with `bad_pool` followed by `bad_test`.
    truth: Vec<TruthEntry>,
    pub seed: u64,
}

impl Corpus {
    pub(crate) fn from_parts(
        good: Vec<TokenSeq>,
        bad_pool: Vec<TokenSeq>,
        bad_test: Vec<TokenSeq>,
        truth: Vec<TruthEntry>,
        seed: u64,
    ) -> Corpus {
        Corpus {
            good,
            bad_pool,
            bad_test,
            truth,
            seed,
        }
    }

    /// Id of the first bad-pool program; bad ids continue through the test set.
    pub fn bad_pool_first_id(&self) -> u64 {
        self.good.len() as u64
    }

    pub fn bad_test_first_id(&self) -> u64 {
        (self.good.len() + self.bad_pool.len()) as u64
    }

    /// The pre-corruption originals. Evaluation oracles only; no learner
    /// takes a `Corpus`.
    pub fn truth(&self) -> &[TruthEntry] {
        &self.truth
    }

    pub fn truth_for_test(&self) -> &[TruthEntry] {
        &self.truth[self.bad_pool.len()..]
    }

    pub fn truth_for_pool(&self) -> &[TruthEntry] {
        &self.truth[..self.bad_pool.len()]
    }

    /// Random-noise counterpart of `bad_test`: one synthetic corruption of
    /// each test original, kept when the critic rejects it.
    pub fn synthetic_test(&self, spec: &NoiseSpec, seed: u64) -> Vec<TokenSeq> {
        let spec = NoiseSpec {
            copies_per_good: 1,
            ..*spec
        };
        let origs: Vec<TokenSeq> = self.truth_for_test().iter().map(|t| t.orig_tokens.clone()).collect();
        make_synthetic_pairs(&origs, &spec, seed::derive(seed, stream::SYNTHETIC_TEST, 0))
            .into_iter()
            .map(|p| p.bad)
            .collect()
    }
}

/// Generates `n_good + n_bad_pool + n_bad_test` good programs, keeps the
/// first `n_good` and corrupts the rest through the human channel.
/// Duplicate bad programs are skipped so the two bad sets stay disjoint.
pub fn build_corpus(n_good: usize, n_bad_pool: usize, n_bad_test: usize, seed: u64) -> Result<Corpus> {
    if n_good == 0 || n_bad_pool == 0 || n_bad_test == 0 {
        return Err(Error::InvalidArgument("corpus counts must be >= 1".into()));
    }
    let good = generate_good(n_good, seed)?;
    let n_bad = n_bad_pool + n_bad_test;

    let corrupt_at = |i: usize| -> Result<(TokenSeq, TokenSeq, HumanRule)> {
        let orig = good_at(seed, i)?;
        let (bad, rule) = human_corrupt_with_rule(&orig, seed::derive(seed, stream::HUMAN, i as u64));
        Ok((bad, orig, rule))
    };

    let mut seen = HashSet::new();
    let mut bads = Vec::with_capacity(n_bad);
    let mut next = n_good;
    while bads.len() < n_bad {
        let want = n_bad - bads.len();
        let batch: Vec<_> = (next..next + want).into_par_iter().map(corrupt_at).collect::<Result<_>>()?;
        next += want;
        for item in batch {
            if seen.insert(item.0.clone()) {
                bads.push(item);
            }
        }
    }

    let first_bad_id = n_good as u64;
    let truth = bads
        .iter()
        .enumerate()
        .map(|(k, (_, orig, rule))| TruthEntry {
            bad_id: first_bad_id + k as u64,
            orig_tokens: orig.clone(),
            rule: *rule,
        })
        .collect();
    let mut bad_pool: Vec<TokenSeq> = bads.into_iter().map(|(b, _, _)| b).collect();
    let bad_test = bad_pool.split_off(n_bad_pool);
    Ok(Corpus {
        good,
        bad_pool,
        bad_test,
        truth,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toylang::{edit_distance, seq, ErrorCategory};

    #[test]
    fn weights_sum_to_one() {
        let total: f64 = HumanRule::ALL.iter().map(|r| r.weight()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(HumanRule::ALL.iter().all(|r| r.weight() > 0.0));
    }

    #[test]
    fn generate_good_is_deterministic_and_valid() {
        assert_eq!(generate_good(1, 7).unwrap(), generate_good(1, 7).unwrap());
        for s in generate_good(100, 99).unwrap() {
            assert!(critic(&s).is_good(), "{s}");
            assert!((MIN_GOOD_LEN..=MAX_GOOD_LEN).contains(&s.len()));
        }
        assert!(generate_good(0, 1).is_err());
    }

    #[test]
    fn blocks_appear() {
        let progs = generate_good(1000, 1).unwrap();
        let with_block = progs.iter().filter(|p| p.tokens().contains(&Token::INDENT)).count();
        assert!(with_block > 0);
    }

    #[test]
    fn h5_pairs_indent_and_dedent() {
        let y = seq("x = 1 <NL> y = 2 <NL>");
        let layout = Layout::of(y.tokens());
        let candidates = sites(HumanRule::H5, y.tokens(), &layout);
        let line2 = candidates
            .iter()
            .find(|(s, _)| matches!(s, Site::InsertPair(4, ..)))
            .expect("second line is a site");
        let out = TokenSeq::from_vec(apply_site(y.tokens(), line2.0));
        assert_eq!(out, seq("x = 1 <NL> <I> y = 2 <NL> <D>"));
        assert_eq!(critic(&out).category(), Some(ErrorCategory::UnexpectedIndent));
    }

    #[test]
    fn h1_deletes_nested_close() {
        let y = seq("f ( g ( x ) )");
        let out = apply_rule(HumanRule::H1, &y, 0).unwrap();
        assert_eq!(out, seq("f ( g ( x )"));
        assert_eq!(critic(&out).category(), Some(ErrorCategory::UnclosedLeftNested));
    }

    #[test]
    fn h2_h4_h6_h8_categories() {
        let flat = apply_rule(HumanRule::H2, &seq("x = f ( y ) <NL>"), 0).unwrap();
        assert_eq!(critic(&flat).category(), Some(ErrorCategory::UnclosedLeftFlat));
        let block = seq("if x : <NL> <I> y = 1 <NL> <D> z = 2 <NL>");
        let no_indent = apply_rule(HumanRule::H4, &block, 0).unwrap();
        assert_eq!(critic(&no_indent).category(), Some(ErrorCategory::ExpectedIndent));
        let no_colon = apply_rule(HumanRule::H6, &block, 0).unwrap();
        assert_eq!(critic(&no_colon).category(), Some(ErrorCategory::MissingColon));
        let wrapped = apply_rule(HumanRule::H8, &seq("x = ( a + 1 ) <NL>"), 0).unwrap();
        assert_eq!(wrapped, seq("x = ( ( a + 1 ) ) <NL>"));
        assert_eq!(critic(&wrapped).category(), Some(ErrorCategory::RedundantParenPair));
    }

    #[test]
    fn human_corrupt_always_breaks() {
        for (i, y) in generate_good(300, 5).unwrap().iter().enumerate() {
            let (bad, _) = human_corrupt_with_rule(y, i as u64);
            assert!(critic(&bad).is_bad());
            assert!(edit_distance(&bad, y) <= 4);
            assert_eq!(human_corrupt(y, i as u64), bad);
        }
    }

    #[test]
    fn fallback_when_nothing_applies() {
        // No brackets, no headers, no commas: only H3 and H5 have sites.
        let y = seq("x = 1");
        let (bad, rule) = human_corrupt_with_rule(&y, 3);
        assert!(critic(&bad).is_bad());
        assert_eq!(rule, HumanRule::H3);
    }

    #[test]
    fn small_corpus_invariants() {
        let c = build_corpus(10, 2, 2, 3).unwrap();
        assert_eq!((c.good.len(), c.bad_pool.len(), c.bad_test.len()), (10, 2, 2));
        assert!(c.good.iter().all(|s| critic(s).is_good()));
        assert!(c.bad_pool.iter().chain(&c.bad_test).all(|s| critic(s).is_bad()));
        assert!(c.bad_pool.iter().all(|s| !c.bad_test.contains(s)));
        let bads: Vec<_> = c.bad_pool.iter().chain(&c.bad_test).collect();
        for (bad, truth) in bads.iter().zip(c.truth()) {
            assert!(critic(&truth.orig_tokens).is_good());
            assert!(edit_distance(bad, &truth.orig_tokens) <= 4);
        }
        assert_eq!(c, build_corpus(10, 2, 2, 3).unwrap());
    }
}
