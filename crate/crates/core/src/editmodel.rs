//! Context-conditioned edit model used for both the fixer and the breaker.
//!
//! A source sequence is read left to right as an alternation of gaps and
//! token sites: `gap(0) site(0) gap(1) site(1) ... site(n-1) gap(n)`. Each
//! site emits one of KEEP, DEL or SUB(t); each gap emits zero or more INS(t)
//! followed by END. Events are conditioned on a window of two source tokens
//! on each side, with identifiers, literals and binary operators collapsed
//! to their class. A gap's left neighbours are taken from the output
//! emitted so far, so an insertion sees what was inserted before it. The
//! window distribution is interpolated with the one for the inner
//! neighbours only, which in turn backs off to the site token alone (or
//! nothing, for a gap); the last level is add-alpha smoothed over the 43
//! events of a context.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::RepairPair;
use crate::toylang::{align, cmp_lexical, EditOp, Token, TokenSeq, MAX_LEN, VOCAB_SIZE};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_BACKOFF: f64 = 1.0;
pub const DEFAULT_DECAY: f64 = 0.5;
pub const DEFAULT_MAX_EDITS: usize = 4;
pub const DEFAULT_BEAM: usize = 10;

/// Events per context: KEEP, DEL and 41 substitutions at a site; END and
/// 42 insertions at a gap.
pub const EVENTS_PER_CONTEXT: usize = 43;

const SLOTS: usize = 2 + VOCAB_SIZE;
const BOUNDARY: u8 = VOCAB_SIZE as u8;
const IDENT: u8 = BOUNDARY + 1;
const LITERAL: u8 = BOUNDARY + 2;
const OPERATOR: u8 = BOUNDARY + 3;
/// Unused position of a coarser key.
const NONE: u8 = 63;
const FORMAT: &str = "bifi-edit-model";
const VERSION: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    BadToGood,
    GoodToBad,
}

/// A context position: a concrete token, a token class, or the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Neighbor {
    Boundary,
    Token(Token),
    Identifier,
    Literal,
    Operator,
}

impl Neighbor {
    pub fn of(t: Option<Token>) -> Neighbor {
        unsym(class(sym(t)))
    }
}

/// Full conditioning context of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Context {
    Site {
        prev2: Neighbor,
        prev: Neighbor,
        src: Token,
        next: Neighbor,
        next2: Neighbor,
    },
    Gap {
        prev2: Neighbor,
        prev: Neighbor,
        next: Neighbor,
        next2: Neighbor,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Keep,
    Del,
    Sub(Token),
    Ins(Token),
    End,
}

impl EventKind {
    pub fn is_edit(self) -> bool {
        matches!(self, EventKind::Del | EventKind::Sub(_) | EventKind::Ins(_))
    }
}

/// One training or decoding event with its context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EditEvent {
    pub context: Context,
    pub kind: EventKind,
}

fn sym(t: Option<Token>) -> u8 {
    t.map_or(BOUNDARY, |t| t.index() as u8)
}

fn unsym(s: u8) -> Neighbor {
    match s {
        BOUNDARY => Neighbor::Boundary,
        IDENT => Neighbor::Identifier,
        LITERAL => Neighbor::Literal,
        OPERATOR => Neighbor::Operator,
        _ => Neighbor::Token(Token::from_index(s as usize).expect("token symbol")),
    }
}

fn nsym(n: Neighbor) -> u8 {
    match n {
        Neighbor::Boundary => BOUNDARY,
        Neighbor::Identifier => IDENT,
        Neighbor::Literal => LITERAL,
        Neighbor::Operator => OPERATOR,
        Neighbor::Token(t) => class(t.index() as u8),
    }
}

fn class(s: u8) -> u8 {
    match Token::from_index(s as usize) {
        Some(t) if t.is_identifier() => IDENT,
        Some(t) if t.is_literal() => LITERAL,
        Some(t) if t.is_binary_op() => OPERATOR,
        _ => s,
    }
}

/// Packed context key: `site | level | prev2 | prev | src | next | next2`,
/// six bits per position. Level 2 is the full window, level 1 keeps the
/// inner neighbours, level 0 keeps only the site token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key(u64);

impl Key {
    fn new(site: bool, level: u8, p: [u8; 5]) -> Key {
        let mut k = (site as u64) << 32 | (level as u64) << 30;
        for (i, s) in p.iter().enumerate() {
            k |= (*s as u64) << (24 - 6 * i);
        }
        Key(k)
    }

    fn site(window: [u8; 5]) -> Key {
        Key::new(true, 2, window)
    }

    fn gap(window: [u8; 5]) -> Key {
        Key::new(false, 2, window)
    }

    fn is_site(self) -> bool {
        self.0 >> 32 == 1
    }

    fn level(self) -> u8 {
        (self.0 >> 30 & 3) as u8
    }

    fn parts(self) -> [u8; 5] {
        std::array::from_fn(|i| (self.0 >> (24 - 6 * i) & 63) as u8)
    }

    fn src(self) -> u8 {
        self.parts()[2]
    }

    fn parent(self) -> Option<Key> {
        let [_, p, s, n, _] = self.parts();
        match self.level() {
            2 => Some(Key::new(self.is_site(), 1, [NONE, p, s, n, NONE])),
            1 => Some(Key::new(self.is_site(), 0, [NONE, NONE, s, NONE, NONE])),
            _ => None,
        }
    }

    /// The key and its coarser levels, finest first.
    fn chain(self) -> impl Iterator<Item = Key> {
        std::iter::successors(Some(self), |k| k.parent())
    }

    fn of(ctx: Context) -> Key {
        match ctx {
            Context::Site {
                prev2,
                prev,
                src,
                next,
                next2,
            } => Key::site([nsym(prev2), nsym(prev), src.index() as u8, nsym(next), nsym(next2)]),
            Context::Gap {
                prev2,
                prev,
                next,
                next2,
            } => Key::gap([nsym(prev2), nsym(prev), NONE, nsym(next), nsym(next2)]),
        }
    }

    fn context(self) -> Context {
        let [p2, p, s, n, n2] = self.parts();
        if self.is_site() {
            Context::Site {
                prev2: unsym(p2),
                prev: unsym(p),
                src: Token::from_index(s as usize).expect("site token"),
                next: unsym(n),
                next2: unsym(n2),
            }
        } else {
            Context::Gap {
                prev2: unsym(p2),
                prev: unsym(p),
                next: unsym(n),
                next2: unsym(n2),
            }
        }
    }
}

/// Context keys at one source position.
struct Window<'a> {
    src: &'a [Token],
}

impl Window<'_> {
    fn nb(&self, i: isize) -> u8 {
        if i < 0 {
            BOUNDARY
        } else {
            class(sym(self.src.get(i as usize).copied()))
        }
    }

    /// Site `i`: the token `src[i]` with two neighbours on each side.
    fn site(&self, i: usize) -> Key {
        let i = i as isize;
        Key::site([
            self.nb(i - 2),
            self.nb(i - 1),
            self.src[i as usize].index() as u8,
            self.nb(i + 1),
            self.nb(i + 2),
        ])
    }

    /// Gap `i`: the space before `src[i]`. The left side is the output
    /// emitted so far rather than the source.
    fn gap(&self, i: usize, out: &[Token]) -> Key {
        let i = i as isize;
        let left = |k: usize| {
            if out.len() >= k {
                class(out[out.len() - k].index() as u8)
            } else {
                BOUNDARY
            }
        };
        Key::gap([left(2), left(1), NONE, self.nb(i), self.nb(i + 1)])
    }
}

// Slot layout inside a context. Site: 0 KEEP, 1 DEL, 2 + t SUB(t).
// Gap: 0 END, 1 + t INS(t).
fn slot_of(kind: EventKind) -> u8 {
    match kind {
        EventKind::Keep | EventKind::End => 0,
        EventKind::Del => 1,
        EventKind::Sub(t) => 2 + t.index() as u8,
        EventKind::Ins(t) => 1 + t.index() as u8,
    }
}

fn kind_of(site: bool, slot: u8) -> EventKind {
    match (site, slot) {
        (true, 0) => EventKind::Keep,
        (true, 1) => EventKind::Del,
        (true, s) => EventKind::Sub(Token::from_index(s as usize - 2).expect("sub slot")),
        (false, 0) => EventKind::End,
        (false, s) => EventKind::Ins(Token::from_index(s as usize - 1).expect("ins slot")),
    }
}

/// Slots a context can emit: every site slot except substituting the site
/// token by itself, and the 43 gap slots.
fn valid_slots(key: Key) -> impl Iterator<Item = u8> {
    let (site, src) = (key.is_site(), key.src());
    let n = if site { SLOTS } else { SLOTS - 1 } as u8;
    (0..n).filter(move |&s| !(site && s == 2 + src))
}

/// Tie order among equally likely slots: no-edit, DEL, then the emitted
/// token's lexeme order.
fn slot_rank(site: bool, slot: u8) -> i32 {
    match kind_of(site, slot) {
        EventKind::Keep | EventKind::End => -2,
        EventKind::Del => -1,
        EventKind::Sub(t) | EventKind::Ins(t) => t.lexeme_rank() as i32,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Counts {
    total: f64,
    /// Sparse `(slot, count)` pairs, sorted by slot.
    slots: Vec<(u8, f64)>,
}

impl Counts {
    fn add(&mut self, slot: u8, n: f64) {
        self.total += n;
        match self.slots.binary_search_by_key(&slot, |(s, _)| *s) {
            Ok(i) => self.slots[i].1 += n,
            Err(i) => self.slots.insert(i, (slot, n)),
        }
    }

    fn get(&self, slot: u8) -> f64 {
        self.slots
            .binary_search_by_key(&slot, |(s, _)| *s)
            .map_or(0.0, |i| self.slots[i].1)
    }

    fn scaled(&self, factor: f64) -> Counts {
        Counts {
            total: self.total * factor,
            slots: self.slots.iter().map(|&(s, c)| (s, c * factor)).collect(),
        }
    }
}

type Table = HashMap<Key, Counts>;

/// Turns an alignment into gap and site events over the source.
pub fn extract_events(source: &TokenSeq, target: &TokenSeq) -> Vec<EditEvent> {
    let mut out = Vec::with_capacity(2 * source.len() + 1);
    walk_events(source.tokens(), &align(source, target), |key, slot| {
        out.push(EditEvent {
            context: key.context(),
            kind: kind_of(key.is_site(), slot),
        })
    });
    out
}

fn walk_events(src: &[Token], ops: &[EditOp], mut emit: impl FnMut(Key, u8)) {
    let w = Window { src };
    let mut out: Vec<Token> = Vec::with_capacity(src.len() + 4);
    let mut i = 0;
    for op in ops {
        match *op {
            EditOp::Ins(t) => {
                emit(w.gap(i, &out), slot_of(EventKind::Ins(t)));
                out.push(t);
            }
            EditOp::Keep(_) | EditOp::Del(_) | EditOp::Sub(..) => {
                emit(w.gap(i, &out), 0);
                let (slot, emitted) = match *op {
                    EditOp::Keep(t) => (0, Some(t)),
                    EditOp::Del(_) => (1, None),
                    EditOp::Sub(_, t) => (slot_of(EventKind::Sub(t)), Some(t)),
                    EditOp::Ins(_) => unreachable!(),
                };
                emit(w.site(i), slot);
                if let Some(t) = emitted {
                    out.push(t);
                }
                i += 1;
            }
        }
    }
    emit(w.gap(i, &out), 0);
}

fn count_pairs<'a, I>(pairs: I) -> Table
where
    I: IndexedParallelIterator<Item = (&'a TokenSeq, &'a TokenSeq)>,
{
    // Integer counts: the merge is exact, so the result does not depend on
    // how rayon splits the work.
    pairs
        .fold(Table::new, |mut table, (src, tgt)| {
            walk_events(src.tokens(), &align(src, tgt), |key, slot| {
                for k in key.chain() {
                    table.entry(k).or_default().add(slot, 1.0)
                }
            });
            table
        })
        .reduce(Table::new, |mut a, b| {
            for (key, counts) in b {
                let entry = a.entry(key).or_default();
                for (slot, n) in counts.slots {
                    entry.add(slot, n);
                }
            }
            a
        })
}

/// One decoded output.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub output: TokenSeq,
    pub score: f64,
    pub n_edits: usize,
}

#[derive(Debug, Clone)]
pub struct EditModel {
    pub alpha: f64,
    /// Weight of the coarser distribution when interpolating levels.
    pub backoff: f64,
    pub decay: f64,
    pub max_edits: usize,
    pub beam: usize,
    /// Effective number of training pairs: decayed like the counts.
    pub mass: f64,
    table: Table,
}

impl Default for EditModel {
    fn default() -> Self {
        EditModel::uniform()
    }
}

impl PartialEq for EditModel {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha
            && self.backoff == other.backoff
            && self.decay == other.decay
            && self.max_edits == other.max_edits
            && self.beam == other.beam
            && self.mass == other.mass
            && self.table == other.table
    }
}

impl EditModel {
    /// A model with no evidence: every event is equally likely.
    pub fn uniform() -> EditModel {
        EditModel {
            alpha: DEFAULT_ALPHA,
            backoff: DEFAULT_BACKOFF,
            decay: DEFAULT_DECAY,
            max_edits: DEFAULT_MAX_EDITS,
            beam: DEFAULT_BEAM,
            mass: 0.0,
            table: Table::new(),
        }
    }

    pub fn with_beam(mut self, beam: usize) -> EditModel {
        self.beam = beam.max(1);
        self
    }

    /// Trains on repair pairs in the given direction. With a base model the
    /// result is `decay * base.counts + new counts`; the base is untouched.
    pub fn train(pairs: &[RepairPair], direction: Direction, base: Option<&EditModel>) -> Result<EditModel> {
        let oriented: Vec<(&TokenSeq, &TokenSeq)> = pairs
            .iter()
            .map(|p| match direction {
                Direction::BadToGood => (&p.bad, &p.good),
                Direction::GoodToBad => (&p.good, &p.bad),
            })
            .collect();
        EditModel::train_oriented(&oriented, base)
    }

    /// Trains on `(source, target)` pairs.
    pub fn train_oriented(pairs: &[(&TokenSeq, &TokenSeq)], base: Option<&EditModel>) -> Result<EditModel> {
        EditModel::train_weighted(pairs, base, 1.0)
    }

    /// Like [`EditModel::train_oriented`] with every new count multiplied by
    /// `weight`.
    pub fn train_weighted(pairs: &[(&TokenSeq, &TokenSeq)], base: Option<&EditModel>, weight: f64) -> Result<EditModel> {
        EditModel::train_mixture(&[(pairs, weight)], base)
    }

    /// Trains on several pair sets at once, each with its own count weight.
    pub fn train_mixture(parts: &[(&[(&TokenSeq, &TokenSeq)], f64)], base: Option<&EditModel>) -> Result<EditModel> {
        if parts.iter().all(|(pairs, _)| pairs.is_empty()) {
            return Err(Error::EmptyTrainingSet);
        }
        let mut offset = 0;
        for (pairs, weight) in parts {
            if !(*weight > 0.0 && weight.is_finite()) {
                return Err(Error::InvalidArgument(format!("training weight must be positive, got {weight}")));
            }
            if let Some(index) = pairs.iter().position(|(s, t)| s == t) {
                return Err(Error::IdenticalPair {
                    index: offset + index,
                    text: pairs[index].0.to_text(),
                });
            }
            offset += pairs.len();
        }
        let mut model = match base {
            Some(b) => EditModel {
                table: b.table.iter().map(|(k, c)| (*k, c.scaled(b.decay))).collect(),
                mass: b.mass * b.decay,
                ..b.clone_params()
            },
            None => EditModel::uniform(),
        };
        for (pairs, weight) in parts {
            model.mass += weight * pairs.len() as f64;
            for (key, counts) in count_pairs(pairs.par_iter().copied()) {
                let entry = model.table.entry(key).or_default();
                for (slot, n) in counts.slots {
                    entry.add(slot, n * weight);
                }
            }
        }
        Ok(model)
    }

    fn clone_params(&self) -> EditModel {
        EditModel {
            alpha: self.alpha,
            backoff: self.backoff,
            decay: self.decay,
            max_edits: self.max_edits,
            beam: self.beam,
            mass: 0.0,
            table: Table::new(),
        }
    }

    /// Number of distinct full-window contexts seen in training.
    pub fn n_contexts(&self) -> usize {
        self.table.keys().filter(|k| k.level() == 2).count()
    }

    /// Training count of an event in its full-window context.
    pub fn count(&self, event: &EditEvent) -> f64 {
        self.table
            .get(&Key::of(event.context))
            .map_or(0.0, |c| c.get(slot_of(event.kind)))
    }

    pub fn context_total(&self, context: Context) -> f64 {
        self.table.get(&Key::of(context)).map_or(0.0, |c| c.total)
    }

    /// Smoothed `P(event | context)`.
    pub fn prob(&self, event: &EditEvent) -> f64 {
        let key = Key::of(event.context);
        let slot = slot_of(event.kind);
        if !valid_slots(key).any(|s| s == slot) {
            return 0.0;
        }
        self.dist(key)[slot as usize]
    }

    /// Interpolated distribution over the slots of a full-window key;
    /// invalid slots get zero.
    fn dist(&self, key: Key) -> [f64; SLOTS] {
        let chain: Vec<Key> = key.chain().collect();
        let mut p = [0.0; SLOTS];
        let base = chain.last().and_then(|k| self.table.get(k));
        let total = base.map_or(0.0, |c| c.total);
        let denom = total + self.alpha * EVENTS_PER_CONTEXT as f64;
        for s in valid_slots(key) {
            p[s as usize] = self.alpha / denom;
        }
        if let Some(c) = base {
            for &(s, n) in &c.slots {
                p[s as usize] += n / denom;
            }
        }
        for k in chain.iter().rev().skip(1) {
            let Some(c) = self.table.get(k) else {
                continue;
            };
            let denom = c.total + self.backoff;
            let w = self.backoff / denom;
            for s in valid_slots(key) {
                p[s as usize] *= w;
            }
            for &(s, n) in &c.slots {
                p[s as usize] += n / denom;
            }
        }
        p
    }

    /// All full-window `(event, count)` entries in a canonical order.
    pub fn entries(&self) -> Vec<(EditEvent, f64)> {
        let mut keys: Vec<&Key> = self.table.keys().filter(|k| k.level() == 2).collect();
        keys.sort();
        keys.into_iter()
            .flat_map(|key| {
                self.table[key].slots.iter().map(move |&(slot, n)| {
                    (
                        EditEvent {
                            context: key.context(),
                            kind: kind_of(key.is_site(), slot),
                        },
                        n,
                    )
                })
            })
            .collect()
    }

    /// Ranked options for one context: `(log-prob, slot)`, best first,
    /// truncated to `limit`; the no-edit slot 0 is always present.
    fn options(&self, key: Key, limit: usize) -> Vec<(f64, u8)> {
        let site = key.is_site();
        let p = self.dist(key);
        let mut opts: Vec<(f64, u8)> = valid_slots(key).map(|s| (p[s as usize], s)).collect();
        let order = |a: &(f64, u8), b: &(f64, u8)| b.0.total_cmp(&a.0).then_with(|| slot_rank(site, a.1).cmp(&slot_rank(site, b.1)));
        let no_edit = (p[0], 0u8);
        if opts.len() > limit {
            opts.select_nth_unstable_by(limit - 1, order);
            opts.truncate(limit);
        }
        opts.sort_by(order);
        if !opts.iter().any(|o| o.1 == 0) {
            opts.push(no_edit);
        }
        for o in &mut opts {
            o.0 = o.0.ln();
        }
        opts
    }

    /// Beam search over edit scripts. Returns up to `beam` distinct outputs,
    /// best first: higher score, then fewer edits, then lexeme order.
    pub fn decode(&self, input: &TokenSeq) -> Vec<Candidate> {
        let src = input.tokens();
        let n = src.len();
        let width = self.beam.max(1);
        let limit = width + 2;
        let window = Window { src };
        // Options per context key, filled on demand at each position.
        type Cache = Vec<(Key, Vec<(f64, u8)>)>;
        fn get(cache: &Cache, key: Key) -> &[(f64, u8)] {
            &cache.iter().find(|(k, _)| *k == key).expect("filled").1
        }
        let fill = |cache: &mut Cache, hyps: &[Hyp], key: &dyn Fn(&Hyp) -> Key| {
            for h in hyps {
                let k = key(h);
                if !cache.iter().any(|(c, _)| *c == k) {
                    cache.push((k, self.options(k, limit)));
                }
            }
        };
        let end_lp = |opts: &[(f64, u8)]| opts.iter().find(|o| o.1 == 0).expect("END always present").0;

        let mut beam = vec![Hyp {
            out: Vec::with_capacity(n + self.max_edits),
            hash: 0,
            score: 0.0,
            edits: 0,
        }];
        for i in 0..=n {
            // Gap i: any number of insertions, then END.
            let mut gap: Cache = Vec::new();
            let gap_key = |h: &Hyp| window.gap(i, &h.out);
            fill(&mut gap, &beam, &gap_key);
            let mut open: Vec<Hyp> = beam.iter().filter(|h| h.edits < self.max_edits).map(Hyp::clone).collect();
            let mut closed = beam;
            for h in &mut closed {
                h.score += end_lp(get(&gap, gap_key(h)));
            }
            loop {
                // A hypothesis that cannot reach the current width-th best
                // closed score is dropped.
                let bar = nth_best(&closed, width);
                open.retain(|h| {
                    let best_ins = get(&gap, gap_key(h)).iter().find(|o| o.1 != 0).map_or(f64::NEG_INFINITY, |o| o.0);
                    h.edits < self.max_edits && grid(h.score + best_ins) >= bar
                });
                if open.is_empty() {
                    break;
                }
                let mut step = Vec::new();
                for (p, h) in open.iter().enumerate() {
                    for &(lp, slot) in get(&gap, gap_key(h)) {
                        if slot != 0 && grid(h.score + lp) >= bar {
                            let t = Token::from_index(slot as usize - 1).expect("ins token");
                            step.push(Step {
                                parent: p,
                                push: Some(t),
                                score: h.score + lp,
                                edits: h.edits + 1,
                            });
                        }
                    }
                }
                open = prune(&open, step, width);
                fill(&mut gap, &open, &gap_key);
                closed.extend(open.iter().map(|h| Hyp {
                    score: h.score + end_lp(get(&gap, gap_key(h))),
                    ..h.clone()
                }));
            }
            beam = prune_hyps(closed, width);

            if i == n {
                break;
            }
            let site = self.options(window.site(i), limit);
            let mut step = Vec::with_capacity(beam.len() * limit);
            for (p, h) in beam.iter().enumerate() {
                for &(lp, slot) in &site {
                    let (push, edit) = match kind_of(true, slot) {
                        EventKind::Keep => (Some(src[i]), 0),
                        EventKind::Del => (None, 1),
                        EventKind::Sub(t) => (Some(t), 1),
                        _ => unreachable!(),
                    };
                    if h.edits + edit > self.max_edits {
                        continue;
                    }
                    step.push(Step {
                        parent: p,
                        push,
                        score: h.score + lp,
                        edits: h.edits + edit,
                    });
                }
            }
            beam = prune(&beam, step, width);
        }
        beam.into_iter()
            .filter(|h| h.out.len() <= MAX_LEN)
            .map(|h| Candidate {
                output: TokenSeq::from_vec(h.out),
                score: h.score,
                n_edits: h.edits,
            })
            .collect()
    }

    /// Draws one edit script left to right from the model's distribution.
    /// Once `max_edits` edits are drawn, the rest of the input is copied.
    pub fn sample(&self, input: &TokenSeq, rng: &mut impl rand::Rng) -> Candidate {
        let src = input.tokens();
        let window = Window { src };
        let mut out: Vec<Token> = Vec::with_capacity(src.len() + self.max_edits);
        let mut score = 0.0;
        let mut edits = 0;
        let mut draw = |key: Key, edits: usize, score: &mut f64| -> u8 {
            if edits >= self.max_edits {
                return 0;
            }
            let p = self.dist(key);
            let mut u: f64 = rng.gen::<f64>();
            let mut pick = 0;
            for s in valid_slots(key) {
                pick = s;
                u -= p[s as usize];
                if u < 0.0 {
                    break;
                }
            }
            *score += p[pick as usize].ln();
            pick
        };
        for i in 0..=src.len() {
            loop {
                let slot = draw(window.gap(i, &out), edits, &mut score);
                if slot == 0 {
                    break;
                }
                let t = Token::from_index(slot as usize - 1).expect("ins token");
                out.push(t);
                edits += 1;
            }
            if i == src.len() {
                break;
            }
            let slot = draw(window.site(i), edits, &mut score);
            let push = match kind_of(true, slot) {
                EventKind::Keep => Some(src[i]),
                EventKind::Del => None,
                EventKind::Sub(t) => Some(t),
                _ => unreachable!(),
            };
            edits += (slot != 0) as usize;
            out.extend(push);
        }
        Candidate {
            output: TokenSeq::from_vec(out),
            score,
            n_edits: edits,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<EditModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        EditModel::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<EditModel> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(Error::Version {
                what: "edit model",
                found: file.version,
            });
        }
        let mut table = Table::new();
        let mut totals = Vec::new();
        for e in file.entries {
            let (key, slot) = e.decode().map_err(|m| Error::InvalidArgument(format!("model entry: {m}")))?;
            let counts = table.entry(key).or_default();
            match slot {
                Some(slot) => counts.add(slot, e.n),
                None => totals.push((key, e.n)),
            }
        }
        // Stored totals round-trip bit for bit; re-summing need not.
        for (key, n) in totals {
            table.entry(key).or_default().total = n;
        }
        Ok(EditModel {
            alpha: file.alpha,
            backoff: file.backoff,
            decay: file.decay,
            max_edits: file.max_edits,
            beam: file.beam,
            mass: file.mass,
            table,
        })
    }

    fn to_file(&self) -> ModelFile {
        let mut keys: Vec<&Key> = self.table.keys().collect();
        keys.sort();
        let entries = keys
            .into_iter()
            .flat_map(|key| {
                let counts = &self.table[key];
                std::iter::once(ModelEntry::encode(*key, None, counts.total))
                    .chain(counts.slots.iter().map(move |&(slot, n)| ModelEntry::encode(*key, Some(slot), n)))
            })
            .collect();
        ModelFile {
            format: FORMAT.to_string(),
            version: VERSION,
            alpha: self.alpha,
            backoff: self.backoff,
            decay: self.decay,
            max_edits: self.max_edits,
            beam: self.beam,
            mass: self.mass,
            entries,
        }
    }
}

#[derive(Clone)]
struct Hyp {
    out: Vec<Token>,
    /// Polynomial hash of `out`, for deduplication.
    hash: u64,
    score: f64,
    edits: usize,
}

struct Step {
    parent: usize,
    push: Option<Token>,
    score: f64,
    edits: usize,
}

/// Scores compared on a 1e-9 grid, so edit scripts whose log terms differ
/// only in summation order tie exactly.
fn grid(score: f64) -> i64 {
    (score * 1e9).round() as i64
}

fn push_hash(hash: u64, t: Token) -> u64 {
    hash.wrapping_mul(0x100_0000_01B3).wrapping_add(t.index() as u64 + 1)
}

fn nth_best(hyps: &[Hyp], n: usize) -> i64 {
    if hyps.len() < n {
        return i64::MIN;
    }
    let mut g: Vec<i64> = hyps.iter().map(|h| grid(h.score)).collect();
    let (_, nth, _) = g.select_nth_unstable_by(n - 1, |a, b| b.cmp(a));
    *nth
}

/// Keeps the best `width` distinct outputs among the expansions. Ties go to
/// fewer edits, then to the parent that is first in lexeme order, then to
/// the pushed token's lexeme order.
fn prune(parents: &[Hyp], mut steps: Vec<Step>, width: usize) -> Vec<Hyp> {
    let mut lex: Vec<usize> = (0..parents.len()).collect();
    lex.sort_by(|&a, &b| cmp_lexical(&parents[a].out, &parents[b].out));
    let mut lex_rank = vec![0; parents.len()];
    for (r, &p) in lex.iter().enumerate() {
        lex_rank[p] = r;
    }
    let push_rank = |s: &Step| s.push.map_or(-1, |t| t.lexeme_rank() as i32);
    steps.sort_by(|a, b| {
        grid(b.score)
            .cmp(&grid(a.score))
            .then(a.edits.cmp(&b.edits))
            .then(lex_rank[a.parent].cmp(&lex_rank[b.parent]))
            .then(push_rank(a).cmp(&push_rank(b)))
    });
    let mut out: Vec<Hyp> = Vec::with_capacity(width);
    for s in steps {
        let parent = &parents[s.parent];
        let (hash, len) = match s.push {
            Some(t) => (push_hash(parent.hash, t), parent.out.len() + 1),
            None => (parent.hash, parent.out.len()),
        };
        if out.iter().any(|h| h.hash == hash && h.out.len() == len) {
            continue;
        }
        let mut tokens = Vec::with_capacity(parent.out.capacity());
        tokens.extend_from_slice(&parent.out);
        tokens.extend(s.push);
        out.push(Hyp {
            out: tokens,
            hash,
            score: s.score,
            edits: s.edits,
        });
        if out.len() == width {
            break;
        }
    }
    out
}

fn prune_hyps(mut hyps: Vec<Hyp>, width: usize) -> Vec<Hyp> {
    hyps.sort_by(|a, b| {
        grid(b.score)
            .cmp(&grid(a.score))
            .then(a.edits.cmp(&b.edits))
            .then_with(|| cmp_lexical(&a.out, &b.out))
    });
    let mut out: Vec<Hyp> = Vec::with_capacity(width);
    for h in hyps {
        if out.iter().any(|o| o.hash == h.hash && o.out == h.out) {
            continue;
        }
        out.push(h);
        if out.len() == width {
            break;
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    alpha: f64,
    backoff: f64,
    decay: f64,
    max_edits: usize,
    beam: usize,
    mass: f64,
    entries: Vec<ModelEntry>,
}

/// `ctx` lists the context positions a level keeps: a site has 5, 3 or 1
/// (the site token in the middle), a gap 4, 2 or 0. `<B>` marks the
/// boundary and `<ID>`, `<LIT>`, `<OP>` the token classes. `ev` is `total`,
/// `keep`, `del`, `end`, `sub <lexeme>` or `ins <lexeme>`.
#[derive(Serialize, Deserialize)]
struct ModelEntry {
    ctx: Vec<String>,
    ev: String,
    n: f64,
}

const SYMBOL_LEXEMES: [(u8, &str); 4] = [(BOUNDARY, "<B>"), (IDENT, "<ID>"), (LITERAL, "<LIT>"), (OPERATOR, "<OP>")];

impl ModelEntry {
    fn encode(key: Key, slot: Option<u8>, n: f64) -> ModelEntry {
        let lex = |s: u8| {
            SYMBOL_LEXEMES
                .iter()
                .find(|(x, _)| *x == s)
                .map_or_else(|| Token::from_index(s as usize).expect("token symbol").lexeme(), |(_, l)| l)
                .to_string()
        };
        let ctx = key.parts().into_iter().filter(|&s| s != NONE).map(lex).collect();
        let ev = match slot.map(|s| kind_of(key.is_site(), s)) {
            None => "total".to_string(),
            Some(EventKind::Keep) => "keep".to_string(),
            Some(EventKind::Del) => "del".to_string(),
            Some(EventKind::End) => "end".to_string(),
            Some(EventKind::Sub(t)) => format!("sub {}", t.lexeme()),
            Some(EventKind::Ins(t)) => format!("ins {}", t.lexeme()),
        };
        ModelEntry {
            ctx,
            ev,
            n,
        }
    }

    fn decode(&self) -> std::result::Result<(Key, Option<u8>), String> {
        let token = |lex: &str| Token::from_lexeme(lex).ok_or_else(|| format!("unknown lexeme {lex:?}"));
        let sym_of = |lex: &str| -> std::result::Result<u8, String> {
            match SYMBOL_LEXEMES.iter().find(|(_, l)| *l == lex) {
                Some((s, _)) => Ok(*s),
                None => Ok(class(token(lex)?.index() as u8)),
            }
        };
        let c: Vec<u8> = self.ctx.iter().map(|l| sym_of(l)).collect::<std::result::Result<_, _>>()?;
        let site_token = |i: usize| token(&self.ctx[i]).map(|t| t.index() as u8);
        let key = match c.len() {
            5 => Key::new(true, 2, [c[0], c[1], site_token(2)?, c[3], c[4]]),
            3 => Key::new(true, 1, [NONE, c[0], site_token(1)?, c[2], NONE]),
            1 => Key::new(true, 0, [NONE, NONE, site_token(0)?, NONE, NONE]),
            4 => Key::new(false, 2, [c[0], c[1], NONE, c[2], c[3]]),
            2 => Key::new(false, 1, [NONE, c[0], NONE, c[1], NONE]),
            0 => Key::new(false, 0, [NONE; 5]),
            n => return Err(format!("bad context arity {n}")),
        };
        let site = key.is_site();
        let kind = match (self.ev.split_once(' '), self.ev.as_str(), site) {
            (None, "total", _) => None,
            (None, "keep", true) => Some(EventKind::Keep),
            (None, "del", true) => Some(EventKind::Del),
            (None, "end", false) => Some(EventKind::End),
            (Some(("sub", t)), _, true) => Some(EventKind::Sub(token(t)?)),
            (Some(("ins", t)), _, false) => Some(EventKind::Ins(token(t)?)),
            _ => return Err(format!("bad event {:?}", self.ev)),
        };
        if kind == Some(EventKind::Sub(Token::from_index(key.src() as usize).unwrap_or(Token::ASSIGN))) && site {
            return Err("substitution by the same token".into());
        }
        if !(self.n >= 0.0 && self.n.is_finite()) {
            return Err(format!("bad count {}", self.n));
        }
        Ok((key, kind.map(slot_of)))
    }
}
