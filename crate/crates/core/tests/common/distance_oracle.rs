//! Brute-force and textbook references for edit distance and alignment.
#![allow(dead_code)]

use bifi_core::toylang::{apply_ops, EditOp};
use bifi_core::{align, edit_distance, seed, vocabulary, Token, TokenSeq};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn brute(a: &[Token], b: &[Token]) -> usize {
    match (a, b) {
        ([], _) => b.len(),
        (_, []) => a.len(),
        ([x, ra @ ..], [y, rb @ ..]) => {
            let sub = brute(ra, rb) + (x != y) as usize;
            sub.min(brute(ra, b) + 1).min(brute(a, rb) + 1)
        }
    }
}

pub fn wagner_fischer(a: &[Token], b: &[Token]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            d[i][j] = (d[i - 1][j] + 1)
                .min(d[i][j - 1] + 1)
                .min(d[i - 1][j - 1] + (a[i - 1] != b[j - 1]) as usize);
        }
    }
    d[a.len()][b.len()]
}

pub fn seq(t: &[Token]) -> TokenSeq {
    TokenSeq::new(t.to_vec()).unwrap()
}

pub fn all_up_to(alpha: &[Token], max_len: usize) -> Vec<Vec<Token>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &a in alpha {
                let mut t: Vec<Token> = s.clone();
                t.push(a);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn random_pair(rng: &mut StdRng, vocab: &[Token]) -> (TokenSeq, TokenSeq) {
    let len = rng.gen_range(0..40);
    let a: Vec<Token> = (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())]).collect();
    // half the time derive b from a by a few edits, so distances stay small
    let b = if rng.gen_bool(0.5) {
        let mut b = a.clone();
        for _ in 0..rng.gen_range(0..6) {
            let t = vocab[rng.gen_range(0..vocab.len())];
            match rng.gen_range(0..3) {
                0 => b.insert(rng.gen_range(0..=b.len()), t),
                1 if !b.is_empty() => {
                    b.remove(rng.gen_range(0..b.len()));
                }
                _ if !b.is_empty() => {
                    let i = rng.gen_range(0..b.len());
                    b[i] = t;
                }
                _ => {}
            }
        }
        b
    } else {
        let len = rng.gen_range(0..40);
        (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())]).collect()
    };
    (seq(&a), seq(&b))
}

pub fn source_of(ops: &[EditOp]) -> Vec<Token> {
    ops.iter()
        .filter_map(|op| match *op {
            EditOp::Keep(t) | EditOp::Sub(t, _) | EditOp::Del(t) => Some(t),
            EditOp::Ins(_) => None,
        })
        .collect()
}

/// Pairs over a 3-token alphabet, lengths up to 4, where the distance
/// disagrees with the exponential recursion; returns (pairs, mismatches).
pub fn exhaustive_mismatches() -> (usize, usize) {
    let vocab = vocabulary();
    let all = all_up_to(&[vocab[9], vocab[32], vocab[39]], 4);
    let mut bad = 0;
    for a in &all {
        for b in &all {
            bad += (edit_distance(&seq(a), &seq(b)) != brute(a, b)) as usize;
        }
    }
    (all.len() * all.len(), bad)
}

/// Random pairs whose distance disagrees with the DP table.
pub fn random_mismatches(n: usize, stream: u64) -> usize {
    let vocab = vocabulary();
    let mut rng = StdRng::seed_from_u64(seed::derive(3, stream, 0));
    (0..n)
        .filter(|_| {
            let (a, b) = random_pair(&mut rng, &vocab);
            edit_distance(&a, &b) != wagner_fischer(a.tokens(), b.tokens())
        })
        .count()
}

/// Random pairs whose alignment is not a minimal script from `a` to `b`.
pub fn alignment_mismatches(n: usize, stream: u64) -> usize {
    let vocab = vocabulary();
    let mut rng = StdRng::seed_from_u64(seed::derive(3, stream, 0));
    (0..n)
        .filter(|_| {
            let (a, b) = random_pair(&mut rng, &vocab);
            let ops = align(&a, &b);
            let cost: usize = ops.iter().map(|op| op.cost()).sum();
            cost != edit_distance(&a, &b) || source_of(&ops) != a.tokens() || apply_ops(&ops) != b
        })
        .count()
}
