//! Token-level Levenshtein distance and minimal alignments.

use serde::{Deserialize, Serialize};

use super::token::{Token, TokenSeq};

/// One step of an alignment from a source sequence to a target sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditOp {
    Keep(Token),
    Sub(Token, Token),
    Del(Token),
    Ins(Token),
}

impl EditOp {
    pub fn cost(self) -> usize {
        match self {
            EditOp::Keep(_) => 0,
            _ => 1,
        }
    }
}

/// Unit-cost Levenshtein distance over tokens.
pub fn edit_distance(a: &TokenSeq, b: &TokenSeq) -> usize {
    distance_slices(a.tokens(), b.tokens())
}

fn distance_slices(a: &[Token], b: &[Token]) -> usize {
    if a.len() < b.len() {
        return distance_slices(b, a);
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ta) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &tb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ta != tb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Distance if it is below `bound`, otherwise `None`. Uses the length
/// difference as a cheap lower bound before running the full table.
pub fn distance_within(a: &TokenSeq, b: &TokenSeq, bound: usize) -> Option<usize> {
    if a.len().abs_diff(b.len()) >= bound {
        return None;
    }
    let d = edit_distance(a, b);
    (d < bound).then_some(d)
}

/// One minimal-cost alignment of `a` onto `b`.
///
/// The traceback starts at the bottom-right cell and prefers KEEP, then
/// SUB, then DEL, then INS whenever several moves are optimal, so the
/// result is a pure function of the inputs.
pub fn align(a: &TokenSeq, b: &TokenSeq) -> Vec<EditOp> {
    let (a, b) = (a.tokens(), b.tokens());
    let w = b.len() + 1;
    let mut dp = vec![0usize; (a.len() + 1) * w];
    for j in 0..=b.len() {
        dp[j] = j;
    }
    for i in 1..=a.len() {
        dp[i * w] = i;
        for j in 1..=b.len() {
            let sub = dp[(i - 1) * w + j - 1] + usize::from(a[i - 1] != b[j - 1]);
            dp[i * w + j] = sub.min(dp[(i - 1) * w + j] + 1).min(dp[i * w + j - 1] + 1);
        }
    }

    let mut ops = Vec::with_capacity(a.len().max(b.len()));
    let (mut i, mut j) = (a.len(), b.len());
    while i > 0 || j > 0 {
        let here = dp[i * w + j];
        if i > 0 && j > 0 && a[i - 1] == b[j - 1] && here == dp[(i - 1) * w + j - 1] {
            ops.push(EditOp::Keep(a[i - 1]));
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && a[i - 1] != b[j - 1] && here == dp[(i - 1) * w + j - 1] + 1 {
            ops.push(EditOp::Sub(a[i - 1], b[j - 1]));
            i -= 1;
            j -= 1;
        } else if i > 0 && here == dp[(i - 1) * w + j] + 1 {
            ops.push(EditOp::Del(a[i - 1]));
            i -= 1;
        } else {
            ops.push(EditOp::Ins(b[j - 1]));
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Applies an alignment to its source, yielding the target.
pub fn apply_ops(ops: &[EditOp]) -> TokenSeq {
    let tokens = ops
        .iter()
        .filter_map(|op| match *op {
            EditOp::Keep(t) | EditOp::Sub(_, t) | EditOp::Ins(t) => Some(t),
            EditOp::Del(_) => None,
        })
        .collect();
    TokenSeq::from_vec(tokens)
}
