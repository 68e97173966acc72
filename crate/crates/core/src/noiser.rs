//! Random token noise used to build the initial synthetic training pairs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{Provenance, RepairPair};
use crate::seed::{self, stream};
use crate::toylang::{critic, Token, TokenSeq, VOCAB_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub min_edits: usize,
    pub max_edits: usize,
    pub copies_per_good: usize,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            min_edits: 1,
            max_edits: 3,
            copies_per_good: 8,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.min_edits == 0 || self.min_edits > self.max_edits {
            return Err(Error::InvalidArgument(format!(
                "noise edits must satisfy 1 <= min <= max, got {}..={}",
                self.min_edits, self.max_edits
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseOp {
    Drop,
    Insert,
    Replace,
}

/// A single concrete noise edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseEdit {
    Drop(usize),
    Insert(usize, Token),
    Replace(usize, Token),
}

impl NoiseEdit {
    pub fn op(self) -> NoiseOp {
        match self {
            NoiseEdit::Drop(_) => NoiseOp::Drop,
            NoiseEdit::Insert(..) => NoiseOp::Insert,
            NoiseEdit::Replace(..) => NoiseOp::Replace,
        }
    }

    pub fn apply(self, tokens: &mut Vec<Token>) {
        match self {
            NoiseEdit::Drop(i) => {
                tokens.remove(i);
            }
            NoiseEdit::Insert(i, t) => tokens.insert(i, t),
            NoiseEdit::Replace(i, t) => tokens[i] = t,
        }
    }
}

fn random_token(rng: &mut ChaCha8Rng) -> Token {
    Token::from_index(rng.gen_range(0..VOCAB_SIZE)).expect("index in vocabulary")
}

/// Draws one edit for the current sequence: op uniform over the three,
/// position uniform over valid positions (inserts may land at either end),
/// token uniform over the vocabulary. Replacements never keep the token.
pub fn sample_edit(tokens: &[Token], rng: &mut ChaCha8Rng) -> NoiseEdit {
    let op = match rng.gen_range(0..3) {
        0 => NoiseOp::Drop,
        1 => NoiseOp::Insert,
        _ => NoiseOp::Replace,
    };
    match op {
        NoiseOp::Insert => NoiseEdit::Insert(rng.gen_range(0..=tokens.len()), random_token(rng)),
        // An empty sequence can only grow.
        _ if tokens.is_empty() => NoiseEdit::Insert(0, random_token(rng)),
        NoiseOp::Drop => NoiseEdit::Drop(rng.gen_range(0..tokens.len())),
        NoiseOp::Replace => {
            let i = rng.gen_range(0..tokens.len());
            let mut t = random_token(rng);
            while t == tokens[i] {
                t = random_token(rng);
            }
            NoiseEdit::Replace(i, t)
        }
    }
}

/// Applies between `min_edits` and `max_edits` uniform random edits.
/// The result is not checked by the critic.
pub fn synthetic_corrupt(y: &TokenSeq, spec: &NoiseSpec, seed: u64) -> TokenSeq {
    let mut rng = seed::rng(seed);
    let k = rng.gen_range(spec.min_edits..=spec.max_edits);
    let mut tokens = y.tokens().to_vec();
    for _ in 0..k {
        sample_edit(&tokens, &mut rng).apply(&mut tokens);
    }
    TokenSeq::from_vec(tokens)
}

/// `copies_per_good` corruptions of every good program, paired with their
/// source. Corruptions the critic still accepts are discarded.
pub fn make_synthetic_pairs(good: &[TokenSeq], spec: &NoiseSpec, seed: u64) -> Vec<RepairPair> {
    let copies = spec.copies_per_good;
    good.par_iter()
        .enumerate()
        .flat_map_iter(|(i, y)| {
            (0..copies).filter_map(move |c| {
                let item = (i * copies + c) as u64;
                let bad = synthetic_corrupt(y, spec, seed::derive(seed, stream::SYNTHETIC, item));
                critic(&bad).is_bad().then(|| RepairPair {
                    bad,
                    good: y.clone(),
                    provenance: Provenance::Synthetic,
                    round: 0,
                })
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toylang::{edit_distance, seq};

    #[test]
    fn drop_effect() {
        let mut t = seq("a b c").into_tokens();
        NoiseEdit::Drop(1).apply(&mut t);
        assert_eq!(TokenSeq::from_vec(t), seq("a c"));
    }

    #[test]
    fn bounded_distance_and_determinism() {
        let spec = NoiseSpec::default();
        let y = seq("def f ( x ) : <NL> <I> return x <NL>");
        for s in 0..500 {
            let out = synthetic_corrupt(&y, &spec, s);
            assert!(edit_distance(&y, &out) <= 3);
            assert_eq!(out, synthetic_corrupt(&y, &spec, s));
        }
    }

    #[test]
    fn replace_never_keeps_token() {
        let y = seq("x");
        let mut rng = seed::rng(1);
        for _ in 0..1000 {
            if let NoiseEdit::Replace(_, t) = sample_edit(y.tokens(), &mut rng) {
                assert_ne!(t, y.tokens()[0]);
            }
        }
    }

    #[test]
    fn still_good_corruptions_are_discarded() {
        // Every single-token replacement of `x` by another identifier keeps
        // `a = x` good; such pairs never reach the output.
        let y = seq("a = x <NL>");
        let spec = NoiseSpec {
            min_edits: 1,
            max_edits: 1,
            copies_per_good: 64,
        };
        let pairs = make_synthetic_pairs(std::slice::from_ref(&y), &spec, 2);
        assert!(pairs.len() < 64);
        for p in &pairs {
            assert!(critic(&p.bad).is_bad());
            assert_eq!(p.good, y);
        }
        let still_good = seq("a = y <NL>");
        assert!(critic(&still_good).is_good());
        assert!(pairs.iter().all(|p| p.bad != still_good));
    }

    #[test]
    fn invalid_spec() {
        let spec = NoiseSpec {
            min_edits: 3,
            max_edits: 1,
            copies_per_good: 8,
        };
        assert!(spec.validate().is_err());
    }
}
