//! The toy language: vocabulary, parser critic and edit distance.

mod critic;
mod distance;
mod token;

pub use critic::{critic, is_good, Critique, ErrorCategory, MajorCategory, Verdict};
pub use distance::{align, apply_ops, distance_within, edit_distance, EditOp};
pub use token::{vocabulary, Token, TokenKind, TokenSeq, MAX_LEN, VOCAB_SIZE};

pub(crate) use token::cmp_lexical;
#[cfg(test)]
pub(crate) use token::seq;
