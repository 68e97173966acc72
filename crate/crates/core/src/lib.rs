//! Unsupervised repair learning with a parser critic.
//!
//! Given only unlabeled programs in a small indentation-sensitive token
//! language and a critic that tells good programs from bad ones, the crate
//! trains a fixer (bad to good) and a breaker (good to bad) by alternating
//! critic-verified data generation and fine-tuning, and compares that loop
//! against self-training without a breaker and unverified backtranslation.

pub mod corpusgen;
pub mod editmodel;
pub mod error;
pub mod eval;
pub mod io;
pub mod noiser;
pub mod pipeline;
pub mod seed;
pub mod toylang;

pub use corpusgen::{build_corpus, generate_good, human_corrupt, Corpus, HumanRule};
pub use editmodel::{Candidate, Direction, EditModel};
pub use error::{Error, Result};
pub use eval::{category_histogram, repair_accuracy, Accuracy, EvalSpec};
pub use noiser::{make_synthetic_pairs, synthetic_corrupt, NoiseSpec};
pub use pipeline::{AlgoConfig, Algorithm, ExperimentReport, Provenance, RepairPair};
pub use toylang::{align, critic, edit_distance, vocabulary, Critique, ErrorCategory, MajorCategory, Token, TokenSeq, Verdict};
