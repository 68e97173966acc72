//! Repair accuracy and first-error category statistics.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::editmodel::{Candidate, EditModel};
use crate::error::{Error, Result};
use crate::toylang::{align, critic, distance_within, EditOp, ErrorCategory, MajorCategory, Token, TokenSeq};

pub const MAX_FIX_ITERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSpec {
    pub max_fix_iters: usize,
    /// Strict bound on the distance of one fix application.
    pub delta: usize,
    /// Bound on the total distance from the original input.
    pub cumulative_delta: usize,
}

impl Default for EvalSpec {
    fn default() -> Self {
        EvalSpec::iterative(1)
    }
}

impl EvalSpec {
    pub fn iterative(max_fix_iters: usize) -> EvalSpec {
        EvalSpec {
            max_fix_iters,
            delta: 5,
            cumulative_delta: 5 * max_fix_iters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_FIX_ITERS).contains(&self.max_fix_iters) {
            return Err(Error::InvalidArgument(format!(
                "max_fix_iters must be in 1..={MAX_FIX_ITERS}, got {}",
                self.max_fix_iters
            )));
        }
        if self.delta == 0 {
            return Err(Error::InvalidArgument("delta must be >= 1".into()));
        }
        Ok(())
    }
}

/// Repaired and total counts for one group of inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub n: usize,
    pub repaired: usize,
}

impl Tally {
    pub fn accuracy(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.repaired as f64 / self.n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Accuracy {
    pub total: Tally,
    pub by_category: BTreeMap<ErrorCategory, Tally>,
}

impl Accuracy {
    pub fn total_accuracy(&self) -> f64 {
        self.total.accuracy()
    }

    pub fn category_accuracy(&self, category: ErrorCategory) -> Option<f64> {
        self.by_category.get(&category).map(Tally::accuracy)
    }

    pub fn by_major(&self) -> BTreeMap<MajorCategory, Tally> {
        let mut out: BTreeMap<MajorCategory, Tally> = BTreeMap::new();
        for (cat, t) in &self.by_category {
            let e = out.entry(cat.major()).or_default();
            e.n += t.n;
            e.repaired += t.repaired;
        }
        out
    }
}

/// Result of running the fixer on one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: TokenSeq,
    pub repaired: bool,
    pub iterations: usize,
}

/// Picks the candidate a fix application uses: the first one the critic
/// accepts within `delta`, else (iterative mode only) the best non-identity
/// candidate within `delta`.
pub fn select_fix<'a>(input: &TokenSeq, candidates: &'a [Candidate], delta: usize, allow_bad: bool) -> Option<&'a Candidate> {
    let within = |c: &&Candidate| distance_within(input, &c.output, delta).is_some();
    candidates
        .iter()
        .filter(within)
        .find(|c| critic(&c.output).is_good())
        .or_else(|| {
            if allow_bad {
                candidates.iter().filter(within).find(|c| c.output != *input)
            } else {
                None
            }
        })
}

/// Applies the fixer up to `max_fix_iters` times, stopping once the critic
/// accepts.
pub fn repair_one(fixer: &EditModel, x: &TokenSeq, spec: &EvalSpec) -> Outcome {
    let mut cur = x.clone();
    let mut iterations = 0;
    while iterations < spec.max_fix_iters && critic(&cur).is_bad() {
        let cands = fixer.decode(&cur);
        let allow_bad = spec.max_fix_iters > 1;
        match select_fix(&cur, &cands, spec.delta, allow_bad) {
            Some(c) => cur = c.output.clone(),
            None => break,
        }
        iterations += 1;
    }
    let repaired = critic(&cur).is_good() && distance_within(x, &cur, spec.cumulative_delta + 1).is_some();
    Outcome {
        output: cur,
        repaired,
        iterations,
    }
}

/// Fraction of `test` the fixer repairs, overall and by the first-error
/// category of each original input.
pub fn repair_accuracy(fixer: &EditModel, test: &[TokenSeq], spec: &EvalSpec) -> Accuracy {
    let outcomes: Vec<bool> = test.par_iter().map(|x| repair_one(fixer, x, spec).repaired).collect();
    tally(test, &outcomes)
}

pub(crate) fn tally(test: &[TokenSeq], repaired: &[bool]) -> Accuracy {
    let mut total = Tally::default();
    let mut by_category: BTreeMap<ErrorCategory, Tally> = BTreeMap::new();
    for (x, &ok) in test.iter().zip(repaired) {
        let cat = critic(x).category().unwrap_or(ErrorCategory::Other);
        for t in [&mut total, by_category.entry(cat).or_default()] {
            t.n += 1;
            t.repaired += ok as usize;
        }
    }
    Accuracy { total, by_category }
}

pub fn category_histogram(test: &[TokenSeq]) -> BTreeMap<ErrorCategory, usize> {
    let mut out = BTreeMap::new();
    for x in test {
        if let Some(cat) = critic(x).category() {
            *out.entry(cat).or_insert(0) += 1;
        }
    }
    out
}

/// True when `output` differs from `input` by inserting an `<I>` and a
/// later `<D>` (plus any other edits).
pub fn has_paired_indent_insertion(input: &TokenSeq, output: &TokenSeq) -> bool {
    let ops = align(input, output);
    ops.iter()
        .position(|op| *op == EditOp::Ins(Token::INDENT))
        .is_some_and(|i| ops[i + 1..].contains(&EditOp::Ins(Token::DEDENT)))
}

/// One line of a qualitative dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub input: TokenSeq,
    pub output: TokenSeq,
    pub verdict: String,
    pub category: Option<String>,
}

impl Sample {
    pub fn new(input: TokenSeq, output: TokenSeq) -> Sample {
        let c = critic(&output);
        Sample {
            input,
            output,
            verdict: if c.is_good() { "good" } else { "bad" }.to_string(),
            category: c.category().map(|c| c.minor().to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toylang::seq;

    #[test]
    fn identity_fixer_scores_zero() {
        let test = vec![seq("f ( g ( x )"), seq("if x <NL> pass")];
        let acc = repair_accuracy(&EditModel::uniform(), &test, &EvalSpec::default());
        assert_eq!(acc.total, Tally { n: 2, repaired: 0 });
        assert_eq!(acc.total_accuracy(), 0.0);
    }

    #[test]
    fn tally_arithmetic() {
        let test = vec![seq("f ( g ( x )"), seq("f ( g ( y )"), seq("a )"), seq("if x <NL> pass")];
        let acc = tally(&test, &[true, true, true, false]);
        assert_eq!(acc.total_accuracy(), 0.75);
        assert_eq!(acc.category_accuracy(ErrorCategory::UnclosedLeftNested), Some(1.0));
        let recombined: usize = acc.by_category.values().map(|t| t.repaired).sum();
        assert_eq!(recombined, acc.total.repaired);
    }

    #[test]
    fn histogram() {
        assert!(category_histogram(&[]).is_empty());
        let h = category_histogram(&[seq("f ( g ( x )")]);
        assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(ErrorCategory::UnclosedLeftNested, 1)]);
    }

    #[test]
    fn paired_indent_detection() {
        let y = seq("x = 1 <NL> y = 2 <NL>");
        assert!(has_paired_indent_insertion(&y, &seq("x = 1 <NL> <I> y = 2 <NL> <D>")));
        assert!(!has_paired_indent_insertion(&y, &seq("x = 1 <NL> <I> y = 2 <NL>")));
    }

    #[test]
    fn spec_bounds() {
        assert!(EvalSpec::iterative(6).validate().is_err());
        assert_eq!(EvalSpec::iterative(5).cumulative_delta, 25);
        assert!(EvalSpec::default().validate().is_ok());
    }
}
