//! Training regimes: synthetic initialization, BIFI, FixerOnly,
//! backtranslation, the two BIFI ablations and synthetic-only continuation.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpusgen::Corpus;
use crate::editmodel::{Candidate, Direction, EditModel, DEFAULT_BEAM};
use crate::error::{Error, Result};
use crate::eval::{repair_accuracy, Accuracy, EvalSpec, Sample};
use crate::io::corpus_hash;
use crate::noiser::{make_synthetic_pairs, NoiseSpec};
use crate::seed::{self, stream};
use crate::toylang::{critic, distance_within, TokenSeq};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Synthetic,
    FixerGenerated,
    BreakerGenerated,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepairPair {
    pub bad: TokenSeq,
    pub good: TokenSeq,
    #[serde(rename = "prov")]
    pub provenance: Provenance,
    pub round: usize,
}

/// Unverified pair produced by backtranslation-style generation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BTPair {
    pub source: TokenSeq,
    pub target: TokenSeq,
    pub round: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Bifi,
    #[serde(rename = "fixeronly")]
    FixerOnly,
    Backtranslation,
    SyntheticOnly,
    /// BIFI with the critic checks removed from both generation steps.
    BifiNoCritic,
    /// BIFI whose fixer trains on breaker outputs only.
    BifiNoRealBad,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Bifi,
        Algorithm::FixerOnly,
        Algorithm::Backtranslation,
        Algorithm::SyntheticOnly,
        Algorithm::BifiNoCritic,
        Algorithm::BifiNoRealBad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bifi => "bifi",
            Algorithm::FixerOnly => "fixeronly",
            Algorithm::Backtranslation => "backtranslation",
            Algorithm::SyntheticOnly => "synthetic-only",
            Algorithm::BifiNoCritic => "bifi-no-critic",
            Algorithm::BifiNoRealBad => "bifi-no-real-bad",
        }
    }

    pub fn from_name(name: &str) -> Option<Algorithm> {
        Algorithm::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn uses_bad_pool(self) -> bool {
        self != Algorithm::SyntheticOnly
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How the breaker proposes corruptions of a good program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BreakerDecoding {
    /// Beam search; candidates in beam order.
    Beam,
    /// Independent draws from the model, distinct outputs in draw order.
    Sample { draws: usize },
}

pub const DEFAULT_BREAKER_DRAWS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub algorithm: Algorithm,
    pub rounds: usize,
    /// Strict bound: generated pairs must lie at distance `< delta`.
    pub delta: usize,
    pub k_b: usize,
    pub bad_budget: f64,
    pub beam: usize,
    pub breaker_decoding: BreakerDecoding,
    /// BIFI fine-tuning gives fixer-generated and breaker-generated pairs
    /// equal shares of weight instead of weighting every pair alike.
    pub balance_sources: bool,
    pub noise: NoiseSpec,
    pub eval: EvalSpec,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        AlgoConfig {
            algorithm: Algorithm::Bifi,
            rounds: 2,
            delta: 5,
            k_b: 2,
            bad_budget: 1.0,
            beam: DEFAULT_BEAM,
            breaker_decoding: BreakerDecoding::Sample {
                draws: DEFAULT_BREAKER_DRAWS,
            },
            balance_sources: true,
            noise: NoiseSpec::default(),
            eval: EvalSpec::default(),
        }
    }
}

impl AlgoConfig {
    pub fn new(algorithm: Algorithm) -> AlgoConfig {
        AlgoConfig {
            algorithm,
            ..AlgoConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bad_budget > 0.0 && self.bad_budget <= 1.0) {
            return Err(Error::InvalidArgument(format!("bad_budget must be in (0, 1], got {}", self.bad_budget)));
        }
        if self.delta == 0 || self.k_b == 0 || self.beam == 0 {
            return Err(Error::InvalidArgument("delta, k_b and beam must be >= 1".into()));
        }
        if self.breaker_decoding == (BreakerDecoding::Sample { draws: 0 }) {
            return Err(Error::InvalidArgument("breaker sampling needs draws >= 1".into()));
        }
        self.noise.validate()?;
        self.eval.validate()
    }

    /// Stable prefix of `bad_pool` available under the budget.
    pub fn budgeted<'a>(&self, bad_pool: &'a [TokenSeq]) -> &'a [TokenSeq] {
        let n = ((bad_pool.len() as f64 * self.bad_budget).round() as usize).clamp(1.min(bad_pool.len()), bad_pool.len());
        &bad_pool[..n]
    }
}

/// Round-0 models and the synthetic data they were trained on.
#[derive(Debug, Clone)]
pub struct Initialization {
    pub fixer: EditModel,
    pub breaker: EditModel,
    /// Training part of the synthetic pairs.
    pub pairs: Vec<RepairPair>,
    /// 1% holdout, never trained on.
    pub dev: Vec<RepairPair>,
    /// Corruptions attempted before the critic filter.
    pub n_attempted: usize,
}

impl Initialization {
    pub fn survival_rate(&self) -> f64 {
        (self.pairs.len() + self.dev.len()) as f64 / self.n_attempted.max(1) as f64
    }
}

fn in_dev_split(seed: u64, i: usize) -> bool {
    seed::derive(seed, stream::DEV_SPLIT, i as u64).is_multiple_of(100)
}

/// Trains the round-0 fixer and breaker on random-noise pairs.
pub fn initialize(good: &[TokenSeq], spec: &NoiseSpec, seed: u64, beam: usize) -> Result<Initialization> {
    spec.validate()?;
    let all = make_synthetic_pairs(good, spec, seed);
    let (dev, pairs): (Vec<_>, Vec<_>) =
        all.into_iter().enumerate().partition(|(i, _)| in_dev_split(seed, *i));
    let pairs: Vec<RepairPair> = pairs.into_iter().map(|(_, p)| p).collect();
    let dev = dev.into_iter().map(|(_, p)| p).collect();
    let fixer = EditModel::train(&pairs, Direction::BadToGood, None)?.with_beam(beam);
    let breaker = EditModel::train(&pairs, Direction::GoodToBad, None)?.with_beam(beam);
    Ok(Initialization {
        fixer,
        breaker,
        pairs,
        dev,
        n_attempted: good.len() * spec.copies_per_good,
    })
}

/// Keeps, for each bad input, the first decoded candidate the critic accepts
/// within distance `< delta`.
pub fn fix_and_filter(fixer: &EditModel, bad: &[TokenSeq], delta: usize, round: usize) -> Vec<RepairPair> {
    bad.par_iter()
        .filter_map(|x| {
            fixer
                .decode(x)
                .into_iter()
                .find(|c| critic(&c.output).is_good() && distance_within(x, &c.output, delta).is_some())
                .map(|c| RepairPair {
                    bad: x.clone(),
                    good: c.output,
                    provenance: Provenance::FixerGenerated,
                    round,
                })
        })
        .collect()
}

/// Breaker proposals for good input `j`, best first.
fn breaker_candidates(breaker: &EditModel, y: &TokenSeq, decoding: BreakerDecoding, seed: u64, j: usize) -> Vec<Candidate> {
    match decoding {
        BreakerDecoding::Beam => breaker.decode(y),
        BreakerDecoding::Sample { draws } => {
            let mut rng = seed::rng(seed::derive(seed, stream::BREAKER, j as u64));
            let mut out: Vec<Candidate> = Vec::with_capacity(draws);
            for _ in 0..draws {
                let c = breaker.sample(y, &mut rng);
                if !out.iter().any(|o| o.output == c.output) {
                    out.push(c);
                }
            }
            out
        }
    }
}

/// Seed of the breaker draws in round `round` of an experiment.
fn breaker_seed(seed: u64, round: usize) -> u64 {
    seed::derive(seed, stream::BREAKER, round as u64)
}

/// Keeps, for each good input, up to `k_b` breaker proposals the critic
/// rejects within distance `< delta`.
pub fn break_and_filter(
    breaker: &EditModel,
    good: &[TokenSeq],
    cfg: &AlgoConfig,
    round: usize,
    seed: u64,
) -> Vec<RepairPair> {
    breaker_outputs(breaker, good, cfg, round, seed, true)
        .into_iter()
        .map(|p| RepairPair {
            bad: p.target,
            good: p.source,
            provenance: Provenance::BreakerGenerated,
            round,
        })
        .collect()
}

/// Up to `k_b` breaker proposals per good input that differ from it and lie
/// within distance `< delta`, whatever the critic says.
pub fn break_unverified(breaker: &EditModel, good: &[TokenSeq], cfg: &AlgoConfig, round: usize, seed: u64) -> Vec<BTPair> {
    breaker_outputs(breaker, good, cfg, round, seed, false)
}

fn breaker_outputs(breaker: &EditModel, good: &[TokenSeq], cfg: &AlgoConfig, round: usize, seed: u64, verify: bool) -> Vec<BTPair> {
    let seed = breaker_seed(seed, round);
    good.par_iter()
        .enumerate()
        .flat_map_iter(|(j, y)| {
            breaker_candidates(breaker, y, cfg.breaker_decoding, seed, j)
                .into_iter()
                .filter(|c| {
                    let kept = if verify { critic(&c.output).is_bad() } else { c.output != *y };
                    kept && distance_within(y, &c.output, cfg.delta).is_some()
                })
                .take(cfg.k_b)
                .map(|c| BTPair {
                    source: y.clone(),
                    target: c.output,
                    round,
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Every distinct non-identity proposal of the breaker within distance
/// `< delta`, with its verdict, as round `round` of an experiment draws
/// them.
pub fn breaker_dump(breaker: &EditModel, good: &[TokenSeq], cfg: &AlgoConfig, round: usize, seed: u64) -> Vec<Sample> {
    let seed = breaker_seed(seed, round);
    good.par_iter()
        .enumerate()
        .flat_map_iter(|(j, y)| {
            breaker_candidates(breaker, y, cfg.breaker_decoding, seed, j)
                .into_iter()
                .filter(|c| c.output != *y && distance_within(y, &c.output, cfg.delta).is_some())
                .map(|c| Sample::new(y.clone(), c.output))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Unverified generation: up to `k` best non-identity candidates within
/// distance `< delta`, whatever the critic says.
pub fn translate_unverified(model: &EditModel, inputs: &[TokenSeq], delta: usize, k: usize, round: usize) -> Vec<BTPair> {
    inputs
        .par_iter()
        .flat_map_iter(|x| {
            model
                .decode(x)
                .into_iter()
                .filter(|c| c.output != *x && distance_within(x, &c.output, delta).is_some())
                .take(k)
                .map(|c| BTPair {
                    source: x.clone(),
                    target: c.output,
                    round,
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Removes repeated `(bad, good)` pairs, keeping the first occurrence.
pub fn dedup_pairs(pairs: impl IntoIterator<Item = RepairPair>) -> Vec<RepairPair> {
    let mut seen = HashSet::new();
    pairs
        .into_iter()
        .filter(|p| seen.insert((p.bad.clone(), p.good.clone())))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RoundState {
    pub k: usize,
    pub fixer: EditModel,
    pub breaker: EditModel,
    pub p_f: Vec<RepairPair>,
    pub p_b: Vec<RepairPair>,
    /// Unverified pairs of the backtranslation-style regimes, as
    /// `(bad input, fixer output)`.
    pub bt_f: Vec<BTPair>,
    /// `(good input, breaker output)`.
    pub bt_b: Vec<BTPair>,
    /// Number of bad inputs the round could draw on.
    pub n_bad_inputs: usize,
}

impl RoundState {
    pub fn initial(init: &Initialization) -> RoundState {
        RoundState {
            k: 0,
            fixer: init.fixer.clone(),
            breaker: init.breaker.clone(),
            p_f: Vec::new(),
            p_b: Vec::new(),
            bt_f: Vec::new(),
            bt_b: Vec::new(),
            n_bad_inputs: 0,
        }
    }

    /// The fixer-side pair count: verified or not.
    pub fn n_pf(&self) -> usize {
        self.p_f.len() + self.bt_f.len()
    }

    pub fn n_pb(&self) -> usize {
        self.p_b.len() + self.bt_b.len()
    }

    fn next(&self, fixer: EditModel, breaker: EditModel, n_bad_inputs: usize) -> RoundState {
        RoundState {
            k: self.k + 1,
            fixer,
            breaker,
            p_f: Vec::new(),
            p_b: Vec::new(),
            bt_f: Vec::new(),
            bt_b: Vec::new(),
            n_bad_inputs,
        }
    }
}

fn oriented(pairs: &[RepairPair], direction: Direction) -> Vec<(&TokenSeq, &TokenSeq)> {
    pairs
        .iter()
        .map(|p| match direction {
            Direction::BadToGood => (&p.bad, &p.good),
            Direction::GoodToBad => (&p.good, &p.bad),
        })
        .collect()
}

/// Weight that gives a round's pairs at least the mass of the decayed base.
pub fn round_weight(base: &EditModel, n_pairs: usize) -> f64 {
    (base.decay * base.mass / n_pairs.max(1) as f64).max(1.0)
}

/// Fine-tunes `base` on one round's pairs, up-weighted by [`round_weight`].
pub fn fine_tune(pairs: &[(&TokenSeq, &TokenSeq)], base: &EditModel) -> Result<EditModel> {
    EditModel::train_weighted(pairs, Some(base), round_weight(base, pairs.len()))
}

/// Fine-tunes on several pair sets, giving each non-empty set an equal
/// share of the decayed base mass (never less than weight 1).
pub fn fine_tune_parts(parts: &[&[(&TokenSeq, &TokenSeq)]], base: &EditModel) -> Result<EditModel> {
    let live: Vec<&[(&TokenSeq, &TokenSeq)]> = parts.iter().copied().filter(|p| !p.is_empty()).collect();
    let share = base.decay * base.mass / live.len().max(1) as f64;
    let weighted: Vec<(&[(&TokenSeq, &TokenSeq)], f64)> = live.iter().map(|p| (*p, (share / p.len() as f64).max(1.0))).collect();
    EditModel::train_mixture(&weighted, Some(base))
}

fn verified_fixes(state: &RoundState, d_bad: &[TokenSeq], cfg: &AlgoConfig) -> Result<Vec<RepairPair>> {
    let k = state.k + 1;
    let p_f = fix_and_filter(&state.fixer, d_bad, cfg.delta, k);
    if p_f.is_empty() {
        return Err(Error::EmptyFixerPairs {
            round: k,
            n_bad: d_bad.len(),
        });
    }
    Ok(p_f)
}

pub fn run_round_bifi(state: &RoundState, d_bad: &[TokenSeq], d_good: &[TokenSeq], cfg: &AlgoConfig, seed: u64) -> Result<RoundState> {
    bifi_round(state, d_bad, d_good, cfg, seed, true)
}

fn bifi_round(
    state: &RoundState,
    d_bad: &[TokenSeq],
    d_good: &[TokenSeq],
    cfg: &AlgoConfig,
    seed: u64,
    real_bad: bool,
) -> Result<RoundState> {
    let k = state.k + 1;
    let p_f = verified_fixes(state, d_bad, cfg)?;
    let breaker = fine_tune(&oriented(&p_f, Direction::GoodToBad), &state.breaker)?;
    let p_b = break_and_filter(&breaker, d_good, cfg, k, seed);
    let train_set = if real_bad {
        dedup_pairs(p_f.iter().chain(&p_b).cloned())
    } else {
        dedup_pairs(p_b.iter().cloned())
    };
    let fixer = if cfg.balance_sources {
        let (real, generated): (Vec<RepairPair>, Vec<RepairPair>) =
            train_set.into_iter().partition(|p| p.provenance == Provenance::FixerGenerated);
        let parts = [oriented(&real, Direction::BadToGood), oriented(&generated, Direction::BadToGood)];
        fine_tune_parts(&[&parts[0], &parts[1]], &state.fixer)?
    } else {
        fine_tune(&oriented(&train_set, Direction::BadToGood), &state.fixer)?
    };
    let mut next = state.next(fixer, breaker, d_bad.len());
    next.p_f = p_f;
    next.p_b = p_b;
    Ok(next)
}

pub fn run_round_fixeronly(state: &RoundState, d_bad: &[TokenSeq], cfg: &AlgoConfig) -> Result<RoundState> {
    let p_f = verified_fixes(state, d_bad, cfg)?;
    let fixer = fine_tune(&oriented(&p_f, Direction::BadToGood), &state.fixer)?;
    let mut next = state.next(fixer, state.breaker.clone(), d_bad.len());
    next.p_f = p_f;
    Ok(next)
}

pub fn run_round_backtranslation(state: &RoundState, d_bad: &[TokenSeq], d_good: &[TokenSeq], cfg: &AlgoConfig, seed: u64) -> Result<RoundState> {
    unverified_round(state, d_bad, d_good, cfg, seed, false)
}

/// Backtranslation when `real_bad` is false; the no-critic BIFI ablation
/// when true.
fn unverified_round(
    state: &RoundState,
    d_bad: &[TokenSeq],
    d_good: &[TokenSeq],
    cfg: &AlgoConfig,
    seed: u64,
    real_bad: bool,
) -> Result<RoundState> {
    let k = state.k + 1;
    let bt_f = translate_unverified(&state.fixer, d_bad, cfg.delta, 1, k);
    if bt_f.is_empty() {
        return Err(Error::EmptyFixerPairs {
            round: k,
            n_bad: d_bad.len(),
        });
    }
    // Breaker: fixer output -> original bad input.
    let fix_pairs: Vec<(&TokenSeq, &TokenSeq)> = bt_f.iter().map(|p| (&p.target, &p.source)).collect();
    let breaker = fine_tune(&fix_pairs, &state.breaker)?;
    let bt_b = break_unverified(&breaker, d_good, cfg, k, seed);
    // Fixer: breaker output -> good input, plus bad input -> fixer output.
    let mut seen = HashSet::new();
    let fixer_pairs: Vec<(&TokenSeq, &TokenSeq)> = bt_b
        .iter()
        .map(|p| (&p.target, &p.source))
        .chain(bt_f.iter().filter(|_| real_bad).map(|p| (&p.source, &p.target)))
        .filter(|pair| seen.insert(*pair))
        .collect();
    if fixer_pairs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let fixer = fine_tune(&fixer_pairs, &state.fixer)?;
    let mut next = state.next(fixer, breaker, d_bad.len());
    next.bt_f = bt_f;
    next.bt_b = bt_b;
    Ok(next)
}

/// Continues training the fixer on fresh random-noise pairs.
pub fn run_round_synthetic(state: &RoundState, d_good: &[TokenSeq], cfg: &AlgoConfig, seed: u64) -> Result<RoundState> {
    let k = state.k + 1;
    let pairs: Vec<RepairPair> = make_synthetic_pairs(d_good, &cfg.noise, seed::derive(seed, stream::CONTINUATION, k as u64))
        .into_iter()
        .map(|p| RepairPair { round: k, ..p })
        .collect();
    let fixer = fine_tune(&oriented(&pairs, Direction::BadToGood), &state.fixer)?;
    Ok(state.next(fixer, state.breaker.clone(), 0))
}

pub fn run_round(state: &RoundState, d_bad: &[TokenSeq], d_good: &[TokenSeq], cfg: &AlgoConfig, seed: u64) -> Result<RoundState> {
    match cfg.algorithm {
        Algorithm::Bifi => run_round_bifi(state, d_bad, d_good, cfg, seed),
        Algorithm::FixerOnly => run_round_fixeronly(state, d_bad, cfg),
        Algorithm::Backtranslation => run_round_backtranslation(state, d_bad, d_good, cfg, seed),
        Algorithm::SyntheticOnly => run_round_synthetic(state, d_good, cfg, seed),
        Algorithm::BifiNoCritic => unverified_round(state, d_bad, d_good, cfg, seed, true),
        Algorithm::BifiNoRealBad => bifi_round(state, d_bad, d_good, cfg, seed, false),
    }
}

/// Per-round evaluation and data statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub k: usize,
    pub total_acc: f64,
    pub n_test: usize,
    pub n_repaired: usize,
    /// Accuracy per minor category.
    pub by_category: BTreeMap<String, f64>,
    pub category_counts: BTreeMap<String, usize>,
    pub by_major: BTreeMap<String, f64>,
    pub n_pf: usize,
    pub n_pb: usize,
    /// `n_pf` over the bad inputs offered to the fixer.
    pub fix_survival: f64,
    /// `n_pb` over `k_b` times the good inputs offered to the breaker.
    pub break_survival: f64,
}

impl RoundMetrics {
    pub fn from_accuracy(k: usize, acc: &Accuracy, n_pf: usize, n_pb: usize, fix_survival: f64, break_survival: f64) -> RoundMetrics {
        RoundMetrics {
            k,
            total_acc: acc.total_accuracy(),
            n_test: acc.total.n,
            n_repaired: acc.total.repaired,
            by_category: acc.by_category.iter().map(|(c, t)| (c.minor().to_string(), t.accuracy())).collect(),
            category_counts: acc.by_category.iter().map(|(c, t)| (c.minor().to_string(), t.n)).collect(),
            by_major: acc.by_major().iter().map(|(m, t)| (m.name().to_string(), t.accuracy())).collect(),
            n_pf,
            n_pb,
            fix_survival,
            break_survival,
        }
    }
}

/// Statistics of the round-0 synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticStats {
    pub n_attempted: usize,
    pub n_train: usize,
    pub n_dev: usize,
    pub survival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: u32,
    pub corpus_hash: String,
    pub config: AlgoConfig,
    pub seed: u64,
    pub n_bad_available: usize,
    pub synthetic: SyntheticStats,
    pub rounds: Vec<RoundMetrics>,
    /// Wall-clock milliseconds per round; kept out of the JSON so the
    /// report stays a pure function of its inputs.
    #[serde(skip)]
    pub wall_ms: Vec<u64>,
}

impl ExperimentReport {
    pub fn final_round(&self) -> &RoundMetrics {
        self.rounds.last().expect("report has round 0")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Everything an experiment reads. Learners see `good` and `bad_pool`;
/// `bad_test` is used for evaluation only.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentData<'a> {
    pub good: &'a [TokenSeq],
    pub bad_pool: &'a [TokenSeq],
    pub bad_test: &'a [TokenSeq],
    pub corpus_hash: &'a str,
}

/// Runs initialization, `cfg.rounds` rounds and an evaluation after each.
pub fn run_experiment(corpus: &Corpus, cfg: &AlgoConfig, seed: u64) -> Result<ExperimentReport> {
    let hash = corpus_hash(corpus)?;
    let data = ExperimentData {
        good: &corpus.good,
        bad_pool: &corpus.bad_pool,
        bad_test: &corpus.bad_test,
        corpus_hash: &hash,
    };
    cfg.validate()?;
    let init = initialize(data.good, &cfg.noise, seed, cfg.beam)?;
    run_experiment_from(&init, None, data, cfg, seed, |_, _| Ok(()))
}

/// Like [`run_experiment`] but reuses round-0 models and, optionally, their
/// evaluation. `on_round` sees every state, round 0 included, with its
/// metrics.
pub fn run_experiment_from(
    init: &Initialization,
    round0_eval: Option<&Accuracy>,
    data: ExperimentData<'_>,
    cfg: &AlgoConfig,
    seed: u64,
    mut on_round: impl FnMut(&RoundState, &RoundMetrics) -> Result<()>,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let d_bad = if cfg.algorithm.uses_bad_pool() {
        cfg.budgeted(data.bad_pool)
    } else {
        &[]
    };
    let mut state = RoundState::initial(init);
    let start = Instant::now();
    let acc0 = match round0_eval {
        Some(acc) => acc.clone(),
        None => repair_accuracy(&state.fixer, data.bad_test, &cfg.eval),
    };
    let m0 = RoundMetrics::from_accuracy(0, &acc0, 0, 0, 0.0, 0.0);
    on_round(&state, &m0)?;
    let mut rounds = vec![m0];
    let mut wall_ms = vec![start.elapsed().as_millis() as u64];

    for _ in 0..cfg.rounds {
        let start = Instant::now();
        state = run_round(&state, d_bad, data.good, cfg, seed)?;
        let acc = repair_accuracy(&state.fixer, data.bad_test, &cfg.eval);
        let uses_breaker = !matches!(cfg.algorithm, Algorithm::FixerOnly | Algorithm::SyntheticOnly);
        let break_survival = if uses_breaker {
            state.n_pb() as f64 / (cfg.k_b * data.good.len()).max(1) as f64
        } else {
            0.0
        };
        let m = RoundMetrics::from_accuracy(
            state.k,
            &acc,
            state.n_pf(),
            state.n_pb(),
            state.n_pf() as f64 / d_bad.len().max(1) as f64,
            break_survival,
        );
        on_round(&state, &m)?;
        rounds.push(m);
        wall_ms.push(start.elapsed().as_millis() as u64);
    }

    Ok(ExperimentReport {
        version: REPORT_VERSION,
        corpus_hash: data.corpus_hash.to_string(),
        config: *cfg,
        seed,
        n_bad_available: d_bad.len(),
        synthetic: SyntheticStats {
            n_attempted: init.n_attempted,
            n_train: init.pairs.len(),
            n_dev: init.dev.len(),
            survival: init.survival_rate(),
        },
        rounds,
        wall_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toylang::seq;

    #[test]
    fn uniform_fixer_fixes_nothing() {
        let bad = vec![seq("f ( g ( x )"), seq("if x <NL> pass")];
        assert!(fix_and_filter(&EditModel::uniform(), &bad, 5, 1).is_empty());
        let state = RoundState::initial(&Initialization {
            fixer: EditModel::uniform(),
            breaker: EditModel::uniform(),
            pairs: vec![],
            dev: vec![],
            n_attempted: 0,
        });
        let err = run_round_bifi(&state, &bad, &[], &AlgoConfig::default(), 1).unwrap_err();
        assert!(matches!(err, Error::EmptyFixerPairs { round: 1, n_bad: 2 }));
        let err = run_round_bifi(&state, &[], &[], &AlgoConfig::default(), 1).unwrap_err();
        assert!(matches!(err, Error::EmptyFixerPairs { n_bad: 0, .. }));
    }

    #[test]
    fn budget_prefix() {
        let pool: Vec<TokenSeq> = (0..10).map(|_| seq("a )")).collect();
        let mut cfg = AlgoConfig::default();
        cfg.bad_budget = 0.5;
        assert_eq!(cfg.budgeted(&pool).len(), 5);
        cfg.bad_budget = 0.1;
        assert_eq!(cfg.budgeted(&pool).len(), 1);
        cfg.bad_budget = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dedup_keeps_first() {
        let p = RepairPair {
            bad: seq("a )"),
            good: seq("a"),
            provenance: Provenance::FixerGenerated,
            round: 1,
        };
        let q = RepairPair {
            provenance: Provenance::BreakerGenerated,
            ..p.clone()
        };
        assert_eq!(dedup_pairs([p.clone(), q]), vec![p]);
    }

    #[test]
    fn pair_json_fields() {
        let p = RepairPair {
            bad: seq("a )"),
            good: seq("a"),
            provenance: Provenance::BreakerGenerated,
            round: 2,
        };
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"bad":"a )","good":"a","prov":"breaker-generated","round":2}"#);
        assert_eq!(serde_json::from_str::<RepairPair>(&text).unwrap(), p);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(Algorithm::from_name(a.name()), Some(a));
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{}\"", a.name()));
        }
    }
}
