//! Randomized miniature rounds for the filter contracts.
#![allow(dead_code)]

use bifi_core::pipeline::{initialize, run_round, BreakerDecoding, RoundState};
use bifi_core::{build_corpus, critic, edit_distance, seed, AlgoConfig, Algorithm, Error, NoiseSpec, RepairPair};
use rand::Rng;

pub struct FuzzOutcome {
    pub rounds: usize,
    pub pairs: usize,
    pub violations: Vec<String>,
}

fn check(pairs: &[RepairPair], delta: usize, k: usize, what: &str, out: &mut Vec<String>) {
    for p in pairs {
        if !critic(&p.bad).is_bad() {
            out.push(format!("{what}: bad side passes: {}", p.bad));
        }
        if !critic(&p.good).is_good() {
            out.push(format!("{what}: good side fails: {}", p.good));
        }
        if edit_distance(&p.bad, &p.good) >= delta {
            out.push(format!("{what}: too far: {} / {}", p.bad, p.good));
        }
        if p.round != k {
            out.push(format!("{what}: round {} in round {k}", p.round));
        }
    }
}

/// Runs until `target` rounds succeed, each on a fresh tiny corpus with a
/// random configuration, chaining two rounds per configuration.
pub fn fuzz_rounds(target: usize, rng_seed: u64) -> FuzzOutcome {
    let mut rng = seed::rng(rng_seed);
    let algos = [Algorithm::Bifi, Algorithm::BifiNoRealBad, Algorithm::FixerOnly];
    let mut out = FuzzOutcome {
        rounds: 0,
        pairs: 0,
        violations: Vec::new(),
    };
    let mut corpus_seed = 0;
    while out.rounds < target {
        corpus_seed += 1;
        let n_good = rng.gen_range(10..40);
        let corpus = build_corpus(n_good, rng.gen_range(3..15), 1, corpus_seed).unwrap();
        let noise = NoiseSpec {
            copies_per_good: rng.gen_range(1..5),
            ..NoiseSpec::default()
        };
        let init = initialize(&corpus.good, &noise, corpus_seed, rng.gen_range(1..6)).unwrap();
        for _ in 0..5 {
            let mut cfg = AlgoConfig::new(algos[rng.gen_range(0..algos.len())]);
            cfg.delta = rng.gen_range(2..=5);
            cfg.k_b = rng.gen_range(1..=3);
            cfg.balance_sources = rng.gen_bool(0.5);
            cfg.breaker_decoding = if rng.gen_bool(0.5) {
                BreakerDecoding::Beam
            } else {
                BreakerDecoding::Sample {
                    draws: rng.gen_range(1..6),
                }
            };
            let mut state = RoundState::initial(&init);
            for _ in 0..2 {
                match run_round(&state, &corpus.bad_pool, &corpus.good, &cfg, rng.gen()) {
                    Ok(next) => {
                        check(&next.p_f, cfg.delta, next.k, "P_f", &mut out.violations);
                        check(&next.p_b, cfg.delta, next.k, "P_b", &mut out.violations);
                        out.pairs += next.p_f.len() + next.p_b.len();
                        out.rounds += 1;
                        state = next;
                    }
                    // tiny pools can leave a round without any verified pair
                    Err(Error::EmptyFixerPairs { .. } | Error::EmptyTrainingSet) => break,
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
    out
}
