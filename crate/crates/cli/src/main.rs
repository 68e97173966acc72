use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use bifi_core::eval::{has_paired_indent_insertion, repair_one, Sample};
use bifi_core::io::{load_corpus, read_json, read_test_set, save_corpus, write_bytes, write_json, write_jsonl};
use bifi_core::pipeline::{breaker_dump, initialize, run_experiment_from, ExperimentData};
use bifi_core::{build_corpus, critic, repair_accuracy, AlgoConfig, Algorithm, EditModel, Error, EvalSpec, ExperimentReport};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "bifi", version, about = "Critic-guided repair learning on a toy token language")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded corpus directory.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        n_good: usize,
        #[arg(long, default_value_t = 2_000)]
        n_bad_pool: usize,
        #[arg(long, default_value_t = 2_000)]
        n_bad_test: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Train one algorithm and write per-round artifacts.
    Run {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "bifi")]
        algo: String,
        #[arg(long, default_value_t = 2)]
        rounds: usize,
        #[arg(long, default_value_t = 1.0)]
        bad_budget: f64,
        #[arg(long, default_value_t = 2)]
        k_b: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        max_fix_iters: usize,
        /// Experiment directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Repair accuracy of a saved fixer on a JSONL test set.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 1)]
        max_fix_iters: usize,
    },
    /// Print the metrics of an experiment directory.
    Report {
        #[arg(long)]
        exp: PathBuf,
        #[arg(long)]
        csv: bool,
        /// Also dump N fixer and N breaker outputs.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Seeds x algorithms x budgets, with an aggregate.
    Sweep {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1.0,0.5,0.1")]
        budgets: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "bifi,fixeronly")]
        algos: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 2)]
        rounds: usize,
        #[arg(long, default_value = "out/sweep")]
        out: PathBuf,
    },
}

/// Written next to metrics.json so later commands can find the corpus.
#[derive(Serialize, Deserialize)]
struct RunInfo {
    corpus: PathBuf,
    corpus_hash: String,
}

#[derive(Serialize)]
struct Timing {
    wall_ms: Vec<u64>,
}

fn algorithm(name: &str) -> Result<Algorithm> {
    Algorithm::from_name(name).with_context(|| {
        let known: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
        format!("unknown algorithm {name:?}; expected one of {}", known.join(", "))
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    Ok(write_bytes(path, text.as_bytes())?)
}

fn report_json(report: &ExperimentReport) -> Result<String> {
    Ok(report.to_json()? + "\n")
}

fn gen_corpus(out: &Path, n_good: usize, n_bad_pool: usize, n_bad_test: usize, seed: u64) -> Result<()> {
    let corpus = build_corpus(n_good, n_bad_pool, n_bad_test, seed)?;
    let manifest = save_corpus(out, &corpus)?;
    println!("wrote {} (hash {})", out.display(), manifest.hash);
    Ok(())
}

fn run(corpus_dir: &Path, cfg: &AlgoConfig, seed: u64, out: &Path) -> Result<()> {
    cfg.validate()?;
    let (corpus, manifest) = load_corpus(corpus_dir)?;
    let data = ExperimentData {
        good: &corpus.good,
        bad_pool: &corpus.bad_pool,
        bad_test: &corpus.bad_test,
        corpus_hash: &manifest.hash,
    };
    let init = initialize(data.good, &cfg.noise, seed, cfg.beam)?;
    let report = run_experiment_from(&init, None, data, cfg, seed, |state, m| {
        let dir = out.join(format!("round{}", state.k));
        write_jsonl(&dir.join("pairs_f.jsonl"), &state.p_f)?;
        write_jsonl(&dir.join("pairs_b.jsonl"), &state.p_b)?;
        if !state.bt_f.is_empty() || !state.bt_b.is_empty() {
            write_jsonl(&dir.join("bt_f.jsonl"), &state.bt_f)?;
            write_jsonl(&dir.join("bt_b.jsonl"), &state.bt_b)?;
        }
        write_bytes(&dir.join("fixer.model"), state.fixer.to_json()?.as_bytes())?;
        write_bytes(&dir.join("breaker.model"), state.breaker.to_json()?.as_bytes())?;
        write_json(&dir.join("metrics.json"), m)?;
        eprintln!("round {}: acc {:.3} |P_f| {} |P_b| {}", m.k, m.total_acc, m.n_pf, m.n_pb);
        Ok(())
    })?;
    write_text(&out.join("metrics.json"), &report_json(&report)?)?;
    write_json(&out.join("timing.json"), &Timing { wall_ms: report.wall_ms.clone() })?;
    let corpus_abs = corpus_dir.canonicalize().unwrap_or_else(|_| corpus_dir.to_path_buf());
    write_json(
        &out.join("run.json"),
        &RunInfo {
            corpus: corpus_abs,
            corpus_hash: manifest.hash,
        },
    )?;
    println!("{}", out.join("metrics.json").display());
    Ok(())
}

fn eval(model: &Path, test: &Path, max_fix_iters: usize) -> Result<()> {
    let spec = EvalSpec::iterative(max_fix_iters);
    spec.validate()?;
    let model = EditModel::load(model)?;
    let test = read_test_set(test)?;
    let acc = repair_accuracy(&model, &test, &spec);
    let by_category: BTreeMap<String, f64> = acc
        .by_category
        .iter()
        .map(|(c, t)| (c.minor().to_string(), t.accuracy()))
        .collect();
    let out = serde_json::json!({
        "n": acc.total.n,
        "repaired": acc.total.repaired,
        "total_acc": acc.total_accuracy(),
        "by_category": by_category,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn fmt_acc(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn table(report: &ExperimentReport) -> String {
    let mut s = String::new();
    let rounds = &report.rounds;
    let _ = writeln!(s, "{} seed {} corpus {}", report.config.algorithm, report.seed, &report.corpus_hash[..12.min(report.corpus_hash.len())]);
    let _ = write!(s, "{:<28}{:>6}", "category", "n");
    for r in rounds {
        let _ = write!(s, "{:>9}", format!("round{}", r.k));
    }
    s.push('\n');
    for (cat, n) in &rounds[0].category_counts {
        let _ = write!(s, "{cat:<28}{n:>6}");
        for r in rounds {
            let _ = write!(s, "{:>9}", r.by_category.get(cat).map_or("-".into(), |&a| fmt_acc(a)));
        }
        s.push('\n');
    }
    let _ = write!(s, "{:<28}{:>6}", "total", rounds[0].n_test);
    for r in rounds {
        let _ = write!(s, "{:>9}", fmt_acc(r.total_acc));
    }
    s.push('\n');
    let _ = write!(s, "{:<34}", "|P_f| / |P_b|");
    for r in rounds {
        let _ = write!(s, "{:>9}", format!("{}/{}", r.n_pf, r.n_pb));
    }
    s.push('\n');
    s
}

/// Rows are categories plus `total`; columns are rounds. Values print in
/// shortest round-trip form so re-parsing gives the metrics.json numbers.
fn csv(report: &ExperimentReport) -> String {
    let rounds = &report.rounds;
    let mut s = String::from("category,n");
    for r in rounds {
        let _ = write!(s, ",{}_round{}", report.config.algorithm, r.k);
    }
    s.push('\n');
    for (cat, n) in &rounds[0].category_counts {
        let _ = write!(s, "{cat},{n}");
        for r in rounds {
            let _ = write!(s, ",{}", r.by_category[cat]);
        }
        s.push('\n');
    }
    let _ = write!(s, "total,{}", rounds[0].n_test);
    for r in rounds {
        let _ = write!(s, ",{}", r.total_acc);
    }
    s.push('\n');
    s
}

fn final_round_dir(exp: &Path, report: &ExperimentReport) -> PathBuf {
    exp.join(format!("round{}", report.final_round().k))
}

fn dump_samples(exp: &Path, report: &ExperimentReport, n: usize) -> Result<()> {
    let info: RunInfo = read_json(&exp.join("run.json"))?;
    let (corpus, manifest) = load_corpus(&info.corpus)?;
    if manifest.hash != report.corpus_hash {
        return Err(Error::CorpusHashMismatch {
            expected: report.corpus_hash.clone(),
            found: manifest.hash,
        }
        .into());
    }
    let f0 = EditModel::load(&exp.join("round0").join("fixer.model"))?;
    let last = final_round_dir(exp, report);
    let fk = EditModel::load(&last.join("fixer.model"))?;
    let spec = report.config.eval;
    let mut fixes = Vec::new();
    for x in corpus.bad_test.iter().take(n) {
        fixes.push(Sample::new(x.clone(), repair_one(&f0, x, &spec).output));
        fixes.push(Sample::new(x.clone(), repair_one(&fk, x, &spec).output));
    }
    // the first-round breaker is the one trained on real fixer pairs
    let b_round = report.rounds.len().min(2) - 1;
    let b_dir = exp.join(format!("round{b_round}"));
    let breaker = EditModel::load(&b_dir.join("breaker.model"))?;
    let take = n.min(corpus.good.len());
    let breaks = breaker_dump(&breaker, &corpus.good[..take], &report.config, b_round, report.seed);
    write_jsonl(&exp.join("samples_fixer.jsonl"), &fixes)?;
    write_jsonl(&exp.join("samples_breaker.jsonl"), &breaks)?;
    println!("fixer samples (round 0, then round {}):", report.final_round().k);
    for pair in fixes.chunks(2) {
        let cat = critic(&pair[0].input).category().map_or("-", |c| c.minor());
        println!("  [{cat}] {}", pair[0].input);
        println!("    f0 ({}) {}", pair[0].verdict, pair[0].output);
        println!("    fk ({}) {}", pair[1].verdict, pair[1].output);
    }
    println!("breaker samples ({}):", b_dir.display());
    for s in &breaks {
        println!("  {}  =>  ({}) {}", s.input, s.verdict, s.output);
    }
    let paired = breaks.iter().filter(|s| has_paired_indent_insertion(&s.input, &s.output)).count();
    println!("paired <I>/<D> insertions among breaker samples: {paired} of {}", breaks.len());
    Ok(())
}

fn report(exp: &Path, as_csv: bool, samples: Option<usize>) -> Result<()> {
    let report: ExperimentReport = read_json(&exp.join("metrics.json"))?;
    if report.rounds.is_empty() {
        bail!("{}: metrics.json has no rounds", exp.display());
    }
    if as_csv {
        print!("{}", csv(&report));
    } else {
        print!("{}", table(&report));
    }
    if let Some(n) = samples {
        dump_samples(exp, &report, n)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AggregateRow {
    algo: String,
    budget: f64,
    seeds: Vec<u64>,
    final_acc: Vec<f64>,
    mean: f64,
    min: f64,
    max: f64,
}

fn sweep(corpus_dir: &Path, budgets: &[f64], algos: &[String], seeds: &[u64], rounds: usize, out: &Path) -> Result<()> {
    let algos: Vec<Algorithm> = algos.iter().map(|a| algorithm(a)).collect::<Result<_>>()?;
    if budgets.is_empty() || algos.is_empty() || seeds.is_empty() {
        bail!("sweep needs at least one budget, algorithm and seed");
    }
    let (corpus, manifest) = load_corpus(corpus_dir)?;
    let data = ExperimentData {
        good: &corpus.good,
        bad_pool: &corpus.bad_pool,
        bad_test: &corpus.bad_test,
        corpus_hash: &manifest.hash,
    };
    let mut finals: BTreeMap<(Algorithm, String), Vec<(u64, f64)>> = BTreeMap::new();
    for &seed in seeds {
        let base = AlgoConfig::default();
        let init = initialize(data.good, &base.noise, seed, base.beam)?;
        let acc0 = repair_accuracy(&init.fixer, data.bad_test, &base.eval);
        for &algo in &algos {
            for &budget in budgets {
                let cfg = AlgoConfig {
                    algorithm: algo,
                    rounds,
                    bad_budget: budget,
                    ..base
                };
                let rep = run_experiment_from(&init, Some(&acc0), data, &cfg, seed, |_, _| Ok(()))?;
                let dir = out.join(format!("{algo}-b{budget}-s{seed}"));
                write_text(&dir.join("metrics.json"), &report_json(&rep)?)?;
                write_json(&dir.join("timing.json"), &Timing { wall_ms: rep.wall_ms.clone() })?;
                let acc = rep.final_round().total_acc;
                eprintln!("{algo} budget {budget} seed {seed}: {}", fmt_acc(acc));
                finals.entry((algo, budget.to_string())).or_default().push((seed, acc));
            }
        }
    }
    let rows: Vec<AggregateRow> = finals
        .into_iter()
        .map(|((algo, budget), runs)| {
            let accs: Vec<f64> = runs.iter().map(|r| r.1).collect();
            AggregateRow {
                algo: algo.to_string(),
                budget: budget.parse().expect("formatted from f64"),
                seeds: runs.iter().map(|r| r.0).collect(),
                mean: accs.iter().sum::<f64>() / accs.len() as f64,
                min: accs.iter().copied().fold(f64::INFINITY, f64::min),
                max: accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                final_acc: accs,
            }
        })
        .collect();
    write_json(&out.join("aggregate.json"), &rows)?;
    println!("{:<20}{:>8}{:>10}{:>16}", "algo", "budget", "mean", "range");
    for r in &rows {
        println!(
            "{:<20}{:>8}{:>10}{:>16}",
            r.algo,
            r.budget,
            fmt_acc(r.mean),
            format!("{}..{}", fmt_acc(r.min), fmt_acc(r.max))
        );
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCorpus {
            out,
            n_good,
            n_bad_pool,
            n_bad_test,
            seed,
        } => gen_corpus(&out, n_good, n_bad_pool, n_bad_test, seed),
        Command::Run {
            corpus,
            algo,
            rounds,
            bad_budget,
            k_b,
            seed,
            max_fix_iters,
            out,
        } => {
            let cfg = AlgoConfig {
                algorithm: algorithm(&algo)?,
                rounds,
                bad_budget,
                k_b,
                eval: EvalSpec::iterative(max_fix_iters),
                ..AlgoConfig::default()
            };
            run(&corpus, &cfg, seed, &out)
        }
        Command::Eval {
            model,
            test,
            max_fix_iters,
        } => eval(&model, &test, max_fix_iters),
        Command::Report { exp, csv, samples } => report(&exp, csv, samples),
        Command::Sweep {
            corpus,
            budgets,
            algos,
            seeds,
            rounds,
            out,
        } => sweep(&corpus, &budgets, &algos, &seeds, rounds, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
