//! `mtgen` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 run interrupted (resumable). Diagnostics go to stderr as
//! `mtgen: <level>[<kind>]: <message>` lines.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mtgen::affinity::{
    build_fixed_set, bundled_targets, parse_targets, score_requests_csv, scores_csv, AffinityOracle, CsvOracle,
    MockOracle, Target,
};
use mtgen::al_engine::{
    build_report, derive_seed, replay, resume_run, start_run, train_general, write_report, EngineError, RunConfig,
    RunOptions, RunOutcome, StopReason, REPORT_DIR,
};
use mtgen::chem::io::{read_smiles_file, write_smiles_file};
use mtgen::chem::{canonical_smiles, parse_smiles};
use mtgen::descriptors::{drug_scores, passes_thresholds, QedWeights};
use mtgen::metrics::generation_stats;
use mtgen::smarts::{screen, Catalogue, STAGE2_CATALOGUES};
use mtgen::vae::{digest, save_checkpoint, TrainConfig, VaeError};

#[derive(Parser)]
#[command(name = "mtgen", version, about = "Multi-target generative active learning")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Mock,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum CatalogueSet {
    None,
    Motifs,
    Stage2,
    All,
}

#[derive(clap::Args)]
struct OracleOpts {
    #[arg(long, value_enum, default_value = "mock")]
    oracle: OracleArg,
    /// Score CSV for `--oracle csv`.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    oracle_seed: u64,
    /// Targets TSV; bundled targets when omitted.
    #[arg(long)]
    targets: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the general VAE from the run configuration's corpus and model settings.
    TrainGeneral {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Corpus overriding `general_corpus`.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Keep molecules scoring at or below a threshold against every target.
    BuildFixedSet {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        threshold: f64,
        #[command(flatten)]
        oracle: OracleOpts,
        /// Also write every score as CSV.
        #[arg(long)]
        scores_out: Option<PathBuf>,
    },
    /// Start a run in a new directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Stop after this many ledger events (exit code 3).
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Continue an interrupted run.
    Resume {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Rebuild the reports of a run from its ledger.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Output directory; `<run>/reports` when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Screen SMILES against catalogues and QED/SA thresholds; prints TSV.
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        catalogues: CatalogueSet,
        #[arg(long, default_value_t = 0.8)]
        qed_min: f64,
        #[arg(long, default_value_t = 3.0)]
        sa_max: f64,
        /// Print only passing molecules.
        #[arg(long)]
        pass_only: bool,
    },
    /// Score SMILES with an oracle; prints CSV.
    Score {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        oracle: OracleOpts,
        /// Print the request CSV for an external oracle instead of scoring.
        #[arg(long)]
        requests: bool,
    },
    /// Validity, uniqueness and novelty of generated SMILES; prints JSON.
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// Known molecules for novelty.
        #[arg(long)]
        known: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

impl From<VaeError> for Failure {
    fn from(e: VaeError) -> Self {
        match e {
            VaeError::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<mtgen::affinity::AffinityError> for Failure {
    fn from(e: mtgen::affinity::AffinityError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<mtgen::smarts::CatalogueError> for Failure {
    fn from(e: mtgen::smarts::CatalogueError) -> Self {
        Failure::Data(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn info(msg: &str) {
    eprintln!("mtgen: info: {msg}");
}

fn read_smiles(path: &Path) -> Result<Vec<String>, Failure> {
    Ok(read_smiles_file(path)
        .map_err(|e| io_err(path, e))?
        .into_iter()
        .map(|r| r.smiles)
        .collect())
}

fn targets(path: &Option<PathBuf>) -> Result<Vec<Target>, Failure> {
    match path {
        Some(p) => Ok(parse_targets(&fs::read_to_string(p).map_err(|e| io_err(p, e))?)?),
        None => Ok(bundled_targets()),
    }
}

fn oracle(opts: &OracleOpts, targets: &[Target]) -> Result<Box<dyn AffinityOracle>, Failure> {
    Ok(match opts.oracle {
        OracleArg::Mock => Box::new(MockOracle::new(targets, opts.oracle_seed)?),
        OracleArg::Csv => {
            let p = opts
                .scores
                .as_ref()
                .ok_or_else(|| Failure::Usage("--oracle csv needs --scores".into()))?;
            Box::new(CsvOracle::from_file(p)?)
        }
    })
}

enum Done {
    Ok,
    Interrupted,
}

fn outcome(o: RunOutcome, run: &Path) -> Done {
    match o {
        RunOutcome::Completed(reason) => {
            let why = match reason {
                StopReason::CycleCap => "affinity-cycle cap reached",
                StopReason::Patience => "patience exhausted",
            };
            info(&format!("run complete ({why}); reports in {}", run.join(REPORT_DIR).display()));
            Done::Ok
        }
        RunOutcome::Interrupted { events_written } => {
            eprintln!(
                "mtgen: interrupted[resumable]: stopped after {events_written} events; continue with `mtgen resume --run {}`",
                run.display()
            );
            Done::Interrupted
        }
    }
}

fn execute(cmd: Command) -> Result<Done, Failure> {
    match cmd {
        Command::TrainGeneral { config, out, corpus } => {
            let cfg = RunConfig::read(&config)?;
            cfg.general_training.validate()?;
            let corpus = corpus
                .or(cfg.general_corpus.clone())
                .ok_or_else(|| Failure::Usage("no corpus: pass --corpus or set general_corpus".into()))?;
            let smiles = read_smiles(&corpus)?;
            let tc = TrainConfig {
                seed: derive_seed(cfg.seed, "general", 0, 0),
                ..cfg.general_training.clone()
            };
            let (params, loss, skipped) =
                train_general(&smiles, cfg.vae.dims(), derive_seed(cfg.seed, "init", 0, 0), &tc)?;
            save_checkpoint(&params, &out)?;
            if let Some(l) = loss {
                info(&format!("final epoch loss {:.4} (recon {:.4}, kl {:.4})", l.total, l.recon, l.kl));
            }
            info(&format!("skipped {skipped} SMILES that do not tokenize within max_len"));
            println!("{}", digest(&params));
        }
        Command::BuildFixedSet {
            input,
            out,
            threshold,
            oracle: opts,
            scores_out,
        } => {
            let t = targets(&opts.targets)?;
            let o = oracle(&opts, &t)?;
            let fixed = build_fixed_set(&read_smiles(&input)?, o.as_ref(), &t, threshold)?;
            write_smiles_file(&out, fixed.kept.iter().map(String::as_str)).map_err(|e| io_err(&out, e))?;
            if let Some(p) = scores_out {
                fs::write(&p, scores_csv(&fixed.records)).map_err(|e| io_err(&p, e))?;
            }
            info(&format!("kept {} of {} molecules", fixed.kept.len(), fixed.records.len()));
        }
        Command::Run { config, out, stop_after } => {
            let cfg = RunConfig::load(&config)?;
            let o = start_run(cfg, &out, &RunOptions { max_events: stop_after })?;
            return Ok(outcome(o, &out));
        }
        Command::Resume { run, stop_after } => {
            let o = resume_run(&run, &RunOptions { max_events: stop_after })?;
            return Ok(outcome(o, &run));
        }
        Command::Report { run, out } => {
            let state = replay(&run)?;
            let dir = out.unwrap_or_else(|| run.join(REPORT_DIR));
            write_report(&build_report(&state)?, &dir)?;
            if state.completed.is_none() {
                info("run is not complete; reports cover the steps recorded so far");
            }
            info(&format!("reports written to {}", dir.display()));
        }
        Command::Filter {
            input,
            catalogues,
            qed_min,
            sa_max,
            pass_only,
        } => {
            let mut cats = Vec::new();
            if matches!(catalogues, CatalogueSet::Motifs | CatalogueSet::All) {
                cats.push(Catalogue::bundled("custom_motifs")?);
            }
            if matches!(catalogues, CatalogueSet::Stage2 | CatalogueSet::All) {
                for n in STAGE2_CATALOGUES {
                    cats.push(Catalogue::bundled(n)?);
                }
            }
            let mut s = String::new();
            if !pass_only {
                s.push_str("smiles\tpass\tqed\tsa\thits\n");
            }
            for smi in read_smiles(&input)? {
                let Ok(mol) = parse_smiles(&smi) else {
                    if !pass_only {
                        let _ = writeln!(s, "{smi}\tfalse\t\t\tunparseable");
                    }
                    continue;
                };
                let r = screen(&mol, &cats);
                let scores = drug_scores(&mol, QedWeights::Mean).ok();
                let ok = r.pass && scores.is_some_and(|sc| passes_thresholds(&sc, qed_min, sa_max));
                let hits: Vec<String> = r.hits.iter().map(|h| format!("{}:{}", h.catalogue, h.pattern_id)).collect();
                if pass_only {
                    if ok {
                        let _ = writeln!(s, "{}", canonical_smiles(&mol));
                    }
                } else {
                    let (q, a) = scores.map_or((String::new(), String::new()), |sc| {
                        (format!("{:.4}", sc.qed), format!("{:.4}", sc.sa))
                    });
                    let _ = writeln!(s, "{}\t{ok}\t{q}\t{a}\t{}", canonical_smiles(&mol), hits.join(","));
                }
            }
            print!("{s}");
        }
        Command::Score {
            input,
            oracle: opts,
            requests,
        } => {
            let t = targets(&opts.targets)?;
            let mut canon: Vec<String> = read_smiles(&input)?
                .iter()
                .map(|s| {
                    parse_smiles(s)
                        .map(|m| canonical_smiles(&m))
                        .map_err(|e| Failure::Data(format!("{s}: {e}")))
                })
                .collect::<Result<_, _>>()?;
            canon.sort();
            canon.dedup();
            if requests {
                print!("{}", score_requests_csv(&canon, &t));
            } else {
                let o = oracle(&opts, &t)?;
                print!("{}", scores_csv(&o.score_all(&canon, &t)?));
            }
        }
        Command::Stats { input, known } => {
            let generated = read_smiles(&input)?;
            let known: HashSet<String> = match known {
                Some(p) => read_smiles(&p)?
                    .iter()
                    .filter_map(|s| parse_smiles(s).ok().map(|m| canonical_smiles(&m)))
                    .collect(),
                None => HashSet::new(),
            };
            let stats = generation_stats(&generated, &known);
            println!("{}", serde_json_line(&stats));
        }
    }
    Ok(Done::Ok)
}

fn serde_json_line(stats: &mtgen::metrics::GenerationStats) -> String {
    let pct = |v: Option<f64>| v.map_or("null".to_string(), |x| format!("{x:.6}"));
    format!(
        "{{\"n_gen\":{},\"n_val\":{},\"n_uni\":{},\"n_unk\":{},\"validity\":{},\"uniqueness\":{},\"novelty\":{}}}",
        stats.n_gen,
        stats.n_val,
        stats.n_uni,
        stats.n_unk,
        pct(stats.validity),
        pct(stats.uniqueness),
        pct(stats.novelty)
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("mtgen: error[usage]: --threads: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(cli.command) {
        Ok(Done::Ok) => ExitCode::SUCCESS,
        Ok(Done::Interrupted) => ExitCode::from(3),
        Err(Failure::Usage(m)) => {
            eprintln!("mtgen: error[usage]: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("mtgen: error[data]: {m}");
            ExitCode::from(2)
        }
    }
}
