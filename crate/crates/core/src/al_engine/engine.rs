//! Run driver: the chemical and affinity cycles, checkpoints and resume.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{OracleKind, RunConfig, SmartsStage};
use super::ledger::{read_ledger, LedgerWriter};
use super::report::{build_report, write_report};
use super::state::{
    AffinityCycleRecord, CheckpointRef, ChemicalCycleRecord, Event, FilterStage, FinetuneRecord, RunCompleted,
    RunStarted, RunState, Step, StopReason,
};
use super::EngineError;
use crate::affinity::{
    advance, bundled_targets, evaluate, parse_targets, AffinityOracle, CsvOracle, MockOracle, ScoreCache, Target,
};
use crate::chem::io::read_smiles_file;
use crate::chem::{canonical_smiles, parse_smiles, MolGraph};
use crate::descriptors::{drug_scores, passes_thresholds};
use crate::fingerprints::{morgan4, passes_diversity, Fingerprint};
use crate::metrics::generation_stats;
use crate::smarts::{screen, Catalogue, STAGE2_CATALOGUES};
use crate::vae::{
    digest, finetune, from_bytes, sample, to_bytes, train, TrainConfig, VaeParams, Vocabulary, VOCAB_SIZE,
};

pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const REPORT_DIR: &str = "reports";

/// Seed for one purpose within one cycle, independent of execution history.
pub fn derive_seed(master: u64, tag: &str, a: usize, c: usize) -> u64 {
    let h = Sha256::digest(format!("{master}:{tag}:{a}:{c}"));
    u64::from_le_bytes(h[..8].try_into().expect("eight bytes"))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Stop after writing this many new ledger events, leaving a resumable run.
    pub max_events: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    Completed(StopReason),
    Interrupted { events_written: usize },
}

fn canonicalize_all(smiles: &[String]) -> Result<Vec<String>, EngineError> {
    let set: Result<BTreeSet<String>, EngineError> = smiles
        .iter()
        .map(|s| {
            parse_smiles(s)
                .map(|m| canonical_smiles(&m))
                .map_err(|e| EngineError::Data(format!("{s}: {e}")))
        })
        .collect();
    Ok(set?.into_iter().collect())
}

fn read_smiles(path: &Path) -> Result<Vec<String>, EngineError> {
    let records = read_smiles_file(path).map_err(|e| EngineError::Data(format!("{}: {e}", path.display())))?;
    Ok(records.into_iter().map(|r| r.smiles).collect())
}

/// Token sequences for the SMILES that fit, and the number skipped.
pub fn encode_corpus(vocab: &Vocabulary, smiles: &[String], max_len: usize) -> (Vec<Vec<usize>>, usize) {
    let mut out = Vec::with_capacity(smiles.len());
    let mut skipped = 0;
    for s in smiles {
        match vocab.encode(s, max_len) {
            Ok(t) => out.push(t),
            Err(_) => skipped += 1,
        }
    }
    (out, skipped)
}

fn load_catalogues(cfg: &RunConfig) -> Result<(Vec<Catalogue>, Vec<Catalogue>), EngineError> {
    let custom = match &cfg.custom_motifs {
        Some(p) => Catalogue::from_file(p)?,
        None => Catalogue::bundled("custom_motifs")?,
    };
    let stage2 = match &cfg.stage2_catalogues {
        Some(paths) => paths.iter().map(|p| Catalogue::from_file(p)).collect::<Result<_, _>>()?,
        None => STAGE2_CATALOGUES
            .iter()
            .map(|n| Catalogue::bundled(n))
            .collect::<Result<_, _>>()?,
    };
    Ok((vec![custom], stage2))
}

fn make_oracle(cfg: &RunConfig, targets: &[Target]) -> Result<Box<dyn AffinityOracle>, EngineError> {
    Ok(match cfg.oracle {
        OracleKind::Mock => Box::new(MockOracle::new(targets, cfg.oracle_seed)?),
        OracleKind::Csv => {
            let path = cfg.oracle_scores.as_ref().ok_or_else(|| EngineError::Config("oracle_scores missing".into()))?;
            Box::new(CsvOracle::from_file(path)?)
        }
    })
}

fn load_targets(cfg: &RunConfig) -> Result<Vec<Target>, EngineError> {
    match &cfg.targets {
        Some(p) => Ok(parse_targets(&fs::read_to_string(p)?)?),
        None => Ok(bundled_targets()),
    }
}

/// Writes through a temporary file so a crash never leaves a partial checkpoint.
fn write_checkpoint(dir: &Path, name: &str, p: &VaeParams) -> Result<CheckpointRef, EngineError> {
    let rel = format!("{CHECKPOINT_DIR}/{name}");
    let path = dir.join(&rel);
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, to_bytes(p))?;
    fs::rename(&tmp, &path)?;
    Ok(CheckpointRef {
        file: rel,
        digest: digest(p),
    })
}

fn read_checkpoint(dir: &Path, r: &CheckpointRef) -> Result<VaeParams, EngineError> {
    let bytes = fs::read(dir.join(&r.file))?;
    let p = from_bytes(&bytes)?;
    if digest(&p) != r.digest {
        return Err(EngineError::Inconsistent(format!("{} does not match its ledger digest", r.file)));
    }
    Ok(p)
}

/// Trains the general model on a SMILES corpus.
pub fn train_general(
    corpus: &[String],
    dims: crate::vae::ModelDims,
    init_seed: u64,
    cfg: &TrainConfig,
) -> Result<(VaeParams, Option<crate::vae::EpochLoss>, usize), EngineError> {
    let vocab = Vocabulary::standard();
    let (data, skipped) = encode_corpus(&vocab, corpus, cfg.max_len);
    let result = train(VaeParams::init(dims, init_seed), &data, cfg)?;
    Ok((result.params, result.trace.last().cloned(), skipped))
}

struct Engine {
    dir: PathBuf,
    state: RunState,
    ledger: LedgerWriter,
    general: VaeParams,
    current: VaeParams,
    oracle: Box<dyn AffinityOracle>,
    custom: Vec<Catalogue>,
    stage2: Vec<Catalogue>,
    vocab: Vocabulary,
}

impl Engine {
    fn config(&self) -> &RunConfig {
        self.state.config()
    }

    fn finetune_on(&self, set: &BTreeSet<String>, seed: u64, name: &str) -> Result<(VaeParams, FinetuneRecord), EngineError> {
        let cfg = TrainConfig {
            seed,
            ..self.config().finetune_training.clone()
        };
        let smiles: Vec<String> = set.iter().cloned().collect();
        let (data, skipped) = encode_corpus(&self.vocab, &smiles, cfg.max_len);
        let result = finetune(&self.general, &data, &cfg)?;
        let checkpoint = write_checkpoint(&self.dir, name, &result.params)?;
        let record = FinetuneRecord {
            parent_digest: self.state.started.general.digest.clone(),
            checkpoint,
            train_size: data.len(),
            skipped,
            seed,
            epochs: cfg.epochs,
            final_loss: result.trace.last().cloned(),
        };
        Ok((result.params, record))
    }

    fn chemical_cycle(&self, a: usize, c: usize) -> Result<(Event, VaeParams), EngineError> {
        let cfg = self.config();
        let (phase_index, phase) = cfg.phase_for(a);
        let sample_seed = derive_seed(cfg.seed, "sample", a, c);
        let generated = sample(&self.current, &self.vocab, phase.molecules_per_generation, sample_seed, cfg.max_len);

        let specific = self.state.specific_set();
        let known: HashSet<String> = specific.iter().cloned().collect();
        let stats = generation_stats(&generated, &known);
        let novel: BTreeSet<String> = generated
            .par_iter()
            .filter_map(|s| parse_smiles(s).ok().map(|m| canonical_smiles(&m)))
            .collect::<Vec<_>>()
            .into_iter()
            .filter(|s| !known.contains(s))
            .collect();
        let mut pool: Vec<(String, MolGraph)> = novel
            .into_iter()
            .map(|s| {
                let m = parse_smiles(&s).expect("canonical SMILES reparses");
                (s, m)
            })
            .collect();

        let mut filters = Vec::new();
        let mut keep = |name: &str, applied: bool, pool: &mut Vec<(String, MolGraph)>, f: &(dyn Fn(&MolGraph) -> bool + Sync)| {
            let input = pool.len();
            if applied {
                let pass: Vec<bool> = pool.par_iter().map(|(_, m)| f(m)).collect();
                let mut it = pass.into_iter();
                pool.retain(|_| it.next().expect("one flag per molecule"));
            }
            filters.push(FilterStage {
                name: name.to_string(),
                applied,
                input,
                passed: pool.len(),
            });
        };

        keep("custom_motifs", true, &mut pool, &|m| screen(m, &self.custom).pass);
        let (qed_min, sa_max, weights) = (cfg.qed_min, cfg.sa_max, cfg.qed_weights);
        keep("qed_sa", true, &mut pool, &|m| {
            drug_scores(m, weights).is_ok_and(|s| passes_thresholds(&s, qed_min, sa_max))
        });
        let reference: Vec<Fingerprint> = specific
            .par_iter()
            .map(|s| morgan4(&parse_smiles(s).expect("canonical SMILES reparses")).expect("fingerprint"))
            .collect();
        let ta = phase.ta_threshold;
        keep("diversity", true, &mut pool, &|m| {
            passes_diversity(&morgan4(m).expect("fingerprint"), &reference, ta).expect("equal lengths")
        });
        keep(
            "stage2_catalogues",
            cfg.smarts_stage == SmartsStage::InLoop,
            &mut pool,
            &|m| screen(m, &self.stage2).pass,
        );

        let added: Vec<String> = pool.into_iter().map(|(s, _)| s).collect();
        let mut train_set = specific;
        train_set.extend(added.iter().cloned());
        let seed = derive_seed(cfg.seed, "finetune", a, c);
        let (params, finetune) = self.finetune_on(&train_set, seed, &format!("a{a:03}_c{c:03}.mtgw"))?;
        let record = ChemicalCycleRecord {
            affinity_cycle: a,
            chemical_cycle: c,
            phase: phase_index,
            ta_threshold: ta,
            sample_seed,
            stats,
            filters,
            accumulated_size: self.state.accumulated.len() + added.len(),
            added,
            finetune,
        };
        Ok((Event::ChemicalCycle(Box::new(record)), params))
    }

    fn affinity_cycle(&self, a: usize) -> Result<(Event, VaeParams), EngineError> {
        let cfg = self.config();
        let (phase_index, _) = cfg.phase_for(a);
        let mut evaluated: Vec<String> = self.state.accumulated.keys().cloned().collect();
        let mut removed = Vec::new();
        let mut stage2 = None;
        if cfg.smarts_stage == SmartsStage::PostGeneration {
            let pass: Vec<bool> = evaluated
                .par_iter()
                .map(|s| screen(&parse_smiles(s).expect("canonical SMILES reparses"), &self.stage2).pass)
                .collect();
            let input = evaluated.len();
            let (kept, dropped): (Vec<_>, Vec<_>) = evaluated.into_iter().zip(pass).partition(|(_, p)| *p);
            evaluated = kept.into_iter().map(|(s, _)| s).collect();
            removed = dropped.into_iter().map(|(s, _)| s).collect();
            stage2 = Some(FilterStage {
                name: "stage2_catalogues".into(),
                applied: true,
                input,
                passed: evaluated.len(),
            });
        }

        let targets = &self.state.started.targets;
        let mut cache: ScoreCache = self.state.cache.clone();
        let (records, scored) = cache.score_with(&evaluated, self.oracle.as_ref(), targets)?;
        let ids = self.state.target_ids();
        let mut survivors = Vec::new();
        for r in &records {
            if evaluate(r, &ids, &self.state.thresholds)? {
                survivors.push(r.key.clone());
            }
        }
        let (_, transition) = advance(&self.state.thresholds, survivors.len());

        let mut train_set: BTreeSet<String> = self.state.fixed.clone();
        train_set.extend(survivors.iter().cloned());
        let seed = derive_seed(cfg.seed, "affinity", a, 0);
        let (params, finetune) = self.finetune_on(&train_set, seed, &format!("a{a:03}_final.mtgw"))?;
        let record = AffinityCycleRecord {
            affinity_cycle: a,
            phase: phase_index,
            stage2,
            removed,
            evaluated,
            scored,
            survivors,
            transition,
            finetune,
        };
        Ok((Event::AffinityCycle(Box::new(record)), params))
    }

    /// Appends the event, then folds the re-parsed ledger text so the live
    /// state goes through exactly what replay will see.
    fn commit(&mut self, event: &Event) -> Result<(), EngineError> {
        let json = self.ledger.append(event)?;
        let parsed: Event = serde_json::from_str(&json)?;
        self.state.apply(&parsed)
    }

    fn run(mut self, opts: &RunOptions) -> Result<RunOutcome, EngineError> {
        let mut written = 0;
        loop {
            let step = self.state.next_step();
            if step == Step::Done {
                let report = build_report(&self.state)?;
                write_report(&report, &self.dir.join(REPORT_DIR))?;
                let reason = self.state.completed.as_ref().expect("done implies completed").reason;
                return Ok(RunOutcome::Completed(reason));
            }
            if opts.max_events.is_some_and(|m| written >= m) {
                return Ok(RunOutcome::Interrupted { events_written: written });
            }
            match step {
                Step::Chemical {
                    affinity_cycle,
                    chemical_cycle,
                } => {
                    let (event, params) = self.chemical_cycle(affinity_cycle, chemical_cycle)?;
                    self.commit(&event)?;
                    self.current = params;
                }
                Step::Affinity { affinity_cycle } => {
                    let (event, params) = self.affinity_cycle(affinity_cycle)?;
                    self.commit(&event)?;
                    self.current = params;
                }
                Step::Complete(reason) => {
                    let event = Event::RunCompleted(RunCompleted {
                        reason,
                        affinity_cycles: self.state.affinity.len(),
                    });
                    self.commit(&event)?;
                }
                Step::Done => unreachable!(),
            }
            written += 1;
        }
    }
}

/// Starts a new run in `dir`, which must not hold a ledger yet.
pub fn start_run(config: RunConfig, dir: &Path, opts: &RunOptions) -> Result<RunOutcome, EngineError> {
    config.validate()?;
    let ledger_path = dir.join(LEDGER_FILE);
    if ledger_path.exists() {
        return Err(EngineError::AlreadyStarted(dir.to_path_buf()));
    }
    fs::create_dir_all(dir.join(CHECKPOINT_DIR))?;
    let targets = load_targets(&config)?;
    let oracle = make_oracle(&config, &targets)?;
    let (custom, stage2) = load_catalogues(&config)?;
    let vocab = Vocabulary::standard();

    let fixed_path = config.fixed_set.as_ref().expect("validated");
    let fixed = canonicalize_all(&read_smiles(fixed_path)?)?;
    if fixed.is_empty() {
        return Err(EngineError::Data(format!("{}: fixed set is empty", fixed_path.display())));
    }

    let (general, general_loss) = match &config.general_checkpoint {
        Some(p) => {
            let params = from_bytes(&fs::read(p)?)?;
            if params.dims.vocab != VOCAB_SIZE {
                return Err(EngineError::Config(format!("{}: vocabulary size {}", p.display(), params.dims.vocab)));
            }
            (params, None)
        }
        None => {
            let corpus = read_smiles(config.general_corpus.as_ref().expect("validated"))?;
            let tc = TrainConfig {
                seed: derive_seed(config.seed, "general", 0, 0),
                ..config.general_training.clone()
            };
            let init_seed = derive_seed(config.seed, "init", 0, 0);
            let (params, loss, _) = train_general(&corpus, config.vae.dims(), init_seed, &tc)?;
            (params, loss)
        }
    };
    let general_ref = write_checkpoint(dir, "general.mtgw", &general)?;

    let placeholder = RunStarted {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        oracle: oracle.describe(),
        targets,
        fixed: fixed.clone(),
        general: general_ref.clone(),
        general_loss,
        initial_finetune: FinetuneRecord {
            parent_digest: general_ref.digest.clone(),
            checkpoint: general_ref.clone(),
            train_size: 0,
            skipped: 0,
            seed: 0,
            epochs: 0,
            final_loss: None,
        },
        config,
    };
    let mut engine = Engine {
        dir: dir.to_path_buf(),
        state: RunState::new(placeholder)?,
        ledger: LedgerWriter::create(&ledger_path)?,
        current: general.clone(),
        general,
        oracle,
        custom,
        stage2,
        vocab,
    };
    let seed = derive_seed(engine.config().seed, "finetune_fixed", 0, 0);
    let fixed_set: BTreeSet<String> = fixed.into_iter().collect();
    let (params, record) = engine.finetune_on(&fixed_set, seed, "initial.mtgw")?;
    let mut started = engine.state.started.clone();
    started.initial_finetune = record;
    let event = Event::RunStarted(Box::new(started));
    let json = engine.ledger.append(&event)?;
    let Event::RunStarted(parsed) = serde_json::from_str(&json)? else {
        unreachable!("run_started round trip")
    };
    engine.state = RunState::new(*parsed)?;
    engine.current = params;
    engine.run(opts)
}

/// Continues the run recorded in `dir` from its last completed step.
pub fn resume_run(dir: &Path, opts: &RunOptions) -> Result<RunOutcome, EngineError> {
    let ledger_path = dir.join(LEDGER_FILE);
    if !ledger_path.exists() {
        return Err(EngineError::NotStarted(dir.to_path_buf()));
    }
    let contents = read_ledger(&ledger_path)?;
    let state = RunState::from_events(&contents.events)?;
    let cfg = state.config().clone();
    let oracle = make_oracle(&cfg, &state.started.targets)?;
    let (custom, stage2) = load_catalogues(&cfg)?;
    let general = read_checkpoint(dir, &state.started.general)?;
    let current = read_checkpoint(dir, &state.current)?;
    let engine = Engine {
        dir: dir.to_path_buf(),
        ledger: LedgerWriter::append_to(&ledger_path, &contents)?,
        state,
        general,
        current,
        oracle,
        custom,
        stage2,
        vocab: Vocabulary::standard(),
    };
    engine.run(opts)
}

/// Replays a ledger into its final state.
pub fn replay(dir: &Path) -> Result<RunState, EngineError> {
    let contents = read_ledger(&dir.join(LEDGER_FILE))?;
    RunState::from_events(&contents.events)
}
