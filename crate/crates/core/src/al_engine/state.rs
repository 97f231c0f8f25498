//! Ledger events and the run state they fold into. The live engine and
//! replay both go through [`RunState::apply`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::EngineError;
use crate::affinity::{advance, evaluate, CycleTransition, ScoreCache, ScoreRecord, Target, ThresholdState};
use crate::metrics::GenerationStats;
use crate::vae::EpochLoss;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointRef {
    /// Path relative to the run directory.
    pub file: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    /// Digest of the weights training started from.
    pub parent_digest: String,
    pub checkpoint: CheckpointRef,
    pub train_size: usize,
    /// SMILES left out because they do not tokenize within `max_len`.
    pub skipped: usize,
    pub seed: u64,
    pub epochs: usize,
    pub final_loss: Option<EpochLoss>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStage {
    pub name: String,
    pub applied: bool,
    pub input: usize,
    pub passed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStarted {
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub oracle: String,
    pub targets: Vec<Target>,
    /// Canonical, sorted, deduplicated.
    pub fixed: Vec<String>,
    pub general: CheckpointRef,
    pub general_loss: Option<EpochLoss>,
    /// Fine-tune on the fixed set that seeds the first chemical cycle.
    pub initial_finetune: FinetuneRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChemicalCycleRecord {
    pub affinity_cycle: usize,
    pub chemical_cycle: usize,
    pub phase: usize,
    pub ta_threshold: f64,
    pub sample_seed: u64,
    pub stats: GenerationStats,
    /// In pipeline order: motifs, QED/SA, diversity, stage-2 catalogues.
    pub filters: Vec<FilterStage>,
    /// Survivors, sorted.
    pub added: Vec<String>,
    pub accumulated_size: usize,
    pub finetune: FinetuneRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityCycleRecord {
    pub affinity_cycle: usize,
    pub phase: usize,
    /// Present when catalogues run once per affinity cycle.
    pub stage2: Option<FilterStage>,
    pub removed: Vec<String>,
    /// Accumulated molecules checked against the thresholds, sorted.
    pub evaluated: Vec<String>,
    /// Scores obtained in this cycle; earlier ones come from the cache.
    pub scored: Vec<ScoreRecord>,
    pub survivors: Vec<String>,
    pub transition: CycleTransition,
    pub finetune: FinetuneRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CycleCap,
    Patience,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCompleted {
    pub reason: StopReason,
    pub affinity_cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    RunStarted(Box<RunStarted>),
    ChemicalCycle(Box<ChemicalCycleRecord>),
    AffinityCycle(Box<AffinityCycleRecord>),
    RunCompleted(RunCompleted),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Chemical { affinity_cycle: usize, chemical_cycle: usize },
    Affinity { affinity_cycle: usize },
    Complete(StopReason),
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    pub affinity_cycle: usize,
    pub chemical_cycle: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSizes {
    pub step: String,
    pub affinity_cycle: Option<usize>,
    pub chemical_cycle: Option<usize>,
    pub fixed: usize,
    pub accumulated: usize,
    pub updated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub started: RunStarted,
    pub fixed: BTreeSet<String>,
    pub accumulated: BTreeMap<String, Origin>,
    pub updated: BTreeMap<String, Origin>,
    pub thresholds: ThresholdState,
    pub cache: ScoreCache,
    /// Weights the next generation samples from.
    pub current: CheckpointRef,
    pub chemical: Vec<ChemicalCycleRecord>,
    pub affinity: Vec<AffinityCycleRecord>,
    pub sizes: Vec<SetSizes>,
    pub completed: Option<RunCompleted>,
}

fn inconsistent(msg: impl Into<String>) -> EngineError {
    EngineError::Inconsistent(msg.into())
}

impl RunState {
    pub fn new(started: RunStarted) -> Result<Self, EngineError> {
        let c = &started.config;
        let thresholds = ThresholdState::new(c.t_global_start, c.t_ind_start, c.delta, c.n_min, c.patience)?;
        let fixed: BTreeSet<String> = started.fixed.iter().cloned().collect();
        if fixed.len() != started.fixed.len() {
            return Err(inconsistent("fixed set has duplicates"));
        }
        if started.initial_finetune.parent_digest != started.general.digest {
            return Err(inconsistent("initial fine-tune does not start from the general weights"));
        }
        let mut st = RunState {
            current: started.initial_finetune.checkpoint.clone(),
            fixed,
            accumulated: BTreeMap::new(),
            updated: BTreeMap::new(),
            thresholds,
            cache: ScoreCache::default(),
            chemical: Vec::new(),
            affinity: Vec::new(),
            sizes: Vec::new(),
            completed: None,
            started,
        };
        st.push_sizes("start", None, None);
        Ok(st)
    }

    /// Folds a complete event sequence, which must begin with `RunStarted`.
    pub fn from_events(events: &[Event]) -> Result<Self, EngineError> {
        let Some(Event::RunStarted(s)) = events.first() else {
            return Err(inconsistent("ledger does not begin with run_started"));
        };
        let mut st = RunState::new((**s).clone())?;
        for e in &events[1..] {
            st.apply(e)?;
        }
        Ok(st)
    }

    pub fn config(&self) -> &RunConfig {
        &self.started.config
    }

    pub fn target_ids(&self) -> Vec<String> {
        self.started.targets.iter().map(|t| t.id.clone()).collect()
    }

    /// The specific set: fixed ∪ accumulated.
    pub fn specific_set(&self) -> BTreeSet<String> {
        self.fixed.iter().chain(self.accumulated.keys()).cloned().collect()
    }

    pub fn next_step(&self) -> Step {
        if self.completed.is_some() {
            return Step::Done;
        }
        if self.affinity.last().is_some_and(|r| r.transition.stop) {
            return Step::Complete(StopReason::Patience);
        }
        let a = self.affinity.len();
        if a >= self.config().affinity_cycles {
            return Step::Complete(StopReason::CycleCap);
        }
        let (_, phase) = self.config().phase_for(a);
        let done = self.chemical.iter().filter(|r| r.affinity_cycle == a).count();
        if done < phase.chemical_cycles {
            Step::Chemical {
                affinity_cycle: a,
                chemical_cycle: done,
            }
        } else {
            Step::Affinity { affinity_cycle: a }
        }
    }

    fn push_sizes(&mut self, step: &str, a: Option<usize>, c: Option<usize>) {
        self.sizes.push(SetSizes {
            step: step.to_string(),
            affinity_cycle: a,
            chemical_cycle: c,
            fixed: self.fixed.len(),
            accumulated: self.accumulated.len(),
            updated: self.updated.len(),
        });
    }

    fn check_lineage(&self, f: &FinetuneRecord) -> Result<(), EngineError> {
        if f.parent_digest != self.started.general.digest {
            return Err(inconsistent(format!("{} was not fine-tuned from the general weights", f.checkpoint.file)));
        }
        Ok(())
    }

    /// Validates `event` against the expected next step and folds it in.
    pub fn apply(&mut self, event: &Event) -> Result<(), EngineError> {
        let step = self.next_step();
        match event {
            Event::RunStarted(_) => Err(inconsistent("run_started after the run began")),
            Event::ChemicalCycle(r) => {
                let expect = Step::Chemical {
                    affinity_cycle: r.affinity_cycle,
                    chemical_cycle: r.chemical_cycle,
                };
                if step != expect {
                    return Err(inconsistent(format!("chemical cycle {expect:?} where {step:?} was expected")));
                }
                self.check_lineage(&r.finetune)?;
                for s in &r.added {
                    if self.fixed.contains(s) || self.accumulated.contains_key(s) {
                        return Err(inconsistent(format!("{s} added twice")));
                    }
                    self.accumulated.insert(
                        s.clone(),
                        Origin {
                            affinity_cycle: r.affinity_cycle,
                            chemical_cycle: r.chemical_cycle,
                        },
                    );
                }
                if self.accumulated.len() != r.accumulated_size {
                    return Err(inconsistent("accumulated size does not match the record"));
                }
                self.current = r.finetune.checkpoint.clone();
                self.chemical.push((**r).clone());
                self.push_sizes("chemical", Some(r.affinity_cycle), Some(r.chemical_cycle));
                Ok(())
            }
            Event::AffinityCycle(r) => {
                if step != (Step::Affinity { affinity_cycle: r.affinity_cycle }) {
                    return Err(inconsistent(format!("affinity cycle {} where {step:?} was expected", r.affinity_cycle)));
                }
                self.check_lineage(&r.finetune)?;
                for s in &r.removed {
                    if self.accumulated.remove(s).is_none() {
                        return Err(inconsistent(format!("removed molecule {s} was not accumulated")));
                    }
                }
                if !self.accumulated.keys().eq(r.evaluated.iter()) {
                    return Err(inconsistent("evaluated set differs from the accumulated set"));
                }
                for rec in &r.scored {
                    self.cache.insert(rec);
                }
                let ids = self.target_ids();
                let mut survivors = Vec::new();
                for m in &r.evaluated {
                    let rec = self
                        .cache
                        .get(m, &self.started.targets)
                        .ok_or_else(|| inconsistent(format!("no cached scores for {m}")))?;
                    if evaluate(&rec, &ids, &self.thresholds)? {
                        survivors.push(m.clone());
                    }
                }
                if survivors != r.survivors {
                    return Err(inconsistent("survivors do not re-pass the thresholds"));
                }
                let (next, transition) = advance(&self.thresholds, survivors.len());
                if transition != r.transition {
                    return Err(inconsistent("threshold transition does not match the record"));
                }
                self.thresholds = next;
                self.updated = survivors.iter().map(|s| (s.clone(), self.accumulated[s])).collect();
                self.accumulated = self.updated.clone();
                self.current = r.finetune.checkpoint.clone();
                self.affinity.push((**r).clone());
                self.push_sizes("affinity", Some(r.affinity_cycle), None);
                Ok(())
            }
            Event::RunCompleted(r) => {
                if step != Step::Complete(r.reason) || r.affinity_cycles != self.affinity.len() {
                    return Err(inconsistent(format!("run_completed({:?}) where {step:?} was expected", r.reason)));
                }
                self.completed = Some(r.clone());
                Ok(())
            }
        }
    }
}
