//! Experiment layout: counterbalancing, per-participant schedules,
//! per-cell medians and hypothesis checks over pairwise outcomes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::agent::{derive_trial_seed, Agent};
use crate::stats::descriptive::median;
use crate::stats::PairwiseResult;
use crate::tasks::{TaskKind, TrialRecord, TrialSpec};
use crate::techniques::TechniqueKind;

/// Trial index reserved for the schedule shuffle stream.
const SCHEDULE_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n_participants: u32,
    pub repeats: u8,
    pub techniques: Vec<TechniqueKind>,
    pub tasks: Vec<TaskKind>,
    pub distances: Vec<f64>,
    pub master_seed: u64,
    /// Eye height above the pillar top (m).
    pub eye_height: f64,
    pub pillar_height: f64,
    pub room_size: f64,
    /// Alternate which task comes first between participants. When false
    /// every participant does the tasks in `tasks` order.
    pub counterbalance_tasks: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_participants: 20,
            repeats: 6,
            techniques: TechniqueKind::ALL.to_vec(),
            tasks: TaskKind::ALL.to_vec(),
            distances: vec![3.0, 6.0, 9.0],
            master_seed: 0,
            eye_height: 1.7,
            pillar_height: 5.0,
            room_size: 15.0,
            counterbalance_tasks: false,
        }
    }
}

impl ExperimentConfig {
    pub fn trials_per_participant(&self) -> usize {
        self.tasks.len() * self.techniques.len() * self.distances.len() * self.repeats as usize
    }

    pub fn is_valid(&self) -> bool {
        !self.techniques.is_empty()
            && !self.tasks.is_empty()
            && !self.distances.is_empty()
            && self.repeats > 0
            && self.distances.iter().all(|d| d.is_finite() && *d > 0.0)
            && self.eye_height.is_finite()
    }
}

/// Row of the balanced Latin square for `n` conditions used by
/// `participant`. Even `n` uses the n-row square; odd `n` appends the
/// reversed rows for 2n rows in total.
pub fn balanced_latin_order(n: usize, participant: u32) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    // 0, 1, n-1, 2, n-2, ...
    let base: Vec<usize> = (0..n)
        .map(|i| match i {
            0 => 0,
            i if i % 2 == 1 => i.div_ceil(2),
            i => n - i / 2,
        })
        .collect();
    let rows = if n % 2 == 1 { 2 * n } else { n };
    let r = participant as usize % rows;
    let row: Vec<usize> = base.iter().map(|c| (c + r % n) % n).collect();
    if r >= n {
        row.into_iter().rev().collect()
    } else {
        row
    }
}

/// All trials for one participant, in presentation order.
pub fn participant_schedule(cfg: &ExperimentConfig, participant: u32) -> Vec<TrialSpec> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(derive_trial_seed(cfg.master_seed, participant, SCHEDULE_STREAM));
    let order = balanced_latin_order(cfg.techniques.len(), participant);
    let mut tasks = cfg.tasks.clone();
    if cfg.counterbalance_tasks && participant % 2 == 1 {
        tasks.reverse();
    }
    let mut out = Vec::with_capacity(cfg.trials_per_participant());
    for task in tasks {
        for &ti in &order {
            let technique = cfg.techniques[ti];
            let mut block: Vec<(f64, u8)> =
                cfg.distances.iter().flat_map(|&d| (0..cfg.repeats).map(move |r| (d, r))).collect();
            block.shuffle(&mut rng);
            let mut side: i8 = if rng.random::<bool>() { 1 } else { -1 };
            for (d, r) in block {
                out.push(TrialSpec::new(task, technique, d, side, r, cfg.eye_height));
                side = -side;
            }
        }
    }
    out
}

pub fn schedule(cfg: &ExperimentConfig) -> Vec<Vec<TrialSpec>> {
    (0..cfg.n_participants).map(|p| participant_schedule(cfg, p)).collect()
}

/// Runs one participant's schedule through the agent. Each trial's seed is
/// derived from the master seed, the participant and the trial's position.
pub fn run_participant(cfg: &ExperimentConfig, agent: &Agent, participant: u32) -> Vec<TrialRecord> {
    participant_schedule(cfg, participant)
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            agent.drive_trial(spec, participant, derive_trial_seed(cfg.master_seed, participant, i as u64))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    SelectionTime,
    ErrorDistance,
    Clicks,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::SelectionTime, Measure::ErrorDistance, Measure::Clicks];

    /// Value carried by a record; `None` for timed-out trials.
    pub fn value(self, r: &TrialRecord) -> Option<f64> {
        if r.timeout {
            return None;
        }
        match self {
            Measure::SelectionTime => Some(r.selection_time),
            Measure::ErrorDistance => r.error_distance,
            Measure::Clicks => Some(r.clicks as f64),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::SelectionTime => "selection_time",
            Measure::ErrorDistance => "error_distance",
            Measure::Clicks => "clicks",
        }
    }

    /// Measures analyzed for a task. Clicks only vary when selections can
    /// be rejected, which happens in the task with a reference.
    pub fn for_task(task: TaskKind) -> &'static [Measure] {
        match task {
            TaskKind::WithReference => &Measure::ALL,
            TaskKind::WithoutReference => &[Measure::SelectionTime, Measure::ErrorDistance],
        }
    }
}

/// Distances are keyed in millimetres so cells compare exactly.
pub fn distance_key(d: f64) -> u32 {
    libm::round(d * 1000.0) as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub participant: u32,
    pub task: TaskKind,
    pub technique: TechniqueKind,
    pub distance_mm: u32,
}

impl CellKey {
    pub fn of(r: &TrialRecord) -> Self {
        Self {
            participant: r.participant,
            task: r.spec.task,
            technique: r.spec.technique,
            distance_mm: distance_key(r.spec.distance),
        }
    }

    pub fn distance(&self) -> f64 {
        self.distance_mm as f64 / 1000.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub key: CellKey,
    /// Median over the non-timeout repeats; NaN when there are none.
    pub median: f64,
    pub n_valid: u32,
    pub n_timeouts: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub measure: Measure,
    /// Cells with at least one valid trial, ordered by key.
    pub cells: Vec<CellSummary>,
    /// Cells present in the data with zero valid trials; excluded.
    pub empty_cells: Vec<CellSummary>,
}

pub fn summarize(records: &[TrialRecord], measure: Measure) -> SummaryTable {
    let mut groups: BTreeMap<CellKey, (Vec<f64>, u32)> = BTreeMap::new();
    for r in records {
        let e = groups.entry(CellKey::of(r)).or_default();
        match measure.value(r) {
            Some(v) => e.0.push(v),
            None => e.1 += 1,
        }
    }
    let mut cells = Vec::new();
    let mut empty_cells = Vec::new();
    for (key, (vals, timeouts)) in groups {
        let s = CellSummary { key, median: median(&vals), n_valid: vals.len() as u32, n_timeouts: timeouts };
        if vals.is_empty() {
            empty_cells.push(s);
        } else {
            cells.push(s);
        }
    }
    SummaryTable { measure, cells, empty_cells }
}

/// Subject-by-technique-by-distance medians for one task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMatrix {
    pub task: TaskKind,
    pub participants: Vec<u32>,
    pub techniques: Vec<TechniqueKind>,
    pub distances: Vec<f64>,
    /// `values[subject][technique][distance]`.
    pub values: Vec<Vec<Vec<f64>>>,
    /// Participants dropped because at least one of their cells was missing.
    pub dropped: Vec<u32>,
    pub missing: Vec<CellKey>,
}

impl SummaryTable {
    pub fn get(&self, key: &CellKey) -> Option<&CellSummary> {
        self.cells.binary_search_by(|c| c.key.cmp(key)).ok().map(|i| &self.cells[i])
    }

    /// Builds the analysis matrix for `task`. Participants are those with
    /// any record for the task. With `allow_incomplete`, participants
    /// missing a cell are dropped; otherwise a missing cell is an error
    /// carrying the full missing list.
    pub fn matrix(
        &self,
        task: TaskKind,
        techniques: &[TechniqueKind],
        distances: &[f64],
        allow_incomplete: bool,
    ) -> Result<CellMatrix, Vec<CellKey>> {
        let participants: BTreeSet<u32> = self
            .cells
            .iter()
            .chain(self.empty_cells.iter())
            .filter(|c| c.key.task == task)
            .map(|c| c.key.participant)
            .collect();
        let mut values = Vec::new();
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        let mut missing = Vec::new();
        for &p in &participants {
            let mut rows = Vec::with_capacity(techniques.len());
            let mut complete = true;
            for &technique in techniques {
                let mut row = Vec::with_capacity(distances.len());
                for &d in distances {
                    let key = CellKey { participant: p, task, technique, distance_mm: distance_key(d) };
                    match self.get(&key) {
                        Some(c) => row.push(c.median),
                        None => {
                            complete = false;
                            missing.push(key);
                        }
                    }
                }
                rows.push(row);
            }
            if complete {
                kept.push(p);
                values.push(rows);
            } else {
                dropped.push(p);
            }
        }
        if !missing.is_empty() && !allow_incomplete {
            return Err(missing);
        }
        Ok(CellMatrix {
            task,
            participants: kept,
            techniques: techniques.to_vec(),
            distances: distances.to_vec(),
            values,
            dropped,
            missing,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Supported,
    Partial,
    Rejected,
    /// The data needed for this hypothesis was not provided.
    NotEvaluated,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Supported => "supported",
            Verdict::Partial => "partial",
            Verdict::Rejected => "rejected",
            Verdict::NotEvaluated => "not evaluated",
        }
    }

    fn from_counts(held: usize, total: usize) -> Self {
        if total == 0 {
            Verdict::NotEvaluated
        } else if held == total {
            Verdict::Supported
        } else if held == 0 {
            Verdict::Rejected
        } else {
            Verdict::Partial
        }
    }
}

/// One predicted ordering: `better` beats `worse` on `measure`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub measure: String,
    pub better: TechniqueKind,
    pub worse: TechniqueKind,
    pub p: Option<f64>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisResult {
    pub id: &'static str,
    pub statement: &'static str,
    pub verdict: Verdict,
    pub comparisons: Vec<Comparison>,
}

/// Pairwise outcomes over one questionnaire dimension.
#[derive(Clone, Debug)]
pub struct QuestionnaireEvidence<'a> {
    pub dimension: String,
    pub pairwise: &'a PairwiseResult,
    /// True for scales where larger scores are better (user experience);
    /// false for workload scales.
    pub higher_is_better: bool,
}

/// Pairwise outcomes for one task. Level `i` of every `PairwiseResult`
/// is `techniques[i]`.
#[derive(Clone, Debug)]
pub struct HypothesisEvidence<'a> {
    pub techniques: &'a [TechniqueKind],
    pub selection_time: Option<&'a PairwiseResult>,
    pub error_distance: Option<&'a PairwiseResult>,
    pub questionnaire: Vec<QuestionnaireEvidence<'a>>,
}

fn compare(
    evidence: &HypothesisEvidence<'_>,
    pw: &PairwiseResult,
    measure: &str,
    better: TechniqueKind,
    worse: TechniqueKind,
    higher_is_better: bool,
) -> Option<Comparison> {
    let i = evidence.techniques.iter().position(|t| *t == better)?;
    let j = evidence.techniques.iter().position(|t| *t == worse)?;
    let c = pw.get(i, j)?;
    let directional = if higher_is_better { c.mean_diff > 0.0 } else { c.mean_diff < 0.0 };
    Some(Comparison { measure: measure.into(), better, worse, p: Some(c.p), holds: directional && c.p < pw.alpha })
}

fn ordered(
    evidence: &HypothesisEvidence<'_>,
    pw: Option<&PairwiseResult>,
    measure: &str,
    better: &[TechniqueKind],
    worse: &[TechniqueKind],
    higher_is_better: bool,
) -> Vec<Comparison> {
    let Some(pw) = pw else { return Vec::new() };
    better
        .iter()
        .flat_map(|&b| worse.iter().map(move |&w| (b, w)))
        .filter_map(|(b, w)| compare(evidence, pw, measure, b, w, higher_is_better))
        .collect()
}

fn result(id: &'static str, statement: &'static str, comparisons: Vec<Comparison>) -> HypothesisResult {
    let held = comparisons.iter().filter(|c| c.holds).count();
    HypothesisResult { id, statement, verdict: Verdict::from_counts(held, comparisons.len()), comparisons }
}

/// H1 to H5 as ordered comparisons over LSD outcomes. A hypothesis is
/// supported when every component comparison is significant in the
/// predicted direction, rejected when none is, and partial otherwise.
pub fn evaluate_hypotheses(evidence: &HypothesisEvidence<'_>) -> Vec<HypothesisResult> {
    use TechniqueKind::*;
    let time = evidence.selection_time;
    let err = evidence.error_distance;
    let mut h5 = Vec::new();
    for q in &evidence.questionnaire {
        h5.extend(ordered(
            evidence,
            Some(q.pairwise),
            &q.dimension,
            &[SimpleStripe, PrecisionStripe, CursorSync],
            &[SimpleRay, OneHand],
            q.higher_is_better,
        ));
    }
    vec![
        result(
            "H1",
            "Simple-Ray and Simple-Stripe select faster than the other techniques",
            ordered(evidence, time, "selection_time", &[SimpleRay, SimpleStripe], &[PrecisionStripe, CursorSync, OneHand], false),
        ),
        result(
            "H2",
            "Cursor-Sync selects faster than Precision-Stripe and One-Hand",
            ordered(evidence, time, "selection_time", &[CursorSync], &[PrecisionStripe, OneHand], false),
        ),
        result(
            "H3",
            "Precision-Stripe and Cursor-Sync are more accurate than the other techniques",
            ordered(evidence, err, "error_distance", &[PrecisionStripe, CursorSync], &[SimpleRay, SimpleStripe, OneHand], false),
        ),
        result(
            "H4",
            "Simple-Stripe is more accurate than Simple-Ray and One-Hand",
            ordered(evidence, err, "error_distance", &[SimpleStripe], &[SimpleRay, OneHand], false),
        ),
        result(
            "H5",
            "Simple-Stripe, Precision-Stripe and Cursor-Sync give better usability and lower workload than Simple-Ray and One-Hand",
            h5,
        ),
    ]
}
