//! Turns trial records into the full analysis: per-cell medians,
//! descriptives, two-way repeated-measures ANOVA (technique x distance),
//! simple effects under interaction, LSD comparisons and hypothesis
//! verdicts.

use std::collections::{BTreeMap, BTreeSet};

use crossrays_core::agent::splitmix64;
use crossrays_core::experiment::{
    distance_key, evaluate_hypotheses, summarize, CellKey, HypothesisEvidence, HypothesisResult, Measure,
    QuestionnaireEvidence,
};
use crossrays_core::stats::anova::{collapse_a, collapse_b, slice_at_a, slice_at_b};
use crossrays_core::stats::{
    descriptive, lsd_pairwise, rm_anova_one_way, rm_anova_two_way, Descriptive, OneWayResult, PairwiseResult,
    StatsError, TwoWayResult,
};
use crossrays_core::tasks::{TaskKind, TrialRecord};
use crossrays_core::techniques::TechniqueKind;

use crate::questionnaire::{Instrument, Questionnaire};

/// Interaction p-value below which simple effects are reported.
pub const SIMPLE_EFFECTS_ALPHA: f64 = 0.05;

#[derive(Clone, Debug, Default)]
pub struct AnalyzeOptions {
    /// Tasks to analyze; empty means every task present in the log.
    pub tasks: Vec<TaskKind>,
    /// Measures to analyze; `None` uses the default set for each task.
    pub measures: Option<Vec<Measure>>,
    pub allow_incomplete: bool,
    pub bootstrap_seed: u64,
    pub questionnaire: Option<Questionnaire>,
}

#[derive(Debug, thiserror::Error)]
pub enum AnalyzeError {
    #[error("the log contains no records")]
    Empty,
    #[error("no records for task {0}")]
    NoTask(&'static str),
    #[error("{} incomplete cells for {task} / {measure} (first: {})", missing.len(), describe_cell(&missing[0]))]
    Incomplete { task: &'static str, measure: &'static str, missing: Vec<CellKey> },
    #[error("{context}: {error}")]
    Stats { context: String, error: StatsError },
}

pub fn describe_cell(k: &CellKey) -> String {
    format!(
        "participant {} {} {} {} m",
        k.participant,
        k.task.as_str(),
        k.technique.as_str(),
        fmt_distance(k.distance())
    )
}

pub fn fmt_distance(d: f64) -> String {
    if d.fract() == 0.0 {
        format!("{d:.0}")
    } else {
        format!("{d}")
    }
}

#[derive(Clone, Debug)]
pub struct SimpleEffect<L> {
    pub level: L,
    pub anova: OneWayResult,
    pub lsd: PairwiseResult,
}

#[derive(Clone, Debug)]
pub struct MeasureAnalysis {
    pub task: TaskKind,
    pub measure: Measure,
    pub participants: Vec<u32>,
    pub dropped: Vec<u32>,
    pub missing: Vec<CellKey>,
    pub techniques: Vec<TechniqueKind>,
    pub distances: Vec<f64>,
    /// `cells[technique][distance]`, over participant medians.
    pub cells: Vec<Vec<Descriptive>>,
    pub by_technique: Vec<Descriptive>,
    pub by_distance: Vec<Descriptive>,
    pub anova: TwoWayResult,
    /// Over technique, collapsed across distance.
    pub lsd_technique: PairwiseResult,
    /// Over distance, collapsed across technique.
    pub lsd_distance: PairwiseResult,
    pub technique_at_distance: Vec<SimpleEffect<f64>>,
    pub distance_at_technique: Vec<SimpleEffect<TechniqueKind>>,
}

impl MeasureAnalysis {
    pub fn interaction_significant(&self) -> bool {
        self.anova.ab.p < SIMPLE_EFFECTS_ALPHA
    }

    /// Median over participants of the per-cell medians, per distance.
    pub fn distance_medians(&self) -> Vec<f64> {
        self.by_distance.iter().map(|d| d.median).collect()
    }
}

#[derive(Clone, Debug)]
pub struct QuestionnaireAnalysis {
    pub task: TaskKind,
    pub instrument: Instrument,
    pub dimension: String,
    pub techniques: Vec<TechniqueKind>,
    pub by_technique: Vec<Descriptive>,
    pub anova: OneWayResult,
    pub lsd: PairwiseResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeoutCell {
    pub task: TaskKind,
    pub technique: TechniqueKind,
    pub distance: f64,
    pub timeouts: u32,
    pub trials: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DataQuality {
    pub records: usize,
    pub timeouts: usize,
    /// Conditions with at least one timeout, pooled over participants.
    pub timeout_cells: Vec<TimeoutCell>,
    /// Participant cells without a single valid trial.
    pub empty_cells: Vec<CellKey>,
}

#[derive(Clone, Debug)]
pub struct TaskHypotheses {
    pub task: TaskKind,
    pub results: Vec<HypothesisResult>,
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub participants: Vec<u32>,
    pub bootstrap_seed: u64,
    pub quality: DataQuality,
    pub measures: Vec<MeasureAnalysis>,
    pub questionnaire: Vec<QuestionnaireAnalysis>,
    /// Questionnaire dimensions with fewer than two complete participants.
    pub questionnaire_skipped: Vec<(TaskKind, Instrument, String)>,
    pub hypotheses: Vec<TaskHypotheses>,
}

impl AnalysisReport {
    pub fn measure(&self, task: TaskKind, measure: Measure) -> Option<&MeasureAnalysis> {
        self.measures.iter().find(|m| m.task == task && m.measure == measure)
    }
}

fn stats_err(context: impl Into<String>) -> impl FnOnce(StatsError) -> AnalyzeError {
    let context = context.into();
    move |error| AnalyzeError::Stats { context, error }
}

/// Deterministic bootstrap seeds, one per descriptive computed.
struct SeedStream(u64);

impl SeedStream {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(1);
        splitmix64(self.0)
    }
}

fn quality(records: &[TrialRecord]) -> DataQuality {
    let mut cells: BTreeMap<(TaskKind, TechniqueKind, u32), (u32, u32)> = BTreeMap::new();
    for r in records {
        let e = cells.entry((r.spec.task, r.spec.technique, distance_key(r.spec.distance))).or_default();
        e.1 += 1;
        if r.timeout {
            e.0 += 1;
        }
    }
    let timeout_cells = cells
        .into_iter()
        .filter(|(_, (t, _))| *t > 0)
        .map(|((task, technique, d), (timeouts, trials))| TimeoutCell {
            task,
            technique,
            distance: d as f64 / 1000.0,
            timeouts,
            trials,
        })
        .collect();
    let empty_cells = summarize(records, Measure::SelectionTime).empty_cells.iter().map(|c| c.key).collect();
    DataQuality {
        records: records.len(),
        timeouts: records.iter().filter(|r| r.timeout).count(),
        timeout_cells,
        empty_cells,
    }
}

fn analyze_measure(
    records: &[TrialRecord],
    task: TaskKind,
    measure: Measure,
    techniques: &[TechniqueKind],
    distances: &[f64],
    opts: &AnalyzeOptions,
    seeds: &mut SeedStream,
) -> Result<MeasureAnalysis, AnalyzeError> {
    let table = summarize(records, measure);
    let m = table
        .matrix(task, techniques, distances, opts.allow_incomplete)
        .map_err(|missing| AnalyzeError::Incomplete { task: task.as_str(), measure: measure.as_str(), missing })?;
    let ctx = |what: &str| format!("{} / {}: {what}", task.as_str(), measure.as_str());
    let v = &m.values;

    let mut cells = Vec::with_capacity(techniques.len());
    for (ti, _) in techniques.iter().enumerate() {
        let mut row = Vec::with_capacity(distances.len());
        for (di, _) in distances.iter().enumerate() {
            let xs: Vec<f64> = v.iter().map(|s| s[ti][di]).collect();
            row.push(descriptive(&xs, seeds.next()).map_err(stats_err(ctx("cell descriptives")))?);
        }
        cells.push(row);
    }
    let by_tech = collapse_b(v);
    let by_dist = collapse_a(v);
    let column = |mat: &[Vec<f64>], j: usize| -> Vec<f64> { mat.iter().map(|r| r[j]).collect() };
    let by_technique = (0..techniques.len())
        .map(|j| descriptive(&column(&by_tech, j), seeds.next()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(stats_err(ctx("technique descriptives")))?;
    let by_distance = (0..distances.len())
        .map(|j| descriptive(&column(&by_dist, j), seeds.next()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(stats_err(ctx("distance descriptives")))?;

    let anova = rm_anova_two_way(v).map_err(stats_err(ctx("two-way ANOVA")))?;
    let lsd_technique = lsd_pairwise(&by_tech).map_err(stats_err(ctx("technique LSD")))?;
    let lsd_distance = lsd_pairwise(&by_dist).map_err(stats_err(ctx("distance LSD")))?;

    let mut technique_at_distance = Vec::new();
    let mut distance_at_technique = Vec::new();
    if anova.ab.p < SIMPLE_EFFECTS_ALPHA {
        for (di, &d) in distances.iter().enumerate() {
            let s = slice_at_b(v, di);
            technique_at_distance.push(SimpleEffect {
                level: d,
                anova: rm_anova_one_way(&s).map_err(stats_err(ctx("simple effects")))?,
                lsd: lsd_pairwise(&s).map_err(stats_err(ctx("simple effects")))?,
            });
        }
        for (ti, &t) in techniques.iter().enumerate() {
            let s = slice_at_a(v, ti);
            distance_at_technique.push(SimpleEffect {
                level: t,
                anova: rm_anova_one_way(&s).map_err(stats_err(ctx("simple effects")))?,
                lsd: lsd_pairwise(&s).map_err(stats_err(ctx("simple effects")))?,
            });
        }
    }

    Ok(MeasureAnalysis {
        task,
        measure,
        participants: m.participants,
        dropped: m.dropped,
        missing: m.missing,
        techniques: techniques.to_vec(),
        distances: distances.to_vec(),
        cells,
        by_technique,
        by_distance,
        anova,
        lsd_technique,
        lsd_distance,
        technique_at_distance,
        distance_at_technique,
    })
}

pub fn analyze(records: &[TrialRecord], opts: &AnalyzeOptions) -> Result<AnalysisReport, AnalyzeError> {
    if records.is_empty() {
        return Err(AnalyzeError::Empty);
    }
    let present: BTreeSet<TaskKind> = records.iter().map(|r| r.spec.task).collect();
    let tasks: Vec<TaskKind> = if opts.tasks.is_empty() {
        TaskKind::ALL.into_iter().filter(|t| present.contains(t)).collect()
    } else {
        for t in &opts.tasks {
            if !present.contains(t) {
                return Err(AnalyzeError::NoTask(t.as_str()));
            }
        }
        opts.tasks.clone()
    };

    let mut seeds = SeedStream(opts.bootstrap_seed);
    let mut measures = Vec::new();
    let mut questionnaire = Vec::new();
    let mut questionnaire_skipped = Vec::new();
    let mut hypotheses = Vec::new();
    for &task in &tasks {
        let in_task: Vec<&TrialRecord> = records.iter().filter(|r| r.spec.task == task).collect();
        let techniques: Vec<TechniqueKind> =
            TechniqueKind::ALL.into_iter().filter(|t| in_task.iter().any(|r| r.spec.technique == *t)).collect();
        let distances: Vec<f64> = in_task
            .iter()
            .map(|r| distance_key(r.spec.distance))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|k| k as f64 / 1000.0)
            .collect();
        let wanted: Vec<Measure> = match &opts.measures {
            Some(ms) => ms.clone(),
            None => Measure::for_task(task).to_vec(),
        };
        for &measure in &wanted {
            measures.push(analyze_measure(records, task, measure, &techniques, &distances, opts, &mut seeds)?);
        }

        let mut q_results = Vec::new();
        if let Some(q) = &opts.questionnaire {
            for dm in q.matrices(task, &techniques) {
                if dm.values.len() < 2 {
                    questionnaire_skipped.push((task, dm.instrument, dm.dimension));
                    continue;
                }
                let ctx = format!("{} / {} {}", task.as_str(), dm.instrument.as_str(), dm.dimension);
                let by_technique = (0..techniques.len())
                    .map(|j| descriptive(&dm.values.iter().map(|r| r[j]).collect::<Vec<_>>(), seeds.next()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(stats_err(ctx.clone()))?;
                q_results.push(QuestionnaireAnalysis {
                    task,
                    instrument: dm.instrument,
                    dimension: dm.dimension.clone(),
                    techniques: techniques.clone(),
                    by_technique,
                    anova: rm_anova_one_way(&dm.values).map_err(stats_err(ctx.clone()))?,
                    lsd: lsd_pairwise(&dm.values).map_err(stats_err(ctx))?,
                });
            }
        }

        let lsd_for = |m: Measure| {
            measures.iter().find(|a: &&MeasureAnalysis| a.task == task && a.measure == m).map(|a| &a.lsd_technique)
        };
        let evidence = HypothesisEvidence {
            techniques: &techniques,
            selection_time: lsd_for(Measure::SelectionTime),
            error_distance: lsd_for(Measure::ErrorDistance),
            questionnaire: q_results
                .iter()
                .map(|q| QuestionnaireEvidence {
                    dimension: format!("{} {}", q.instrument.as_str(), q.dimension),
                    pairwise: &q.lsd,
                    higher_is_better: q.instrument.higher_is_better(),
                })
                .collect(),
        };
        hypotheses.push(TaskHypotheses { task, results: evaluate_hypotheses(&evidence) });
        questionnaire.extend(q_results);
    }

    Ok(AnalysisReport {
        participants: records.iter().map(|r| r.participant).collect::<BTreeSet<_>>().into_iter().collect(),
        bootstrap_seed: opts.bootstrap_seed,
        quality: quality(records),
        measures,
        questionnaire,
        questionnaire_skipped,
        hypotheses,
    })
}
