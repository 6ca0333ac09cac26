//! Per-dimension questionnaire scores supplied alongside a trial log.
//!
//! CSV columns: `participant,task,technique,instrument,dimension,score`.
//! `instrument` is `tlx` (workload, lower is better) or `ueq` (user
//! experience, higher is better).

use std::collections::BTreeMap;
use std::io::Read;

use crossrays_core::tasks::TaskKind;
use crossrays_core::techniques::TechniqueKind;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Instrument {
    Tlx,
    Ueq,
}

impl Instrument {
    pub fn higher_is_better(self) -> bool {
        matches!(self, Instrument::Ueq)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Instrument::Tlx => "tlx",
            Instrument::Ueq => "ueq",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ScoreRow {
    pub participant: u32,
    pub task: TaskKind,
    pub technique: TechniqueKind,
    pub instrument: Instrument,
    pub dimension: String,
    pub score: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum QuestionnaireError {
    #[error("questionnaire row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("questionnaire: {0}")]
    Csv(#[from] csv::Error),
}

/// Scores keyed by participant then technique.
type Scores = BTreeMap<u32, BTreeMap<TechniqueKind, f64>>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Questionnaire {
    pub rows: Vec<ScoreRow>,
}

/// Subject-by-technique scores for one (task, instrument, dimension).
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionMatrix {
    pub instrument: Instrument,
    pub dimension: String,
    pub participants: Vec<u32>,
    /// `values[subject][technique]`.
    pub values: Vec<Vec<f64>>,
}

impl Questionnaire {
    pub fn read<R: Read>(input: R) -> Result<Self, QuestionnaireError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let mut rows = Vec::new();
        for (i, r) in rdr.deserialize::<ScoreRow>().enumerate() {
            let row = r.map_err(|e| QuestionnaireError::Row { row: i + 1, message: e.to_string() })?;
            if !row.score.is_finite() {
                return Err(QuestionnaireError::Row { row: i + 1, message: "score is not finite".into() });
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    /// Complete matrices for `task`, ordered by instrument then dimension.
    /// Participants missing any technique for a dimension are left out of
    /// that dimension.
    pub fn matrices(&self, task: TaskKind, techniques: &[TechniqueKind]) -> Vec<DimensionMatrix> {
        let mut by_dim: BTreeMap<(Instrument, &str), Scores> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.task == task) {
            by_dim
                .entry((r.instrument, r.dimension.as_str()))
                .or_default()
                .entry(r.participant)
                .or_default()
                .insert(r.technique, r.score);
        }
        by_dim
            .into_iter()
            .map(|((instrument, dimension), subjects)| {
                let mut participants = Vec::new();
                let mut values = Vec::new();
                for (p, scores) in subjects {
                    let row: Option<Vec<f64>> = techniques.iter().map(|t| scores.get(t).copied()).collect();
                    if let Some(row) = row {
                        participants.push(p);
                        values.push(row);
                    }
                }
                DimensionMatrix { instrument, dimension: dimension.to_string(), participants, values }
            })
            .collect()
    }
}
