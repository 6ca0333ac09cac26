//! One technique driven through one trial, frame by frame.
//!
//! Both the synthetic agent and the interactive service feed frames through
//! [`TrialSession`], so a recorded frame stream replays identically in
//! either.

use serde::{Deserialize, Serialize};

use crate::tasks::{show_phase_render_filter, Trial, TrialPhase, TrialRecord, TrialSpec};
use crate::techniques::{InputFrame, RenderState, TechniqueConfig, TechniqueState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hud {
    /// Seconds since the trial started.
    pub elapsed: f64,
    pub clicks: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionFrame {
    /// Scene as the participant sees it (filtered while a target is shown).
    pub render: RenderState,
    pub phase: TrialPhase,
    pub hud: Hud,
    /// Set on the frame that finishes the trial.
    pub record: Option<TrialRecord>,
}

#[derive(Clone, Debug)]
pub struct TrialSession {
    config: TechniqueConfig,
    technique: TechniqueState,
    trial: Trial,
}

impl TrialSession {
    pub fn new(spec: TrialSpec, participant: u32, seed: u64, start_t: f64, config: TechniqueConfig) -> Self {
        Self {
            technique: TechniqueState::new(spec.technique, &config),
            trial: Trial::new(spec, participant, seed, start_t),
            config,
        }
    }

    pub fn spec(&self) -> &TrialSpec {
        self.trial.spec()
    }

    pub fn technique_state(&self) -> &TechniqueState {
        &self.technique
    }

    pub fn trial(&self) -> &Trial {
        &self.trial
    }

    pub fn is_done(&self) -> bool {
        self.trial.phase() == TrialPhase::Done
    }

    pub fn advance(&mut self, frame: &InputFrame) -> SessionFrame {
        let out = self.technique.step(frame, &self.config);
        self.technique = out.state;
        let record = self.trial.step(frame.t, out.event.as_ref());
        let phase = self.trial.phase();
        let render = match phase {
            TrialPhase::Show { .. } => show_phase_render_filter(self.technique.kind, &out.render),
            _ => out.render,
        };
        SessionFrame {
            render,
            phase,
            hud: Hud { elapsed: frame.t - self.trial.start_t(), clicks: self.trial.clicks() },
            record,
        }
    }
}
