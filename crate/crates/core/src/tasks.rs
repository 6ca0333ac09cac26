//! Trial protocol for the two selection tasks.
//!
//! Task 1 (with reference) accepts only selections inside the validity
//! radius and keeps counting clicks until one lands. Task 2 (without
//! reference) first shows the target for a fixed time, then takes the first
//! selection unconditionally.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geom::{target_position, Vec3};
use crate::techniques::{RenderState, SelectionEvent, TechniqueKind};

/// Task 1 validity radius (inclusive), meters.
pub const VALID_RADIUS: f64 = 0.5;
/// How long the Task 2 target stays visible, seconds.
pub const SHOW_DURATION: f64 = 1.5;
/// Trials not finished after this many seconds of selection time time out.
pub const TRIAL_TIMEOUT: f64 = 30.0;
/// Gap between the target and the reference box face, meters.
pub const REFERENCE_OFFSET: f64 = 0.5;
/// Edge length of the reference box, meters.
pub const REFERENCE_BOX_SIZE: f64 = 0.5;
/// Horizontal offset of every target from the central axis, degrees.
pub const TARGET_YAW_DEG: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "with_ref")]
    WithReference,
    #[serde(rename = "without_ref")]
    WithoutReference,
}

impl TaskKind {
    pub const ALL: [TaskKind; 2] = [TaskKind::WithReference, TaskKind::WithoutReference];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::WithReference => "with_ref",
            TaskKind::WithoutReference => "without_ref",
        }
    }

    pub fn parse(s: &str) -> Option<TaskKind> {
        TaskKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub task: TaskKind,
    pub technique: TechniqueKind,
    pub distance: f64,
    /// +1 places the target right of the central axis, -1 left.
    pub yaw_side: i8,
    pub target: Vec3,
    pub repeat_index: u8,
}

impl TrialSpec {
    pub fn new(
        task: TaskKind,
        technique: TechniqueKind,
        distance: f64,
        yaw_side: i8,
        repeat_index: u8,
        eye_height: f64,
    ) -> Self {
        let yaw_side = if yaw_side < 0 { -1 } else { 1 };
        Self {
            task,
            technique,
            distance,
            yaw_side,
            target: target_position(distance, TARGET_YAW_DEG * yaw_side as f64, eye_height),
            repeat_index,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialEventKind {
    Start,
    ShowEnd,
    /// Task 1 click outside the validity radius.
    ClickRejected,
    /// Click that completed the trial.
    ClickAccepted,
    /// Task 2 click during the show phase.
    ClickIgnored,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialEvent {
    /// Seconds since the trial started.
    pub t: f64,
    pub kind: TrialEventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub spec: TrialSpec,
    pub participant: u32,
    /// `None` only for timed-out trials.
    pub selection: Option<Vec3>,
    pub selection_time: f64,
    pub error_distance: Option<f64>,
    pub clicks: u32,
    pub timeout: bool,
    pub seed: u64,
    pub events: Vec<TrialEvent>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum TrialPhase {
    Show { remaining: f64 },
    Select,
    Done,
}

pub fn task1_validate(selected: Vec3, target: Vec3) -> bool {
    error_distance(selected, target) <= VALID_RADIUS
}

pub fn error_distance(selected: Vec3, target: Vec3) -> f64 {
    selected.distance(target)
}

/// Running state of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    spec: TrialSpec,
    participant: u32,
    seed: u64,
    start_t: f64,
    phase: TrialPhase,
    clicks: u32,
    events: Vec<TrialEvent>,
}

impl Trial {
    pub fn new(spec: TrialSpec, participant: u32, seed: u64, start_t: f64) -> Self {
        let phase = match spec.task {
            TaskKind::WithReference => TrialPhase::Select,
            TaskKind::WithoutReference => TrialPhase::Show { remaining: SHOW_DURATION },
        };
        Self {
            spec,
            participant,
            seed,
            start_t,
            phase,
            clicks: 0,
            events: alloc::vec![TrialEvent { t: 0.0, kind: TrialEventKind::Start }],
        }
    }

    pub fn spec(&self) -> &TrialSpec {
        &self.spec
    }

    pub fn phase(&self) -> TrialPhase {
        self.phase
    }

    pub fn clicks(&self) -> u32 {
        self.clicks
    }

    pub fn start_t(&self) -> f64 {
        self.start_t
    }

    /// Trial-relative time at which the selection clock starts.
    fn clock_origin(&self) -> f64 {
        match self.spec.task {
            TaskKind::WithReference => 0.0,
            TaskKind::WithoutReference => SHOW_DURATION,
        }
    }

    /// Seconds on the selection clock at absolute time `t` (negative while
    /// the Task 2 target is still shown).
    pub fn selection_clock(&self, t: f64) -> f64 {
        t - self.start_t - self.clock_origin()
    }

    /// Advances the trial to absolute time `t`, then applies the selection
    /// made in that frame, if any. Returns the finished record once.
    pub fn step(&mut self, t: f64, selection: Option<&SelectionEvent>) -> Option<TrialRecord> {
        if self.phase == TrialPhase::Done {
            return None;
        }
        let rel = t - self.start_t;
        if let TrialPhase::Show { .. } = self.phase {
            if rel >= SHOW_DURATION {
                self.phase = TrialPhase::Select;
                self.events.push(TrialEvent { t: SHOW_DURATION, kind: TrialEventKind::ShowEnd });
            } else {
                self.phase = TrialPhase::Show { remaining: SHOW_DURATION - rel };
            }
        }

        if let Some(sel) = selection {
            match (self.spec.task, self.phase) {
                (TaskKind::WithoutReference, TrialPhase::Show { .. }) => {
                    self.events.push(TrialEvent { t: rel, kind: TrialEventKind::ClickIgnored });
                }
                (TaskKind::WithoutReference, _) => {
                    self.clicks += 1;
                    return Some(self.finish(rel, sel.position));
                }
                (TaskKind::WithReference, _) => {
                    self.clicks += 1;
                    if task1_validate(sel.position, self.spec.target) {
                        return Some(self.finish(rel, sel.position));
                    }
                    self.events.push(TrialEvent { t: rel, kind: TrialEventKind::ClickRejected });
                }
            }
        }

        if self.selection_clock(t) >= TRIAL_TIMEOUT {
            self.phase = TrialPhase::Done;
            self.events.push(TrialEvent { t: rel, kind: TrialEventKind::Timeout });
            return Some(TrialRecord {
                spec: self.spec,
                participant: self.participant,
                selection: None,
                selection_time: rel - self.clock_origin(),
                error_distance: None,
                clicks: self.clicks,
                timeout: true,
                seed: self.seed,
                events: self.events.clone(),
            });
        }
        None
    }

    fn finish(&mut self, rel: f64, position: Vec3) -> TrialRecord {
        self.phase = TrialPhase::Done;
        self.events.push(TrialEvent { t: rel, kind: TrialEventKind::ClickAccepted });
        TrialRecord {
            spec: self.spec,
            participant: self.participant,
            selection: Some(position),
            selection_time: rel - self.clock_origin(),
            error_distance: Some(error_distance(position, self.spec.target)),
            clicks: self.clicks,
            timeout: false,
            seed: self.seed,
            events: self.events.clone(),
        }
    }
}

/// Pose of the Task 1 reference box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxPose {
    pub center: Vec3,
    /// Center of the face turned towards the participant.
    pub near_face_center: Vec3,
    /// Outward normal of that face (points back at the participant).
    pub face_normal: Vec3,
    pub size: f64,
}

/// Places the reference box so its near face sits just beyond the target on
/// the eye-to-target bearing, facing the participant.
pub fn reference_box(target: Vec3, participant_eye: Vec3) -> Option<BoxPose> {
    let u = (target - participant_eye).normalized()?;
    let near_face_center = target + u * REFERENCE_OFFSET;
    Some(BoxPose {
        center: near_face_center + u * (REFERENCE_BOX_SIZE / 2.0),
        near_face_center,
        face_normal: -u,
        size: REFERENCE_BOX_SIZE,
    })
}

/// What stays visible while the Task 2 target is shown: the dominant ray
/// (with its stripes) for bimanual techniques, nothing for one-hand.
pub fn show_phase_render_filter(kind: TechniqueKind, render: &RenderState) -> RenderState {
    if !kind.is_bimanual() {
        return RenderState::default();
    }
    RenderState {
        dominant_ray: render.dominant_ray,
        stripes_visible: render.stripes_visible,
        stripe_boundaries: render.stripe_boundaries.clone(),
        selected_stripe: render.selected_stripe,
        ..RenderState::default()
    }
}
