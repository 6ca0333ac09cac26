//! Synthetic participant.
//!
//! The agent aims each controller at an aim point derived from its goal and
//! closes the angular error with proportional control. Motor noise is
//! signal dependent: each frame the controller is jittered by a rotation
//! whose SD is `angular_noise_sd` while the remaining error is at least
//! `noise_saturation_angle`, shrinking in proportion below that. The agent
//! clicks once the visible cursor has stayed within `click_tolerance` of its
//! goal for `dwell_frames` consecutive frames.
//!
//! The agent only acts on what the participant can see: while a Task 2
//! target is shown it may steer the dominant ray and step stripes
//! (bimanual techniques) but nothing else.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use serde::{Deserialize, Serialize};

use crate::geom::{any_orthogonal, rotate, Parabola, Ray, Vec3};
use crate::session::TrialSession;
use crate::tasks::{TaskKind, TrialPhase, TrialRecord, TrialSpec, TRIAL_TIMEOUT};
use crate::techniques::{stripe_index, InputFrame, TechniqueConfig, TechniqueKind};

/// Golden-ratio increment used to decorrelate participant streams.
pub const PHI64: u64 = 0x9E37_79B9_7F4A_7C15;

/// Controller positions relative to the participant origin.
pub const DOMINANT_HAND: Vec3 = Vec3::new(0.2, 1.35, 0.3);
pub const NONDOMINANT_HAND: Vec3 = Vec3::new(-0.2, 1.35, 0.3);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentParams {
    /// Per-frame angular jitter SD at full movement effort (rad).
    pub angular_noise_sd: f64,
    /// Aiming error at and above which jitter is at full strength (rad).
    pub noise_saturation_angle: f64,
    /// Depth error SD of a remembered target, per meter of distance.
    pub depth_memory_sd_per_m: f64,
    /// Lateral error SD of a remembered target, per meter of distance.
    pub lateral_memory_sd_per_m: f64,
    /// Proportional aiming gain (1/s).
    pub gain: f64,
    pub reaction_delay: f64,
    pub click_tolerance: f64,
    pub dwell_frames: u32,
    pub frame_rate: f64,
    /// Joystick deflection per meter of elevation error (one-hand).
    pub elevation_gain: f64,
    /// Frames the joystick is held, then released, per stripe step.
    pub flick_frames: u32,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self::noisy()
    }
}

impl AgentParams {
    pub fn noisy() -> Self {
        Self {
            angular_noise_sd: 0.004,
            noise_saturation_angle: 0.05,
            depth_memory_sd_per_m: 0.08,
            lateral_memory_sd_per_m: 0.03,
            gain: 5.0,
            reaction_delay: 0.3,
            click_tolerance: 0.05,
            dwell_frames: 9,
            frame_rate: 90.0,
            elevation_gain: 3.0,
            flick_frames: 6,
        }
    }

    pub fn noiseless() -> Self {
        Self { angular_noise_sd: 0.0, depth_memory_sd_per_m: 0.0, lateral_memory_sd_per_m: 0.0, ..Self::noisy() }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "noisy" => Some(Self::noisy()),
            "noiseless" => Some(Self::noiseless()),
            _ => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        let nonneg = [
            self.angular_noise_sd,
            self.noise_saturation_angle,
            self.depth_memory_sd_per_m,
            self.lateral_memory_sd_per_m,
            self.gain,
            self.reaction_delay,
            self.elevation_gain,
        ];
        nonneg.iter().all(|v| *v >= 0.0 && v.is_finite())
            && self.frame_rate > 0.0
            && self.click_tolerance > 0.0
            && self.noise_saturation_angle > 0.0
    }
}

/// SplitMix64 output for the single state `x`.
pub fn splitmix64(x: u64) -> u64 {
    SplitMix64::seed_from_u64(x).next_u64()
}

/// Seed of one trial, reproducible from the master seed alone.
pub fn derive_trial_seed(master_seed: u64, participant: u32, trial_index: u64) -> u64 {
    splitmix64(master_seed ^ (participant as u64).wrapping_mul(PHI64) ^ trial_index)
}

fn normal<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    z * sd
}

/// The target as the agent remembers it: a depth error along the
/// eye-to-target axis plus an isotropic lateral error, both scaling with
/// distance.
pub fn remember_target<R: Rng + ?Sized>(target: Vec3, distance: f64, params: &AgentParams, rng: &mut R) -> Vec3 {
    let eye = Vec3::new(0.0, target.y, 0.0);
    let u = (target - eye).normalized().unwrap_or(Vec3::Z);
    let h = Vec3::Y.cross(u).normalized().unwrap_or(Vec3::X);
    let v = u.cross(h);
    let depth = normal(rng, params.depth_memory_sd_per_m * distance);
    let lat_h = normal(rng, params.lateral_memory_sd_per_m * distance);
    let lat_v = normal(rng, params.lateral_memory_sd_per_m * distance);
    target + u * depth + h * lat_h + v * lat_v
}

/// Angle between two unit vectors.
fn angle_between(a: Vec3, b: Vec3) -> f64 {
    // atan2 form stays accurate for tiny angles.
    libm::atan2(a.cross(b).norm(), a.dot(b))
}

/// One proportional-control step from `current` towards `desired`, then
/// signal-dependent jitter.
fn servo_direction<R: Rng + ?Sized>(current: Vec3, desired: Vec3, params: &AgentParams, rng: &mut R) -> Vec3 {
    let dt = 1.0 / params.frame_rate;
    let err = angle_between(current, desired);
    let mut dir = current;
    if err > 0.0 {
        if let Some(axis) = current.cross(desired).normalized() {
            dir = rotate(current, axis, err * (params.gain * dt).min(1.0));
        } else {
            dir = desired;
        }
    }
    let sd = params.angular_noise_sd * (err / params.noise_saturation_angle).min(1.0);
    if sd > 0.0 {
        let u = any_orthogonal(dir);
        let w = dir.cross(u);
        dir = rotate(dir, u, normal(rng, sd));
        dir = rotate(dir, w, normal(rng, sd));
    }
    dir.normalized().unwrap_or(current)
}

/// Launch direction from `hand` whose arc lands at the horizontal position
/// of `goal` on the plane `y = plane_y`, taking the flat solution. When the
/// goal is out of reach the maximum-range pitch is returned.
pub fn ballistic_aim(hand: Vec3, goal: Vec3, plane_y: f64, speed: f64, gravity: f64) -> Vec3 {
    let flat = Vec3::new(goal.x - hand.x, 0.0, goal.z - hand.z);
    let reach = flat.norm();
    let heading = flat.normalized().unwrap_or(Vec3::Z);
    let dir_at = |pitch: f64| heading * libm::cos(pitch) + Vec3::Y * libm::sin(pitch);
    let range = |pitch: f64| -> f64 {
        let arc = Parabola { origin: hand, launch_dir: dir_at(pitch), speed, gravity };
        match arc.plane_intersect(plane_y) {
            Ok((_, p)) => Vec3::new(p.x - hand.x, 0.0, p.z - hand.z).norm(),
            Err(_) => -1.0,
        }
    };
    let half_pi = core::f64::consts::FRAC_PI_2;
    let lo = if plane_y > hand.y {
        let s = libm::sqrt(2.0 * gravity * (plane_y - hand.y)) / speed;
        if s >= 1.0 {
            return Vec3::Y;
        }
        libm::asin(s) + 1e-9
    } else {
        -half_pi + 1e-6
    };
    // Golden-section search for the maximum-range pitch.
    let (mut a, mut b) = (lo, half_pi - 1e-6);
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if range(c) < range(d) {
            a = c;
        } else {
            b = d;
        }
    }
    let peak = 0.5 * (a + b);
    if range(peak) <= reach {
        return dir_at(peak);
    }
    let (mut a, mut b) = (lo, peak);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if range(m) < reach {
            a = m;
        } else {
            b = m;
        }
    }
    dir_at(0.5 * (a + b))
}

/// Where the arc aimed at `goal` actually lands on the goal's height plane.
fn reachable_landing(goal: Vec3, cfg: &TechniqueConfig) -> Vec3 {
    let dir = ballistic_aim(DOMINANT_HAND, goal, goal.y, cfg.arc_speed, cfg.gravity);
    let arc = Parabola { origin: DOMINANT_HAND, launch_dir: dir, speed: cfg.arc_speed, gravity: cfg.gravity };
    arc.plane_intersect(goal.y).map(|(_, p)| p).unwrap_or(goal)
}

#[derive(Clone, Copy, Debug, Default)]
struct Flick {
    direction: f64,
    frames_left: u32,
    pushing: bool,
}

/// Synthetic participant bound to a technique configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Agent {
    pub params: AgentParams,
    pub config: TechniqueConfig,
}

impl Agent {
    pub fn new(params: AgentParams, config: TechniqueConfig) -> Self {
        Self { params, config }
    }

    pub fn drive_trial(&self, spec: &TrialSpec, participant: u32, seed: u64) -> TrialRecord {
        self.run(spec, participant, seed, |_| {})
    }

    /// Like [`Agent::drive_trial`] but also returns every frame sent.
    pub fn drive_trial_recorded(
        &self,
        spec: &TrialSpec,
        participant: u32,
        seed: u64,
    ) -> (TrialRecord, Vec<InputFrame>) {
        let mut frames = Vec::new();
        let rec = self.run(spec, participant, seed, |f| frames.push(*f));
        (rec, frames)
    }

    fn run(&self, spec: &TrialSpec, participant: u32, seed: u64, mut sink: impl FnMut(&InputFrame)) -> TrialRecord {
        let p = &self.params;
        let cfg = &self.config;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let goal = match spec.task {
            TaskKind::WithReference => spec.target,
            TaskKind::WithoutReference => remember_target(spec.target, spec.distance, p, &mut rng),
        };
        let kind = spec.technique;
        let stripe_len = cfg.stripe_length;

        let mut session = TrialSession::new(*spec, participant, seed, 0.0, *cfg);
        let mut dom_dir = Vec3::Z;
        let mut nondom_dir = Vec3::Z;
        let mut flick: Option<Flick> = None;
        let mut dwell = 0u32;
        let mut observed_stripe = session.technique_state().selected_stripe;
        let mut offset = 0.0;
        let mut showing = spec.task == TaskKind::WithoutReference;

        let desired_dom = (goal - DOMINANT_HAND).normalized().unwrap_or(Vec3::Z);
        let goal_param = goal.distance(DOMINANT_HAND);
        let goal_stripe = stripe_index(goal_param, stripe_len).min(cfg.max_stripe());
        let nondom_aim = match kind {
            TechniqueKind::CursorSync => {
                let near = (goal_param - goal_stripe as f64 * stripe_len).clamp(0.0, stripe_len);
                DOMINANT_HAND + desired_dom * near
            }
            _ => goal,
        };
        let desired_nondom = (nondom_aim - NONDOMINANT_HAND).normalized().unwrap_or(Vec3::Z);
        // An arc cannot land everywhere; settle for the nearest reachable point.
        let goal = if kind.is_bimanual() { goal } else { reachable_landing(goal, cfg) };

        // Hard stop well past the protocol timeout.
        let max_frames = ((TRIAL_TIMEOUT + 5.0) * p.frame_rate) as u64;
        let mut n: u64 = 0;
        loop {
            let t = n as f64 / p.frame_rate;
            let active = t >= p.reaction_delay;
            let mut joystick = 0.0;

            if active {
                if kind.is_bimanual() {
                    dom_dir = servo_direction(dom_dir, desired_dom, p, &mut rng);
                    let stripe_ready = !kind.uses_stripe_selection() || observed_stripe == goal_stripe;
                    if kind.uses_stripe_selection() {
                        joystick = flick_axis(&mut flick, observed_stripe, goal_stripe, p.flick_frames);
                    }
                    if !showing && stripe_ready {
                        nondom_dir = servo_direction(nondom_dir, desired_nondom, p, &mut rng);
                    }
                } else if !showing {
                    let plane = cfg.base_plane_y + offset;
                    let aim = ballistic_aim(DOMINANT_HAND, goal, plane, cfg.arc_speed, cfg.gravity);
                    dom_dir = servo_direction(dom_dir, aim, p, &mut rng);
                    let wanted = goal.y - cfg.base_plane_y;
                    joystick = (p.elevation_gain * (wanted - offset)).clamp(-1.0, 1.0);
                }
            }

            let trigger = !showing && dwell >= p.dwell_frames;
            let frame = InputFrame {
                t,
                dominant: Ray { origin: DOMINANT_HAND, dir: dom_dir },
                nondominant: Ray { origin: NONDOMINANT_HAND, dir: nondom_dir },
                joystick_y: joystick,
                trigger_pressed_edge: trigger,
            };
            sink(&frame);
            let out = session.advance(&frame);
            if let Some(rec) = out.record {
                return rec;
            }
            if trigger {
                dwell = 0;
            }

            observed_stripe = out.render.selected_stripe.unwrap_or(observed_stripe);
            offset = session.technique_state().elevation_offset;
            showing = matches!(out.phase, TrialPhase::Show { .. });
            match out.render.cursor {
                Some(c) if !showing && c.center.distance(goal) <= p.click_tolerance => dwell += 1,
                _ => dwell = 0,
            }

            n += 1;
            if n > max_frames {
                // Unreachable while the protocol timeout is enforced.
                panic!("trial did not terminate");
            }
        }
    }
}

/// Joystick deflection for the current frame of a stripe-stepping flick.
fn flick_axis(flick: &mut Option<Flick>, stripe: u32, goal: u32, hold: u32) -> f64 {
    if flick.is_none() && stripe != goal {
        let direction = if goal > stripe { 1.0 } else { -1.0 };
        *flick = Some(Flick { direction, frames_left: hold.max(1), pushing: true });
    }
    let Some(f) = flick.as_mut() else { return 0.0 };
    let axis = if f.pushing { f.direction } else { 0.0 };
    f.frames_left -= 1;
    if f.frames_left == 0 {
        if f.pushing {
            f.pushing = false;
            f.frames_left = hold.max(1);
        } else {
            *flick = None;
        }
    }
    axis
}
