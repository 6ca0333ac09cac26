//! Frame-driven state machines for the five selection techniques.
//!
//! Every technique consumes the same [`InputFrame`] stream and produces a
//! [`RenderState`] plus, on a trigger edge with a live cursor, a
//! [`SelectionEvent`]. Transitions are pure: [`TechniqueState::step`] never
//! mutates its receiver.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geom::{closest_points, Parabola, Ray, Vec3};

/// Joystick deflection that fires one stripe step.
pub const JOYSTICK_FIRE: f64 = 0.7;
/// Deflection below which the joystick re-arms.
pub const JOYSTICK_REARM: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechniqueKind {
    SimpleRay,
    SimpleStripe,
    PrecisionStripe,
    CursorSync,
    OneHand,
}

impl TechniqueKind {
    pub const ALL: [TechniqueKind; 5] = [
        TechniqueKind::SimpleRay,
        TechniqueKind::SimpleStripe,
        TechniqueKind::PrecisionStripe,
        TechniqueKind::CursorSync,
        TechniqueKind::OneHand,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Wire name, as used in logs and session messages.
    pub fn as_str(self) -> &'static str {
        match self {
            TechniqueKind::SimpleRay => "simple_ray",
            TechniqueKind::SimpleStripe => "simple_stripe",
            TechniqueKind::PrecisionStripe => "precision_stripe",
            TechniqueKind::CursorSync => "cursor_sync",
            TechniqueKind::OneHand => "one_hand",
        }
    }

    pub fn parse(s: &str) -> Option<TechniqueKind> {
        TechniqueKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Two-letter label used in report tables.
    pub fn short(self) -> &'static str {
        match self {
            TechniqueKind::SimpleRay => "SR",
            TechniqueKind::SimpleStripe => "SS",
            TechniqueKind::PrecisionStripe => "PS",
            TechniqueKind::CursorSync => "CS",
            TechniqueKind::OneHand => "OH",
        }
    }

    pub fn is_bimanual(self) -> bool {
        self != TechniqueKind::OneHand
    }

    pub fn shows_stripes(self) -> bool {
        matches!(self, TechniqueKind::SimpleStripe | TechniqueKind::PrecisionStripe | TechniqueKind::CursorSync)
    }

    /// Whether the joystick selects a stripe before the final selection.
    pub fn uses_stripe_selection(self) -> bool {
        matches!(self, TechniqueKind::PrecisionStripe | TechniqueKind::CursorSync)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TechniqueConfig {
    /// Largest orthogonal gap between the two rays that still yields a cursor.
    pub gap_threshold: f64,
    pub cursor_radius: f64,
    pub stripe_length: f64,
    pub max_ray_length: f64,
    /// Launch speed of the one-hand arc (m/s).
    pub arc_speed: f64,
    pub gravity: f64,
    /// Height of the zero-offset landing plane in the participant frame.
    pub base_plane_y: f64,
    /// Elevation change per second at full joystick deflection (m/s).
    pub elevation_rate: f64,
    pub elevation_min: f64,
    pub elevation_max: f64,
    /// Stripe selected when a stripe-selection technique starts.
    pub initial_stripe: u32,
}

impl Default for TechniqueConfig {
    fn default() -> Self {
        Self {
            gap_threshold: 0.2,
            cursor_radius: 0.1,
            stripe_length: 1.0,
            max_ray_length: 30.0,
            arc_speed: 10.0,
            gravity: 9.81,
            base_plane_y: 0.0,
            elevation_rate: 2.0,
            elevation_min: -15.0,
            elevation_max: 15.0,
            initial_stripe: 2,
        }
    }
}

impl TechniqueConfig {
    pub fn stripe_count(&self) -> u32 {
        libm::floor(self.max_ray_length / self.stripe_length) as u32
    }

    pub fn max_stripe(&self) -> u32 {
        self.stripe_count().saturating_sub(1)
    }

    fn stripe_boundaries(&self) -> Vec<f64> {
        (0..=self.stripe_count()).map(|k| k as f64 * self.stripe_length).collect()
    }
}

/// One tracked sample of both controllers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputFrame {
    pub t: f64,
    pub dominant: Ray,
    pub nondominant: Ray,
    pub joystick_y: f64,
    pub trigger_pressed_edge: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cursor {
    pub center: Vec3,
    pub radius: f64,
}

/// Everything a client needs to draw the technique.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RenderState {
    pub dominant_ray: Option<Ray>,
    pub nondominant_ray: Option<Ray>,
    /// Ballistic arc of the one-hand technique.
    pub arc: Option<Parabola>,
    pub stripes_visible: bool,
    pub stripe_boundaries: Vec<f64>,
    pub selected_stripe: Option<u32>,
    pub cursor: Option<Cursor>,
    pub near_cursor: Option<Vec3>,
    /// Parameter of the cursor along the dominant ray, for ray techniques.
    pub selection_param: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionEvent {
    pub t: f64,
    pub position: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TechniqueState {
    pub kind: TechniqueKind,
    pub selected_stripe: u32,
    pub joystick_armed: bool,
    pub elevation_offset: f64,
    pub last_cursor: Option<Vec3>,
    pub last_t: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub state: TechniqueState,
    pub render: RenderState,
    pub event: Option<SelectionEvent>,
}

impl TechniqueState {
    pub fn new(kind: TechniqueKind, config: &TechniqueConfig) -> Self {
        Self {
            kind,
            selected_stripe: config.initial_stripe.min(config.max_stripe()),
            joystick_armed: true,
            elevation_offset: 0.0,
            last_cursor: None,
            last_t: None,
        }
    }

    /// Pure transition for one input frame.
    pub fn step(&self, frame: &InputFrame, config: &TechniqueConfig) -> StepOutput {
        let mut next = self.clone();
        let dt = match self.last_t {
            Some(prev) if frame.t > prev => frame.t - prev,
            _ => 0.0,
        };
        next.last_t = Some(frame.t);
        let axis = frame.joystick_y.clamp(-1.0, 1.0);

        let mut render = RenderState::default();
        if self.kind.shows_stripes() {
            render.stripes_visible = true;
            render.stripe_boundaries = config.stripe_boundaries();
        }

        let dom = frame.dominant;
        let cursor_pos = match self.kind {
            TechniqueKind::SimpleRay | TechniqueKind::SimpleStripe => {
                render.dominant_ray = Some(dom);
                render.nondominant_ray = Some(frame.nondominant);
                closest_points(&dom, &frame.nondominant).ok().filter(|s| s.gap <= config.gap_threshold).map(|s| {
                    let c = s.p_a.midpoint(s.p_b);
                    render.selection_param = Some(dom.project(c));
                    c
                })
            }
            TechniqueKind::PrecisionStripe | TechniqueKind::CursorSync => {
                let (armed, delta) = joystick_stripe_step(self.joystick_armed, axis);
                next.joystick_armed = armed;
                next.selected_stripe = apply_stripe_delta(self.selected_stripe, delta, config.max_stripe());
                let k = next.selected_stripe;
                render.dominant_ray = Some(dom);
                render.nondominant_ray = Some(frame.nondominant);
                render.selected_stripe = Some(k);
                closest_points(&dom, &frame.nondominant).ok().filter(|s| s.gap <= config.gap_threshold).map(|s| {
                    let param = if self.kind == TechniqueKind::PrecisionStripe {
                        precision_constrain(s.t_a, k, config.stripe_length)
                    } else {
                        let param = cursor_sync_map(s.t_a, k, config.stripe_length);
                        render.near_cursor = Some(dom.at(param - k as f64 * config.stripe_length));
                        param
                    };
                    render.selection_param = Some(param);
                    dom.at(param)
                })
            }
            TechniqueKind::OneHand => {
                next.elevation_offset = (self.elevation_offset + axis * config.elevation_rate * dt)
                    .clamp(config.elevation_min, config.elevation_max);
                let arc = Parabola {
                    origin: dom.origin,
                    launch_dir: dom.dir,
                    speed: config.arc_speed,
                    gravity: config.gravity,
                };
                render.arc = Some(arc);
                onehand_cursor(&arc, next.elevation_offset, config).or(self.last_cursor)
            }
        };

        next.last_cursor = cursor_pos.or(self.last_cursor);
        render.cursor = cursor_pos.map(|center| Cursor { center, radius: config.cursor_radius });
        let event = match cursor_pos {
            Some(position) if frame.trigger_pressed_edge => Some(SelectionEvent { t: frame.t, position }),
            _ => None,
        };
        StepOutput { state: next, render, event }
    }
}

/// Cursor of the basic crossing technique: midpoint of the closest points,
/// present only while the rays pass within the gap threshold.
pub fn crossing_cursor(dominant: &Ray, nondominant: &Ray, config: &TechniqueConfig) -> Option<Vec3> {
    closest_points(dominant, nondominant).ok().filter(|s| s.gap <= config.gap_threshold).map(|s| s.p_a.midpoint(s.p_b))
}

/// Half-open stripe containing `t_along`: stripe `k` covers `[kL, (k+1)L)`.
pub fn stripe_index(t_along: f64, stripe_length: f64) -> u32 {
    libm::floor(t_along.max(0.0) / stripe_length) as u32
}

/// Confines a crossing parameter to the selected stripe.
pub fn precision_constrain(t_cross: f64, stripe: u32, stripe_length: f64) -> f64 {
    let lo = stripe as f64 * stripe_length;
    t_cross.clamp(lo, lo + stripe_length)
}

/// Maps the near-cursor parameter inside the first stripe onto the same
/// fraction of the selected stripe.
pub fn cursor_sync_map(near_t: f64, stripe: u32, stripe_length: f64) -> f64 {
    let fraction = (near_t / stripe_length).clamp(0.0, 1.0);
    (stripe as f64 + fraction) * stripe_length
}

/// Hysteresis for stepping stripes with the joystick. Returns the new armed
/// flag and the step (-1, 0 or +1).
pub fn joystick_stripe_step(armed: bool, axis: f64) -> (bool, i32) {
    if armed {
        if axis >= JOYSTICK_FIRE {
            return (false, 1);
        }
        if axis <= -JOYSTICK_FIRE {
            return (false, -1);
        }
        (true, 0)
    } else if axis.abs() < JOYSTICK_REARM {
        (true, 0)
    } else {
        (false, 0)
    }
}

fn apply_stripe_delta(stripe: u32, delta: i32, max_stripe: u32) -> u32 {
    (stripe as i64 + delta as i64).clamp(0, max_stripe as i64) as u32
}

/// Landing point of the arc on the plane lifted by `elevation_offset`.
/// `None` when the plane sits above the apex.
pub fn onehand_cursor(arc: &Parabola, elevation_offset: f64, config: &TechniqueConfig) -> Option<Vec3> {
    arc.plane_intersect(config.base_plane_y + elevation_offset).ok().map(|(_, p)| p)
}
