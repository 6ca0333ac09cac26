//! Geometry kernel: vectors, rays, closest points between two forward
//! half-lines, ballistic arcs and target placement.
//!
//! Frame convention: right-handed, +Y up, meters. The participant stands at
//! the local origin on top of the pillar and faces +Z.

use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Below this cross-product norm two unit directions are treated as parallel.
pub const PARALLEL_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_squared())
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or `None` for a zero or
    /// non-finite vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn midpoint(self, o: Vec3) -> Vec3 {
        (self + o) * 0.5
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeomError {
    /// Direction is zero-length or not finite.
    BadDirection,
    /// Origin has a non-finite component.
    BadOrigin,
}

impl core::fmt::Display for GeomError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeomError::BadDirection => f.write_str("ray direction must be finite and non-zero"),
            GeomError::BadOrigin => f.write_str("ray origin must be finite"),
        }
    }
}

/// Half-line with a unit direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    /// Builds a ray, normalizing `dir`.
    pub fn new(origin: Vec3, dir: Vec3) -> Result<Ray, GeomError> {
        if !origin.is_finite() {
            return Err(GeomError::BadOrigin);
        }
        let dir = dir.normalized().ok_or(GeomError::BadDirection)?;
        Ok(Ray { origin, dir })
    }

    /// Ray from `origin` through `target`.
    pub fn towards(origin: Vec3, target: Vec3) -> Result<Ray, GeomError> {
        Ray::new(origin, target - origin)
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }

    /// Parameter of the orthogonal projection of `p` onto the carrier line.
    pub fn project(&self, p: Vec3) -> f64 {
        (p - self.origin).dot(self.dir)
    }
}

/// Closest pair of points between two forward half-lines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayPairSolution {
    pub t_a: f64,
    pub t_b: f64,
    pub p_a: Vec3,
    pub p_b: Vec3,
    pub gap: f64,
    /// A parameter hit the `t >= 0` bound, so the connecting segment need
    /// not be orthogonal to both rays.
    pub clamped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Degenerate;

/// Closest points between two rays restricted to `t_a, t_b >= 0`.
///
/// The squared distance is a convex quadratic in `(t_a, t_b)`. If its
/// unconstrained minimizer leaves the quadrant, the constrained minimum lies
/// on one of the two boundary edges; both are minimized exactly and the
/// better one is kept. All formulas are written so that swapping the rays
/// swaps the parameters bit-for-bit.
pub fn closest_points(a: &Ray, b: &Ray) -> Result<RayPairSolution, Degenerate> {
    if a.dir.cross(b.dir).norm() < PARALLEL_EPS {
        return Err(Degenerate);
    }
    let w0 = a.origin - b.origin;
    let aa = a.dir.dot(a.dir);
    let bb = b.dir.dot(b.dir);
    let ab = a.dir.dot(b.dir);
    let d = a.dir.dot(w0);
    let e = b.dir.dot(w0);
    let denom = aa * bb - ab * ab;

    let s = (ab * e - bb * d) / denom;
    let t = (aa * e - ab * d) / denom;
    if s >= 0.0 && t >= 0.0 {
        return Ok(solution(a, b, s, t, false));
    }

    // Edge t_a = 0: minimize |w0 - t_b * dir_b|.
    let on_b = solution(a, b, 0.0, (e / bb).max(0.0), true);
    // Edge t_b = 0: minimize |w0 + t_a * dir_a|.
    let on_a = solution(a, b, (-d / aa).max(0.0), 0.0, true);
    Ok(if on_b.gap < on_a.gap {
        on_b
    } else if on_a.gap < on_b.gap {
        on_a
    } else if on_b.t_b >= on_a.t_a {
        // Equal gaps: break the tie on the larger travelled parameter so the
        // choice does not depend on argument order.
        on_b
    } else {
        on_a
    })
}

fn solution(a: &Ray, b: &Ray, t_a: f64, t_b: f64, clamped: bool) -> RayPairSolution {
    let p_a = a.at(t_a);
    let p_b = b.at(t_b);
    RayPairSolution { t_a, t_b, p_a, p_b, gap: (p_a - p_b).norm(), clamped }
}

/// Ballistic arc launched from a controller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parabola {
    pub origin: Vec3,
    pub launch_dir: Vec3,
    /// Launch speed in m/s.
    pub speed: f64,
    /// Downward acceleration magnitude in m/s².
    pub gravity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoCrossing;

impl Parabola {
    pub fn eval(&self, t: f64) -> Vec3 {
        self.origin + self.launch_dir * (self.speed * t) - Vec3::new(0.0, 0.5 * self.gravity * t * t, 0.0)
    }

    /// Highest point reached by the arc (its launch height if fired downward).
    pub fn apex_height(&self) -> f64 {
        let vy = self.speed * self.launch_dir.y;
        if vy <= 0.0 {
            self.origin.y
        } else {
            self.origin.y + vy * vy / (2.0 * self.gravity)
        }
    }

    /// First time after launch at which the descending branch passes
    /// through the horizontal plane `y = plane_y`.
    pub fn plane_intersect(&self, plane_y: f64) -> Result<(f64, Vec3), NoCrossing> {
        // 0.5 g t² - vy t + (plane_y - y0) = 0
        let vy = self.speed * self.launch_dir.y;
        let c = plane_y - self.origin.y;
        let disc = vy * vy - 2.0 * self.gravity * c;
        if disc < 0.0 {
            return Err(NoCrossing);
        }
        let sq = libm::sqrt(disc);
        // Larger root, evaluated without cancellation.
        let t = if vy >= 0.0 {
            (vy + sq) / self.gravity
        } else {
            let q = vy - sq;
            if q == 0.0 {
                return Err(NoCrossing);
            }
            2.0 * c / q
        };
        if !(t > 0.0) || !t.is_finite() {
            return Err(NoCrossing);
        }
        let mut point = self.eval(t);
        // The root is exact up to rounding; pin the height to the plane.
        point.y = plane_y;
        Ok((t, point))
    }
}

/// Target position `distance` meters from the participant, rotated
/// `yaw_deg` about the vertical axis (positive towards +X), at eye height.
pub fn target_position(distance: f64, yaw_deg: f64, eye_height: f64) -> Vec3 {
    let yaw = yaw_deg.to_radians();
    Vec3::new(distance * libm::sin(yaw), eye_height, distance * libm::cos(yaw))
}

/// Rotates `v` about the unit `axis` by `angle` radians (Rodrigues).
pub fn rotate(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

/// Any unit vector orthogonal to the unit vector `v`.
pub fn any_orthogonal(v: Vec3) -> Vec3 {
    let helper = if v.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
    v.cross(helper).normalized().unwrap_or(Vec3::Z)
}
