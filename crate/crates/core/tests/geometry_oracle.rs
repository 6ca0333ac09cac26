use crossrays_core::geom::{closest_points, target_position, Parabola, Ray, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn sq_gap(a: &Ray, b: &Ray, ta: f64, tb: f64) -> f64 {
    let d = a.at(ta) - b.at(tb);
    d.dot(d)
}

fn unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}

/// Minimum of the squared gap over `t_a, t_b >= 0` by a 100x100 grid on
/// [0, 100]^2 followed by a compass search with diagonal moves. Shares no
/// code with the closed-form solver.
fn brute_force_min(a: &Ray, b: &Ray) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..100 {
        for j in 0..100 {
            let (ta, tb) = (i as f64 * 100.0 / 99.0, j as f64 * 100.0 / 99.0);
            let g = sq_gap(a, b, ta, tb);
            if g < best.0 {
                best = (g, ta, tb);
            }
        }
    }
    let (mut f, mut ta, mut tb) = best;
    let mut step = 1.0;
    let dirs = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
    for _ in 0..2_000_000 {
        let mut improved = false;
        for (da, db) in dirs {
            let na = (ta + da * step).max(0.0);
            let nb = (tb + db * step).max(0.0);
            let g = sq_gap(a, b, na, nb);
            if g < f {
                f = g;
                ta = na;
                tb = nb;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        } else {
            step *= 1.5;
        }
    }
    (f.max(0.0).sqrt(), ta, tb)
}

#[test]
fn closest_points_match_brute_force() {
    let start = std::time::Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0xC105E);
    let mut unclamped = 0;
    let mut checked = 0;
    while checked < 1000 {
        let a = Ray::new(
            Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            unit(&mut rng),
        )
        .unwrap();
        let b = Ray::new(
            Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            unit(&mut rng),
        )
        .unwrap();
        if a.dir.cross(b.dir).norm() < 1e-2 {
            continue;
        }
        checked += 1;
        let s = closest_points(&a, &b).unwrap();
        let (oracle, _, _) = brute_force_min(&a, &b);
        assert!((s.gap - oracle).abs() < 1e-6, "gap {} oracle {} for {a:?} {b:?}", s.gap, oracle);
        assert!((s.gap - sq_gap(&a, &b, s.t_a, s.t_b).sqrt()).abs() < 1e-12);
        if !s.clamped {
            unclamped += 1;
            let d = s.p_a - s.p_b;
            assert!(d.dot(a.dir).abs() < 1e-6);
            assert!(d.dot(b.dir).abs() < 1e-6);
        }
    }
    assert!(unclamped > 100, "too few unclamped cases: {unclamped}");
    assert!(start.elapsed().as_secs_f64() < 60.0);
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn dir() -> impl Strategy<Value = Vec3> {
    vec3().prop_filter("non-zero", |v| v.norm() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn swapping_rays_swaps_solution(oa in vec3(), da in dir(), ob in vec3(), db in dir()) {
        let a = Ray::new(oa, da).unwrap();
        let b = Ray::new(ob, db).unwrap();
        match (closest_points(&a, &b), closest_points(&b, &a)) {
            (Ok(ab), Ok(ba)) => {
                prop_assert_eq!(ab.gap.to_bits(), ba.gap.to_bits());
                prop_assert_eq!(ab.t_a.to_bits(), ba.t_b.to_bits());
                prop_assert_eq!(ab.t_b.to_bits(), ba.t_a.to_bits());
                prop_assert_eq!(ab.p_a, ba.p_b);
                prop_assert_eq!(ab.p_b, ba.p_a);
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "degeneracy must be symmetric"),
        }
    }

    #[test]
    fn gap_is_a_lower_bound(oa in vec3(), da in dir(), ob in vec3(), db in dir(), ta in 0.0..50.0f64, tb in 0.0..50.0f64) {
        let a = Ray::new(oa, da).unwrap();
        let b = Ray::new(ob, db).unwrap();
        if let Ok(s) = closest_points(&a, &b) {
            prop_assert!(s.gap <= sq_gap(&a, &b, ta, tb).sqrt() + 1e-9);
            prop_assert!(s.t_a >= 0.0 && s.t_b >= 0.0);
        }
    }

    #[test]
    fn parabola_crossing_lies_on_plane(
        origin in vec3(),
        d in dir(),
        speed in 1.0..20.0f64,
        plane_y in -10.0..10.0f64,
    ) {
        let p = Parabola { origin, launch_dir: d.normalized().unwrap(), speed, gravity: 9.81 };
        match p.plane_intersect(plane_y) {
            Ok((t, point)) => {
                prop_assert!(t > 0.0);
                prop_assert!((p.eval(t).y - plane_y).abs() < 1e-9);
                prop_assert_eq!(point.y, plane_y);
                // Descending branch: vertical velocity is not upward.
                prop_assert!(speed * p.launch_dir.y - 9.81 * t <= 1e-9);
            }
            Err(_) => prop_assert!(p.apex_height() <= plane_y + 1e-9),
        }
    }

    #[test]
    fn target_position_geometry(distance in 0.1..20.0f64, yaw in -180.0..180.0f64, eye in 0.0..3.0f64) {
        let t = target_position(distance, yaw, eye);
        prop_assert_eq!(t.y, eye);
        prop_assert!((Vec3::new(t.x, 0.0, t.z).norm() - distance).abs() < 1e-9);
    }
}
