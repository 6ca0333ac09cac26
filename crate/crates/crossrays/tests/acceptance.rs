//! Acceptance suite. Prints one line per criterion and exits nonzero if
//! any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use crossrays::analysis::{analyze, AnalyzeOptions};
use crossrays::log::read_log;
use crossrays_core::experiment::{balanced_latin_order, participant_schedule, ExperimentConfig, Measure};
use crossrays_core::geom::{closest_points, Ray, Vec3};
use crossrays_core::stats::anova::{gg_epsilon, rm_anova_one_way, rm_anova_two_way};
use crossrays_core::stats::noncentral_f_cdf;
use crossrays_core::stats::power::{required_sample_size, search_assumptions, PowerQuery};
use crossrays_core::tasks::TaskKind;
use crossrays_core::techniques::{InputFrame, TechniqueConfig, TechniqueKind, TechniqueState};
use rand::{Rng, SeedableRng};
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use sha2::{Digest, Sha256};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// AC1

fn sq_gap(a: &Ray, b: &Ray, ta: f64, tb: f64) -> f64 {
    let d = a.at(ta) - b.at(tb);
    d.dot(d)
}

/// Grid over [0, 100]^2 then compass refinement; independent of the
/// closed-form solver.
fn brute_force_gap(a: &Ray, b: &Ray) -> f64 {
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
    while step >= 1e-14 {
        let mut moved = false;
        for (da, db) in dirs {
            let (na, nb) = ((ta + da * step).max(0.0), (tb + db * step).max(0.0));
            let g = sq_gap(a, b, na, nb);
            if g < f {
                (f, ta, tb, moved) = (g, na, nb, true);
                break;
            }
        }
        step *= if moved { 1.5 } else { 0.5 };
    }
    f.max(0.0).sqrt()
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}

fn ac1() -> Check {
    let start = Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0xAC1);
    let (mut pairs, mut unclamped, mut worst_gap, mut worst_orth) = (0, 0, 0.0f64, 0.0f64);
    while pairs < 1000 {
        let mut origin =
            || Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (oa, ob) = (origin(), origin());
        let a = Ray::new(oa, random_unit(&mut rng)).unwrap();
        let b = Ray::new(ob, random_unit(&mut rng)).unwrap();
        if a.dir.cross(b.dir).norm() < 1e-2 {
            continue;
        }
        pairs += 1;
        let s = closest_points(&a, &b).map_err(|e| format!("solver failed: {e:?}"))?;
        worst_gap = worst_gap.max((s.gap - brute_force_gap(&a, &b)).abs());
        if !s.clamped {
            unclamped += 1;
            let d = s.p_a - s.p_b;
            worst_orth = worst_orth.max(d.dot(a.dir).abs()).max(d.dot(b.dir).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(worst_gap < 1e-6, "max gap deviation {worst_gap:.2e} >= 1e-6");
    ensure!(worst_orth < 1e-6, "max orthogonality residual {worst_orth:.2e} >= 1e-6");
    ensure!(secs < 5.0, "runtime {secs:.2} s >= 5 s");
    Ok(format!(
        "{pairs} pairs, max gap deviation {worst_gap:.1e}, {unclamped} unclamped with max residual {worst_orth:.1e}, {secs:.2} s"
    ))
}

// AC2

fn jitter(rng: &mut impl Rng, s: f64) -> Vec3 {
    Vec3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s))
}

fn frames(seed: u64, n: usize) -> Vec<InputFrame> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let focus = Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(0.5..3.0), rng.random_range(1.0..12.0));
            let spread = rng.random_range(0.0..0.6);
            let d = Vec3::new(0.2, 1.35, 0.3) + jitter(&mut rng, 0.1);
            let nd = Vec3::new(-0.2, 1.35, 0.3) + jitter(&mut rng, 0.1);
            let fd = focus + jitter(&mut rng, spread);
            let fnd = focus + jitter(&mut rng, spread);
            InputFrame {
                t: i as f64 / 90.0,
                dominant: Ray::towards(d, fd).unwrap(),
                nondominant: Ray::towards(nd, fnd).unwrap(),
                joystick_y: if rng.random_bool(0.3) { rng.random_range(-1.0..1.0) } else { 0.0 },
                trigger_pressed_edge: rng.random_bool(0.1),
            }
        })
        .collect()
}

fn ac2() -> Check {
    const N: usize = 10_000;
    let cfg = TechniqueConfig::default();
    ensure!(cfg.gap_threshold == 0.2 && cfg.cursor_radius == 0.1 && cfg.stripe_length == 1.0, "constants {cfg:?}");
    let mut shown_total = 0;
    let mut ps_checked = 0;
    let mut cs_worst = 0.0f64;
    let mut cs_checked = 0;
    for (ti, kind) in TechniqueKind::ALL.into_iter().enumerate() {
        let mut state = TechniqueState::new(kind, &cfg);
        for f in frames(0xAC2 + ti as u64, N) {
            let out = state.step(&f, &cfg);
            let r = &out.render;
            if let Some(c) = r.cursor {
                ensure!(c.radius == 0.1, "{kind:?}: cursor radius {}", c.radius);
            }
            if r.stripes_visible {
                let ok = r.stripe_boundaries.windows(2).all(|w| w[1] - w[0] == 1.0)
                    && r.stripe_boundaries.first() == Some(&0.0);
                ensure!(ok, "{kind:?}: stripe boundaries not 1 m apart");
            }
            if kind != TechniqueKind::OneHand {
                let gap = closest_points(&f.dominant, &f.nondominant).map(|s| s.gap);
                let expect = matches!(gap, Ok(g) if g <= 0.2);
                ensure!(r.cursor.is_some() == expect, "{kind:?}: cursor {:?} with gap {gap:?}", r.cursor);
                shown_total += expect as usize;
            }
            if let (Some(p), Some(k)) = (r.selection_param, r.selected_stripe) {
                let k = k as f64;
                match kind {
                    TechniqueKind::PrecisionStripe => {
                        ensure!(p >= k && p <= k + 1.0, "precision stripe parameter {p} outside [{k}, {}]", k + 1.0);
                        ps_checked += 1;
                    }
                    TechniqueKind::CursorSync => {
                        let near = r.near_cursor.ok_or("cursor sync without near cursor")?;
                        let fraction = f.dominant.project(near).clamp(0.0, 1.0);
                        cs_worst = cs_worst.max(((p - k) - fraction).abs());
                        cs_checked += 1;
                    }
                    _ => {}
                }
            }
            state = out.state;
        }
    }
    ensure!(cs_worst <= 1e-12, "cursor sync fraction mismatch {cs_worst:.2e}");
    ensure!(ps_checked > 1000 && cs_checked > 1000, "too few stripe frames ({ps_checked}, {cs_checked})");
    Ok(format!(
        "5 x {N} frames; cursor iff gap <= 0.2 on {shown_total} shown frames, radius 0.1, 1 m stripes, \
         {ps_checked} precision frames in [k, k+1], {cs_checked} sync frames within {cs_worst:.1e}"
    ))
}

// AC3

type Cube = Vec<Vec<Vec<f64>>>;

/// SS from raw totals: sum(T^2)/size - G^2/N.
fn totals_ss(v: &Cube) -> [f64; 3] {
    let (n, a, b) = (v.len(), v[0].len(), v[0][0].len());
    let g: f64 = v.iter().flatten().flatten().sum();
    let cf = g * g / (n * a * b) as f64;
    let sq = |t: Vec<f64>, size: usize| t.iter().map(|x| x * x).sum::<f64>() / size as f64;
    let ta = sq((0..a).map(|i| v.iter().map(|s| s[i].iter().sum::<f64>()).sum()).collect(), n * b);
    let tb = sq((0..b).map(|j| v.iter().map(|s| s.iter().map(|r| r[j]).sum::<f64>()).sum()).collect(), n * a);
    let tab =
        sq((0..a).flat_map(|i| (0..b).map(move |j| (i, j))).map(|(i, j)| v.iter().map(|s| s[i][j]).sum()).collect(), n);
    [ta - cf, tb - cf, tab - ta - tb + cf]
}

fn ac3() -> Check {
    let k2 = vec![vec![1.0, 3.0], vec![2.0, 3.0], vec![3.0, 6.0]];
    let r = rm_anova_one_way(&k2).map_err(|e| e.to_string())?.effect;
    // Paired t on differences [2, 1, 3]: t = 2 / (1 / sqrt 3); two-sided p
    // for 2 df is 1 - t / sqrt(t^2 + 2).
    let t: f64 = 2.0 * 3f64.sqrt();
    let p_oracle = 1.0 - t / (t * t + 2.0).sqrt();
    ensure!((r.f - t * t).abs() < 1e-9 && (r.f - 12.0).abs() < 1e-9, "F = {}", r.f);
    ensure!(r.df1 == 1.0 && r.df2 == 2.0, "df ({}, {})", r.df1, r.df2);
    ensure!((r.p - p_oracle).abs() < 1e-9 && (r.p - 0.0742).abs() < 1e-3, "p = {} oracle {p_oracle}", r.p);

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0xAC3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let v: Cube = (0..6)
            .map(|_| {
                let s: f64 = rng.random_range(-3.0..3.0);
                (0..3)
                    .map(|i| {
                        (0..2).map(|j| s + 0.4 * i as f64 - 0.3 * j as f64 + rng.random_range(-1.0..1.0)).collect()
                    })
                    .collect()
            })
            .collect();
        let got = rm_anova_two_way(&v).map_err(|e| e.to_string())?;
        let want = totals_ss(&v);
        for (g, w) in [got.a.ss_effect, got.b.ss_effect, got.ab.ss_effect].into_iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
    }
    ensure!(worst < 1e-8, "SS deviation {worst:.2e}");

    let mut eps_checked = 0;
    for k in 2..=7usize {
        for _ in 0..200 {
            let n = rng.random_range(3..12);
            let m: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
            let e = gg_epsilon(&m).map_err(|e| e.to_string())?;
            if k == 2 {
                ensure!(e == 1.0, "k = 2 epsilon {e}");
            }
            let lo = 1.0 / (k - 1) as f64;
            ensure!(e >= lo - 1e-12 && e <= 1.0 + 1e-12, "k = {k} epsilon {e} outside [{lo}, 1]");
            eps_checked += 1;
        }
    }
    Ok(format!(
        "k=2 fixture F(1, 2) = {:.4}, p = {:.4} (oracle {p_oracle:.4}); SS max deviation {worst:.1e} over 50 datasets; {eps_checked} epsilons in bounds",
        r.f, r.p
    ))
}

// AC4

fn ac4() -> Check {
    let q = PowerQuery::default();
    let n = required_sample_size(&q).map_err(|e| e.to_string())?;
    let mut detail = format!("default (f=.4, alpha=.05, power=.9, m=5, rho=.5, eps=1) gives N={n}");
    if n != 16 {
        let s = search_assumptions(&q, 16);
        let small: Vec<String> = s.small.iter().map(|a| format!("m={}:{}", a.m, a.n)).collect();
        detail.push_str(&format!(" [FLAGGED: reported minimum is 16]; small grid {}", small.join(" ")));
        let hits = s.matches();
        ensure!(!hits.is_empty(), "{detail}; no grid setting yields 16");
        let grid = if s.wide.is_empty() { "small" } else { "wide" };
        let hits: Vec<String> = hits.iter().map(|a| format!("(m={}, rho={}, eps={})", a.m, a.rho, a.epsilon)).collect();
        detail.push_str(&format!("; 16 from {grid} grid at {}", hits.join(" ")));
    }

    // Noncentral F(4, 60, 25.6) against sampled ratios.
    let (d1, d2, lambda): (f64, f64, f64) = (4.0, 60.0, 25.6);
    let probes = [1.0, 2.525, 4.0, 6.0, 9.0];
    let num = ChiSquared::new(d1 - 1.0).unwrap();
    let den = ChiSquared::new(d2).unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0xAC4);
    let samples = 4_000_000u64;
    let mut below = [0u64; 5];
    for _ in 0..samples {
        let z: f64 = rng.sample(StandardNormal);
        let x = ((z + lambda.sqrt()).powi(2) + num.sample(&mut rng)) / d1 / (den.sample(&mut rng) / d2);
        for (c, p) in below.iter_mut().zip(probes) {
            *c += (x <= p) as u64;
        }
    }
    let mut worst_z = 0.0f64;
    for (c, x) in below.iter().zip(probes) {
        let mc = *c as f64 / samples as f64;
        let exact = noncentral_f_cdf(x, d1, d2, lambda);
        let sigma = (exact * (1.0 - exact) / samples as f64).sqrt().max(1e-9);
        let z = (mc - exact).abs() / sigma;
        ensure!(z <= 3.0, "noncentral F at {x}: exact {exact} sampled {mc} ({z:.2} sigma)");
        worst_z = worst_z.max(z);
    }
    detail.push_str(&format!("; noncentral F within {worst_z:.2} sigma at 5 probes"));
    Ok(detail)
}

// AC5 and AC6 drive the command-line binary.

fn cli(args: &[&str], env: &[(&str, &str)]) -> Result<String, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_crossrays"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn ac5(dir: &Path) -> Check {
    let log = dir.join("ac5.jsonl");
    let start = Instant::now();
    cli(&["simulate", "--participants", "20", "--seed", "42", "--agent-preset", "noisy", "--out", p(&log)], &[])?;
    let secs = start.elapsed().as_secs_f64();
    let records = read_log(&log).map_err(|e| e.to_string())?;
    let mut per: BTreeMap<u32, usize> = BTreeMap::new();
    for r in &records {
        *per.entry(r.participant).or_default() += 1;
    }
    let timeouts = records.iter().filter(|r| r.timeout).count();
    ensure!(records.len() == 3600, "{} records", records.len());
    ensure!(per.len() == 20 && per.values().all(|n| *n == 180), "per-participant counts {per:?}");
    ensure!(timeouts == 0, "{timeouts} timed-out records");
    ensure!(secs < 60.0, "simulation took {secs:.1} s");

    let report = dir.join("ac5.md");
    cli(&["analyze", p(&log), "--measure", "error_distance", "--task", "without_ref", "--report", p(&report)], &[])?;
    let text = std::fs::read_to_string(&report).map_err(|e| e.to_string())?;
    ensure!(text.contains("| distance | F("), "report lacks the distance effect row");

    let opts = AnalyzeOptions {
        tasks: vec![TaskKind::WithoutReference],
        measures: Some(vec![Measure::ErrorDistance]),
        ..Default::default()
    };
    let a = analyze(&records, &opts).map_err(|e| e.to_string())?;
    let m = a.measure(TaskKind::WithoutReference, Measure::ErrorDistance).ok_or("no task 2 error analysis")?;
    ensure!(m.distances == [3.0, 6.0, 9.0], "distances {:?}", m.distances);
    let med = m.distance_medians();
    let ratio = med[2] / med[0];
    ensure!(m.anova.b.p < 0.05, "distance effect p = {}", m.anova.b.p);
    ensure!(med[0] < med[1] && med[1] < med[2], "medians not ordered: {med:?}");
    ensure!((2.0..=4.0).contains(&ratio), "9 m / 3 m ratio {ratio}");
    Ok(format!(
        "3600 records (180 x 20, 0 timeouts) in {secs:.2} s; task 2 error distance F({:.2}, {:.2}) = {:.1}, p = {:.2e}; \
         medians {:.3} < {:.3} < {:.3} m, ratio {ratio:.2}",
        m.anova.b.df1_adj(),
        m.anova.b.df2_adj(),
        m.anova.b.f,
        m.anova.b.p,
        med[0],
        med[1],
        med[2]
    ))
}

fn sha(path: &Path) -> Result<String, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    Ok(Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn ac6(dir: &Path) -> Check {
    let mut logs = Vec::new();
    let mut reports = Vec::new();
    // Second run on one worker thread: output must not depend on scheduling.
    for (i, threads) in [("a", None), ("b", Some("1"))] {
        let log = dir.join(format!("ac6-{i}.jsonl"));
        let rep = dir.join(format!("ac6-{i}.md"));
        let env: Vec<(&str, &str)> = threads.map(|t| ("RAYON_NUM_THREADS", t)).into_iter().collect();
        cli(&["simulate", "--participants", "20", "--seed", "42", "--out", p(&log)], &env)?;
        cli(&["analyze", p(&log), "--bootstrap-seed", "3", "--report", p(&rep)], &[])?;
        logs.push(sha(&log)?);
        reports.push(sha(&rep)?);
    }
    ensure!(logs[0] == logs[1], "log hashes differ: {logs:?}");
    ensure!(reports[0] == reports[1], "report hashes differ: {reports:?}");
    Ok(format!("log sha256 {}..., report sha256 {}... identical across two runs", &logs[0][..12], &reports[0][..12]))
}

// AC7

fn ac7() -> Check {
    let cfg = ExperimentConfig { n_participants: 10, ..Default::default() };
    let mut counts = [[0u32; 5]; 5];
    for participant in 0..10 {
        let order = balanced_latin_order(5, participant);
        // The schedule must follow the square block by block.
        let sched = participant_schedule(&cfg, participant);
        let blocks: Vec<TechniqueKind> = sched
            .iter()
            .filter(|s| s.task == TaskKind::WithReference)
            .map(|s| s.technique)
            .collect::<Vec<_>>()
            .chunks(18)
            .map(|c| c[0])
            .collect();
        let expected: Vec<TechniqueKind> = order.iter().map(|&i| TechniqueKind::ALL[i]).collect();
        ensure!(blocks == expected, "participant {participant}: blocks {blocks:?} square {expected:?}");
        for (pos, &tech) in order.iter().enumerate() {
            counts[tech][pos] += 1;
        }
    }
    ensure!(counts.iter().flatten().all(|c| *c == 2), "position counts {counts:?}");
    Ok("participants 0-9: every technique in every ordinal position exactly twice".into())
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let d = dir.path().to_path_buf();
    let checks: Vec<(&str, &str, Box<dyn Fn() -> Check>)> = vec![
        ("AC1", "geometry oracle", Box::new(ac1)),
        ("AC2", "technique constants", Box::new(ac2)),
        ("AC3", "ANOVA equivalence", Box::new(ac3)),
        ("AC4", "power reproduction", Box::new(ac4)),
        (
            "AC5",
            "end-to-end pipeline",
            Box::new({
                let d = d.clone();
                move || ac5(&d)
            }),
        ),
        (
            "AC6",
            "determinism",
            Box::new({
                let d = d.clone();
                move || ac6(&d)
            }),
        ),
        ("AC7", "counterbalance", Box::new(ac7)),
    ];
    let mut failed = 0;
    for (id, name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {detail} ({secs:.1} s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
