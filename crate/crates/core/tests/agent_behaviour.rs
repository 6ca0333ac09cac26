use crossrays_core::agent::{derive_trial_seed, remember_target, Agent, AgentParams};
use crossrays_core::geom::Vec3;
use crossrays_core::session::TrialSession;
use crossrays_core::stats::median;
use crossrays_core::tasks::{TaskKind, TrialSpec, VALID_RADIUS};
use crossrays_core::techniques::{TechniqueConfig, TechniqueKind};
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

fn spec(task: TaskKind, tech: TechniqueKind, d: f64, i: u64) -> TrialSpec {
    TrialSpec::new(task, tech, d, if i % 2 == 0 { 1 } else { -1 }, (i % 6) as u8, 1.7)
}

#[test]
fn same_seed_same_record() {
    let agent = Agent::new(AgentParams::noisy(), TechniqueConfig::default());
    for tech in TechniqueKind::ALL {
        for task in TaskKind::ALL {
            let s = spec(task, tech, 6.0, 1);
            let a = serde_json::to_string(&agent.drive_trial(&s, 4, 99)).unwrap();
            let b = serde_json::to_string(&agent.drive_trial(&s, 4, 99)).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn noiseless_agent_converges() {
    let agent = Agent::new(AgentParams::noiseless(), TechniqueConfig::default());
    let tol = agent.params.click_tolerance;
    for tech in TechniqueKind::ALL {
        for task in TaskKind::ALL {
            for d in [3.0, 6.0, 9.0] {
                let r = agent.drive_trial(&spec(task, tech, d, 0), 0, 1);
                assert!(!r.timeout, "{tech:?} {task:?} {d}");
                assert_eq!(r.clicks, 1, "{tech:?} {task:?} {d}");
                assert!(r.error_distance.unwrap() <= tol, "{tech:?} {task:?} {d}: {:?}", r.error_distance);
            }
        }
    }
}

#[test]
fn protocol_invariants_hold_for_noisy_agent() {
    let agent = Agent::new(AgentParams::noisy(), TechniqueConfig::default());
    for tech in TechniqueKind::ALL {
        for task in TaskKind::ALL {
            for (i, d) in [3.0, 6.0, 9.0].into_iter().cycle().take(24).enumerate() {
                let r = agent.drive_trial(&spec(task, tech, d, i as u64), 2, derive_trial_seed(5, 2, i as u64));
                if r.timeout {
                    assert!(r.selection.is_none() && r.error_distance.is_none());
                    continue;
                }
                assert!(r.selection_time >= 0.0 && r.selection_time < 30.0);
                match task {
                    TaskKind::WithReference => {
                        assert!(r.error_distance.unwrap() <= VALID_RADIUS);
                        assert!(r.clicks >= 1);
                    }
                    TaskKind::WithoutReference => assert_eq!(r.clicks, 1),
                }
            }
        }
    }
}

fn task2_medians(agent: &Agent, tech: TechniqueKind, trials: u64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (k, d) in [3.0, 6.0, 9.0].into_iter().enumerate() {
        let errs: Vec<f64> = (0..trials)
            .filter_map(|i| {
                agent
                    .drive_trial(&spec(TaskKind::WithoutReference, tech, d, i), 0, derive_trial_seed(17, 0, i))
                    .error_distance
            })
            .collect();
        assert!(errs.len() as u64 > trials * 9 / 10);
        out[k] = median(&errs);
    }
    out
}

#[test]
fn task2_error_ratio_far_to_near() {
    // Errors scale roughly linearly with distance, so 9 m / 3 m should sit
    // near 3.
    let agent = Agent::new(AgentParams::noisy(), TechniqueConfig::default());
    let m = task2_medians(&agent, TechniqueKind::SimpleRay, 200);
    let ratio = m[2] / m[0];
    assert!((2.0..=4.0).contains(&ratio), "medians {m:?} ratio {ratio}");
}

#[test]
fn task2_error_grows_with_distance() {
    let params = [
        AgentParams::noisy(),
        AgentParams { depth_memory_sd_per_m: 0.02, lateral_memory_sd_per_m: 0.01, ..AgentParams::noisy() },
        AgentParams { angular_noise_sd: 0.0, depth_memory_sd_per_m: 0.15, ..AgentParams::noisy() },
    ];
    for p in params {
        let agent = Agent::new(p, TechniqueConfig::default());
        for tech in TechniqueKind::ALL {
            let m = task2_medians(&agent, tech, 200);
            assert!(m[0] <= m[1] && m[1] <= m[2], "{tech:?} {p:?}: {m:?}");
        }
    }
}

#[test]
fn remembered_depth_spread() {
    let params = AgentParams { depth_memory_sd_per_m: 0.05, lateral_memory_sd_per_m: 0.0, ..AgentParams::noisy() };
    let target = Vec3::new(0.0, 1.7, 9.0);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(42);
    let n = 100_000;
    let depth: Vec<f64> = (0..n).map(|_| remember_target(target, 9.0, &params, &mut rng).z - 9.0).collect();
    let mean = depth.iter().sum::<f64>() / n as f64;
    let sd = (depth.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((sd - 0.45).abs() < 0.01, "sd {sd}");

    let again = |seed| {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        remember_target(Vec3::new(1.0, 1.7, 5.9), 6.0, &AgentParams::noisy(), &mut rng)
    };
    assert_eq!(again(42), again(42));
}

#[test]
fn recorded_frames_replay_through_session() {
    let cfg = TechniqueConfig::default();
    let agent = Agent::new(AgentParams::noisy(), cfg);
    for tech in TechniqueKind::ALL {
        for task in TaskKind::ALL {
            let s = spec(task, tech, 6.0, 3);
            let (rec, frames) = agent.drive_trial_recorded(&s, 1, 77);
            let mut session = TrialSession::new(s, 1, 77, 0.0, cfg);
            let mut replayed = None;
            for f in &frames {
                if let Some(r) = session.advance(f).record {
                    replayed = Some(r);
                }
            }
            assert_eq!(replayed.as_ref(), Some(&rec), "{tech:?} {task:?}");
        }
    }
}
