use crossrays::log::{parse_line, read_records, to_line, LogError, LogWriter};
use crossrays_core::agent::{Agent, AgentParams};
use crossrays_core::experiment::{run_participant, ExperimentConfig};
use crossrays_core::geom::Vec3;
use crossrays_core::tasks::{TaskKind, TrialEvent, TrialEventKind, TrialRecord, TrialSpec};
use crossrays_core::techniques::{TechniqueConfig, TechniqueKind};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, Just(0.0), Just(1e-300), Just(f64::MIN_POSITIVE), Just(0.1 + 0.2)]
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (finite(), finite(), finite()).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn record() -> impl Strategy<Value = TrialRecord> {
    (
        (0..2usize, 0..5usize, prop_oneof![Just(3.0), Just(6.0), Just(9.0), 0.1..20.0f64], any::<bool>(), 0..6u8),
        (any::<u32>(), proptest::option::of(vec3()), 0.0..30.0f64, 0..20u32, any::<u64>()),
        vec3(),
        proptest::collection::vec((0.0..30.0f64, 0..6usize), 0..4),
    )
        .prop_map(|((task, tech, d, right, rep), (participant, selection, time, clicks, seed), target, events)| {
            let kinds = [
                TrialEventKind::Start,
                TrialEventKind::ShowEnd,
                TrialEventKind::ClickRejected,
                TrialEventKind::ClickAccepted,
                TrialEventKind::ClickIgnored,
                TrialEventKind::Timeout,
            ];
            let mut spec =
                TrialSpec::new(TaskKind::ALL[task], TechniqueKind::ALL[tech], d, if right { 1 } else { -1 }, rep, 1.7);
            spec.target = target;
            TrialRecord {
                spec,
                participant,
                selection,
                selection_time: time,
                error_distance: selection.map(|s| s.distance(target)),
                clicks,
                timeout: selection.is_none(),
                seed,
                events: events.into_iter().map(|(t, k)| TrialEvent { t, kind: kinds[k] }).collect(),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn line_roundtrip_is_lossless(r in record()) {
        let line = to_line(&r);
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(parse_line(&line, 1).unwrap(), r);
    }
}

#[test]
fn simulated_log_roundtrips() {
    let cfg = ExperimentConfig { n_participants: 1, ..Default::default() };
    let agent = Agent::new(AgentParams::noisy(), TechniqueConfig::default());
    let records = run_participant(&cfg, &agent, 0);
    let mut w = LogWriter::new(Vec::new());
    for r in &records {
        w.write(r).unwrap();
    }
    let bytes = w.into_inner();
    assert_eq!(bytes.iter().filter(|b| **b == b'\n').count(), 180);
    assert_eq!(read_records(bytes.as_slice()).unwrap(), records);
}

#[test]
fn timeout_fields_are_null_not_absent() {
    let spec = TrialSpec::new(TaskKind::WithReference, TechniqueKind::OneHand, 3.0, 1, 0, 1.7);
    let r = TrialRecord {
        spec,
        participant: 0,
        selection: None,
        selection_time: 30.0,
        error_distance: None,
        clicks: 2,
        timeout: true,
        seed: 1,
        events: vec![],
    };
    let line = to_line(&r);
    assert!(line.contains("\"selection\":null") && line.contains("\"error_distance_m\":null"));
    let dropped = line.replace("\"selection\":null,", "");
    match parse_line(&dropped, 7) {
        Err(LogError::Parse { line, message }) => {
            assert_eq!(line, 7);
            assert!(message.contains("selection"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_field_names_the_line() {
    let good = to_line(&TrialRecord {
        spec: TrialSpec::new(TaskKind::WithoutReference, TechniqueKind::SimpleRay, 6.0, -1, 2, 1.7),
        participant: 3,
        selection: Some(Vec3::new(0.0, 1.7, 6.0)),
        selection_time: 2.5,
        error_distance: Some(0.3),
        clicks: 1,
        timeout: false,
        seed: 9,
        events: vec![],
    });
    let bad = good.replace("\"clicks\":1,", "");
    let text = format!("{good}\n\n{bad}\n");
    let err = read_records(text.as_bytes()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.starts_with("line 3:") && msg.contains("clicks"), "{msg}");
}

#[test]
fn unknown_version_rejected() {
    let err = parse_line(r#"{"v":2}"#, 1);
    assert!(err.is_err());
    let r = TrialRecord {
        spec: TrialSpec::new(TaskKind::WithoutReference, TechniqueKind::SimpleRay, 6.0, 1, 0, 1.7),
        participant: 0,
        selection: None,
        selection_time: 30.0,
        error_distance: None,
        clicks: 0,
        timeout: true,
        seed: 0,
        events: vec![],
    };
    let line = to_line(&r).replace("\"v\":1", "\"v\":2");
    assert!(matches!(parse_line(&line, 4), Err(LogError::Version { line: 4, version: 2 })));
}

#[test]
fn empty_input_reads_as_no_records() {
    assert!(read_records("".as_bytes()).unwrap().is_empty());
    assert!(read_records("\n  \n".as_bytes()).unwrap().is_empty());
}
