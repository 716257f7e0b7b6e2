use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::domain::{EntityId, IdAllocator, Record, SensorKind, Timestamp, Value};

const WORKPLACES: [EntityId; 4] = [EntityId(1), EntityId(2), EntityId(3), EntityId(4)];

fn sensor(id: u64, kind: SensorKind, rate_hz: f64) -> SensorConfig {
    SensorConfig {
        sensor_id: EntityId(id),
        workplace_id: EntityId(1),
        kind,
        rate_hz,
        base: 40.0,
        amplitude: 10.0,
        period_s: 60.0,
        noise_sigma: 0.0,
        phase_ms: 0,
    }
}

fn set_of(sensors: Vec<SensorConfig>) -> SensorConfigSet {
    SensorConfigSet { revision: 1, sensors }
}

fn window(set: &SensorConfigSet, t0: u64, t1: u64) -> Vec<crate::domain::SensorReading> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    readings_between(set, Timestamp(t0), Timestamp(t1), &mut rng, &mut IdAllocator::new()).unwrap()
}

fn errors(r: Result<SensorConfigSet, SensorError>) -> Vec<String> {
    match r {
        Err(SensorError::InvalidConfig(e)) => e,
        other => panic!("expected config errors, got {other:?}"),
    }
}

#[test]
fn default_config_parses_with_expected_placement() {
    let set = parse_config(DEFAULT_CONFIG_JSON, &WORKPLACES).unwrap();
    assert_eq!(set.sensors.len(), 6);
    let on = |wp: u64| -> Vec<SensorKind> {
        set.sensors
            .iter()
            .filter(|s| s.workplace_id == EntityId(wp))
            .map(|s| s.kind)
            .collect()
    };
    assert_eq!(on(1), vec![SensorKind::Temperature, SensorKind::Noise]);
    assert_eq!(on(2), vec![SensorKind::Vibration, SensorKind::Temperature]);
    assert_eq!(on(3).len(), 1);
    assert_eq!(on(4).len(), 1);
    for s in &set.sensors {
        assert!((s.noise_sigma - 0.05 * s.base).abs() < 1e-9);
    }
}

#[test]
fn duplicate_sensor_id_is_reported() {
    let doc = r#"{"sensors":[
        {"sensor_id":5,"workplace_id":1,"kind":"noise","rate_hz":1.0,"base":70.0,"amplitude":8.0,"period_s":60.0,"noise_sigma":3.5,"phase_ms":0},
        {"sensor_id":5,"workplace_id":2,"kind":"noise","rate_hz":1.0,"base":70.0,"amplitude":8.0,"period_s":60.0,"noise_sigma":3.5,"phase_ms":0}
    ]}"#;
    assert_eq!(errors(parse_config(doc, &WORKPLACES)), vec!["duplicate sensor_id 5".to_string()]);
}

#[test]
fn zero_rate_is_out_of_range() {
    let doc = r#"{"sensors":[{"sensor_id":1,"workplace_id":1,"kind":"noise","rate_hz":0,"base":70.0,"amplitude":8.0,"period_s":60.0,"noise_sigma":3.5,"phase_ms":0}]}"#;
    let e = errors(parse_config(doc, &WORKPLACES));
    assert_eq!(e.len(), 1);
    assert!(e[0].contains("rate out of range"), "{e:?}");
}

#[test]
fn every_violation_is_listed() {
    let doc = r#"{"sensors":[
        {"sensor_id":1,"workplace_id":9,"kind":"noise","rate_hz":20000,"base":70.0,"amplitude":-1.0,"period_s":0,"noise_sigma":-2,"phase_ms":0},
        {"sensor_id":1,"workplace_id":1,"kind":"noise","rate_hz":1.0,"base":70.0,"amplitude":8.0,"period_s":60.0,"noise_sigma":3.5,"phase_ms":0}
    ]}"#;
    let e = errors(parse_config(doc, &WORKPLACES));
    assert_eq!(e.len(), 6, "{e:?}");
    assert!(e.iter().any(|m| m.contains("unknown workplace 9")));
    assert!(e.iter().any(|m| m == "duplicate sensor_id 1"));
}

#[test]
fn malformed_documents_and_unknown_fields_are_rejected() {
    for doc in [
        "",
        "{",
        r#"{"sensors":{}}"#,
        r#"{"sensors":[{"sensor_id":1}]}"#,
        r#"{"sensors":[],"extra":1}"#,
        r#"{"sensors":[{"sensor_id":1,"workplace_id":1,"kind":"humidity","rate_hz":1,"base":1,"amplitude":1,"period_s":1,"noise_sigma":0,"phase_ms":0}]}"#,
        r#"{"sensors":[{"sensor_id":1,"workplace_id":1,"kind":"noise","rate_hz":1,"base":1,"amplitude":1,"period_s":1,"noise_sigma":0,"phase_ms":-5}]}"#,
        r#"{"sensors":[{"sensor_id":1,"workplace_id":1,"kind":"noise","rate_hz":1,"base":1,"amplitude":1,"period_s":1,"noise_sigma":0,"phase_ms":0,"gain":2}]}"#,
    ] {
        let e = errors(parse_config(doc, &WORKPLACES));
        assert!(e[0].starts_with("malformed document"), "{doc}: {e:?}");
    }
}

#[test]
fn document_read_back_with_revision_parses_again() {
    let set = parse_config(DEFAULT_CONFIG_JSON, &WORKPLACES).unwrap();
    let engine = SensorEngine::new(set.sensors.clone(), 1);
    let again = parse_config(&engine.config().to_json(), &WORKPLACES).unwrap();
    assert_eq!(again.sensors, set.sensors);
}

#[test]
fn constant_signal_without_amplitude_or_noise() {
    let mut s = sensor(1, SensorKind::Temperature, 1.0);
    s.amplitude = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for t in [0, 1, 15_000, 123_456_789] {
        assert_eq!(value_at(&s, Timestamp(t), &mut rng), 40.0);
    }
}

#[test]
fn quarter_period_is_the_peak() {
    let s = sensor(1, SensorKind::Temperature, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!((value_at(&s, Timestamp(15_000), &mut rng) - 50.0).abs() < 1e-12);
}

#[test]
fn noise_is_centred_on_the_signal() {
    let mut s = sensor(1, SensorKind::Temperature, 1.0);
    s.noise_sigma = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 10_000;
    let t = Timestamp(7_000);
    let mean = (0..n).map(|_| value_at(&s, t, &mut rng)).sum::<f64>() / n as f64;
    let bound = 3.0 * 1.0 / (n as f64).sqrt();
    assert!((mean - signal_at(&s, t)).abs() <= bound, "{mean}");
}

#[test]
fn five_hertz_over_two_seconds() {
    let readings = window(&set_of(vec![sensor(1, SensorKind::Noise, 5.0)]), 0, 2_000);
    assert_eq!(readings.len(), 10);
}

#[test]
fn temperature_readings_leave_other_pairs_empty() {
    let readings = window(&set_of(vec![sensor(1, SensorKind::Temperature, 5.0)]), 0, 1_000);
    for r in &readings {
        let row = r.to_values();
        assert!(matches!(row[4], Value::Decimal(_)));
        assert_eq!(row[5], Value::text("°C"));
        assert!(row[6..].iter().all(Value::is_null));
    }
}

#[test]
fn mixed_rates_match_enumerated_instants() {
    let set = set_of(vec![
        sensor(1, SensorKind::Noise, 5.0),
        sensor(2, SensorKind::Vibration, 20.0),
    ]);
    let readings = window(&set, 0, 1_000);
    let mut expected: Vec<(u64, u64)> = (0..5).map(|k| (k * 200, 1)).chain((0..20).map(|k| (k * 50, 2))).collect();
    expected.sort();
    let got: Vec<(u64, u64)> = readings.iter().map(|r| (r.date.millis(), r.sensor_id.get())).collect();
    assert_eq!(got, expected);
    assert_eq!(readings.len(), 25);
    assert!(readings.windows(2).all(|w| w[0].id < w[1].id));
}

#[test]
fn empty_or_reversed_window_is_an_error() {
    let set = set_of(vec![sensor(1, SensorKind::Noise, 5.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = readings_between(&set, Timestamp(5), Timestamp(5), &mut rng, &mut IdAllocator::new());
    assert_eq!(
        r.unwrap_err(),
        SensorError::EmptyWindow {
            from: Timestamp(5),
            to: Timestamp(5)
        }
    );
}

#[test]
fn applying_identical_config_only_bumps_revision() {
    let sensors = parse_config(DEFAULT_CONFIG_JSON, &WORKPLACES).unwrap().sensors;
    let mut a = SensorEngine::new(sensors.clone(), 42);
    let mut b = SensorEngine::new(sensors.clone(), 42);
    a.generate(Timestamp(0), Timestamp(1_000)).unwrap();
    b.generate(Timestamp(0), Timestamp(1_000)).unwrap();
    assert_eq!(a.apply(set_of(sensors)), 2);
    assert_eq!(
        a.generate(Timestamp(1_000), Timestamp(3_000)).unwrap(),
        b.generate(Timestamp(1_000), Timestamp(3_000)).unwrap()
    );
}

#[test]
fn doubling_a_rate_doubles_its_readings() {
    let mut engine = SensorEngine::new(vec![sensor(1, SensorKind::Noise, 10.0)], 1);
    let per_window = |e: &mut SensorEngine, start: u64| -> Vec<usize> {
        (0..10)
            .map(|i| {
                let t = start + i * 1_000;
                e.generate(Timestamp(t), Timestamp(t + 1_000)).unwrap().len()
            })
            .collect()
    };
    assert_eq!(per_window(&mut engine, 0), vec![10; 10]);
    engine.apply(set_of(vec![sensor(1, SensorKind::Noise, 20.0)]));
    assert_eq!(per_window(&mut engine, 10_000), vec![20; 10]);
}

#[test]
fn removing_all_sensors_silences_the_stream() {
    let mut engine = SensorEngine::new(vec![sensor(1, SensorKind::Noise, 10.0)], 1);
    engine.apply(SensorConfigSet::empty());
    assert!(engine.generate(Timestamp(0), Timestamp(60_000)).unwrap().is_empty());
    assert_eq!(engine.revision(), 2);
}

#[test]
fn same_seed_same_readings() {
    let sensors = parse_config(DEFAULT_CONFIG_JSON, &WORKPLACES).unwrap().sensors;
    let mut a = SensorEngine::new(sensors.clone(), 42);
    let mut b = SensorEngine::new(sensors, 42);
    assert_eq!(
        a.generate(Timestamp(0), Timestamp(5_000)).unwrap(),
        b.generate(Timestamp(0), Timestamp(5_000)).unwrap()
    );
}

fn arb_sensor(id: u64) -> impl Strategy<Value = SensorConfig> {
    (0.1f64..2_000.0, 0u64..5_000, 0.0f64..3.0).prop_map(move |(rate_hz, phase_ms, noise_sigma)| SensorConfig {
        sensor_id: EntityId(id),
        workplace_id: EntityId(1 + id % 4),
        kind: SensorKind::ALL[(id % 3) as usize],
        rate_hz,
        base: 10.0,
        amplitude: 2.0,
        period_s: 7.5,
        noise_sigma,
        phase_ms,
    })
}

proptest! {
    #[test]
    fn count_law_holds_for_any_window(s in arb_sensor(1), t0 in 0u64..1_000_000, w in 1u64..20_000) {
        let n = window(&set_of(vec![s.clone()]), t0, t0 + w).len() as f64;
        let exact = w as f64 * s.rate_hz / 1000.0;
        prop_assert!(n == exact.floor() || n == exact.ceil(), "{} readings, expected ~{}", n, exact);
    }

    #[test]
    fn output_is_independent_of_window_partitioning(
        a in arb_sensor(1),
        b in arb_sensor(2),
        cuts in proptest::collection::vec(1u64..30_000, 0..6),
    ) {
        let set = set_of(vec![a, b]);
        let whole = window(&set, 0, 30_000);
        let mut bounds = cuts;
        bounds.push(0);
        bounds.push(30_000);
        bounds.sort();
        bounds.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ids = IdAllocator::new();
        let mut pieces = Vec::new();
        for pair in bounds.windows(2) {
            pieces.extend(readings_between(&set, Timestamp(pair[0]), Timestamp(pair[1]), &mut rng, &mut ids).unwrap());
        }
        prop_assert_eq!(whole, pieces);
    }

    #[test]
    fn every_reading_is_sparse_and_valid(s in arb_sensor(3), t0 in 0u64..100_000) {
        let catalog = crate::domain::catalog();
        for r in window(&set_of(vec![s]), t0, t0 + 2_000) {
            prop_assert!(crate::domain::validate_row(&catalog, "SENSOR_DATA", &r.to_values()).is_ok());
        }
    }
}
