use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::domain::{catalog, schema, ColumnDef, EntityId, Record, SensorKind, SensorReading, Timestamp, Workplace};

fn store() -> Store {
    let store = Store::with_catalog(&catalog(), StoreOptions::default());
    let workplaces: Vec<_> = (1..=4)
        .map(|i| {
            Workplace {
                id: EntityId(i),
                name: format!("WP {i}"),
            }
            .to_values()
        })
        .collect();
    store.append(schema::WORKPLACE, workplaces).unwrap();
    store
}

fn reading(id: u64, date: u64, kind: SensorKind, value: f64) -> Vec<Value> {
    SensorReading {
        id: EntityId(id),
        workplace_id: EntityId(1 + id % 4),
        sensor_id: EntityId(1 + id % 3),
        date: Timestamp(date),
        kind,
        value,
    }
    .to_values()
}

fn readings(from_id: u64, n: u64) -> Vec<Vec<Value>> {
    (from_id..from_id + n)
        .map(|i| reading(i, i * 10, SensorKind::ALL[(i % 3) as usize], i as f64))
        .collect()
}

#[test]
fn created_table_starts_empty_and_round_trips_schema() {
    let store = Store::new(StoreOptions::default());
    let sensor = catalog().get(schema::SENSOR_DATA).unwrap().clone();
    let mut sensor_no_fk = sensor.clone();
    sensor_no_fk.foreign_keys.clear();
    store.create_table(sensor_no_fk.clone()).unwrap();
    assert_eq!(store.snapshot().row_count(schema::SENSOR_DATA), Some(0));
    assert_eq!(store.catalog().get(schema::SENSOR_DATA), Some(&sensor_no_fk));
    assert_eq!(
        store.create_table(sensor_no_fk),
        Err(StoreError::DuplicateTable(schema::SENSOR_DATA.into()))
    );
    assert!(matches!(
        store.create_table(TableSchema::new("EMPTY", vec![])),
        Err(StoreError::EmptySchema(_))
    ));
    // the referenced WORKPLACE table does not exist in this store
    assert_eq!(store.create_table(sensor), Err(StoreError::DuplicateTable(schema::SENSOR_DATA.into())));
}

#[test]
fn append_advances_committed_count() {
    let store = store();
    let first = store.append(schema::SENSOR_DATA, readings(1, 3)).unwrap();
    assert_eq!(first, 0);
    assert_eq!(store.snapshot().row_count(schema::SENSOR_DATA), Some(3));
    let next = store.append(schema::SENSOR_DATA, readings(4, 2)).unwrap();
    assert_eq!(next, 3);
}

#[test]
fn batch_with_one_invalid_row_is_rejected_whole() {
    let store = store();
    store.append(schema::SENSOR_DATA, readings(1, 3)).unwrap();
    let mut bad = readings(4, 5);
    bad[2][6] = Value::Decimal(1.0); // second measurement on the row
    bad[2][7] = Value::text("dB");
    let err = store.append(schema::SENSOR_DATA, bad).unwrap_err();
    assert!(matches!(err, StoreError::Validation { row: 2, .. }), "{err}");
    assert_eq!(store.snapshot().row_count(schema::SENSOR_DATA), Some(3));
    // the rolled-back slots are reused cleanly
    store.append(schema::SENSOR_DATA, readings(4, 5)).unwrap();
    let snap = store.snapshot();
    assert_eq!(snap.row(schema::SENSOR_DATA, 5).unwrap(), reading(6, 60, SensorKind::ALL[0], 6.0));
}

#[test]
fn dangling_foreign_key_and_id_regression_are_rejected() {
    let store = store();
    let mut row = reading(1, 0, SensorKind::Noise, 70.0);
    row[1] = Value::Int(99);
    let err = store.append(schema::SENSOR_DATA, vec![row]).unwrap_err();
    assert!(matches!(err, StoreError::Referential { value: 99, .. }), "{err}");

    store.append(schema::SENSOR_DATA, readings(5, 1)).unwrap();
    let err = store.append(schema::SENSOR_DATA, readings(5, 1)).unwrap_err();
    assert!(matches!(err, StoreError::IdentityOrder { id: 5, previous: 5, .. }), "{err}");
    assert_eq!(store.snapshot().row_count(schema::SENSOR_DATA), Some(1));
}

#[test]
fn multi_table_commit_is_atomic() {
    let store = store();
    let mut batch = Batch::default();
    batch.push_rows(schema::SUPPLIER, vec![vec![Value::Int(1), Value::text("Acme")]]);
    batch.push_rows(
        schema::PURCHASE_ORDER_HEAD,
        vec![vec![Value::Int(1), Value::Int(2), Value::Timestamp(0)]],
    );
    assert!(matches!(store.commit(&batch), Err(StoreError::Referential { .. })));
    let snap = store.snapshot();
    assert_eq!(snap.row_count(schema::SUPPLIER), Some(0));

    batch.appends[1].rows[0][1] = Value::Int(1);
    store.commit(&batch).unwrap();
    let snap = store.snapshot();
    assert_eq!(snap.row_count(schema::SUPPLIER), Some(1));
    assert_eq!(snap.row_count(schema::PURCHASE_ORDER_HEAD), Some(1));
}

fn seed_position(store: &Store) {
    let mut b = Batch::default();
    b.push_rows(schema::PRODUCT, vec![vec![Value::Int(1), Value::text("Engine A")]]);
    b.push_rows(schema::SUPPLIER, vec![vec![Value::Int(1), Value::text("S")]]);
    b.push_rows(schema::MATERIAL, vec![vec![Value::Int(1), Value::text("M")]]);
    b.push_rows(
        schema::PURCHASE_ORDER_HEAD,
        vec![vec![Value::Int(1), Value::Int(1), Value::Timestamp(0)]],
    );
    b.push_rows(
        schema::PURCHASE_ORDER_ITEM,
        vec![vec![Value::Int(1), Value::Int(1), Value::Int(1), Value::Int(10)]],
    );
    b.push_rows(
        schema::PRODUCTION_ORDER_HEAD,
        vec![vec![
            Value::Int(1),
            Value::Int(1),
            Value::Int(1),
            Value::Null,
            Value::Timestamp(100),
            Value::Null,
        ]],
    );
    b.push_rows(
        schema::PRODUCTION_ORDER_POSITION,
        vec![vec![
            Value::Int(1),
            Value::Int(1),
            Value::Int(1),
            Value::Int(1),
            Value::Timestamp(100),
            Value::Null,
        ]],
    );
    store.commit(&b).unwrap();
}

fn fill(table: &str, id: i64, column: &str, value: Value) -> Batch {
    Batch {
        appends: vec![],
        fill_ins: vec![FillIn {
            table: table.into(),
            id,
            column: column.into(),
            value,
        }],
    }
}

#[test]
fn fill_in_is_invisible_to_older_snapshots() {
    let store = store();
    seed_position(&store);
    let before = store.snapshot();
    store
        .commit(&fill(schema::PRODUCTION_ORDER_POSITION, 1, "LEFT_AT", Value::Timestamp(200)))
        .unwrap();
    let after = store.snapshot();
    assert_eq!(before.row(schema::PRODUCTION_ORDER_POSITION, 0).unwrap()[5], Value::Null);
    assert_eq!(
        after.row(schema::PRODUCTION_ORDER_POSITION, 0).unwrap()[5],
        Value::Timestamp(200)
    );
    let scan = before
        .scan(
            schema::PRODUCTION_ORDER_POSITION,
            &["LEFT_AT"],
            Some(&ScanPredicate::new(vec![ColumnFilter::IsNull {
                column: "LEFT_AT".into(),
                negated: false,
            }])),
        )
        .unwrap();
    assert_eq!(scan.len(), 1);
}

#[test]
fn fill_in_rules_are_enforced() {
    let store = store();
    seed_position(&store);
    let pos = schema::PRODUCTION_ORDER_POSITION;
    let cases = [
        fill(pos, 1, "ENTERED_AT", Value::Timestamp(5)),
        fill(pos, 9, "LEFT_AT", Value::Timestamp(200)),
        fill(pos, 1, "LEFT_AT", Value::Null),
    ];
    for batch in cases {
        assert!(matches!(store.commit(&batch), Err(StoreError::FillIn { .. })));
    }
    // left before entered
    assert!(matches!(
        store.commit(&fill(pos, 1, "LEFT_AT", Value::Timestamp(50))),
        Err(StoreError::Validation { .. })
    ));
    // dangling sales item reference
    assert!(matches!(
        store.commit(&fill(schema::PRODUCTION_ORDER_HEAD, 1, "SALES_ORDER_ITEM_ID", Value::Int(4))),
        Err(StoreError::Referential { .. })
    ));
    store.commit(&fill(pos, 1, "LEFT_AT", Value::Timestamp(150))).unwrap();
    assert!(matches!(
        store.commit(&fill(pos, 1, "LEFT_AT", Value::Timestamp(160))),
        Err(StoreError::FillIn { .. })
    ));
}

#[test]
fn snapshot_hides_later_appends() {
    let store = store();
    store.append(schema::SENSOR_DATA, readings(1, 10)).unwrap();
    let old = store.snapshot();
    store.append(schema::SENSOR_DATA, readings(11, 10)).unwrap();
    let scan = old.scan(schema::SENSOR_DATA, &["ID"], None).unwrap();
    assert_eq!(scan.len(), 10);
    assert_eq!(store.snapshot().row_count(schema::SENSOR_DATA), Some(20));
}

#[test]
fn quiescent_snapshots_agree() {
    let store = store();
    store.append(schema::SENSOR_DATA, readings(1, 10)).unwrap();
    let a = store.snapshot();
    let b = store.snapshot();
    assert_eq!(a.row_counts(), b.row_counts());
    assert_eq!(a.epoch(), b.epoch());
}

#[test]
fn noise_only_rows_scan_temperature_as_null() {
    let store = store();
    let rows = (1..=5).map(|i| reading(i, i, SensorKind::Noise, 70.0)).collect();
    store.append(schema::SENSOR_DATA, rows).unwrap();
    let scan = store
        .snapshot()
        .scan(schema::SENSOR_DATA, &["TEMPERATURE_VALUE", "TEMPERATURE_UNIT", "NOISE_UNIT"], None)
        .unwrap();
    assert_eq!(scan.len(), 5);
    assert_eq!(scan.columns[0].non_null_count(), 0);
    assert_eq!(scan.columns[1].non_null_count(), 0);
    assert_eq!(scan.columns[2].text(0), Some("dB"));
}

#[test]
fn between_predicate_is_inclusive() {
    let store = store();
    let rows = [50, 100, 150, 250]
        .iter()
        .enumerate()
        .map(|(i, &d)| reading(i as u64 + 1, d, SensorKind::Temperature, 1.0))
        .collect();
    store.append(schema::SENSOR_DATA, rows).unwrap();
    let pred = ScanPredicate::new(vec![ColumnFilter::Between {
        column: "DATE".into(),
        low: Value::Int(100),
        high: Value::Int(200),
    }]);
    let scan = store.snapshot().scan(schema::SENSOR_DATA, &["DATE"], Some(&pred)).unwrap();
    assert_eq!(scan.columns[0].get(0), Value::Timestamp(100));
    assert_eq!(scan.columns[0].get(1), Value::Timestamp(150));
    assert_eq!(scan.len(), 2);
}

#[test]
fn scan_errors_on_unknown_column_and_type_mismatch() {
    let store = store();
    let snap = store.snapshot();
    assert!(matches!(
        snap.scan(schema::SENSOR_DATA, &["NOPE"], None),
        Err(StoreError::UnknownColumn { .. })
    ));
    let pred = ScanPredicate::new(vec![ColumnFilter::Compare {
        column: "DATE".into(),
        op: CmpOp::Eq,
        value: Value::text("x"),
    }]);
    assert!(matches!(
        snap.scan(schema::SENSOR_DATA, &["ID"], Some(&pred)),
        Err(StoreError::TypeMismatch { .. })
    ));
}

#[test]
fn pushed_down_scan_matches_filter_after_full_scan() {
    let store = store();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rows: Vec<_> = (1..=10_000u64)
        .map(|i| {
            let kind = SensorKind::ALL[rng.random_range(0..3)];
            reading(i, rng.random_range(0..5_000), kind, rng.random_range(-10.0..100.0))
        })
        .collect();
    store.append(schema::SENSOR_DATA, rows.clone()).unwrap();
    let snap = store.snapshot();
    let cols = ["ID", "DATE", "NOISE_VALUE", "TEMPERATURE_UNIT"];

    for trial in 0..20 {
        let lo = rng.random_range(0..5_000u64);
        let hi = lo + rng.random_range(0..2_000u64);
        let threshold = rng.random_range(0.0..90.0);
        let op = [CmpOp::Lt, CmpOp::LtEq, CmpOp::Gt, CmpOp::GtEq, CmpOp::Eq, CmpOp::NotEq][trial % 6];
        let pred = ScanPredicate::new(vec![
            ColumnFilter::Between {
                column: "DATE".into(),
                low: Value::Int(lo as i64),
                high: Value::Int(hi as i64),
            },
            ColumnFilter::Compare {
                column: "NOISE_VALUE".into(),
                op,
                value: Value::Decimal(threshold),
            },
        ]);
        let got = snap.scan(schema::SENSOR_DATA, &cols, Some(&pred)).unwrap();

        // oracle: filter the original rows in plain Rust
        let expected: Vec<&Vec<Value>> = rows
            .iter()
            .filter(|r| {
                let Value::Timestamp(d) = r[3] else { unreachable!() };
                let noise = r[6].as_f64();
                d >= lo && d <= hi && noise.is_some_and(|n| op.holds(n.partial_cmp(&threshold).unwrap()))
            })
            .collect();
        assert_eq!(got.len(), expected.len());
        for (i, row) in expected.iter().enumerate() {
            assert_eq!(got.columns[0].get(i), row[0]);
            assert_eq!(got.columns[2].get(i), row[6]);
            assert_eq!(got.columns[3].get(i), row[5]);
        }
    }
}

#[test]
fn concurrent_reader_sees_only_whole_batches() {
    let store = store();
    let done = AtomicBool::new(false);
    thread::scope(|s| {
        s.spawn(|| {
            for b in 0..1000u64 {
                store.append(schema::SENSOR_DATA, readings(b * 100 + 1, 100)).unwrap();
            }
            done.store(true, Ordering::Release);
        });
        s.spawn(|| {
            let mut observed = 0;
            while !done.load(Ordering::Acquire) {
                let snap = store.snapshot();
                let n = snap.row_count(schema::SENSOR_DATA).unwrap();
                assert_eq!(n % 100, 0, "torn batch: {n}");
                // no torn rows: every visible row has its non-null columns
                if n > 0 {
                    let scan = snap
                        .scan(schema::SENSOR_DATA, &["ID", "WORKPLACE_ID", "SENSOR_ID", "DATE"], None)
                        .unwrap();
                    assert!(scan.columns.iter().all(|c| c.non_null_count() == n));
                    assert_eq!(scan.columns[0].get(n - 1), Value::Int(n as i64));
                }
                observed += 1;
            }
            assert!(observed > 0);
        });
    });
    assert_eq!(store.snapshot().row_count(schema::SENSOR_DATA), Some(100_000));
}

#[test]
fn repeated_scans_of_one_snapshot_are_identical_under_ingest() {
    let store = store();
    let done = AtomicBool::new(false);
    thread::scope(|s| {
        s.spawn(|| {
            for b in 0..300u64 {
                store.append(schema::SENSOR_DATA, readings(b * 50 + 1, 50)).unwrap();
            }
            done.store(true, Ordering::Release);
        });
        while !done.load(Ordering::Acquire) {
            let snap = store.snapshot();
            let a = snap.scan(schema::SENSOR_DATA, &["ID", "VIBRATION_VALUE"], None).unwrap();
            let b = snap.scan(schema::SENSOR_DATA, &["ID", "VIBRATION_VALUE"], None).unwrap();
            assert_eq!(a, b);
        }
    });
}

#[test]
fn appends_credit_the_matching_rate_meter() {
    let store = store();
    assert_eq!(store.ingest_total(StreamClass::Business), 4);
    store.append(schema::SENSOR_DATA, readings(1, 25)).unwrap();
    assert_eq!(store.ingest_total(StreamClass::Sensor), 25);
    assert_eq!(store.ingest_total(StreamClass::Business), 4);
}

#[test]
fn sensor_rows_stay_under_byte_ceiling() {
    let store = store();
    for b in 0..100u64 {
        store.append(schema::SENSOR_DATA, readings(b * 2_000 + 1, 2_000)).unwrap();
    }
    let bytes = store.table_heap_bytes(schema::SENSOR_DATA).unwrap();
    let per_row = bytes as f64 / 200_000.0;
    assert!(per_row <= 256.0, "{per_row} bytes/row");
}

#[test]
fn row_cap_stops_ingestion() {
    let store = Store::with_catalog(
        &catalog(),
        StoreOptions {
            max_rows: 10,
            ..StoreOptions::default()
        },
    );
    let wp: Vec<_> = (1..=4).map(|i| vec![Value::Int(i), Value::text("w")]).collect();
    store.append(schema::WORKPLACE, wp).unwrap();
    store.append(schema::SENSOR_DATA, readings(1, 6)).unwrap();
    assert_eq!(
        store.append(schema::SENSOR_DATA, readings(7, 1)),
        Err(StoreError::Full { max_rows: 10 })
    );
}

#[test]
fn csv_export_quotes_and_reimports() {
    let store = store();
    let mut b = Batch::default();
    b.push_rows(
        schema::SUPPLIER,
        vec![
            vec![Value::Int(1), Value::text("Smith, Jones & \"Co\"")],
            vec![Value::Int(2), Value::text("plain")],
        ],
    );
    store.commit(&b).unwrap();
    store
        .append(schema::SENSOR_DATA, vec![reading(1, 5, SensorKind::Temperature, 21.25)])
        .unwrap();
    let snap = store.snapshot();

    let mut out = Vec::new();
    export_table(&snap, schema::SUPPLIER, &mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "ID,NAME\n1,\"Smith, Jones & \"\"Co\"\"\"\n2,plain\n"
    );
    let mut out = Vec::new();
    export_table(&snap, schema::SENSOR_DATA, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(
        text.lines().nth(1),
        Some("1,2,2,5,21.25,°C,,,,")
    );

    let dir = tempfile::tempdir().unwrap();
    export_dir(&snap, dir.path()).unwrap();
    let fresh = Store::with_catalog(&catalog(), StoreOptions::default());
    import_dir(&fresh, dir.path()).unwrap();
    let again = fresh.snapshot();
    assert_eq!(again.row_counts(), snap.row_counts());
    assert_eq!(again.row(schema::SUPPLIER, 0), snap.row(schema::SUPPLIER, 0));
    assert_eq!(again.row(schema::SENSOR_DATA, 0), snap.row(schema::SENSOR_DATA, 0));
}

#[test]
fn custom_tables_without_identity_accept_any_order() {
    let store = Store::new(StoreOptions::default());
    store
        .create_table(TableSchema::new(
            "EVENTS",
            vec![
                ColumnDef::new("KIND", ColumnType::Text),
                ColumnDef::new("AT", ColumnType::Timestamp).nullable(),
            ],
        ))
        .unwrap();
    store
        .append(
            "events",
            vec![
                vec![Value::text("b"), Value::Timestamp(9)],
                vec![Value::text("a"), Value::Null],
            ],
        )
        .unwrap();
    let scan = store.snapshot().scan("EVENTS", &["KIND", "AT"], None).unwrap();
    assert_eq!(scan.columns[0].get(1), Value::text("a"));
    assert_eq!(scan.columns[1].get(1), Value::Null);
}
