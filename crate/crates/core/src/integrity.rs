//! Full-scan consistency check of a snapshot against every relational and
//! domain invariant. Used by tests and the fuzz harness.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::domain::{row_violations, schema, Value};
use crate::store::Snapshot;

struct TableData {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl TableData {
    fn col(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c == name).expect("known column")
    }
}

fn load(snapshot: &Snapshot) -> BTreeMap<String, TableData> {
    snapshot
        .row_counts()
        .into_iter()
        .map(|(name, n)| {
            let columns = snapshot
                .schema(&name)
                .expect("table in snapshot")
                .columns
                .iter()
                .map(|c| c.name.clone())
                .collect();
            let rows = (0..n).map(|i| snapshot.row(&name, i).expect("visible row")).collect();
            (name, TableData { columns, rows })
        })
        .collect()
}

/// Returns one message per violated invariant; empty means consistent.
pub fn check_integrity(snapshot: &Snapshot) -> Vec<String> {
    let mut errors = Vec::new();
    let data = load(snapshot);
    let mut ids: HashMap<&str, HashSet<i64>> = HashMap::new();

    for (name, table) in &data {
        let schema = snapshot.schema(name).expect("schema");
        let id_col = schema.id_column();
        let mut previous: Option<i64> = None;
        for (i, row) in table.rows.iter().enumerate() {
            for v in row_violations(schema, row) {
                errors.push(format!("{name} row {i}: {v}"));
            }
            if let Some(id) = id_col.and_then(|c| row[c].as_i64()) {
                if previous.is_some_and(|p| id <= p) {
                    errors.push(format!("{name} row {i}: id {id} not increasing"));
                }
                previous = Some(id);
                ids.entry(name.as_str()).or_default().insert(id);
            }
        }
    }

    for (name, table) in &data {
        let schema = snapshot.schema(name).expect("schema");
        for fk in &schema.foreign_keys {
            let c = table.col(&fk.column);
            let targets = ids.get(fk.references.as_str());
            for (i, row) in table.rows.iter().enumerate() {
                if let Some(v) = row[c].as_i64() {
                    if !targets.is_some_and(|t| t.contains(&v)) {
                        errors.push(format!("{name} row {i}: {} = {v} missing in {}", fk.column, fk.references));
                    }
                }
            }
        }
    }

    check_production(&data, &mut errors);
    errors
}

fn check_production(data: &BTreeMap<String, TableData>, errors: &mut Vec<String>) {
    let (Some(heads), Some(positions), Some(sales_items)) = (
        data.get(schema::PRODUCTION_ORDER_HEAD),
        data.get(schema::PRODUCTION_ORDER_POSITION),
        data.get(schema::SALES_ORDER_ITEM),
    ) else {
        return;
    };

    let (p_head, p_seq, p_in, p_out) = (
        positions.col("HEAD_ID"),
        positions.col("SEQ_NO"),
        positions.col("ENTERED_AT"),
        positions.col("LEFT_AT"),
    );
    let mut by_head: HashMap<i64, Vec<&Vec<Value>>> = HashMap::new();
    for row in &positions.rows {
        if let Some(h) = row[p_head].as_i64() {
            by_head.entry(h).or_default().push(row);
        }
    }
    let ts = |v: &Value| match v {
        Value::Timestamp(t) => Some(*t),
        _ => None,
    };

    let product_of_item: HashMap<i64, i64> = {
        let (id, product) = (sales_items.col("ID"), sales_items.col("PRODUCT_ID"));
        sales_items
            .rows
            .iter()
            .filter_map(|r| Some((r[id].as_i64()?, r[product].as_i64()?)))
            .collect()
    };

    let (h_id, h_product, h_item, h_finished) = (
        heads.col("ID"),
        heads.col("PRODUCT_ID"),
        heads.col("SALES_ORDER_ITEM_ID"),
        heads.col("FINISHED_AT"),
    );
    for row in &heads.rows {
        let Some(id) = row[h_id].as_i64() else { continue };
        let mut steps = by_head.remove(&id).unwrap_or_default();
        steps.sort_by_key(|r| r[p_seq].as_i64());
        for (i, step) in steps.iter().enumerate() {
            if step[p_seq].as_i64() != Some(i as i64 + 1) {
                errors.push(format!("order {id}: positions are not numbered 1..{}", steps.len()));
                break;
            }
        }
        for pair in steps.windows(2) {
            match (ts(&pair[0][p_out]), ts(&pair[1][p_in])) {
                (Some(left), Some(entered)) if entered >= left => {}
                _ => errors.push(format!("order {id}: positions overlap or an earlier step is still open")),
            }
        }
        let last_left = steps.last().and_then(|s| ts(&s[p_out]));
        let all_left = !steps.is_empty() && steps.iter().all(|s| !s[p_out].is_null());
        let finished = ts(&row[h_finished]);
        if finished.is_some() != all_left {
            errors.push(format!("order {id}: finished state disagrees with its positions"));
        } else if finished.is_some() && finished != last_left {
            errors.push(format!("order {id}: finished_at differs from the last position's left_at"));
        }
        if let Some(item) = row[h_item].as_i64() {
            if product_of_item.get(&item) != row[h_product].as_i64().as_ref() {
                errors.push(format!("order {id}: sales item {item} is for a different product"));
            }
        }
    }
    for head in by_head.keys() {
        errors.push(format!("positions reference unknown order {head}"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{catalog, Timestamp};
    use crate::sim::MasterData;
    use crate::store::{Batch, Store, StoreOptions};

    fn seeded_store() -> Store {
        let store = Store::with_catalog(&catalog(), StoreOptions::default());
        let mut batch = MasterData::default().to_batch();
        let id = |v: i64| Value::Int(v);
        let t = |v: u64| Value::Timestamp(v);
        batch.push_rows("PURCHASE_ORDER_HEAD", vec![vec![id(1), id(1), t(0)]]);
        batch.push_rows("PURCHASE_ORDER_ITEM", vec![vec![id(1), id(1), id(1), id(10)]]);
        batch.push_rows("SALES_ORDER_HEAD", vec![vec![id(1), id(1), t(0)]]);
        batch.push_rows("SALES_ORDER_ITEM", vec![vec![id(1), id(1), id(2), id(1)]]);
        store.commit(&batch).unwrap();
        store
    }

    fn head(id: i64, product: i64, finished: Option<u64>) -> Vec<Value> {
        vec![
            Value::Int(id),
            Value::Int(product),
            Value::Int(1),
            Value::Int(1),
            Value::Timestamp(0),
            Value::opt_ts(finished.map(Timestamp)),
        ]
    }

    fn position(id: i64, head: i64, seq: i64, entered: u64, left: Option<u64>) -> Vec<Value> {
        vec![
            Value::Int(id),
            Value::Int(head),
            Value::Int(1),
            Value::Int(seq),
            Value::Timestamp(entered),
            Value::opt_ts(left.map(Timestamp)),
        ]
    }

    fn check(heads: Vec<Vec<Value>>, positions: Vec<Vec<Value>>) -> Vec<String> {
        let store = seeded_store();
        let mut batch = Batch::default();
        batch.push_rows("PRODUCTION_ORDER_HEAD", heads);
        batch.push_rows("PRODUCTION_ORDER_POSITION", positions);
        store.commit(&batch).unwrap();
        check_integrity(&store.snapshot())
    }

    #[test]
    fn consistent_order_passes() {
        let errors = check(
            vec![head(1, 2, Some(20))],
            vec![position(1, 1, 1, 0, Some(10)), position(2, 1, 2, 10, Some(20))],
        );
        assert_eq!(errors, Vec::<String>::new());
    }

    #[test]
    fn detects_overlap_unfinished_and_product_mismatch() {
        let errors = check(
            vec![head(1, 1, None)],
            vec![position(1, 1, 1, 0, Some(10)), position(2, 1, 2, 5, Some(20))],
        );
        assert!(errors.iter().any(|e| e.contains("overlap")), "{errors:?}");
        assert!(errors.iter().any(|e| e.contains("finished state")), "{errors:?}");
        assert!(errors.iter().any(|e| e.contains("different product")), "{errors:?}");
    }
}
