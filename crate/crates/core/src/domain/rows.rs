//! Typed records for every table in the catalog.

use serde::{Deserialize, Serialize};

use super::schema;
use super::types::{EntityId, SensorKind, Timestamp, Value};

/// A typed row that knows its table and its column layout.
pub trait Record {
    const TABLE: &'static str;

    fn to_values(&self) -> Vec<Value>;
}

macro_rules! named_record {
    ($ty:ident, $table:expr) => {
        #[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
        pub struct $ty {
            pub id: EntityId,
            pub name: String,
        }

        impl Record for $ty {
            const TABLE: &'static str = $table;

            fn to_values(&self) -> Vec<Value> {
                vec![Value::id(self.id), Value::text(self.name.clone())]
            }
        }
    };
}

named_record!(Supplier, schema::SUPPLIER);
named_record!(Customer, schema::CUSTOMER);
named_record!(Product, schema::PRODUCT);
named_record!(Material, schema::MATERIAL);
named_record!(Workplace, schema::WORKPLACE);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PurchaseOrderHead {
    pub id: EntityId,
    pub supplier_id: EntityId,
    pub created_at: Timestamp,
}

impl Record for PurchaseOrderHead {
    const TABLE: &'static str = schema::PURCHASE_ORDER_HEAD;

    fn to_values(&self) -> Vec<Value> {
        vec![Value::id(self.id), Value::id(self.supplier_id), Value::ts(self.created_at)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PurchaseOrderItem {
    pub id: EntityId,
    pub head_id: EntityId,
    pub material_id: EntityId,
    pub quantity: u32,
}

impl Record for PurchaseOrderItem {
    const TABLE: &'static str = schema::PURCHASE_ORDER_ITEM;

    fn to_values(&self) -> Vec<Value> {
        vec![
            Value::id(self.id),
            Value::id(self.head_id),
            Value::id(self.material_id),
            Value::Int(self.quantity as i64),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductionOrderHead {
    pub id: EntityId,
    pub product_id: EntityId,
    pub purchase_order_item_id: EntityId,
    pub sales_order_item_id: Option<EntityId>,
    pub released_at: Timestamp,
    pub finished_at: Option<Timestamp>,
}

impl Record for ProductionOrderHead {
    const TABLE: &'static str = schema::PRODUCTION_ORDER_HEAD;

    fn to_values(&self) -> Vec<Value> {
        vec![
            Value::id(self.id),
            Value::id(self.product_id),
            Value::id(self.purchase_order_item_id),
            Value::opt_id(self.sales_order_item_id),
            Value::ts(self.released_at),
            Value::opt_ts(self.finished_at),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductionOrderPosition {
    pub id: EntityId,
    pub head_id: EntityId,
    pub workplace_id: EntityId,
    pub seq_no: u32,
    pub entered_at: Timestamp,
    pub left_at: Option<Timestamp>,
}

impl Record for ProductionOrderPosition {
    const TABLE: &'static str = schema::PRODUCTION_ORDER_POSITION;

    fn to_values(&self) -> Vec<Value> {
        vec![
            Value::id(self.id),
            Value::id(self.head_id),
            Value::id(self.workplace_id),
            Value::Int(self.seq_no as i64),
            Value::ts(self.entered_at),
            Value::opt_ts(self.left_at),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SalesOrderHead {
    pub id: EntityId,
    pub customer_id: EntityId,
    pub created_at: Timestamp,
}

impl Record for SalesOrderHead {
    const TABLE: &'static str = schema::SALES_ORDER_HEAD;

    fn to_values(&self) -> Vec<Value> {
        vec![Value::id(self.id), Value::id(self.customer_id), Value::ts(self.created_at)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SalesOrderItem {
    pub id: EntityId,
    pub head_id: EntityId,
    pub product_id: EntityId,
    pub quantity: u32,
}

impl Record for SalesOrderItem {
    const TABLE: &'static str = schema::SALES_ORDER_ITEM;

    fn to_values(&self) -> Vec<Value> {
        vec![
            Value::id(self.id),
            Value::id(self.head_id),
            Value::id(self.product_id),
            Value::Int(self.quantity as i64),
        ]
    }
}

/// One sparse sensor row: exactly one measurement pair is populated.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorReading {
    pub id: EntityId,
    pub workplace_id: EntityId,
    pub sensor_id: EntityId,
    pub date: Timestamp,
    pub kind: SensorKind,
    pub value: f64,
}

impl SensorReading {
    pub fn measurement(&self, kind: SensorKind) -> Option<f64> {
        (self.kind == kind).then_some(self.value)
    }
}

impl Record for SensorReading {
    const TABLE: &'static str = schema::SENSOR_DATA;

    fn to_values(&self) -> Vec<Value> {
        let mut row = Vec::with_capacity(10);
        row.push(Value::id(self.id));
        row.push(Value::id(self.workplace_id));
        row.push(Value::id(self.sensor_id));
        row.push(Value::ts(self.date));
        for kind in SensorKind::ALL {
            if kind == self.kind {
                row.push(Value::Decimal(self.value));
                row.push(Value::text(kind.unit()));
            } else {
                row.push(Value::Null);
                row.push(Value::Null);
            }
        }
        row
    }
}
