use std::fmt;

use serde::{Deserialize, Serialize};

pub const SUPPLIER: &str = "SUPPLIER";
pub const CUSTOMER: &str = "CUSTOMER";
pub const PRODUCT: &str = "PRODUCT";
pub const MATERIAL: &str = "MATERIAL";
pub const WORKPLACE: &str = "WORKPLACE";
pub const PURCHASE_ORDER_HEAD: &str = "PURCHASE_ORDER_HEAD";
pub const PURCHASE_ORDER_ITEM: &str = "PURCHASE_ORDER_ITEM";
pub const SALES_ORDER_HEAD: &str = "SALES_ORDER_HEAD";
pub const SALES_ORDER_ITEM: &str = "SALES_ORDER_ITEM";
pub const PRODUCTION_ORDER_HEAD: &str = "PRODUCTION_ORDER_HEAD";
pub const PRODUCTION_ORDER_POSITION: &str = "PRODUCTION_ORDER_POSITION";
pub const SENSOR_DATA: &str = "SENSOR_DATA";

/// Upper bound on the byte length of any text cell.
pub const MAX_TEXT_BYTES: usize = 128;

/// Physical column types understood by the store and the query engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Int64,
    Decimal64,
    Text,
    Timestamp,
}

impl ColumnType {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnType::Int64 => "int64",
            ColumnType::Decimal64 => "decimal64",
            ColumnType::Text => "text",
            ColumnType::Timestamp => "timestamp",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnType::Int64 | ColumnType::Decimal64)
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
    pub nullable: bool,
    /// Nullable column that may be set exactly once after the row was appended.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fill_in: bool,
}

impl ColumnDef {
    pub fn new(name: &str, ty: ColumnType) -> Self {
        Self {
            name: name.to_string(),
            ty,
            nullable: false,
            fill_in: false,
        }
    }

    pub fn nullable(mut self) -> Self {
        self.nullable = true;
        self
    }

    pub fn fill_in(mut self) -> Self {
        self.nullable = true;
        self.fill_in = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub column: String,
    pub references: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub foreign_keys: Vec<ForeignKey>,
}

impl TableSchema {
    pub fn new(name: &str, columns: Vec<ColumnDef>) -> Self {
        Self {
            name: name.to_string(),
            columns,
            foreign_keys: Vec::new(),
        }
    }

    pub fn with_fk(mut self, column: &str, references: &str) -> Self {
        self.foreign_keys.push(ForeignKey {
            column: column.to_string(),
            references: references.to_string(),
        });
        self
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    /// Index of the identity column: a leading non-nullable `ID` of type int64.
    pub fn id_column(&self) -> Option<usize> {
        match self.columns.first() {
            Some(c) if c.name == "ID" && c.ty == ColumnType::Int64 && !c.nullable => Some(0),
            _ => None,
        }
    }
}

/// All tables known to the system, in dependency order (referenced tables
/// come before the tables that reference them).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaCatalog {
    pub tables: Vec<TableSchema>,
}

impl SchemaCatalog {
    pub fn get(&self, name: &str) -> Option<&TableSchema> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn table_names(&self) -> impl Iterator<Item = &str> {
        self.tables.iter().map(|t| t.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

/// The twelve-table schema: eleven business tables plus `SENSOR_DATA`.
pub fn catalog() -> SchemaCatalog {
    use ColumnType::*;

    let named = |table: &str| {
        TableSchema::new(table, vec![ColumnDef::new("ID", Int64), ColumnDef::new("NAME", Text)])
    };

    let tables = vec![
        named(SUPPLIER),
        named(CUSTOMER),
        named(PRODUCT),
        named(MATERIAL),
        named(WORKPLACE),
        TableSchema::new(
            PURCHASE_ORDER_HEAD,
            vec![
                ColumnDef::new("ID", Int64),
                ColumnDef::new("SUPPLIER_ID", Int64),
                ColumnDef::new("CREATED_AT", Timestamp),
            ],
        )
        .with_fk("SUPPLIER_ID", SUPPLIER),
        TableSchema::new(
            PURCHASE_ORDER_ITEM,
            vec![
                ColumnDef::new("ID", Int64),
                ColumnDef::new("HEAD_ID", Int64),
                ColumnDef::new("MATERIAL_ID", Int64),
                ColumnDef::new("QUANTITY", Int64),
            ],
        )
        .with_fk("HEAD_ID", PURCHASE_ORDER_HEAD)
        .with_fk("MATERIAL_ID", MATERIAL),
        TableSchema::new(
            SALES_ORDER_HEAD,
            vec![
                ColumnDef::new("ID", Int64),
                ColumnDef::new("CUSTOMER_ID", Int64),
                ColumnDef::new("CREATED_AT", Timestamp),
            ],
        )
        .with_fk("CUSTOMER_ID", CUSTOMER),
        TableSchema::new(
            SALES_ORDER_ITEM,
            vec![
                ColumnDef::new("ID", Int64),
                ColumnDef::new("HEAD_ID", Int64),
                ColumnDef::new("PRODUCT_ID", Int64),
                ColumnDef::new("QUANTITY", Int64),
            ],
        )
        .with_fk("HEAD_ID", SALES_ORDER_HEAD)
        .with_fk("PRODUCT_ID", PRODUCT),
        TableSchema::new(
            PRODUCTION_ORDER_HEAD,
            vec![
                ColumnDef::new("ID", Int64),
                ColumnDef::new("PRODUCT_ID", Int64),
                ColumnDef::new("PURCHASE_ORDER_ITEM_ID", Int64),
                ColumnDef::new("SALES_ORDER_ITEM_ID", Int64).fill_in(),
                ColumnDef::new("RELEASED_AT", Timestamp),
                ColumnDef::new("FINISHED_AT", Timestamp).fill_in(),
            ],
        )
        .with_fk("PRODUCT_ID", PRODUCT)
        .with_fk("PURCHASE_ORDER_ITEM_ID", PURCHASE_ORDER_ITEM)
        .with_fk("SALES_ORDER_ITEM_ID", SALES_ORDER_ITEM),
        TableSchema::new(
            PRODUCTION_ORDER_POSITION,
            vec![
                ColumnDef::new("ID", Int64),
                ColumnDef::new("HEAD_ID", Int64),
                ColumnDef::new("WORKPLACE_ID", Int64),
                ColumnDef::new("SEQ_NO", Int64),
                ColumnDef::new("ENTERED_AT", Timestamp),
                ColumnDef::new("LEFT_AT", Timestamp).fill_in(),
            ],
        )
        .with_fk("HEAD_ID", PRODUCTION_ORDER_HEAD)
        .with_fk("WORKPLACE_ID", WORKPLACE),
        TableSchema::new(
            SENSOR_DATA,
            vec![
                ColumnDef::new("ID", Int64),
                ColumnDef::new("WORKPLACE_ID", Int64),
                ColumnDef::new("SENSOR_ID", Int64),
                ColumnDef::new("DATE", Timestamp),
                ColumnDef::new("TEMPERATURE_VALUE", Decimal64).nullable(),
                ColumnDef::new("TEMPERATURE_UNIT", Text).nullable(),
                ColumnDef::new("NOISE_VALUE", Decimal64).nullable(),
                ColumnDef::new("NOISE_UNIT", Text).nullable(),
                ColumnDef::new("VIBRATION_VALUE", Decimal64).nullable(),
                ColumnDef::new("VIBRATION_UNIT", Text).nullable(),
            ],
        )
        .with_fk("WORKPLACE_ID", WORKPLACE),
    ];
    SchemaCatalog { tables }
}
