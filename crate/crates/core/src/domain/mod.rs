//! Relational schema, identifier and timestamp types, and row validation
//! shared by the generators, the store and the query engine.

mod rows;
pub mod schema;
mod types;
mod validate;

pub use rows::{
    Customer, Material, Product, ProductionOrderHead, ProductionOrderPosition, PurchaseOrderHead, PurchaseOrderItem,
    Record, SalesOrderHead, SalesOrderItem, SensorReading, Supplier, Workplace,
};
pub use schema::{catalog, ColumnDef, ColumnType, ForeignKey, SchemaCatalog, TableSchema};
pub use types::{EntityId, IdAllocator, SensorKind, Timestamp, Value};
pub use validate::{row_violations, validate_row, ValidationError, Violation, ViolationKind};

/// Renders the catalog as a Markdown reference: one section per table with
/// column name, type and nullability.
pub fn schema_reference(catalog: &SchemaCatalog) -> String {
    let mut out = String::from("# Schema reference\n");
    for table in &catalog.tables {
        out.push_str(&format!("\n## {}\n\n| column | type | nullable |\n|---|---|---|\n", table.name));
        for c in &table.columns {
            out.push_str(&format!("| {} | {} | {} |\n", c.name, c.ty, if c.nullable { "yes" } else { "no" }));
        }
        for fk in &table.foreign_keys {
            out.push_str(&format!("\n{} references {}.ID\n", fk.column, fk.references));
        }
    }
    out
}
