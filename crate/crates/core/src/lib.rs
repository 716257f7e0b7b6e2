//! Simulated Industry 4.0 plant: linked ERP and sensor data generation,
//! an embedded columnar store, and a SQL-subset engine that joins the two
//! by ID (horizontal integration) and by time window (vertical integration).

pub mod domain;
pub mod store;
pub mod sim;
pub mod sensor;
pub mod pipeline;
pub mod integrity;
pub mod query;
