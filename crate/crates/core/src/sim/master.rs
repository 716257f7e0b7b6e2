use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::{schema, Customer, EntityId, Material, Product, Record, Supplier, Workplace};
use crate::store::Batch;

use super::SimError;

pub const CUTTING_MACHINE: &str = "Cutting Machine";
pub const ASSEMBLY: &str = "Assembly";

pub const DEFAULT_STEP_MEAN_MS: u64 = 5_000;
pub const DEFAULT_STEP_JITTER: f64 = 0.2;

/// One stop on a product's route through the shop floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingStep {
    pub workplace_id: EntityId,
    pub mean_duration_ms: u64,
    #[serde(default)]
    pub duration_jitter: f64,
}

/// Static reference data of the simulated factory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasterData {
    pub suppliers: Vec<Supplier>,
    pub customers: Vec<Customer>,
    pub products: Vec<Product>,
    pub materials: Vec<Material>,
    pub workplaces: Vec<Workplace>,
    /// Product id → ordered routing.
    pub routings: BTreeMap<EntityId, Vec<RoutingStep>>,
}

fn named<T>(names: &[&str], make: impl Fn(EntityId, String) -> T) -> Vec<T> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| make(EntityId(i as u64 + 1), n.to_string()))
        .collect()
}

impl Default for MasterData {
    /// The preconfigured engine factory: 3 suppliers, 2 customers, 2 engine
    /// products, 2 materials and 4 workplaces, every product routed
    /// Cutting Machine → Assembly.
    fn default() -> Self {
        let workplaces = named(&[CUTTING_MACHINE, ASSEMBLY, "Milling", "Quality Inspection"], |id, name| {
            Workplace { id, name }
        });
        let products = named(&["Engine A", "Engine B"], |id, name| Product { id, name });
        let route = vec![
            RoutingStep {
                workplace_id: EntityId(1),
                mean_duration_ms: DEFAULT_STEP_MEAN_MS,
                duration_jitter: DEFAULT_STEP_JITTER,
            },
            RoutingStep {
                workplace_id: EntityId(2),
                mean_duration_ms: DEFAULT_STEP_MEAN_MS,
                duration_jitter: DEFAULT_STEP_JITTER,
            },
        ];
        let routings = products.iter().map(|p| (p.id, route.clone())).collect();
        Self {
            suppliers: named(&["Nordstahl AG", "Alu Werke GmbH", "Precision Castings Ltd"], |id, name| {
                Supplier { id, name }
            }),
            customers: named(&["Baltic Marine Drives", "Alpine Utility Vehicles"], |id, name| Customer {
                id,
                name,
            }),
            products,
            materials: named(&["Cast Iron Block", "Aluminium Ingot"], |id, name| Material { id, name }),
            workplaces,
            routings,
        }
    }
}

fn check_ids<T>(what: &str, rows: &[T], id: impl Fn(&T) -> EntityId, errors: &mut Vec<String>) {
    if rows.is_empty() {
        errors.push(format!("{what} list is empty"));
    }
    let mut prev = 0;
    for r in rows {
        let v = id(r).get();
        if v <= prev {
            errors.push(format!("{what} ids must be strictly increasing from 1 (got {v} after {prev})"));
        }
        prev = v;
    }
}

impl MasterData {
    pub fn validate(&self) -> Result<(), SimError> {
        let mut errors = Vec::new();
        check_ids("supplier", &self.suppliers, |r| r.id, &mut errors);
        check_ids("customer", &self.customers, |r| r.id, &mut errors);
        check_ids("product", &self.products, |r| r.id, &mut errors);
        check_ids("material", &self.materials, |r| r.id, &mut errors);
        check_ids("workplace", &self.workplaces, |r| r.id, &mut errors);

        let workplaces: BTreeSet<_> = self.workplace_ids().into_iter().collect();
        for p in &self.products {
            match self.routings.get(&p.id) {
                None => errors.push(format!("product {} has no routing", p.id)),
                Some(steps) if steps.is_empty() => errors.push(format!("product {} has no routing", p.id)),
                Some(steps) => {
                    for s in steps {
                        if !workplaces.contains(&s.workplace_id) {
                            errors.push(format!("routing of product {} uses unknown workplace {}", p.id, s.workplace_id));
                        }
                        if s.mean_duration_ms < 1 {
                            errors.push(format!("routing of product {} has a zero step duration", p.id));
                        }
                        if !(0.0..1.0).contains(&s.duration_jitter) {
                            errors.push(format!("routing of product {} has jitter outside [0,1)", p.id));
                        }
                    }
                }
            }
        }
        for product in self.routings.keys() {
            if !self.products.iter().any(|p| p.id == *product) {
                errors.push(format!("routing for unknown product {product}"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidMaster(errors))
        }
    }

    pub fn workplace_ids(&self) -> Vec<EntityId> {
        self.workplaces.iter().map(|w| w.id).collect()
    }

    pub fn workplace_by_name(&self, name: &str) -> Option<&Workplace> {
        self.workplaces.iter().find(|w| w.name == name)
    }

    /// All master rows as one store batch.
    pub fn to_batch(&self) -> Batch {
        fn rows<R: Record>(items: &[R]) -> Vec<Vec<crate::domain::Value>> {
            items.iter().map(Record::to_values).collect()
        }
        let mut batch = Batch::default();
        batch.push_rows(schema::SUPPLIER, rows(&self.suppliers));
        batch.push_rows(schema::CUSTOMER, rows(&self.customers));
        batch.push_rows(schema::PRODUCT, rows(&self.products));
        batch.push_rows(schema::MATERIAL, rows(&self.materials));
        batch.push_rows(schema::WORKPLACE, rows(&self.workplaces));
        batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_name_the_query_workplaces() {
        let m = MasterData::default();
        m.validate().unwrap();
        assert_eq!(m.suppliers.len(), 3);
        assert_eq!(m.customers.len(), 2);
        assert_eq!(m.products.len(), 2);
        assert_eq!(m.materials.len(), 2);
        assert_eq!(m.workplaces.len(), 4);
        let cut = m.workplace_by_name(CUTTING_MACHINE).unwrap().id;
        let asm = m.workplace_by_name(ASSEMBLY).unwrap().id;
        for steps in m.routings.values() {
            let route: Vec<_> = steps.iter().map(|s| s.workplace_id).collect();
            assert_eq!(route, vec![cut, asm]);
        }
    }

    #[test]
    fn empty_products_are_rejected() {
        let mut m = MasterData::default();
        m.products.clear();
        let Err(SimError::InvalidMaster(errors)) = m.validate() else { panic!() };
        assert!(errors.iter().any(|e| e.contains("product list is empty")), "{errors:?}");
    }

    #[test]
    fn routing_to_unknown_workplace_is_rejected() {
        let mut m = MasterData::default();
        m.routings.get_mut(&EntityId(1)).unwrap()[0].workplace_id = EntityId(77);
        assert!(m.validate().is_err());
    }

    #[test]
    fn master_data_round_trips_through_json() {
        let m = MasterData::default();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<MasterData>(&text).unwrap(), m);
    }
}
