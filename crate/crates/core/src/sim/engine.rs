use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::domain::{
    schema, EntityId, IdAllocator, ProductionOrderHead, ProductionOrderPosition, PurchaseOrderHead, PurchaseOrderItem,
    Record, SalesOrderHead, SalesOrderItem, Timestamp, Value,
};
use crate::store::{Batch, FillIn};

use super::{MasterData, RoutingStep, SimClock, SimError};

/// Production orders served by one purchase order item.
pub const PURCHASE_LOT_SIZE: u32 = 10;
pub const DEFAULT_ARRIVAL_MEAN_MS: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimEventKind {
    OrderArrival,
    PositionEnter {
        order: EntityId,
        product: EntityId,
        step: usize,
    },
    PositionLeave {
        order: EntityId,
        product: EntityId,
        step: usize,
        position: EntityId,
    },
    SalesBooking {
        order: EntityId,
        product: EntityId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimEvent {
    pub id: u64,
    pub due: Timestamp,
    pub kind: SimEventKind,
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.due, self.id).cmp(&(other.due, other.id))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A row change applied after insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowUpdate {
    PositionLeft { position: EntityId, left_at: Timestamp },
    OrderFinished { order: EntityId, finished_at: Timestamp },
    SalesItemLinked { order: EntityId, sales_order_item: EntityId },
}

impl RowUpdate {
    pub fn to_fill_in(self) -> FillIn {
        let (table, id, column, value) = match self {
            RowUpdate::PositionLeft { position, left_at } => {
                (schema::PRODUCTION_ORDER_POSITION, position, "LEFT_AT", Value::ts(left_at))
            }
            RowUpdate::OrderFinished { order, finished_at } => {
                (schema::PRODUCTION_ORDER_HEAD, order, "FINISHED_AT", Value::ts(finished_at))
            }
            RowUpdate::SalesItemLinked { order, sales_order_item } => (
                schema::PRODUCTION_ORDER_HEAD,
                order,
                "SALES_ORDER_ITEM_ID",
                Value::id(sales_order_item),
            ),
        };
        FillIn {
            table: table.to_string(),
            id: id.get() as i64,
            column: column.to_string(),
            value,
        }
    }
}

/// Business rows produced by one `advance_to` call, grouped by table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmittedBatch {
    pub purchase_order_heads: Vec<PurchaseOrderHead>,
    pub purchase_order_items: Vec<PurchaseOrderItem>,
    pub sales_order_heads: Vec<SalesOrderHead>,
    pub sales_order_items: Vec<SalesOrderItem>,
    pub production_order_heads: Vec<ProductionOrderHead>,
    pub production_order_positions: Vec<ProductionOrderPosition>,
    pub updates: Vec<RowUpdate>,
}

impl EmittedBatch {
    pub fn row_count(&self) -> usize {
        self.purchase_order_heads.len()
            + self.purchase_order_items.len()
            + self.sales_order_heads.len()
            + self.sales_order_items.len()
            + self.production_order_heads.len()
            + self.production_order_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_count() == 0 && self.updates.is_empty()
    }

    /// Appends in dependency order, followed by the fill-ins.
    pub fn append_to(&self, batch: &mut Batch) {
        fn rows<R: Record>(items: &[R]) -> Vec<Vec<Value>> {
            items.iter().map(Record::to_values).collect()
        }
        batch.push_rows(schema::PURCHASE_ORDER_HEAD, rows(&self.purchase_order_heads));
        batch.push_rows(schema::PURCHASE_ORDER_ITEM, rows(&self.purchase_order_items));
        batch.push_rows(schema::SALES_ORDER_HEAD, rows(&self.sales_order_heads));
        batch.push_rows(schema::SALES_ORDER_ITEM, rows(&self.sales_order_items));
        batch.push_rows(schema::PRODUCTION_ORDER_HEAD, rows(&self.production_order_heads));
        batch.push_rows(schema::PRODUCTION_ORDER_POSITION, rows(&self.production_order_positions));
        batch.fill_ins.extend(self.updates.iter().map(|u| u.to_fill_in()));
    }

    pub fn to_store_batch(&self) -> Batch {
        let mut batch = Batch::default();
        self.append_to(&mut batch);
        batch
    }
}

#[derive(Debug, Clone)]
struct TableIds {
    purchase_head: IdAllocator,
    purchase_item: IdAllocator,
    sales_head: IdAllocator,
    sales_item: IdAllocator,
    production_head: IdAllocator,
    position: IdAllocator,
}

#[derive(Debug, Clone)]
struct OpenLot {
    item: EntityId,
    remaining: u32,
}

/// Seeded discrete-event simulation of the factory's order flow.
#[derive(Debug, Clone)]
pub struct Simulation {
    master: MasterData,
    arrivals: Exp<f64>,
    arrival_mean_ms: u64,
    rng: ChaCha8Rng,
    clock: SimClock,
    running: bool,
    queue: BinaryHeap<Reverse<SimEvent>>,
    next_event_id: u64,
    ids: TableIds,
    lot: Option<OpenLot>,
    supplier_cursor: usize,
    material_cursor: usize,
}

impl Simulation {
    /// Builds a stopped simulation whose queue holds the first order arrival.
    pub fn init(seed: u64, master: MasterData, arrival_mean_ms: u64, clock: SimClock) -> Result<Self, SimError> {
        master.validate()?;
        if arrival_mean_ms == 0 {
            return Err(SimError::InvalidArrivalMean);
        }
        let arrivals = Exp::new(1.0 / arrival_mean_ms as f64).map_err(|_| SimError::InvalidArrivalMean)?;
        let mut sim = Self {
            master,
            arrivals,
            arrival_mean_ms,
            rng: ChaCha8Rng::seed_from_u64(seed),
            clock,
            running: false,
            queue: BinaryHeap::new(),
            next_event_id: 0,
            ids: TableIds {
                purchase_head: IdAllocator::new(),
                purchase_item: IdAllocator::new(),
                sales_head: IdAllocator::new(),
                sales_item: IdAllocator::new(),
                production_head: IdAllocator::new(),
                position: IdAllocator::new(),
            },
            lot: None,
            supplier_cursor: 0,
            material_cursor: 0,
        };
        let first = sim.draw_interarrival();
        sim.schedule(Timestamp(first), SimEventKind::OrderArrival);
        Ok(sim)
    }

    pub fn master(&self) -> &MasterData {
        &self.master
    }

    pub fn arrival_mean_ms(&self) -> u64 {
        self.arrival_mean_ms
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn clock_mut(&mut self) -> &mut SimClock {
        &mut self.clock
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    pub fn start(&mut self) -> bool {
        self.running = true;
        self.running
    }

    pub fn stop(&mut self) -> bool {
        self.running = false;
        self.running
    }

    pub fn pending_events(&self) -> impl Iterator<Item = &SimEvent> {
        self.queue.iter().map(|Reverse(e)| e)
    }

    fn schedule(&mut self, due: Timestamp, kind: SimEventKind) {
        debug_assert!(due >= self.clock.now());
        let id = self.next_event_id;
        self.next_event_id += 1;
        self.queue.push(Reverse(SimEvent { id, due, kind }));
    }

    fn draw_interarrival(&mut self) -> u64 {
        let ms = self.arrivals.sample(&mut self.rng).round();
        (ms as u64).max(1)
    }

    /// Step duration drawn uniformly from `mean·(1 ± jitter)`.
    pub(crate) fn draw_duration(rng: &mut impl Rng, step: &RoutingStep) -> u64 {
        if step.duration_jitter <= 0.0 {
            return step.mean_duration_ms;
        }
        let mean = step.mean_duration_ms as f64;
        let lo = mean * (1.0 - step.duration_jitter);
        let hi = mean * (1.0 + step.duration_jitter);
        (rng.random_range(lo..=hi).round() as u64).max(1)
    }

    /// Processes every event due at or before `t` and moves the clock to `t`.
    /// A stopped simulation emits nothing and keeps its clock.
    pub fn advance_to(&mut self, t: Timestamp) -> Result<EmittedBatch, SimError> {
        let now = self.clock.now();
        if t < now {
            return Err(SimError::TimeInPast { now, requested: t });
        }
        let mut out = EmittedBatch::default();
        if !self.running {
            return Ok(out);
        }
        while let Some(Reverse(next)) = self.queue.peek() {
            if next.due > t {
                break;
            }
            let Reverse(event) = self.queue.pop().expect("peeked");
            self.clock.set_now(event.due);
            self.handle(event, &mut out);
        }
        self.clock.set_now(t);
        Ok(out)
    }

    fn handle(&mut self, event: SimEvent, out: &mut EmittedBatch) {
        let now = event.due;
        match event.kind {
            SimEventKind::OrderArrival => {
                let product = self.master.products[self.rng.random_range(0..self.master.products.len())].id;
                let lot_item = self.take_lot(now, out);
                let order = self.ids.production_head.next_id();
                out.production_order_heads.push(ProductionOrderHead {
                    id: order,
                    product_id: product,
                    purchase_order_item_id: lot_item,
                    sales_order_item_id: None,
                    released_at: now,
                    finished_at: None,
                });
                self.schedule(now, SimEventKind::SalesBooking { order, product });
                self.schedule(
                    now,
                    SimEventKind::PositionEnter {
                        order,
                        product,
                        step: 0,
                    },
                );
                let gap = self.draw_interarrival();
                self.schedule(now.saturating_add(gap), SimEventKind::OrderArrival);
            }
            SimEventKind::SalesBooking { order, product } => {
                let customer = self.master.customers[self.rng.random_range(0..self.master.customers.len())].id;
                let head = self.ids.sales_head.next_id();
                let item = self.ids.sales_item.next_id();
                out.sales_order_heads.push(SalesOrderHead {
                    id: head,
                    customer_id: customer,
                    created_at: now,
                });
                out.sales_order_items.push(SalesOrderItem {
                    id: item,
                    head_id: head,
                    product_id: product,
                    quantity: 1,
                });
                out.updates.push(RowUpdate::SalesItemLinked {
                    order,
                    sales_order_item: item,
                });
            }
            SimEventKind::PositionEnter { order, product, step } => {
                let routing_step = self.master.routings[&product][step].clone();
                let position = self.ids.position.next_id();
                out.production_order_positions.push(ProductionOrderPosition {
                    id: position,
                    head_id: order,
                    workplace_id: routing_step.workplace_id,
                    seq_no: step as u32 + 1,
                    entered_at: now,
                    left_at: None,
                });
                let duration = Self::draw_duration(&mut self.rng, &routing_step);
                self.schedule(
                    now.saturating_add(duration),
                    SimEventKind::PositionLeave {
                        order,
                        product,
                        step,
                        position,
                    },
                );
            }
            SimEventKind::PositionLeave {
                order,
                product,
                step,
                position,
            } => {
                out.updates.push(RowUpdate::PositionLeft { position, left_at: now });
                if step + 1 < self.master.routings[&product].len() {
                    self.schedule(
                        now,
                        SimEventKind::PositionEnter {
                            order,
                            product,
                            step: step + 1,
                        },
                    );
                } else {
                    out.updates.push(RowUpdate::OrderFinished {
                        order,
                        finished_at: now,
                    });
                }
            }
        }
    }

    /// Purchase order item for the next production order, opening a new
    /// purchase order (round-robin supplier) when the current lot is used up.
    fn take_lot(&mut self, now: Timestamp, out: &mut EmittedBatch) -> EntityId {
        if let Some(lot) = self.lot.as_mut().filter(|l| l.remaining > 0) {
            lot.remaining -= 1;
            return lot.item;
        }
        let supplier = self.master.suppliers[self.supplier_cursor % self.master.suppliers.len()].id;
        let material = self.master.materials[self.material_cursor % self.master.materials.len()].id;
        self.supplier_cursor += 1;
        self.material_cursor += 1;
        let head = self.ids.purchase_head.next_id();
        let item = self.ids.purchase_item.next_id();
        out.purchase_order_heads.push(PurchaseOrderHead {
            id: head,
            supplier_id: supplier,
            created_at: now,
        });
        out.purchase_order_items.push(PurchaseOrderItem {
            id: item,
            head_id: head,
            material_id: material,
            quantity: PURCHASE_LOT_SIZE,
        });
        self.lot = Some(OpenLot {
            item,
            remaining: PURCHASE_LOT_SIZE - 1,
        });
        item
    }
}
