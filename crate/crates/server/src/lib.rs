//! HTTP API over one shared pipeline: simulation control, sensor
//! configuration, ad-hoc queries and a live ingestion metrics stream.

mod metrics;
mod routes;
mod ticker;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use plantpulse_core::pipeline::{Pipeline, PipelineError, PipelineOptions};
use plantpulse_core::store::Store;
use tokio::net::TcpListener;

pub use metrics::MetricsFrame;
pub use routes::router;
pub use ticker::Ticker;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_TICK: Duration = Duration::from_millis(100);
pub const DEFAULT_QUERY_TIMEOUT: Duration = Duration::from_secs(30);
pub const METRICS_INTERVAL: Duration = Duration::from_secs(1);

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub pipeline: PipelineOptions,
    /// Directory of prebuilt UI assets served under `/`.
    pub static_dir: Option<PathBuf>,
    pub tick: Duration,
    pub query_timeout: Duration,
    pub metrics_interval: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineOptions::default(),
            static_dir: None,
            tick: DEFAULT_TICK,
            query_timeout: DEFAULT_QUERY_TIMEOUT,
            metrics_interval: METRICS_INTERVAL,
        }
    }
}

/// Shared handler state. Queries read snapshots from `store` without taking
/// the pipeline lock.
#[derive(Clone)]
pub struct AppState {
    pipeline: Arc<Mutex<Pipeline>>,
    store: Store,
    query_timeout: Duration,
    metrics_interval: Duration,
    static_dir: Option<PathBuf>,
    started: Instant,
}

impl AppState {
    pub fn new(config: &ServerConfig) -> Result<Self, PipelineError> {
        let pipeline = Pipeline::new(config.pipeline.clone())?;
        let store = pipeline.store().clone();
        Ok(Self {
            pipeline: Arc::new(Mutex::new(pipeline)),
            store,
            query_timeout: config.query_timeout,
            metrics_interval: config.metrics_interval,
            static_dir: config.static_dir.clone(),
            started: Instant::now(),
        })
    }

    pub fn pipeline(&self) -> &Arc<Mutex<Pipeline>> {
        &self.pipeline
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn uptime(&self) -> Duration {
        self.started.elapsed()
    }

    pub fn metrics(&self) -> MetricsFrame {
        let sim_time = self.pipeline.lock().now().millis();
        MetricsFrame::sample(&self.store, sim_time)
    }
}

/// A running server: the ticker thread plus the HTTP task.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub state: AppState,
    ticker: Ticker,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl RunningServer {
    /// Serves on an already bound listener.
    pub async fn start(config: ServerConfig, listener: TcpListener) -> Result<Self, PipelineError> {
        let state = AppState::new(&config)?;
        let addr = listener.local_addr().expect("bound listener has an address");
        let ticker = Ticker::spawn(state.pipeline.clone(), config.tick);
        let app = router(state.clone());
        let task = tokio::spawn(async move { axum::serve(listener, app).await });
        tracing::info!("listening on http://{addr}");
        Ok(Self {
            addr,
            state,
            ticker,
            task,
        })
    }

    /// Runs until the HTTP task ends.
    pub async fn wait(self) -> std::io::Result<()> {
        let result = match self.task.await {
            Ok(r) => r,
            Err(e) => Err(std::io::Error::other(e)),
        };
        self.ticker.stop();
        result
    }

    pub fn shutdown(self) {
        self.task.abort();
        self.ticker.stop();
    }
}
