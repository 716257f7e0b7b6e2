use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use plantpulse_core::pipeline::Pipeline;

/// Background thread feeding elapsed wall time into the pipeline. Stepped
/// pipelines ignore the ticks.
pub struct Ticker {
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl Ticker {
    pub fn spawn(pipeline: Arc<Mutex<Pipeline>>, period: Duration) -> Self {
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let handle = std::thread::Builder::new()
            .name("pipeline-ticker".into())
            .spawn(move || {
                let mut last = Instant::now();
                while !flag.load(Ordering::Acquire) {
                    std::thread::sleep(period);
                    let now = Instant::now();
                    let wall_ms = now.duration_since(last).as_secs_f64() * 1000.0;
                    last = now;
                    if let Err(e) = pipeline.lock().tick(wall_ms) {
                        tracing::error!("ingestion step failed: {e}");
                    }
                }
            })
            .expect("spawn ticker thread");
        Self {
            stop,
            handle: Some(handle),
        }
    }

    pub fn stop(mut self) {
        self.halt();
    }

    fn halt(&mut self) {
        self.stop.store(true, Ordering::Release);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for Ticker {
    fn drop(&mut self) {
        self.halt();
    }
}
