use std::time::Instant;

use plantpulse_core::pipeline::{Pipeline, PipelineOptions};
use plantpulse_core::store::export_dir;

use crate::{CliError, RunArgs};

pub const STEP_MS: u64 = 100;

pub fn run(args: RunArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut pipeline =
        Pipeline::new(PipelineOptions::stepped(args.seed)).map_err(|e| CliError::Operational(e.to_string()))?;
    pipeline.start();
    let end = args.duration * 1000;
    while pipeline.now().millis() < end {
        let step = STEP_MS.min(end - pipeline.now().millis());
        pipeline
            .advance_by(step)
            .map_err(|e| CliError::Operational(e.to_string()))?;
        if !pipeline.is_running() {
            break;
        }
    }
    let snapshot = pipeline.store().snapshot();
    let counts = match &args.export_dir {
        Some(dir) => export_dir(&snapshot, dir).map_err(|e| CliError::Operational(e.to_string()))?,
        None => snapshot.row_counts(),
    };
    let width = counts.iter().map(|(t, _)| t.len()).max().unwrap_or(0);
    for (table, n) in &counts {
        println!("{table:<width$}  {n}");
    }
    let total: usize = counts.iter().map(|(_, n)| n).sum();
    println!(
        "simulated {} s with seed {}: {total} rows in {:.2} s",
        args.duration,
        args.seed,
        started.elapsed().as_secs_f64()
    );
    if let Some(reason) = pipeline.status().halted {
        println!("{reason}");
    }
    Ok(())
}
