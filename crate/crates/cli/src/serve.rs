use std::fs;
use std::path::Path;

use plantpulse_core::pipeline::PipelineOptions;
use plantpulse_core::sensor::{parse_config, SensorError};
use plantpulse_core::sim::MasterData;
use plantpulse_core::store::StoreOptions;
use plantpulse_server::{RunningServer, ServerConfig};

use crate::{CliError, ServeArgs};

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Operational(format!("cannot read {}: {e}", path.display())))
}

pub fn launch_config(args: &ServeArgs) -> Result<ServerConfig, CliError> {
    let master = match &args.master_data {
        Some(path) => {
            let master: MasterData = serde_json::from_str(&read(path)?)
                .map_err(|e| CliError::Input(format!("{}: malformed master data: {e}", path.display())))?;
            master
                .validate()
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            master
        }
        None => MasterData::default(),
    };
    let sensors = match &args.sensor_config {
        Some(path) => match parse_config(&read(path)?, &master.workplace_ids()) {
            Ok(set) => Some(set.sensors),
            Err(SensorError::InvalidConfig(violations)) => {
                return Err(CliError::Input(format!(
                    "{}: invalid sensor configuration:\n  {}",
                    path.display(),
                    violations.join("\n  ")
                )))
            }
            Err(e) => return Err(CliError::Input(format!("{}: {e}", path.display()))),
        },
        None => None,
    };
    let mut store = StoreOptions::default();
    if let Some(n) = args.max_rows {
        store.max_rows = n;
    }
    Ok(ServerConfig {
        pipeline: PipelineOptions {
            seed: args.seed,
            clock: args.clock,
            scale: args.scale,
            master,
            sensors,
            store,
            ..PipelineOptions::default()
        },
        static_dir: args.static_dir.clone(),
        ..ServerConfig::default()
    })
}

pub fn serve(args: ServeArgs) -> Result<(), CliError> {
    let config = launch_config(&args)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Operational(e.to_string()))?;
    runtime.block_on(async move {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Operational(format!("cannot listen on {addr}: {e}")))?;
        let server = RunningServer::start(config, listener)
            .await
            .map_err(|e| CliError::Input(e.to_string()))?;
        println!("listening on http://{}", server.addr);
        tokio::select! {
            result = server.wait() => result.map_err(|e| CliError::Operational(e.to_string())),
            _ = tokio::signal::ctrl_c() => Ok(()),
        }
    })
}
