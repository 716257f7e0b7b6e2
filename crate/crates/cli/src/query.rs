use std::fs;
use std::path::Path;

use plantpulse_core::domain::catalog;
use plantpulse_core::query::{run, QueryError, QueryOptions};
use plantpulse_core::store::{import_dir, Store, StoreOptions};
use serde_json::{json, Value};

use crate::table::{caret, Rendered};
use crate::{CliError, QueryArgs};

pub fn query(args: QueryArgs) -> Result<(), CliError> {
    let sql = match (&args.sql, &args.file) {
        (Some(sql), _) => sql.clone(),
        (None, Some(path)) => fs::read_to_string(path)
            .map_err(|e| CliError::Operational(format!("cannot read {}: {e}", path.display())))?,
        (None, None) => return Err(CliError::Input("no query given".into())),
    };
    let result = match (&args.url, &args.export_dir) {
        (Some(url), _) => remote(url, &sql)?,
        (None, Some(dir)) => offline(dir, &sql)?,
        (None, None) => return Err(CliError::Input("either --url or --export-dir is required".into())),
    };
    if args.csv {
        print!("{}", result.to_csv());
    } else {
        print!("{}", result.to_text());
    }
    Ok(())
}

fn user_error(sql: &str, message: &str, offset: Option<usize>) -> CliError {
    match offset {
        Some(offset) => CliError::Input(format!("{message}\n{}", caret(sql, offset))),
        None => CliError::Input(message.to_string()),
    }
}

fn remote(url: &str, sql: &str) -> Result<Rendered, CliError> {
    let endpoint = format!("{}/api/query", url.trim_end_matches('/'));
    let response = reqwest::blocking::Client::new()
        .post(&endpoint)
        .json(&json!({ "sql": sql }))
        .send()
        .map_err(|e| CliError::Operational(format!("cannot reach {endpoint}: {e}")))?;
    let status = response.status();
    let body: Value = response
        .json()
        .map_err(|e| CliError::Operational(format!("unreadable response from {endpoint}: {e}")))?;
    if status.is_success() {
        return Rendered::from_json(&body)
            .ok_or_else(|| CliError::Operational(format!("unexpected response from {endpoint}")));
    }
    let message = body["error"].as_str().unwrap_or("query failed");
    let offset = body["offset"].as_u64().map(|o| o as usize);
    if status.is_client_error() {
        Err(user_error(sql, message, offset))
    } else {
        Err(CliError::Operational(format!("{status}: {message}")))
    }
}

fn offline(dir: &Path, sql: &str) -> Result<Rendered, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Operational(format!("{} is not a directory", dir.display())));
    }
    let store = Store::with_catalog(
        &catalog(),
        StoreOptions {
            max_rows: u64::MAX,
            ..StoreOptions::default()
        },
    );
    import_dir(&store, dir).map_err(|e| CliError::Operational(e.to_string()))?;
    match run(sql, &store.snapshot(), &QueryOptions::default()) {
        Ok(table) => {
            let body = serde_json::to_value(&table).expect("result serializes");
            Ok(Rendered::from_json(&body).expect("result shape"))
        }
        Err(e @ (QueryError::Syntax { .. } | QueryError::Semantic(_) | QueryError::ResourceLimit { .. })) => {
            Err(user_error(sql, &e.to_string(), e.offset()))
        }
        Err(e) => Err(CliError::Operational(e.to_string())),
    }
}
