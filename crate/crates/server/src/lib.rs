//! HTTP/JSON service over an [`ndc_search::Database`].
//!
//! | method | path                                | success            |
//! |--------|-------------------------------------|--------------------|
//! | POST   | `/tables/{name}/records`            | 201 pointer        |
//! | GET    | `/tables/{name}/records/{p_value}`  | 200 record object  |
//! | PUT    | `/tables/{name}/records/{p_value}`  | 200 pointer        |
//! | DELETE | `/tables/{name}/records/{p_value}`  | 204                |
//! | GET    | `/search?q=&limit=&min_score=`      | 200 ranked rows    |
//!
//! Errors carry `{"error": kind, "message": ...}` with kind one of
//! `validation`, `not_found`, `auth`, `storage`, `internal`.

pub mod config;
pub mod error;
pub mod routes;

use std::sync::Arc;

use axum::Router;
use ndc_search::{Database, DbConfig, DbError};

pub use config::ApiConfig;
pub use error::{ApiError, ErrorKind};
pub use routes::{AppState, MAX_LIMIT};

/// Opens the database under `config.data_dir` and builds the router.
pub fn app(config: ApiConfig) -> Result<Router, DbError> {
    let db = Database::open(DbConfig {
        durability: config.durability,
        ..DbConfig::on_disk(&config.data_dir)
    })?;
    Ok(routes::router(AppState {
        db: Arc::new(db),
        config: Arc::new(config),
    }))
}
