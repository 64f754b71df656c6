use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;

use ndc_search::query::DEFAULT_LIMIT;
use ndc_search::store::Durability;

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub bind_addr: SocketAddr,
    pub data_dir: PathBuf,
    /// Bearer token required on mutations; `None` disables auth.
    pub api_token: Option<String>,
    pub default_limit: usize,
    /// Also require the token on `/search`.
    pub search_requires_auth: bool,
    /// Directory served at `/`; a built-in page is used when unset.
    pub ui_dir: Option<PathBuf>,
    pub durability: Durability,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            bind_addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("data"),
            api_token: None,
            default_limit: DEFAULT_LIMIT,
            search_requires_auth: false,
            ui_dir: None,
            durability: Durability::Fsync,
        }
    }
}

impl ApiConfig {
    /// Creates the data directory if needed and checks it is writable.
    pub fn prepare_data_dir(&self) -> io::Result<()> {
        fs::create_dir_all(&self.data_dir)?;
        let probe = self.data_dir.join(".write-probe");
        fs::write(&probe, b"")?;
        fs::remove_file(probe)
    }
}
