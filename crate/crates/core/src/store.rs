//! Record storage addressed by [`DataPointer`].
//!
//! Each table is backed by an append-only operation log,
//! `<data_dir>/<table_name>.log`. Every entry is framed as
//!
//! ```text
//! +--------+----------------+----------------+-----------------------+
//! | op: u8 | p_value: u64le | length: u32le  | payload (length bytes)|
//! +--------+----------------+----------------+-----------------------+
//! ```
//!
//! where `op` is `b'I'` (insert), `b'U'` (update) or `b'D'` (delete) and the
//! payload holds the UTF-8 field values joined by `0x1F`. Delete entries have
//! an empty payload. On open the log is replayed into memory; a torn entry at
//! the tail (from a crash mid-append) is cut off.
//!
//! Primary key values come from a per-table counter starting at 1 and are
//! never reissued, not even after the highest record is deleted.

use rustc_hash::FxHashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::index::{DataPointer, TableId};

pub const FIELD_SEPARATOR: u8 = 0x1F;
const HEADER_LEN: usize = 1 + 8 + 4;

const OP_INSERT: u8 = b'I';
const OP_UPDATE: u8 = b'U';
const OP_DELETE: u8 = b'D';

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("table {0} is not attached to the store")]
    UnknownTable(TableId),
    #[error("table {0} is already attached")]
    DuplicateTable(TableId),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("expected {expected} field values, got {actual}")]
    Arity { expected: usize, actual: usize },
    #[error("field {0} contains the reserved 0x1F separator")]
    ReservedByte(usize),
    #[error("no live record at {0}")]
    NotFound(DataPointer),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt log {path} at byte {offset}: {reason}")]
    Corrupt {
        path: PathBuf,
        offset: u64,
        reason: String,
    },
}

impl StoreError {
    /// True for failures of the storage medium rather than of the request.
    pub fn is_storage(&self) -> bool {
        matches!(self, StoreError::Io { .. } | StoreError::Corrupt { .. })
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schema {
    pub table_id: TableId,
    pub field_names: Vec<String>,
}

impl Schema {
    pub fn new<S: Into<String>>(
        table_id: TableId,
        field_names: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let field_names: Vec<String> = field_names.into_iter().map(Into::into).collect();
        if field_names.is_empty() {
            return Err(StoreError::InvalidSchema("no fields".into()));
        }
        for (i, name) in field_names.iter().enumerate() {
            if field_names[..i].contains(name) {
                return Err(StoreError::InvalidSchema(format!(
                    "duplicate field {name:?}"
                )));
            }
        }
        Ok(Self {
            table_id,
            field_names,
        })
    }

    pub fn arity(&self) -> usize {
        self.field_names.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Record {
    pub pointer: DataPointer,
    pub fields: Vec<String>,
}

/// When an appended entry counts as durable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Durability {
    /// `fsync` after every entry; survives power loss.
    #[default]
    Fsync,
    /// Hand entries to the OS without syncing; survives process crashes only.
    OsBuffered,
}

#[derive(Debug)]
struct LogWriter {
    path: PathBuf,
    file: File,
    len: u64,
    durability: Durability,
}

impl LogWriter {
    fn append(&mut self, op: u8, p_value: u64, fields: &[String]) -> Result<()> {
        let payload_len: usize = if fields.is_empty() {
            0
        } else {
            fields.iter().map(String::len).sum::<usize>() + fields.len() - 1
        };
        let mut buf = Vec::with_capacity(HEADER_LEN + payload_len);
        buf.push(op);
        buf.extend_from_slice(&p_value.to_le_bytes());
        buf.extend_from_slice(&(payload_len as u32).to_le_bytes());
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                buf.push(FIELD_SEPARATOR);
            }
            buf.extend_from_slice(f.as_bytes());
        }

        let written = self.file.write_all(&buf).and_then(|()| match self.durability {
            Durability::Fsync => self.file.sync_data(),
            Durability::OsBuffered => Ok(()),
        });
        if let Err(source) = written {
            // drop whatever part of the entry made it out
            let _ = self.file.set_len(self.len);
            return Err(StoreError::Io {
                path: self.path.clone(),
                source,
            });
        }
        self.len += buf.len() as u64;
        Ok(())
    }
}

#[derive(Debug)]
struct Table {
    name: String,
    schema: Schema,
    records: FxHashMap<u64, Arc<Record>>,
    next_p_value: u64,
    log: Option<LogWriter>,
}

impl Table {
    fn validate(&self, values: &[String]) -> Result<()> {
        if values.len() != self.schema.arity() {
            return Err(StoreError::Arity {
                expected: self.schema.arity(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| v.as_bytes().contains(&FIELD_SEPARATOR)) {
            return Err(StoreError::ReservedByte(i));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct RecordStore {
    dir: Option<PathBuf>,
    durability: Durability,
    tables: FxHashMap<TableId, Table>,
}

impl RecordStore {
    /// A store that keeps everything in memory and writes no logs.
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            durability: Durability::OsBuffered,
            tables: FxHashMap::default(),
        }
    }

    /// Opens (creating if needed) a store rooted at `dir`.
    pub fn open(dir: impl AsRef<Path>, durability: Durability) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self {
            dir: Some(dir),
            durability,
            tables: FxHashMap::default(),
        })
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Attaches a table, replaying its log if the store is disk-backed.
    pub fn attach_table(&mut self, name: &str, schema: Schema) -> Result<()> {
        let id = schema.table_id;
        if self.tables.contains_key(&id) {
            return Err(StoreError::DuplicateTable(id));
        }
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(StoreError::InvalidSchema(format!("bad table name {name:?}")));
        }
        let mut table = Table {
            name: name.to_string(),
            schema,
            records: FxHashMap::default(),
            next_p_value: 1,
            log: None,
        };
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{name}.log"));
            let len = replay(&path, &mut table)?;
            let file = OpenOptions::new()
                .append(true)
                .create(true)
                .open(&path)
                .map_err(|source| StoreError::Io {
                    path: path.clone(),
                    source,
                })?;
            table.log = Some(LogWriter {
                path,
                file,
                len,
                durability: self.durability,
            });
        }
        self.tables.insert(id, table);
        Ok(())
    }

    pub fn schema(&self, table: TableId) -> Option<&Schema> {
        self.tables.get(&table).map(|t| &t.schema)
    }

    pub fn table_name(&self, table: TableId) -> Option<&str> {
        self.tables.get(&table).map(|t| t.name.as_str())
    }

    /// Stores a new record and returns its pointer. The entry is on disk
    /// (per the store's [`Durability`]) before this returns.
    pub fn insert(&mut self, table: TableId, values: Vec<String>) -> Result<DataPointer> {
        let t = self
            .tables
            .get_mut(&table)
            .ok_or(StoreError::UnknownTable(table))?;
        t.validate(&values)?;
        let p_value = t.next_p_value;
        if let Some(log) = &mut t.log {
            log.append(OP_INSERT, p_value, &values)?;
        }
        t.next_p_value += 1;
        let pointer = DataPointer::new(table, p_value);
        t.records.insert(
            p_value,
            Arc::new(Record {
                pointer,
                fields: values,
            }),
        );
        Ok(pointer)
    }

    pub fn retrieve(&self, pointer: DataPointer) -> Option<Arc<Record>> {
        self.tables
            .get(&pointer.table_id)?
            .records
            .get(&pointer.p_value)
            .cloned()
    }

    pub fn update(&mut self, pointer: DataPointer, values: Vec<String>) -> Result<()> {
        let t = self
            .tables
            .get_mut(&pointer.table_id)
            .ok_or(StoreError::NotFound(pointer))?;
        if !t.records.contains_key(&pointer.p_value) {
            return Err(StoreError::NotFound(pointer));
        }
        t.validate(&values)?;
        if let Some(log) = &mut t.log {
            log.append(OP_UPDATE, pointer.p_value, &values)?;
        }
        t.records.insert(
            pointer.p_value,
            Arc::new(Record {
                pointer,
                fields: values,
            }),
        );
        Ok(())
    }

    /// Removes a record. Returns whether anything was live at `pointer`;
    /// deleting a missing record is a no-op and writes nothing.
    pub fn delete(&mut self, pointer: DataPointer) -> Result<bool> {
        let Some(t) = self.tables.get_mut(&pointer.table_id) else {
            return Ok(false);
        };
        if !t.records.contains_key(&pointer.p_value) {
            return Ok(false);
        }
        if let Some(log) = &mut t.log {
            log.append(OP_DELETE, pointer.p_value, &[])?;
        }
        t.records.remove(&pointer.p_value);
        Ok(true)
    }

    /// All live records, in no particular order.
    pub fn records(&self) -> impl Iterator<Item = &Arc<Record>> + '_ {
        self.tables.values().flat_map(|t| t.records.values())
    }

    pub fn len(&self) -> usize {
        self.tables.values().map(|t| t.records.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The p_value the next insert into `table` will receive.
    pub fn next_p_value(&self, table: TableId) -> Option<u64> {
        self.tables.get(&table).map(|t| t.next_p_value)
    }
}

/// Replays `path` into `table`, truncating a torn tail entry. Returns the
/// length of the valid log prefix.
fn replay(path: &Path, table: &mut Table) -> Result<u64> {
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut bytes = Vec::new();
    match File::open(path) {
        Ok(mut f) => {
            f.read_to_end(&mut bytes).map_err(io_err)?;
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(io_err(e)),
    }

    let corrupt = |offset: usize, reason: String| StoreError::Corrupt {
        path: path.to_path_buf(),
        offset: offset as u64,
        reason,
    };
    let table_id = table.schema.table_id;
    let mut at = 0usize;
    while at < bytes.len() {
        if bytes.len() - at < HEADER_LEN {
            break;
        }
        let op = bytes[at];
        let p_value = u64::from_le_bytes(bytes[at + 1..at + 9].try_into().unwrap());
        let len = u32::from_le_bytes(bytes[at + 9..at + 13].try_into().unwrap()) as usize;
        if bytes.len() - at - HEADER_LEN < len {
            break;
        }
        let payload = &bytes[at + HEADER_LEN..at + HEADER_LEN + len];
        let pointer = DataPointer::new(table_id, p_value);
        match op {
            OP_INSERT | OP_UPDATE => {
                let text = std::str::from_utf8(payload)
                    .map_err(|e| corrupt(at, format!("payload is not UTF-8: {e}")))?;
                let fields: Vec<String> = text
                    .split(FIELD_SEPARATOR as char)
                    .map(str::to_string)
                    .collect();
                if fields.len() != table.schema.arity() {
                    return Err(corrupt(
                        at,
                        format!(
                            "entry has {} fields, schema has {}",
                            fields.len(),
                            table.schema.arity()
                        ),
                    ));
                }
                let live = table.records.contains_key(&p_value);
                if op == OP_INSERT && (live || p_value < table.next_p_value) {
                    return Err(corrupt(at, format!("p_value {p_value} inserted twice")));
                }
                if op == OP_UPDATE && !live {
                    return Err(corrupt(at, format!("update of missing p_value {p_value}")));
                }
                table
                    .records
                    .insert(p_value, Arc::new(Record { pointer, fields }));
            }
            OP_DELETE => {
                table.records.remove(&p_value);
            }
            other => return Err(corrupt(at, format!("unknown op tag {other:#04x}"))),
        }
        table.next_p_value = table.next_p_value.max(p_value + 1);
        at += HEADER_LEN + len;
    }

    if at < bytes.len() {
        tracing::warn!(
            path = %path.display(),
            valid = at,
            total = bytes.len(),
            "truncating torn tail entry"
        );
        let f = OpenOptions::new().write(true).open(path).map_err(io_err)?;
        f.set_len(at as u64).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    Ok(at as u64)
}
