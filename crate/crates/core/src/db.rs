//! Record store and phonetic index kept in step behind one lock.
//!
//! Mutations take the write lock and update store and index together, so a
//! search (read lock) never sees a record without its postings or a posting
//! whose record is gone.

use std::path::PathBuf;
use std::sync::Arc;

use parking_lot::RwLock;
use thiserror::Error;

use crate::index::{DataPointer, IndexError, PhoneticIndex, TableId, TableInfo};
use crate::phonetic::{DoubleMetaphone, DEFAULT_MAX_CODE_LEN};
use crate::query::{Query, QueryEngine, ResultSet};
use crate::store::{Durability, Record, RecordStore, Schema, StoreError};

/// Field layout of the citizen table.
pub const CITIZEN_FIELDS: [&str; 8] = [
    "name",
    "division",
    "district",
    "upazila",
    "union",
    "village",
    "occupation",
    "phone",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDef {
    pub id: u16,
    pub name: String,
    pub description: String,
    pub fields: Vec<String>,
}

impl TableDef {
    pub fn new(id: u16, name: &str, description: &str, fields: &[&str]) -> Self {
        Self {
            id,
            name: name.to_string(),
            description: description.to_string(),
            fields: fields.iter().map(|f| f.to_string()).collect(),
        }
    }

    /// Table 0: citizen records.
    pub fn citizen() -> Self {
        Self::new(
            0,
            "citizen",
            "Storing the information of citizen",
            &CITIZEN_FIELDS,
        )
    }
}

#[derive(Debug, Clone)]
pub struct DbConfig {
    /// `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub durability: Durability,
    pub tables: Vec<TableDef>,
    pub max_code_len: usize,
    pub engine: QueryEngine,
}

impl Default for DbConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            durability: Durability::Fsync,
            tables: vec![TableDef::citizen()],
            max_code_len: DEFAULT_MAX_CODE_LEN,
            engine: QueryEngine::default(),
        }
    }
}

impl DbConfig {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: Some(dir.into()),
            ..Self::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum DbError {
    #[error("unknown table {0:?}")]
    UnknownTable(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug)]
struct State {
    index: PhoneticIndex,
    store: RecordStore,
}

#[derive(Debug)]
pub struct Database {
    state: RwLock<State>,
    engine: QueryEngine,
}

impl Database {
    /// Opens the store, replays every table log and rebuilds the index.
    pub fn open(config: DbConfig) -> Result<Self, DbError> {
        let mut store = match &config.data_dir {
            Some(dir) => RecordStore::open(dir, config.durability)?,
            None => RecordStore::in_memory(),
        };
        let mut index = PhoneticIndex::new(DoubleMetaphone::new(config.max_code_len));
        for def in &config.tables {
            let id = index.register_table(&def.name, def.id, &def.description)?;
            store.attach_table(&def.name, Schema::new(id, def.fields.iter().cloned())?)?;
        }
        for record in store.records() {
            index.index_record(record.pointer, &record.fields)?;
        }
        Ok(Self {
            state: RwLock::new(State { index, store }),
            engine: config.engine,
        })
    }

    pub fn engine(&self) -> &QueryEngine {
        &self.engine
    }

    pub fn table(&self, name: &str) -> Option<(TableInfo, Schema)> {
        let st = self.state.read();
        let info = st.index.tables().by_name(name)?.clone();
        let schema = st.store.schema(info.id)?.clone();
        Some((info, schema))
    }

    pub fn tables(&self) -> Vec<TableInfo> {
        self.state.read().index.tables().iter().cloned().collect()
    }

    fn table_id(&self, st: &State, name: &str) -> Result<TableId, DbError> {
        st.index
            .tables()
            .by_name(name)
            .map(|t| t.id)
            .ok_or_else(|| DbError::UnknownTable(name.to_string()))
    }

    pub fn insert(&self, table: &str, values: Vec<String>) -> Result<DataPointer, DbError> {
        let mut st = self.state.write();
        let id = self.table_id(&st, table)?;
        let pointer = st.store.insert(id, values)?;
        let State { index, store } = &mut *st;
        let record = store.retrieve(pointer).expect("record just inserted");
        index.index_record(pointer, &record.fields)?;
        Ok(pointer)
    }

    pub fn get(&self, pointer: DataPointer) -> Option<Arc<Record>> {
        self.state.read().store.retrieve(pointer)
    }

    pub fn update(&self, pointer: DataPointer, values: Vec<String>) -> Result<(), DbError> {
        let mut st = self.state.write();
        st.store.update(pointer, values)?;
        let State { index, store } = &mut *st;
        let record = store.retrieve(pointer).expect("record just updated");
        index.index_record(pointer, &record.fields)?;
        Ok(())
    }

    /// Deletes a record if live; returns whether anything was removed.
    pub fn delete(&self, pointer: DataPointer) -> Result<bool, DbError> {
        let mut st = self.state.write();
        let removed = st.store.delete(pointer)?;
        st.index.deindex_record(pointer);
        Ok(removed)
    }

    pub fn search(&self, query: &Query) -> ResultSet {
        let st = self.state.read();
        self.engine.search(&st.index, &st.store, query)
    }

    pub fn len(&self) -> usize {
        self.state.read().store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Runs `f` with shared access to the index and store.
    pub fn read<R>(&self, f: impl FnOnce(&PhoneticIndex, &RecordStore) -> R) -> R {
        let st = self.state.read();
        f(&st.index, &st.store)
    }
}
