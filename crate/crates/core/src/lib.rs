//! Misspelling-tolerant record search.
//!
//! Every field of a stored record is split into words and each word is
//! filed in an inverted index under its Double Metaphone codes. A query is
//! encoded the same way, so "khuln" finds "Khulna" and "Smith" finds
//! "Schmidt". Hits carry a match percentage and a [`DataPointer`] back to
//! the record.
//!
//! ```
//! use ndc_search::{Database, DbConfig, Query};
//!
//! let db = Database::open(DbConfig::in_memory()).unwrap();
//! let row = ["Abdullah", "Khulna", "Chandpur", "Haimchar", "Naikhong", "Gorea", "Employee", "8801700041114"];
//! db.insert("citizen", row.iter().map(|s| s.to_string()).collect()).unwrap();
//!
//! let hits = db.search(&Query::new("Abdullah khuln")).hits;
//! assert_eq!(hits[0].score_percent, 95);
//! ```

pub mod bench;
pub mod db;
pub mod index;
pub mod phonetic;
pub mod query;
pub mod store;

pub use db::{Database, DbConfig, DbError, TableDef, CITIZEN_FIELDS};
pub use index::{DataPointer, PhoneticIndex, TableId};
pub use phonetic::{CodePair, DoubleMetaphone, PhoneticCode, Word};
pub use query::{Query, QueryEngine, RankedHit, ResultSet, ScoreWeights, Strategy};
pub use store::{Durability, Record, RecordStore, Schema, StoreError};
