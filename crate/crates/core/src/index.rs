//! Phonetic inverted index.
//!
//! Three structures back the index:
//!
//! * a table registry mapping small integer ids to table names,
//! * a code dictionary assigning each distinct keycode a dense [`CodeId`],
//! * a posting map from code id to the sorted list of places the code occurs.
//!
//! A place is a [`Posting`]: which record (by [`DataPointer`]), which field of
//! it, and whether the code was that token's primary or secondary encoding.
//! Tokens whose encoding comes out empty are filed under the sentinel
//! keycode `_` so they can still be found by exact match.
//!
//! Each indexed record also keeps its tokens as [`TokenKey`]s, integer ids
//! of the word and its codes, so scoring never compares strings.
//!
//! The index is derived data. It is rebuilt from the record store on open
//! and never written to disk.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rustc_hash::FxHashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phonetic::{tokenize, CodePair, DoubleMetaphone, PhoneticCode, Word};

/// Keycode used for tokens whose phonetic encoding is empty.
pub const EMPTY_CODE_SENTINEL: &str = "_";

/// Largest p_value the index accepts.
pub const MAX_P_VALUE: u64 = u32::MAX as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TableId(pub u16);

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Locates one row: the table it lives in and its primary key value.
/// Ordered by table, then key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DataPointer {
    pub table_id: TableId,
    pub p_value: u64,
}

impl DataPointer {
    pub fn new(table_id: TableId, p_value: u64) -> Self {
        Self { table_id, p_value }
    }
}

impl fmt::Display for DataPointer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.table_id, self.p_value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableInfo {
    pub id: TableId,
    pub name: String,
    pub description: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("table id {0} is already registered")]
    DuplicateTableId(TableId),
    #[error("table name {0:?} is already registered")]
    DuplicateTableName(String),
    #[error("table id {0} is not registered")]
    UnregisteredTable(TableId),
    #[error("record has {0} fields; at most {max} are supported", max = u16::MAX)]
    TooManyFields(usize),
    #[error("p_value {0} is above {MAX_P_VALUE}")]
    PValueOutOfRange(u64),
}

/// Registry of searchable tables. Id 0 is conventionally the citizen table.
#[derive(Debug, Clone, Default)]
pub struct TableRegistry {
    tables: BTreeMap<TableId, TableInfo>,
}

impl TableRegistry {
    pub fn register(
        &mut self,
        name: &str,
        id: u16,
        description: &str,
    ) -> Result<TableId, IndexError> {
        let id = TableId(id);
        if self.tables.contains_key(&id) {
            return Err(IndexError::DuplicateTableId(id));
        }
        if self.by_name(name).is_some() {
            return Err(IndexError::DuplicateTableName(name.to_string()));
        }
        self.tables.insert(
            id,
            TableInfo {
                id,
                name: name.to_string(),
                description: description.to_string(),
            },
        );
        Ok(id)
    }

    pub fn get(&self, id: TableId) -> Option<&TableInfo> {
        self.tables.get(&id)
    }

    pub fn by_name(&self, name: &str) -> Option<&TableInfo> {
        self.tables.values().find(|t| t.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &TableInfo> {
        self.tables.values()
    }
}

/// Dense identifier of a keycode in the dictionary. Stable for the life of
/// the index; entries are never removed, even when their postings empty out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeKind {
    Primary,
    Secondary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Posting {
    pub pointer: DataPointer,
    pub field_position: u16,
    pub kind: CodeKind,
}

/// One encoded token of an indexed record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedToken {
    pub field_position: u16,
    pub word: Word,
    pub codes: CodePair,
}

/// Id standing for "no match possible": an empty code or a word or code
/// the index has never seen.
pub const NO_ID: u32 = u32::MAX;

/// A token reduced to dictionary ids. Empty codes are [`NO_ID`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TokenKey {
    pub word: u32,
    pub primary: u32,
    pub secondary: u32,
}

#[derive(Debug, Clone)]
struct Entry {
    tokens: Box<[IndexedToken]>,
    keys: Box<[TokenKey]>,
}

/// Maps a phonetic code to its dictionary key.
pub fn keycode(code: &PhoneticCode) -> &str {
    if code.is_empty() {
        EMPTY_CODE_SENTINEL
    } else {
        code.as_str()
    }
}

#[derive(Debug, Clone)]
pub struct PhoneticIndex {
    encoder: DoubleMetaphone,
    tables: TableRegistry,
    dictionary: HashMap<String, CodeId>,
    keycodes: Vec<String>,
    /// Sorted and duplicate-free, one list per code id.
    postings: Vec<Vec<Posting>>,
    words: HashMap<String, u32>,
    /// Per table, slots addressed by p_value; the store hands p_values out
    /// densely, so a record's tokens sit near those of its neighbours.
    records: FxHashMap<TableId, Vec<Option<Entry>>>,
    live: usize,
}

impl Default for PhoneticIndex {
    fn default() -> Self {
        Self::new(DoubleMetaphone::default())
    }
}

impl PhoneticIndex {
    pub fn new(encoder: DoubleMetaphone) -> Self {
        Self {
            encoder,
            tables: TableRegistry::default(),
            dictionary: HashMap::new(),
            keycodes: Vec::new(),
            postings: Vec::new(),
            words: HashMap::new(),
            records: FxHashMap::default(),
            live: 0,
        }
    }

    pub fn encoder(&self) -> &DoubleMetaphone {
        &self.encoder
    }

    pub fn tables(&self) -> &TableRegistry {
        &self.tables
    }

    pub fn register_table(
        &mut self,
        name: &str,
        id: u16,
        description: &str,
    ) -> Result<TableId, IndexError> {
        self.tables.register(name, id, description)
    }

    /// Files every token of `fields` under its primary code and, when it
    /// differs, its secondary code. Re-indexing a pointer replaces its old
    /// postings. Returns the number of postings added.
    pub fn index_record<S: AsRef<str>>(
        &mut self,
        pointer: DataPointer,
        fields: &[S],
    ) -> Result<usize, IndexError> {
        if self.tables.get(pointer.table_id).is_none() {
            return Err(IndexError::UnregisteredTable(pointer.table_id));
        }
        if fields.len() > u16::MAX as usize {
            return Err(IndexError::TooManyFields(fields.len()));
        }
        if pointer.p_value > MAX_P_VALUE {
            return Err(IndexError::PValueOutOfRange(pointer.p_value));
        }
        self.deindex_record(pointer);

        let mut tokens = Vec::new();
        for (pos, field) in fields.iter().enumerate() {
            for word in tokenize(field.as_ref()) {
                let codes = self.encoder.encode(&word);
                tokens.push(IndexedToken {
                    field_position: pos as u16,
                    word,
                    codes,
                });
            }
        }

        let mut added = 0;
        let mut keys = Vec::with_capacity(tokens.len());
        for tok in &tokens {
            let primary = self.intern(keycode(&tok.codes.primary));
            added += self.add_posting(primary, pointer, tok.field_position, CodeKind::Primary);
            let secondary = if tok.codes.is_ambiguous() {
                let secondary = self.intern(keycode(&tok.codes.secondary));
                added +=
                    self.add_posting(secondary, pointer, tok.field_position, CodeKind::Secondary);
                secondary
            } else {
                primary
            };
            let word = self.intern_word(tok.word.as_str());
            keys.push(TokenKey {
                word,
                primary: if tok.codes.primary.is_empty() { NO_ID } else { primary.0 },
                secondary: if tok.codes.secondary.is_empty() { NO_ID } else { secondary.0 },
            });
        }
        if !tokens.is_empty() {
            let slots = self.records.entry(pointer.table_id).or_default();
            let at = pointer.p_value as usize;
            if slots.len() <= at {
                slots.resize_with(at + 1, || None);
            }
            slots[at] = Some(Entry {
                tokens: tokens.into_boxed_slice(),
                keys: keys.into_boxed_slice(),
            });
            self.live += 1;
        }
        Ok(added)
    }

    /// Removes every posting that references `pointer`. Idempotent.
    pub fn deindex_record(&mut self, pointer: DataPointer) -> usize {
        let Some(entry) = self
            .records
            .get_mut(&pointer.table_id)
            .and_then(|slots| slots.get_mut(pointer.p_value as usize))
            .and_then(Option::take)
        else {
            return 0;
        };
        self.live -= 1;
        let mut removed = 0;
        for tok in entry.tokens.iter() {
            removed += self.remove_posting(
                keycode(&tok.codes.primary),
                pointer,
                tok.field_position,
                CodeKind::Primary,
            );
            if tok.codes.is_ambiguous() {
                removed += self.remove_posting(
                    keycode(&tok.codes.secondary),
                    pointer,
                    tok.field_position,
                    CodeKind::Secondary,
                );
            }
        }
        removed
    }

    /// All postings filed under `code`, sorted by pointer.
    pub fn lookup(&self, code: &PhoneticCode) -> &[Posting] {
        self.lookup_key(keycode(code))
    }

    /// Like [`lookup`](Self::lookup) but by raw keycode, including the
    /// empty-code sentinel.
    pub fn lookup_key(&self, key: &str) -> &[Posting] {
        match self.dictionary.get(key) {
            Some(id) => &self.postings[id.0 as usize],
            None => &[],
        }
    }

    pub fn code_id(&self, key: &str) -> Option<CodeId> {
        self.dictionary.get(key).copied()
    }

    /// Id of a normalized word seen by the index, live or not.
    pub fn word_id(&self, word: &str) -> Option<u32> {
        self.words.get(word).copied()
    }

    /// Resolves a word and its codes to ids; anything unseen becomes
    /// [`NO_ID`].
    pub fn token_key(&self, word: &Word, codes: &CodePair) -> TokenKey {
        let code = |c: &PhoneticCode| {
            if c.is_empty() {
                NO_ID
            } else {
                self.code_id(c.as_str()).map_or(NO_ID, |id| id.0)
            }
        };
        TokenKey {
            word: self.word_id(word.as_str()).unwrap_or(NO_ID),
            primary: code(&codes.primary),
            secondary: code(&codes.secondary),
        }
    }

    fn entry(&self, pointer: DataPointer) -> Option<&Entry> {
        self.records
            .get(&pointer.table_id)?
            .get(usize::try_from(pointer.p_value).ok()?)?
            .as_ref()
    }

    /// The encoded tokens of an indexed record.
    pub fn tokens(&self, pointer: DataPointer) -> Option<&[IndexedToken]> {
        self.entry(pointer).map(|e| &*e.tokens)
    }

    /// The tokens of an indexed record as ids, in the order of
    /// [`tokens`](Self::tokens).
    pub fn keys(&self, pointer: DataPointer) -> Option<&[TokenKey]> {
        self.entry(pointer).map(|e| &*e.keys)
    }

    pub fn contains(&self, pointer: DataPointer) -> bool {
        self.entry(pointer).is_some()
    }

    /// Number of dictionary entries, including ones whose postings emptied.
    pub fn code_count(&self) -> usize {
        self.keycodes.len()
    }

    pub fn posting_count(&self) -> usize {
        self.postings.iter().map(Vec::len).sum()
    }

    pub fn record_count(&self) -> usize {
        self.live
    }

    /// Every `(keycode, posting)` pair in the index, sorted.
    pub fn entries(&self) -> Vec<(&str, Posting)> {
        let mut out: Vec<_> = self
            .keycodes
            .iter()
            .zip(&self.postings)
            .flat_map(|(key, list)| list.iter().map(move |p| (key.as_str(), *p)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Pointers of all indexed records.
    pub fn pointers(&self) -> impl Iterator<Item = DataPointer> + '_ {
        self.records.iter().flat_map(|(&table, slots)| {
            slots
                .iter()
                .enumerate()
                .filter(|(_, e)| e.is_some())
                .map(move |(p, _)| DataPointer::new(table, p as u64))
        })
    }

    fn intern(&mut self, key: &str) -> CodeId {
        if let Some(id) = self.dictionary.get(key) {
            return *id;
        }
        let id = CodeId(self.keycodes.len() as u32);
        self.dictionary.insert(key.to_string(), id);
        self.keycodes.push(key.to_string());
        self.postings.push(Vec::new());
        id
    }

    fn intern_word(&mut self, word: &str) -> u32 {
        if let Some(id) = self.words.get(word) {
            return *id;
        }
        let id = self.words.len() as u32;
        self.words.insert(word.to_string(), id);
        id
    }

    fn add_posting(
        &mut self,
        code: CodeId,
        pointer: DataPointer,
        field_position: u16,
        kind: CodeKind,
    ) -> usize {
        let posting = Posting {
            pointer,
            field_position,
            kind,
        };
        let list = &mut self.postings[code.0 as usize];
        // new pointers usually sort last
        if list.last().is_none_or(|last| *last < posting) {
            list.push(posting);
            return 1;
        }
        match list.binary_search(&posting) {
            Ok(_) => 0,
            Err(at) => {
                list.insert(at, posting);
                1
            }
        }
    }

    fn remove_posting(
        &mut self,
        key: &str,
        pointer: DataPointer,
        field_position: u16,
        kind: CodeKind,
    ) -> usize {
        let Some(id) = self.dictionary.get(key) else {
            return 0;
        };
        let list = &mut self.postings[id.0 as usize];
        let posting = Posting {
            pointer,
            field_position,
            kind,
        };
        match list.binary_search(&posting) {
            Ok(at) => {
                list.remove(at);
                1
            }
            Err(_) => 0,
        }
    }
}
