//! Index and store checks against entries derived from record text.

use std::collections::{BTreeMap, BTreeSet};

use ndc_search::index::{keycode, CodeKind, PhoneticIndex};
use ndc_search::phonetic::{tokenize, DoubleMetaphone};
use ndc_search::store::Durability;
use ndc_search::{DataPointer, Database, DbConfig, TableDef, TableId, CITIZEN_FIELDS};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORDS: &[&str] = &[
    "Abdullah", "Khulna", "khuln", "Ibtihal", "Barisal", "Smith", "Schmidt", "Rahim", "Dinajpur",
    "H", "Gorea", "Naikhong", "Char Bhairabi", "Dhaka", "Ångström", "O'Brien", "8801700041114",
    "", "  ", "Mohammad-Ali", "Cox's Bazar", "Raj", "Xavier",
];

pub fn random_row(rng: &mut impl Rng) -> Vec<String> {
    (0..CITIZEN_FIELDS.len())
        .map(|_| {
            let k = rng.gen_range(0..3);
            (0..k)
                .map(|_| *WORDS.choose(rng).unwrap())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// (keycode, pointer, field, kind) computed from record text alone.
pub type Entry = (String, DataPointer, u16, CodeKind);

pub fn expected_entries(records: &BTreeMap<u64, Vec<String>>) -> BTreeSet<Entry> {
    let dm = DoubleMetaphone::default();
    let mut out = BTreeSet::new();
    for (&p, fields) in records {
        let pointer = DataPointer::new(TableId(0), p);
        for (pos, field) in fields.iter().enumerate() {
            for w in tokenize(field) {
                let c = dm.encode(&w);
                out.insert((keycode(&c.primary).to_string(), pointer, pos as u16, CodeKind::Primary));
                if c.primary != c.secondary {
                    out.insert((
                        keycode(&c.secondary).to_string(),
                        pointer,
                        pos as u16,
                        CodeKind::Secondary,
                    ));
                }
            }
        }
    }
    out
}

pub fn actual_entries(index: &PhoneticIndex) -> BTreeSet<Entry> {
    index
        .entries()
        .into_iter()
        .map(|(k, p)| (k.to_string(), p.pointer, p.field_position, p.kind))
        .collect()
}

pub fn rebuilt(db: &Database) -> BTreeSet<Entry> {
    db.read(|_, store| {
        let mut fresh = PhoneticIndex::default();
        let t = TableDef::citizen();
        fresh.register_table(&t.name, t.id, &t.description).unwrap();
        for r in store.records() {
            fresh.index_record(r.pointer, &r.fields).unwrap();
        }
        actual_entries(&fresh)
    })
}

pub fn check(db: &Database, model: &BTreeMap<u64, Vec<String>>) {
    let entries = db.read(|idx, _| actual_entries(idx));
    assert_eq!(entries, expected_entries(model), "index differs from record text");
    assert_eq!(entries, rebuilt(db), "index differs from a rebuild");
    db.read(|idx, store| {
        assert_eq!(store.len(), model.len());
        for (_, p, _, _) in &entries {
            assert!(store.retrieve(*p).is_some(), "dangling posting {p}");
        }
        for p in idx.pointers() {
            assert!(store.retrieve(p).is_some(), "dangling token cache {p}");
        }
    });
    for (&p, fields) in model {
        let got = db.get(DataPointer::new(TableId(0), p)).expect("live record");
        assert_eq!(&got.fields, fields);
    }
}

/// 12,000 random inserts, updates and deletes on disk, checked along the
/// way and again after a reopen.
pub fn ten_thousand_random_ops_then_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let config = DbConfig {
        durability: Durability::OsBuffered,
        ..DbConfig::on_disk(dir.path())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut model: BTreeMap<u64, Vec<String>> = BTreeMap::new();
    let mut issued = BTreeSet::new();
    {
        let db = Database::open(config.clone()).unwrap();
        for op in 0..12_000 {
            let live: Vec<u64> = model.keys().copied().collect();
            match rng.gen_range(0..10) {
                0..=4 => {
                    let row = random_row(&mut rng);
                    let p = db.insert("citizen", row.clone()).unwrap();
                    assert!(issued.insert(p.p_value), "p_value {} reissued", p.p_value);
                    assert_eq!(db.get(p).unwrap().fields, row);
                    model.insert(p.p_value, row);
                }
                5..=7 if !live.is_empty() => {
                    let p = *live.choose(&mut rng).unwrap();
                    let row = random_row(&mut rng);
                    db.update(DataPointer::new(TableId(0), p), row.clone()).unwrap();
                    model.insert(p, row);
                }
                _ => {
                    // deleting a missing or already deleted record is a no-op
                    let p = if live.is_empty() || rng.gen_bool(0.1) {
                        rng.gen_range(1..50_000)
                    } else {
                        *live.choose(&mut rng).unwrap()
                    };
                    let removed = db.delete(DataPointer::new(TableId(0), p)).unwrap();
                    assert_eq!(removed, model.remove(&p).is_some());
                }
            }
            if op % 3000 == 0 {
                check(&db, &model);
            }
        }
        check(&db, &model);
    }
    let db = Database::open(config).unwrap();
    check(&db, &model);
    let p = db.insert("citizen", random_row(&mut rng)).unwrap();
    assert!(!issued.contains(&p.p_value), "p_value reissued after reopen");
}
