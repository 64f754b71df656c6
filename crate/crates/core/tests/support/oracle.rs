//! A brute-force oracle that scores every record straight from its text.

use std::collections::BTreeSet;

use ndc_search::bench::{generate, misspell, CorpusSpec, Pools};
use ndc_search::phonetic::{tokenize, DoubleMetaphone};
use ndc_search::query::Strategy;
use ndc_search::{Database, DbConfig, Query, QueryEngine, ScoreWeights};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (score, p_value) for every record, ranked, limited.
pub fn oracle(db: &Database, text: &str, limit: usize, min_score: u8) -> Vec<(u8, u64)> {
    let dm = DoubleMetaphone::default();
    let terms: Vec<_> = tokenize(text).into_iter().map(|w| (dm.encode(&w), w)).collect();
    if terms.is_empty() {
        return Vec::new();
    }
    let w = ScoreWeights::default();
    let mut out: Vec<(u8, u64)> = db.read(|_, store| {
        store
            .records()
            .map(|r| {
                let tokens: Vec<_> = r
                    .fields
                    .iter()
                    .flat_map(|f| tokenize(f))
                    .map(|w| (dm.encode(&w), w))
                    .collect();
                let total: u32 = terms
                    .iter()
                    .map(|(qc, qw)| {
                        tokens
                            .iter()
                            .map(|(c, word)| {
                                let eq = |a: &ndc_search::PhoneticCode, b: &ndc_search::PhoneticCode| {
                                    !a.as_str().is_empty() && a.as_str() == b.as_str()
                                };
                                let mut levels = vec![0u8];
                                if qw == word {
                                    levels.push(w.exact);
                                }
                                if eq(&qc.primary, &c.primary) {
                                    levels.push(w.primary);
                                }
                                if eq(&qc.primary, &c.secondary) || eq(&qc.secondary, &c.primary) {
                                    levels.push(w.cross);
                                }
                                if eq(&qc.secondary, &c.secondary) {
                                    levels.push(w.secondary);
                                }
                                *levels.iter().max().unwrap() as u32
                            })
                            .max()
                            .unwrap_or(0)
                    })
                    .sum();
                let score = (total as f64 / terms.len() as f64 + 0.5).floor() as u8;
                (score, r.pointer.p_value)
            })
            .filter(|&(s, _)| s > 0 && s >= min_score)
            .collect()
    });
    out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    out.truncate(limit);
    out
}

/// Records sharing a keycode with any query token.
pub fn oracle_candidates(db: &Database, text: &str) -> BTreeSet<u64> {
    let dm = DoubleMetaphone::default();
    let key = |c: &ndc_search::PhoneticCode| {
        if c.as_str().is_empty() {
            "_".to_string()
        } else {
            c.as_str().to_string()
        }
    };
    let qkeys: BTreeSet<String> = tokenize(text)
        .iter()
        .flat_map(|w| {
            let c = dm.encode(w);
            [key(&c.primary), key(&c.secondary)]
        })
        .collect();
    db.read(|_, store| {
        store
            .records()
            .filter(|r| {
                r.fields.iter().flat_map(|f| tokenize(f)).any(|w| {
                    let c = dm.encode(&w);
                    qkeys.contains(&key(&c.primary)) || qkeys.contains(&key(&c.secondary))
                })
            })
            .map(|r| r.pointer.p_value)
            .collect()
    })
}

pub fn ranked(db: &Database, q: &Query) -> Vec<(u8, u64)> {
    db.search(q)
        .hits
        .iter()
        .map(|h| (h.score_percent, h.pointer.p_value))
        .collect()
}

pub fn corpus_db(seed: u64, n: usize, strategy: Strategy) -> Database {
    let config = DbConfig {
        engine: QueryEngine::new(ScoreWeights::default(), strategy),
        ..DbConfig::in_memory()
    };
    let db = Database::open(config).unwrap();
    for row in generate(&Pools::bangladesh(), CorpusSpec { record_count: n, seed }).unwrap() {
        db.insert("citizen", row).unwrap();
    }
    db
}

/// Query text drawn from the corpus itself, sometimes misspelled, sometimes
/// with tokens that occur nowhere.
pub fn random_query(db: &Database, rng: &mut ChaCha8Rng) -> String {
    let rows: Vec<Vec<String>> =
        db.read(|_, store| store.records().map(|r| r.fields.clone()).collect());
    let mut words: Vec<String> = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let row = rows.choose(rng).unwrap();
        let field = row.choose(rng).unwrap();
        let toks: Vec<&str> = field.split_whitespace().collect();
        let mut w = toks.choose(rng).unwrap().to_string();
        match rng.gen_range(0..10) {
            0..=2 => w = misspell(&w, rng),
            3 => w = w.to_lowercase(),
            4 => w = ["Zzyzx", "Qwerty", "Hh", "Smith"].choose(rng).unwrap().to_string(),
            _ => {}
        }
        words.push(w);
    }
    words.join(" ")
}

/// 50 corpora of at most 500 records, 20 queries each, both strategies.
pub fn fifty_corpora_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for corpus in 0..50u64 {
        let n = rng.gen_range(1..=500);
        let pruned = corpus_db(corpus, n, Strategy::Pruned);
        let exhaustive = corpus_db(corpus, n, Strategy::Exhaustive);
        for _ in 0..20 {
            let text = random_query(&pruned, &mut rng);
            let limit = *[1usize, 5, 10, 50, 500].choose(&mut rng).unwrap();
            let min_score = *[0u8, 0, 30, 50, 90].choose(&mut rng).unwrap();
            let q = Query::new(text.clone()).with_limit(limit).with_min_score(min_score);
            let want = oracle(&pruned, &text, limit, min_score);
            assert_eq!(ranked(&pruned, &q), want, "pruned, corpus {corpus}, query {text:?}");
            assert_eq!(ranked(&exhaustive, &q), want, "exhaustive, corpus {corpus}, query {text:?}");

            let cands = pruned.read(|idx, _| pruned.engine().candidates(idx, &q));
            assert_eq!(cands.is_err(), !q.has_terms());
            let cands: BTreeSet<u64> = cands.unwrap_or_default().iter().map(|p| p.p_value).collect();
            assert_eq!(cands, oracle_candidates(&pruned, &text), "candidates for {text:?}");
            let rs = exhaustive.search(&q);
            assert_eq!(rs.scored, cands.len(), "exhaustive scores each candidate once");
            assert!(pruned.search(&q).scored <= cands.len());
        }
    }
}
