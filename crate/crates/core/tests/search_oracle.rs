//! Search results against a brute-force oracle that scores every record
//! straight from its text.

mod support;

use std::collections::BTreeSet;

use ndc_search::bench::misspell;
use ndc_search::phonetic::{tokenize, DoubleMetaphone};
use ndc_search::query::Strategy;
use ndc_search::Query;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::oracle::{corpus_db, random_query, ranked};

#[test]
fn fifty_corpora_match_oracle() {
    support::oracle::fifty_corpora_match_oracle();
}

#[test]
fn hits_come_from_candidates_only() {
    let db = corpus_db(11, 300, Strategy::Pruned);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let q = Query::new(random_query(&db, &mut rng)).with_limit(500);
        let cands = db.read(|idx, _| db.engine().candidates(idx, &q)).unwrap_or_default();
        for h in db.search(&q).hits {
            assert!(cands.contains(&h.pointer));
            assert!(h.score_percent > 0 && h.score_percent <= 100);
        }
    }
}

#[test]
fn no_terms_yields_empty_result() {
    let db = corpus_db(1, 20, Strategy::Pruned);
    for text in ["", "   ", "123 456", "-- ,,"] {
        let rs = db.search(&Query::new(text));
        assert!(rs.no_searchable_terms);
        assert!(rs.hits.is_empty());
        assert!(db
            .read(|idx, _| db.engine().candidates(idx, &Query::new(text)))
            .is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pruned_equals_exhaustive(seed in 0u64..1000, n in 0usize..200, qseed in any::<u64>(), limit in 1usize..60) {
        let pruned = corpus_db(seed, n, Strategy::Pruned);
        let exhaustive = corpus_db(seed, n, Strategy::Exhaustive);
        if n > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(qseed);
            let q = Query::new(random_query(&pruned, &mut rng)).with_limit(limit);
            prop_assert_eq!(ranked(&pruned, &q), ranked(&exhaustive, &q));
        }
    }

    #[test]
    fn scores_are_monotone_in_min_score(seed in 0u64..1000, qseed in any::<u64>(), min in 0u8..=100) {
        let db = corpus_db(seed, 100, Strategy::Pruned);
        let mut rng = ChaCha8Rng::seed_from_u64(qseed);
        let text = random_query(&db, &mut rng);
        let all = ranked(&db, &Query::new(text.clone()).with_limit(1000));
        let some = ranked(&db, &Query::new(text).with_limit(1000).with_min_score(min));
        let expect: Vec<_> = all.into_iter().filter(|&(s, _)| s >= min).collect();
        prop_assert_eq!(some, expect);
    }

    /// A misspelling that keeps the primary code still finds every record
    /// holding the original word, at 90% or better.
    #[test]
    fn misspellings_with_same_primary_are_found(seed in 0u64..500, qseed in any::<u64>()) {
        let db = corpus_db(seed, 150, Strategy::Pruned);
        let dm = DoubleMetaphone::default();
        let mut rng = ChaCha8Rng::seed_from_u64(qseed);
        let rows: Vec<(u64, Vec<String>)> =
            db.read(|_, s| s.records().map(|r| (r.pointer.p_value, r.fields.clone())).collect());
        let (_, row) = rows.choose(&mut rng).unwrap();
        let words: Vec<_> = row.iter().flat_map(|f| tokenize(f)).collect();
        prop_assume!(!words.is_empty());
        let t = words.choose(&mut rng).unwrap();
        let m = misspell(t.as_str(), &mut rng);
        let mw = tokenize(&m);
        prop_assume!(mw.len() == 1 && dm.encode(&mw[0]).primary == dm.encode(t).primary);

        let holders: BTreeSet<u64> = rows
            .iter()
            .filter(|(_, r)| r.iter().flat_map(|f| tokenize(f)).any(|w| &w == t))
            .map(|(p, _)| *p)
            .collect();
        let hits = ranked(&db, &Query::new(m.clone()).with_limit(1000));
        for p in &holders {
            let hit = hits.iter().find(|h| h.1 == *p);
            prop_assert!(hit.is_some_and(|h| h.0 >= 90), "{} misspelled as {}: {:?}", t, m, hit);
        }
    }

    /// Adding a record that matches nothing in the query leaves the result
    /// unchanged.
    #[test]
    fn non_matching_records_change_nothing(seed in 0u64..500, qseed in any::<u64>()) {
        let db = corpus_db(seed, 120, Strategy::Pruned);
        let mut rng = ChaCha8Rng::seed_from_u64(qseed);
        let q = Query::new(random_query(&db, &mut rng)).with_limit(1000);
        let before = ranked(&db, &q);
        let filler = vec!["Zzyzx".to_string(); ndc_search::CITIZEN_FIELDS.len()];
        let p = db.insert("citizen", filler).unwrap();
        let after = ranked(&db, &q);
        if after.iter().all(|h| h.1 != p.p_value) {
            prop_assert_eq!(before, after);
        }
    }
}
