//! Synthetic citizen corpora and the indexed vs linear latency benchmark.
//!
//! Given names, surnames, districts and occupations are drawn with a Zipf
//! law (weight `1 / rank`) over the order of their pool files; upazila,
//! union and village are uniform. A small share of given names instead comes
//! uniformly from a long tail of synthesized names, each individually rare.
//! The query mix is fixed per seed and reused for every corpus size:
//!
//! * selective: a tail given name plus a district,
//! * broad: one of the three most common districts,
//! * misspelled: a selective query with one character dropped or two
//!   swapped.

use std::collections::HashSet;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::db::{Database, DbConfig, DbError, TableDef};
use crate::index::{keycode, DataPointer};
use crate::phonetic::{CodePair, DoubleMetaphone, Word, DEFAULT_MAX_CODE_LEN};
use crate::query::{encode_terms, score_tokens, Query, ScoreWeights, DEFAULT_LIMIT};

const GIVEN_NAMES: &str = include_str!("pools/given_names.txt");
const SURNAMES: &str = include_str!("pools/surnames.txt");
const DISTRICTS: &str = include_str!("pools/districts.txt");
const UPAZILAS: &str = include_str!("pools/upazilas.txt");
const UNIONS: &str = include_str!("pools/unions.txt");
const VILLAGES: &str = include_str!("pools/villages.txt");
const OCCUPATIONS: &str = include_str!("pools/occupations.txt");

/// Districts a broad query picks from.
pub const COMMON_DISTRICTS: usize = 3;

/// Size of the synthesized given-name tail.
pub const TAIL_NAMES: usize = 20_000;

/// Probability that a generated record takes its given name from the tail.
pub const TAIL_SHARE: f64 = 0.05;

const SYLLABLES: [&str; 36] = [
    "ra", "hi", "ma", "sha", "mi", "na", "ju", "la", "ka", "ri", "su", "ta", "bi", "no", "de",
    "pa", "ru", "ha", "ja", "mo", "ti", "lu", "ba", "si", "ko", "fa", "zi", "go", "ne", "bo",
    "ya", "te", "di", "ku", "sa", "ni",
];

/// `count` distinct three-syllable names in a fixed pseudo-random order.
pub fn synthesized_names(count: usize) -> Vec<String> {
    let mut names: Vec<String> = SYLLABLES
        .iter()
        .flat_map(|a| {
            SYLLABLES
                .iter()
                .flat_map(move |b| SYLLABLES.iter().map(move |c| format!("{a}{b}{c}")))
        })
        .map(|n| {
            let mut cs = n.chars();
            let first = cs.next().unwrap().to_ascii_uppercase();
            std::iter::once(first).chain(cs).collect()
        })
        .collect();
    names.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5EED));
    names.truncate(count);
    names
}

fn lines(src: &str) -> impl Iterator<Item = &str> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn list(src: &str) -> Vec<String> {
    lines(src).map(str::to_string).collect()
}

/// Value pools for the generator. Order matters for the Zipf-drawn pools:
/// index 0 is the most frequent.
#[derive(Debug, Clone)]
pub struct Pools {
    pub given_names: Vec<String>,
    /// Drawn uniformly with probability [`TAIL_SHARE`].
    pub tail_names: Vec<String>,
    pub surnames: Vec<String>,
    /// (district, division)
    pub districts: Vec<(String, String)>,
    pub upazilas: Vec<String>,
    pub unions: Vec<String>,
    pub villages: Vec<String>,
    pub occupations: Vec<String>,
}

impl Pools {
    /// Romanized Bangla names and the 64 districts of Bangladesh.
    pub fn bangladesh() -> Self {
        let districts = lines(DISTRICTS)
            .map(|l| {
                let (d, div) = l.split_once('\t').expect("district<TAB>division");
                (d.to_string(), div.to_string())
            })
            .collect();
        let given_names = list(GIVEN_NAMES);
        let known: HashSet<String> = given_names.iter().map(|n| n.to_lowercase()).collect();
        let tail_names = synthesized_names(TAIL_NAMES + known.len())
            .into_iter()
            .filter(|n| !known.contains(&n.to_lowercase()))
            .take(TAIL_NAMES)
            .collect();
        Self {
            given_names,
            tail_names,
            surnames: list(SURNAMES),
            districts,
            upazilas: list(UPAZILAS),
            unions: list(UNIONS),
            villages: list(VILLAGES),
            occupations: list(OCCUPATIONS),
        }
    }

    fn check(&self) -> Result<(), BenchError> {
        let empty = [
            ("given_names", self.given_names.len()),
            ("tail_names", self.tail_names.len()),
            ("surnames", self.surnames.len()),
            ("districts", self.districts.len()),
            ("upazilas", self.upazilas.len()),
            ("unions", self.unions.len()),
            ("villages", self.villages.len()),
            ("occupations", self.occupations.len()),
        ]
        .into_iter()
        .find(|(_, n)| *n == 0);
        match empty {
            Some((name, _)) => Err(BenchError::EmptyPool(name)),
            None => Ok(()),
        }
    }
}

/// Zipf weights `1 / (rank + 1)` for a pool of `n` values.
pub fn zipf_weights(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 / (i + 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusSpec {
    pub record_count: usize,
    pub seed: u64,
}

/// Deterministic stream of citizen rows in [`crate::db::CITIZEN_FIELDS`]
/// order.
pub struct Records<'a> {
    pools: &'a Pools,
    rng: ChaCha8Rng,
    remaining: usize,
    given: WeightedIndex<f64>,
    surname: WeightedIndex<f64>,
    district: WeightedIndex<f64>,
    occupation: WeightedIndex<f64>,
}

impl Iterator for Records<'_> {
    type Item = Vec<String>;

    fn next(&mut self) -> Option<Vec<String>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let p = self.pools;
        let rng = &mut self.rng;
        let given = if rng.gen_bool(TAIL_SHARE) {
            p.tail_names.choose(rng).unwrap()
        } else {
            &p.given_names[self.given.sample(rng)]
        };
        let surname = &p.surnames[self.surname.sample(rng)];
        let (district, division) = &p.districts[self.district.sample(rng)];
        let upazila = p.upazilas.choose(rng).unwrap();
        let union = p.unions.choose(rng).unwrap();
        let village = p.villages.choose(rng).unwrap();
        let occupation = &p.occupations[self.occupation.sample(rng)];
        let phone = format!("8801{:09}", rng.gen_range(0..1_000_000_000u32));
        Some(vec![
            format!("{given} {surname}"),
            division.clone(),
            district.clone(),
            upazila.clone(),
            union.clone(),
            village.clone(),
            occupation.clone(),
            phone,
        ])
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

fn weighted(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new(zipf_weights(n)).expect("non-empty pool")
}

pub fn generate(pools: &Pools, spec: CorpusSpec) -> Result<Records<'_>, BenchError> {
    pools.check()?;
    Ok(Records {
        pools,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        remaining: spec.record_count,
        given: weighted(pools.given_names.len()),
        surname: weighted(pools.surnames.len()),
        district: weighted(pools.districts.len()),
        occupation: weighted(pools.occupations.len()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Selective,
    Broad,
    Misspelled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchQuery {
    pub kind: QueryKind,
    pub text: String,
}

/// Tail names whose codes are not shared with any token of the Zipf-drawn
/// or uniform pools, so a selective query does not drag in a common token
/// through a code collision.
pub fn rare_given_names(pools: &Pools, encoder: &DoubleMetaphone) -> Vec<String> {
    let codes = |text: &str| -> Vec<String> {
        encoder
            .encode_text(text)
            .into_iter()
            .flat_map(|(_, CodePair { primary, secondary })| {
                [keycode(&primary).to_string(), keycode(&secondary).to_string()]
            })
            .collect()
    };
    let others = pools
        .given_names
        .iter()
        .chain(&pools.surnames)
        .chain(pools.districts.iter().flat_map(|(d, div)| [d, div]))
        .chain(&pools.upazilas)
        .chain(&pools.unions)
        .chain(&pools.villages)
        .chain(&pools.occupations);
    let common: HashSet<String> = others.flat_map(|t| codes(t)).collect();
    pools
        .tail_names
        .iter()
        .filter(|n| {
            let c = codes(n);
            !c.is_empty() && c.iter().all(|k| !common.contains(k))
        })
        .cloned()
        .collect()
}

/// Drops one character or swaps two adjacent ones, never touching the
/// first letter.
pub fn misspell(word: &str, rng: &mut impl Rng) -> String {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() < 3 {
        return word.to_string();
    }
    for _ in 0..8 {
        let mut out = chars.clone();
        if rng.gen_bool(0.5) {
            out.remove(rng.gen_range(1..chars.len()));
        } else {
            let i = rng.gen_range(1..chars.len() - 1);
            out.swap(i, i + 1);
        }
        let s: String = out.into_iter().collect();
        if !s.eq_ignore_ascii_case(word) {
            return s;
        }
    }
    let mut out = chars;
    out.pop();
    out.into_iter().collect()
}

/// 70% selective, 20% broad, 10% misspelled, shuffled.
pub fn query_mix(pools: &Pools, count: usize, seed: u64) -> Result<Vec<BenchQuery>, BenchError> {
    pools.check()?;
    let rare = rare_given_names(pools, &DoubleMetaphone::new(DEFAULT_MAX_CODE_LEN));
    if rare.is_empty() {
        return Err(BenchError::EmptyPool("rare given names"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let district = weighted(pools.districts.len());
    let broad = (count * 2 + 5) / 10;
    let misspelled = (count + 5) / 10;
    let selective = count.saturating_sub(broad + misspelled);

    let selective_text = |rng: &mut ChaCha8Rng| {
        let name = rare.choose(rng).unwrap();
        let (d, _) = &pools.districts[district.sample(rng)];
        (name.clone(), d.clone())
    };
    let mut out = Vec::with_capacity(count);
    for _ in 0..selective {
        let (n, d) = selective_text(&mut rng);
        out.push(BenchQuery {
            kind: QueryKind::Selective,
            text: format!("{n} {d}"),
        });
    }
    for _ in 0..broad {
        let (d, _) = &pools.districts[rng.gen_range(0..COMMON_DISTRICTS.min(pools.districts.len()))];
        out.push(BenchQuery {
            kind: QueryKind::Broad,
            text: d.clone(),
        });
    }
    for _ in 0..misspelled {
        let (mut n, mut d) = selective_text(&mut rng);
        if rng.gen_bool(0.5) {
            n = misspell(&n, &mut rng);
        } else {
            d = misspell(&d, &mut rng);
        }
        out.push(BenchQuery {
            kind: QueryKind::Misspelled,
            text: format!("{} {}", n.to_lowercase(), d.to_lowercase()),
        });
    }
    out.shuffle(&mut rng);
    Ok(out)
}

/// Scores every record on every query. Records are encoded once up front so
/// the loop measures comparisons, not encoding.
pub struct LinearScanner {
    encoder: DoubleMetaphone,
    weights: ScoreWeights,
    rows: Vec<(DataPointer, Vec<(Word, CodePair)>)>,
}

impl LinearScanner {
    pub fn new(encoder: DoubleMetaphone, weights: ScoreWeights) -> Self {
        Self {
            encoder,
            weights,
            rows: Vec::new(),
        }
    }

    pub fn push<S: AsRef<str>>(&mut self, pointer: DataPointer, fields: &[S]) {
        let tokens = fields
            .iter()
            .flat_map(|f| self.encoder.encode_text(f.as_ref()))
            .collect();
        self.rows.push((pointer, tokens));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Ranked `(score, pointer)` pairs and the number of records compared.
    pub fn search(&self, query: &Query) -> (Vec<(u8, DataPointer)>, usize) {
        if !query.has_terms() {
            return (Vec::new(), 0);
        }
        let terms = encode_terms(&self.encoder, &query.tokens);
        let floor = query.min_score.max(1);
        let mut hits: Vec<(u8, DataPointer)> = self
            .rows
            .iter()
            .filter_map(|(p, tokens)| {
                let s = score_tokens(&self.weights, &terms, tokens.iter().map(|(w, c)| (w, c)));
                (s >= floor).then_some((s, *p))
            })
            .collect();
        hits.sort_unstable_by_key(|&(s, p)| (std::cmp::Reverse(s), p));
        hits.truncate(query.limit);
        (hits, self.rows.len())
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub queries: usize,
    pub seed: u64,
    pub limit: usize,
    /// Untimed pass over the query mix before measuring.
    pub warmup: bool,
    /// Back-to-back runs of each indexed query; its latency is the fastest
    /// run, which filters out scheduler noise. The first run is also
    /// reported on its own as the cold latency.
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1_000, 10_000, 100_000],
            queries: 200,
            seed: 42,
            limit: DEFAULT_LIMIT,
            warmup: true,
            repeats: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryOutcome {
    pub kind: QueryKind,
    pub text: String,
    pub indexed_us: f64,
    pub indexed_cold_us: f64,
    pub linear_us: f64,
    pub indexed_comparisons: usize,
    pub linear_comparisons: usize,
    pub candidates: usize,
    pub same_hits: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchResult {
    pub n: usize,
    pub build_ms: f64,
    pub indexed_mean_us: f64,
    pub indexed_median_us: f64,
    pub indexed_p99_us: f64,
    pub indexed_cold_mean_us: f64,
    pub linear_mean_us: f64,
    pub indexed_comparisons: f64,
    pub linear_comparisons: f64,
    pub candidate_set: f64,
    pub queries: Vec<QueryOutcome>,
}

impl BenchResult {
    /// Mean indexed latency over queries of one kind.
    pub fn indexed_mean_for(&self, kind: QueryKind) -> f64 {
        mean(self.queries.iter().filter(|q| q.kind == kind).map(|q| q.indexed_us))
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no corpus sizes given")]
    NoSizes,
    #[error("corpus sizes must be ascending")]
    NotAscending,
    #[error("pool {0} is empty")]
    EmptyPool(&'static str),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error("writing results: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
}

fn micros(d: Duration) -> f64 {
    d.as_secs_f64() * 1e6
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Benchmarks one corpus size.
pub fn run_size(
    pools: &Pools,
    n: usize,
    mix: &[BenchQuery],
    config: &BenchConfig,
) -> Result<BenchResult, BenchError> {
    let started = Instant::now();
    let db = Database::open(DbConfig::in_memory())?;
    let encoder = DoubleMetaphone::new(DEFAULT_MAX_CODE_LEN);
    let mut scanner = LinearScanner::new(encoder, db.engine().weights);
    let table = TableDef::citizen().name;
    for row in generate(pools, CorpusSpec { record_count: n, seed: config.seed })? {
        let p = db.insert(&table, row.clone())?;
        scanner.push(p, &row);
    }
    let build_ms = started.elapsed().as_secs_f64() * 1e3;

    let queries: Vec<Query> = mix
        .iter()
        .map(|q| Query::new(q.text.clone()).with_limit(config.limit))
        .collect();
    if config.warmup {
        for q in &queries {
            std::hint::black_box(db.search(q));
            std::hint::black_box(scanner.search(q));
        }
    }

    // Each engine runs the whole mix on its own so neither evicts the
    // other's working set between calls.
    let indexed: Vec<_> = queries
        .iter()
        .map(|q| {
            let t = Instant::now();
            let rs = db.search(q);
            let cold = micros(t.elapsed());
            let mut best = cold;
            for _ in 1..config.repeats.max(1) {
                let t = Instant::now();
                std::hint::black_box(db.search(q));
                best = best.min(micros(t.elapsed()));
            }
            ((best, cold), rs)
        })
        .collect();
    let linear: Vec<_> = queries
        .iter()
        .map(|q| {
            let t = Instant::now();
            let rs = scanner.search(q);
            (micros(t.elapsed()), rs)
        })
        .collect();

    let mut outcomes = Vec::with_capacity(queries.len());
    for (((q, bq), ((indexed_us, indexed_cold_us), indexed)), (linear_us, (linear, linear_comparisons))) in
        queries.iter().zip(mix).zip(indexed).zip(linear)
    {
        let candidates = db.read(|index, _| db.engine().candidates(index, q).map_or(0, |c| c.len()));
        let same_hits = indexed.hits.len() == linear.len()
            && indexed
                .hits
                .iter()
                .zip(&linear)
                .all(|(h, &(s, p))| h.score_percent == s && h.pointer == p);
        outcomes.push(QueryOutcome {
            kind: bq.kind,
            text: bq.text.clone(),
            indexed_us,
            indexed_cold_us,
            linear_us,
            indexed_comparisons: indexed.scored,
            linear_comparisons,
            candidates,
            same_hits,
        });
    }

    let mut lat: Vec<f64> = outcomes.iter().map(|o| o.indexed_us).collect();
    lat.sort_by(f64::total_cmp);
    Ok(BenchResult {
        n,
        build_ms,
        indexed_mean_us: mean(lat.iter().copied()),
        indexed_median_us: percentile(&lat, 50.0),
        indexed_p99_us: percentile(&lat, 99.0),
        indexed_cold_mean_us: mean(outcomes.iter().map(|o| o.indexed_cold_us)),
        linear_mean_us: mean(outcomes.iter().map(|o| o.linear_us)),
        indexed_comparisons: mean(outcomes.iter().map(|o| o.indexed_comparisons as f64)),
        linear_comparisons: mean(outcomes.iter().map(|o| o.linear_comparisons as f64)),
        candidate_set: mean(outcomes.iter().map(|o| o.candidates as f64)),
        queries: outcomes,
    })
}

/// Runs every size in `config` against the same query mix.
pub fn run(pools: &Pools, config: &BenchConfig) -> Result<Vec<BenchResult>, BenchError> {
    if config.sizes.is_empty() {
        return Err(BenchError::NoSizes);
    }
    if config.sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(BenchError::NotAscending);
    }
    let mix = query_mix(pools, config.queries, config.seed)?;
    config
        .sizes
        .iter()
        .map(|&n| {
            let r = run_size(pools, n, &mix, config)?;
            tracing::info!(n, indexed_mean_us = r.indexed_mean_us, linear_mean_us = r.linear_mean_us, "bench size done");
            Ok(r)
        })
        .collect()
}

#[derive(Serialize)]
struct CsvRow {
    n: usize,
    indexed_mean_us: f64,
    linear_mean_us: f64,
    indexed_comparisons: f64,
    linear_comparisons: f64,
    indexed_median_us: f64,
    indexed_p99_us: f64,
    indexed_cold_mean_us: f64,
    candidate_set: f64,
    build_ms: f64,
}

pub fn write_csv<W: Write>(results: &[BenchResult], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(CsvRow {
            n: r.n,
            indexed_mean_us: r.indexed_mean_us,
            linear_mean_us: r.linear_mean_us,
            indexed_comparisons: r.indexed_comparisons,
            linear_comparisons: r.linear_comparisons,
            indexed_median_us: r.indexed_median_us,
            indexed_p99_us: r.indexed_p99_us,
            indexed_cold_mean_us: r.indexed_cold_mean_us,
            candidate_set: r.candidate_set,
            build_ms: r.build_ms,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Gnuplot script plotting mean latency against corpus size from `csv_path`.
pub fn gnuplot_script(csv_path: &str, png_path: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 900,600\n\
         set output '{png_path}'\n\
         set title 'Search time by corpus size'\n\
         set xlabel 'records'\n\
         set ylabel 'mean search time (us)'\n\
         set logscale xy\n\
         set key top left\n\
         plot '{csv_path}' every ::1 using 1:2 with linespoints title 'indexed', \\\n     \
         '{csv_path}' every ::1 using 1:3 with linespoints title 'linear scan'\n"
    )
}
