//! Ranked phonetic search.
//!
//! A query is tokenized and encoded like stored text. Records that share a
//! code with any query token are candidates; all other records cannot score
//! above zero and are never looked at. Each candidate gets a match
//! percentage: per query token the best level over the record's tokens,
//!
//! | match                                    | level |
//! |------------------------------------------|-------|
//! | same normalized word                     | 100   |
//! | same primary code                        | 90    |
//! | one's primary is the other's secondary   | 75    |
//! | same secondary code                      | 60    |
//!
//! averaged over the query tokens and rounded half-up. Hits are ordered by
//! score, then by pointer.
//!
//! [`Strategy::Pruned`] (the default) walks the candidate posting lists in
//! pointer order and stops reading lists that can no longer lift a record
//! into the current top `limit`. A term's best possible level is known up
//! front: 100 only if its exact word occurs somewhere in the index, else
//! at most the primary level. It returns exactly what
//! [`Strategy::Exhaustive`] returns, which scores every candidate.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::sync::Arc;

use serde::Serialize;

use crate::index::{keycode, DataPointer, PhoneticIndex, Posting, TokenKey, NO_ID};
use crate::phonetic::{tokenize, CodePair, DoubleMetaphone, PhoneticCode, Word};
use crate::store::{Record, RecordStore};

pub const DEFAULT_LIMIT: usize = 50;

/// Match levels in percent. The defaults order matches by confidence:
/// exact spelling, then primary agreement, cross agreement, secondary
/// agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreWeights {
    pub exact: u8,
    pub primary: u8,
    pub cross: u8,
    pub secondary: u8,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            exact: 100,
            primary: 90,
            cross: 75,
            secondary: 60,
        }
    }
}

impl ScoreWeights {
    /// Highest level a query token with key `q` can reach against any
    /// indexed token.
    fn bound(&self, q: &TokenKey) -> u32 {
        let mut b = 0;
        if q.word != NO_ID {
            b = b.max(self.exact);
        }
        if q.primary != NO_ID {
            b = b.max(self.primary).max(self.cross);
        }
        if q.secondary != NO_ID {
            b = b.max(self.cross).max(self.secondary);
        }
        b.min(100) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Pruned,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub raw_text: String,
    pub tokens: Vec<Word>,
    pub limit: usize,
    pub min_score: u8,
}

impl Query {
    pub fn new(raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        Self {
            tokens: tokenize(&raw_text),
            raw_text,
            limit: DEFAULT_LIMIT,
            min_score: 0,
        }
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn with_min_score(mut self, min_score: u8) -> Self {
        self.min_score = min_score;
        self
    }

    pub fn has_terms(&self) -> bool {
        !self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedHit {
    pub pointer: DataPointer,
    pub score_percent: u8,
    pub matched_record: Arc<Record>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultSet {
    pub hits: Vec<RankedHit>,
    pub query: Query,
    /// Set when the query had no letters to search on.
    pub no_searchable_terms: bool,
    /// How many records were scored to produce the hits.
    pub scored: usize,
}

/// Returned by [`QueryEngine::candidates`] for a query without tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("query has no searchable terms")]
pub struct NoSearchableTerms;

/// A query token with its codes.
#[derive(Debug, Clone)]
pub struct QueryTerm {
    pub word: Word,
    pub codes: CodePair,
}

pub fn encode_terms(encoder: &DoubleMetaphone, words: &[Word]) -> Vec<QueryTerm> {
    words
        .iter()
        .map(|w| QueryTerm {
            word: w.clone(),
            codes: encoder.encode(w),
        })
        .collect()
}

fn same(a: &PhoneticCode, b: &PhoneticCode) -> bool {
    !a.is_empty() && a == b
}

/// How well one query token matches one record token, in percent.
/// Empty codes never match phonetically.
pub fn match_level(weights: &ScoreWeights, term: &QueryTerm, word: &Word, codes: &CodePair) -> u8 {
    let q = &term.codes;
    let mut level = 0;
    if term.word == *word {
        level = weights.exact;
    }
    if same(&q.primary, &codes.primary) {
        level = level.max(weights.primary);
    }
    if same(&q.primary, &codes.secondary) || same(&q.secondary, &codes.primary) {
        level = level.max(weights.cross);
    }
    if same(&q.secondary, &codes.secondary) {
        level = level.max(weights.secondary);
    }
    level.min(100)
}

/// Mean of per-term levels, rounded half-up to a whole percent.
fn mean_percent(sum: u32, terms: usize) -> u8 {
    let n = terms as u32;
    ((2 * sum + n) / (2 * n)) as u8
}

/// Scores pre-encoded record tokens against `terms`.
pub fn score_tokens<'a, I>(weights: &ScoreWeights, terms: &[QueryTerm], tokens: I) -> u8
where
    I: IntoIterator<Item = (&'a Word, &'a CodePair)> + Clone,
{
    if terms.is_empty() {
        return 0;
    }
    let sum: u32 = terms
        .iter()
        .map(|term| {
            tokens
                .clone()
                .into_iter()
                .map(|(w, c)| match_level(weights, term, w, c))
                .max()
                .unwrap_or(0) as u32
        })
        .sum();
    mean_percent(sum, terms.len())
}

/// [`match_level`] on dictionary ids.
fn key_level(weights: &ScoreWeights, q: &TokenKey, t: &TokenKey) -> u8 {
    let mut level = 0;
    if q.word != NO_ID && q.word == t.word {
        level = weights.exact;
    }
    if q.primary != NO_ID {
        if q.primary == t.primary {
            level = level.max(weights.primary);
        }
        if q.primary == t.secondary {
            level = level.max(weights.cross);
        }
    }
    if q.secondary != NO_ID {
        if q.secondary == t.primary {
            level = level.max(weights.cross);
        }
        if q.secondary == t.secondary {
            level = level.max(weights.secondary);
        }
    }
    level.min(100)
}

fn score_keys(weights: &ScoreWeights, terms: &[TokenKey], keys: &[TokenKey]) -> u8 {
    let sum: u32 = terms
        .iter()
        .map(|q| keys.iter().map(|t| key_level(weights, q, t)).max().unwrap_or(0) as u32)
        .sum();
    mean_percent(sum, terms.len())
}

fn term_keys(index: &PhoneticIndex, terms: &[QueryTerm]) -> Vec<TokenKey> {
    terms
        .iter()
        .map(|t| index.token_key(&t.word, &t.codes))
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct QueryEngine {
    pub weights: ScoreWeights,
    pub strategy: Strategy,
}

impl QueryEngine {
    pub fn new(weights: ScoreWeights, strategy: Strategy) -> Self {
        Self { weights, strategy }
    }

    /// Every pointer filed under a primary or secondary code of any query
    /// token. Reads only the index.
    pub fn candidates(
        &self,
        index: &PhoneticIndex,
        query: &Query,
    ) -> Result<BTreeSet<DataPointer>, NoSearchableTerms> {
        if !query.has_terms() {
            return Err(NoSearchableTerms);
        }
        let mut out = BTreeSet::new();
        for term in encode_terms(index.encoder(), &query.tokens) {
            for list in term_lists(index, &term) {
                out.extend(list.iter().map(|p| p.pointer));
            }
        }
        Ok(out)
    }

    /// Match percentage of `record` for `query`, computed from the record's
    /// text.
    pub fn score(&self, encoder: &DoubleMetaphone, query: &Query, record: &Record) -> u8 {
        let terms = encode_terms(encoder, &query.tokens);
        let tokens: Vec<(Word, CodePair)> = record
            .fields
            .iter()
            .flat_map(|f| encoder.encode_text(f))
            .collect();
        score_tokens(&self.weights, &terms, tokens.iter().map(|(w, c)| (w, c)))
    }

    pub fn search(&self, index: &PhoneticIndex, store: &RecordStore, query: &Query) -> ResultSet {
        let mut result = ResultSet {
            hits: Vec::new(),
            query: query.clone(),
            no_searchable_terms: !query.has_terms(),
            scored: 0,
        };
        if result.no_searchable_terms || query.limit == 0 {
            return result;
        }
        let terms = encode_terms(index.encoder(), &query.tokens);
        let ranked = match self.strategy {
            Strategy::Exhaustive => self.rank_exhaustive(index, &terms, query, &mut result.scored),
            Strategy::Pruned => self.rank_pruned(index, &terms, query, &mut result.scored),
        };
        result.hits = ranked
            .into_iter()
            .filter_map(|(score, pointer)| {
                Some(RankedHit {
                    pointer,
                    score_percent: score,
                    matched_record: store.retrieve(pointer)?,
                })
            })
            .collect();
        result
    }

    fn rank_exhaustive(
        &self,
        index: &PhoneticIndex,
        terms: &[QueryTerm],
        query: &Query,
        scored: &mut usize,
    ) -> Vec<(u8, DataPointer)> {
        let mut pointers: Vec<DataPointer> = terms
            .iter()
            .flat_map(|t| term_lists(index, t))
            .flat_map(|list| list.iter().map(|p| p.pointer))
            .collect();
        pointers.sort_unstable();
        pointers.dedup();

        let qkeys = term_keys(index, terms);
        let floor = query.min_score.max(1);
        let mut ranked: Vec<(u8, DataPointer)> = pointers
            .into_iter()
            .filter_map(|p| {
                let keys = index.keys(p)?;
                *scored += 1;
                let s = score_keys(&self.weights, &qkeys, keys);
                (s >= floor).then_some((s, p))
            })
            .collect();
        ranked.sort_unstable_by_key(|&(s, p)| (Reverse(s), p));
        ranked.truncate(query.limit);
        ranked
    }

    /// Document-at-a-time top-k. Records are visited in ascending pointer
    /// order, so a newcomer must strictly beat the current k-th score to
    /// enter. Once the k-th score reaches `t`, any record found only in the
    /// `m` largest term streams is capped at the mean of their bounds; while
    /// that cap is `<= t` those streams are no longer read.
    fn rank_pruned(
        &self,
        index: &PhoneticIndex,
        terms: &[QueryTerm],
        query: &Query,
        scored: &mut usize,
    ) -> Vec<(u8, DataPointer)> {
        let k = query.limit;
        let n_terms = terms.len();
        let qkeys = term_keys(index, terms);

        let mut streams: Vec<TermStream<'_>> = terms
            .iter()
            .zip(&qkeys)
            .map(|(t, q)| TermStream::new(term_lists(index, t), self.weights.bound(q)))
            .collect();
        // largest first: these are the first to become skippable
        streams.sort_by_key(|s| Reverse(s.size));

        // worst hit on top
        let mut heap: BinaryHeap<(Reverse<u8>, DataPointer)> = BinaryHeap::with_capacity(k + 1);
        let base = query.min_score.max(1) - 1;
        let mut threshold = base;
        let mut skippable = 0;
        let mut skipped_bound = 0;

        loop {
            let active = &mut streams[skippable..];
            let Some(pointer) = active.iter().filter_map(TermStream::head).min() else {
                break;
            };
            for s in active.iter_mut() {
                s.advance_past(pointer);
            }
            let Some(keys) = index.keys(pointer) else {
                continue;
            };
            *scored += 1;
            let score = score_keys(&self.weights, &qkeys, keys);
            if score <= threshold {
                continue;
            }
            heap.push((Reverse(score), pointer));
            if heap.len() > k {
                heap.pop();
            }
            if heap.len() == k {
                threshold = heap.peek().map_or(base, |(Reverse(s), _)| *s);
                while skippable < n_terms
                    && mean_percent(skipped_bound + streams[skippable].bound, n_terms) <= threshold
                {
                    skipped_bound += streams[skippable].bound;
                    skippable += 1;
                }
                if skippable == n_terms {
                    break;
                }
            }
        }

        let mut ranked: Vec<(u8, DataPointer)> =
            heap.into_iter().map(|(Reverse(s), p)| (s, p)).collect();
        ranked.sort_unstable_by_key(|&(s, p)| (Reverse(s), p));
        ranked
    }
}

/// Posting lists that can hold a match for `term`: its primary and, when
/// distinct, secondary keycode.
fn term_lists<'a>(index: &'a PhoneticIndex, term: &QueryTerm) -> Vec<&'a [Posting]> {
    let primary = keycode(&term.codes.primary);
    let secondary = keycode(&term.codes.secondary);
    let mut lists = vec![index.lookup_key(primary)];
    if secondary != primary {
        lists.push(index.lookup_key(secondary));
    }
    lists
}

/// Pointer-ordered cursor over the posting lists of one query term.
struct TermStream<'a> {
    lists: Vec<(&'a [Posting], usize)>,
    size: usize,
    bound: u32,
}

impl<'a> TermStream<'a> {
    fn new(lists: Vec<&'a [Posting]>, bound: u32) -> Self {
        let size = lists.iter().map(|l| l.len()).sum();
        Self {
            lists: lists.into_iter().map(|l| (l, 0)).collect(),
            size,
            bound,
        }
    }

    fn head(&self) -> Option<DataPointer> {
        self.lists
            .iter()
            .filter_map(|(l, at)| l.get(*at).map(|p| p.pointer))
            .min()
    }

    fn advance_past(&mut self, pointer: DataPointer) {
        for (list, at) in &mut self.lists {
            while *at < list.len() && list[*at].pointer <= pointer {
                *at += 1;
            }
        }
    }
}
