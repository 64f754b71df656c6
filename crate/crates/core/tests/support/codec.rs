//! Encoder output against the commons-codec port in `rphonetic`.
//!
//! The reference departs from the original Double Metaphone rules in a few
//! places. Those words are listed in `ADJUDICATED` with the codes the
//! original rules give; every other word must match the reference exactly.

use ndc_search::phonetic::{normalize, DoubleMetaphone};

pub const CORPUS: &str = include_str!("../data/surnames_and_places.txt");

/// (word, primary, secondary, reason)
pub const ADJUDICATED: &[(&str, &str, &str, &str)] = &[
    // "IER" counts as a French ending only at the end of the word.
    ("FILANGIERI", "FLNJ", "FLNK", "G before IER not final"),
    // CH before T or S is hard wherever it occurs; the reference requires
    // index > 1.
    ("OCHTEN", "AKTN", "AKTN", "CH before T"),
    // Final R after IE with nothing four back: the original treats the
    // out-of-range ME/MA check as no match; the reference requires index > 3.
    ("LIER", "L", "LR", "final R after IE"),
];

pub fn corpus() -> Vec<&'static str> {
    CORPUS.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

/// Reference codes with its known artifacts removed: for a final J the
/// reference writes a literal space into the alternate code, which the
/// original rules never emit.
pub fn reference(dm: &rphonetic::DoubleMetaphone, word: &str) -> (String, String) {
    let r = dm.double_metaphone(word);
    (r.primary().replace(' ', ""), r.alternate().replace(' ', ""))
}

/// Checks every corpus word; returns how many were checked.
pub fn agrees_with_reference() -> usize {
    let ours = DoubleMetaphone::default();
    let dm = rphonetic::DoubleMetaphone::default();
    let words = corpus();
    assert!(words.len() >= 1000, "corpus has {} words", words.len());

    let mut mismatches = Vec::new();
    for w in &words {
        let word = normalize(w).unwrap();
        let got = ours.encode(&word);
        let got = (got.primary.as_str(), got.secondary.as_str());
        let want = match ADJUDICATED.iter().find(|a| a.0 == word.as_str()) {
            Some(&(_, p, s, _)) => (p.to_string(), s.to_string()),
            None => reference(&dm, word.as_str()),
        };
        if got != (want.0.as_str(), want.1.as_str()) {
            mismatches.push(format!("{w}: ours {got:?}, expected {want:?}"));
        }
    }
    assert!(
        mismatches.is_empty(),
        "{} of {} words differ:\n{}",
        mismatches.len(),
        words.len(),
        mismatches.join("\n")
    );
    words.len()
}
