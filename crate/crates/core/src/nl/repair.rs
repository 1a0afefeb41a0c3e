//! Typo repair for entity names in user questions.
//!
//! Candidate spans are capitalized n-grams (n <= 4) plus season-shaped
//! tokens. A span is replaced by the dictionary entry with minimal
//! case-insensitive edit distance when that distance is within
//! max(1, ceil(len/8)); ties go to the lexicographically first canonical
//! name and are reported as ambiguous.

use serde::Serialize;
use unicode_normalization::UnicodeNormalization;

use crate::builder::EntityDictionary;
use crate::ingest::canonicalize_season;
use crate::util::levenshtein;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RepairKind {
    /// Span replaced by a dictionary name.
    Applied,
    /// Replaced, but more than one name tied at the minimal distance.
    AppliedAmbiguous,
    /// Season spelling canonicalized.
    SeasonCanonicalized,
    /// Looks like an entity but nothing is within the distance threshold.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Repair {
    pub kind: RepairKind,
    pub original: String,
    pub replacement: String,
    pub start: usize,
    /// Case-insensitive edit distance of the applied replacement; absent
    /// for unresolved spans.
    pub distance: Option<usize>,
}

/// Words that look capitalized only because of sentence position or domain
/// phrasing; never treated as 1-gram entity candidates.
const STOPWORDS: &[&str] = &[
    "a", "about", "advantage", "against", "all", "an", "and", "are", "assist", "assisted", "at",
    "away", "between", "by", "calculate", "card", "cards", "coach", "coaches", "corner",
    "corners", "database", "dataset", "dates", "did", "do", "does", "event", "events", "first",
    "for", "foul", "fouls", "game", "games", "get", "give", "goal", "goals", "got", "half",
    "happened", "has", "have", "home", "how", "in", "information", "is", "league", "leagues",
    "list", "make", "many", "me", "more", "much", "name", "names", "of", "on", "or", "play",
    "played", "player", "players", "plays", "receive", "received", "red", "referee", "score",
    "scored", "season", "second", "stadium", "team", "teams", "tell", "the", "to", "total",
    "venue", "was", "were", "what", "when", "which", "who", "why", "win", "wins", "with", "won",
    "yellow", "you", "your",
];

fn is_stopword(word: &str) -> bool {
    STOPWORDS.binary_search(&word.to_lowercase().as_str()).is_ok()
}

fn threshold(span_len: usize) -> usize {
    std::cmp::max(1, span_len.div_ceil(8))
}

struct Word {
    start: usize,
    end: usize,
    capitalized: bool,
}

fn split_words(text: &str) -> Vec<Word> {
    let mut words = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        // '.' kept inside words so abbreviated names ("Atkinson M.") stay whole
        let is_word = c.is_alphanumeric() || c == '.' || c == '\'';
        match (start, is_word) {
            (None, true) => start = Some(i),
            (Some(s), false) => {
                push_word(text, s, i, &mut words);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        push_word(text, s, text.len(), &mut words);
    }
    words
}

fn push_word(text: &str, start: usize, end: usize, words: &mut Vec<Word>) {
    // trim trailing sentence punctuation
    let mut end = end;
    while end > start && text[start..end].ends_with('.') && !text[start..end].contains(char::is_numeric)
    {
        // keep single trailing dot only for initials like "M."
        let inner = &text[start..end - 1];
        if inner.chars().count() == 1 && inner.chars().all(char::is_uppercase) {
            break;
        }
        end -= 1;
    }
    if end == start {
        return;
    }
    let capitalized = text[start..end]
        .chars()
        .next()
        .is_some_and(char::is_uppercase);
    words.push(Word {
        start,
        end,
        capitalized,
    });
}

/// NFC-normalizes a question without touching its spacing.
pub fn normalize_question(q: &str) -> String {
    q.nfc().collect()
}

fn digit_dash_runs(text: &str) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        let in_run = c.is_ascii_digit() || (c == '-' && start.is_some());
        match (start, in_run) {
            (None, true) => start = Some(i),
            (Some(s), false) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, text.len()));
    }
    // trim trailing dashes ("2014-15-" from "2014-15-season" never happens,
    // but a sentence like "2014-15." leaves the run clean already)
    runs.into_iter()
        .map(|(s, mut e)| {
            while e > s && text[s..e].ends_with('-') {
                e -= 1;
            }
            (s, e)
        })
        .collect()
}

/// Replaces misspelled entity spans with canonical dictionary names and
/// canonicalizes season spellings. Idempotent: repairing a repaired
/// question yields zero further repairs.
pub fn repair_entities(question: &str, dict: &EntityDictionary) -> (String, Vec<Repair>) {
    let question = normalize_question(question);
    let words = split_words(&question);
    let names: Vec<&str> = dict.all_names().map(|(_, n)| n).collect();

    let mut repairs: Vec<Repair> = Vec::new();
    let mut replacements: Vec<(usize, usize, String)> = Vec::new();
    let mut claimed: Vec<(usize, usize)> = Vec::new();

    let overlaps = |s: usize, e: usize, claimed: &[(usize, usize)]| {
        claimed.iter().any(|&(cs, ce)| s < ce && cs < e)
    };

    // longest spans first so "Bayern Munche" wins over "Bayern"
    for n in (1..=4usize).rev() {
        for w in 0..words.len().saturating_sub(n - 1) {
            let group = &words[w..w + n];
            if !group.iter().all(|g| g.capitalized) {
                continue;
            }
            // entity spans never start or end with a stopword; this keeps
            // "Is Jordan Henderson" from shadowing the name inside it
            let first = &question[group[0].start..group[0].end];
            let last = &question[group[n - 1].start..group[n - 1].end];
            if is_stopword(first) || is_stopword(last) {
                continue;
            }
            let (start, end) = (group[0].start, group[n - 1].end);
            if overlaps(start, end, &claimed) {
                continue;
            }
            let span = &question[start..end];
            let span_lower = span.to_lowercase();
            let limit = threshold(span.chars().count());
            let mut best_d = usize::MAX;
            let mut ties: Vec<&str> = Vec::new();
            for name in &names {
                let d = levenshtein(&span_lower, &name.to_lowercase());
                if d < best_d {
                    best_d = d;
                    ties.clear();
                    ties.push(name);
                } else if d == best_d {
                    ties.push(name);
                }
            }
            match () {
                () if best_d <= limit => {
                    ties.sort();
                    let replacement = ties[0].to_string();
                    let ambiguous = ties.len() > 1;
                    claimed.push((start, end));
                    if span == replacement {
                        continue; // exact canonical name, nothing to repair
                    }
                    repairs.push(Repair {
                        kind: if ambiguous {
                            RepairKind::AppliedAmbiguous
                        } else {
                            RepairKind::Applied
                        },
                        original: span.to_string(),
                        replacement: replacement.clone(),
                        start,
                        distance: Some(best_d),
                    });
                    replacements.push((start, end, replacement));
                }
                () if n == 1 => {
                    // maximal unmatched capitalized run -> unresolved flag,
                    // reported once on the widest span
                    let mut run_end = w;
                    while run_end + 1 < words.len() && words[run_end + 1].capitalized {
                        run_end += 1;
                    }
                    let (rs, re) = (words[w].start, words[run_end].end);
                    if overlaps(rs, re, &claimed) {
                        continue;
                    }
                    let run_text = &question[rs..re];
                    let all_stop = (w..=run_end)
                        .all(|i| is_stopword(&question[words[i].start..words[i].end]));
                    if all_stop {
                        continue;
                    }
                    claimed.push((rs, re));
                    repairs.push(Repair {
                        kind: RepairKind::Unresolved,
                        original: run_text.to_string(),
                        replacement: run_text.to_string(),
                        start: rs,
                        distance: None,
                    });
                }
                _ => {}
            }
        }
    }

    // season-shaped tokens: digit/dash runs like "2014-15" or "15-2016"
    for (start, end) in digit_dash_runs(&question) {
        let token = &question[start..end];
        if !token.contains('-') {
            continue;
        }
        if let Ok(canonical) = canonicalize_season(token) {
            if canonical != token && !overlaps(start, end, &claimed) {
                claimed.push((start, end));
                repairs.push(Repair {
                    kind: RepairKind::SeasonCanonicalized,
                    original: token.to_string(),
                    replacement: canonical.clone(),
                    start,
                    distance: Some(levenshtein(token, &canonical)),
                });
                replacements.push((start, end, canonical));
            }
        }
    }

    replacements.sort_by_key(|&(s, _, _)| s);
    let mut out = String::new();
    let mut cursor = 0;
    for (s, e, replacement) in replacements {
        out.push_str(&question[cursor..s]);
        out.push_str(&replacement);
        cursor = e;
    }
    out.push_str(&question[cursor..]);

    repairs.sort_by_key(|r| r.start);
    (out, repairs)
}
