//! Top-1 accuracy of re-ranked output against gold words.
//!
//! Three accuracies are reported:
//!
//! * **full**: over every record,
//! * **dict**: over records whose gold word is in a reference lexicon,
//! * **list**: over records whose gold word appears in the k-best input.
//!
//! Short words and words with punctuation are evaluated like any other.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use crate::rerank::{RankedOutput, Scheme};
use crate::text::{fold, normalize};
use crate::{Error, Result};

/// How gold and predicted words are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    /// Unicode case folding on both sides.
    #[default]
    CaseInsensitive,
    /// NFC-normalized exact match.
    CaseSensitive,
}

impl MatchMode {
    pub fn key(self, word: &str) -> String {
        match self {
            MatchMode::CaseInsensitive => fold(word),
            MatchMode::CaseSensitive => normalize(word),
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            MatchMode::CaseInsensitive => "case-insensitive",
            MatchMode::CaseSensitive => "case-sensitive",
        }
    }
}

/// Reference lexicon used for the dict metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    entries: HashSet<String>,
    folded: HashSet<String>,
}

impl Dictionary {
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries: HashSet<String> = words.into_iter().map(|w| normalize(w.as_ref())).collect();
        if entries.is_empty() {
            return Err(Error::Model("dictionary is empty".into()));
        }
        let folded = entries.iter().map(|w| fold(w)).collect();
        Ok(Dictionary { entries, folded })
    }

    pub fn contains(&self, word: &str, mode: MatchMode) -> bool {
        match mode {
            MatchMode::CaseInsensitive => self.folded.contains(&fold(word)),
            MatchMode::CaseSensitive => self.entries.contains(&normalize(word)),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Counts and accuracies for one scheme at one k.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub n_total: usize,
    pub n_dict: usize,
    pub n_list: usize,
    pub correct_full: usize,
    pub correct_dict: usize,
    pub correct_list: usize,
    /// Records excluded because no gold word was available.
    pub missing_gold: usize,
    /// Records excluded because they ranked more than k candidates.
    pub oversized: usize,
}

impl EvalReport {
    /// Percentage, or `None` for an empty subset.
    pub fn acc_full(&self) -> Option<f64> {
        pct(self.correct_full, self.n_total)
    }

    pub fn acc_dict(&self) -> Option<f64> {
        pct(self.correct_dict, self.n_dict)
    }

    pub fn acc_list(&self) -> Option<f64> {
        pct(self.correct_list, self.n_list)
    }
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

/// Scores ranked outputs against gold words.
///
/// `k` is the hypothesis-list size used upstream; outputs with more
/// candidates are excluded and counted in `oversized`. Records with an empty
/// ranking count as wrong in full (and dict) and are absent from list.
pub fn evaluate(
    outputs: &[RankedOutput],
    gold: &HashMap<String, String>,
    dictionary: Option<&Dictionary>,
    k: usize,
    mode: MatchMode,
) -> Result<EvalReport> {
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    let mut r = EvalReport::default();
    for out in outputs {
        let Some(gold_word) = gold.get(&out.image_id) else {
            r.missing_gold += 1;
            continue;
        };
        if out.ranked.len() > k {
            r.oversized += 1;
            continue;
        }
        let gold_key = mode.key(gold_word);
        let correct = out.top().is_some_and(|e| mode.key(&e.word) == gold_key);
        let in_list = out.ranked.iter().any(|e| mode.key(&e.word) == gold_key);
        let in_dict = dictionary.is_some_and(|d| d.contains(gold_word, mode));

        r.n_total += 1;
        r.correct_full += usize::from(correct);
        if in_dict {
            r.n_dict += 1;
            r.correct_dict += usize::from(correct);
        }
        if in_list {
            r.n_list += 1;
            r.correct_list += usize::from(correct);
        }
    }
    debug_assert!(r.correct_full <= r.n_list);
    Ok(r)
}

/// Row label used in reports: the baseline is spelled out, other schemes
/// use their short names.
pub fn scheme_label(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::Baseline => "Baseline",
        other => other.name(),
    }
}

/// Results for several schemes at one or more values of k.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    pub mode: MatchMode,
    rows: Vec<(String, BTreeMap<usize, EvalReport>)>,
}

impl ResultsTable {
    pub fn new(mode: MatchMode) -> Self {
        ResultsTable {
            mode,
            rows: Vec::new(),
        }
    }

    /// Adds a cell. Rows keep the order in which labels first appear.
    pub fn insert(&mut self, label: impl Into<String>, k: usize, report: EvalReport) {
        let label = label.into();
        match self.rows.iter_mut().find(|(l, _)| *l == label) {
            Some((_, cells)) => {
                cells.insert(k, report);
            }
            None => self.rows.push((label, BTreeMap::from([(k, report)]))),
        }
    }

    pub fn get(&self, label: &str, k: usize) -> Option<&EvalReport> {
        self.rows
            .iter()
            .find(|(l, _)| l == label)
            .and_then(|(_, cells)| cells.get(&k))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|(l, _)| l.as_str())
    }

    pub fn ks(&self) -> Vec<usize> {
        let ks: std::collections::BTreeSet<usize> = self
            .rows
            .iter()
            .flat_map(|(_, c)| c.keys().copied())
            .collect();
        ks.into_iter().collect()
    }
}

const NA: &str = "\u{2014}";

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| format!("{x:.1}"))
}

/// Fixed-width text table: one row per scheme, full/dict/list columns for
/// each k, percentages to one decimal.
pub fn format_report(table: &ResultsTable) -> String {
    let ks = table.ks();
    let label_w = table
        .labels()
        .map(|l| l.chars().count())
        .max()
        .unwrap_or(0)
        .max(8);
    let group_w = 20;
    let mut s = String::new();
    let _ = writeln!(s, "# matching: {}", table.mode.describe());

    let _ = write!(s, "{:<label_w$}", "Model");
    for k in &ks {
        let _ = write!(s, " | {:<group_w$}", format!("k={k}"));
    }
    s.push('\n');
    let _ = write!(s, "{:<label_w$}", "");
    for _ in &ks {
        let _ = write!(s, " | {:>6}{:>7}{:>7}", "full", "dict", "list");
    }
    s.push('\n');
    s.push_str(&"-".repeat(label_w));
    for _ in &ks {
        s.push_str("-+-");
        s.push_str(&"-".repeat(group_w));
    }
    s.push('\n');
    for (label, cells) in &table.rows {
        let _ = write!(s, "{label:<label_w$}");
        for k in &ks {
            let r = cells.get(k);
            let _ = write!(
                s,
                " | {:>6}{:>7}{:>7}",
                cell(r.and_then(EvalReport::acc_full)),
                cell(r.and_then(EvalReport::acc_dict)),
                cell(r.and_then(EvalReport::acc_list)),
            );
        }
        s.push('\n');
    }
    if let Some((_, cells)) = table.rows.first() {
        for (k, r) in cells {
            let _ = writeln!(
                s,
                "# k={k}: n_total={} n_dict={} n_list={} missing_gold={} oversized={}",
                r.n_total, r.n_dict, r.n_list, r.missing_gold, r.oversized
            );
        }
    }
    s
}

/// Machine-readable `scheme<TAB>metric<TAB>value` lines, metric spelled
/// `k=<k>/<name>`.
pub fn format_tsv(table: &ResultsTable) -> String {
    let mut s = String::new();
    let value = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| x.to_string());
    for (label, cells) in &table.rows {
        for (k, r) in cells {
            let rows = [
                ("full", value(r.acc_full())),
                ("dict", value(r.acc_dict())),
                ("list", value(r.acc_list())),
                ("n_total", r.n_total.to_string()),
                ("n_dict", r.n_dict.to_string()),
                ("n_list", r.n_list.to_string()),
            ];
            for (metric, v) in rows {
                let _ = writeln!(s, "{label}\tk={k}/{metric}\t{v}");
            }
        }
    }
    s
}
