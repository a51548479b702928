//! Readers and writers for every file the toolkit exchanges.
//!
//! | artifact        | layout                                                      |
//! |-----------------|-------------------------------------------------------------|
//! | hypotheses      | JSON object per line: `image_id`, `gold`, `hypotheses`      |
//! | contexts        | JSON object per line: `image_id`, `objects`                 |
//! | ranked output   | JSON object per line: `image_id`, `ranked`, `fallback`      |
//! | unigram counts  | `word<TAB>count`                                            |
//! | training pairs  | `word<TAB>object`                                           |
//! | co-occurrence   | `VISRANK-TDP 1` header, then `PAIR` / `CTX` records         |
//! | embeddings      | `V d` header, then `word v1 .. vd` rows                     |
//! | dictionary      | one word per line                                           |
//!
//! JSON-lines and TSV readers skip blank lines and `#` comment lines (for
//! TSV, a comment line must not contain a tab). Line numbers in errors are
//! 1-based. Every word is NFC-normalized on the way in.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::context::VisualContext;
use crate::embedding::EmbeddingSpace;
use crate::eval::Dictionary;
use crate::hypothesis::HypothesisList;
use crate::rerank::RankedOutput;
use crate::semantic::{CooccurrenceTable, DEFAULT_TDP_EPSILON};
use crate::text::{lines, normalize};
use crate::{Error, Result};

pub const TDP_HEADER: &str = "VISRANK-TDP 1";

/// A loaded value together with the number of recoverable irregularities
/// the loader fixed up (re-sorted lists, replaced or duplicate keys).
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub value: T,
    pub warnings: usize,
}

fn is_json_skip(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn is_tsv_skip(line: &str) -> bool {
    line.trim().is_empty() || (line.starts_with('#') && !line.contains('\t'))
}

fn non_empty_word(raw: &str, line: usize, what: &str) -> Result<String> {
    let w = normalize(raw);
    if w.is_empty() {
        Err(Error::invalid(line, format!("empty {what}")))
    } else {
        Ok(w)
    }
}

// ---------------------------------------------------------------- hypotheses

/// Parses one hypothesis record. The flag is true when the list had to be
/// re-sorted.
pub fn parse_hypothesis_line(line_no: usize, line: &str) -> Result<(HypothesisList, bool)> {
    let mut list: HypothesisList =
        serde_json::from_str(line).map_err(|e| Error::parse(line_no, e.to_string()))?;
    if list.image_id.is_empty() {
        return Err(Error::invalid(line_no, "empty image_id"));
    }
    if list.hypotheses.is_empty() {
        return Err(Error::invalid(line_no, "hypothesis list is empty"));
    }
    list.gold = match list.gold.take() {
        Some(g) => Some(non_empty_word(&g, line_no, "gold word")?),
        None => None,
    };
    for h in &mut list.hypotheses {
        h.word = non_empty_word(&h.word, line_no, "hypothesis word")?;
        if !(h.score > 0.0 && h.score <= 1.0) {
            return Err(Error::invalid(
                line_no,
                format!("score {} for {:?} outside (0, 1]", h.score, h.word),
            ));
        }
    }
    let resorted = !list.is_sorted();
    if resorted {
        list.sort();
    }
    Ok((list, resorted))
}

/// Reads every hypothesis record, failing on the first bad line. `warnings`
/// counts lists that were re-sorted.
pub fn load_hypotheses<R: BufRead>(reader: R) -> Result<Loaded<Vec<HypothesisList>>> {
    let mut out = Vec::new();
    let mut resorted = 0;
    for item in lines(reader) {
        let (no, line) = item?;
        if is_json_skip(&line) {
            continue;
        }
        let (list, fixed) = parse_hypothesis_line(no, &line)?;
        resorted += usize::from(fixed);
        out.push(list);
    }
    Ok(Loaded {
        value: out,
        warnings: resorted,
    })
}

/// Lazily reads hypothesis records, yielding an error entry per bad line
/// instead of stopping.
pub fn hypothesis_records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<HypothesisList>> {
    lines(reader).filter_map(|item| match item {
        Err(e) => Some(Err(e)),
        Ok((_, line)) if is_json_skip(&line) => None,
        Ok((no, line)) => Some(parse_hypothesis_line(no, &line).map(|(l, _)| l)),
    })
}

pub fn save_hypotheses<W: Write>(lists: &[HypothesisList], mut sink: W) -> Result<()> {
    for list in lists {
        serde_json::to_writer(&mut sink, list).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

// ------------------------------------------------------------------ contexts

/// Reads classifier output keyed by image. A repeated `image_id` replaces
/// the earlier record; `warnings` counts replacements.
pub fn load_contexts<R: BufRead>(reader: R) -> Result<Loaded<HashMap<String, VisualContext>>> {
    let mut map = HashMap::new();
    let mut replaced = 0;
    for item in lines(reader) {
        let (no, line) = item?;
        if is_json_skip(&line) {
            continue;
        }
        let mut ctx: VisualContext =
            serde_json::from_str(&line).map_err(|e| Error::parse(no, e.to_string()))?;
        if ctx.image_id.is_empty() {
            return Err(Error::invalid(no, "empty image_id"));
        }
        let mut seen = HashSet::new();
        for obj in &mut ctx.objects {
            obj.label = non_empty_word(&obj.label, no, "object label")?;
            if !(0.0..=1.0).contains(&obj.confidence) {
                return Err(Error::invalid(
                    no,
                    format!(
                        "confidence {} for {:?} outside [0, 1]",
                        obj.confidence, obj.label
                    ),
                ));
            }
            if !seen.insert(obj.label.clone()) {
                return Err(Error::invalid(
                    no,
                    format!("duplicate object label {:?}", obj.label),
                ));
            }
        }
        ctx.sort();
        if map.insert(ctx.image_id.clone(), ctx).is_some() {
            replaced += 1;
        }
    }
    Ok(Loaded {
        value: map,
        warnings: replaced,
    })
}

pub fn save_contexts<'a, W, I>(contexts: I, mut sink: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a VisualContext>,
{
    for ctx in contexts {
        serde_json::to_writer(&mut sink, ctx).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

// ---------------------------------------------------------------- embeddings

/// Reads the `V d` text embedding layout. A repeated word keeps its first
/// vector; `warnings` counts the dropped duplicates.
pub fn load_embeddings<R: BufRead>(reader: R) -> Result<Loaded<EmbeddingSpace>> {
    let mut it = lines(reader);
    let (vocab, dim) = match it.next() {
        None => return Err(Error::parse(1, "missing `V d` header")),
        Some(item) => {
            let (no, header) = item?;
            let fields: Vec<&str> = header.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                [v, d] => v.parse::<usize>().ok().zip(d.parse::<usize>().ok()),
                _ => None,
            };
            parsed
                .ok_or_else(|| Error::parse(no, format!("bad header {header:?}, expected `V d`")))?
        }
    };
    if dim == 0 {
        return Err(Error::parse(1, "embedding dimension must be positive"));
    }
    let mut space = EmbeddingSpace::new(dim)?;
    let mut duplicates = 0;
    let mut rows = 0;
    let mut buf = Vec::with_capacity(dim);
    for item in it {
        let (no, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        if rows > vocab {
            return Err(Error::parse(
                no,
                format!("more rows than the {vocab} declared"),
            ));
        }
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let word = fields
            .next()
            .ok_or_else(|| Error::parse(no, "missing word"))?;
        buf.clear();
        for f in fields {
            let x: f64 = f
                .parse()
                .map_err(|_| Error::parse(no, format!("non-numeric component {f:?}")))?;
            if !x.is_finite() {
                return Err(Error::parse(no, format!("non-finite component {f:?}")));
            }
            buf.push(x);
        }
        if buf.len() != dim {
            return Err(Error::parse(
                no,
                format!("row {rows} has {} components, expected {dim}", buf.len()),
            ));
        }
        if !space.insert(normalize(word), &buf)? {
            duplicates += 1;
        }
    }
    if rows != vocab {
        return Err(Error::parse(
            rows + 1,
            format!("expected {vocab} rows, found {rows}"),
        ));
    }
    if vocab > 0 {
        space.validate()?;
    }
    let zero = space.zero_norm_words();
    if !zero.is_empty() {
        log::warn!(
            "{} embedding(s) with zero norm, e.g. {:?}",
            zero.len(),
            zero[0]
        );
    }
    Ok(Loaded {
        value: space,
        warnings: duplicates,
    })
}

pub fn save_embeddings<W: Write>(space: &EmbeddingSpace, mut sink: W) -> Result<()> {
    writeln!(sink, "{} {}", space.len(), space.dimension())?;
    let mut line = String::new();
    for (word, vec) in space.iter() {
        use std::fmt::Write as _;
        line.clear();
        line.push_str(word);
        for x in vec {
            write!(line, " {x}").expect("writing to a String");
        }
        line.push('\n');
        sink.write_all(line.as_bytes())?;
    }
    Ok(())
}

// ------------------------------------------------------------ unigram counts

/// Reads `word<TAB>count` lines, summing repeated words.
pub fn load_unigram_counts<R: BufRead>(reader: R) -> Result<BTreeMap<String, u64>> {
    let mut counts = BTreeMap::new();
    for item in lines(reader) {
        let (no, line) = item?;
        if is_tsv_skip(&line) {
            continue;
        }
        let (word, count) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(no, "expected `word<TAB>count`"))?;
        let count: u64 = count.trim().parse().map_err(|_| {
            Error::parse(no, format!("count {count:?} is not a nonnegative integer"))
        })?;
        let word = non_empty_word(word, no, "word")?;
        let slot: &mut u64 = counts.entry(word).or_default();
        *slot = slot
            .checked_add(count)
            .ok_or_else(|| Error::invalid(no, "count overflows u64"))?;
    }
    Ok(counts)
}

/// Writes counts in word order, preceded by `# ` comment lines.
pub fn save_unigram_counts<W: Write>(
    counts: &BTreeMap<String, u64>,
    comments: &[String],
    mut sink: W,
) -> Result<()> {
    write_comments(&mut sink, comments)?;
    for (w, n) in counts {
        writeln!(sink, "{w}\t{n}")?;
    }
    Ok(())
}

// ------------------------------------------------------------ training pairs

/// Reads `word<TAB>object` training pairs in file order.
pub fn load_training_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for item in lines(reader) {
        let (no, line) = item?;
        if is_tsv_skip(&line) {
            continue;
        }
        let (word, object) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(no, "expected `word<TAB>object`"))?;
        if object.contains('\t') {
            return Err(Error::parse(no, "expected exactly two fields"));
        }
        pairs.push((
            non_empty_word(word, no, "word")?,
            non_empty_word(object, no, "object")?,
        ));
    }
    Ok(pairs)
}

pub fn save_training_pairs<W: Write>(pairs: &[(String, String)], mut sink: W) -> Result<()> {
    for (w, c) in pairs {
        writeln!(sink, "{w}\t{c}")?;
    }
    Ok(())
}

// ------------------------------------------------------------- co-occurrence

pub fn save_cooccurrence<W: Write>(table: &CooccurrenceTable, sink: W) -> Result<()> {
    save_cooccurrence_annotated(table, &[], sink)
}

/// Like [`save_cooccurrence`], with `# ` comment lines after the header.
///
/// A non-default smoothing epsilon is stored as an `EPS` record.
pub fn save_cooccurrence_annotated<W: Write>(
    table: &CooccurrenceTable,
    comments: &[String],
    mut sink: W,
) -> Result<()> {
    writeln!(sink, "{TDP_HEADER}")?;
    write_comments(&mut sink, comments)?;
    if table.smoothing_epsilon().to_bits() != DEFAULT_TDP_EPSILON.to_bits() {
        writeln!(sink, "EPS\t{}", table.smoothing_epsilon())?;
    }
    for ((w, c), n) in table.pair_counts() {
        writeln!(sink, "PAIR\t{w}\t{c}\t{n}")?;
    }
    for (c, n) in table.ctx_counts() {
        writeln!(sink, "CTX\t{c}\t{n}")?;
    }
    Ok(())
}

pub fn load_cooccurrence<R: BufRead>(reader: R) -> Result<CooccurrenceTable> {
    let mut it = lines(reader);
    match it.next() {
        Some(item) => {
            let (no, header) = item?;
            if header.trim_end() != TDP_HEADER {
                return Err(Error::parse(no, format!("expected header {TDP_HEADER:?}")));
            }
        }
        None => return Err(Error::parse(1, format!("expected header {TDP_HEADER:?}"))),
    }
    let mut pairs = BTreeMap::new();
    let mut ctx = BTreeMap::new();
    let mut epsilon = DEFAULT_TDP_EPSILON;
    let count = |no: usize, s: &str| -> Result<u64> {
        s.parse()
            .map_err(|_| Error::parse(no, format!("count {s:?} is not a nonnegative integer")))
    };
    for item in it {
        let (no, line) = item?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            ["PAIR", w, c, n] => {
                let key = (
                    non_empty_word(w, no, "word")?,
                    non_empty_word(c, no, "object")?,
                );
                if pairs.insert(key, count(no, n)?).is_some() {
                    return Err(Error::invalid(no, format!("duplicate PAIR {w:?} {c:?}")));
                }
            }
            ["CTX", c, n] => {
                if ctx
                    .insert(non_empty_word(c, no, "object")?, count(no, n)?)
                    .is_some()
                {
                    return Err(Error::invalid(no, format!("duplicate CTX {c:?}")));
                }
            }
            ["EPS", e] => {
                epsilon = e
                    .parse()
                    .map_err(|_| Error::parse(no, format!("epsilon {e:?} is not a number")))?;
            }
            [tag, ..] => {
                return Err(Error::parse(
                    no,
                    format!("unknown or malformed record {tag:?}"),
                ));
            }
            [] => unreachable!("split yields at least one field"),
        }
    }
    CooccurrenceTable::from_counts(pairs, ctx, epsilon)
}

// ---------------------------------------------------------------- dictionary

/// One word per line; blank lines ignored.
pub fn load_dictionary<R: BufRead>(reader: R) -> Result<Dictionary> {
    let mut words = Vec::new();
    for item in lines(reader) {
        let (_, line) = item?;
        let w = line.trim();
        if !w.is_empty() {
            words.push(w.to_string());
        }
    }
    Dictionary::new(words)
}

// ------------------------------------------------------------ ranked output

pub fn save_ranked<'a, W, I>(outputs: I, comments: &[String], mut sink: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a RankedOutput>,
{
    write_comments(&mut sink, comments)?;
    for out in outputs {
        serde_json::to_writer(&mut sink, out).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads ranked output lines. Comment lines are returned separately (with
/// the leading `# ` removed) so callers can recover provenance.
pub fn load_ranked<R: BufRead>(reader: R) -> Result<(Vec<RankedOutput>, Vec<String>)> {
    let mut outputs = Vec::new();
    let mut comments = Vec::new();
    for item in lines(reader) {
        let (no, line) = item?;
        let t = line.trim();
        if let Some(c) = t.strip_prefix('#') {
            comments.push(c.trim_start().to_string());
            continue;
        }
        if t.is_empty() {
            continue;
        }
        let out: RankedOutput =
            serde_json::from_str(t).map_err(|e| Error::parse(no, e.to_string()))?;
        outputs.push(out);
    }
    Ok((outputs, comments))
}

fn write_comments<W: Write>(sink: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        // keep comments single-line and tab-free so TSV readers skip them
        let c = c.replace(['\n', '\r'], " ").replace('\t', " ");
        writeln!(sink, "# {c}")?;
    }
    Ok(())
}
