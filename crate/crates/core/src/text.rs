//! Word normalization shared by every loader and lookup.

use unicode_normalization::UnicodeNormalization;

/// Canonical (NFC) form of a word. Every word entering the crate passes
/// through here so that lookups agree across files.
pub fn normalize(word: &str) -> String {
    word.nfc().collect()
}

/// Unicode default case folding of the NFC form.
pub fn fold(word: &str) -> String {
    let folded = caseless::default_case_fold_str(&normalize(word));
    normalize(&folded)
}

/// Splits a byte stream into lines, reporting invalid UTF-8 with its line
/// number. Trailing `\r` is removed.
pub(crate) fn lines<R: std::io::BufRead>(
    reader: R,
) -> impl Iterator<Item = crate::Result<(usize, String)>> {
    reader.split(b'\n').enumerate().map(|(i, chunk)| {
        let line_no = i + 1;
        let mut bytes = chunk?;
        if bytes.last() == Some(&b'\r') {
            bytes.pop();
        }
        String::from_utf8(bytes)
            .map(|s| (line_no, s))
            .map_err(|e| crate::Error::parse(line_no, format!("invalid UTF-8: {e}")))
    })
}
