use std::sync::LazyLock;

use regex::Regex;

static HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:key\s+)?(inclusion|exclusion)\s+criteria\b\s*:?").unwrap());

static BULLET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:[-*•·▪◦‣]+\s*|\d{1,3}[.)](?:\s+|$))").unwrap());

/// Splits an eligibility text block into inclusion and exclusion sentences.
///
/// Text up to the first exclusion header (or all of it when there are no
/// headers) is inclusion. Sentences break on newlines, semicolons and bullet
/// markers; empty pieces are dropped.
pub fn split_sentences(textblock: &str) -> (Vec<String>, Vec<String>) {
    let mut inclusion = Vec::new();
    let mut exclusion = Vec::new();

    let mut exclusive = false;
    let mut cursor = 0;
    for caps in HEADER.captures_iter(textblock) {
        let whole = caps.get(0).unwrap();
        let target = if exclusive { &mut exclusion } else { &mut inclusion };
        push_pieces(&textblock[cursor..whole.start()], target);
        exclusive = caps[1].eq_ignore_ascii_case("exclusion");
        cursor = whole.end();
    }
    let target = if exclusive { &mut exclusion } else { &mut inclusion };
    push_pieces(&textblock[cursor..], target);

    (inclusion, exclusion)
}

fn push_pieces(segment: &str, out: &mut Vec<String>) {
    for line in segment.split(['\n', '\r', ';', '•']) {
        let mut piece = line.trim();
        // "- 1. foo" carries two markers
        while let Some(m) = BULLET.find(piece) {
            if m.end() == 0 {
                break;
            }
            piece = piece[m.end()..].trim_start();
        }
        let piece = piece.trim();
        if !piece.is_empty() {
            out.push(piece.split_whitespace().collect::<Vec<_>>().join(" "));
        }
    }
}
