use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Attribution, Unit};
use crate::error::{Error, Result};

fn fmt_value(v: f64) -> String {
    // Avoid printing "-0.000".
    let v = if v.abs() < 5e-4 { 0.0 } else { v };
    format!("{v:+.3}")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Items sorted by descending value, one per line.
pub fn render_text(attr: &Attribution) -> String {
    let mut out = String::new();
    let unit = match attr.unit {
        Unit::Sentence => "sentence",
        Unit::Word => "word",
    };
    let _ = writeln!(out, "{} ({unit} attribution, years)", attr.nct_id);
    let _ = writeln!(out, "base {:.3}  full {:.3}", attr.base_value, attr.full_value);
    let mut order: Vec<usize> = (0..attr.items.len()).collect();
    order.sort_by(|&a, &b| attr.items[b].value.total_cmp(&attr.items[a].value).then(a.cmp(&b)));
    for i in order {
        let item = &attr.items[i];
        let se = item.std_error.map(|s| format!(" ±{s:.3}")).unwrap_or_default();
        let seg = match item.segment {
            crate::embed::Segment::Inclusion => "incl",
            crate::embed::Segment::Exclusion => "excl",
        };
        let _ = writeln!(out, "{:>8}{se}  {seg}  {}", fmt_value(item.value), item.text);
    }
    out
}

fn max_abs(attr: &Attribution) -> f64 {
    attr.items.iter().map(|i| i.value.abs()).fold(0.0, f64::max)
}

/// Intensity in `[0, 1]`: `|φ| / max|φ|`, or 0 when every value is 0.
fn intensity(v: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        (v.abs() / scale).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

fn span(out: &mut String, kind: &str, text: &str, value: f64, scale: f64, inner: Option<&str>) {
    let a = intensity(value, scale);
    let sign = if value < 0.0 { "neg" } else { "pos" };
    let rgb = if value < 0.0 { "49,110,199" } else { "214,69,65" };
    let body = inner.map_or_else(|| escape(text), str::to_string);
    let _ = write!(
        out,
        "<span class=\"item {kind} {sign}\" data-value=\"{value}\" data-intensity=\"{a:.4}\" \
         style=\"background-color: rgba({rgb},{a:.4})\"><sup>{}</sup>{body}</span>",
        fmt_value(value)
    );
}

/// A standalone HTML page. Each sentence shows its value at its head;
/// sentences with a word-level attribution in `words` show per-word shading
/// inside. Red marks items that lengthen the prediction, blue shorten it.
pub fn render_html(sentences: &Attribution, words: &[Attribution]) -> String {
    let scale = max_abs(sentences);
    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{id}</title>\n<style>\n\
         body {{ font-family: sans-serif; line-height: 1.8; max-width: 60em; margin: 2em auto; }}\n\
         .item {{ padding: 0 2px; border-radius: 3px; }}\n\
         .sentence {{ display: block; margin: 4px 0; }}\n\
         sup {{ font-size: 0.7em; color: #333; margin-right: 3px; }}\n\
         </style></head><body>\n<h1>{id}</h1>\n<p>base {base:.3} years, prediction {full:.3} years</p>\n",
        id = escape(&sentences.nct_id),
        base = sentences.base_value,
        full = sentences.full_value,
    );
    for item in &sentences.items {
        let inner = words
            .iter()
            .find(|w| w.unit == Unit::Word && w.items.first().is_some_and(|i| i.slot == item.slot));
        let inner_html = inner.map(|w| {
            let wscale = max_abs(w);
            let mut s = String::new();
            for (k, wi) in w.items.iter().enumerate() {
                if k > 0 {
                    s.push(' ');
                }
                span(&mut s, "word", &wi.text, wi.value, wscale, None);
            }
            s
        });
        span(
            &mut out,
            "sentence",
            &item.text,
            item.value,
            scale,
            inner_html.as_deref(),
        );
        out.push('\n');
    }
    out.push_str("</body></html>\n");
    out
}

/// Writes `<stem>.txt`, `<stem>.html` and `<stem>.json`.
pub fn write_rendering(stem: &Path, sentences: &Attribution, words: &[Attribution]) -> Result<Vec<PathBuf>> {
    if let Some(parent) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = render_text(sentences);
    for w in words {
        text.push('\n');
        text.push_str(&render_text(w));
    }
    let mut all = vec![sentences.clone()];
    all.extend(words.iter().cloned());
    let files = [
        (stem.with_extension("txt"), text),
        (stem.with_extension("html"), render_html(sentences, words)),
        (stem.with_extension("json"), serde_json::to_string_pretty(&all)? + "\n"),
    ];
    let mut paths = Vec::new();
    for (path, body) in files {
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}
