//! Fixed-point number formatting shared by the file writers.

use std::fmt::Write;

/// `digits` fractional digits, never printing a negative zero.
pub fn fixed(x: f64, digits: usize) -> String {
    let s = format!("{x:.digits$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

pub fn fixed6(x: f64) -> String {
    fixed(x, 6)
}

/// Space-separated [`fixed`] values.
pub fn fixed_list(values: &[f64], digits: usize) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&fixed(*v, digits));
    }
    out
}

pub fn fixed6_list(values: &[f64]) -> String {
    fixed_list(values, 6)
}

/// Escapes text for use inside a double-quoted XML attribute.
pub fn xml_attr(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' | '\r' | '\t' => {
                let _ = write!(out, "&#{};", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}
