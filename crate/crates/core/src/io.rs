//! CSV helpers shared by every export.

use std::io::Write;

/// 17 significant digits; parses back to the same double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `prefix` cells followed by the formatted floats, comma separated.
pub fn write_row<W: Write>(w: &mut W, prefix: &[String], values: &[f64]) -> std::io::Result<()> {
    let mut line = prefix.join(",");
    for v in values {
        if !line.is_empty() {
            line.push(',');
        }
        line.push_str(&fmt_f64(*v));
    }
    line.push('\n');
    w.write_all(line.as_bytes())
}

pub fn write_header<W: Write>(w: &mut W, columns: &[String]) -> std::io::Result<()> {
    writeln!(w, "{}", columns.join(","))
}

/// `name_1, ..., name_n`.
pub fn indexed_columns(name: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |j| format!("{name}_{j}"))
}
