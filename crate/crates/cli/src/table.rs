//! CSV in and out with the conventions shared by every subcommand:
//! UTF-8, a header row, `.` as the decimal separator (Rust float
//! formatting), Unix line endings.

use std::io;

pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("header");
    for row in rows {
        w.write_record(row).expect("row");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn read_csv(text: &str) -> io::Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(bad)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(bad)?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn bad(e: csv::Error) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e)
}

/// Floats are written with enough digits to round-trip exactly, so a
/// parse-serialize cycle is the identity.
pub fn fmt(v: f64) -> String {
    let mut buf = ryu_lite(v);
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("NaN") {
        buf.push_str(".0");
    }
    buf
}

fn ryu_lite(v: f64) -> String {
    // shortest representation that parses back to the same bits
    for prec in 1..=17 {
        let s = format!("{v:.*}", prec);
        if s.parse::<f64>().map(f64::to_bits) == Ok(v.to_bits()) {
            return trim_zeros(s);
        }
    }
    format!("{v:e}")
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0');
    let t = t.strip_suffix('.').unwrap_or(t);
    t.to_string()
}
