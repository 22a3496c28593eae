//! Line-oriented text container shared by every toolkit file.
//!
//! ```text
//! # frustoval-format v1
//! # kind=pairs
//! # key=value
//! ...
//! col_a,col_b,...
//! row...
//! ```

use std::fmt::Write as _;

use crate::geometry::{Quaternion, Vec3};

use super::DatasetError;

pub const FORMAT_MAGIC: &str = "# frustoval-format v1";
pub const FORMAT_VERSION: &str = "v1";
pub const TOOLKIT: &str = concat!("frustoval ", env!("CARGO_PKG_VERSION"));

/// Ordered `key=value` header block.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn extend<I, K, V>(&mut self, iter: I) -> &mut Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: ToString,
    {
        for (k, v) in iter {
            self.push(k, v);
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, DatasetError> {
        self.get(key).ok_or_else(|| DatasetError::MissingHeader(key.to_string()))
    }

    pub fn require_num(&self, key: &str) -> Result<f64, DatasetError> {
        let v = self.require(key)?;
        parse_num(v).ok_or_else(|| DatasetError::BadHeader { key: key.into(), value: v.into() })
    }

    pub fn require_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T, DatasetError> {
        let v = self.require(key)?;
        v.parse().map_err(|_| DatasetError::BadHeader { key: key.into(), value: v.into() })
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

/// A parsed toolkit file.
#[derive(Debug, Clone)]
pub struct Document {
    pub kind: String,
    pub header: Header,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// 1-based line number of each row.
    pub row_lines: Vec<usize>,
}

pub fn write_document(kind: &str, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(FORMAT_MAGIC);
    out.push('\n');
    let _ = writeln!(out, "# kind={kind}");
    for (k, v) in header.entries() {
        debug_assert!(!v.contains('\n'));
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_document(text: &str, expected_kind: &str) -> Result<Document, DatasetError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end() == FORMAT_MAGIC => {}
        Some((_, first)) => {
            let found = first
                .strip_prefix("# frustoval-format ")
                .map(|v| v.trim().to_string())
                .unwrap_or_else(|| first.chars().take(40).collect());
            return Err(DatasetError::Version { found });
        }
        None => return Err(DatasetError::Version { found: String::from("<empty file>") }),
    }
    let mut header = Header::new();
    let mut kind = None;
    let mut columns = None;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut row_lines = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end_matches('\r');
        if columns.is_none() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest.split_once('=').ok_or_else(|| DatasetError::Malformed {
                    location: format!("line {}", i + 1),
                    reason: format!("header line without '=': {line}"),
                })?;
                if k == "kind" {
                    kind = Some(v.to_string());
                } else {
                    header.push(k, v);
                }
                continue;
            }
            columns = Some(line.split(',').map(str::to_string).collect::<Vec<_>>());
            continue;
        }
        if line.is_empty() {
            continue;
        }
        rows.push(line.split(',').map(str::to_string).collect());
        row_lines.push(i + 1);
    }
    let kind = kind.ok_or_else(|| DatasetError::MissingHeader("kind".into()))?;
    if kind != expected_kind {
        return Err(DatasetError::Kind { expected: expected_kind.into(), found: kind });
    }
    let columns = columns.ok_or_else(|| DatasetError::Malformed {
        location: "document".into(),
        reason: "missing column line".into(),
    })?;
    for (row, line) in rows.iter().zip(&row_lines) {
        if row.len() != columns.len() {
            return Err(DatasetError::Malformed {
                location: format!("line {line}"),
                reason: format!("expected {} fields, found {}", columns.len(), row.len()),
            });
        }
    }
    Ok(Document { kind, header, columns, rows, row_lines })
}

/// Formats with 9 significant digits, `%g` style: fixed notation for
/// exponents in `[-4, 9)`, scientific otherwise, trailing zeros trimmed.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Like [`fmt_num`] but falls back to the shortest exact representation
/// when 9 digits would lose information. Used for configuration echoes,
/// which feed the config digest.
pub fn fmt_exact(v: f64) -> String {
    let short = fmt_num(v);
    if parse_num(&short) == Some(v) || (v == 0.0 && short == "0") {
        short
    } else {
        format!("{v:?}")
    }
}

pub fn parse_num(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_else(|| "undefined".into())
}

pub fn parse_opt(s: &str) -> Option<Option<f64>> {
    if s == "undefined" {
        Some(None)
    } else {
        parse_num(s).map(Some)
    }
}

/// Quaternion fields whose re-read, renormalized value prints identically.
/// Without this a renormalization after reading could nudge the last digit
/// and break write/read/write idempotence.
pub fn fmt_quaternion(q: &Quaternion) -> [String; 4] {
    let mut current = *q;
    let mut fields = current.components().map(fmt_num);
    for _ in 0..8 {
        let Some(reread) = reparse_quaternion(&fields) else { return fields };
        let again = reread.components().map(fmt_num);
        if again == fields {
            return fields;
        }
        current = reread;
        fields = again;
    }
    // The iteration can cycle between two printings. Nudge the last printed
    // digit of each component until the printing is stable.
    let base = current.components();
    for code in 0..81u32 {
        let mut k = code;
        let candidate = base.map(|v| {
            let shift = (k % 3) as f64 - 1.0;
            k /= 3;
            fmt_num(v + shift * last_digit(v))
        });
        if reparse_quaternion(&candidate).map(|r| r.components().map(fmt_num)) == Some(candidate.clone()) {
            return candidate;
        }
    }
    fields
}

/// Value of one unit in the ninth significant digit of `v`.
fn last_digit(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    10f64.powi(v.abs().log10().floor() as i32 - 8)
}

fn reparse_quaternion(fields: &[String; 4]) -> Option<Quaternion> {
    let v: Vec<f64> = fields.iter().map(|f| parse_num(f)).collect::<Option<_>>()?;
    Quaternion::new(v[0], v[1], v[2], v[3]).ok()
}

pub fn fmt_vec3(v: Vec3) -> [String; 3] {
    v.to_array().map(fmt_num)
}

/// Parses `fields` as numbers, naming `what` and `source` on failure.
pub fn parse_fields<const N: usize>(fields: &[String], source: &str) -> Result<[f64; N], DatasetError> {
    let mut out = [0.0; N];
    for (slot, f) in out.iter_mut().zip(fields) {
        *slot = parse_num(f).filter(|v| v.is_finite()).ok_or_else(|| DatasetError::Malformed {
            location: source.into(),
            reason: format!("not a finite number: '{f}'"),
        })?;
    }
    Ok(out)
}
