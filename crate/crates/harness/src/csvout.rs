//! Deterministic CSV emission: header row first, LF line endings, floats
//! rendered with 12 significant digits so repeated runs are byte-identical.

use std::fs;
use std::path::Path;

use crate::{HarnessError, Result};

/// One CSV cell. `Empty` renders as a zero-length field.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    UInt(u64),
    Int(i64),
    Float(f64),
    Str(String),
    Empty,
}

/// 12 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.11e}")
}

fn escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::UInt(v) => v.to_string(),
            Field::Int(v) => v.to_string(),
            Field::Float(v) => format_float(*v),
            Field::Str(s) => escape(s),
            Field::Empty => String::new(),
        }
    }
}

/// Renders a full document. Every row must match the header width.
pub fn render_csv(header: &[&str], rows: &[Vec<Field>]) -> Result<String> {
    let mut out = String::new();
    out.push_str(
        &header
            .iter()
            .map(|h| escape(h))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(HarnessError::Format(format!(
                "csv row {i} has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        out.push_str(&row.iter().map(Field::render).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Field>]) -> Result<()> {
    let doc = render_csv(header, rows)?;
    fs::write(path, doc).map_err(|e| HarnessError::Io(path.to_path_buf(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_get_twelve_significant_digits() {
        assert_eq!(format_float(4.0_f64.ln()), "1.38629436112e0");
        assert_eq!(format_float(0.15833990566), "1.58339905660e-1");
        assert_eq!(format_float(-2.0), "-2.00000000000e0");
    }

    #[test]
    fn document_layout_is_header_then_rows_with_lf() {
        let rows = vec![
            vec![Field::UInt(1), Field::Float(0.5), Field::Str("ok".into())],
            vec![Field::UInt(2), Field::Empty, Field::Str("a,b".into())],
        ];
        let doc = render_csv(&["k", "value", "note"], &rows).unwrap();
        assert_eq!(
            doc,
            "k,value,note\n1,5.00000000000e-1,ok\n2,,\"a,b\"\n"
        );
    }

    #[test]
    fn empty_row_set_yields_header_only() {
        let doc = render_csv(&["a", "b"], &[]).unwrap();
        assert_eq!(doc, "a,b\n");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let rows = vec![vec![Field::UInt(1)]];
        assert!(render_csv(&["a", "b"], &rows).is_err());
    }

    #[test]
    fn quotes_are_doubled() {
        let doc = render_csv(&["s"], &[vec![Field::Str("say \"hi\"".into())]]).unwrap();
        assert_eq!(doc, "s\n\"say \"\"hi\"\"\"\n");
    }
}
