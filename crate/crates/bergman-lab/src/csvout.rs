//! CSV emission with locale-independent numeric formatting.
//!
//! Every float is written as `{:.16e}` — one digit before the point, 16
//! after, 17 significant digits in total — which is enough to reconstruct
//! the exact `f64` bit pattern on read-back.  The decimal separator is
//! always `.`, fields are comma separated, and the first line is a header.

/// Canonical float cell, e.g. `1.6211389382774044e0`.
pub fn float_cell(v: f64) -> String {
    format!("{v:.16e}")
}

/// In-memory CSV table: a header row plus data rows, `\n` line endings,
/// one trailing newline.
pub struct CsvTable {
    columns: usize,
    out: String,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Self {
            columns: header.len(),
            out,
        }
    }

    /// Appends one row; the cell count must match the header.
    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "csv row width mismatch");
        debug_assert!(
            cells.iter().all(|c| !c.contains(',') && !c.contains('\n')),
            "csv cells must not contain separators"
        );
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn into_string(self) -> String {
        self.out
    }
}
