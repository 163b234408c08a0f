//! CSV output with the trailing manifest reference line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use acclim_core::error::Result;

/// Write a CSV file: header row, data rows, and a final comment line
/// `#manifest:<hash>` tying the file to its run manifest.
pub fn write_csv(path: &Path, header: &str, rows: &[String], manifest_hash: &str) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    writeln!(w, "#manifest:{manifest_hash}")?;
    Ok(())
}

/// Shortest round-trip formatting; locale-independent decimal point.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
