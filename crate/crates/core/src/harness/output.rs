//! CSV emission.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::Result;

/// Write `rows` with a header row. Floats use the shortest round-trip
/// representation, so identical inputs give byte-identical files.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
