//! CSV result files: a commented provenance header (the fully resolved
//! config, seed, and version) followed by one row per record. Floats carry
//! 17 significant digits so a rerun can be compared byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    UInt(u64),
    Float(f64),
    Text(String),
    /// Serialized as an empty cell.
    Missing,
}

impl Field {
    fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        match self {
            Field::UInt(v) => write!(out, "{v}"),
            Field::Float(v) => write!(out, "{}", fmt_float(*v)),
            Field::Text(v) => write!(out, "{v}"),
            Field::Missing => Ok(()),
        }
    }
}

/// 17 significant digits; enough to reproduce any f64 exactly.
pub fn fmt_float(value: f64) -> String {
    format!("{value:.16e}")
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Field>>,
}

/// Write a result table.
///
/// `config_doc` is echoed line by line as comments so the file is
/// self-describing; `extra_comments` carries derived scalars (fits,
/// classifications). Without `deterministic`, a timestamp comment is added;
/// with it, reruns of the same config and seed are byte-identical.
pub fn write_table(
    path: &Path,
    config_doc: &str,
    extra_comments: &[String],
    deterministic: bool,
    table: &Table,
) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    write_inner(&mut out, config_doc, extra_comments, deterministic, table).map_err(io_err)
}

fn write_inner(
    out: &mut impl Write,
    config_doc: &str,
    extra_comments: &[String],
    deterministic: bool,
    table: &Table,
) -> std::io::Result<()> {
    writeln!(out, "# maem {}", env!("CARGO_PKG_VERSION"))?;
    if !deterministic {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(out, "# generated_at_unix = {stamp}")?;
    }
    for line in config_doc.lines() {
        writeln!(out, "# {line}")?;
    }
    for line in extra_comments {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{}", table.columns.join(","))?;
    for row in &table.rows {
        debug_assert_eq!(row.len(), table.columns.len());
        for (i, field) in row.iter().enumerate() {
            if i > 0 {
                write!(out, ",")?;
            }
            field.write(out)?;
        }
        writeln!(out)?;
    }
    out.flush()
}
