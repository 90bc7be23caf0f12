use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A row type with a fixed CSV schema.
pub trait Table: Serialize {
    fn header() -> &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes `rows` as CSV with a header, or as JSON: an object when `single`
/// is set, an array otherwise.
pub fn emit<T: Table>(
    rows: &[T],
    single: bool,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            w.write_record(T::header())?;
            for r in rows {
                w.write_record(r.record())?;
            }
            w.flush()?;
        }
        Format::Json => {
            if single && rows.len() == 1 {
                serde_json::to_writer_pretty(&mut *out, &rows[0])?;
            } else {
                serde_json::to_writer_pretty(&mut *out, rows)?;
            }
            writeln!(out)?;
            out.flush()?;
        }
    }
    Ok(())
}
