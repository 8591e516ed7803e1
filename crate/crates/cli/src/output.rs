use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::Value;

use crate::CliError;

/// Shortest round-trip decimal; exponent notation outside `[1e-5, 1e16)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct Sink {
    inner: Box<dyn Write>,
}

impl Sink {
    pub fn open(out: Option<&Path>) -> Result<Sink, CliError> {
        let inner: Box<dyn Write> = match out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", p.display())))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Sink { inner })
    }

    pub fn csv(mut self, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut self.inner);
            w.write_record(header).map_err(io_err)?;
            for row in rows {
                w.write_record(&row).map_err(io_err)?;
            }
            w.flush()?;
        }
        self.inner.flush()?;
        Ok(())
    }

    pub fn json(mut self, value: &Value) -> Result<(), CliError> {
        serde_json::to_writer_pretty(&mut self.inner, value).map_err(|e| CliError::Output(e.into()))?;
        writeln!(self.inner)?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn line(mut self, text: &str) -> Result<(), CliError> {
        writeln!(self.inner, "{text}")?;
        self.inner.flush()?;
        Ok(())
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Output(e.into())
}
