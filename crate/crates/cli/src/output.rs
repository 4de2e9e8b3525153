use std::io::{self, Write};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Plain,
}

/// Round to 6 significant digits so printed floats are reproducible.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = 5 - x.abs().log10().floor() as i32;
    if digits <= 0 {
        let scale = 10f64.powi(-digits);
        return (x / scale).round() * scale;
    }
    format!("{:.*}", digits as usize, x).parse().unwrap_or(x)
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(v) => v.to_string(),
    }
}

fn to_value<T: Serialize>(value: &T) -> io::Result<Value> {
    serde_json::to_value(value).map_err(io::Error::other)
}

pub struct Out {
    pub format: Format,
    w: Box<dyn Write>,
}

impl Out {
    pub fn new(format: Format, w: Box<dyn Write>) -> Self {
        Self { format, w }
    }

    /// A single object. `plain` renders the human-readable form.
    pub fn record<T: Serialize>(
        &mut self,
        value: &T,
        plain: impl FnOnce() -> String,
    ) -> io::Result<()> {
        let v = to_value(value)?;
        match self.format {
            Format::Json => writeln!(self.w, "{v}"),
            Format::Plain => writeln!(self.w, "{}", plain()),
            Format::Csv => {
                let keys: Vec<String> = match &v {
                    Value::Object(m) => m.keys().cloned().collect(),
                    _ => vec!["value".into()],
                };
                let mut t = self.table(&keys)?;
                t.row_value(&v)?;
                t.finish()
            }
        }
    }

    pub fn rows<T: Serialize>(&mut self, header: &[&str], rows: &[T]) -> io::Result<()> {
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        let mut t = self.table(&header)?;
        for r in rows {
            t.row(r)?;
        }
        t.finish()
    }

    /// Streaming table: CSV (or tab-separated for plain) with a header row,
    /// or one JSON object per line.
    pub fn table(&mut self, header: &[String]) -> io::Result<Table<'_>> {
        if self.format == Format::Json {
            return Ok(Table::Json(&mut self.w));
        }
        let delimiter = if self.format == Format::Plain {
            b'\t'
        } else {
            b','
        };
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(&mut self.w as &mut dyn Write);
        w.write_record(header)?;
        Ok(Table::Csv(Box::new(w), header.to_vec()))
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.w.flush()
    }
}

pub enum Table<'a> {
    Json(&'a mut Box<dyn Write>),
    Csv(Box<csv::Writer<&'a mut dyn Write>>, Vec<String>),
}

impl Table<'_> {
    pub fn row<T: Serialize>(&mut self, value: &T) -> io::Result<()> {
        self.row_value(&to_value(value)?)
    }

    fn row_value(&mut self, v: &Value) -> io::Result<()> {
        match self {
            Table::Json(w) => writeln!(w, "{v}"),
            Table::Csv(w, header) => {
                let cells: Vec<String> = match v {
                    Value::Object(m) => header.iter().map(|h| cell(m.get(h))).collect(),
                    other => vec![cell(Some(other))],
                };
                w.write_record(&cells).map_err(io::Error::from)
            }
        }
    }

    pub fn finish(self) -> io::Result<()> {
        match self {
            Table::Json(w) => w.flush(),
            Table::Csv(mut w, _) => w.flush(),
        }
    }
}
