//! Result tables and their serialization. CSV files carry a `# key=value`
//! provenance block, a column header with units, then one data row per grid
//! point; every number is printed with 12 significant digits so identical
//! runs are byte-identical.

use std::fmt::Write as _;
use std::io::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::config::OutputFormat;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed table text at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("json serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Column {
    pub name: String,
    /// Unit label, empty for dimensionless columns.
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self { name: name.to_string(), unit: unit.to_string() }
    }

    fn header(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{} [{}]", self.name, self.unit)
        }
    }
}

pub const STATUS_OK: &str = "ok";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub values: Vec<f64>,
    /// "ok", or the error message for a failed grid point.
    pub status: String,
}

impl Row {
    pub fn ok(values: Vec<f64>) -> Self {
        Self { values, status: STATUS_OK.to_string() }
    }

    pub fn failed(width: usize, partial: Vec<f64>, message: String) -> Self {
        let mut values = partial;
        values.resize(width, f64::NAN);
        Self { values, status: message }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultTable {
    /// Ordered key/value pairs echoing the config and pinned tolerances.
    pub provenance: Vec<(String, String)>,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.11e}")
    }
}

fn parse_value(text: &str) -> Option<f64> {
    match text {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

/// RFC-4180: quote when the field contains a comma, quote or newline;
/// double embedded quotes.
fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

impl ResultTable {
    pub fn new(provenance: Vec<(String, String)>, columns: Vec<Column>) -> Self {
        Self { provenance, columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Row) {
        debug_assert_eq!(row.values.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| !r.is_ok())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.provenance {
            writeln!(out, "# {k}={v}").unwrap();
        }
        let mut header: Vec<String> =
            self.columns.iter().map(|c| csv_quote(&c.header())).collect();
        header.push("status".to_string());
        writeln!(out, "{}", header.join(",")).unwrap();
        for row in &self.rows {
            let mut fields: Vec<String> = row.values.iter().map(|&v| format_value(v)).collect();
            fields.push(csv_quote(&row.status));
            writeln!(out, "{}", fields.join(",")).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> Result<String, TableError> {
        #[derive(Serialize)]
        struct Doc<'a> {
            provenance: Vec<(&'a str, &'a str)>,
            columns: &'a [Column],
            rows: &'a [Row],
        }
        let doc = Doc {
            provenance: self
                .provenance
                .iter()
                .map(|(k, v)| (k.as_str(), v.as_str()))
                .collect(),
            columns: &self.columns,
            rows: &self.rows,
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }

    pub fn write_to(&self, path: &str, format: OutputFormat) -> Result<(), TableError> {
        let text = match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json()?,
        };
        let io_err = |source| TableError::Io { path: path.to_string(), source };
        let mut file = std::fs::File::create(path).map_err(io_err)?;
        file.write_all(text.as_bytes())
            .map_err(|source| TableError::Io { path: path.to_string(), source })?;
        Ok(())
    }

    /// Parses text produced by [`to_csv`](Self::to_csv); the round-trip
    /// oracle for the emit path.
    pub fn parse_csv(text: &str) -> Result<Self, TableError> {
        let mut provenance = Vec::new();
        let mut columns: Option<Vec<Column>> = None;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let bad = |message: &str| TableError::Malformed {
                line: i + 1,
                message: message.to_string(),
            };
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest.split_once('=').ok_or_else(|| bad("provenance without ="))?;
                provenance.push((k.to_string(), v.to_string()));
                continue;
            }
            let fields = split_csv_line(line).map_err(|m| bad(&m))?;
            match &columns {
                None => {
                    if fields.last().map(String::as_str) != Some("status") {
                        return Err(bad("header must end with a status column"));
                    }
                    columns = Some(
                        fields[..fields.len() - 1]
                            .iter()
                            .map(|h| match h.rsplit_once(" [") {
                                Some((name, unit)) if unit.ends_with(']') => Column::new(
                                    name,
                                    &unit[..unit.len() - 1],
                                ),
                                _ => Column::new(h, ""),
                            })
                            .collect(),
                    );
                }
                Some(cols) => {
                    if fields.len() != cols.len() + 1 {
                        return Err(bad("wrong field count"));
                    }
                    let values = fields[..cols.len()]
                        .iter()
                        .map(|f| parse_value(f))
                        .collect::<Option<Vec<f64>>>()
                        .ok_or_else(|| bad("unparseable number"))?;
                    rows.push(Row { values, status: fields[cols.len()].clone() });
                }
            }
        }
        let columns = columns.ok_or(TableError::Malformed {
            line: text.lines().count(),
            message: "missing column header".to_string(),
        })?;
        Ok(Self { provenance, columns, rows })
    }
}

fn split_csv_line(line: &str) -> Result<Vec<String>, String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        if quoted {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    cur.push('"');
                } else {
                    quoted = false;
                }
            } else {
                cur.push(c);
            }
        } else {
            match c {
                '"' if cur.is_empty() => quoted = true,
                ',' => fields.push(std::mem::take(&mut cur)),
                _ => cur.push(c),
            }
        }
    }
    if quoted {
        return Err("unterminated quote".to_string());
    }
    fields.push(cur);
    Ok(fields)
}
