//! Plot-ready tables with fixed float formatting: 17 significant digits in
//! JSON, 9 in CSV. JSON output re-parses to the same bits.

use std::fmt::Write as _;

use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Flag(bool),
    Text(String),
    /// Non-finite value at a flagged sample.
    Missing,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }
}

/// Numbers become [`Cell::Missing`] when they are not finite.
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Cell::Num(v)
        } else {
            Cell::Missing
        }
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

/// Column header; `unit` is `"flag"` for boolean and `"text"` for string
/// columns, `"1"` for dimensionless numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self { name: name.into(), unit: unit.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputTable {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}

impl OutputTable {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        let mut metadata = Map::new();
        metadata.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        Self { name: name.into(), columns, rows: Vec::new(), metadata }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header of '{}'", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<Value>) {
        self.metadata.insert(key.into(), value.into());
    }
}

fn fmt_float(v: f64, digits: usize) -> String {
    format!("{v:.digits$e}")
}

fn write_json_value(out: &mut String, v: &Value) {
    match v {
        Value::Number(n) if n.is_f64() => out.push_str(&fmt_float(n.as_f64().unwrap_or(f64::NAN), 16)),
        Value::Array(items) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_json_value(out, x);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, x)) in map.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_json_value(out, x);
            }
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn json_cell(out: &mut String, c: &Cell) {
    match c {
        Cell::Num(v) => out.push_str(&fmt_float(*v, 16)),
        Cell::Flag(b) => out.push_str(if *b { "true" } else { "false" }),
        Cell::Text(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Cell::Missing => out.push_str("null"),
    }
}

/// `{"tables": [...]}` with one row per line.
pub fn to_json(tables: &[OutputTable]) -> String {
    let mut out = String::from("{\"tables\": [\n");
    for (ti, t) in tables.iter().enumerate() {
        out.push_str("{\"name\": ");
        out.push_str(&Value::String(t.name.clone()).to_string());
        out.push_str(",\n\"metadata\": ");
        write_json_value(&mut out, &Value::Object(t.metadata.clone()));
        out.push_str(",\n\"columns\": [");
        for (i, c) in t.columns.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write!(
                out,
                "{{\"name\": {}, \"unit\": {}}}",
                Value::String(c.name.clone()),
                Value::String(c.unit.clone())
            )
            .unwrap();
        }
        out.push_str("],\n\"rows\": [");
        for (ri, row) in t.rows.iter().enumerate() {
            out.push_str(if ri == 0 { "\n[" } else { ",\n[" });
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                json_cell(&mut out, c);
            }
            out.push(']');
        }
        out.push_str("]}");
        out.push_str(if ti + 1 < tables.len() { ",\n" } else { "\n" });
    }
    out.push_str("]}\n");
    out
}

pub fn from_json(text: &str) -> Result<Vec<OutputTable>, ParseError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ParseError(e.to_string()))?;
    let tables = root.get("tables").and_then(Value::as_array).ok_or_else(|| ParseError("missing tables".into()))?;
    tables
        .iter()
        .map(|t| {
            let name = t.get("name").and_then(Value::as_str).ok_or_else(|| ParseError("table without name".into()))?;
            let metadata = t.get("metadata").and_then(Value::as_object).cloned().unwrap_or_default();
            let columns = t
                .get("columns")
                .and_then(Value::as_array)
                .ok_or_else(|| ParseError(format!("{name}: missing columns")))?
                .iter()
                .map(|c| {
                    let get = |k: &str| c.get(k).and_then(Value::as_str).map(str::to_string);
                    Ok(Column { name: get("name").ok_or_else(|| ParseError("column without name".into()))?, unit: get("unit").unwrap_or_default() })
                })
                .collect::<Result<Vec<_>, ParseError>>()?;
            let rows = t
                .get("rows")
                .and_then(Value::as_array)
                .ok_or_else(|| ParseError(format!("{name}: missing rows")))?
                .iter()
                .map(|r| {
                    let cells = r.as_array().ok_or_else(|| ParseError(format!("{name}: row is not an array")))?;
                    if cells.len() != columns.len() {
                        return Err(ParseError(format!("{name}: row has {} cells for {} columns", cells.len(), columns.len())));
                    }
                    cells
                        .iter()
                        .map(|c| match c {
                            Value::Null => Ok(Cell::Missing),
                            Value::Bool(b) => Ok(Cell::Flag(*b)),
                            Value::String(s) => Ok(Cell::Text(s.clone())),
                            Value::Number(n) => Ok(Cell::Num(n.as_f64().unwrap_or(f64::NAN))),
                            _ => Err(ParseError(format!("{name}: unexpected cell {c}"))),
                        })
                        .collect()
                })
                .collect::<Result<Vec<_>, ParseError>>()?;
            Ok(OutputTable { name: name.to_string(), columns, rows, metadata })
        })
        .collect()
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Metadata as `# key: json` lines, then a `name (unit)` header. Tables are
/// separated by a blank line.
pub fn to_csv(tables: &[OutputTable]) -> String {
    let mut out = String::new();
    for (ti, t) in tables.iter().enumerate() {
        if ti > 0 {
            out.push('\n');
        }
        writeln!(out, "# table: {}", t.name).unwrap();
        for (k, v) in &t.metadata {
            let mut s = String::new();
            write_json_value(&mut s, v);
            writeln!(out, "# {k}: {s}").unwrap();
        }
        let header: Vec<String> = t.columns.iter().map(|c| csv_text(&format!("{} ({})", c.name, c.unit))).collect();
        writeln!(out, "{}", header.join(",")).unwrap();
        for row in &t.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_float(*v, 8),
                    Cell::Flag(b) => (if *b { "1" } else { "0" }).to_string(),
                    Cell::Text(s) => csv_text(s),
                    Cell::Missing => String::new(),
                })
                .collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
    }
    out
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(ch) = chars.next() {
        match (ch, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    out.push(cur);
    out
}

pub fn from_csv(text: &str) -> Result<Vec<OutputTable>, ParseError> {
    let mut tables = Vec::new();
    for block in text.split("\n\n").filter(|b| !b.trim().is_empty()) {
        let mut t = OutputTable::default();
        let mut lines = block.lines().peekable();
        while let Some(line) = lines.next_if(|l| l.starts_with('#')) {
            let (k, v) = line[1..].trim().split_once(": ").ok_or_else(|| ParseError(format!("bad metadata line '{line}'")))?;
            if k == "table" {
                t.name = v.to_string();
            } else {
                let value = serde_json::from_str(v).map_err(|e| ParseError(format!("metadata {k}: {e}")))?;
                t.metadata.insert(k.to_string(), value);
            }
        }
        let header = lines.next().ok_or_else(|| ParseError(format!("{}: missing header", t.name)))?;
        for h in split_csv_line(header) {
            let (name, unit) = h
                .strip_suffix(')')
                .and_then(|s| s.rsplit_once(" ("))
                .ok_or_else(|| ParseError(format!("header cell '{h}' lacks a unit")))?;
            t.columns.push(Column::new(name, unit));
        }
        for line in lines {
            let cells = split_csv_line(line);
            if cells.len() != t.columns.len() {
                return Err(ParseError(format!("{}: row has {} cells for {} columns", t.name, cells.len(), t.columns.len())));
            }
            let row = cells
                .into_iter()
                .zip(&t.columns)
                .map(|(c, col)| match col.unit.as_str() {
                    _ if c.is_empty() => Ok(Cell::Missing),
                    "flag" => Ok(Cell::Flag(c == "1")),
                    "text" => Ok(Cell::Text(c)),
                    _ => c.parse().map(Cell::Num).map_err(|_| ParseError(format!("bad number '{c}'"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            t.rows.push(row);
        }
        tables.push(t);
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> OutputTable {
        let mut t = OutputTable::new(
            "demo",
            vec![Column::new("r", "fm"), Column::new("V11", "fm^-2"), Column::new("pole", "flag"), Column::new("note", "text")],
        );
        t.set_meta("pole_radii", vec![0.1 + 0.2, 1.0 / 3.0]);
        t.push(vec![Cell::Num(0.1), Cell::Num(-2.0 / 3.0), Cell::Flag(false), Cell::Text("a, \"b\"".into())]);
        t.push(vec![Cell::Num(1e-300), Cell::Missing, Cell::Flag(true), Cell::Text(String::new())]);
        t
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = sample();
        let back = from_json(&to_json(&[t.clone()])).unwrap();
        assert_eq!(back, vec![t]);
    }

    #[test]
    fn csv_round_trip_to_nine_digits() {
        let t = sample();
        let text = to_csv(&[t.clone(), t.clone()]);
        assert!(text.contains("-6.66666667e-1"));
        let back = from_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].columns, t.columns);
        assert_eq!(back[0].rows[1][2], Cell::Flag(true));
        assert_eq!(back[0].rows[0][3], Cell::Text("a, \"b\"".into()));
        let v = back[0].rows[0][1].as_f64().unwrap();
        assert!((v + 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(back[0].metadata["pole_radii"], t.metadata["pole_radii"]);
    }
}
