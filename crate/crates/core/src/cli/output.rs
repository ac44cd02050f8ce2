//! Table emission: CSV with `# key: value` header lines, or JSON with a
//! metadata object.

use std::fmt::Write as _;

use serde_json::value::RawValue;

use super::config::Format;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// C-style `%.12e`: `-1.234500000000e+00`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }

    fn json(&self) -> Box<RawValue> {
        let text = match self {
            Cell::Float(x) if !x.is_finite() => "null".to_string(),
            Cell::Float(_) | Cell::Int(_) | Cell::Bool(_) => self.text(),
            Cell::Text(t) => serde_json::to_string(t).expect("string serializes"),
        };
        RawValue::from_string(text).expect("valid JSON literal")
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub metadata: Vec<(String, Cell)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            ..Self::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Cell>) {
        self.metadata.push((key.to_string(), value.into()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {}", v.text()).unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::text).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    fn json(&self) -> String {
        let mut meta = serde_json::Map::new();
        for (k, v) in &self.metadata {
            let value: serde_json::Value =
                serde_json::from_str(v.json().get()).expect("valid literal");
            meta.insert(k.clone(), value);
        }
        let rows: Vec<Vec<Box<RawValue>>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::json).collect())
            .collect();
        #[derive(serde::Serialize)]
        struct Doc<'a> {
            metadata: serde_json::Map<String, serde_json::Value>,
            columns: &'a [&'static str],
            rows: Vec<Vec<Box<RawValue>>>,
        }
        let doc = Doc {
            metadata: meta,
            columns: &self.columns,
            rows,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(format_float(-0.75), "-7.500000000000e-01");
        assert_eq!(format_float(12345.0), "1.234500000000e+04");
        assert_eq!(format_float(0.0), "0.000000000000e+00");
        assert_eq!(format_float(1e-120), "1.000000000000e-120");
        assert_eq!(format_float(f64::NAN), "nan");
    }

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new(&["k", "e"]);
        t.meta("command", "demo");
        t.push(vec![1usize.into(), (-0.5).into()]);
        t.push(vec![2usize.into(), f64::NAN.into()]);
        assert_eq!(
            t.render(Format::Csv),
            "# command: demo\nk,e\n1,-5.000000000000e-01\n2,nan\n"
        );
        let v: serde_json::Value = serde_json::from_str(&t.render(Format::Json)).unwrap();
        assert_eq!(v["columns"][1], "e");
        assert_eq!(v["rows"][0][1], -0.5);
        assert!(v["rows"][1][1].is_null());
        assert_eq!(v["metadata"]["command"], "demo");
    }
}
