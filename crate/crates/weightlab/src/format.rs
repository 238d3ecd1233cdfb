//! Rendering of command results as plain text, CSV or JSON.
//!
//! Reals are printed with 12 significant digits in every format, so output
//! depends only on the computed values and never on locale or platform.

use serde_json::{Map, Number, Value};

/// Output format selected with `--format`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    /// Bare values, whitespace separated.
    #[default]
    Text,
    Csv,
    Json,
}

/// A real with 12 significant digits, trailing zeros removed.
/// Non-finite values print as `inf`, `-inf` and `nan`.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    List(Vec<Cell>),
    Empty,
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Real(x) => real(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::List(items) => items.iter().map(Cell::text).collect::<Vec<_>>().join(" "),
            Cell::Empty => String::new(),
        }
    }

    /// Text-mode form; empty cells become `-` so columns stay aligned.
    fn plain(&self) -> String {
        match self {
            Cell::Empty => "-".to_string(),
            c => c.text(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(x) if x.is_finite() => {
                let rounded: f64 = real(*x).parse().expect("formatted real parses");
                Value::Number(Number::from_f64(rounded).expect("finite"))
            }
            Cell::Real(x) => Value::String(real(*x)),
            Cell::Int(n) => Value::from(*n),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::List(items) => Value::Array(items.iter().map(Cell::json).collect()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Reals as a list cell.
pub fn reals(xs: &[f64]) -> Cell {
    Cell::List(xs.iter().map(|&x| Cell::Real(x)).collect())
}

/// How the text format lays out a [`Report`].
#[derive(Clone, Debug, PartialEq)]
pub enum TextLayout {
    /// The listed columns of every row, space separated, one row per line.
    Columns(Vec<usize>),
    /// `name value` lines for every column of every row.
    KeyValue,
    /// Preformatted text.
    Raw(String),
}

/// A command's result: a table plus top-level metadata that only the JSON
/// format carries.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Vec<(String, Cell)>,
    pub text: TextLayout,
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        Report {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta: Vec::new(),
            text: TextLayout::Columns((0..columns.len()).collect()),
        }
    }

    /// One-row report with the given fields.
    pub fn record(fields: Vec<(&str, Cell)>) -> Self {
        let (names, cells): (Vec<&str>, Vec<Cell>) = fields.into_iter().unzip();
        let mut r = Report::new(&names);
        r.rows.push(cells);
        r
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(mut self, name: &str, cell: impl Into<Cell>) -> Self {
        self.meta.push((name.into(), cell.into()));
        self
    }

    pub fn text(mut self, layout: TextLayout) -> Self {
        self.text = layout;
        self
    }

    /// Text layout showing only the named columns.
    pub fn show(self, names: &[&str]) -> Self {
        let idx = names
            .iter()
            .map(|n| self.columns.iter().position(|c| c == n).expect("known column"))
            .collect();
        self.text(TextLayout::Columns(idx))
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.render_text(),
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        match &self.text {
            TextLayout::Columns(idx) => {
                for row in &self.rows {
                    let line: Vec<String> = idx.iter().map(|&i| row[i].plain()).collect();
                    out.push_str(&line.join(" "));
                    out.push('\n');
                }
            }
            TextLayout::KeyValue => {
                for row in &self.rows {
                    for (name, cell) in self.columns.iter().zip(row) {
                        out.push_str(&format!("{name} {}\n", cell.plain()));
                    }
                }
            }
            TextLayout::Raw(s) => out.push_str(s),
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    fn render_json(&self) -> String {
        let mut top = Map::new();
        for (name, cell) in &self.meta {
            top.insert(name.clone(), cell.json());
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                Value::Object(obj)
            })
            .collect();
        top.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("serializable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_use_twelve_digits() {
        assert_eq!(real(1.125), "1.125");
        assert_eq!(real(8.0), "8");
        assert_eq!(real(1.6), "1.6");
        assert_eq!(real(-0.0), "0");
        assert_eq!(real(1.0 / 3.0), "0.333333333333");
        assert_eq!(real(2.0 / 3.0 * 1e7), "6666666.66667");
        assert_eq!(real(1.5e-7), "1.5e-7");
        assert_eq!(real(123456789012345.0), "1.23456789012e14");
        assert_eq!(real(f64::INFINITY), "inf");
        for x in [1.0 / 3.0, 2.0f64.sqrt() * 1e-9, 6.02214076e23, -7.25] {
            let back: f64 = real(x).parse().unwrap();
            assert!(((back - x) / x).abs() <= 5e-12);
        }
    }

    #[test]
    fn formats() {
        let r = Report::record(vec![("a", 1.5.into()), ("b", "x,y".into())]);
        assert_eq!(r.render(Format::Text), "1.5 x,y\n");
        assert_eq!(r.render(Format::Csv), "a,b\n1.5,\"x,y\"\n");
        let v: Value = serde_json::from_str(&r.render(Format::Json)).unwrap();
        assert_eq!(v["rows"][0]["a"], 1.5);
    }
}
