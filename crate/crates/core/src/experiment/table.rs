//! Report rows, sorted by their key columns and written with 17 significant digits.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn rank(&self) -> u8 {
        match self {
            Cell::Empty => 0,
            Cell::Int(_) => 1,
            Cell::Num(_) => 2,
            Cell::Text(_) => 3,
        }
    }

    fn compare(&self, other: &Cell) -> Ordering {
        match (self, other) {
            (Cell::Int(a), Cell::Int(b)) => a.cmp(b),
            (Cell::Num(a), Cell::Num(b)) => a.total_cmp(b),
            (Cell::Text(a), Cell::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }

    pub fn format(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// 17 significant digits, enough to round-trip every f64.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    /// Leading columns that identify a row.
    pub key_len: usize,
    rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FormattedTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str], key_len: usize) -> Self {
        assert!(key_len <= columns.len());
        Table { columns: columns.to_vec(), key_len, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Stable sort on the key columns.
    pub fn sort(&mut self) {
        let k = self.key_len;
        self.rows.sort_by(|a, b| a[..k].iter().zip(&b[..k]).map(|(x, y)| x.compare(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal));
    }

    pub fn formatted(&self) -> FormattedTable {
        FormattedTable {
            columns: self.columns.iter().map(|c| c.to_string()).collect(),
            rows: self.rows.iter().map(|r| r.iter().map(Cell::format).collect()).collect(),
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        self.formatted().to_csv()
    }
}

impl FormattedTable {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_17_digits() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{s}");
        }
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn sorts_numerically_on_key_columns() {
        let mut t = Table::new(&["q", "h", "value"], 2);
        t.push(vec!["b".into(), 0.1.into(), 1.0.into()]);
        t.push(vec!["a".into(), 0.2.into(), 2.0.into()]);
        t.push(vec!["a".into(), 0.025.into(), 3.0.into()]);
        t.push(vec!["a".into(), Cell::Empty, 4.0.into()]);
        t.sort();
        let v: Vec<f64> = t.rows().iter().map(|r| if let Cell::Num(x) = r[2] { x } else { 0.0 }).collect();
        assert_eq!(v, vec![4.0, 3.0, 2.0, 1.0]);
        let csv = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert!(csv.starts_with("q,h,value\na,,4.0000000000000000e0\n"), "{csv}");
    }
}
