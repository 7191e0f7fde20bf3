//! Delimiter-separated output shared by the trace export and the CLI.

use std::io::{self, Write};

/// Float with 12 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

/// `a;b;c` for vectors inside a comma-separated row.
pub fn fmt_vec(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(";")
}

pub fn parse_vec(field: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    field.split(';').map(str::parse).collect()
}

/// Comma-separated table with `#`-prefixed metadata lines above the header.
pub struct Table {
    meta: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            meta: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.meta.push(format!("{key}={value}"));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        if !self.meta.is_empty() {
            writeln!(w, "# {}", self.meta.join(","))?;
        }
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("table cells are UTF-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.00000000000e0");
        assert_eq!(fmt_f64(4.958677685950413e-3), "4.95867768595e-3");
        assert_eq!(parse_vec(&fmt_vec(&[1.5, 2.0])).unwrap(), vec![1.5, 2.0]);
    }

    #[test]
    fn layout() {
        let mut t = Table::new(["a", "b"]);
        t.meta("seed", 7).meta("hash", "ab");
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.to_string_lossy(), "# seed=7,hash=ab\na,b\n1,2\n");
    }
}
