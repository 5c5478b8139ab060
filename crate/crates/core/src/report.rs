//! Plain-text table output shared by the CSV writers.

use std::fmt::Write as _;

/// Reals in CSV: 17 significant digits, round-trip exact.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// A CSV table with optional leading `#` comment lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Csv {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            comments: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Render with LF line endings.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            for line in c.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_real(f64::INFINITY), "inf");
    }

    #[test]
    fn render_with_comments() {
        let mut t = Csv::new(&["s", "x"]);
        t.comments.push("a\nb".into());
        t.push(vec!["1".into(), fmt_real(0.5)]);
        assert_eq!(t.render(), "# a\n# b\ns,x\n1,5.0000000000000000e-1\n");
    }
}
