//! Tabular results rendered as aligned text, CSV or JSON lines.

use super::Format;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Cell {
    Num(f64),
    /// Fixed number of decimals.
    Fixed(f64, usize),
    Int(i128),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    pub(crate) fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn plain(&self) -> String {
        match self {
            Cell::Num(v) => num(*v),
            Cell::Fixed(v, d) if v.is_finite() => format!("{v:.d$}"),
            Cell::Fixed(v, _) => num(*v),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Num(v) | Cell::Fixed(v, _) if !v.is_finite() => serde_json::to_string(&num(*v)).unwrap_or_default(),
            Cell::Num(_) | Cell::Fixed(..) | Cell::Int(_) | Cell::Bool(_) => self.plain(),
            Cell::Text(s) => serde_json::Value::from(s.as_str()).to_string(),
            Cell::Empty => "null".into(),
        }
    }

    fn csv(&self) -> String {
        let s = self.plain();
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s
        }
    }
}

/// Shortest round-trip form, switching to exponent notation for very large
/// or small magnitudes.
pub(crate) fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        // -0.0 prints as 0.0
        format!("{:?}", v + 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Table {
    pub name: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub(crate) fn new(name: &'static str, columns: &[&str]) -> Self {
        Self {
            name,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct Report {
    pub notes: Vec<(String, Cell)>,
    pub tables: Vec<Table>,
}

impl Report {
    pub(crate) fn note(&mut self, key: &str, value: Cell) {
        self.notes.push((key.to_string(), value));
    }

    pub(crate) fn render(&self, format: Format) -> String {
        match format {
            Format::Human => self.human(),
            Format::Csv => self.csv(),
            Format::JsonLines => self.json_lines(),
        }
    }

    fn human(&self) -> String {
        let mut sections = Vec::new();
        if !self.notes.is_empty() {
            sections.push(key_values(self.notes.iter().map(|(k, v)| (k.as_str(), v))));
        }
        for t in &self.tables {
            if t.rows.len() == 1 {
                sections.push(key_values(t.columns.iter().map(String::as_str).zip(&t.rows[0])));
                continue;
            }
            let cells: Vec<Vec<String>> = t
                .rows
                .iter()
                .map(|r| r.iter().map(|c| if *c == Cell::Empty { "-".into() } else { c.plain() }).collect())
                .collect();
            let widths: Vec<usize> = (0..t.columns.len())
                .map(|j| cells.iter().map(|r| r[j].chars().count()).chain([t.columns[j].chars().count()]).max().unwrap_or(0))
                .collect();
            let line = |items: &[String]| {
                let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
                padded.join("  ").trim_end().to_string() + "\n"
            };
            let mut s = line(&t.columns);
            for r in &cells {
                s.push_str(&line(r));
            }
            sections.push(s);
        }
        sections.join("\n")
    }

    fn csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.notes {
            s.push_str(&format!("# {k}: {}\n", v.plain()));
        }
        let tables: Vec<String> = self
            .tables
            .iter()
            .map(|t| {
                let mut block = t.columns.join(",") + "\n";
                for r in &t.rows {
                    block.push_str(&r.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                    block.push('\n');
                }
                block
            })
            .collect();
        s + &tables.join("\n")
    }

    fn json_lines(&self) -> String {
        let object = |record: &str, fields: &mut dyn Iterator<Item = (&str, &Cell)>| {
            let mut s = format!("{{\"record\":{}", serde_json::Value::from(record));
            for (k, v) in fields {
                s.push_str(&format!(",{}:{}", serde_json::Value::from(k), v.json()));
            }
            s + "}\n"
        };
        let mut s = String::new();
        if !self.notes.is_empty() {
            s.push_str(&object("info", &mut self.notes.iter().map(|(k, v)| (k.as_str(), v))));
        }
        for t in &self.tables {
            for r in &t.rows {
                s.push_str(&object(t.name, &mut t.columns.iter().map(String::as_str).zip(r)));
            }
        }
        s
    }
}

fn key_values<'a>(pairs: impl Iterator<Item = (&'a str, &'a Cell)>) -> String {
    pairs
        .map(|(k, v)| {
            let shown = if *v == Cell::Empty { "-".into() } else { v.plain() };
            format!("{k}: {shown}\n")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::default();
        r.note("model", Cell::text("exponential(rate=1)"));
        let mut t = Table::new("point", &["age", "value", "label"]);
        t.push(vec![Cell::Int(1), Cell::Num(1e-7), Cell::text("a,b")]);
        t.push(vec![Cell::Int(20), Cell::Fixed(76.6789, 2), Cell::Empty]);
        r.tables.push(t);
        r
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.5, 1e-7, -3.733241996799001e32, 76.68, 0.1 + 0.2] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_quotes_and_fixed_decimals() {
        assert_eq!(
            sample().render(Format::Csv),
            "# model: exponential(rate=1)\nage,value,label\n1,1e-7,\"a,b\"\n20,76.68,\n"
        );
    }

    #[test]
    fn json_lines_are_objects() {
        let text = sample().render(Format::JsonLines);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.is_object());
        }
        assert!(text.contains("\"label\":null"));
    }

    #[test]
    fn human_aligns_columns() {
        let text = sample().render(Format::Human);
        assert_eq!(
            text,
            "model: exponential(rate=1)\n\nage  value  label\n  1   1e-7    a,b\n 20  76.68      -\n"
        );
    }
}
