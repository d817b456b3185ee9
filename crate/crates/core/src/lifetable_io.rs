//! One-year death probabilities by integer age, in a fixed CSV dialect.
//!
//! ```text
//! # source: synthetic
//! age,qx
//! 60,0.01
//! 61,0.011
//! ```
//!
//! `#` lines before the header carry `key: value` metadata. Fields are
//! comma-separated, decimals use `.`, lines end in `\n` (a trailing `\r` is
//! tolerated on input). [`emit_lifetable`] writes the canonical form: metadata
//! sorted by key, qx rounded to 10 significant digits.

use std::collections::BTreeMap;

use crate::models::{DistributionSpec, ModelError};

pub const HEADER: &str = "age,qx";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LifeTableError {
    #[error("line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: missing `{HEADER}` header")]
    MissingHeader { line: usize },
    #[error("line {line}: age {age} does not exceed the previous age {previous}")]
    AgeOrder { line: usize, age: u32, previous: u32 },
    #[error("line {line}: qx = {qx} lies outside [0, 1]")]
    QxOutOfRange { line: usize, qx: f64 },
    #[error("row {row}: qx = {qx} lies outside [0, 1]")]
    RowQxOutOfRange { row: usize, qx: f64 },
    #[error("row {row}: age {age} does not exceed the previous age {previous}")]
    RowAgeOrder { row: usize, age: u32, previous: u32 },
    #[error("life table has no rows")]
    Empty,
    #[error("invalid metadata entry {key:?}: {reason}")]
    Metadata { key: String, reason: &'static str },
    #[error("age range {from}..={to} is empty")]
    AgeRange { from: u32, to: u32 },
    #[error("survival to age {0} is zero; no table can start there")]
    EmptySupport(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Rows of `(age, qx)` with strictly increasing ages, plus free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct LifeTable {
    rows: Vec<(u32, f64)>,
    metadata: BTreeMap<String, String>,
}

impl LifeTable {
    /// Rows must already be in strictly increasing age order.
    pub fn new(rows: Vec<(u32, f64)>) -> Result<Self, LifeTableError> {
        if rows.is_empty() {
            return Err(LifeTableError::Empty);
        }
        let mut clean = Vec::with_capacity(rows.len());
        for (i, &(age, qx)) in rows.iter().enumerate() {
            if !(0.0..=1.0).contains(&qx) {
                return Err(LifeTableError::RowQxOutOfRange { row: i + 1, qx });
            }
            if let Some(&(previous, _)) = clean.last() {
                if age <= previous {
                    return Err(LifeTableError::RowAgeOrder {
                        row: i + 1,
                        age,
                        previous,
                    });
                }
            }
            // Folds -0.0 into 0.0 so text and value round-trip alike.
            clean.push((age, qx + 0.0));
        }
        Ok(Self {
            rows: clean,
            metadata: BTreeMap::new(),
        })
    }

    /// Like [`LifeTable::new`] but sorts by age first. Duplicate ages are
    /// still rejected.
    pub fn from_unordered(mut rows: Vec<(u32, f64)>) -> Result<Self, LifeTableError> {
        rows.sort_by_key(|&(age, _)| age);
        Self::new(rows)
    }

    pub fn rows(&self) -> &[(u32, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    /// Adds or replaces a metadata entry. Keys and values are trimmed; keys
    /// may not be empty or contain `:`, and neither may span lines.
    pub fn set_metadata(&mut self, key: &str, value: &str) -> Result<(), LifeTableError> {
        let (key, value) = (key.trim(), value.trim());
        let reason = if key.is_empty() {
            Some("key is empty")
        } else if key.contains(':') {
            Some("key contains ':'")
        } else if key.contains(['\n', '\r']) || value.contains(['\n', '\r']) {
            Some("entry spans lines")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(LifeTableError::Metadata {
                key: key.to_string(),
                reason,
            });
        }
        self.metadata.insert(key.to_string(), value.to_string());
        Ok(())
    }
}

pub fn parse_lifetable(text: &str) -> Result<LifeTable, LifeTableError> {
    let mut metadata = BTreeMap::new();
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));

    let mut header_seen = false;
    for (line, content) in lines.by_ref() {
        if content.trim().is_empty() {
            continue;
        }
        if let Some(entry) = content.strip_prefix('#') {
            let (key, value) = entry.split_once(':').ok_or_else(|| LifeTableError::Malformed {
                line,
                column: 1,
                message: "metadata line must read `# key: value`".into(),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(LifeTableError::Malformed {
                    line,
                    column: 2,
                    message: "metadata key is empty".into(),
                });
            }
            metadata.insert(key.to_string(), value.trim().to_string());
            continue;
        }
        if content.trim() != HEADER {
            return Err(LifeTableError::MissingHeader { line });
        }
        header_seen = true;
        break;
    }
    if !header_seen {
        return Err(LifeTableError::MissingHeader {
            line: text.split('\n').count(),
        });
    }

    let mut rows: Vec<(u32, f64)> = Vec::new();
    for (line, content) in lines {
        if content.trim().is_empty() {
            continue;
        }
        let malformed = |column: usize, message: String| LifeTableError::Malformed {
            line,
            column,
            message,
        };
        if content.starts_with('#') {
            return Err(malformed(1, "metadata must precede the header".into()));
        }
        let Some((age_field, qx_field)) = content.split_once(',') else {
            return Err(malformed(content.len() + 1, "expected two fields `age,qx`".into()));
        };
        let qx_column = age_field.len() + 2;
        if let Some(extra) = qx_field.find(',') {
            return Err(malformed(qx_column + extra, "unexpected third field".into()));
        }
        let age: u32 = age_field
            .trim()
            .parse()
            .map_err(|_| malformed(1, format!("age {:?} is not a non-negative integer", age_field.trim())))?;
        let qx: f64 = qx_field
            .trim()
            .parse()
            .ok()
            .filter(|q: &f64| q.is_finite())
            .ok_or_else(|| malformed(qx_column, format!("qx {:?} is not a decimal number", qx_field.trim())))?;
        if !(0.0..=1.0).contains(&qx) {
            return Err(LifeTableError::QxOutOfRange { line, qx });
        }
        if let Some(&(previous, _)) = rows.last() {
            if age <= previous {
                return Err(LifeTableError::AgeOrder { line, age, previous });
            }
        }
        rows.push((age, qx));
    }

    let mut table = LifeTable::new(rows)?;
    table.metadata = metadata;
    Ok(table)
}

/// Canonical text of `table`.
pub fn emit_lifetable(table: &LifeTable) -> String {
    let mut out = String::new();
    for (key, value) in &table.metadata {
        if value.is_empty() {
            out.push_str(&format!("# {key}:\n"));
        } else {
            out.push_str(&format!("# {key}: {value}\n"));
        }
    }
    out.push_str(HEADER);
    out.push('\n');
    for &(age, qx) in &table.rows {
        out.push_str(&format!("{age},{}\n", canonical_qx(qx)));
    }
    out
}

/// `qx` rounded to 10 significant digits, printed in shortest form.
fn canonical_qx(qx: f64) -> f64 {
    // Parsing a string produced by `{:e}` cannot fail.
    format!("{qx:.9e}").parse::<f64>().unwrap() + 0.0
}

/// Table with `qx = 1 - Φ(x+1)/Φ(x)` for integer ages `from..=to`.
///
/// Computed from the law's log conditional survival, so tiny qx keep full
/// relative precision. If survival reaches zero inside the range the table
/// stops at the last age still alive (whose qx is then 1).
pub fn synthetic_lifetable(spec: &DistributionSpec, from: u32, to: u32) -> Result<LifeTable, LifeTableError> {
    if from >= to {
        return Err(LifeTableError::AgeRange { from, to });
    }
    if spec.log_survival(f64::from(from))? == f64::NEG_INFINITY {
        return Err(LifeTableError::EmptySupport(from));
    }
    let mut rows = Vec::with_capacity((to - from + 1) as usize);
    for age in from..=to {
        let x = f64::from(age);
        match spec.log_conditional_survival(x, 1.0) {
            Ok(lcs) => rows.push((age, -lcs.exp_m1())),
            Err(ModelError::NullEvent(_)) => break,
            Err(e) => return Err(e.into()),
        }
        // Past here Φ(x) = 0 and no later row is defined.
        if rows.last().is_some_and(|&(_, qx)| qx == 1.0) && spec.log_survival(x + 1.0)? == f64::NEG_INFINITY {
            break;
        }
    }
    let last = rows.last().map_or(from, |r| r.0);
    let mut table = LifeTable::new(rows)?;
    table.set_metadata("source", "synthetic")?;
    table.set_metadata("model", &spec.to_string())?;
    table.set_metadata("ages", &format!("{from}-{last}"))?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_rows() {
        let t = parse_lifetable("age,qx\n60,0.01\n61,0.011").unwrap();
        assert_eq!(t.rows(), &[(60, 0.01), (61, 0.011)]);
        assert!(t.metadata().is_empty());
    }

    #[test]
    fn decreasing_age_reports_line_three() {
        let err = parse_lifetable("age,qx\n61,0.01\n60,0.011").unwrap_err();
        assert_eq!(
            err,
            LifeTableError::AgeOrder {
                line: 3,
                age: 60,
                previous: 61
            }
        );
        assert!(err.to_string().starts_with("line 3:"));
    }

    #[test]
    fn duplicate_age_is_rejected() {
        let err = parse_lifetable("age,qx\n60,0.01\n60,0.011\n").unwrap_err();
        assert!(matches!(err, LifeTableError::AgeOrder { line: 3, .. }));
    }

    #[test]
    fn metadata_and_canonical_emit() {
        let text = "# year: 2020\r\n#source:SOA  \n\nage,qx\r\n60, 0.0100000000001\n61,1\n";
        let t = parse_lifetable(text).unwrap();
        assert_eq!(t.metadata()["source"], "SOA");
        assert_eq!(t.metadata()["year"], "2020");
        assert_eq!(emit_lifetable(&t), "# source: SOA\n# year: 2020\nage,qx\n60,0.01\n61,1\n");
    }

    #[test]
    fn malformed_rows_carry_positions() {
        let cases = [
            ("age,qx\n60;0.01\n", 2, 8),
            ("age,qx\nsixty,0.01\n", 2, 1),
            ("age,qx\n60,zero\n", 2, 4),
            ("age,qx\n60,0,01\n", 2, 5),
            ("age,qx\n60,NaN\n", 2, 4),
            ("age,qx\n-1,0.5\n", 2, 1),
            ("# note\nage,qx\n", 1, 1),
        ];
        for (text, line_no, col) in cases {
            match parse_lifetable(text) {
                Err(LifeTableError::Malformed { line, column, .. }) => {
                    assert_eq!((line, column), (line_no, col), "{text:?}")
                }
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn range_and_header_errors() {
        assert_eq!(
            parse_lifetable("age,qx\n60,1.5\n").unwrap_err(),
            LifeTableError::QxOutOfRange { line: 2, qx: 1.5 }
        );
        assert!(matches!(
            parse_lifetable("60,0.01\n"),
            Err(LifeTableError::MissingHeader { line: 1 })
        ));
        assert!(matches!(parse_lifetable("# a: b\n"), Err(LifeTableError::MissingHeader { .. })));
        assert_eq!(parse_lifetable("age,qx\n").unwrap_err(), LifeTableError::Empty);
    }

    #[test]
    fn constructor_checks_rows() {
        assert!(LifeTable::new(vec![(1, 0.1), (1, 0.2)]).is_err());
        assert!(LifeTable::new(vec![(1, -0.1)]).is_err());
        let t = LifeTable::from_unordered(vec![(5, 0.2), (3, 0.1)]).unwrap();
        assert_eq!(t.rows(), &[(3, 0.1), (5, 0.2)]);
        assert!(LifeTable::from_unordered(vec![(5, 0.2), (5, 0.1)]).is_err());
    }

    #[test]
    fn metadata_entries_are_validated() {
        let mut t = LifeTable::new(vec![(0, 0.5)]).unwrap();
        assert!(t.set_metadata("a:b", "x").is_err());
        assert!(t.set_metadata(" ", "x").is_err());
        assert!(t.set_metadata("k", "two\nlines").is_err());
        t.set_metadata(" k ", " v: w ").unwrap();
        assert_eq!(parse_lifetable(&emit_lifetable(&t)).unwrap(), t);
    }

    #[test]
    fn exponential_table_is_flat() {
        let rate = 0.05;
        let spec = DistributionSpec::exponential(rate).unwrap();
        let t = synthetic_lifetable(&spec, 0, 50).unwrap();
        assert_eq!(t.len(), 51);
        let expected = -(-rate).exp_m1();
        for &(_, qx) in t.rows() {
            assert!((qx - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn gompertz_table_increases_and_closes_at_one() {
        let spec = DistributionSpec::gompertz((-25.0f64).exp(), 1.0 / 3.0).unwrap();
        let t = synthetic_lifetable(&spec, 20, 100).unwrap();
        assert_eq!(t.len(), 81);
        // Increasing until rounding pins qx at exactly 1.
        for w in t.rows().windows(2) {
            assert!(w[1].1 > w[0].1 || w[1].1 == 1.0, "{w:?}");
        }
        assert_eq!(t.rows().last().unwrap().1, 1.0);
        assert_eq!(t.metadata()["source"], "synthetic");
        assert!(t.metadata()["model"].starts_with("gompertz("));
    }

    #[test]
    fn uniform_table_stops_at_support_edge() {
        let spec = DistributionSpec::uniform_bounded(10.5).unwrap();
        let t = synthetic_lifetable(&spec, 0, 20).unwrap();
        assert_eq!(t.rows().last().unwrap(), &(10, 1.0));
        assert_eq!(t.metadata()["ages"], "0-10");
        assert_eq!(
            synthetic_lifetable(&spec, 11, 20).unwrap_err(),
            LifeTableError::EmptySupport(11)
        );
        assert!(synthetic_lifetable(&spec, 5, 5).is_err());
    }
}
