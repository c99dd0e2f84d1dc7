//! Versioned CSV tables. Every file starts with `# abplab-csv v1 <schema>`,
//! then a header row; reals are written with 17 significant digits so equal
//! inputs give byte-identical files.

use std::io::{BufRead, Write};

use crate::estimates::EstimateReport;
use crate::gallery::BundleRun;
use crate::{Error, Result};

pub use crate::grid::fmt_real;

pub const CSV_MAGIC: &str = "# abplab-csv";
pub const CSV_VERSION: &str = "v1";

/// Schema id and columns of the estimates table.
pub const ESTIMATES_SCHEMA: &str = "estimates";
pub const ESTIMATE_COLUMNS: &[&str] = &[
    "theorem_id",
    "h",
    "profile",
    "params",
    "lhs",
    "rhs_core",
    "empirical_constant",
    "verdict",
    "notes",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub schema: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(schema: &str, columns: &[&str]) -> Self {
        CsvTable {
            schema: schema.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidParameter(format!(
                "row with {} cells for {} columns of `{}`",
                row.len(),
                self.columns.len(),
                self.schema
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{CSV_MAGIC} {CSV_VERSION} {}", self.schema)?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn read(mut input: impl BufRead) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let mut parts = first.trim_end().rsplitn(2, ' ');
        let schema = parts.next().unwrap_or_default().to_string();
        if parts.next() != Some(&format!("{CSV_MAGIC} {CSV_VERSION}")) {
            return Err(Error::Parse(format!(
                "bad table header `{}`",
                first.trim_end()
            )));
        }
        let mut r = csv::ReaderBuilder::new().from_reader(input);
        let parse = |e: csv::Error| Error::Parse(e.to_string());
        let columns = r
            .headers()
            .map_err(parse)?
            .iter()
            .map(String::from)
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(parse)?.iter().map(String::from).collect());
        }
        Ok(CsvTable {
            schema,
            columns,
            rows,
        })
    }
}

fn join_notes(notes: &[String]) -> String {
    notes.join("; ")
}

pub fn estimate_row(r: &EstimateReport) -> Vec<String> {
    vec![
        r.theorem_id.clone(),
        fmt_real(r.h),
        r.profile.clone(),
        r.params.clone(),
        fmt_real(r.lhs),
        fmt_real(r.rhs_core),
        fmt_real(r.empirical_constant),
        r.verdict.to_string(),
        join_notes(&r.notes),
    ]
}

pub fn estimates_table<'a>(reports: impl IntoIterator<Item = &'a EstimateReport>) -> CsvTable {
    let mut t = CsvTable::new(ESTIMATES_SCHEMA, ESTIMATE_COLUMNS);
    t.rows.extend(reports.into_iter().map(estimate_row));
    t
}

/// Bundle outcomes as estimate rows. The verdict column holds the observed
/// label; the notes lead with the expectation and whether it matched.
pub fn bundle_rows(run: &BundleRun) -> Vec<Vec<String>> {
    run.outcomes
        .iter()
        .map(|o| {
            let status = format!(
                "bundle={}; expected={}; {}",
                run.bundle,
                o.expected,
                if o.passed { "pass" } else { "FAIL" }
            );
            match (&o.report, &o.observed) {
                (Some(r), Ok(_)) => {
                    let mut row = estimate_row(r);
                    row[0] = o.id.to_string();
                    row[7] = o.observed_label();
                    let mut notes = vec![status];
                    notes.extend(r.notes.iter().cloned());
                    row[8] = join_notes(&notes);
                    row
                }
                (_, observed) => vec![
                    o.id.to_string(),
                    fmt_real(run.h),
                    String::new(),
                    String::new(),
                    fmt_real(f64::NAN),
                    fmt_real(f64::NAN),
                    fmt_real(f64::NAN),
                    "error".into(),
                    join_notes(&[status, observed.clone().err().unwrap_or_default()]),
                ],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellipticity::EllipticityPair;

    #[test]
    fn round_trip_and_quoting() {
        let pair = EllipticityPair::uniform(1.0, 2.0, 2).unwrap();
        let r = EstimateReport::classify("abp", 0.25, 0.5, 1.0 / 64.0, &pair, "p=inf;q=inf".into())
            .with_note("a, b")
            .with_note("c");
        let t = estimates_table([&r]);
        let s = t.to_csv_string().unwrap();
        assert!(s.starts_with("# abplab-csv v1 estimates\ntheorem_id,h,profile,params,"));
        assert!(s.contains("\"a, b; c\""));
        assert!(s.contains("5.0000000000000000e-1"));
        let back = CsvTable::read(s.as_bytes()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.rows[0][back.column("verdict").unwrap()], "holds");
    }

    #[test]
    fn width_is_enforced() {
        let mut t = CsvTable::new("x", &["a", "b"]);
        assert!(t.push(vec!["1".into()]).is_err());
        assert!(t.push(vec!["1".into(), "2".into()]).is_ok());
        assert!(CsvTable::read("nope\na,b\n".as_bytes()).is_err());
    }
}
