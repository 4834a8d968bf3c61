//! Wide per-subject metric tables: `subject_id` then one column per metric/label pair.

use std::collections::HashSet;
use std::io::{Read, Write};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsCsv {
    columns: Vec<String>,
    subjects: Vec<String>,
    /// Row-major, one entry per (subject, column); `None` is an empty cell.
    cells: Vec<Option<f64>>,
}

/// A column with its undefined cells dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnValues {
    pub values: Vec<f64>,
    pub skipped: usize,
}

impl MetricsCsv {
    pub fn new(columns: Vec<String>) -> Result<Self, CliError> {
        let mut seen = HashSet::new();
        for c in &columns {
            if c == "subject_id" || !seen.insert(c.as_str()) {
                return Err(CliError::Malformed(format!("duplicate column {c:?}")));
            }
        }
        Ok(Self {
            columns,
            subjects: Vec::new(),
            cells: Vec::new(),
        })
    }

    pub fn push_row(&mut self, subject: &str, row: Vec<Option<f64>>) -> Result<(), CliError> {
        if row.len() != self.columns.len() {
            return Err(CliError::Malformed(format!(
                "subject {subject:?}: {} cells for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if self.subjects.iter().any(|s| s == subject) {
            return Err(CliError::Malformed(format!("duplicate subject_id {subject:?}")));
        }
        if let Some(v) = row.iter().flatten().find(|v| !v.is_finite()) {
            return Err(CliError::Malformed(format!("subject {subject:?}: non-finite value {v}")));
        }
        self.subjects.push(subject.to_string());
        self.cells.extend(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<ColumnValues, CliError> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::UnknownColumn {
                name: name.to_string(),
                available: self.columns.join(", "),
            })?;
        let width = self.columns.len();
        let all: Vec<Option<f64>> = (0..self.subjects.len()).map(|r| self.cells[r * width + idx]).collect();
        let values: Vec<f64> = all.iter().flatten().copied().collect();
        let skipped = all.len() - values.len();
        if values.is_empty() {
            return Err(CliError::AllUndefined(name.to_string()));
        }
        Ok(ColumnValues { values, skipped })
    }

    pub fn read<R: Read>(reader: R) -> Result<Self, CliError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("subject_id") {
            return Err(CliError::Malformed("first column must be subject_id".into()));
        }
        let mut table = Self::new(header.iter().skip(1).map(str::to_string).collect())?;
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let subject = record.get(0).unwrap_or_default();
            if subject.is_empty() {
                return Err(CliError::Malformed(format!("row {}: empty subject_id", line + 1)));
            }
            let row = record
                .iter()
                .skip(1)
                .map(|cell| parse_cell(cell).ok_or_else(|| CliError::Malformed(format!("subject {subject:?}: bad number {cell:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            table.push_row(subject, row)?;
        }
        Ok(table)
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["subject_id".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        let width = self.columns.len();
        for (r, subject) in self.subjects.iter().enumerate() {
            let mut record = vec![subject.clone()];
            record.extend(self.cells[r * width..(r + 1) * width].iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_cell(cell: &str) -> Option<Option<f64>> {
    if cell.is_empty() {
        return Some(None);
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some)
}
