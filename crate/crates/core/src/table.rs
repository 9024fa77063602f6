//! Column-major predictor tables and CSV ingestion.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("column `{0}` appears more than once")]
    DuplicateColumn(String),
    #[error("column `{name}` has {got} rows, expected {want}")]
    Ragged { name: String, got: usize, want: usize },
    #[error("row {row}, column `{column}`: cannot parse `{cell}` as a number")]
    NonNumeric { row: usize, column: String, cell: String },
    #[error("{count} row(s) with missing cells (first at row {first})")]
    MissingCells { count: usize, first: usize },
    #[error("table has no columns")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Declared storage type of a column. Factor columns hold numeric category
/// codes and expand to indicator columns in design matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    #[default]
    Numeric,
    Factor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    names: Vec<String>,
    dtypes: Vec<DType>,
    columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn from_columns(cols: Vec<(String, Vec<f64>)>) -> Result<Table, TableError> {
        let n = cols.len();
        Table::with_dtypes(cols, vec![DType::Numeric; n])
    }

    pub fn with_dtypes(cols: Vec<(String, Vec<f64>)>, dtypes: Vec<DType>) -> Result<Table, TableError> {
        assert_eq!(cols.len(), dtypes.len(), "one dtype per column");
        if cols.is_empty() {
            return Err(TableError::Empty);
        }
        let want = cols[0].1.len();
        let mut names = Vec::with_capacity(cols.len());
        let mut columns = Vec::with_capacity(cols.len());
        for (name, values) in cols {
            if names.contains(&name) {
                return Err(TableError::DuplicateColumn(name));
            }
            if values.len() != want {
                return Err(TableError::Ragged {
                    name,
                    got: values.len(),
                    want,
                });
            }
            names.push(name);
            columns.push(values);
        }
        Ok(Table {
            names,
            dtypes,
            columns,
        })
    }

    pub fn nrows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dtypes(&self) -> &[DType] {
        &self.dtypes
    }

    pub fn dtype(&self, col: usize) -> DType {
        self.dtypes[col]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.columns[col]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column_by_name(&self, name: &str) -> Option<&[f64]> {
        self.column_index(name).map(|i| self.column(i))
    }

    pub fn row(&self, row: usize) -> HashMap<String, f64> {
        self.names
            .iter()
            .zip(&self.columns)
            .map(|(n, c)| (n.clone(), c[row]))
            .collect()
    }

    /// New table made of the given rows, in order (repeats allowed).
    pub fn take_rows(&self, rows: &[usize]) -> Table {
        Table {
            names: self.names.clone(),
            dtypes: self.dtypes.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
        }
    }

    pub fn set_dtype(&mut self, name: &str, dtype: DType) -> bool {
        match self.column_index(name) {
            Some(i) => {
                self.dtypes[i] = dtype;
                true
            }
            None => false,
        }
    }

    /// Read a headered CSV. Every cell must parse as a number (factor codes
    /// included); rows with empty cells are rejected and counted.
    pub fn read_csv<R: Read>(reader: R) -> Result<Table, TableError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if names.is_empty() {
            return Err(TableError::Empty);
        }
        let mut columns = vec![Vec::new(); names.len()];
        let mut missing = 0usize;
        let mut first_missing = 0usize;
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row = i + 1;
            if record.iter().any(|c| c.trim().is_empty() || c.trim() == "NA") {
                if missing == 0 {
                    first_missing = row;
                }
                missing += 1;
                continue;
            }
            for (j, cell) in record.iter().enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| TableError::NonNumeric {
                    row,
                    column: names[j].clone(),
                    cell: cell.to_string(),
                })?;
                columns[j].push(v);
            }
        }
        if missing > 0 {
            return Err(TableError::MissingCells {
                count: missing,
                first: first_missing,
            });
        }
        Table::from_columns(names.into_iter().zip(columns).collect())
    }

    pub fn read_csv_path(path: &Path) -> Result<Table, TableError> {
        Table::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TableError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for r in 0..self.nrows() {
            w.write_record(self.columns.iter().map(|c| format!("{}", c[r])))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_numeric_with_coordinates() {
        let csv = "a,b\n1,2\n3,x\n";
        match Table::read_csv(csv.as_bytes()) {
            Err(TableError::NonNumeric { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_missing_cells_with_count() {
        let csv = "a,b\n1,2\n,4\n5,\n6,7\n";
        match Table::read_csv(csv.as_bytes()) {
            Err(TableError::MissingCells { count, first }) => {
                assert_eq!(count, 2);
                assert_eq!(first, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ragged_and_duplicate() {
        assert!(matches!(
            Table::from_columns(vec![("a".into(), vec![1.0]), ("b".into(), vec![])]),
            Err(TableError::Ragged { .. })
        ));
        assert!(matches!(
            Table::from_columns(vec![("a".into(), vec![1.0]), ("a".into(), vec![2.0])]),
            Err(TableError::DuplicateColumn(_))
        ));
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in prop::collection::vec((any::<f64>(), -1e6f64..1e6), 1..20)) {
            let rows: Vec<_> = rows.into_iter().filter(|r| r.0.is_finite()).collect();
            prop_assume!(!rows.is_empty());
            let t = Table::from_columns(vec![
                ("x".into(), rows.iter().map(|r| r.0).collect()),
                ("y".into(), rows.iter().map(|r| r.1).collect()),
            ]).unwrap();
            let mut buf = Vec::new();
            t.write_csv(&mut buf).unwrap();
            let back = Table::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
