//! CSV ingestion.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("column '{missing}' not found; available columns: {}", available.join(", "))]
    ColumnMissing { missing: String, available: Vec<String> },
    #[error("no complete rows in the selected columns")]
    NoCompleteRows,
    #[error("need at least two columns, got {0}")]
    TooFewColumns(usize),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub columns: Vec<String>,
    /// Row-major `n × k`.
    pub values: Vec<f64>,
    pub rows_dropped: usize,
}

impl Dataset {
    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.columns.len()
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> &[f64] {
        &self.values[..n * self.k()]
    }
}

fn parse_cell(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

/// Loads the named columns (all columns when `columns` is empty), dropping
/// rows with an empty or unparsable cell in any selected column.
pub fn load_csv(path: &Path, columns: &[String]) -> Result<Dataset, DataError> {
    if !path.is_file() {
        return Err(DataError::FileNotFound(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let selected: Vec<String> = if columns.is_empty() { header.clone() } else { columns.to_vec() };
    let idx = selected
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| DataError::ColumnMissing { missing: c.clone(), available: header.clone() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if idx.len() < 2 {
        return Err(DataError::TooFewColumns(idx.len()));
    }
    let mut values = Vec::new();
    let mut rows_dropped = 0;
    let mut row = Vec::with_capacity(idx.len());
    for record in reader.records() {
        let record = record?;
        row.clear();
        row.extend(idx.iter().map_while(|&i| record.get(i).and_then(parse_cell)));
        if row.len() == idx.len() {
            values.extend_from_slice(&row);
        } else {
            rows_dropped += 1;
        }
    }
    if values.is_empty() {
        return Err(DataError::NoCompleteRows);
    }
    Ok(Dataset { columns: selected, values, rows_dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(name: &str, body: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("ccentropy-data-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn drops_incomplete_rows() {
        let p = write("a.csv", "a,b,c\n1,2,x\n3,,5\n6,7,8\nNA,1,2\n9,10,11\n");
        let d = load_csv(&p, &["a".into(), "b".into()]).unwrap();
        assert_eq!(d.values, vec![1.0, 2.0, 6.0, 7.0, 9.0, 10.0]);
        assert_eq!(d.rows_dropped, 2);
        let all = load_csv(&p, &[]).unwrap();
        assert_eq!(all.n(), 2);
        assert_eq!(all.rows_dropped, 3);
    }

    #[test]
    fn reports_missing_columns_and_empty_files() {
        let p = write("b.csv", "glucose,pressure\n");
        assert!(matches!(load_csv(&p, &[]), Err(DataError::NoCompleteRows)));
        let err = load_csv(&p, &["glucos".into(), "pressure".into()]).unwrap_err();
        assert!(err.to_string().contains("glucose, pressure"));
        assert!(matches!(load_csv(Path::new("/nonexistent/x.csv"), &[]), Err(DataError::FileNotFound(_))));
    }
}
