//! Tabular dataset of numeric code metrics with integer severity labels.

use std::collections::HashSet;
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// A feature matrix plus per-row class labels.
///
/// Labels are integers in `[0, n_classes)`; for the severity task 0 is the
/// most critical level and 3 the least critical.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    n_classes: usize,
}

/// Options for CSV ingestion.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Name of the label column. Defaults to `"severity"`.
    pub label_column: String,
    /// When set, labels outside `{0..3}` are rejected at load time.
    pub strict_severity: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: "severity".to_string(),
            strict_severity: false,
        }
    }
}

impl Dataset {
    /// Build a dataset, validating the shape and label invariants.
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        n_classes: usize,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::Shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.ncols()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Data(format!("duplicate feature name '{name}'")));
            }
        }
        if n_classes == 0 {
            return Err(Error::Data("n_classes must be positive".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(Error::Data(format!("label {bad} outside [0, {n_classes})")));
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            n_classes,
        })
    }

    /// Load a dataset from an RFC-4180-style CSV file with a header row.
    ///
    /// The label column is taken from `options.label_column`; every other
    /// column must parse as a finite real number and becomes a feature,
    /// preserving column order.
    pub fn from_csv<P: AsRef<Path>>(path: P, options: &CsvOptions) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::Data(format!("file not found: {}", path.display())));
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::Csv(e.to_string()))?;

        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.is_empty() {
            return Err(Error::Data("missing header row".into()));
        }
        let mut seen = HashSet::new();
        for h in &headers {
            if !seen.insert(h.as_str()) {
                return Err(Error::Data(format!("duplicate header '{h}'")));
            }
        }
        let label_idx = headers
            .iter()
            .position(|h| h == &options.label_column)
            .ok_or_else(|| {
                Error::Data(format!(
                    "label column '{}' not found in header",
                    options.label_column
                ))
            })?;
        let feature_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, h)| h.clone())
            .collect();

        let mut rows: Vec<f64> = Vec::new();
        let mut labels: Vec<usize> = Vec::new();
        for (row_no, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Csv(e.to_string()))?;
            if record.len() != headers.len() {
                return Err(Error::Data(format!(
                    "row {}: {} fields, expected {}",
                    row_no + 1,
                    record.len(),
                    headers.len()
                )));
            }
            for (col, field) in record.iter().enumerate() {
                if col == label_idx {
                    let y: i64 = field.trim().parse().map_err(|_| {
                        Error::Data(format!(
                            "row {}, column '{}': label '{}' is not an integer",
                            row_no + 1,
                            headers[col],
                            field
                        ))
                    })?;
                    if y < 0 || (options.strict_severity && y > 3) {
                        return Err(Error::Data(format!(
                            "row {}: label {} outside the severity range 0..=3",
                            row_no + 1,
                            y
                        )));
                    }
                    labels.push(y as usize);
                } else {
                    let v: f64 = field.trim().parse().map_err(|_| {
                        Error::Data(format!(
                            "row {}, column '{}': '{}' is not numeric",
                            row_no + 1,
                            headers[col],
                            field
                        ))
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Data(format!(
                            "row {}, column '{}': non-finite value",
                            row_no + 1,
                            headers[col]
                        )));
                    }
                    rows.push(v);
                }
            }
        }
        if labels.is_empty() {
            return Err(Error::Data("no rows".into()));
        }
        let n_rows = labels.len();
        let n_features = feature_names.len();
        let features = Array2::from_shape_vec((n_rows, n_features), rows)
            .expect("row-major reshape matches counts");
        // strict severity data always spans the four levels
        let n_classes = if options.strict_severity {
            4
        } else {
            (labels.iter().copied().max().unwrap() + 1).max(2)
        };
        Dataset::new(features, labels, feature_names, n_classes)
    }

    /// Write the dataset back out with the ingestion schema: feature columns
    /// in order, then the label column.
    pub fn to_csv<P: AsRef<Path>>(&self, path: P, label_column: &str) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Csv(e.to_string()))?;
        let mut header: Vec<String> = self.feature_names.clone();
        header.push(label_column.to_string());
        writer
            .write_record(&header)
            .map_err(|e| Error::Csv(e.to_string()))?;
        for (row, &y) in self.features.axis_iter(Axis(0)).zip(&self.labels) {
            let mut record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            record.push(y.to_string());
            writer
                .write_record(&record)
                .map_err(|e| Error::Csv(e.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Per-class row counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Copy out the rows at `indices` as a new feature matrix and label list.
    pub fn select_rows(&self, indices: &[usize]) -> (Array2<f64>, Vec<usize>) {
        let mut x = Array2::zeros((indices.len(), self.n_features()));
        let mut y = Vec::with_capacity(indices.len());
        for (out_row, &i) in indices.iter().enumerate() {
            x.row_mut(out_row).assign(&self.features.row(i));
            y.push(self.labels[i]);
        }
        (x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_two_row_parse() {
        let f = write_temp("a,b,severity\n1.0,2.0,0\n3.5,4.5,1\n");
        let ds = Dataset::from_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.feature_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(ds.features()[(1, 0)], 3.5);
    }

    #[test]
    fn header_only_is_an_error() {
        let f = write_temp("a,b,severity\n");
        let err = Dataset::from_csv(f.path(), &CsvOptions::default()).unwrap_err();
        assert!(err.to_string().contains("no rows"), "{err}");
    }

    #[test]
    fn missing_file_is_an_error() {
        let err = Dataset::from_csv("/nonexistent/nope.csv", &CsvOptions::default()).unwrap_err();
        assert!(err.to_string().contains("not found"), "{err}");
    }

    #[test]
    fn missing_label_column() {
        let f = write_temp("a,b\n1,2\n");
        let err = Dataset::from_csv(f.path(), &CsvOptions::default()).unwrap_err();
        assert!(err.to_string().contains("severity"), "{err}");
    }

    #[test]
    fn duplicate_header_rejected() {
        let f = write_temp("a,a,severity\n1,2,0\n");
        let err = Dataset::from_csv(f.path(), &CsvOptions::default()).unwrap_err();
        assert!(err.to_string().contains("duplicate header"), "{err}");
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let f = write_temp("a,b,severity\n1.0,x,0\n");
        let err = Dataset::from_csv(f.path(), &CsvOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 1") && msg.contains("'b'"), "{msg}");
    }

    #[test]
    fn strict_severity_bounds() {
        let f = write_temp("a,severity\n1.0,7\n");
        let strict = CsvOptions {
            strict_severity: true,
            ..CsvOptions::default()
        };
        assert!(Dataset::from_csv(f.path(), &strict).is_err());
        // non-strict accepts any non-negative integer label
        let ds = Dataset::from_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(ds.n_classes(), 8);
    }

    #[test]
    fn csv_round_trip_preserves_schema() {
        let f = write_temp("loc,depth,severity\n12,3,1\n7,1,0\n9,2,3\n");
        let ds = Dataset::from_csv(f.path(), &CsvOptions::default()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        ds.to_csv(out.path(), "severity").unwrap();
        let ds2 = Dataset::from_csv(out.path(), &CsvOptions::default()).unwrap();
        assert_eq!(ds, ds2);
    }

    #[test]
    fn label_invariant_enforced() {
        let x = Array2::zeros((2, 1));
        let err = Dataset::new(x, vec![0, 4], vec!["a".into()], 4).unwrap_err();
        assert!(err.to_string().contains("outside"), "{err}");
    }
}
