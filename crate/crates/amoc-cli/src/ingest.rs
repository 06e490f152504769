//! CSV ingestion into a [`TimeSeries`].

use std::path::PathBuf;

use amoc_core::TimeSeries;

use crate::CliError;

/// Where and how to read the input series.
#[derive(Debug, Clone)]
pub struct InputSpec {
    pub path: PathBuf,
    /// Column holding the observations. With a header row this is a column
    /// name; without one it is a 1-based column index. May be omitted for
    /// single-column files.
    pub value_column: Option<String>,
    /// Optional column with strictly increasing numeric time labels.
    pub time_column: Option<String>,
    pub delimiter: u8,
    pub header: bool,
}

fn resolve_column(
    headers: Option<&csv::StringRecord>,
    width: usize,
    spec: &str,
) -> Result<usize, CliError> {
    if let Some(headers) = headers {
        if let Some(idx) = headers.iter().position(|h| h == spec) {
            return Ok(idx);
        }
        return Err(CliError::MissingColumn(spec.to_string()));
    }
    match spec.parse::<usize>() {
        Ok(i) if i >= 1 && i <= width => Ok(i - 1),
        _ => Err(CliError::MissingColumn(format!(
            "column index {spec} (file has {width} columns)"
        ))),
    }
}

/// Read the series, attaching labels when a time column is given.
pub fn ingest(spec: &InputSpec) -> Result<TimeSeries, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(spec.header)
        .delimiter(spec.delimiter)
        .trim(csv::Trim::All)
        .from_path(&spec.path)
        .map_err(|e| CliError::Io(format!("{}: {e}", spec.path.display())))?;

    let headers = if spec.header {
        Some(reader.headers().map_err(|e| CliError::Io(e.to_string()))?.clone())
    } else {
        None
    };

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::Parse {
            row: i + 1,
            message: e.to_string(),
        })?;
        records.push(row);
    }
    if records.is_empty() {
        return Err(CliError::Parse {
            row: 1,
            message: "no data rows".into(),
        });
    }
    let width = records[0].len();

    let value_idx = match &spec.value_column {
        Some(name) => resolve_column(headers.as_ref(), width, name)?,
        None if width == 1 => 0,
        None => {
            return Err(CliError::MissingColumn(
                "--value-column is required for multi-column input".into(),
            ))
        }
    };
    let time_idx = spec
        .time_column
        .as_ref()
        .map(|name| resolve_column(headers.as_ref(), width, name))
        .transpose()?;

    let mut values = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for (i, row) in records.iter().enumerate() {
        let parse = |idx: usize| -> Result<f64, CliError> {
            let field = row.get(idx).ok_or(CliError::Parse {
                row: i + 1,
                message: format!("missing field {}", idx + 1),
            })?;
            let v: f64 = field.parse().map_err(|_| CliError::Parse {
                row: i + 1,
                message: format!("cannot parse '{field}' as a number"),
            })?;
            if !v.is_finite() {
                return Err(CliError::Parse {
                    row: i + 1,
                    message: format!("non-finite value '{field}'"),
                });
            }
            Ok(v)
        };
        values.push(parse(value_idx)?);
        if let Some(t) = time_idx {
            labels.push(parse(t)?);
        }
    }

    if time_idx.is_some() {
        if labels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CliError::NonMonotoneTime);
        }
        Ok(TimeSeries::with_labels(values, labels)?)
    } else {
        Ok(TimeSeries::new(values)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(name: &str, contents: &str) -> PathBuf {
        let path = std::env::temp_dir().join(format!("amoc-ingest-{}-{name}", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    fn spec(path: PathBuf) -> InputSpec {
        InputSpec {
            path,
            value_column: Some("soi".into()),
            time_column: Some("year".into()),
            delimiter: b',',
            header: true,
        }
    }

    #[test]
    fn two_column_csv_with_years() {
        let path = write_temp("ok.csv", "year,soi\n1951,0.4\n1952,-0.2\n1953,0.1\n");
        let x = ingest(&spec(path)).unwrap();
        assert_eq!(x.n(), 3);
        assert_eq!(x.label_at(1), Some(1951.0));
        assert_eq!(x.values()[1], -0.2);
    }

    #[test]
    fn nan_row_is_a_parse_error() {
        let path = write_temp("nan.csv", "year,soi\n1951,0.4\n1952,NaN\n1953,0.1\n");
        match ingest(&spec(path)) {
            Err(CliError::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn headerless_single_column() {
        let path = write_temp("plain.csv", "0.5\n-0.25\n0.75\n");
        let x = ingest(&InputSpec {
            path,
            value_column: None,
            time_column: None,
            delimiter: b',',
            header: false,
        })
        .unwrap();
        assert_eq!(x.n(), 3);
        assert!(x.labels().is_none());
    }

    #[test]
    fn non_monotone_time_and_missing_column() {
        let path = write_temp("bad-time.csv", "year,soi\n1951,0.4\n1951,-0.2\n");
        assert!(matches!(ingest(&spec(path)), Err(CliError::NonMonotoneTime)));
        let path = write_temp("no-col.csv", "year,value\n1951,0.4\n1952,0.5\n");
        assert!(matches!(
            ingest(&spec(path)),
            Err(CliError::MissingColumn(_))
        ));
    }
}
