//! Loader for the UCI Air Quality export: one regression task per hour of
//! the day, CO(GT) as target, five sensor channels plus T and RH as
//! features.
//!
//! The file is semicolon-delimited with decimal commas, `-200` marks a
//! missing reading and the raw export carries two empty trailing columns
//! plus a block of empty trailing rows.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{ProblemData, Task};
use crate::scalar::Scalar;

pub const TARGET_COLUMN: &str = "CO(GT)";
pub const FEATURE_COLUMNS: [&str; 7] = [
    "PT08.S1(CO)",
    "PT08.S2(NMHC)",
    "PT08.S3(NOx)",
    "PT08.S4(NO2)",
    "PT08.S5(O3)",
    "T",
    "RH",
];
const MISSING: f64 = -200.0;
pub const HOURS: usize = 24;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Non-blank data rows read.
    pub rows_read: usize,
    pub rows_kept: usize,
    /// Rows with the `-200` sentinel in any used column.
    pub dropped_missing: usize,
    /// Rows whose Time field has no valid leading hour.
    pub dropped_bad_time: usize,
    pub blank_rows: usize,
}

#[derive(Debug, Clone)]
pub struct AirQuality<T: Scalar> {
    pub data: ProblemData<T>,
    /// Hour of day for each task, ascending.
    pub hours: Vec<u32>,
    pub report: LoadReport,
}

/// Loads a file; see [`parse_air_quality`].
pub fn load_air_quality<T: Scalar>(path: impl AsRef<Path>, strict: bool) -> Result<AirQuality<T>> {
    parse_air_quality(File::open(path)?, strict)
}

/// With `strict`, every one of the 24 hours must keep at least one row.
/// Otherwise hours without rows are left out and `hours` says which remain.
pub fn parse_air_quality<T: Scalar, R: Read>(reader: R, strict: bool) -> Result<AirQuality<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b';')
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    find("Date")?;
    let time_col = find("Time")?;
    let target_col = find(TARGET_COLUMN)?;
    let feature_cols = FEATURE_COLUMNS
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;

    let mut report = LoadReport::default();
    let mut buckets: Vec<(Vec<[f64; 7]>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); HOURS];

    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            report.blank_rows += 1;
            continue;
        }
        report.rows_read += 1;

        let field = |col: usize| record.get(col).unwrap_or("").trim();
        let value = |col: usize| -> Result<f64> {
            let raw = field(col);
            raw.replace(',', ".")
                .parse::<f64>()
                .map_err(|_| Error::Parse {
                    row: line,
                    column: headers[col].clone(),
                    value: raw.to_string(),
                })
        };

        let target = value(target_col)?;
        let mut features = [0.0; 7];
        for (slot, &col) in features.iter_mut().zip(&feature_cols) {
            *slot = value(col)?;
        }
        let Some(hour) = parse_hour(field(time_col)) else {
            report.dropped_bad_time += 1;
            continue;
        };
        if target == MISSING || features.contains(&MISSING) {
            report.dropped_missing += 1;
            continue;
        }
        report.rows_kept += 1;
        let (xs, ys) = &mut buckets[hour as usize];
        xs.push(features);
        ys.push(target);
    }

    let mut tasks = Vec::new();
    let mut hours = Vec::new();
    for (hour, (xs, ys)) in buckets.into_iter().enumerate() {
        if xs.is_empty() {
            if strict {
                return Err(Error::EmptyTask { task: hour });
            }
            continue;
        }
        let x = DMatrix::from_fn(xs.len(), FEATURE_COLUMNS.len(), |i, j| T::lit(xs[i][j]));
        let y = DVector::from_iterator(ys.len(), ys.iter().map(|&v| T::lit(v)));
        tasks.push(Task::new(x, y)?);
        hours.push(hour as u32);
    }
    if tasks.is_empty() {
        return Err(Error::InvalidData(
            "no usable rows in air quality file".into(),
        ));
    }
    Ok(AirQuality {
        data: ProblemData::new(tasks)?,
        hours,
        report,
    })
}

/// Leading hour field of `18.00.00` or `18:00:00`.
fn parse_hour(time: &str) -> Option<u32> {
    let head = time.split(['.', ':']).next()?.trim();
    let hour = head.parse::<u32>().ok()?;
    (hour < HOURS as u32).then_some(hour)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Date;Time;CO(GT);PT08.S1(CO);NMHC(GT);C6H6(GT);PT08.S2(NMHC);NOx(GT);PT08.S3(NOx);NO2(GT);PT08.S4(NO2);PT08.S5(O3);T;RH;AH;;\n";

    fn row(time: &str, co: &str, t: &str) -> String {
        format!(
            "10/03/2004;{time};{co};1360;150;11,9;1046;166;1056;113;1692;1268;{t};48,9;0,7578;;\n"
        )
    }

    #[test]
    fn sentinel_rows_dropped() {
        let text = format!(
            "{HEADER}{}{}{};;;;;;;;;;;;;;;;\n",
            row("10.00.00", "2,6", "13,6"),
            row("10.00.00", "-200", "13,3"),
            row("11.00.00", "2", "11,9"),
        );
        let aq = parse_air_quality::<f64, _>(text.as_bytes(), false).unwrap();
        assert_eq!(aq.hours, vec![10, 11]);
        assert_eq!(aq.data.num_features(), 7);
        assert_eq!(aq.data.task(0).rows(), 1);
        assert_eq!(aq.data.task(0).y[0], 2.6);
        assert_eq!(aq.data.task(0).x[(0, 5)], 13.6);
        assert_eq!(aq.data.task(0).x[(0, 6)], 48.9);
        assert_eq!(aq.data.task(1).y[0], 2.0);
        assert_eq!(aq.report.dropped_missing, 1);
        assert_eq!(aq.report.rows_kept, 2);
        assert_eq!(aq.report.blank_rows, 1);
    }

    #[test]
    fn sentinel_in_feature_dropped() {
        let text = format!(
            "{HEADER}{}{}",
            row("3.00.00", "1,1", "-200"),
            row("3.00.00", "1", "9")
        );
        let aq = parse_air_quality::<f64, _>(text.as_bytes(), false).unwrap();
        assert_eq!(aq.data.task(0).rows(), 1);
        assert_eq!(aq.report.dropped_missing, 1);
    }

    #[test]
    fn strict_mode_requires_all_hours() {
        let text = format!(
            "{HEADER}{}{}",
            row("10.00.00", "2,6", "13"),
            row("11.00.00", "2", "12")
        );
        assert!(matches!(
            parse_air_quality::<f64, _>(text.as_bytes(), true),
            Err(Error::EmptyTask { task: 0 })
        ));
    }

    #[test]
    fn malformed_time_counted() {
        let text = format!(
            "{HEADER}{}{}",
            row("noon", "2,6", "13"),
            row("25.00.00", "2", "12")
        );
        let err = parse_air_quality::<f64, _>(text.as_bytes(), false).unwrap_err();
        assert!(matches!(err, Error::InvalidData(_)));
        let text = format!(
            "{HEADER}{}{}",
            row("noon", "2,6", "13"),
            row("5:00:00", "2", "12")
        );
        let aq = parse_air_quality::<f64, _>(text.as_bytes(), false).unwrap();
        assert_eq!(aq.report.dropped_bad_time, 1);
        assert_eq!(aq.hours, vec![5]);
    }

    #[test]
    fn schema_and_parse_errors() {
        let text = "Date;Time;CO(GT);T;RH\n10/03/2004;18.00.00;2,6;13;48\n";
        assert!(matches!(
            parse_air_quality::<f64, _>(text.as_bytes(), false),
            Err(Error::Schema(_))
        ));
        let text = format!("{HEADER}{}", row("10.00.00", "2,6", "abc"));
        match parse_air_quality::<f64, _>(text.as_bytes(), false) {
            Err(Error::Parse { row, column, value }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "T");
                assert_eq!(value, "abc");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn hour_field() {
        assert_eq!(parse_hour("18.00.00"), Some(18));
        assert_eq!(parse_hour("0:00:00"), Some(0));
        assert_eq!(parse_hour("24.00.00"), None);
        assert_eq!(parse_hour(""), None);
    }
}
