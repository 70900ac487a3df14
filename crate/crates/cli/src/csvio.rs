//! Trajectory CSV files: a header `k,u_0,...,u_{m-1},y_0,...,y_{p-1}` followed by one
//! row per time step.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ddtraj::{Signal, Trajectory};

use crate::error::CliError;

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

fn indexed_columns(names: &[&str], prefix: &str) -> usize {
    names
        .iter()
        .enumerate()
        .take_while(|(i, name)| **name == format!("{prefix}_{i}"))
        .count()
}

/// Returns `(m, p)` for a header row.
fn parse_header(fields: &[&str]) -> Result<(usize, usize), String> {
    if fields.first() != Some(&"k") {
        return Err(format!(
            "header must start with 'k', found '{}'",
            fields.first().unwrap_or(&"")
        ));
    }
    let rest = &fields[1..];
    let m = indexed_columns(rest, "u");
    let p = indexed_columns(&rest[m..], "y");
    if m == 0 || p == 0 || m + p != rest.len() {
        return Err(format!(
            "malformed header '{}': expected k,u_0..u_(m-1),y_0..y_(p-1) with m, p >= 1",
            fields.join(",")
        ));
    }
    Ok((m, p))
}

pub fn read_trajectory<R: Read>(reader: R) -> Result<Trajectory, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_error)?,
        None => {
            return Err(CliError::parse(
                Some(1),
                "empty file, expected a header row",
            ))
        }
    };
    let header_fields: Vec<&str> = header.iter().collect();
    let (m, p) =
        parse_header(&header_fields).map_err(|msg| CliError::parse(Some(line_of(&header)), msg))?;
    let width = 1 + m + p;

    let mut rows: Vec<(i64, u64, Vec<f64>)> = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = line_of(&record);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(CliError::parse(
                Some(line),
                format!("expected {width} columns, found {}", record.len()),
            ));
        }
        let k: i64 = record[0].parse().map_err(|_| {
            CliError::parse(
                Some(line),
                format!("time index '{}' is not an integer", &record[0]),
            )
        })?;
        let values = record
            .iter()
            .skip(1)
            .zip(header_fields.iter().skip(1))
            .map(|(cell, col)| {
                cell.parse::<f64>().map_err(|_| {
                    CliError::parse(
                        Some(line),
                        format!("column {col}: '{cell}' is not a number"),
                    )
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((k, line, values));
    }
    if rows.is_empty() {
        return Err(CliError::parse(None, "no data rows"));
    }

    rows.sort_by_key(|r| r.0);
    for pair in rows.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        if next.0 == prev.0 {
            return Err(CliError::parse(
                Some(prev.1.max(next.1)),
                format!("duplicate time index k={}", next.0),
            ));
        }
        if next.0 != prev.0 + 1 {
            let missing = if next.0 == prev.0 + 2 {
                format!("k={}", prev.0 + 1)
            } else {
                format!("k={}..{}", prev.0 + 1, next.0 - 1)
            };
            return Err(CliError::parse(
                Some(next.1),
                format!("gap in time index: missing {missing}"),
            ));
        }
    }

    let mut u = Vec::with_capacity(rows.len() * m);
    let mut y = Vec::with_capacity(rows.len() * p);
    for (_, _, values) in &rows {
        u.extend_from_slice(&values[..m]);
        y.extend_from_slice(&values[m..]);
    }
    Ok(Trajectory::new(Signal::new(m, u)?, Signal::new(p, y)?)?)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn csv_error(e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line());
    CliError::parse(line, e.to_string())
}

pub fn parse_trajectory_csv(path: &Path) -> Result<Trajectory, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_trajectory(file).map_err(|e| e.in_file(path))
}

fn header(prefix: &str, dim: usize) -> impl Iterator<Item = String> + '_ {
    (0..dim).map(move |i| format!("{prefix}_{i}"))
}

pub fn write_trajectory<W: Write>(writer: W, t: &Trajectory) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut head = vec!["k".to_string()];
    head.extend(header("u", t.input_dim()));
    head.extend(header("y", t.output_dim()));
    w.write_record(&head).map_err(write_error)?;
    for k in 0..t.len() {
        let row = std::iter::once(k.to_string()).chain(
            t.u()
                .at(k)
                .iter()
                .chain(t.y().at(k))
                .map(|&v| format_float(v)),
        );
        w.write_record(row).map_err(write_error)?;
    }
    w.flush()
        .map_err(|e| CliError::usage(format!("write failed: {e}")))
}

pub fn write_trajectory_csv(path: &Path, t: &Trajectory) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_trajectory(file, t)
}

/// Plot data: `k,y_true,y_pred` (indexed column names for vector outputs).
pub fn write_comparison<W: Write>(
    writer: W,
    truth: &Signal,
    predicted: &Signal,
) -> Result<(), CliError> {
    if truth.dim() != predicted.dim() || truth.len() != predicted.len() {
        return Err(CliError::usage(
            "true and predicted outputs differ in shape",
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut head = vec!["k".to_string()];
    if truth.dim() == 1 {
        head.extend(["y_true".to_string(), "y_pred".to_string()]);
    } else {
        head.extend(header("y_true", truth.dim()));
        head.extend(header("y_pred", truth.dim()));
    }
    w.write_record(&head).map_err(write_error)?;
    for k in 0..truth.len() {
        let row = std::iter::once(k.to_string()).chain(
            truth
                .at(k)
                .iter()
                .chain(predicted.at(k))
                .map(|&v| format_float(v)),
        );
        w.write_record(row).map_err(write_error)?;
    }
    w.flush()
        .map_err(|e| CliError::usage(format!("write failed: {e}")))
}

fn write_error(e: csv::Error) -> CliError {
    CliError::usage(format!("write failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Trajectory, CliError> {
        read_trajectory(text.as_bytes())
    }

    fn line(err: CliError) -> Option<u64> {
        match err {
            CliError::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn three_rows() {
        let t = parse("k,u_0,y_0\n0,1,2\n1,3,4\n2,5,6\n").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.u().as_slice(), &[1.0, 3.0, 5.0]);
        assert_eq!(t.y().as_slice(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn rows_may_arrive_out_of_order() {
        let t = parse("k,u_0,y_0\n1,3,4\n0,1,2\n").unwrap();
        assert_eq!(t.u().as_slice(), &[1.0, 3.0]);
    }

    #[test]
    fn vector_columns() {
        let t = parse("k,u_0,u_1,y_0\n0,1,2,3\n1,4,5,6\n").unwrap();
        assert_eq!((t.input_dim(), t.output_dim()), (2, 1));
        assert_eq!(t.u().at(1), &[4.0, 5.0]);
    }

    #[test]
    fn gap_is_reported_with_its_line() {
        let err = parse("k,u_0,y_0\n0,1,2\n2,5,6\n").unwrap_err();
        assert!(err.to_string().contains("missing k=1"), "{err}");
        assert_eq!(line(err), Some(3));
    }

    #[test]
    fn duplicate_is_reported() {
        let err = parse("k,u_0,y_0\n0,1,2\n1,3,4\n1,5,6\n").unwrap_err();
        assert!(
            err.to_string().contains("duplicate time index k=1"),
            "{err}"
        );
        assert_eq!(line(err), Some(4));
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(line(parse("t,u_0,y_0\n0,1,2\n").unwrap_err()), Some(1));
        assert_eq!(line(parse("k,u_1,y_0\n0,1,2\n").unwrap_err()), Some(1));
        assert_eq!(line(parse("k,u_0\n0,1\n").unwrap_err()), Some(1));
        assert_eq!(
            line(parse("k,u_0,y_0\n0,1,2\n1,x,4\n").unwrap_err()),
            Some(3)
        );
        assert_eq!(line(parse("k,u_0,y_0\n0,1,2\n1,3\n").unwrap_err()), Some(3));
        assert_eq!(line(parse("k,u_0,y_0\n0.5,1,2\n").unwrap_err()), Some(2));
        assert!(parse("").is_err());
        assert!(parse("k,u_0,y_0\n").is_err());
    }

    #[test]
    fn write_then_read() {
        let t = parse("k,u_0,y_0\n0,0.1,-2.5e-300\n1,1e21,3\n").unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "k,u_0,y_0\n0,0.1,-2.5e-300\n1,1e21,3.0\n");
        assert_eq!(parse(&text).unwrap(), t);
    }

    #[test]
    fn comparison_header() {
        let a = Signal::from_scalars(&[1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_comparison(&mut buf, &a, &a).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "k,y_true,y_pred\n0,1.0,1.0\n1,2.0,2.0\n"
        );
    }
}
