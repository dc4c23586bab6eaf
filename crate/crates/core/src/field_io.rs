//! Field CSV format.
//!
//! ```text
//! # grid {"group":{"kind":"euclidean","n":1,...},"lo":[-1.0],"hi":[1.0],"points_per_axis":[5]}
//! x0,value
//! -1,0.25
//! ...
//! ```
//!
//! The first line embeds the grid descriptor as JSON. Rows follow in
//! lexicographic node order; coordinates are checked against the descriptor.

use crate::error::{Error, Result};
use crate::field::{GridSpec, SampledField};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

const DESCRIPTOR_PREFIX: &str = "# grid ";

pub fn grid_descriptor(grid: &GridSpec) -> String {
    format!(
        "{DESCRIPTOR_PREFIX}{}",
        serde_json::to_string(grid).expect("grid spec serializes")
    )
}

pub fn parse_grid_descriptor(line: &str) -> std::result::Result<GridSpec, String> {
    let json = line
        .strip_prefix(DESCRIPTOR_PREFIX)
        .ok_or_else(|| format!("expected a line starting with {DESCRIPTOR_PREFIX:?}"))?;
    let grid: GridSpec = serde_json::from_str(json.trim()).map_err(|e| e.to_string())?;
    grid.validated().map_err(|e| e.to_string())
}

pub fn write_field<W: Write>(field: &SampledField, out: W) -> Result<()> {
    let grid = field.grid();
    let io_err = |e: std::io::Error| Error::Io {
        path: "<writer>".into(),
        message: e.to_string(),
    };
    let mut out = out;
    writeln!(out, "{}", grid_descriptor(grid)).map_err(io_err)?;
    let mut writer = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io {
        path: "<writer>".into(),
        message: e.to_string(),
    };
    let mut header = grid.group.axis_names();
    header.push("value".into());
    writer.write_record(&header).map_err(csv_err)?;
    let mut x = vec![0.0; grid.dim()];
    let mut record: Vec<String> = Vec::with_capacity(grid.dim() + 1);
    for (i, v) in field.values().iter().enumerate() {
        grid.node_into(i, &mut x);
        record.clear();
        record.extend(x.iter().map(|c| c.to_string()));
        record.push(v.to_string());
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(io_err)
}

pub fn write_field_file(field: &SampledField, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    write_field(field, std::io::BufWriter::new(file))
}

/// Parses a field; `source` names the input in error messages.
pub fn read_field<R: Read>(input: R, source: &str) -> Result<SampledField> {
    let fail = |row: usize, message: String| Error::FieldFormat {
        path: source.to_string(),
        row,
        message,
    };
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader
        .read_line(&mut first)
        .map_err(|e| fail(1, e.to_string()))?;
    let grid = parse_grid_descriptor(first.trim_end()).map_err(|m| fail(1, m))?;
    let grid = Arc::new(grid);
    let d = grid.dim();

    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv_reader
        .headers()
        .map_err(|e| fail(2, e.to_string()))?
        .clone();
    if header.len() != d + 1 {
        return Err(fail(
            2,
            format!("expected {} columns, found {}", d + 1, header.len()),
        ));
    }

    let n = grid.node_count();
    let mut values = Vec::with_capacity(n);
    let mut node = vec![0.0; d];
    for (i, record) in csv_reader.records().enumerate() {
        // descriptor + header precede the data rows
        let row = i + 3;
        let record = record.map_err(|e| fail(row, e.to_string()))?;
        if i >= n {
            return Err(fail(row, format!("more rows than the {n} grid nodes")));
        }
        if record.len() != d + 1 {
            return Err(fail(
                row,
                format!("expected {} columns, found {}", d + 1, record.len()),
            ));
        }
        let mut nums = Vec::with_capacity(d + 1);
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| fail(row, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(fail(row, format!("non-finite entry {field:?}")));
            }
            nums.push(v);
        }
        grid.node_into(i, &mut node);
        for k in 0..d {
            if (nums[k] - node[k]).abs() > 1e-9 * (1.0 + node[k].abs()) {
                return Err(fail(
                    row,
                    format!(
                        "coordinate {} = {} does not match node value {}",
                        k, nums[k], node[k]
                    ),
                ));
            }
        }
        values.push(nums[d]);
    }
    if values.len() != n {
        return Err(fail(
            values.len() + 3,
            format!("expected {n} rows, found {}", values.len()),
        ));
    }
    SampledField::from_values(grid, values)
}

pub fn read_field_file(path: &Path) -> Result<SampledField> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_field(file, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GroupSpec;
    use proptest::prelude::*;

    fn h1_grid() -> Arc<GridSpec> {
        Arc::new(GridSpec::centered(GroupSpec::heisenberg(), &[1.0, 1.0, 2.0], 5).unwrap())
    }

    proptest! {
        #[test]
        fn csv_round_trip(values in prop::collection::vec(-1e6f64..1e6, 125)) {
            let f = SampledField::from_values(h1_grid(), values).unwrap();
            let mut buf = Vec::new();
            write_field(&f, &mut buf).unwrap();
            let back = read_field(buf.as_slice(), "mem").unwrap();
            prop_assert_eq!(back.values(), f.values());
            prop_assert_eq!(back.grid().as_ref(), f.grid().as_ref());
        }
    }

    #[test]
    fn header_and_descriptor() {
        let f = SampledField::constant(&h1_grid(), 0.5).unwrap();
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# grid {"));
        assert_eq!(lines.next().unwrap(), "x,y,t,value");
        assert_eq!(lines.next().unwrap(), "-1,-1,-2,0.5");
    }

    #[test]
    fn corrupted_rows_are_located() {
        let f = SampledField::constant(&h1_grid(), 1.0).unwrap();
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[6] = "-1,-1,2,abc".into();
        let err = read_field(lines.join("\n").as_bytes(), "bad.csv").unwrap_err();
        match err {
            Error::FieldFormat { path, row, .. } => {
                assert_eq!(path, "bad.csv");
                assert_eq!(row, 7);
            }
            other => panic!("unexpected {other:?}"),
        }

        lines[6] = "-1,-1,2,1".into();
        lines.truncate(10);
        let err = read_field(lines.join("\n").as_bytes(), "short.csv").unwrap_err();
        assert!(matches!(err, Error::FieldFormat { row: 11, .. }), "{err:?}");

        let err = read_field("x,value\n".as_bytes(), "nodesc.csv").unwrap_err();
        assert!(matches!(err, Error::FieldFormat { row: 1, .. }));
    }

    #[test]
    fn misplaced_coordinates_are_rejected() {
        let f = SampledField::constant(&h1_grid(), 1.0).unwrap();
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replacen("-1,-1,-2,1", "-1,-1,-1.5,1", 1);
        let err = read_field(text.as_bytes(), "moved.csv").unwrap_err();
        assert!(matches!(err, Error::FieldFormat { row: 3, .. }));
    }
}
