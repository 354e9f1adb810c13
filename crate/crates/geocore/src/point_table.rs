use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::GeoError;

/// One row of an exposure table: a map-coordinate location plus the numeric
/// attribute vector declared by the table header.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub x: f64,
    pub y: f64,
    pub attributes: Vec<f64>,
}

/// A parsed exposure table. `attribute_names` preserves the header order,
/// which defines the attribute vector layout (G = names.len()).
#[derive(Debug, Clone, PartialEq)]
pub struct PointTable {
    pub attribute_names: Vec<String>,
    pub records: Vec<PointRecord>,
}

/// Read a CSV point table: header row `x,y,<attr...>` then numeric rows.
pub fn read_point_table(path: impl AsRef<Path>) -> Result<PointTable, GeoError> {
    let f = File::open(path.as_ref())?;
    let reader = BufReader::new(f);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| GeoError::parse(1, "empty file, header row is mandatory"))?;
    let header = header?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || !cols[0].eq_ignore_ascii_case("x") || !cols[1].eq_ignore_ascii_case("y") {
        return Err(GeoError::parse(1, "header must start with columns x,y"));
    }
    let attribute_names: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();
    let g = attribute_names.len();

    let mut records = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != g + 2 {
            return Err(GeoError::parse(
                lineno,
                format!("expected {} fields, found {}", g + 2, fields.len()),
            ));
        }
        let mut nums = fields.iter().map(|s| {
            s.parse::<f64>()
                .map_err(|e| GeoError::parse(lineno, format!("bad number {s:?}: {e}")))
        });
        let x = nums.next().unwrap()?;
        let y = nums.next().unwrap()?;
        let attributes = nums.collect::<Result<Vec<f64>, _>>()?;
        records.push(PointRecord { x, y, attributes });
    }
    Ok(PointTable {
        attribute_names,
        records,
    })
}

pub fn write_point_table(table: &PointTable, path: impl AsRef<Path>) -> Result<(), GeoError> {
    let f = File::create(path.as_ref())?;
    let mut w = BufWriter::new(f);
    write!(w, "x,y")?;
    for name in &table.attribute_names {
        write!(w, ",{}", name)?;
    }
    writeln!(w)?;
    for rec in &table.records {
        write!(w, "{},{}", rec.x, rec.y)?;
        for a in &rec.attributes {
            write!(w, ",{}", a)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Index of the record nearest to `query` in Euclidean distance; ties go to
/// the lowest index.
pub fn nearest_point(query: (f64, f64), table: &[PointRecord]) -> Result<usize, GeoError> {
    if table.is_empty() {
        return Err(GeoError::EmptyTable);
    }
    let mut best = 0usize;
    let mut best_d2 = f64::INFINITY;
    for (i, rec) in table.iter().enumerate() {
        let dx = rec.x - query.0;
        let dy = rec.y - query.1;
        let d2 = dx * dx + dy * dy;
        if d2 < best_d2 {
            best_d2 = d2;
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn pt(x: f64, y: f64) -> PointRecord {
        PointRecord {
            x,
            y,
            attributes: vec![],
        }
    }

    #[test]
    fn nearest_basic() {
        let table = vec![pt(0.0, 0.0), pt(10.0, 0.0)];
        assert_eq!(nearest_point((2.0, 1.0), &table).unwrap(), 0);
    }

    #[test]
    fn nearest_tie_breaks_low_index() {
        // indices 3 and 7 equidistant from the query
        let mut table: Vec<PointRecord> = (0..10).map(|i| pt(100.0 + i as f64, 100.0)).collect();
        table[3] = pt(-1.0, 0.0);
        table[7] = pt(1.0, 0.0);
        assert_eq!(nearest_point((0.0, 0.0), &table).unwrap(), 3);
    }

    #[test]
    fn empty_table_errors() {
        assert!(matches!(nearest_point((0.0, 0.0), &[]), Err(GeoError::EmptyTable)));
    }

    #[test]
    fn csv_schema_echo() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("gem.csv");
        std::fs::write(&path, "x,y,rc_frac,age_pre1980\n1.5,2.5,0.25,0.75\n3,4,0.5,0.5\n").unwrap();
        let t = read_point_table(&path).unwrap();
        assert_eq!(t.attribute_names, vec!["rc_frac", "age_pre1980"]);
        assert_eq!(t.records.len(), 2);
        assert_eq!(t.records[0].attributes.len(), 2);
        assert_eq!(t.records[0], PointRecord { x: 1.5, y: 2.5, attributes: vec![0.25, 0.75] });
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("gem.csv");
        let table = PointTable {
            attribute_names: vec!["a".into(), "b".into()],
            records: vec![
                PointRecord { x: 0.125, y: -3.5, attributes: vec![1e-7, 42.0] },
                PointRecord { x: 9.0, y: 9.0, attributes: vec![0.0, -1.25] },
            ],
        };
        write_point_table(&table, &path).unwrap();
        assert_eq!(read_point_table(&path).unwrap(), table);
    }
}
