use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::GeoError;
use crate::raster::Raster;
use crate::transform::GeoTransform;

/// Read an ESRI ASCII grid.
///
/// Expected header keys (case-insensitive): `ncols`, `nrows`, `xllcorner`,
/// `yllcorner`, `cellsize`, optional `NODATA_value`; then `nrows` rows of
/// `ncols` whitespace-separated values, row 0 northernmost.
pub fn read_ascii_grid(path: impl AsRef<Path>) -> Result<Raster, GeoError> {
    let f = File::open(path.as_ref())?;
    let reader = BufReader::new(f);

    let mut ncols: Option<usize> = None;
    let mut nrows: Option<usize> = None;
    let mut xll: Option<f64> = None;
    let mut yll: Option<f64> = None;
    let mut cellsize: Option<f64> = None;
    let mut nodata: Option<f32> = None;
    let mut values: Vec<f32> = Vec::new();
    let mut in_header = true;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else { continue };

        if in_header {
            let key = first.to_ascii_lowercase();
            let header_val = |tok: Option<&str>| -> Result<f64, GeoError> {
                tok.ok_or_else(|| GeoError::parse(lineno, format!("missing value for {key}")))?
                    .parse::<f64>()
                    .map_err(|e| GeoError::parse(lineno, format!("bad {key}: {e}")))
            };
            match key.as_str() {
                "ncols" => {
                    ncols = Some(header_val(tokens.next())? as usize);
                    continue;
                }
                "nrows" => {
                    nrows = Some(header_val(tokens.next())? as usize);
                    continue;
                }
                "xllcorner" => {
                    xll = Some(header_val(tokens.next())?);
                    continue;
                }
                "yllcorner" => {
                    yll = Some(header_val(tokens.next())?);
                    continue;
                }
                "cellsize" => {
                    cellsize = Some(header_val(tokens.next())?);
                    continue;
                }
                "nodata_value" => {
                    nodata = Some(header_val(tokens.next())? as f32);
                    continue;
                }
                _ => in_header = false, // first data row
            }
        }

        for tok in std::iter::once(first).chain(tokens) {
            let v = tok
                .parse::<f32>()
                .map_err(|e| GeoError::parse(lineno, format!("bad cell value {tok:?}: {e}")))?;
            values.push(v);
        }
    }

    let ncols = ncols.ok_or_else(|| GeoError::parse(1, "missing ncols header"))?;
    let nrows = nrows.ok_or_else(|| GeoError::parse(1, "missing nrows header"))?;
    let xll = xll.ok_or_else(|| GeoError::parse(1, "missing xllcorner header"))?;
    let yll = yll.ok_or_else(|| GeoError::parse(1, "missing yllcorner header"))?;
    let cellsize = cellsize.ok_or_else(|| GeoError::parse(1, "missing cellsize header"))?;
    if cellsize <= 0.0 {
        return Err(GeoError::parse(1, "cellsize must be positive"));
    }
    if values.len() != ncols * nrows {
        return Err(GeoError::DimensionMismatch {
            expected: ncols * nrows,
            found: values.len(),
        });
    }

    let transform = GeoTransform::square(xll, yll + nrows as f64 * cellsize, cellsize);
    Raster::new(ncols, nrows, transform, nodata, values)
}

/// Write an ESRI ASCII grid. Values use Rust's shortest round-trip float
/// formatting, so write -> read preserves every f32 bit-exactly. The
/// NODATA_value line is emitted only when the raster declares one.
pub fn write_ascii_grid(r: &Raster, path: impl AsRef<Path>) -> Result<(), GeoError> {
    let t = &r.transform;
    if t.pixel_w != t.pixel_h {
        return Err(GeoError::NonSquarePixel {
            w: t.pixel_w,
            h: t.pixel_h,
        });
    }
    let f = File::create(path.as_ref())?;
    let mut w = BufWriter::new(f);
    writeln!(w, "ncols {}", r.width)?;
    writeln!(w, "nrows {}", r.height)?;
    writeln!(w, "xllcorner {}", t.origin_x)?;
    writeln!(w, "yllcorner {}", t.origin_y - r.height as f64 * t.pixel_h)?;
    writeln!(w, "cellsize {}", t.pixel_w)?;
    if let Some(nd) = r.nodata {
        writeln!(w, "NODATA_value {}", nd)?;
    }
    let mut line = String::new();
    for row in 0..r.height {
        line.clear();
        for col in 0..r.width {
            if col > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{}", r.get(col, row)));
        }
        writeln!(w, "{}", line)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn header_echo() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.asc");
        std::fs::write(
            &path,
            "ncols 2\nnrows 2\nxllcorner 10\nyllcorner 20\ncellsize 2.5\nNODATA_value -9999\n1 2\n3 4\n",
        )
        .unwrap();
        let r = read_ascii_grid(&path).unwrap();
        assert_eq!(r.width, 2);
        assert_eq!(r.height, 2);
        assert_eq!(r.transform.pixel_w, 2.5);
        assert_eq!(r.transform.origin_x, 10.0);
        assert_eq!(r.transform.origin_y, 25.0); // 20 + 2*2.5
        assert_eq!(r.nodata, Some(-9999.0));
        assert_eq!(r.values, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn missing_cell_is_dimension_mismatch() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.asc");
        std::fs::write(
            &path,
            "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2\n3\n",
        )
        .unwrap();
        match read_ascii_grid(&path) {
            Err(GeoError::DimensionMismatch { expected: 4, found: 3 }) => {}
            other => panic!("expected DimensionMismatch, got {:?}", other),
        }
    }

    #[test]
    fn roundtrip_bit_identical() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.asc");
        let vals: Vec<f32> = vec![0.1, -3.75e-5, 1234567.0, f32::MIN_POSITIVE, 42.0, 9.999999e8];
        let r = Raster::new(3, 2, GeoTransform::square(-4.25, 19.5, 0.5), Some(-9999.0), vals)
            .unwrap();
        write_ascii_grid(&r, &path).unwrap();
        let back = read_ascii_grid(&path).unwrap();
        assert_eq!(back, r);
    }
}
