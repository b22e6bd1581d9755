//! Bit-exact file formats and text exports.
//!
//! Grid: ASCII header "RGRID 1 <n> <L>\n" then n^2 little-endian f64,
//! row-major. Sinogram: "RSINO 1 <m> <p_count> <R>\n" then the m direction
//! weights, then m*p_count values, angle-major. Crosscuts are CSV
//! "coordinate,value" lines; image export is binary 8-bit PGM (P5).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::radon::Sinogram;

const GRID_MAGIC: &str = "RGRID 1";
const SINO_MAGIC: &str = "RSINO 1";

fn write_f64s(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for &v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s(r: &mut impl Read, count: usize, what: &str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::format(format!("truncated payload: expected {count} {what} values")))?;
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::format(format!("non-finite {what} value in file")));
    }
    Ok(values)
}

fn read_header_line(r: &mut impl BufRead) -> Result<Vec<String>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(Error::format("missing header line"));
    }
    Ok(line.trim_end().split_whitespace().map(str::to_owned).collect())
}

pub fn write_grid(path: &Path, img: &ImageGrid) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    // `{}` prints the shortest round-trip decimal, so L survives exactly.
    write!(w, "{GRID_MAGIC} {} {}\n", img.n(), img.half_extent())?;
    write_f64s(&mut w, img.values())?;
    w.flush()?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<ImageGrid> {
    let mut r = BufReader::new(File::open(path)?);
    let fields = read_header_line(&mut r)?;
    if fields.len() != 4 || fields[0] != "RGRID" || fields[1] != "1" {
        return Err(Error::format(format!("bad grid magic in {}", path.display())));
    }
    let n: usize = fields[2]
        .parse()
        .map_err(|_| Error::format("bad grid size in header"))?;
    let l: f64 = fields[3]
        .parse()
        .map_err(|_| Error::format("bad half extent in header"))?;
    let values = read_f64s(&mut r, n * n, "grid")?;
    ImageGrid::new(n, l, values).map_err(|e| Error::format(e.to_string()))
}

pub fn write_sino(path: &Path, sino: &Sinogram) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(
        w,
        "{SINO_MAGIC} {} {} {}\n",
        sino.m(),
        sino.p_count(),
        sino.p_half_extent()
    )?;
    write_f64s(&mut w, sino.psi_mask())?;
    write_f64s(&mut w, sino.values())?;
    w.flush()?;
    Ok(())
}

pub fn read_sino(path: &Path) -> Result<Sinogram> {
    let mut r = BufReader::new(File::open(path)?);
    let fields = read_header_line(&mut r)?;
    if fields.len() != 5 || fields[0] != "RSINO" || fields[1] != "1" {
        return Err(Error::format(format!("bad sinogram magic in {}", path.display())));
    }
    let m: usize = fields[2]
        .parse()
        .map_err(|_| Error::format("bad angle count in header"))?;
    let p_count: usize = fields[3]
        .parse()
        .map_err(|_| Error::format("bad p count in header"))?;
    let rr: f64 = fields[4]
        .parse()
        .map_err(|_| Error::format("bad p half extent in header"))?;
    let psi_mask = read_f64s(&mut r, m, "mask")?;
    let values = read_f64s(&mut r, m * p_count, "sinogram")?;
    Sinogram::new(m, p_count, rr, values, psi_mask).map_err(|e| Error::format(e.to_string()))
}

pub fn write_csv_crosscut(path: &Path, coords: &[f64], values: &[f64]) -> Result<()> {
    if coords.len() != values.len() {
        return Err(Error::bad_argument("crosscut coordinate/value length mismatch"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "coordinate,value")?;
    for (c, v) in coords.iter().zip(values) {
        writeln!(w, "{c},{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv_crosscut(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = BufReader::new(File::open(path)?);
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if idx == 0 && line.starts_with("coordinate") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let c: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::format(format!("bad crosscut line {}", idx + 1)))?;
        let v: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::format(format!("bad crosscut line {}", idx + 1)))?;
        if !c.is_finite() || !v.is_finite() {
            return Err(Error::format(format!("non-finite crosscut entry on line {}", idx + 1)));
        }
        coords.push(c);
        values.push(v);
    }
    Ok((coords, values))
}

/// 8-bit grayscale PGM, affine-rescaled so lo -> 0 and hi -> 255 with
/// clamping.
pub fn write_image8(path: &Path, img: &ImageGrid, lo: f64, hi: f64) -> Result<()> {
    if !(hi > lo) {
        return Err(Error::bad_argument("image export range must satisfy hi > lo"));
    }
    let n = img.n();
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{n} {n}\n255\n")?;
    let scale = 255.0 / (hi - lo);
    let mut bytes = Vec::with_capacity(n * n);
    for &v in img.values() {
        bytes.push(((v - lo) * scale).round().clamp(0.0, 255.0) as u8);
    }
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Nearest-row crosscut at height x2; coordinates are the x1 cell centers.
pub fn crosscut_row(img: &ImageGrid, x2: f64) -> (Vec<f64>, Vec<f64>) {
    let n = img.n();
    let i = nearest_index(x2, n, img.half_extent());
    let coords = (0..n).map(|j| img.axis_coord(j)).collect();
    let values = img.row(i).to_vec();
    (coords, values)
}

/// Nearest-column crosscut at offset x1; coordinates are the x2 cell centers.
pub fn crosscut_col(img: &ImageGrid, x1: f64) -> (Vec<f64>, Vec<f64>) {
    let n = img.n();
    let j = nearest_index(x1, n, img.half_extent());
    let coords = (0..n).map(|i| img.axis_coord(i)).collect();
    let values = (0..n).map(|i| img.get(i, j)).collect();
    (coords, values)
}

/// Nearest-cell samples along the line through `origin` with direction
/// (cos angle, sin angle); the coordinate is the signed arc length from
/// `origin`, stepped at one cell size across the full grid diagonal.
pub fn crosscut_angle(img: &ImageGrid, angle: f64, origin: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
    let cell = img.cell_size();
    let l = img.half_extent();
    let n = img.n() as isize;
    let (c, s) = (angle.cos(), angle.sin());
    let t_max = (2.0f64).sqrt() * l;
    let steps = (t_max / cell).ceil() as i64;
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for k in -steps..=steps {
        let t = k as f64 * cell;
        let x1 = origin[0] + t * c;
        let x2 = origin[1] + t * s;
        let j = ((x1 + l) / cell - 0.5).round() as isize;
        let i = ((x2 + l) / cell - 0.5).round() as isize;
        if i >= 0 && i < n && j >= 0 && j < n {
            coords.push(t);
            values.push(img.get(i as usize, j as usize));
        }
    }
    (coords, values)
}

fn nearest_index(x: f64, n: usize, half_extent: f64) -> usize {
    let cell = 2.0 * half_extent / n as f64;
    let idx = ((x + half_extent) / cell - 0.5).round();
    (idx.max(0.0) as usize).min(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::compare;

    #[test]
    fn grid_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.grid");
        let img = ImageGrid::from_fn(16, 1.25, |x1, x2| (x1 * 3.1).sin() * x2).unwrap();
        write_grid(&path, &img).unwrap();
        let back = read_grid(&path).unwrap();
        assert_eq!(back.n(), 16);
        assert_eq!(back.half_extent(), 1.25);
        assert_eq!(back.values(), img.values());
    }

    #[test]
    fn sino_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.sino");
        let values: Vec<f64> = (0..3 * 8).map(|k| (k as f64).sqrt()).collect();
        let mask = vec![1.0, 0.5, 0.0];
        let sino = Sinogram::new(3, 8, 1.1, values.clone(), mask.clone()).unwrap();
        write_sino(&path, &sino).unwrap();
        let back = read_sino(&path).unwrap();
        assert_eq!(back.values(), &values[..]);
        assert_eq!(back.psi_mask(), &mask[..]);
        assert_eq!(back.p_half_extent(), 1.1);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad");
        std::fs::write(&path, b"XGRID 1 4 1.0\n").unwrap();
        assert!(matches!(read_grid(&path), Err(Error::Format(_))));
        assert!(matches!(read_sino(&path), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.grid");
        let mut bytes = b"RGRID 1 4 1\n".to_vec();
        bytes.extend_from_slice(&[0u8; 40]);
        std::fs::write(&path, bytes).unwrap();
        let err = read_grid(&path).unwrap_err();
        assert!(err.to_string().contains("truncated"));
    }

    #[test]
    fn non_finite_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.grid");
        let mut bytes = b"RGRID 1 2 1\n".to_vec();
        for v in [0.0, 1.0, f64::NAN, 2.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_grid(&path), Err(Error::Format(_))));
    }

    #[test]
    fn crosscut_of_constant_grid_is_constant() {
        let img = ImageGrid::from_fn(8, 1.0, |_, _| 3.5).unwrap();
        let (_, row) = crosscut_row(&img, 0.2);
        assert!(row.iter().all(|&v| v == 3.5));
        let (_, diag) = crosscut_angle(&img, 0.7, [0.0, 0.0]);
        assert!(!diag.is_empty() && diag.iter().all(|&v| v == 3.5));
    }

    #[test]
    fn crosscut_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cut.csv");
        let img = ImageGrid::from_fn(8, 1.0, |x1, x2| x1 + 10.0 * x2).unwrap();
        let (coords, values) = crosscut_col(&img, -0.3);
        write_csv_crosscut(&path, &coords, &values).unwrap();
        let (c2, v2) = read_csv_crosscut(&path).unwrap();
        assert_eq!(coords, c2);
        assert_eq!(values, v2);
    }

    #[test]
    fn image8_ramp_is_monotone_full_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ramp.pgm");
        let img = ImageGrid::from_fn(16, 1.0, |x1, _| x1).unwrap();
        let lo = img.axis_coord(0);
        let hi = img.axis_coord(15);
        write_image8(&path, &img, lo, hi).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header_len = b"P5\n16 16\n255\n".len();
        let row = &bytes[header_len..header_len + 16];
        assert_eq!(row[0], 0);
        assert_eq!(row[15], 255);
        assert!(row.windows(2).all(|w| w[0] <= w[1]));
        // Affine oracle for an interior sample.
        let expected = ((img.get(0, 7) - lo) / (hi - lo) * 255.0).round() as u8;
        assert_eq!(row[7], expected);
    }

    #[test]
    fn grid_file_preserves_comparisons() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.grid");
        let img = ImageGrid::from_fn(32, 0.75, |x1, x2| x1 * x2).unwrap();
        write_grid(&path, &img).unwrap();
        let back = read_grid(&path).unwrap();
        let m = compare(&back, &img, 0.5).unwrap();
        assert_eq!(m.l2_rel, 0.0);
    }
}
