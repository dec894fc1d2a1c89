//! Binary field files and 16-bit PGM images.
//!
//! The field format is deliberately dumb: a 16-byte header (8-byte magic
//! `F64GRID\0`, u32 version, u32 layout tag), then u32 edge length `n`,
//! u8 component count (1 or 2), then each component row-major as
//! little-endian f64. Everything the CLI reads or writes round-trips
//! through this one format; the layout tag says how to interpret the
//! payload (plain samples, anisotropic wavelet pyramid, divergence-free
//! coefficients, or a dense square matrix).

use crate::error::{Error, Result};
use crate::grid::{ScalarGrid, VectorGrid};
use crate::wavelets::WaveletPyramid;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"F64GRID\0";
const VERSION: u32 = 1;

/// Payload interpretation tag stored in the header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Grid samples, `data[i][j] = f(j/n, i/n)`.
    Plain,
    /// Anisotropic 2D wavelet pyramid coefficients.
    Pyramid,
    /// Divergence-free frame coefficients (one pyramid, slot 0 zero).
    DivFree,
    /// Dense square matrix, `n` rows of `n` columns.
    Connection,
}

impl Layout {
    fn code(self) -> u32 {
        match self {
            Layout::Plain => 0,
            Layout::Pyramid => 1,
            Layout::DivFree => 2,
            Layout::Connection => 3,
        }
    }

    fn from_code(c: u32) -> Result<Self> {
        match c {
            0 => Ok(Layout::Plain),
            1 => Ok(Layout::Pyramid),
            2 => Ok(Layout::DivFree),
            3 => Ok(Layout::Connection),
            other => Err(Error::BadFormat(format!("unknown layout tag {}", other))),
        }
    }
}

/// Raw decoded field file.
pub struct FieldFile {
    pub layout: Layout,
    pub n: usize,
    pub components: Vec<Vec<f64>>,
}

pub fn write_field(
    path: &Path,
    layout: Layout,
    n: usize,
    components: &[&[f64]],
) -> Result<()> {
    if components.is_empty() || components.len() > 2 {
        return Err(Error::BadFormat(format!(
            "component count {} not in 1..=2",
            components.len()
        )));
    }
    for c in components {
        if c.len() != n * n {
            return Err(Error::SizeMismatch(n * n, c.len()));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&layout.code().to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&[components.len() as u8])?;
    for c in components {
        for v in *c {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::BadFormat("file shorter than header".into()))?;
    if &magic != MAGIC {
        return Err(Error::BadFormat("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::BadFormat(format!("unsupported version {}", version)));
    }
    let layout = Layout::from_code(read_u32(&mut r)?)?;
    let n = read_u32(&mut r)? as usize;
    if n == 0 || n > 1 << 16 {
        return Err(Error::BadFormat(format!("implausible edge length {}", n)));
    }
    let mut cbuf = [0u8; 1];
    r.read_exact(&mut cbuf)
        .map_err(|_| Error::BadFormat("truncated header".into()))?;
    let ncomp = cbuf[0] as usize;
    if ncomp == 0 || ncomp > 2 {
        return Err(Error::BadFormat(format!("component count {} not in 1..=2", ncomp)));
    }
    let mut components = Vec::with_capacity(ncomp);
    let mut buf = vec![0u8; n * n * 8];
    for _ in 0..ncomp {
        r.read_exact(&mut buf)
            .map_err(|_| Error::BadFormat("truncated payload".into()))?;
        let vals = buf
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        components.push(vals);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::BadFormat("trailing bytes after payload".into()));
    }
    Ok(FieldFile { layout, n, components })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::BadFormat("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

pub fn write_scalar(path: &Path, g: &ScalarGrid, layout: Layout) -> Result<()> {
    write_field(path, layout, g.n(), &[g.as_slice()])
}

pub fn read_scalar(path: &Path) -> Result<(ScalarGrid, Layout)> {
    let f = read_field(path)?;
    if f.components.len() != 1 {
        return Err(Error::BadFormat("expected 1 component".into()));
    }
    let mut comps = f.components;
    let g = ScalarGrid::from_vec(f.n, comps.pop().unwrap())?;
    Ok((g, f.layout))
}

pub fn write_vector(path: &Path, v: &VectorGrid, layout: Layout) -> Result<()> {
    write_field(path, layout, v.n(), &[v.u1.as_slice(), v.u2.as_slice()])
}

pub fn read_vector(path: &Path) -> Result<(VectorGrid, Layout)> {
    let f = read_field(path)?;
    if f.components.len() != 2 {
        return Err(Error::BadFormat("expected 2 components".into()));
    }
    let mut comps = f.components;
    let u2 = ScalarGrid::from_vec(f.n, comps.pop().unwrap())?;
    let u1 = ScalarGrid::from_vec(f.n, comps.pop().unwrap())?;
    Ok((VectorGrid::new(u1, u2)?, f.layout))
}

pub fn write_pyramid(path: &Path, p: &WaveletPyramid, layout: Layout) -> Result<()> {
    write_field(path, layout, p.n(), &[p.as_slice()])
}

pub fn read_pyramid(path: &Path) -> Result<(WaveletPyramid, Layout)> {
    let f = read_field(path)?;
    if f.components.len() != 1 {
        return Err(Error::BadFormat("expected 1 component".into()));
    }
    let mut comps = f.components;
    let p = WaveletPyramid::from_vec(f.n, comps.pop().unwrap())?;
    Ok((p, f.layout))
}

/// Writes a dense square matrix (row-major) with the `Connection` tag.
pub fn write_matrix(path: &Path, rows: usize, data: &[f64]) -> Result<()> {
    if data.len() != rows * rows {
        return Err(Error::SizeMismatch(rows * rows, data.len()));
    }
    write_field(path, Layout::Connection, rows, &[data])
}

pub fn read_matrix(path: &Path) -> Result<(usize, Vec<f64>)> {
    let f = read_field(path)?;
    if f.layout != Layout::Connection || f.components.len() != 1 {
        return Err(Error::BadFormat("expected a connection-layout matrix".into()));
    }
    let mut comps = f.components;
    Ok((f.n, comps.pop().unwrap()))
}

/// Writes a 16-bit binary PGM (`P5`, maxval 65535, big-endian samples),
/// mapping `[lo, hi]` linearly onto the sample range with clamping.
pub fn write_pgm16(path: &Path, g: &ScalarGrid, lo: f64, hi: f64) -> Result<()> {
    if !(hi > lo) {
        return Err(Error::BadFormat("empty PGM value range".into()));
    }
    let n = g.n();
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n65535\n", n, n)?;
    let scale = 65535.0 / (hi - lo);
    for v in g.as_slice() {
        let q = ((v - lo) * scale).round().clamp(0.0, 65535.0) as u16;
        w.write_all(&q.to_be_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a binary PGM into `[0, 1]` samples (value / maxval). Requires a
/// square power-of-two image; accepts 8-bit or 16-bit sample depth and
/// `#` comments in the header.
pub fn read_pgm16(path: &Path) -> Result<ScalarGrid> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(Error::BadFormat("not a binary PGM".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for f in fields.iter_mut() {
        *f = next_pgm_int(&bytes, &mut pos)?;
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let (w, h, maxval) = (fields[0], fields[1], fields[2]);
    if w != h {
        return Err(Error::BadFormat(format!("PGM is {}x{}, need square", w, h)));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::BadFormat(format!("bad PGM maxval {}", maxval)));
    }
    let wide = maxval > 255;
    let needed = w * h * if wide { 2 } else { 1 };
    if bytes.len() < pos + needed {
        return Err(Error::BadFormat("truncated PGM raster".into()));
    }
    let raster = &bytes[pos..pos + needed];
    let mut data = Vec::with_capacity(w * h);
    if wide {
        for px in raster.chunks_exact(2) {
            data.push(u16::from_be_bytes([px[0], px[1]]) as f64 / maxval as f64);
        }
    } else {
        for px in raster {
            data.push(*px as f64 / maxval as f64);
        }
    }
    ScalarGrid::from_vec(w, data)
}

fn next_pgm_int(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return Err(Error::BadFormat("malformed PGM header".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::BadFormat("malformed PGM header".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn tmp(name: &str) -> PathBuf {
        static COUNTER: AtomicUsize = AtomicUsize::new(0);
        let id = COUNTER.fetch_add(1, Ordering::Relaxed);
        std::env::temp_dir().join(format!(
            "fbmflow_io_{}_{}_{}",
            std::process::id(),
            id,
            name
        ))
    }

    fn sample_grid(n: usize) -> ScalarGrid {
        ScalarGrid::from_fn(n, |i, j| (i * n + j) as f64 * 0.25 - 3.0).unwrap()
    }

    #[test]
    fn scalar_round_trip_is_bit_exact() {
        let g = sample_grid(8);
        let p = tmp("scalar.f64");
        write_scalar(&p, &g, Layout::Plain).unwrap();
        let (back, layout) = read_scalar(&p).unwrap();
        assert_eq!(layout, Layout::Plain);
        assert_eq!(g.as_slice(), back.as_slice());
        std::fs::remove_file(&p).ok();
    }

    #[test]
    fn vector_round_trip() {
        let v = VectorGrid::new(sample_grid(8), sample_grid(8)).unwrap();
        let p = tmp("vec.f64");
        write_vector(&p, &v, Layout::Plain).unwrap();
        let (back, _) = read_vector(&p).unwrap();
        assert_eq!(v.u1.as_slice(), back.u1.as_slice());
        assert_eq!(v.u2.as_slice(), back.u2.as_slice());
        std::fs::remove_file(&p).ok();
    }

    #[test]
    fn pyramid_layout_tag_survives() {
        let n = 8;
        let pyr = WaveletPyramid::from_vec(n, (0..n * n).map(|i| i as f64).collect()).unwrap();
        let p = tmp("pyr.f64");
        write_pyramid(&p, &pyr, Layout::DivFree).unwrap();
        let (back, layout) = read_pyramid(&p).unwrap();
        assert_eq!(layout, Layout::DivFree);
        assert_eq!(pyr.as_slice(), back.as_slice());
        std::fs::remove_file(&p).ok();
    }

    #[test]
    fn matrix_round_trip() {
        let rows = 6;
        let data: Vec<f64> = (0..rows * rows).map(|i| (i as f64).sin()).collect();
        let p = tmp("mat.f64");
        write_matrix(&p, rows, &data).unwrap();
        let (r, back) = read_matrix(&p).unwrap();
        assert_eq!(r, rows);
        assert_eq!(back, data);
        std::fs::remove_file(&p).ok();
    }

    #[test]
    fn malformed_files_are_rejected() {
        let g = sample_grid(4);
        let p = tmp("bad.f64");
        write_scalar(&p, &g, Layout::Plain).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();

        // wrong magic
        let p2 = tmp("badmagic.f64");
        let mut b2 = bytes.clone();
        b2[0] = b'X';
        std::fs::write(&p2, &b2).unwrap();
        assert!(matches!(read_field(&p2), Err(Error::BadFormat(_))));

        // unsupported version
        let p3 = tmp("badver.f64");
        let mut b3 = bytes.clone();
        b3[8] = 9;
        std::fs::write(&p3, &b3).unwrap();
        assert!(matches!(read_field(&p3), Err(Error::BadFormat(_))));

        // unknown layout tag
        let p4 = tmp("badlayout.f64");
        let mut b4 = bytes.clone();
        b4[12] = 7;
        std::fs::write(&p4, &b4).unwrap();
        assert!(matches!(read_field(&p4), Err(Error::BadFormat(_))));

        // truncated payload
        let p5 = tmp("trunc.f64");
        let b5 = bytes[..bytes.len() - 3].to_vec();
        std::fs::write(&p5, &b5).unwrap();
        assert!(matches!(read_field(&p5), Err(Error::BadFormat(_))));

        // trailing bytes
        let p6 = tmp("trail.f64");
        bytes.push(0);
        std::fs::write(&p6, &bytes).unwrap();
        assert!(matches!(read_field(&p6), Err(Error::BadFormat(_))));

        for q in [&p, &p2, &p3, &p4, &p5, &p6] {
            std::fs::remove_file(q).ok();
        }
    }

    #[test]
    fn pgm_round_trip_quantizes() {
        let n = 16;
        let g = ScalarGrid::from_fn(n, |i, j| (i + 2 * j) as f64 / (3 * n) as f64).unwrap();
        let p = tmp("img.pgm");
        write_pgm16(&p, &g, 0.0, 1.0).unwrap();
        let back = read_pgm16(&p).unwrap();
        for (a, b) in g.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-12);
        }
        std::fs::remove_file(&p).ok();
    }

    #[test]
    fn pgm_parser_tolerates_comments_and_8bit() {
        let p = tmp("comment.pgm");
        let mut bytes = b"P5 # wide\n# comment line\n4 4\n255\n".to_vec();
        bytes.extend((0u8..16).map(|v| v * 16));
        std::fs::write(&p, &bytes).unwrap();
        let g = read_pgm16(&p).unwrap();
        assert_eq!(g.n(), 4);
        assert!((g.at(0, 1) - 16.0 / 255.0).abs() < 1e-12);
        std::fs::remove_file(&p).ok();

        let p2 = tmp("rect.pgm");
        let mut b2 = b"P5\n4 2\n255\n".to_vec();
        b2.extend([0u8; 8]);
        std::fs::write(&p2, &b2).unwrap();
        assert!(read_pgm16(&p2).is_err());
        std::fs::remove_file(&p2).ok();
    }

    #[test]
    fn pgm_scaling_clamps() {
        let n = 4;
        let g = ScalarGrid::from_fn(n, |i, _| i as f64 - 1.5).unwrap();
        let p = tmp("clamp.pgm");
        write_pgm16(&p, &g, -1.0, 1.0).unwrap();
        let back = read_pgm16(&p).unwrap();
        assert_eq!(back.at(0, 0), 0.0);
        assert_eq!(back.at(3, 0), 1.0);
        assert!(write_pgm16(&p, &g, 1.0, 1.0).is_err());
        std::fs::remove_file(&p).ok();
    }
}
