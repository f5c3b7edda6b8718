//! Portable float map (PFM), grayscale `Pf` variant.
//!
//! Written with scale -1.0 (little-endian), scanlines bottom-to-top per the
//! format convention. Reading honors the scale sign for endianness and
//! applies |scale| as a value multiplier when it is not 1.

use std::fs;
use std::path::Path;

use super::pgm::split_header;
use crate::error::{Error, Result};
use crate::grid::Grid;

pub fn write_pfm(path: &Path, map: &Grid) -> Result<()> {
    let (w, h) = (map.width(), map.height());
    let mut bytes = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    bytes.reserve(w * h * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            bytes.extend_from_slice(&map.get(x, y).to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_pfm(path: &Path) -> Result<Grid> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let fmt = |reason: &str| Error::Format {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let (header, rest) = split_header(&bytes, 4).ok_or_else(|| fmt("truncated header"))?;
    if header.first().map(String::as_str) != Some("Pf") {
        return Err(fmt("not a grayscale Pf PFM"));
    }
    let w: usize = header[1].parse().map_err(|_| fmt("bad width"))?;
    let h: usize = header[2].parse().map_err(|_| fmt("bad height"))?;
    let scale: f32 = header[3].parse().map_err(|_| fmt("bad scale"))?;
    if scale == 0.0 {
        return Err(fmt("scale must be nonzero"));
    }
    if rest.len() < w * h * 4 {
        return Err(fmt("truncated pixel data"));
    }
    let little_endian = scale < 0.0;
    let magnitude = scale.abs();
    let mut grid = Grid::new(w, h, 0.0);
    let mut offset = 0;
    for y in (0..h).rev() {
        for x in 0..w {
            let raw: [u8; 4] = rest[offset..offset + 4].try_into().expect("length checked");
            let mut v = if little_endian { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
            if magnitude != 1.0 {
                v *= magnitude;
            }
            grid.set(x, y, v);
            offset += 4;
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("depth.pfm");
        let map = Grid::from_fn(7, 5, |x, y| 1.0 + x as f32 * 0.25 + y as f32 * 3.125);
        write_pfm(&path, &map).unwrap();
        let back = read_pfm(&path).unwrap();
        assert_eq!(map, back);
    }

    #[test]
    fn header_is_little_endian_scale() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("depth.pfm");
        write_pfm(&path, &Grid::new(2, 2, 3.0)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"Pf\n2 2\n-1.0\n"));
        assert_eq!(bytes.len(), b"Pf\n2 2\n-1.0\n".len() + 16);
    }

    #[test]
    fn reads_big_endian_and_scaled() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("be.pfm");
        let mut bytes = b"Pf\n1 1\n2.0\n".to_vec();
        bytes.extend_from_slice(&1.5f32.to_be_bytes());
        std::fs::write(&path, bytes).unwrap();
        let grid = read_pfm(&path).unwrap();
        assert_eq!(grid.get(0, 0), 3.0);
    }
}
