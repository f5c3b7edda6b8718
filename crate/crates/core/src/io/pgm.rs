//! Binary 8-bit PGM (P5) for intensity images in [0, 1].

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub fn write_pgm(path: &Path, image: &Grid) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    bytes.extend(
        image
            .as_slice()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_pgm(path: &Path) -> Result<Grid> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let fmt = |reason: &str| Error::Format {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let (header, rest) = split_header(&bytes, 4).ok_or_else(|| fmt("truncated header"))?;
    if header.first().map(String::as_str) != Some("P5") {
        return Err(fmt("not a P5 PGM"));
    }
    let w: usize = header[1].parse().map_err(|_| fmt("bad width"))?;
    let h: usize = header[2].parse().map_err(|_| fmt("bad height"))?;
    let maxval: u32 = header[3].parse().map_err(|_| fmt("bad maxval"))?;
    if maxval != 255 {
        return Err(fmt("only maxval 255 is supported"));
    }
    if rest.len() < w * h {
        return Err(fmt("truncated pixel data"));
    }
    let data = rest[..w * h].iter().map(|&b| b as f32 / 255.0).collect();
    Grid::from_vec(w, h, data)
}

/// Split `count` whitespace-separated header tokens off a PNM byte stream;
/// returns the tokens and the raster that follows the single whitespace
/// after the last token. Comment lines (#) are skipped.
pub(super) fn split_header(bytes: &[u8], count: usize) -> Option<(Vec<String>, &[u8])> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return None;
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // Exactly one whitespace byte separates the header from the raster.
    if i >= bytes.len() {
        return None;
    }
    Some((tokens, &bytes[i + 1..]))
}
