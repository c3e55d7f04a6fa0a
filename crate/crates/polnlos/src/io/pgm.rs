//! 16-bit binary PGM (P5) images.
//!
//! Pixel values in [0, 1] are quantized linearly onto [0, 65535];
//! samples are stored big-endian per the netpbm convention.

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::ImageBuffer;

const MAXVAL: u32 = 65535;

pub fn write_pgm(image: &ImageBuffer, path: &Path) -> Result<()> {
    let mut buf = format!("P5\n{} {}\n{}\n", image.width, image.height, MAXVAL).into_bytes();
    for p in &image.pixels {
        let q = (p * MAXVAL as f64).round() as u16;
        buf.extend_from_slice(&q.to_be_bytes());
    }
    super::atomic_write(path, &buf)
}

/// Pull the next whitespace-delimited ASCII token, skipping `#` comment
/// lines, and advance `pos` past it.
fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
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
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::ImageFormat("header ended prematurely".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

pub fn read_pgm(path: &Path) -> Result<ImageBuffer> {
    let bytes = std::fs::read(path)?;
    let mut pos = 0usize;
    let magic = next_token(&bytes, &mut pos)?;
    if magic != "P5" {
        return Err(Error::ImageFormat(format!(
            "bad magic {magic:?}, expected \"P5\""
        )));
    }
    let parse_dim = |token: String, what: &str| -> Result<usize> {
        token
            .parse::<usize>()
            .map_err(|_| Error::ImageFormat(format!("invalid {what} {token:?}")))
    };
    let width = parse_dim(next_token(&bytes, &mut pos)?, "width")?;
    let height = parse_dim(next_token(&bytes, &mut pos)?, "height")?;
    let maxval = parse_dim(next_token(&bytes, &mut pos)?, "maxval")?;
    if maxval != MAXVAL as usize {
        return Err(Error::ImageFormat(format!(
            "unsupported maxval {maxval}, expected {MAXVAL}"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::ImageFormat("missing raster separator".into()));
    }
    pos += 1;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(2))
        .ok_or_else(|| Error::ImageFormat(format!("dimension overflow: {width} x {height}")))?;
    let raster = &bytes[pos..];
    if raster.len() != expected {
        return Err(Error::ImageFormat(format!(
            "raster has {} bytes, expected {expected}",
            raster.len()
        )));
    }
    let pixels = raster
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / MAXVAL as f64)
        .collect();
    ImageBuffer::new(width, height, pixels)
}
