//! Binary PGM (P5) export of encoded images, for visual inspection.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::encode::EncodedImage;
use crate::error::{Error, Result};

/// Write a P5 PGM with maxval 255; gray levels are `round(255 * pixel)`,
/// half away from zero.
pub fn export_pgm(image: &EncodedImage, path: &Path) -> Result<()> {
    let side = image.side();
    let mut out = Vec::with_capacity(side * side + 32);
    out.extend_from_slice(format!("P5\n{side} {side}\n255\n").as_bytes());
    for &p in image.pixels() {
        let byte = (255.0 * p + 0.5).floor().clamp(0.0, 255.0) as u8;
        out.push(byte);
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

/// Read back a P5 PGM written by [`export_pgm`]: (width, height, bytes).
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path)?;
    let header_err = || Error::Data(format!("{}: malformed PGM header", path.display()));
    // Three whitespace-separated header tokens after the magic, then raw data.
    if !bytes.starts_with(b"P5") {
        return Err(header_err());
    }
    let mut fields = Vec::new();
    let mut pos = 2;
    while fields.len() < 3 && pos < bytes.len() {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(
            std::str::from_utf8(&bytes[start..pos])
                .map_err(|_| header_err())?
                .parse::<usize>()
                .map_err(|_| header_err())?,
        );
    }
    if fields.len() != 3 || fields[2] != 255 || pos >= bytes.len() {
        return Err(header_err());
    }
    pos += 1; // single whitespace byte after maxval
    let (w, h) = (fields[0], fields[1]);
    let data = bytes[pos..].to_vec();
    if data.len() != w * h {
        return Err(Error::Data(format!(
            "{}: expected {} pixels, found {}",
            path.display(),
            w * h,
            data.len()
        )));
    }
    Ok((w, h, data))
}
