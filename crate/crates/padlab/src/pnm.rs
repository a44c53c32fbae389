//! Binary PPM (P6) reading and PPM/PGM (P6/P5) writing, max value 255.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::richness::Image;

struct HeaderParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderParser<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Result<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.bytes.len() {
            return Err(Error::MalformedImage("truncated header".into()));
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::MalformedImage(format!("bad {what} field")))
    }

    /// Consume the single whitespace byte separating header from raster.
    fn raster(&mut self) -> Result<&'a [u8]> {
        if self.pos >= self.bytes.len() || !self.bytes[self.pos].is_ascii_whitespace() {
            return Err(Error::MalformedImage("missing raster separator".into()));
        }
        self.pos += 1;
        Ok(&self.bytes[self.pos..])
    }
}

/// Read a binary P6 PPM into an RGB image with values in [0, 1].
pub fn read_ppm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    let mut parser = HeaderParser::new(&bytes);
    let magic = parser.token()?;
    if magic != b"P6" {
        return Err(Error::MalformedImage(format!(
            "expected P6 magic, got {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parser.number("width")?;
    let height = parser.number("height")?;
    let maxval = parser.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedImage("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::MalformedImage(format!(
            "unsupported maxval {maxval} (need 1..=255)"
        )));
    }
    let raster = parser.raster()?;
    let expected = width * height * 3;
    if raster.len() < expected {
        return Err(Error::MalformedImage(format!(
            "raster has {} bytes, expected {expected}",
            raster.len()
        )));
    }
    // Interleaved RGB in the file, planar in Image.
    let mut data = vec![0.0f32; expected];
    let plane = width * height;
    for p in 0..plane {
        for c in 0..3 {
            data[c * plane + p] = raster[p * 3 + c] as f32 / maxval as f32;
        }
    }
    Image::new(height, width, data)
}

/// Write a binary P6 PPM with max value 255.
pub fn write_ppm(path: &Path, image: &Image) -> Result<()> {
    let (h, w) = (image.height(), image.width());
    let mut out = Vec::with_capacity(32 + 3 * h * w);
    write!(out, "P6\n{w} {h}\n255\n")?;
    for i in 0..h {
        for j in 0..w {
            for c in 0..3 {
                out.push((image.get(c, i, j) * 255.0).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write a binary P5 PGM with max value 255; `pixels` is row-major.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::ShapeMismatch(format!(
            "pgm pixel count {} != {}",
            pixels.len(),
            width * height
        )));
    }
    let mut out = Vec::with_capacity(32 + pixels.len());
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.extend_from_slice(pixels);
    fs::write(path, out)?;
    Ok(())
}

/// Read a binary P5 PGM back as (width, height, pixels).
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path)?;
    let mut parser = HeaderParser::new(&bytes);
    let magic = parser.token()?;
    if magic != b"P5" {
        return Err(Error::MalformedImage("expected P5 magic".into()));
    }
    let width = parser.number("width")?;
    let height = parser.number("height")?;
    let maxval = parser.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::MalformedImage(format!("unsupported maxval {maxval}")));
    }
    let raster = parser.raster()?;
    if raster.len() < width * height {
        return Err(Error::MalformedImage("truncated raster".into()));
    }
    Ok((width, height, raster[..width * height].to_vec()))
}
