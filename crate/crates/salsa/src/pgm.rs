//! Binary (P5) PGM reading and writing, 8-bit samples only.
//!
//! Pixel values are kept on their raw scale, `0..=maxval`; the writer always
//! emits `maxval = 255`, rounding and clamping to `[0, 255]`.

use std::fs;
use std::io;
use std::path::Path;

use salsa_core::ImageBuffer;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed PGM at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("unsupported PGM at byte {offset}: {message}")]
    Unsupported { offset: usize, message: String },
    #[error("truncated PGM raster at byte {offset}: expected {expected} bytes, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
}

impl PgmError {
    /// Byte position the error refers to, if it comes from parsing.
    pub fn offset(&self) -> Option<usize> {
        match self {
            PgmError::Io { .. } => None,
            PgmError::Malformed { offset, .. }
            | PgmError::Unsupported { offset, .. }
            | PgmError::Truncated { offset, .. } => Some(*offset),
        }
    }
}

fn malformed(offset: usize, message: impl Into<String>) -> PgmError {
    PgmError::Malformed {
        offset,
        message: message.into(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    // whitespace and `#` comments between header fields
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, PgmError> {
        self.skip_separators();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(malformed(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(start, format!("{what} out of range")))
    }
}

/// Parses an in-memory P5 file.
pub fn parse_pgm(bytes: &[u8]) -> Result<ImageBuffer, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
            return Err(PgmError::Unsupported {
                offset: 0,
                message: format!("magic number P{} (only binary P5 is read)", bytes[1] as char),
            });
        }
        return Err(malformed(0, "missing P5 magic number"));
    }
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur.bytes.get(cur.pos).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(malformed(cur.pos, "expected whitespace after magic number"));
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval_at = {
        cur.skip_separators();
        cur.pos
    };
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(malformed(maxval_at, format!("image is {width}x{height}")));
    }
    if maxval == 0 {
        return Err(malformed(maxval_at, "maxval must be positive"));
    }
    if maxval > 255 {
        return Err(PgmError::Unsupported {
            offset: maxval_at,
            message: format!("maxval {maxval} needs 16-bit samples"),
        });
    }
    // exactly one whitespace byte before the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(malformed(cur.pos, "expected a single whitespace before raster")),
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| malformed(maxval_at, "image dimensions overflow"))?;
    let raster = &bytes[cur.pos..];
    if raster.len() < expected {
        return Err(PgmError::Truncated {
            offset: cur.pos,
            expected,
            found: raster.len(),
        });
    }
    if let Some(i) = raster[..expected].iter().position(|&v| v as usize > maxval) {
        return Err(malformed(cur.pos + i, format!("sample exceeds maxval {maxval}")));
    }
    let data = raster[..expected].iter().map(|&v| v as f64).collect();
    ImageBuffer::new(height, width, data).map_err(|e| malformed(cur.pos, e.to_string()))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<ImageBuffer, PgmError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| PgmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_pgm(&bytes)
}

/// Rounds to the nearest integer and clamps into `[0, 255]`.
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

pub fn encode_pgm(image: &ImageBuffer) -> Vec<u8> {
    let (h, w) = image.shape();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(image.data().iter().map(|&v| quantize(v)));
    out
}

pub fn write_pgm(image: &ImageBuffer, path: impl AsRef<Path>) -> Result<(), PgmError> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(image)).map_err(|source| PgmError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_with_comments() {
        let mut bytes = b"P5\n# made by hand\n3 2 # w h\n255\n".to_vec();
        bytes.extend([0, 1, 2, 253, 254, 255]);
        let img = parse_pgm(&bytes).unwrap();
        assert_eq!(img.shape(), (2, 3));
        assert_eq!(img.data(), &[0.0, 1.0, 2.0, 253.0, 254.0, 255.0]);
        assert_eq!(encode_pgm(&img)[..], b"P5\n3 2\n255\n\x00\x01\x02\xfd\xfe\xff"[..]);
    }

    #[test]
    fn sixteen_bit_rejected() {
        let err = parse_pgm(b"P5\n2 2\n65535\n").unwrap_err();
        assert!(matches!(err, PgmError::Unsupported { offset: 7, .. }), "{err}");
    }

    #[test]
    fn errors_carry_offsets() {
        let err = parse_pgm(b"P5\n4 x\n255\n").unwrap_err();
        assert_eq!(err.offset(), Some(5));
        let err = parse_pgm(b"P5\n2 2\n255\n\x00\x00").unwrap_err();
        assert!(matches!(err, PgmError::Truncated { offset: 11, expected: 4, found: 2 }));
        let err = parse_pgm(b"P2\n2 2\n255\n").unwrap_err();
        assert!(matches!(err, PgmError::Unsupported { offset: 0, .. }));
        let err = parse_pgm(b"GIF89a").unwrap_err();
        assert!(matches!(err, PgmError::Malformed { offset: 0, .. }));
    }

    #[test]
    fn samples_above_maxval() {
        let err = parse_pgm(b"P5 1 2 15 \x0f\x10").unwrap_err();
        assert_eq!(err.offset(), Some(11));
    }

    #[test]
    fn quantize_clamps() {
        assert_eq!(quantize(-3.2), 0);
        assert_eq!(quantize(254.5), 255);
        assert_eq!(quantize(1e9), 255);
        assert_eq!(quantize(17.49), 17);
    }
}
