//! PFM reader/writer for single-channel float maps (the de-facto disparity
//! interchange format). Header is `Pf\n<width> <height>\n<scale>\n` with a
//! negative scale marking little-endian payload; rows are stored bottom to
//! top. Write then read is bit-exact, including inf.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum PfmError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("expected single channel (header 'Pf'), found color 'PF'")]
    ColorNotSupported,
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

fn io_err(path: &Path, source: std::io::Error) -> PfmError {
    PfmError::Io { path: path.display().to_string(), source }
}

/// Single-channel float image in row-major top-to-bottom order.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl FloatImage {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> FloatImage {
        assert_eq!(data.len(), (width * height) as usize);
        FloatImage { width, height, data }
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> f32 {
        self.data[(y * self.width + x) as usize]
    }
}

pub fn write_pfm(path: &Path, image: &FloatImage) -> Result<(), PfmError> {
    let mut buf = Vec::with_capacity(64 + image.data.len() * 4);
    buf.extend_from_slice(format!("Pf\n{} {}\n-1.0\n", image.width, image.height).as_bytes());
    for y in (0..image.height).rev() {
        let row = &image.data[(y * image.width) as usize..((y + 1) * image.width) as usize];
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(&buf).map_err(|e| io_err(path, e))
}

pub fn read_pfm(path: &Path) -> Result<FloatImage, PfmError> {
    let mut raw = Vec::new();
    fs::File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut raw)
        .map_err(|e| io_err(path, e))?;
    parse_pfm(&raw)
}

/// Three whitespace-delimited header tokens, then the binary payload.
fn parse_pfm(raw: &[u8]) -> Result<FloatImage, PfmError> {
    let mut pos = 0usize;
    let mut token = || -> Result<String, PfmError> {
        while pos < raw.len() && raw[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < raw.len() && !raw[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(PfmError::MalformedHeader("unexpected end of header".into()));
        }
        // Consume exactly one whitespace byte after the token.
        let tok = String::from_utf8_lossy(&raw[start..pos]).into_owned();
        pos += 1;
        Ok(tok)
    };
    let magic = token()?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => return Err(PfmError::ColorNotSupported),
        other => return Err(PfmError::MalformedHeader(format!("bad magic '{other}'"))),
    }
    let width: u32 = token()?
        .parse()
        .map_err(|_| PfmError::MalformedHeader("bad width".into()))?;
    let height_tok = token()?;
    let height: u32 = height_tok
        .parse()
        .map_err(|_| PfmError::MalformedHeader("bad height".into()))?;
    let scale: f64 = token()?
        .parse()
        .map_err(|_| PfmError::MalformedHeader("bad scale".into()))?;
    if scale == 0.0 {
        return Err(PfmError::MalformedHeader("scale must be nonzero".into()));
    }
    let little_endian = scale < 0.0;
    let n = (width as usize) * (height as usize);
    let expected = n * 4;
    let payload = &raw[pos.min(raw.len())..];
    if payload.len() < expected {
        return Err(PfmError::Truncated { expected, found: payload.len() });
    }
    let mut data = vec![0.0f32; n];
    for y in 0..height as usize {
        // Payload rows run bottom-to-top.
        let src_row = height as usize - 1 - y;
        for x in 0..width as usize {
            let off = (src_row * width as usize + x) * 4;
            let bytes: [u8; 4] = payload[off..off + 4].try_into().unwrap();
            let v = if little_endian {
                f32::from_le_bytes(bytes)
            } else {
                f32::from_be_bytes(bytes)
            };
            data[y * width as usize + x] = v;
        }
    }
    Ok(FloatImage { width, height, data })
}
