//! Grayscale PGM/PFM codecs and the plain-text kernel format.
//!
//! PGM samples are scaled to `[0, 1]` by their declared maxval. PFM stores
//! native-scale 32-bit floats, bottom row first, with the sign of the scale
//! field selecting byte order (negative = little-endian).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{BlurKernel, ImageGrid};
use crate::scalar::Scalar;

fn parse_err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { offset, message: message.into() })
}

/// Cursor over a netpbm-style header.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<(usize, &'a str)> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return parse_err(start, "unexpected end of header");
        }
        let s =
            std::str::from_utf8(&self.bytes[start..self.pos]).or_else(|_| parse_err(start, "header token is not ASCII"))?;
        Ok((start, s))
    }

    fn number<N: std::str::FromStr>(&mut self, what: &str) -> Result<N> {
        let (at, tok) = self.token()?;
        tok.parse().or_else(|_| parse_err(at, format!("invalid {what} `{tok}`")))
    }

    /// Consumes the single whitespace byte separating header and raster.
    fn end_of_header(&mut self) -> Result<usize> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => parse_err(self.pos, "missing whitespace after header"),
        }
    }
}

fn dims(h: &mut Header<'_>) -> Result<(usize, usize)> {
    let width: usize = h.number("width")?;
    let height: usize = h.number("height")?;
    if width == 0 || height == 0 {
        return parse_err(h.pos, "zero image dimension");
    }
    Ok((height, width))
}

pub fn decode_pgm<T: Scalar>(bytes: &[u8]) -> Result<ImageGrid<T>> {
    let mut h = Header::new(bytes);
    let (at, magic) = h.token()?;
    let ascii = match magic {
        "P2" => true,
        "P5" => false,
        other => return parse_err(at, format!("unsupported PGM magic `{other}`")),
    };
    let (height, width) = dims(&mut h)?;
    let maxval: u32 = h.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return parse_err(h.pos, format!("maxval {maxval} outside 1..=65535"));
    }
    let full_scale = f64::from(maxval);
    let n = height * width;
    let mut data = Vec::with_capacity(n);
    if ascii {
        for _ in 0..n {
            let (at, tok) = h.token().or_else(|_| parse_err(h.pos, "truncated ASCII raster"))?;
            let v: u32 = tok.parse().or_else(|_| parse_err(at, format!("invalid sample `{tok}`")))?;
            if v > maxval {
                return parse_err(at, format!("sample {v} exceeds maxval {maxval}"));
            }
            data.push(T::of(f64::from(v) / full_scale));
        }
    } else {
        let start = h.end_of_header()?;
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        if bytes.len() < start + need {
            return parse_err(bytes.len(), format!("truncated raster: need {need} bytes after offset {start}"));
        }
        let raster = &bytes[start..start + need];
        if wide {
            for (i, pair) in raster.chunks_exact(2).enumerate() {
                let v = u32::from(u16::from_be_bytes([pair[0], pair[1]]));
                if v > maxval {
                    return parse_err(start + 2 * i, format!("sample {v} exceeds maxval {maxval}"));
                }
                data.push(T::of(f64::from(v) / full_scale));
            }
        } else {
            for (i, &b) in raster.iter().enumerate() {
                if u32::from(b) > maxval {
                    return parse_err(start + i, format!("sample {b} exceeds maxval {maxval}"));
                }
                data.push(T::of(f64::from(b) / full_scale));
            }
        }
    }
    ImageGrid::new(height, width, data)
}

/// Binary PGM at the given maxval; values are clamped to `[0, 1]` and rounded.
pub fn encode_pgm<T: Scalar>(img: &ImageGrid<T>, maxval: u16) -> Vec<u8> {
    let maxval = maxval.max(1);
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    let m = f64::from(maxval);
    for &v in img.data() {
        let q = (v.to_f64_lossy().clamp(0.0, 1.0) * m).round() as u16;
        if maxval > 255 {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    out
}

pub fn decode_pfm<T: Scalar>(bytes: &[u8]) -> Result<ImageGrid<T>> {
    let mut h = Header::new(bytes);
    let (at, magic) = h.token()?;
    match magic {
        "Pf" => {}
        "PF" => return parse_err(at, "color PFM is not supported"),
        other => return parse_err(at, format!("unsupported PFM magic `{other}`")),
    }
    let (height, width) = dims(&mut h)?;
    let scale: f64 = h.number("scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return parse_err(h.pos, "PFM scale must be finite and nonzero");
    }
    let little = scale < 0.0;
    let start = h.end_of_header()?;
    let need = 4 * height * width;
    if bytes.len() < start + need {
        return parse_err(bytes.len(), format!("truncated raster: need {need} bytes after offset {start}"));
    }
    let mut data = vec![T::zero(); height * width];
    for (i, quad) in bytes[start..start + need].chunks_exact(4).enumerate() {
        let raw = [quad[0], quad[1], quad[2], quad[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        if !v.is_finite() {
            return parse_err(start + 4 * i, "non-finite sample");
        }
        let file_row = i / width;
        let col = i % width;
        data[(height - 1 - file_row) * width + col] = T::of(f64::from(v));
    }
    ImageGrid::new(height, width, data)
}

/// Little-endian grayscale PFM.
pub fn encode_pfm<T: Scalar>(img: &ImageGrid<T>) -> Vec<u8> {
    let (h, w) = img.shape();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * h * w);
    for r in (0..h).rev() {
        for c in 0..w {
            out.extend_from_slice(&(img.get(r, c).to_f64_lossy() as f32).to_le_bytes());
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Pfm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("pgm") => Ok(Self::Pgm),
            Some("pfm") => Ok(Self::Pfm),
            _ => Err(Error::Config(format!("unknown image extension for {}", path.display()))),
        }
    }
}

pub fn read_image<T: Scalar>(path: impl AsRef<Path>) -> Result<ImageGrid<T>> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path)?;
    let bytes = fs::read(path)?;
    match format {
        ImageFormat::Pgm => decode_pgm(&bytes),
        ImageFormat::Pfm => decode_pfm(&bytes),
    }
}

/// Writes by extension; PGM output is 8-bit.
pub fn write_image<T: Scalar>(path: impl AsRef<Path>, img: &ImageGrid<T>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match ImageFormat::from_path(path)? {
        ImageFormat::Pgm => encode_pgm(img, 255),
        ImageFormat::Pfm => encode_pfm(img),
    };
    fs::write(path, bytes)?;
    Ok(())
}

/// Parses `k` on the first line followed by `k` rows of `k` decimals.
pub fn parse_kernel<T: Scalar>(text: &str) -> Result<BlurKernel<T>> {
    let mut offset = 0usize;
    let mut rows: Vec<(usize, &str)> = Vec::new();
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.is_empty() && !trimmed.starts_with('#') {
            rows.push((offset, trimmed));
        }
        offset += line.len();
    }
    let Some(&(at, first)) = rows.first() else {
        return parse_err(0, "empty kernel file");
    };
    let size: usize = first.parse().or_else(|_| parse_err(at, format!("invalid kernel size `{first}`")))?;
    if rows.len() - 1 < size {
        return parse_err(text.len(), format!("expected {size} kernel rows, found {}", rows.len() - 1));
    }
    let mut taps = Vec::with_capacity(size * size);
    for &(at, row) in &rows[1..=size] {
        let vals: Vec<&str> = row.split_whitespace().collect();
        if vals.len() != size {
            return parse_err(at, format!("expected {size} values, found {}", vals.len()));
        }
        for v in vals {
            let x: f64 = v.parse().or_else(|_| parse_err(at, format!("invalid tap `{v}`")))?;
            taps.push(T::of(x));
        }
    }
    BlurKernel::new(size, taps)
}

pub fn format_kernel<T: Scalar>(kernel: &BlurKernel<T>) -> String {
    let k = kernel.size();
    let mut s = format!("{k}\n");
    for r in 0..k {
        let row: Vec<String> = (0..k).map(|c| format!("{:?}", kernel.tap(r, c).to_f64_lossy())).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn read_kernel<T: Scalar>(path: impl AsRef<Path>) -> Result<BlurKernel<T>> {
    parse_kernel(&fs::read_to_string(path)?)
}

pub fn write_kernel<T: Scalar>(path: impl AsRef<Path>, kernel: &BlurKernel<T>) -> Result<()> {
    fs::write(path, format_kernel(kernel))?;
    Ok(())
}
