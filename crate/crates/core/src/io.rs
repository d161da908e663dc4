//! Image, dictionary and code files.
//!
//! Images: binary PGM (`P5`, 8 or 16 bit), grayscale PNG (8 or 16 bit) and
//! a raw `f64` format (`.dsf`) that keeps unclipped values. Integer formats
//! are clipped to `[0, maxval]` and rounded on export.
//!
//! Dictionaries (`DSDD`) and codes (`DSDC`) are little-endian binary files
//! with a 4-byte magic and a `u32` version.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::linalg::Matrix;
use crate::sparse::{Dictionary, SparseCodes, SparseColumn};

const IMAGE_MAGIC: &[u8; 4] = b"DSFI";
const DICT_MAGIC: &[u8; 4] = b"DSDD";
const CODES_MAGIC: &[u8; 4] = b"DSDC";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
    Raw,
}

impl ImageFormat {
    /// Format from the file extension (`pgm`, `png`, `dsf`).
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("pgm") => Ok(Self::Pgm),
            Some("png") => Ok(Self::Png),
            Some("dsf") => Ok(Self::Raw),
            _ => Err(Error::Format(format!(
                "unsupported image extension for {}; use .pgm, .png or .dsf",
                path.display()
            ))),
        }
    }
}

pub fn read_image(path: &Path) -> Result<Image> {
    let format = ImageFormat::from_path(path)?;
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    match format {
        ImageFormat::Pgm => decode_pgm(&bytes),
        ImageFormat::Png => decode_png(&bytes),
        ImageFormat::Raw => decode_raw(&bytes),
    }
}

/// Writes `img`; integer formats use `maxval = 255` unless the image's
/// dynamic range is above that, in which case 16 bit is written.
pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    let bytes = match ImageFormat::from_path(path)? {
        ImageFormat::Pgm => encode_pgm(img, maxval_for(img)),
        ImageFormat::Png => encode_png(img, maxval_for(img))?,
        ImageFormat::Raw => encode_raw(img),
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

fn maxval_for(img: &Image) -> u16 {
    if img.dynamic_range() > 255.0 {
        u16::MAX
    } else {
        255
    }
}

fn quantize(v: f64, maxval: u16) -> u16 {
    v.clamp(0.0, maxval as f64).round() as u16
}

/// Binary PGM with `#` comments in the header.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "P5" {
        return Err(Error::Format(format!(
            "expected binary PGM (P5), found {magic:?}"
        )));
    }
    let mut number = |what: &str| -> Result<usize> {
        let t = token()?;
        t.parse()
            .map_err(|_| Error::Format(format!("bad PGM {what}: {t:?}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > u16::MAX as usize {
        return Err(Error::Format(format!("PGM maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let bpp = if maxval < 256 { 1 } else { 2 };
    let need = width * height * bpp;
    if bytes.len() < start + need {
        return Err(Error::Format(format!(
            "PGM raster has {} bytes, expected {need}",
            bytes.len().saturating_sub(start)
        )));
    }
    let raster = &bytes[start..start + need];
    let pixels = if bpp == 1 {
        raster.iter().map(|&b| b as f64).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect()
    };
    Ok(Image::new(height, width, pixels)?.with_dynamic_range(maxval as f64))
}

pub fn encode_pgm(img: &Image, maxval: u16) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    for &v in img.pixels() {
        let q = quantize(v, maxval);
        if maxval < 256 {
            out.push(q as u8);
        } else {
            out.extend_from_slice(&q.to_be_bytes());
        }
    }
    out
}

/// Grayscale PNG; colour images are rejected rather than converted.
pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Format(format!("PNG: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("PNG image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Format(format!("PNG: {e}")))?;
    let (height, width) = (info.height as usize, info.width as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        other => {
            return Err(Error::Format(format!(
                "only grayscale PNG is supported, found {other:?}"
            )))
        }
    };
    let data = &buf[..info.buffer_size()];
    let (pixels, range): (Vec<f64>, f64) = match info.bit_depth {
        png::BitDepth::Sixteen => (
            data.chunks_exact(2 * channels)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
                .collect(),
            u16::MAX as f64,
        ),
        _ => (
            data.chunks_exact(channels).map(|c| c[0] as f64).collect(),
            255.0,
        ),
    };
    Ok(Image::new(height, width, pixels)?.with_dynamic_range(range))
}

pub fn encode_png(img: &Image, maxval: u16) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        encoder.set_color(png::ColorType::Grayscale);
        let data: Vec<u8> = if maxval < 256 {
            encoder.set_depth(png::BitDepth::Eight);
            img.pixels().iter().map(|&v| quantize(v, 255) as u8).collect()
        } else {
            encoder.set_depth(png::BitDepth::Sixteen);
            img.pixels()
                .iter()
                .flat_map(|&v| quantize(v, u16::MAX).to_be_bytes())
                .collect()
        };
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Format(format!("PNG: {e}")))?;
        writer
            .write_image_data(&data)
            .map_err(|e| Error::Format(format!("PNG: {e}")))?;
    }
    Ok(out)
}

/// Little-endian reader over a byte slice.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format("unexpected end of file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let m = self.take(4)?;
        if m != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(m),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn header(magic: &[u8; 4]) -> Vec<u8> {
    let mut out = magic.to_vec();
    out.extend_from_slice(&VERSION.to_le_bytes());
    out
}

fn dim(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} does not fit in u32")))
}

pub fn encode_raw(img: &Image) -> Vec<u8> {
    let mut out = header(IMAGE_MAGIC);
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    out.extend_from_slice(&img.dynamic_range().to_le_bytes());
    for &v in img.pixels() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_raw(bytes: &[u8]) -> Result<Image> {
    let mut c = Cursor::new(bytes);
    c.magic(IMAGE_MAGIC)?;
    let h = c.u32()? as usize;
    let w = c.u32()? as usize;
    let range = c.f64()?;
    let pixels = c.f64s(h * w)?;
    c.finish()?;
    Ok(Image::new(h, w, pixels)?.with_dynamic_range(range))
}

/// Atom matrix, column-major. `K = 0` is allowed so an empty side of a
/// split can still be written.
pub fn encode_atoms(atoms: &Matrix) -> Result<Vec<u8>> {
    let mut out = header(DICT_MAGIC);
    out.extend_from_slice(&dim(atoms.rows())?.to_le_bytes());
    out.extend_from_slice(&dim(atoms.cols())?.to_le_bytes());
    for &v in atoms.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_atoms(bytes: &[u8]) -> Result<Matrix> {
    let mut c = Cursor::new(bytes);
    c.magic(DICT_MAGIC)?;
    let n = c.u32()? as usize;
    let k = c.u32()? as usize;
    let data = c.f64s(n * k)?;
    c.finish()?;
    Matrix::from_col_major(n, k, data)
}

pub fn write_atoms(path: &Path, atoms: &Matrix) -> Result<()> {
    std::fs::write(path, encode_atoms(atoms)?)?;
    Ok(())
}

pub fn read_atoms(path: &Path) -> Result<Matrix> {
    decode_atoms(&std::fs::read(path)?)
}

pub fn write_dictionary(path: &Path, dict: &Dictionary) -> Result<()> {
    write_atoms(path, dict.atoms())
}

/// Reads a dictionary file and checks that every atom is unit norm.
pub fn read_dictionary(path: &Path) -> Result<Dictionary> {
    Dictionary::new(read_atoms(path)?)
}

/// Per column: `nnz: u32`, then `nnz` pairs of `(row: u32, value: f64)`.
pub fn encode_codes(codes: &SparseCodes) -> Result<Vec<u8>> {
    let mut out = header(CODES_MAGIC);
    out.extend_from_slice(&dim(codes.rows())?.to_le_bytes());
    out.extend_from_slice(&dim(codes.cols())?.to_le_bytes());
    for m in 0..codes.cols() {
        let (idx, vals) = codes.column(m);
        out.extend_from_slice(&dim(idx.len())?.to_le_bytes());
        for (&k, &v) in idx.iter().zip(vals) {
            out.extend_from_slice(&dim(k)?.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_codes(bytes: &[u8]) -> Result<SparseCodes> {
    let mut c = Cursor::new(bytes);
    c.magic(CODES_MAGIC)?;
    let rows = c.u32()? as usize;
    let cols = c.u32()? as usize;
    let mut columns = Vec::with_capacity(cols.min(1 << 20));
    for _ in 0..cols {
        let nnz = c.u32()? as usize;
        let mut pairs = Vec::with_capacity(nnz.min(rows));
        for _ in 0..nnz {
            let k = c.u32()? as usize;
            pairs.push((k, c.f64()?));
        }
        columns.push(SparseColumn::from_pairs(pairs)?);
    }
    c.finish()?;
    SparseCodes::from_columns(rows, columns)
}

pub fn write_codes(path: &Path, codes: &SparseCodes) -> Result<()> {
    std::fs::write(path, encode_codes(codes)?)?;
    Ok(())
}

pub fn read_codes(path: &Path) -> Result<SparseCodes> {
    decode_codes(&std::fs::read(path)?)
}
