//! Bit-exact image file I/O.
//!
//! Three interchange formats are supported for [`Image`] data:
//!
//! * binary PGM (`P5`, mono) and PPM (`P6`, RGB), always written with
//!   maxval 65535 and big-endian samples per the Netpbm convention;
//! * PFM (`Pf` mono / `PF` RGB), 32-bit floats, written little-endian
//!   with scale line `-1.0` and bottom-up row order per the PFM
//!   convention.
//!
//! Integer formats quantize with round-half-up and refuse samples outside
//! `[0, 1]` rather than clipping silently. PFM carries values verbatim at
//! `f32` precision, so a write/read round trip is exact whenever the
//! samples are `f32`-representable.
//!
//! Raw mosaics use the PRAW container, a fixed 20-byte header followed by
//! little-endian `u16` samples:
//!
//! ```text
//! "PRAW" | version u8 = 1 | layout_id u8 | width u32 LE | height u32 LE
//!        | bit_depth u8 = 16 | reserved 5 bytes zero | samples u16 LE row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{Image, RawMosaic, RAW_MAX};

/// On-disk format selector for [`write_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// Binary PGM `P5`, mono, 16-bit big-endian.
    Pgm,
    /// Binary PPM `P6`, RGB, 16-bit big-endian.
    Ppm,
    /// PFM `Pf`/`PF`, 32-bit float, little-endian, bottom-up rows.
    Pfm,
}

impl ImageFormat {
    /// Canonical file extension.
    pub fn extension(&self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Ppm => "ppm",
            ImageFormat::Pfm => "pfm",
        }
    }
}

/// Reads a PGM, PPM, or PFM file into linear `[0, 1]`-scaled samples.
///
/// Integer samples are divided by the file's maxval; PFM floats are taken
/// verbatim. The format is detected from the magic bytes.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let mut bytes = Vec::new();
    File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    decode_image(&bytes)
}

/// Decodes an in-memory PGM/PPM/PFM byte stream.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    match bytes.get(..2) {
        Some(b"P5") => decode_netpbm(bytes, 1),
        Some(b"P6") => decode_netpbm(bytes, 3),
        Some(b"Pf") => decode_pfm(bytes, 1),
        Some(b"PF") => decode_pfm(bytes, 3),
        _ => Err(Error::Format("unrecognized image magic".into())),
    }
}

/// Writes `img` in the chosen format.
///
/// The format must match the channel count (`pgm` = 1, `ppm` = 3, `pfm` =
/// either). For the integer formats every sample must lie in `[0, 1]`;
/// out-of-range data is a usage error because silent clipping would
/// corrupt radiometric content.
pub fn write_image(img: &Image, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let bytes = encode_image(img, format)?;
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

/// Encodes `img` to an in-memory byte stream.
pub fn encode_image(img: &Image, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Pgm | ImageFormat::Ppm => {
            let want = if format == ImageFormat::Pgm { 1 } else { 3 };
            if img.channels() != want {
                return Err(Error::Usage(format!(
                    "{} requires {} channel(s), image has {}",
                    format.extension(),
                    want,
                    img.channels()
                )));
            }
            encode_netpbm(img)
        }
        ImageFormat::Pfm => Ok(encode_pfm(img)),
    }
}

fn encode_netpbm(img: &Image) -> Result<Vec<u8>> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = Vec::with_capacity(32 + img.data().len() * 2);
    write!(out, "{}\n{} {}\n{}\n", magic, img.width(), img.height(), RAW_MAX)
        .expect("in-memory write");
    for &v in img.data() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Usage(format!(
                "sample {v} outside [0, 1]; integer formats do not clip silently"
            )));
        }
        // Round half up; exact for v in [0, 1].
        let q = (v * RAW_MAX as f64 + 0.5).floor() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    Ok(out)
}

fn decode_netpbm(bytes: &[u8], channels: usize) -> Result<Image> {
    let mut cursor = 2; // past the magic
    let width = read_header_int(bytes, &mut cursor)?;
    let height = read_header_int(bytes, &mut cursor)?;
    let maxval = read_header_int(bytes, &mut cursor)?;
    if width == 0 || height == 0 {
        return Err(Error::Format("zero dimension in netpbm header".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval} outside 1..=65535")));
    }
    // The header ends with exactly one whitespace byte before the payload.
    match bytes.get(cursor) {
        Some(b) if b.is_ascii_whitespace() => cursor += 1,
        _ => return Err(Error::Format("missing whitespace before netpbm payload".into())),
    }
    let count = width * height * channels;
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    let payload = bytes
        .get(cursor..cursor + count * bytes_per)
        .ok_or_else(|| truncated("netpbm payload"))?;
    let scale = 1.0 / maxval as f64;
    let data: Vec<f64> = if bytes_per == 1 {
        payload.iter().map(|&b| b as f64 * scale).collect()
    } else {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    };
    if data.iter().any(|&v| v > 1.0) {
        return Err(Error::Format("netpbm sample exceeds declared maxval".into()));
    }
    Image::from_vec(width, height, channels, data)
}

fn encode_pfm(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "Pf" } else { "PF" };
    let mut out = Vec::with_capacity(32 + img.data().len() * 4);
    write!(out, "{}\n{} {}\n-1.0\n", magic, img.width(), img.height()).expect("in-memory write");
    // PFM stores rows bottom-up.
    for y in (0..img.height()).rev() {
        for x in 0..img.width() {
            for c in 0..img.channels() {
                out.extend_from_slice(&(img.get(x, y, c) as f32).to_le_bytes());
            }
        }
    }
    out
}

fn decode_pfm(bytes: &[u8], channels: usize) -> Result<Image> {
    let mut cursor = 2;
    let width = read_header_int(bytes, &mut cursor)?;
    let height = read_header_int(bytes, &mut cursor)?;
    let scale = read_header_float(bytes, &mut cursor)?;
    if width == 0 || height == 0 {
        return Err(Error::Format("zero dimension in pfm header".into()));
    }
    if scale == 0.0 {
        return Err(Error::Format("pfm scale must be nonzero".into()));
    }
    match bytes.get(cursor) {
        Some(b) if b.is_ascii_whitespace() => cursor += 1,
        _ => return Err(Error::Format("missing whitespace before pfm payload".into())),
    }
    let count = width * height * channels;
    let payload = bytes
        .get(cursor..cursor + count * 4)
        .ok_or_else(|| truncated("pfm payload"))?;
    let little_endian = scale < 0.0;
    let mut data = vec![0.0f64; count];
    let stride = width * channels;
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        if !v.is_finite() {
            return Err(Error::Format(format!("non-finite pfm sample {v}")));
        }
        // Undo the bottom-up row order.
        let row = height - 1 - i / stride;
        data[row * stride + i % stride] = v as f64;
    }
    Image::from_vec(width, height, channels, data)
}

/// Parses one whitespace-delimited header token, skipping `#` comments.
fn read_header_token<'a>(bytes: &'a [u8], cursor: &mut usize) -> Result<&'a [u8]> {
    loop {
        while bytes.get(*cursor).is_some_and(|b| b.is_ascii_whitespace()) {
            *cursor += 1;
        }
        if bytes.get(*cursor) == Some(&b'#') {
            while bytes.get(*cursor).is_some_and(|&b| b != b'\n') {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    let start = *cursor;
    while bytes.get(*cursor).is_some_and(|b| !b.is_ascii_whitespace()) {
        *cursor += 1;
    }
    if start == *cursor {
        return Err(Error::Format("unexpected end of header".into()));
    }
    Ok(&bytes[start..*cursor])
}

fn read_header_int(bytes: &[u8], cursor: &mut usize) -> Result<usize> {
    let tok = read_header_token(bytes, cursor)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad header integer {:?}", String::from_utf8_lossy(tok))))
}

fn read_header_float(bytes: &[u8], cursor: &mut usize) -> Result<f64> {
    let tok = read_header_token(bytes, cursor)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad header float {:?}", String::from_utf8_lossy(tok))))
}

fn truncated(what: &str) -> Error {
    Error::Io(std::io::Error::new(
        std::io::ErrorKind::UnexpectedEof,
        format!("truncated {what}"),
    ))
}

const PRAW_MAGIC: &[u8; 4] = b"PRAW";
const PRAW_VERSION: u8 = 1;
const PRAW_HEADER_LEN: usize = 20;

/// Reads a PRAW mosaic file, sample-exact.
pub fn read_raw(path: impl AsRef<Path>) -> Result<RawMosaic> {
    let mut reader = BufReader::new(File::open(path.as_ref())?);
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    decode_raw(&bytes)
}

/// Decodes an in-memory PRAW byte stream.
pub fn decode_raw(bytes: &[u8]) -> Result<RawMosaic> {
    // A file too short for the fixed header is malformed, not an I/O
    // failure; truncation after a valid header is an I/O error.
    let header = bytes
        .get(..PRAW_HEADER_LEN)
        .ok_or_else(|| Error::Format("file shorter than the praw header".into()))?;
    if &header[0..4] != PRAW_MAGIC {
        return Err(Error::Format("bad praw magic".into()));
    }
    if header[4] != PRAW_VERSION {
        return Err(Error::Format(format!("unsupported praw version {}", header[4])));
    }
    let layout_id = header[5];
    let width = u32::from_le_bytes([header[6], header[7], header[8], header[9]]) as usize;
    let height = u32::from_le_bytes([header[10], header[11], header[12], header[13]]) as usize;
    if header[14] != 16 {
        return Err(Error::Format(format!("unsupported praw bit depth {}", header[14])));
    }
    if header[15..20] != [0; 5] {
        return Err(Error::Format("nonzero reserved bytes in praw header".into()));
    }
    if width == 0 || height == 0 || !width.is_multiple_of(4) || !height.is_multiple_of(4) {
        return Err(Error::Format(format!(
            "praw dimensions must be nonzero multiples of 4, got {width}x{height}"
        )));
    }
    let payload = bytes.get(PRAW_HEADER_LEN..).expect("header bounds checked");
    if payload.len() < width * height * 2 {
        return Err(truncated("praw payload"));
    }
    if payload.len() > width * height * 2 {
        return Err(Error::Format("praw payload larger than declared dimensions".into()));
    }
    let samples = payload
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    RawMosaic::from_samples(width, height, layout_id, samples)
}

/// Writes a PRAW mosaic file; [`read_raw`] inverts it byte-exactly.
pub fn write_raw(mosaic: &RawMosaic, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    out.write_all(&encode_raw(mosaic))?;
    out.flush()?;
    Ok(())
}

/// Encodes a mosaic to an in-memory PRAW byte stream.
pub fn encode_raw(mosaic: &RawMosaic) -> Vec<u8> {
    let mut out = Vec::with_capacity(PRAW_HEADER_LEN + mosaic.samples().len() * 2);
    out.extend_from_slice(PRAW_MAGIC);
    out.push(PRAW_VERSION);
    out.push(mosaic.layout_id());
    out.extend_from_slice(&(mosaic.width() as u32).to_le_bytes());
    out.extend_from_slice(&(mosaic.height() as u32).to_le_bytes());
    out.push(mosaic.bit_depth());
    out.extend_from_slice(&[0; 5]);
    for &s in mosaic.samples() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}
