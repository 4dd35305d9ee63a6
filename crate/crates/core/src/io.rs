//! Binary PGM (P5, maxval 255) and 8-bit grayscale PNG.
//!
//! The reader sniffs the format from the leading bytes; the writer picks PNG
//! for a `.png` extension and PGM for anything else.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::GrayImage;

const PNG_SIGNATURE: &[u8] = &[0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes, path)
    } else if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(&bytes, path)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: format!(
                "netpbm variant P{} (only binary P5 is read)",
                bytes[1] as char
            ),
        })
    } else {
        Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: "unrecognized file signature (expected PGM P5 or PNG)".into(),
        })
    }
}

pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        encode_png(img, path)?
    } else {
        encode_pgm(img)
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

/// Parses a P5 header: magic, width, height, maxval separated by whitespace
/// with `#` comments, then exactly one whitespace byte before the raster.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let malformed = |reason: &str| Error::Malformed {
        path: path.into(),
        reason: reason.into(),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(malformed("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(malformed("expected a decimal header field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("header field out of range"))?;
    }
    let [width, height, maxval] = fields;
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(malformed("missing whitespace after maxval"));
    }
    pos += 1;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: format!("unsupported maxval {maxval} (expected 255)"),
        });
    }
    let len = width
        .checked_mul(height)
        .ok_or_else(|| malformed("dimensions overflow"))?;
    let data = bytes
        .get(pos..pos + len)
        .ok_or_else(|| malformed("truncated pixel data"))?;
    GrayImage::new(width, height, data.to_vec())
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let unsupported = |reason: String| Error::UnsupportedFormat {
        path: path.into(),
        reason,
    };
    let malformed = |e: png::DecodingError| Error::Malformed {
        path: path.into(),
        reason: e.to_string(),
    };
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(malformed)?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Eight {
        return Err(unsupported(format!(
            "unsupported bit depth {} (expected 8)",
            info.bit_depth as u8
        )));
    }
    if info.color_type != png::ColorType::Grayscale {
        return Err(unsupported(format!(
            "unsupported color type {:?} (expected 8-bit grayscale)",
            info.color_type
        )));
    }
    if info.interlaced {
        return Err(unsupported("interlaced PNG".into()));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![
        0;
        reader
            .output_buffer_size()
            .ok_or_else(|| Error::Malformed {
                path: path.into(),
                reason: "image too large".into(),
            })?
    ];
    let frame = reader.next_frame(&mut buf).map_err(malformed)?;
    buf.truncate(frame.buffer_size());
    // rows are tightly packed for 8-bit grayscale
    if frame.line_size != width {
        return Err(Error::Malformed {
            path: path.into(),
            reason: format!("unexpected line size {}", frame.line_size),
        });
    }
    GrayImage::new(width, height, buf)
}

fn encode_png(img: &GrayImage, path: &Path) -> Result<Vec<u8>> {
    let err = |e: png::EncodingError| Error::Malformed {
        path: path.into(),
        reason: e.to_string(),
    };
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(
            BufWriter::new(&mut out),
            img.width() as u32,
            img.height() as u32,
        );
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(err)?;
        writer.write_image_data(img.pixels()).map_err(err)?;
        writer.finish().map_err(err)?;
    }
    Ok(out)
}
