//! Netpbm encode/decode: P4 packed bitmaps for binary images, P5 graymaps
//! for montages.
//!
//! P4 convention: rows are byte-aligned, most significant bit first, and a
//! set file bit means black. Our in-memory convention is 1 = white, so the
//! codec inverts on the way through; round-trips are exact.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{BinaryRaster, BitImage, GrayImage};

pub fn encode_p4(raster: &BinaryRaster) -> Vec<u8> {
    let (w, h) = (raster.width(), raster.height());
    let row_bytes = w.div_ceil(8);
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    out.reserve(row_bytes * h);
    for y in 0..h {
        let mut row = vec![0u8; row_bytes];
        for x in 0..w {
            // file bit set = black = in-memory 0
            if !raster.get(x, y) {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

pub fn encode_p4_image(img: &BitImage) -> Vec<u8> {
    let raster = BinaryRaster::from_bits(img.side(), img.side(), img.bits().clone())
        .expect("square image is a valid raster");
    encode_p4(&raster)
}

pub fn decode_p4(bytes: &[u8]) -> Result<BinaryRaster> {
    let mut pos = 0usize;
    let magic = take_token(bytes, &mut pos)
        .ok_or_else(|| Error::InvalidData("truncated bitmap header".into()))?;
    if magic != b"P4" {
        return Err(Error::InvalidData(format!(
            "expected P4 magic, found {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let w = parse_dim(bytes, &mut pos, "width")?;
    let h = parse_dim(bytes, &mut pos, "height")?;
    // exactly one whitespace byte separates the header from pixel data
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::InvalidData("missing separator after header".into()));
    }
    pos += 1;
    let row_bytes = w.div_ceil(8);
    if bytes.len() < pos + row_bytes * h {
        return Err(Error::InvalidData(format!(
            "pixel payload too short: need {} bytes, have {}",
            row_bytes * h,
            bytes.len() - pos
        )));
    }
    let mut raster = BinaryRaster::new(w, h);
    for y in 0..h {
        let row = &bytes[pos + y * row_bytes..pos + (y + 1) * row_bytes];
        for x in 0..w {
            let black = row[x / 8] & (0x80 >> (x % 8)) != 0;
            if !black {
                raster.set(x, y, true);
            }
        }
    }
    Ok(raster)
}

pub fn decode_p4_image(bytes: &[u8]) -> Result<BitImage> {
    let raster = decode_p4(bytes)?;
    if raster.width() != raster.height() {
        return Err(Error::InvalidData(format!(
            "expected square bitmap, found {}x{}",
            raster.width(),
            raster.height()
        )));
    }
    BitImage::from_bits(raster.width(), raster.bits().clone())
}

pub fn write_p4(img: &BitImage, path: &Path) -> Result<()> {
    write_bytes(path, &encode_p4_image(img))
}

pub fn read_p4(path: &Path) -> Result<BitImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_p4_image(&bytes).map_err(|e| Error::format(path, e.to_string()))
}

pub fn encode_p5(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.values());
    out
}

pub fn write_p5(img: &GrayImage, path: &Path) -> Result<()> {
    write_bytes(path, &encode_p5(img))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Lists `.pgm`/`.pbm` files in a directory, sorted by file name for stable
/// image ids.
pub fn list_bitmap_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pgm") | Some("pbm")
            )
        })
        .collect();
    files.sort();
    Ok(files)
}

fn take_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    skip_space_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if *pos > start {
        Some(&bytes[start..*pos])
    } else {
        None
    }
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            return;
        }
    }
}

fn parse_dim(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let token =
        take_token(bytes, pos).ok_or_else(|| Error::InvalidData(format!("missing {what}")))?;
    let s = std::str::from_utf8(token)
        .map_err(|_| Error::InvalidData(format!("non-ascii {what}")))?;
    let value: usize = s
        .parse()
        .map_err(|_| Error::InvalidData(format!("bad {what}: {s:?}")))?;
    if value == 0 {
        return Err(Error::InvalidData(format!("zero {what}")));
    }
    Ok(value)
}
