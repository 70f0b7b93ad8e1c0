//! Grayscale images on the `[0, 255]` scale: binary PGM and PNG I/O plus a
//! built-in synthetic test scene.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    /// Row-major pixel values.
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_len(height * width, data.len())?;
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    /// Pixels rounded and clamped to `0..=255`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| to_byte(v)).collect()
    }

    pub fn from_u8(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(height, width, bytes.iter().map(|&b| f64::from(b)).collect())
    }

    /// Geometric test scene: a shaded background, a bright rectangle, a dark
    /// disk and a mid-gray triangle. Defined in continuous coordinates, so
    /// every resolution shows the same scene.
    pub fn synthetic(height: usize, width: usize) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                let y = (i as f64 + 0.5) / height as f64;
                let x = (j as f64 + 0.5) / width as f64;
                let mut v = 70.0 + 50.0 * x + 20.0 * y;
                if (0.12..0.5).contains(&x) && (0.1..0.42).contains(&y) {
                    v = 215.0;
                }
                if (x - 0.68).powi(2) + (y - 0.32).powi(2) < 0.2f64.powi(2) {
                    v = 30.0;
                }
                if y > 0.55 && y < 0.92 && (x - 0.4).abs() < 0.8 * (y - 0.55) {
                    v = 160.0;
                }
                data.push(v);
            }
        }
        Self { height, width, data }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        match extension(path).as_deref() {
            Some("png") => read_png(File::open(path)?),
            _ => read_pgm(BufReader::new(File::open(path)?)),
        }
    }

    /// Writes PNG for a `.png` extension and binary PGM otherwise.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let out = BufWriter::new(File::create(path)?);
        match extension(path).as_deref() {
            Some("png") => write_png(self, out),
            _ => write_pgm(self, out),
        }
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

fn to_byte(v: f64) -> u8 {
    if v.is_nan() {
        0
    } else {
        v.round().clamp(0.0, 255.0) as u8
    }
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn pgm_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(Error::Format("truncated PGM header".into()));
        }
        match byte[0] {
            b'#' if tok.is_empty() => {
                let mut line = Vec::new();
                r.read_until(b'\n', &mut line)?;
            }
            c if c.is_ascii_whitespace() => {
                if !tok.is_empty() {
                    return Ok(tok);
                }
            }
            c => tok.push(c as char),
        }
    }
}

fn pgm_number<R: BufRead>(r: &mut R, what: &str) -> Result<usize> {
    let tok = pgm_token(r)?;
    tok.parse()
        .map_err(|_| Error::Format(format!("bad PGM {what}: {tok:?}")))
}

/// Reads a binary (P5) PGM with 8- or 16-bit samples, rescaled to `[0, 255]`.
pub fn read_pgm<R: BufRead>(mut r: R) -> Result<Image> {
    if pgm_token(&mut r)? != "P5" {
        return Err(Error::Format("not a binary PGM (P5) file".into()));
    }
    let width = pgm_number(&mut r, "width")?;
    let height = pgm_number(&mut r, "height")?;
    let maxval = pgm_number(&mut r, "maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(Error::Format(format!("PGM maxval {maxval} out of range")));
    }
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    let mut raw = vec![0u8; height * width * bytes_per];
    r.read_exact(&mut raw)
        .map_err(|_| Error::Format("truncated PGM pixel data".into()))?;
    let scale = 255.0 / maxval as f64;
    let data = if bytes_per == 1 {
        raw.iter().map(|&b| f64::from(b) * scale).collect()
    } else {
        raw.chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])) * scale)
            .collect()
    };
    Image::new(height, width, data)
}

pub fn write_pgm<W: Write>(img: &Image, mut w: W) -> Result<()> {
    write!(w, "P5\n{} {}\n255\n", img.width, img.height)?;
    w.write_all(&img.to_u8())?;
    w.flush()?;
    Ok(())
}

/// Reads a PNG, converting color to luma (`0.299 R + 0.587 G + 0.114 B`).
pub fn read_png<R: Read>(r: R) -> Result<Image> {
    let mut bytes = Vec::new();
    BufReader::new(r).read_to_end(&mut bytes)?;
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| Error::Format(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::Format(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = info.color_type.samples();
    let buf = &buf[..info.buffer_size()];
    let data = buf
        .chunks_exact(channels)
        .map(|px| match channels {
            1 | 2 => f64::from(px[0]),
            _ => 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]),
        })
        .collect();
    Image::new(h, w, data)
}

pub fn write_png<W: Write>(img: &Image, w: W) -> Result<()> {
    let to_err = |e: png::EncodingError| Error::Format(e.to_string());
    let mut enc = png::Encoder::new(w, img.width as u32, img.height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(to_err)?;
    writer.write_image_data(&img.to_u8()).map_err(to_err)?;
    writer.finish().map_err(to_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_with_comments() {
        let img = Image::from_u8(2, 3, &[0, 10, 255, 7, 8, 9]).unwrap();
        let mut buf = Vec::new();
        write_pgm(&img, &mut buf).unwrap();
        assert_eq!(&buf[..11], b"P5\n3 2\n255\n");
        assert_eq!(read_pgm(&buf[..]).unwrap(), img);
        let commented = b"P5 # made by hand\n# another\n3 2 255\n\x00\x0a\xff\x07\x08\x09";
        assert_eq!(read_pgm(&commented[..]).unwrap(), img);
    }

    #[test]
    fn pgm_sixteen_bit_and_errors() {
        let raw = b"P5 1 2 65535\n\xff\xff\x00\x00";
        let img = read_pgm(&raw[..]).unwrap();
        assert_eq!(img.data, vec![255.0, 0.0]);
        assert!(read_pgm(&b"P2 1 1 255\n0"[..]).is_err());
        assert!(read_pgm(&b"P5 2 2 255\n\x00"[..]).is_err());
    }

    #[test]
    fn png_round_trip() {
        let img = Image::synthetic(9, 13);
        let mut buf = Vec::new();
        write_png(&img, &mut buf).unwrap();
        let back = read_png(&buf[..]).unwrap();
        assert_eq!(back.to_u8(), img.to_u8());
    }

    #[test]
    fn clamping() {
        let img = Image::new(1, 4, vec![-3.0, 254.6, 300.0, f64::NAN]).unwrap();
        assert_eq!(img.to_u8(), vec![0, 255, 255, 0]);
    }

    #[test]
    fn synthetic_scene() {
        let a = Image::synthetic(64, 64);
        assert_eq!(a, Image::synthetic(64, 64));
        assert!(a.data.iter().all(|v| (0.0..=255.0).contains(v)));
        let levels: std::collections::BTreeSet<u8> = a.to_u8().into_iter().collect();
        assert!(levels.contains(&215) && levels.contains(&30) && levels.contains(&160));
        assert_eq!(Image::synthetic(32, 32).len(), 1024);
    }
}
