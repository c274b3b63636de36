//! Grey-level image payloads: binary PGM I/O, 8↔6-bit framing and
//! end-to-end transmission scoring.
//!
//! [`pack`] concatenates pixel bytes MSB-first into one bit stream which is
//! cut into 6-bit labels, MSB-first, with zero padding at the tail. Labels
//! and bytes are aligned every three pixels, so a label's top bit lands on a
//! pixel's top bit only at those boundaries.
//!
//! [`Framing::PixelAligned`] spends the same number of labels differently:
//! each pixel's top six bits form one label, and the two low bits of three
//! consecutive pixels share a fourth.

use std::path::Path;

use crate::channel::{transmit, ChannelModel, Demodulator};
use crate::geometry::Constellation;
use crate::{Error, Result};

/// 8-bit grey image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreyImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GreyImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width.checked_mul(height) != Some(pixels.len()) {
            return Err(Error::Image(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width.saturating_mul(height),
                pixels.len()
            )));
        }
        Ok(GreyImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Parse a binary (`P5`) grey map with maxval 255.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Image("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(Error::Image(format!(
                "expected binary PGM magic P5, found {:?}",
                fields[0]
            )));
        }
        let number = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Image(format!("bad PGM {what} {s:?}")))
        };
        let width = number(&fields[1], "width")?;
        let height = number(&fields[2], "height")?;
        let maxval = number(&fields[3], "maxval")?;
        if maxval != 255 {
            return Err(Error::Image(format!(
                "only maxval 255 is supported, found {maxval}"
            )));
        }
        // exactly one whitespace byte separates the header from the raster
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(Error::Image("truncated PGM header".into()));
        }
        let raster = &bytes[pos + 1..];
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::Image("PGM dimensions overflow".into()))?;
        if raster.len() < n {
            return Err(Error::Image(format!(
                "PGM raster holds {} bytes, {width}x{height} needs {n}",
                raster.len()
            )));
        }
        GreyImage::new(width, height, raster[..n].to_vec())
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        GreyImage::from_pgm(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_pgm()).map_err(|e| Error::io(path, e))
    }
}

/// Deterministic test picture: smooth shading, a bright disc, a dark ring
/// and a striped patch, so both flat areas and edges are present.
pub fn synthetic_image(width: usize, height: usize) -> GreyImage {
    let (w, h) = (width as f64, height as f64);
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = (x as f64 / w, y as f64 / h);
            let mut value = 40.0 + 120.0 * u + 50.0 * (6.0 * v).sin() * (4.0 * u).cos();
            let r = ((u - 0.38).powi(2) + (v - 0.42).powi(2)).sqrt();
            if r < 0.18 {
                value = 220.0 - 200.0 * r;
            } else if (0.24..0.28).contains(&r) {
                value *= 0.3;
            }
            if (0.65..0.9).contains(&u) && (0.6..0.85).contains(&v) {
                value = if (x / 8 + y / 8) % 2 == 0 {
                    235.0
                } else {
                    25.0
                };
            }
            pixels.push(value.round().clamp(0.0, 255.0) as u8);
        }
    }
    GreyImage::new(width, height, pixels).expect("dimensions match")
}

/// Bit stream cut into 6-bit labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadFrame {
    pub labels: Vec<u8>,
    /// Zero bits appended to fill the last label (always below 6).
    pub pad_bits: usize,
}

pub fn pack(image: &GreyImage) -> PayloadFrame {
    let bits = image.pixels.len() * 8;
    let count = bits.div_ceil(6);
    let mut labels = Vec::with_capacity(count);
    let mut acc: u32 = 0;
    let mut held = 0;
    for &byte in &image.pixels {
        acc = (acc << 8) | byte as u32;
        held += 8;
        while held >= 6 {
            held -= 6;
            labels.push(((acc >> held) & 0x3F) as u8);
        }
        acc &= (1 << held) - 1;
    }
    let pad_bits = (6 - held) % 6;
    if held > 0 {
        labels.push(((acc << pad_bits) & 0x3F) as u8);
    }
    PayloadFrame { labels, pad_bits }
}

/// How pixel bits are laid out over labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Framing {
    /// [`pack`]: one MSB-first bit stream.
    #[default]
    Stream,
    /// Per group of up to three pixels: their top six bits as one label
    /// each, then one label with their low two bits, first pixel highest.
    PixelAligned,
}

impl Framing {
    pub fn name(self) -> &'static str {
        match self {
            Framing::Stream => "stream",
            Framing::PixelAligned => "pixel-aligned",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "stream" => Some(Framing::Stream),
            "pixel-aligned" => Some(Framing::PixelAligned),
            _ => None,
        }
    }
}

pub fn pack_with(image: &GreyImage, framing: Framing) -> PayloadFrame {
    match framing {
        Framing::Stream => pack(image),
        Framing::PixelAligned => {
            let n = image.pixels.len();
            let mut labels = Vec::with_capacity(n + n.div_ceil(3));
            for group in image.pixels.chunks(3) {
                labels.extend(group.iter().map(|&p| p >> 2));
                labels.push(
                    group
                        .iter()
                        .enumerate()
                        .fold(0, |acc, (k, &p)| acc | (p & 3) << (4 - 2 * k)),
                );
            }
            PayloadFrame {
                pad_bits: labels.len() * 6 - n * 8,
                labels,
            }
        }
    }
}

pub fn unpack_with(
    frame: &PayloadFrame,
    width: usize,
    height: usize,
    framing: Framing,
) -> Result<GreyImage> {
    if framing == Framing::Stream {
        return unpack(frame, width, height);
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Image("dimensions overflow".into()))?;
    let expected = n + n.div_ceil(3);
    if frame.labels.len() != expected {
        return Err(Error::LengthMismatch(format!(
            "{} labels for a {width}x{height} image, expected {expected}",
            frame.labels.len()
        )));
    }
    let mut pixels = Vec::with_capacity(n);
    for group in frame.labels.chunks(4) {
        let (high, low) = group.split_at(group.len() - 1);
        for (k, &h) in high.iter().enumerate() {
            pixels.push((h & 0x3F) << 2 | (low[0] >> (4 - 2 * k)) & 3);
        }
    }
    GreyImage::new(width, height, pixels)
}

/// Inverse of [`pack`]. Only the low 6 bits of each label are used.
pub fn unpack(frame: &PayloadFrame, width: usize, height: usize) -> Result<GreyImage> {
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Image("dimensions overflow".into()))?;
    let expected = (n * 8).div_ceil(6);
    if frame.labels.len() != expected {
        return Err(Error::LengthMismatch(format!(
            "{} labels for a {width}x{height} image, expected {expected}",
            frame.labels.len()
        )));
    }
    let mut pixels = Vec::with_capacity(n);
    let mut acc: u32 = 0;
    let mut held = 0;
    for &label in &frame.labels {
        acc = (acc << 6) | (label & 0x3F) as u32;
        held += 6;
        if held >= 8 && pixels.len() < n {
            held -= 8;
            pixels.push((acc >> held) as u8);
            acc &= (1 << held) - 1;
        }
    }
    GreyImage::new(width, height, pixels)
}

/// Mean squared pixel difference.
pub fn pixel_mse(a: &GreyImage, b: &GreyImage) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::Image(format!(
            "cannot compare {}x{} with {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let sum: u64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| (x.abs_diff(y) as u64).pow(2))
        .sum();
    Ok(sum as f64 / a.pixels.len().max(1) as f64)
}

/// `10·log10(255²/mse)`; infinite for identical images.
pub fn psnr(mse_pixels: f64) -> f64 {
    if mse_pixels == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse_pixels).log10()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageTransmission {
    pub image: GreyImage,
    pub psnr_db: f64,
    pub pixel_mse: f64,
    /// Mean squared label distortion over the frame.
    pub label_mse: f64,
}

/// Pack, transmit, demodulate, unpack and score.
pub fn transmit_image(
    image: &GreyImage,
    constellation: &Constellation,
    model: &ChannelModel,
    seed: u64,
) -> Result<ImageTransmission> {
    transmit_image_with(image, constellation, model, seed, Framing::Stream)
}

pub fn transmit_image_with(
    image: &GreyImage,
    constellation: &Constellation,
    model: &ChannelModel,
    seed: u64,
    framing: Framing,
) -> Result<ImageTransmission> {
    let frame = pack_with(image, framing);
    let received = transmit(&frame.labels, constellation, model, seed)?;
    let demod = Demodulator::indexed(constellation, model);
    let labels: Vec<u8> = received.iter().map(|&p| demod.demodulate(p)).collect();
    let label_sq: u64 = frame
        .labels
        .iter()
        .zip(&labels)
        .map(|(&a, &b)| (a.abs_diff(b) as u64).pow(2))
        .sum();
    let decoded = unpack_with(
        &PayloadFrame {
            labels,
            pad_bits: frame.pad_bits,
        },
        image.width,
        image.height,
        framing,
    )?;
    let mse = pixel_mse(image, &decoded)?;
    Ok(ImageTransmission {
        image: decoded,
        psnr_db: psnr(mse),
        pixel_mse: mse,
        label_mse: label_sq as f64 / frame.labels.len().max(1) as f64,
    })
}
