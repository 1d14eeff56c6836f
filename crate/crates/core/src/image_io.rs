//! Decoding, encoding, cropping and synthetic fixtures.
//!
//! Container handling is delegated to the `image` crate; everything the
//! metric sees goes through [`RgbImage`], with grayscale sources promoted to
//! three identical channels.

use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::{ImageError, ImageFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::metric::RgbImage;

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("unsupported image format")]
    UnsupportedFormat,
    #[error("corrupt image stream: {0}")]
    CorruptStream(String),
    #[error("JPEG quality {0} is outside 1..=100")]
    QualityOutOfRange(u8),
    #[error("cannot crop {k} pixels from each border of a {width}x{height} image")]
    CropTooLarge {
        width: usize,
        height: usize,
        k: usize,
    },
    #[error("invalid chessboard geometry: size {size}, block {block}")]
    InvalidGeometry { size: usize, block: usize },
    #[error("encoding failed: {0}")]
    Encode(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Containers understood by [`decode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jpeg,
    Png,
    Bmp,
    Pgm,
}

impl Format {
    fn from_image_format(f: ImageFormat) -> Option<Self> {
        match f {
            ImageFormat::Jpeg => Some(Format::Jpeg),
            ImageFormat::Png => Some(Format::Png),
            ImageFormat::Bmp => Some(Format::Bmp),
            ImageFormat::Pnm => Some(Format::Pgm),
            _ => None,
        }
    }

    fn image_format(self) -> ImageFormat {
        match self {
            Format::Jpeg => ImageFormat::Jpeg,
            Format::Png => ImageFormat::Png,
            Format::Bmp => ImageFormat::Bmp,
            Format::Pgm => ImageFormat::Pnm,
        }
    }
}

/// Raw container bytes tagged with their format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedImage {
    pub bytes: Vec<u8>,
    pub format: Format,
}

impl EncodedImage {
    /// Sniffs the container from its magic bytes.
    pub fn sniff(bytes: Vec<u8>) -> Result<Self, ImageIoError> {
        let format = image::guess_format(&bytes)
            .ok()
            .and_then(Format::from_image_format)
            .ok_or(ImageIoError::UnsupportedFormat)?;
        if format == Format::Pgm && !bytes.starts_with(b"P5") {
            return Err(ImageIoError::UnsupportedFormat);
        }
        Ok(Self { bytes, format })
    }
}

fn map_decode_error(e: ImageError) -> ImageIoError {
    match e {
        ImageError::Unsupported(_) => ImageIoError::UnsupportedFormat,
        other => ImageIoError::CorruptStream(other.to_string()),
    }
}

// The JPEG decoder pads a stream that stops early instead of failing, so a
// missing end-of-image marker is treated as truncation.
fn check_jpeg_terminated(bytes: &[u8]) -> Result<(), ImageIoError> {
    let trimmed = match bytes.iter().rposition(|&b| b != 0) {
        Some(end) => &bytes[..=end],
        None => bytes,
    };
    if trimmed.ends_with(&[0xFF, 0xD9]) {
        Ok(())
    } else {
        Err(ImageIoError::CorruptStream(
            "JPEG stream ends without an end-of-image marker".into(),
        ))
    }
}

pub fn decode(encoded: &EncodedImage) -> Result<RgbImage, ImageIoError> {
    if encoded.format == Format::Jpeg {
        check_jpeg_terminated(&encoded.bytes)?;
    }
    let dynamic =
        image::load_from_memory_with_format(&encoded.bytes, encoded.format.image_format())
            .map_err(map_decode_error)?;
    let rgb = dynamic.into_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let pixels = rgb.pixels().map(|p| p.0).collect();
    RgbImage::new(w, h, pixels).map_err(|e| ImageIoError::CorruptStream(e.to_string()))
}

/// Sniffs and decodes raw bytes.
pub fn decode_bytes(bytes: Vec<u8>) -> Result<RgbImage, ImageIoError> {
    decode(&EncodedImage::sniff(bytes)?)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<RgbImage, ImageIoError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ImageIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_bytes(bytes)
}

fn to_buffer(img: &RgbImage) -> image::RgbImage {
    let raw: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    image::RgbImage::from_raw(img.width() as u32, img.height() as u32, raw)
        .expect("pixel count matches dimensions")
}

/// Baseline JPEG at the given quality factor (1..=100).
pub fn encode_jpeg(img: &RgbImage, quality: u8) -> Result<EncodedImage, ImageIoError> {
    if !(1..=100).contains(&quality) {
        return Err(ImageIoError::QualityOutOfRange(quality));
    }
    let mut bytes = Vec::new();
    JpegEncoder::new_with_quality(&mut bytes, quality)
        .encode_image(&to_buffer(img))
        .map_err(|e| ImageIoError::Encode(e.to_string()))?;
    Ok(EncodedImage {
        bytes,
        format: Format::Jpeg,
    })
}

pub fn encode_png(img: &RgbImage) -> Result<EncodedImage, ImageIoError> {
    let mut cursor = Cursor::new(Vec::new());
    to_buffer(img)
        .write_to(&mut cursor, ImageFormat::Png)
        .map_err(|e| ImageIoError::Encode(e.to_string()))?;
    Ok(EncodedImage {
        bytes: cursor.into_inner(),
        format: Format::Png,
    })
}

/// Removes `k` pixels from every border.
pub fn crop_border(img: &RgbImage, k: usize) -> Result<RgbImage, ImageIoError> {
    let (w, h) = (img.width(), img.height());
    if w <= 2 * k || h <= 2 * k {
        return Err(ImageIoError::CropTooLarge {
            width: w,
            height: h,
            k,
        });
    }
    if k == 0 {
        return Ok(img.clone());
    }
    Ok(RgbImage::from_fn(w - 2 * k, h - 2 * k, |x, y| {
        img.pixel(x + k, y + k)
    }))
}

/// Square board of alternating `lo`/`hi` blocks, top-left block `lo`.
pub fn synthesize_chessboard(
    size: usize,
    block: usize,
    lo: u8,
    hi: u8,
) -> Result<RgbImage, ImageIoError> {
    if size == 0 || block == 0 || !size.is_multiple_of(block) {
        return Err(ImageIoError::InvalidGeometry { size, block });
    }
    Ok(RgbImage::from_fn(size, size, |x, y| {
        let v = if (x / block + y / block).is_multiple_of(2) {
            lo
        } else {
            hi
        };
        [v, v, v]
    }))
}

/// Uniform RGB noise from a fixed seed.
pub fn synthesize_noise(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::from_fn(width, height, |_, _| rng.gen())
}

/// Deterministic photo-like scene: smooth illumination, soft-edged shapes,
/// fractal texture and mild sensor noise.
///
/// Used as a stand-in for natural photographs in the ladder and misalignment
/// fixtures; different seeds give different layouts and palettes.
pub fn synthesize_scene(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (wf, hf) = (width as f64, height as f64);

    let base: [f64; 3] = [
        rng.gen_range(60.0..150.0),
        rng.gen_range(60.0..150.0),
        rng.gen_range(60.0..150.0),
    ];
    let tilt = [rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0)];

    struct Shape {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        color: [f64; 3],
        softness: f64,
    }
    let shapes: Vec<Shape> = (0..rng.gen_range(6..12))
        .map(|_| Shape {
            cx: rng.gen_range(0.0..wf),
            cy: rng.gen_range(0.0..hf),
            rx: rng.gen_range(0.05..0.3) * wf,
            ry: rng.gen_range(0.05..0.3) * hf,
            color: [
                rng.gen_range(10.0..245.0),
                rng.gen_range(10.0..245.0),
                rng.gen_range(10.0..245.0),
            ],
            softness: rng.gen_range(0.5..3.0),
        })
        .collect();

    let texture = ValueNoise::new(&mut rng, 5);
    let tex_amp = rng.gen_range(10.0..35.0);
    let tex_scale = rng.gen_range(8.0..24.0);
    let noise_amp = rng.gen_range(1.0..3.0);

    RgbImage::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let illum = tilt[0] * (xf / wf - 0.5) + tilt[1] * (yf / hf - 0.5);
        let mut c = [base[0] + illum, base[1] + illum, base[2] + illum];
        for s in &shapes {
            let dx = (xf - s.cx) / s.rx;
            let dy = (yf - s.cy) / s.ry;
            // Signed distance to the ellipse edge, in pixels.
            let d = ((dx * dx + dy * dy).sqrt() - 1.0) * s.rx.min(s.ry);
            let alpha = 1.0 / (1.0 + (d / s.softness).exp());
            for ch in 0..3 {
                c[ch] = c[ch] * (1.0 - alpha) + s.color[ch] * alpha;
            }
        }
        let t = tex_amp * texture.sample(xf / tex_scale, yf / tex_scale);
        let mut out = [0u8; 3];
        for ch in 0..3 {
            let n = noise_amp * (rng.gen::<f64>() - 0.5) * 2.0;
            out[ch] = (c[ch] + t + n).round().clamp(0.0, 255.0) as u8;
        }
        out
    })
}

/// Multi-octave lattice value noise in `[-1, 1]`.
struct ValueNoise {
    lattice: Vec<f64>,
    octaves: usize,
}

const NOISE_PERIOD: usize = 256;

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, octaves: usize) -> Self {
        let lattice = (0..NOISE_PERIOD * NOISE_PERIOD)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        Self { lattice, octaves }
    }

    fn at(&self, ix: i64, iy: i64) -> f64 {
        let p = NOISE_PERIOD as i64;
        self.lattice[(iy.rem_euclid(p) * p + ix.rem_euclid(p)) as usize]
    }

    fn single(&self, x: f64, y: f64) -> f64 {
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
        let (ix, iy) = (x0 as i64, y0 as i64);
        let top = self.at(ix, iy) * (1.0 - sx) + self.at(ix + 1, iy) * sx;
        let bot = self.at(ix, iy + 1) * (1.0 - sx) + self.at(ix + 1, iy + 1) * sx;
        top * (1.0 - sy) + bot * sy
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let (mut amp, mut freq, mut total, mut norm) = (1.0, 1.0, 0.0, 0.0);
        for _ in 0..self.octaves {
            total += amp * self.single(x * freq, y * freq);
            norm += amp;
            amp *= 0.55;
            freq *= 2.0;
        }
        total / norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RgbImage {
        RgbImage::from_fn(2, 2, |x, y| [x as u8 * 200, y as u8 * 100, 7])
    }

    #[test]
    fn png_round_trip() {
        let img = sample();
        let back = decode(&encode_png(&img).unwrap()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_promotes_gray() {
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 10, 20, 30, 40, 255]);
        let img = decode_bytes(bytes).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.pixel(1, 0), [10, 10, 10]);
        assert_eq!(img.pixel(2, 1), [255, 255, 255]);
    }

    #[test]
    fn truncated_jpeg_is_corrupt() {
        let img = synthesize_scene(64, 48, 1);
        let jpeg = encode_jpeg(&img, 80).unwrap();
        let cut = EncodedImage {
            bytes: jpeg.bytes[..jpeg.bytes.len() / 2].to_vec(),
            format: Format::Jpeg,
        };
        assert!(matches!(decode(&cut), Err(ImageIoError::CorruptStream(_))));
    }

    #[test]
    fn unknown_bytes_unsupported() {
        assert!(matches!(
            decode_bytes(b"hello world, not an image".to_vec()),
            Err(ImageIoError::UnsupportedFormat)
        ));
    }

    #[test]
    fn jpeg_keeps_dimensions_and_shrinks_with_quality() {
        let img = synthesize_scene(96, 80, 3);
        let hi = encode_jpeg(&img, 90).unwrap();
        let lo = encode_jpeg(&img, 10).unwrap();
        assert!(lo.bytes.len() < hi.bytes.len());
        let back = decode(&hi).unwrap();
        assert_eq!((back.width(), back.height()), (96, 80));
    }

    #[test]
    fn jpeg_quality_range() {
        let img = sample();
        assert!(matches!(
            encode_jpeg(&img, 0),
            Err(ImageIoError::QualityOutOfRange(0))
        ));
        assert!(matches!(
            encode_jpeg(&img, 101),
            Err(ImageIoError::QualityOutOfRange(101))
        ));
        assert!(encode_jpeg(&img, 1).is_ok());
        assert!(encode_jpeg(&img, 100).is_ok());
    }

    #[test]
    fn crop_geometry() {
        let img = RgbImage::from_fn(10, 10, |x, y| [x as u8, y as u8, 0]);
        let c = crop_border(&img, 1).unwrap();
        assert_eq!((c.width(), c.height()), (8, 8));
        assert_eq!(c.pixel(0, 0), img.pixel(1, 1));
        assert_eq!(crop_border(&img, 0).unwrap(), img);
        let small = RgbImage::from_fn(3, 3, |_, _| [0, 0, 0]);
        assert!(matches!(
            crop_border(&small, 2),
            Err(ImageIoError::CropTooLarge { .. })
        ));
    }

    #[test]
    fn chessboard() {
        let b = synthesize_chessboard(2, 1, 0, 255).unwrap();
        assert_eq!(b.pixel(0, 0), [0; 3]);
        assert_eq!(b.pixel(1, 0), [255; 3]);
        assert_eq!(b.pixel(0, 1), [255; 3]);
        assert_eq!(b.pixel(1, 1), [0; 3]);

        let big = synthesize_chessboard(1024, 128, 0, 255).unwrap();
        assert_eq!(big.width(), 1024);
        assert_eq!(big.pixel(127, 0), [0; 3]);
        assert_eq!(big.pixel(128, 0), [255; 3]);
        assert_eq!(big.pixel(1023, 1023), [0; 3]);

        assert!(matches!(
            synthesize_chessboard(8, 3, 0, 255),
            Err(ImageIoError::InvalidGeometry { size: 8, block: 3 })
        ));
    }

    #[test]
    fn scene_is_deterministic() {
        assert_eq!(synthesize_scene(40, 30, 9), synthesize_scene(40, 30, 9));
        assert_ne!(synthesize_scene(40, 30, 9), synthesize_scene(40, 30, 10));
    }
}
