//! Unique-gradient quality scores for JPEG compressed images.
//!
//! The pipeline is: luminance plane, 3×3 Scharr responses over the valid
//! interior, gradient magnitude, the ascending set of distinct magnitudes
//! (the "spectrum"), and from that spectrum the three scores:
//!
//! * **NUG**, the number of distinct magnitudes. Falls as compression grows.
//! * **MUG**, the median of the spectrum after dividing it by the square
//!   root of its standard deviation, divided by NUG. Rises as compression grows.
//! * **MUG⁺**, MUG divided by `M − N + 1` where `N` counts the distinct
//!   spectrum positions `⌈NUG / i⌉`, `i = 2..=M+1`.
//!
//! Inputs built from 8-bit RGB are held on an exact lattice of hundredths
//! (`6R + 63G + 27B`), so the convolution and the distinctness test are
//! carried out in integers and no tolerance is ever involved in deciding
//! whether two magnitudes are the same.

use thiserror::Error;

/// Number of spectrum positions considered by MUG⁺.
pub const M: usize = 19;

/// Luminance weights in hundredths: `L = 0.06 R + 0.63 G + 0.27 B`.
const LUMA_WEIGHTS_CENTI: [u32; 3] = [6, 63, 27];

/// Horizontal Scharr kernel, unnormalised. The vertical kernel is its transpose.
pub const SCHARR_X: [[i32; 3]; 3] = [[3, 0, -3], [10, 0, -10], [3, 0, -3]];

/// Vertical Scharr kernel.
pub const SCHARR_Y: [[i32; 3]; 3] = [[3, 10, 3], [0, 0, 0], [-3, -10, -3]];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("image is {width}x{height}, both dimensions must be at least 3")]
    ImageTooSmall { width: usize, height: usize },
    #[error("spectrum has a single value, its standard deviation is undefined")]
    DegenerateSpectrum,
    #[error("pixel buffer holds {actual} samples, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("luminance values must be finite and within [0, 255]")]
    LuminanceOutOfRange,
    #[error("spectrum values must be finite, nonnegative and strictly ascending")]
    InvalidSpectrum,
}

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, MetricError> {
        if pixels.len() != width * height {
            return Err(MetricError::DimensionMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    /// Grayscale image with replicated channels.
    pub fn from_gray(width: usize, height: usize, gray: &[u8]) -> Result<Self, MetricError> {
        Self::new(width, height, gray.iter().map(|&v| [v, v, v]).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn into_pixels(self) -> Vec<[u8; 3]> {
        self.pixels
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Samples {
    /// Exact luminance × 100.
    Centi(Vec<u32>),
    Real(Vec<f64>),
}

/// Luminance plane the metric operates on.
///
/// Planes derived from RGB keep the exact value `(6R + 63G + 27B) / 100`
/// internally; planes built from arbitrary reals are used as given.
#[derive(Debug, Clone, PartialEq)]
pub struct LuminanceImage {
    width: usize,
    height: usize,
    samples: Samples,
}

impl LuminanceImage {
    /// Builds a plane from real values in `[0, 255]`.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self, MetricError> {
        if values.len() != width * height {
            return Err(MetricError::DimensionMismatch {
                expected: width * height,
                actual: values.len(),
            });
        }
        if values
            .iter()
            .any(|v| !v.is_finite() || !(0.0..=255.0).contains(v))
        {
            return Err(MetricError::LuminanceOutOfRange);
        }
        Ok(Self {
            width,
            height,
            samples: Samples::Real(values),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, x: usize, y: usize) -> f64 {
        let i = y * self.width + x;
        match &self.samples {
            Samples::Centi(v) => f64::from(v[i]) / 100.0,
            Samples::Real(v) => v[i],
        }
    }

    /// All values, row-major.
    pub fn values(&self) -> Vec<f64> {
        match &self.samples {
            Samples::Centi(v) => v.iter().map(|&c| f64::from(c) / 100.0).collect(),
            Samples::Real(v) => v.clone(),
        }
    }
}

/// `L = 0.06 R + 0.63 G + 0.27 B`, unrounded.
///
/// The weights sum to 0.96, so white maps to 244.8.
pub fn rgb_to_luminance(img: &RgbImage) -> LuminanceImage {
    let centi = img
        .pixels
        .iter()
        .map(|p| {
            LUMA_WEIGHTS_CENTI[0] * u32::from(p[0])
                + LUMA_WEIGHTS_CENTI[1] * u32::from(p[1])
                + LUMA_WEIGHTS_CENTI[2] * u32::from(p[2])
        })
        .collect();
    LuminanceImage {
        width: img.width,
        height: img.height,
        samples: Samples::Centi(centi),
    }
}

/// Scharr responses and magnitude over the valid interior of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    gx: Vec<f64>,
    gy: Vec<f64>,
    magnitude: Vec<f64>,
}

impl GradientField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn gx(&self) -> &[f64] {
        &self.gx
    }

    pub fn gy(&self) -> &[f64] {
        &self.gy
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }
}

fn check_size(width: usize, height: usize) -> Result<(), MetricError> {
    if width < 3 || height < 3 {
        return Err(MetricError::ImageTooSmall { width, height });
    }
    Ok(())
}

/// Convolves the plane with the horizontal and vertical Scharr kernels.
///
/// Only pixels whose whole 3×3 window lies inside the image produce an
/// output, so the field is `(w − 2) × (h − 2)`. The kernels are applied as a
/// true convolution (flipped), which makes `gx` positive on a rising
/// left-to-right ramp.
pub fn scharr_gradients(img: &LuminanceImage) -> Result<GradientField, MetricError> {
    check_size(img.width, img.height)?;
    let (w, h) = (img.width, img.height);
    let (ow, oh) = (w - 2, h - 2);
    let n = ow * oh;
    let mut gx = Vec::with_capacity(n);
    let mut gy = Vec::with_capacity(n);
    let mut magnitude = Vec::with_capacity(n);

    match &img.samples {
        Samples::Centi(v) => {
            for y in 1..h - 1 {
                let top = &v[(y - 1) * w..y * w];
                let mid = &v[y * w..(y + 1) * w];
                let bot = &v[(y + 1) * w..(y + 2) * w];
                for x in 1..w - 1 {
                    let (cx, cy) = centi_response(top, mid, bot, x);
                    gx.push(f64::from(cx) / 100.0);
                    gy.push(f64::from(cy) / 100.0);
                    magnitude.push(centi_magnitude(cx, cy));
                }
            }
        }
        Samples::Real(v) => {
            for y in 1..h - 1 {
                let top = &v[(y - 1) * w..y * w];
                let mid = &v[y * w..(y + 1) * w];
                let bot = &v[(y + 1) * w..(y + 2) * w];
                for x in 1..w - 1 {
                    let (rx, ry) = real_response(top, mid, bot, x);
                    gx.push(rx);
                    gy.push(ry);
                    magnitude.push((rx * rx + ry * ry).sqrt());
                }
            }
        }
    }

    Ok(GradientField {
        width: ow,
        height: oh,
        gx,
        gy,
        magnitude,
    })
}

#[inline(always)]
fn centi_response(top: &[u32], mid: &[u32], bot: &[u32], x: usize) -> (i32, i32) {
    let (tl, tc, tr) = (top[x - 1] as i32, top[x] as i32, top[x + 1] as i32);
    let (ml, mr) = (mid[x - 1] as i32, mid[x + 1] as i32);
    let (bl, bc, br) = (bot[x - 1] as i32, bot[x] as i32, bot[x + 1] as i32);
    let gx = 3 * (tr - tl) + 10 * (mr - ml) + 3 * (br - bl);
    let gy = 3 * (bl - tl) + 10 * (bc - tc) + 3 * (br - tr);
    (gx, gy)
}

#[inline(always)]
fn centi_magnitude(cx: i32, cy: i32) -> f64 {
    let sq = i64::from(cx) * i64::from(cx) + i64::from(cy) * i64::from(cy);
    (sq as f64).sqrt() / 100.0
}

// Terms are accumulated in kernel scan order (flipped taps, row by row) so
// the result is reproducible term for term by a plain loop over the kernel.
#[inline(always)]
fn real_response(top: &[f64], mid: &[f64], bot: &[f64], x: usize) -> (f64, f64) {
    let mut gx = 0.0;
    gx += 3.0 * bot[x + 1];
    gx += -3.0 * bot[x - 1];
    gx += 10.0 * mid[x + 1];
    gx += -10.0 * mid[x - 1];
    gx += 3.0 * top[x + 1];
    gx += -3.0 * top[x - 1];

    let mut gy = 0.0;
    gy += 3.0 * bot[x + 1];
    gy += 10.0 * bot[x];
    gy += 3.0 * bot[x - 1];
    gy += -3.0 * top[x + 1];
    gy += -10.0 * top[x];
    gy += -3.0 * top[x - 1];
    (gx, gy)
}

/// Distinct gradient magnitudes in strictly ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct UniqueGradientSpectrum {
    values: Vec<f64>,
}

impl UniqueGradientSpectrum {
    /// Validates an explicit list of magnitudes.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self, MetricError> {
        let ascending = values.windows(2).all(|w| w[0] < w[1]);
        let valid = values.iter().all(|v| v.is_finite() && *v >= 0.0);
        if values.is_empty() || !ascending || !valid {
            return Err(MetricError::InvalidSpectrum);
        }
        Ok(Self { values })
    }

    /// Sorts and deduplicates arbitrary nonnegative magnitudes.
    pub fn from_magnitudes(magnitudes: &[f64]) -> Result<Self, MetricError> {
        let mut values = magnitudes.to_vec();
        values.sort_unstable_by(f64::total_cmp);
        values.dedup_by(|a, b| a.to_bits() == b.to_bits());
        Self::from_sorted(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// NUG: number of distinct magnitudes.
    pub fn nug(&self) -> usize {
        self.values.len()
    }

    /// Multiplies every value by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self, MetricError> {
        Self::from_sorted(self.values.iter().map(|v| v * c).collect())
    }
}

/// Sorted distinct magnitudes of a gradient field, deduplicated on exact bits.
pub fn unique_gradient_spectrum(field: &GradientField) -> UniqueGradientSpectrum {
    // A field always has at least one pixel because images are at least 3×3.
    UniqueGradientSpectrum::from_magnitudes(&field.magnitude)
        .expect("gradient magnitudes are finite and nonnegative")
}

/// Sample standard deviation (n − 1 denominator).
fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// `uG / sqrt(σ(uG))` with `σ` the sample standard deviation of the spectrum.
pub fn normalize_spectrum(spec: &UniqueGradientSpectrum) -> Result<Vec<f64>, MetricError> {
    if spec.nug() < 2 {
        return Err(MetricError::DegenerateSpectrum);
    }
    let scale = sample_std(&spec.values).sqrt();
    Ok(spec.values.iter().map(|v| v / scale).collect())
}

/// 1-based position `⌈nug / i⌉` in the ascending spectrum. For `i = 2` this
/// is the median (the lower one when `nug` is even).
fn spectrum_index(nug: usize, i: usize) -> usize {
    nug.div_ceil(i)
}

/// MUG: median of the normalised spectrum divided by NUG.
///
/// A single-valued spectrum (constant image) scores 0.
pub fn mug_score(spec: &UniqueGradientSpectrum) -> f64 {
    let nug = spec.nug();
    match normalize_spectrum(spec) {
        Ok(normalized) => normalized[spectrum_index(nug, 2) - 1] / nug as f64,
        Err(_) => 0.0,
    }
}

/// Number of distinct positions among `⌈nug / i⌉`, `i = 2..=M+1`.
pub fn available_positions(nug: usize) -> usize {
    let mut indices: Vec<usize> = (2..=M + 1).map(|i| spectrum_index(nug, i)).collect();
    indices.dedup();
    indices.len()
}

/// MUG⁺ and the count `N` of available spectrum positions.
pub fn mug_plus_score(spec: &UniqueGradientSpectrum) -> (f64, usize) {
    let n = available_positions(spec.nug());
    (mug_score(spec) / (M - n + 1) as f64, n)
}

/// All scores for one image.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricResult {
    pub nug: usize,
    pub mug: f64,
    pub mug_plus: f64,
    pub n_available: usize,
}

impl MetricResult {
    pub fn from_spectrum(spec: &UniqueGradientSpectrum) -> Self {
        let mug = mug_score(spec);
        let n_available = available_positions(spec.nug());
        Self {
            nug: spec.nug(),
            mug,
            mug_plus: mug / (M - n_available + 1) as f64,
            n_available,
        }
    }

    /// `M − N + 1`, the integer dividing MUG into MUG⁺.
    pub fn divisor(&self) -> usize {
        M - self.n_available + 1
    }

    pub fn score(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Nug => self.nug as f64,
            Metric::Mug => self.mug,
            Metric::MugPlus => self.mug_plus,
        }
    }
}

/// Selects one of the three scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Nug,
    Mug,
    MugPlus,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Nug, Metric::Mug, Metric::MugPlus];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Nug => "nug",
            Metric::Mug => "mug",
            Metric::MugPlus => "mug_plus",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nug" => Ok(Metric::Nug),
            "mug" => Ok(Metric::Mug),
            "mug+" | "mug_plus" | "mugplus" | "mug-plus" => Ok(Metric::MugPlus),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

// Same spectrum as `unique_gradient_spectrum(scharr_gradients(..))` for lattice
// planes, without materialising the field: squared magnitudes are exact
// integers, and `sqrt(s) / 100` is strictly increasing in `s` over the range a
// 3×3 Scharr response on 8-bit input can reach, so sorting and deduplicating
// `s` gives the same values in the same order.
fn lattice_spectrum(v: &[u32], w: usize, h: usize) -> UniqueGradientSpectrum {
    let mut squares: Vec<u64> = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        let top = &v[(y - 1) * w..y * w];
        let mid = &v[y * w..(y + 1) * w];
        let bot = &v[(y + 1) * w..(y + 2) * w];
        for x in 1..w - 1 {
            let (cx, cy) = centi_response(top, mid, bot, x);
            squares.push((i64::from(cx) * i64::from(cx) + i64::from(cy) * i64::from(cy)) as u64);
        }
    }
    radix_sort(&mut squares);
    squares.dedup();
    UniqueGradientSpectrum {
        values: squares.iter().map(|&s| (s as f64).sqrt() / 100.0).collect(),
    }
}

/// LSD radix sort on 11-bit digits; squared magnitudes fit in 40 bits.
fn radix_sort(keys: &mut Vec<u64>) {
    const BITS: u32 = 11;
    const BUCKETS: usize = 1 << BITS;
    let max = keys.iter().copied().max().unwrap_or(0);
    let mut scratch = vec![0u64; keys.len()];
    let mut shift = 0;
    while shift < 64 && (max >> shift) != 0 {
        let mut counts = vec![0usize; BUCKETS];
        for &k in keys.iter() {
            counts[((k >> shift) as usize) & (BUCKETS - 1)] += 1;
        }
        let mut offset = 0;
        for c in counts.iter_mut() {
            let n = *c;
            *c = offset;
            offset += n;
        }
        for &k in keys.iter() {
            let d = ((k >> shift) as usize) & (BUCKETS - 1);
            scratch[counts[d]] = k;
            counts[d] += 1;
        }
        std::mem::swap(keys, &mut scratch);
        shift += BITS;
    }
}

/// Spectrum of a plane, same result as going through [`scharr_gradients`].
pub fn luminance_spectrum(img: &LuminanceImage) -> Result<UniqueGradientSpectrum, MetricError> {
    check_size(img.width, img.height)?;
    match &img.samples {
        Samples::Centi(v) => Ok(lattice_spectrum(v, img.width, img.height)),
        Samples::Real(_) => Ok(unique_gradient_spectrum(&scharr_gradients(img)?)),
    }
}

/// Full pipeline on a luminance plane.
pub fn score_luminance(img: &LuminanceImage) -> Result<MetricResult, MetricError> {
    Ok(MetricResult::from_spectrum(&luminance_spectrum(img)?))
}

/// Full pipeline on an RGB image.
pub fn score_image(img: &RgbImage) -> Result<MetricResult, MetricError> {
    check_size(img.width, img.height)?;
    score_luminance(&rgb_to_luminance(img))
}
