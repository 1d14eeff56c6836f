use std::time::Instant;

use mug_core::image_io::synthesize_noise;
use mug_core::{score_image, Metric};
use serde::Serialize;

/// Timing summary for repeated scoring of one image.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub metric: Metric,
    pub iterations: usize,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub megapixels_per_second: f64,
    /// Score of the benchmark image; identical on every run for a given seed.
    pub score: f64,
}

/// Nearest-rank percentile of an ascending sample.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Scores seeded uniform noise `iterations` times on the calling thread.
///
/// Noise maximises the number of distinct gradients, so this is the slow
/// end of the metric's cost.
pub fn run_bench(
    width: usize,
    height: usize,
    iterations: usize,
    metric: Metric,
    seed: u64,
) -> BenchReport {
    let iterations = iterations.max(1);
    let img = synthesize_noise(width, height, seed);
    let mut samples = Vec::with_capacity(iterations);
    let mut score = 0.0;
    for _ in 0..iterations {
        let start = Instant::now();
        let result = score_image(&img).expect("bench image is at least 3x3");
        samples.push(start.elapsed().as_secs_f64() * 1e3);
        score = result.score(metric);
    }
    let mean_ms = samples.iter().sum::<f64>() / samples.len() as f64;
    samples.sort_by(f64::total_cmp);
    let megapixels = (width * height) as f64 / 1e6;
    BenchReport {
        width,
        height,
        metric,
        iterations,
        mean_ms,
        p95_ms: percentile(&samples, 95.0),
        megapixels_per_second: megapixels / (mean_ms / 1e3),
        score,
    }
}
