//! Five-parameter logistic mapping from objective scores to MOS.
//!
//! `f(x) = β1 (½ − 1 / (1 + e^{β2 (x − β3)})) + β4 x + β5`
//!
//! The fit runs in standardised coordinates (scores and MOS shifted to zero
//! mean and unit deviation) and the parameters are mapped back afterwards, so
//! the simplex sees a well-scaled problem whatever the units of the metric.

use serde::{Deserialize, Serialize};

use super::simplex::{nelder_mead, SimplexOptions};
use super::{correlation, EvalError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub beta5: f64,
}

impl LogisticParams {
    pub fn as_array(&self) -> [f64; 5] {
        [self.beta1, self.beta2, self.beta3, self.beta4, self.beta5]
    }

    pub fn from_array(b: [f64; 5]) -> Self {
        Self {
            beta1: b[0],
            beta2: b[1],
            beta3: b[2],
            beta4: b[3],
            beta5: b[4],
        }
    }

    pub fn predict(&self, x: f64) -> f64 {
        logistic(&self.as_array(), x)
    }

    pub fn sse(&self, scores: &[f64], mos: &[f64]) -> f64 {
        sse(&self.as_array(), scores, mos)
    }

    pub fn rmse(&self, scores: &[f64], mos: &[f64]) -> f64 {
        (self.sse(scores, mos) / scores.len() as f64).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

pub fn logistic(b: &[f64; 5], x: f64) -> f64 {
    b[0] * (0.5 - 1.0 / (1.0 + (b[1] * (x - b[2])).exp())) + b[3] * x + b[4]
}

fn sse(b: &[f64; 5], scores: &[f64], mos: &[f64]) -> f64 {
    scores
        .iter()
        .zip(mos)
        .map(|(&x, &y)| {
            let r = logistic(b, x) - y;
            r * r
        })
        .sum()
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub simplex: SimplexOptions,
    /// Relative jitter applied to β2 for the extra starts.
    pub slope_jitter: f64,
    /// Jitter applied to β3 for the extra starts, in units of the score deviation.
    pub center_jitter: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            simplex: SimplexOptions::default(),
            slope_jitter: 0.5,
            center_jitter: 0.5,
        }
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Ordinary least-squares line, returned as the `β1 = 0` member of the family.
pub fn linear_fit(scores: &[f64], mos: &[f64]) -> Result<LogisticParams, EvalError> {
    check_inputs(scores, mos, 2)?;
    let (mx, sx) = mean_std(scores);
    let (my, _) = mean_std(mos);
    let sxy: f64 = scores
        .iter()
        .zip(mos)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let sxx: f64 = scores.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok(LogisticParams {
        beta1: 0.0,
        beta2: 1.0 / sx,
        beta3: mx,
        beta4: slope,
        beta5: my - slope * mx,
    })
}

fn check_inputs(scores: &[f64], mos: &[f64], needed: usize) -> Result<(), EvalError> {
    if scores.len() != mos.len() {
        return Err(EvalError::LengthMismatch(scores.len(), mos.len()));
    }
    if scores.len() < needed {
        return Err(EvalError::TooFewPoints {
            needed,
            got: scores.len(),
        });
    }
    if scores.iter().chain(mos).any(|v| !v.is_finite()) {
        return Err(EvalError::DegenerateInput("non-finite value"));
    }
    let (_, sx) = mean_std(scores);
    if sx == 0.0 {
        return Err(EvalError::DegenerateInput("constant scores"));
    }
    Ok(())
}

/// Least-squares fit of the logistic mapping.
///
/// Four simplex starts (the base guess plus three with β2 and β3 jittered)
/// and one seeded at the least-squares line; the candidate with the smallest
/// squared error wins, so the result is never worse than the straight line.
pub fn fit_logistic(scores: &[f64], mos: &[f64]) -> Result<LogisticParams, EvalError> {
    fit_logistic_with(scores, mos, &FitOptions::default())
}

pub fn fit_logistic_with(
    scores: &[f64],
    mos: &[f64],
    opts: &FitOptions,
) -> Result<LogisticParams, EvalError> {
    check_inputs(scores, mos, 5)?;
    let (mx, sx) = mean_std(scores);
    let (my, sy_raw) = mean_std(mos);
    let sy = if sy_raw > 0.0 { sy_raw } else { 1.0 };
    let z: Vec<f64> = scores.iter().map(|x| (x - mx) / sx).collect();
    let u: Vec<f64> = mos.iter().map(|y| (y - my) / sy).collect();

    let (lo, hi) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let sign = match correlation::plcc(&z, &u) {
        Ok(r) if r < 0.0 => -1.0,
        _ => 1.0,
    };
    let amplitude = sign * (hi - lo).max(f64::MIN_POSITIVE);

    // Standardised coordinates: β2 = 1/std → 1, β3 = mean → 0, β5 = mean(mos) → 0.
    let (sj, cj) = (opts.slope_jitter, opts.center_jitter);
    let mut starts = vec![
        [amplitude, 1.0, 0.0, 0.0, 0.0],
        [amplitude, 1.0 + sj, cj, 0.0, 0.0],
        [amplitude, 1.0 - sj, -cj, 0.0, 0.0],
        [amplitude, 1.0 + sj, -cj, 0.0, 0.0],
    ];
    let line = linear_fit(&z, &u)?;
    starts.push([0.0, 1.0, 0.0, line.beta4, line.beta5]);

    let to_original = |b: &[f64]| {
        LogisticParams::from_array([
            sy * b[0],
            b[1] / sx,
            mx + sx * b[2],
            sy * b[3] / sx,
            my + sy * (b[4] - b[3] * mx / sx),
        ])
    };

    let mut candidates = Vec::new();
    for start in &starts {
        let objective = |b: &[f64]| sse(&[b[0], b[1], b[2], b[3], b[4]], &z, &u);
        let first = nelder_mead(objective, start, &opts.simplex);
        // A restart from the best vertex re-expands a simplex that collapsed early.
        let second = nelder_mead(objective, &first.point, &opts.simplex);
        let best = if second.value <= first.value {
            second
        } else {
            first
        };
        if best.value.is_finite() {
            candidates.push(to_original(&best.point));
        }
    }
    candidates.push(linear_fit(scores, mos)?);

    candidates
        .into_iter()
        .filter(|p| p.is_finite())
        .map(|p| (p.sse(scores, mos), p))
        .filter(|(e, _)| e.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
        .ok_or(EvalError::FitDivergence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        // Box–Muller
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    #[test]
    fn logistic_shape() {
        let b = [2.0, 1.0, 0.5, 0.1, 3.0];
        assert!((logistic(&b, 0.5) - (0.05 + 3.0)).abs() < 1e-15);
        assert!(logistic(&b, 1e6).is_finite());
        assert!(logistic(&b, -1e6).is_finite());
        assert!(logistic(&b, 2.0) > logistic(&b, 1.0));
    }

    #[test]
    fn linear_data_is_exact() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.37 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let p = fit_logistic(&x, &y).unwrap();
        assert!(p.rmse(&x, &y) < 1e-6);
    }

    #[test]
    fn recovers_known_curve() {
        let truth = [2.0, 1.0, 0.5, 0.1, 3.0];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..200).map(|i| -6.0 + 12.0 * i as f64 / 199.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| logistic(&truth, v) + 0.01 * gaussian(&mut rng))
            .collect();
        let p = fit_logistic(&x, &y).unwrap();
        assert!(p.rmse(&x, &y) <= 0.02, "rmse {}", p.rmse(&x, &y));
        let line = linear_fit(&x, &y).unwrap();
        assert!(p.sse(&x, &y) <= line.sse(&x, &y));
    }

    #[test]
    fn too_few_points() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            fit_logistic(&x, &x),
            Err(EvalError::TooFewPoints { needed: 5, got: 4 })
        ));
    }

    #[test]
    fn constant_scores_rejected() {
        let x = [1.0; 6];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(
            fit_logistic(&x, &y),
            Err(EvalError::DegenerateInput(_))
        ));
    }
}
