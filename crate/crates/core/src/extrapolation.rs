//! Log-linear fit of a noise-gain series and extrapolation to `G = 0`.

use serde::{Deserialize, Serialize};

use crate::amplification::SampleEstimate;
use crate::error::{PeaError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub gain: f64,
    pub mean: f64,
    pub stderr: f64,
    pub shots: u64,
}

impl GainPoint {
    pub fn from_estimate(gain: f64, est: &SampleEstimate) -> Self {
        Self { gain, mean: est.mean, stderr: est.stderr, shots: est.shots }
    }
}

/// At least two points with strictly increasing gains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainSeries {
    points: Vec<GainPoint>,
}

impl GainSeries {
    pub fn new(points: Vec<GainPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(PeaError::Series(format!("need at least 2 points, got {}", points.len())));
        }
        if !points.windows(2).all(|w| w[0].gain < w[1].gain) {
            return Err(PeaError::Series("gains must be strictly increasing".into()));
        }
        for p in &points {
            if !(p.gain.is_finite() && p.mean.is_finite() && p.stderr.is_finite() && p.stderr >= 0.0) {
                return Err(PeaError::Series(format!("invalid point {p:?}")));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[GainPoint] {
        &self.points
    }

    pub fn gains(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gain).collect()
    }

    /// Relative errors `Δy_i = stderr_i / |mean_i|`.
    pub fn log_errors(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.stderr / p.mean.abs()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Weight log-points by `1/Δy²` instead of ordinary least squares.
    pub weighted: bool,
    /// Points with `|mean| <= signal_threshold * stderr` abort the fit.
    pub signal_threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { weighted: false, signal_threshold: 3.0 }
    }
}

/// `ln|F(G)| ≈ a G + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub delta_b: f64,
    pub sign: f64,
    /// `ln|mean_i| - (a G_i + b)`.
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationResult {
    pub value: f64,
    pub error: f64,
    pub fit: FitResult,
}

/// Standard deviation of the OLS intercept given per-point log errors:
/// `sqrt(Σ_j Δy_j² [Σ_i x_i (x_i - x_j)]²) / (R Σx² - (Σx)²)`.
pub fn intercept_error(gains: &[f64], log_errors: &[f64]) -> Result<f64> {
    let denom = ols_denominator(gains)?;
    let num: f64 = gains
        .iter()
        .zip(log_errors)
        .map(|(&xj, &dy)| {
            let c: f64 = gains.iter().map(|&xi| xi * (xi - xj)).sum();
            dy * dy * c * c
        })
        .sum();
    Ok(num.sqrt() / denom)
}

fn ols_denominator(gains: &[f64]) -> Result<f64> {
    let r = gains.len() as f64;
    let sx: f64 = gains.iter().sum();
    let sxx: f64 = gains.iter().map(|x| x * x).sum();
    let d = r * sxx - sx * sx;
    if !(d > 0.0) {
        return Err(PeaError::Series("gains are degenerate (all equal)".into()));
    }
    Ok(d)
}

pub fn fit_log_linear(series: &GainSeries) -> Result<FitResult> {
    fit_log_linear_with(series, &FitOptions::default())
}

pub fn fit_log_linear_with(series: &GainSeries, options: &FitOptions) -> Result<FitResult> {
    let pts = series.points();
    for p in pts {
        if p.mean.abs() <= options.signal_threshold * p.stderr || p.mean == 0.0 {
            return Err(PeaError::SignalLost { gain: p.gain, mean: p.mean, stderr: p.stderr });
        }
    }
    let sign = pts[0].mean.signum();
    if pts.iter().any(|p| p.mean.signum() != sign) {
        return Err(PeaError::SignInconsistent);
    }
    let x = series.gains();
    let y: Vec<f64> = pts.iter().map(|p| p.mean.abs().ln()).collect();
    let dy = series.log_errors();

    let (a, b, delta_b) = if options.weighted {
        if dy.contains(&0.0) {
            return Err(PeaError::Series("weighted fit needs non-zero standard errors".into()));
        }
        let w: Vec<f64> = dy.iter().map(|d| 1.0 / (d * d)).collect();
        let sw: f64 = w.iter().sum();
        let swx: f64 = w.iter().zip(&x).map(|(w, x)| w * x).sum();
        let swxx: f64 = w.iter().zip(&x).map(|(w, x)| w * x * x).sum();
        let swy: f64 = w.iter().zip(&y).map(|(w, y)| w * y).sum();
        let swxy: f64 = w.iter().zip(&x).zip(&y).map(|((w, x), y)| w * x * y).sum();
        let d = sw * swxx - swx * swx;
        if !(d > 0.0) {
            return Err(PeaError::Series("gains are degenerate (all equal)".into()));
        }
        ((sw * swxy - swx * swy) / d, (swxx * swy - swx * swxy) / d, (swxx / d).sqrt())
    } else {
        let r = x.len() as f64;
        let d = ols_denominator(&x)?;
        let sx: f64 = x.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        ((r * sxy - sx * sy) / d, (sxx * sy - sx * sxy) / d, intercept_error(&x, &dy)?)
    };
    let residuals = x.iter().zip(&y).map(|(x, y)| y - (a * x + b)).collect();
    Ok(FitResult { a, b, delta_b, sign, residuals })
}

/// `F(0) = sign · e^b` with first-order error `e^b · Δb`.
pub fn extrapolate(fit: &FitResult) -> ExtrapolationResult {
    let scale = fit.b.exp();
    ExtrapolationResult { value: fit.sign * scale, error: scale * fit.delta_b, fit: fit.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn point(gain: f64, mean: f64, stderr: f64) -> GainPoint {
        GainPoint { gain, mean, stderr, shots: 100 }
    }

    #[test]
    fn exact_two_point_exponential() {
        let s = GainSeries::new(vec![point(1.0, (-0.3f64).exp(), 0.0), point(2.0, (-0.4f64).exp(), 0.0)]).unwrap();
        let fit = fit_log_linear(&s).unwrap();
        assert_abs_diff_eq!(fit.a, -0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.b, -0.2, epsilon = 1e-14);
        assert_eq!(fit.delta_b, 0.0);
        let ex = extrapolate(&fit);
        assert_abs_diff_eq!(ex.value, 0.818730753077982, epsilon = 1e-12);
        assert_eq!(ex.error, 0.0);
    }

    #[test]
    fn flat_series() {
        let s = GainSeries::new(vec![point(1.0, 0.5, 0.0), point(1.5, 0.5, 0.0), point(2.0, 0.5, 0.0)]).unwrap();
        let fit = fit_log_linear(&s).unwrap();
        assert_abs_diff_eq!(fit.a, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.b, 0.5f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn extrapolate_examples() {
        let fit = FitResult { a: 0.0, b: 0.0, delta_b: 0.01, sign: 1.0, residuals: vec![] };
        let ex = extrapolate(&fit);
        assert_eq!((ex.value, ex.error), (1.0, 0.01));
        let fit = FitResult { a: 0.0, b: 0.5f64.ln(), delta_b: 0.0, sign: -1.0, residuals: vec![] };
        assert_abs_diff_eq!(extrapolate(&fit).value, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn negative_series_keeps_sign() {
        let s = GainSeries::new(vec![point(1.0, -(-0.3f64).exp(), 0.001), point(2.0, -(-0.4f64).exp(), 0.001)]).unwrap();
        let ex = extrapolate(&fit_log_linear(&s).unwrap());
        assert_abs_diff_eq!(ex.value, -(-0.2f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn series_and_fit_errors() {
        assert!(GainSeries::new(vec![point(1.0, 0.5, 0.0)]).is_err());
        assert!(GainSeries::new(vec![point(2.0, 0.5, 0.0), point(1.0, 0.4, 0.0)]).is_err());
        assert!(GainSeries::new(vec![point(1.0, 0.5, 0.0), point(1.0, 0.4, 0.0)]).is_err());
        let lost = GainSeries::new(vec![point(1.0, 0.5, 0.01), point(2.0, 0.02, 0.01)]).unwrap();
        assert!(matches!(fit_log_linear(&lost), Err(PeaError::SignalLost { .. })));
        let mixed = GainSeries::new(vec![point(1.0, 0.5, 0.01), point(2.0, -0.3, 0.01)]).unwrap();
        assert!(matches!(fit_log_linear(&mixed), Err(PeaError::SignInconsistent)));
        let zero = GainSeries::new(vec![point(1.0, 0.5, 0.0), point(2.0, 0.0, 0.0)]).unwrap();
        assert!(matches!(fit_log_linear(&zero), Err(PeaError::SignalLost { .. })));
    }

    #[test]
    fn intercept_error_matches_monte_carlo() {
        // Perturb ln|mean| by ξ_i Δy_i and look at the spread of the OLS intercept.
        let gains = [1.0, 2.3];
        let means = [0.18, 0.04];
        let stderrs = [0.004, 0.003];
        let s = GainSeries::new(
            gains.iter().zip(&means).zip(&stderrs).map(|((&g, &m), &e)| point(g, m, e)).collect(),
        )
        .unwrap();
        let closed = fit_log_linear(&s).unwrap().delta_b;

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 100_000;
        let dy: Vec<f64> = stderrs.iter().zip(&means).map(|(e, m)| e / m).collect();
        let intercepts: Vec<f64> = (0..draws)
            .map(|_| {
                let y: Vec<f64> = means
                    .iter()
                    .zip(&dy)
                    .map(|(m, d)| {
                        let xi: f64 = StandardNormal.sample(&mut rng);
                        m.ln() + xi * d
                    })
                    .collect();
                // two-point line through (g0, y0), (g1, y1)
                let slope = (y[1] - y[0]) / (gains[1] - gains[0]);
                y[0] - slope * gains[0]
            })
            .collect();
        let mean = intercepts.iter().sum::<f64>() / draws as f64;
        let var = intercepts.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (draws as f64 - 1.0);
        assert_relative_eq!(closed, var.sqrt(), max_relative = 0.02);
    }

    #[test]
    fn weighted_fit_on_exact_data() {
        let pts = (0..4).map(|k| {
            let g = 1.0 + 0.2 * k as f64;
            point(g, 0.7 * (-0.3 * g).exp(), 0.001 * (1.0 + k as f64))
        });
        let s = GainSeries::new(pts.collect()).unwrap();
        let opts = FitOptions { weighted: true, ..FitOptions::default() };
        let fit = fit_log_linear_with(&s, &opts).unwrap();
        assert_abs_diff_eq!(fit.a, -0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.b, 0.7f64.ln(), epsilon = 1e-12);
        assert!(fit.delta_b > 0.0);
    }

    proptest! {
        #[test]
        fn recovers_single_exponential(amp in 0.01f64..2.0, base in 0.2f64..1.5, gains in prop::collection::btree_set(0u32..40, 2..6)) {
            let pts: Vec<GainPoint> = gains.iter().map(|&k| {
                let g = 1.0 + 0.1 * k as f64;
                point(g, amp * base.powf(g), 0.0)
            }).collect();
            let ex = extrapolate(&fit_log_linear(&GainSeries::new(pts).unwrap()).unwrap());
            prop_assert!(((ex.value - amp) / amp).abs() < 1e-12);
        }

        #[test]
        fn scaling_means_scales_value(scale in 0.1f64..10.0, noise in prop::collection::vec(-0.05f64..0.05, 3)) {
            let pts: Vec<GainPoint> = noise.iter().enumerate().map(|(k, eps)| {
                let g = 1.0 + 0.5 * k as f64;
                point(g, (-0.4 * g + eps).exp(), 0.01)
            }).collect();
            let scaled: Vec<GainPoint> = pts.iter().map(|p| GainPoint { mean: p.mean * scale, stderr: p.stderr * scale, ..*p }).collect();
            let a = extrapolate(&fit_log_linear(&GainSeries::new(pts).unwrap()).unwrap());
            let b = extrapolate(&fit_log_linear(&GainSeries::new(scaled).unwrap()).unwrap());
            prop_assert!((a.fit.delta_b - b.fit.delta_b).abs() < 1e-12 * a.fit.delta_b.max(1.0));
            prop_assert!((b.value - scale * a.value).abs() < 1e-10 * b.value.abs());
        }

        #[test]
        fn point_on_line_leaves_fit(noise in prop::collection::vec(-0.1f64..0.1, 3), extra in 0.0f64..3.0) {
            let pts: Vec<GainPoint> = noise.iter().enumerate().map(|(k, eps)| {
                let g = 1.0 + k as f64;
                point(g, (-0.3 * g + eps).exp(), 0.0)
            }).collect();
            let fit = fit_log_linear(&GainSeries::new(pts.clone()).unwrap()).unwrap();
            let g = 3.0 + 0.1 + extra;
            let mut more = pts;
            more.push(point(g, (fit.a * g + fit.b).exp(), 0.0));
            let refit = fit_log_linear(&GainSeries::new(more).unwrap()).unwrap();
            prop_assert!((refit.a - fit.a).abs() < 1e-12);
            prop_assert!((refit.b - fit.b).abs() < 1e-12);
        }
    }
}
