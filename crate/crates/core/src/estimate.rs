//! Extrapolation of `D_∞` from a finite distance series.
//!
//! Time is rescaled as `x_k = k^-γ`, so `k → ∞` maps to `x → 0`. The
//! estimate `y` is the `x = 0` intercept of the least-squares line through
//! `(x_k, D_k)`, with `γ` picked from a grid by minimal residual. The lower
//! estimate `L` is the smallest intercept among secants through
//! consecutive rescaled points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::krylov::DistanceSeries;

/// Diagnostic floor for the lower estimate.
pub const LOWER_ESTIMATE_FLOOR: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("series has {len} terms; fitting from k = {tail_start} needs at least {needed}")]
    SeriesTooShort {
        len: usize,
        tail_start: usize,
        needed: usize,
    },
    #[error("rescaling exponent must be positive and finite, got {0}")]
    NonPositiveGamma(f64),
    #[error("exponent grid is empty")]
    EmptyGrid,
    #[error("need at least two points with k >= max(tail_start, 1), found {0}")]
    TooFewPoints(usize),
    #[error("invalid exponent range: min {min}, max {max}, step {step}")]
    InvalidGammaRange { min: f64, max: f64, step: f64 },
}

/// Evenly spaced grid `min, min + step, …, ≤ max`, each value rounded to
/// 12 decimals so that e.g. `0.1 + 3·0.05` prints as `0.25`.
pub fn gamma_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, EstimateError> {
    let bad = || EstimateError::InvalidGammaRange { min, max, step };
    if !(min > 0.0 && max >= min && step > 0.0 && max.is_finite()) {
        return Err(bad());
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((min + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub gamma_grid: Vec<f64>,
    /// First `k` used by both estimators; `None` means `n / 2`.
    pub tail_start: Option<usize>,
}

impl Default for FitConfig {
    /// γ ∈ {0.10, 0.15, …, 2.00}, latter half of the series.
    fn default() -> Self {
        Self {
            gamma_grid: gamma_grid(0.10, 2.00, 0.05).expect("static grid"),
            tail_start: None,
        }
    }
}

impl FitConfig {
    pub fn tail_start_for(&self, depth: usize) -> usize {
        self.tail_start.unwrap_or(depth / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub gamma: f64,
    pub intercept_y: f64,
    pub slope: f64,
    pub sse: f64,
    pub l_lower: f64,
    pub tail_start: usize,
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b, sse)`.
fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - x_mean;
        sxx += dx * dx;
        sxy += dx * (y - y_mean);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = y_mean - slope * x_mean;
    let sse = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (intercept, slope, sse)
}

fn check_gamma(gamma: f64) -> Result<(), EstimateError> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(EstimateError::NonPositiveGamma(gamma))
    }
}

/// `(k, D_k)` for `k ≥ max(tail_start, 1)`.
fn tail(distances: &[f64], tail_start: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    distances
        .iter()
        .copied()
        .enumerate()
        .skip(tail_start.max(1))
}

/// Fit on raw values `D_0, D_1, …` (index is `k`), with the lower
/// estimate at the chosen γ attached.
pub fn fit_intercept_values(
    distances: &[f64],
    grid: &[f64],
    tail_start: usize,
) -> Result<FitResult, EstimateError> {
    let needed = tail_start + 3;
    if distances.len() < needed {
        return Err(EstimateError::SeriesTooShort {
            len: distances.len(),
            tail_start,
            needed,
        });
    }
    if grid.is_empty() {
        return Err(EstimateError::EmptyGrid);
    }
    for &g in grid {
        check_gamma(g)?;
    }
    let (ks, ys): (Vec<f64>, Vec<f64>) = tail(distances, tail_start).map(|(k, d)| (k as f64, d)).unzip();
    if ks.len() < 2 {
        return Err(EstimateError::TooFewPoints(ks.len()));
    }

    let mut best: Option<(f64, f64, f64, f64)> = None;
    let mut xs = vec![0.0; ks.len()];
    for &gamma in grid {
        for (x, k) in xs.iter_mut().zip(&ks) {
            *x = k.powf(-gamma);
        }
        let (intercept_y, slope, sse) = least_squares_line(&xs, &ys);
        let better = match best {
            None => true,
            Some((best_gamma, _, _, best_sse)) => {
                sse < best_sse || (sse == best_sse && gamma < best_gamma)
            }
        };
        if better {
            best = Some((gamma, intercept_y, slope, sse));
        }
    }
    let (gamma, intercept_y, slope, sse) = best.expect("grid is non-empty");
    Ok(FitResult {
        gamma,
        intercept_y,
        slope,
        sse,
        l_lower: lower_estimate_values(distances, gamma, tail_start)?,
        tail_start,
    })
}

pub fn lower_estimate_values(
    distances: &[f64],
    gamma: f64,
    tail_start: usize,
) -> Result<f64, EstimateError> {
    check_gamma(gamma)?;
    let points: Vec<(f64, f64)> = tail(distances, tail_start)
        .map(|(k, d)| ((k as f64).powf(-gamma), d))
        .collect();
    if points.len() < 2 {
        return Err(EstimateError::TooFewPoints(points.len()));
    }
    let lowest = points
        .windows(2)
        .map(|w| {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            y0 - x0 * (y1 - y0) / (x1 - x0)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(lowest.max(LOWER_ESTIMATE_FLOOR))
}

/// Both estimators over the same tail, `L` using the fitted `γ`.
pub fn estimate_values(
    distances: &[f64],
    config: &FitConfig,
) -> Result<FitResult, EstimateError> {
    let depth = distances.len().saturating_sub(1);
    fit_intercept_values(distances, &config.gamma_grid, config.tail_start_for(depth))
}

/// Least-squares intercept over γ ∈ `grid`.
pub fn fit_intercept(
    series: &DistanceSeries,
    grid: &[f64],
    tail_start: usize,
) -> Result<FitResult, EstimateError> {
    fit_intercept_values(&series.distances(), grid, tail_start)
}

pub fn lower_estimate(
    series: &DistanceSeries,
    gamma: f64,
    tail_start: usize,
) -> Result<f64, EstimateError> {
    lower_estimate_values(&series.distances(), gamma, tail_start)
}

pub fn estimate(series: &DistanceSeries, config: &FitConfig) -> Result<FitResult, EstimateError> {
    estimate_values(&series.distances(), config)
}
