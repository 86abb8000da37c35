//! Disorder sweeps: many realizations per disorder value, aggregated by
//! the smallest `y` and the smallest `L`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{estimate, FitConfig};
use crate::krylov::{run_krylov, OrthogonalizationMode};
use crate::lattice::PotentialField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("no disorder values given")]
    NoDisorderValues,
    #[error("disorder values must be finite and non-negative, got {0}")]
    InvalidDisorder(f64),
    #[error("at least one realization is required")]
    NoRealizations,
    #[error("Krylov depth must be at least 1")]
    ZeroDepth,
    #[error("depth {n} is too shallow for a fit starting at k = {tail_start}")]
    DepthTooShallow { n: usize, tail_start: usize },
    #[error("exponent grid is empty")]
    EmptyGammaGrid,
    #[error("exponent grid values must be positive, got {0}")]
    InvalidGamma(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub c_values: Vec<f64>,
    pub realizations: u64,
    pub n: usize,
    pub seed: u64,
    pub mode: OrthogonalizationMode,
    pub fit: FitConfig,
}

impl SweepConfig {
    /// Desk-scale defaults: 20 realizations at depth 400.
    pub fn new(c_values: Vec<f64>) -> Self {
        Self {
            c_values,
            realizations: 20,
            n: 400,
            seed: 1,
            mode: OrthogonalizationMode::default(),
            fit: FitConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.c_values.is_empty() {
            return Err(SweepError::NoDisorderValues);
        }
        if let Some(&c) = self.c_values.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(SweepError::InvalidDisorder(c));
        }
        if self.realizations == 0 {
            return Err(SweepError::NoRealizations);
        }
        if self.n == 0 {
            return Err(SweepError::ZeroDepth);
        }
        if self.fit.gamma_grid.is_empty() {
            return Err(SweepError::EmptyGammaGrid);
        }
        if let Some(&g) = self.fit.gamma_grid.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(SweepError::InvalidGamma(g));
        }
        let tail_start = self.fit.tail_start_for(self.n);
        if self.n + 1 < tail_start + 3 {
            return Err(SweepError::DepthTooShallow { n: self.n, tail_start });
        }
        Ok(())
    }

    /// Disorder values in ascending order.
    pub fn sorted_c_values(&self) -> Vec<f64> {
        let mut c = self.c_values.clone();
        c.sort_by(f64::total_cmp);
        c
    }
}

/// Estimates for one `(c, realization)` pair. `y` and `l` are NaN when the
/// run was numerically degenerate; `failure` then says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationOutcome {
    pub realization: u64,
    pub y: f64,
    pub l: f64,
    pub gamma: f64,
    pub sse: f64,
    pub final_distance: f64,
    pub breakdown: Option<usize>,
    pub drift: f64,
    pub failure: Option<String>,
}

impl RealizationOutcome {
    pub fn is_valid(&self) -> bool {
        self.failure.is_none()
    }

    fn failed(realization: u64, reason: String) -> Self {
        Self {
            realization,
            y: f64::NAN,
            l: f64::NAN,
            gamma: f64::NAN,
            sse: f64::NAN,
            final_distance: f64::NAN,
            breakdown: None,
            drift: f64::NAN,
            failure: Some(reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub c: f64,
    pub min_y: f64,
    pub min_l: f64,
    pub argmin_y: Option<u64>,
    pub argmin_l: Option<u64>,
    pub realizations: Vec<RealizationOutcome>,
    /// False when every realization was degenerate.
    pub valid: bool,
}

fn argmin(outcomes: &[RealizationOutcome], key: impl Fn(&RealizationOutcome) -> f64) -> Option<(u64, f64)> {
    outcomes
        .iter()
        .filter(|o| o.is_valid())
        .fold(None, |best, o| match best {
            Some((_, v)) if key(o) >= v => best,
            _ => Some((o.realization, key(o))),
        })
}

impl EnsembleRecord {
    /// Independent minima of `y` and `L`; ties keep the lowest realization.
    pub fn from_outcomes(c: f64, realizations: Vec<RealizationOutcome>) -> Self {
        let y = argmin(&realizations, |o| o.y);
        let l = argmin(&realizations, |o| o.l);
        Self {
            c,
            min_y: y.map_or(f64::NAN, |v| v.1),
            min_l: l.map_or(f64::NAN, |v| v.1),
            argmin_y: y.map(|v| v.0),
            argmin_l: l.map(|v| v.0),
            valid: y.is_some(),
            realizations,
        }
    }
}

/// One realization: distance series, then both estimators.
pub fn run_realization(config: &SweepConfig, c: f64, realization: u64) -> RealizationOutcome {
    let field = PotentialField::new(c, config.seed, realization);
    let series = match run_krylov(&field, config.n, config.mode) {
        Ok(s) => s,
        Err(e) => return RealizationOutcome::failed(realization, e.to_string()),
    };
    match estimate(&series, &config.fit) {
        Ok(fit) => RealizationOutcome {
            realization,
            y: fit.intercept_y,
            l: fit.l_lower,
            gamma: fit.gamma,
            sse: fit.sse,
            final_distance: series.final_distance(),
            breakdown: series.breakdown,
            drift: series.drift,
            failure: None,
        },
        Err(e) => RealizationOutcome::failed(realization, e.to_string()),
    }
}

/// Runs every `(c, realization)` pair on the current rayon pool. Records
/// come back sorted by `c`, realizations by index, whatever the thread
/// count.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<EnsembleRecord>, SweepError> {
    config.validate()?;
    let c_values = config.sorted_c_values();
    let jobs: Vec<(usize, u64)> = (0..c_values.len())
        .flat_map(|ci| (0..config.realizations).map(move |r| (ci, r)))
        .collect();
    let outcomes: Vec<RealizationOutcome> = jobs
        .par_iter()
        .map(|&(ci, r)| run_realization(config, c_values[ci], r))
        .collect();

    let per_c = config.realizations as usize;
    Ok(c_values
        .iter()
        .zip(outcomes.chunks(per_c))
        .map(|(&c, chunk)| EnsembleRecord::from_outcomes(c, chunk.to_vec()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(r: u64, y: f64, l: f64) -> RealizationOutcome {
        RealizationOutcome {
            realization: r,
            y,
            l,
            gamma: 1.0,
            sse: 0.0,
            final_distance: y,
            breakdown: None,
            drift: 0.0,
            failure: None,
        }
    }

    #[test]
    fn minima_are_independent() {
        let rec = EnsembleRecord::from_outcomes(
            0.5,
            vec![outcome(0, 0.4, 0.1), outcome(1, 0.3, 0.2), outcome(2, 0.3, 0.15)],
        );
        assert_eq!(rec.min_y, 0.3);
        assert_eq!(rec.argmin_y, Some(1));
        assert_eq!(rec.min_l, 0.1);
        assert_eq!(rec.argmin_l, Some(0));
        assert!(rec.valid);
    }

    #[test]
    fn degenerate_realizations_are_skipped() {
        let rec = EnsembleRecord::from_outcomes(
            1.0,
            vec![RealizationOutcome::failed(0, "lost".into()), outcome(1, 0.6, 0.5)],
        );
        assert_eq!(rec.argmin_y, Some(1));
        let rec = EnsembleRecord::from_outcomes(1.0, vec![RealizationOutcome::failed(0, "lost".into())]);
        assert!(!rec.valid);
        assert!(rec.min_y.is_nan());
        assert_eq!(rec.argmin_l, None);
    }

    #[test]
    fn validation() {
        let ok = SweepConfig { n: 10, ..SweepConfig::new(vec![0.5]) };
        assert!(ok.validate().is_ok());
        assert_eq!(SweepConfig::new(vec![]).validate(), Err(SweepError::NoDisorderValues));
        assert_eq!(SweepConfig::new(vec![-1.0]).validate(), Err(SweepError::InvalidDisorder(-1.0)));
        assert_eq!(
            SweepConfig { realizations: 0, ..ok.clone() }.validate(),
            Err(SweepError::NoRealizations)
        );
        assert_eq!(SweepConfig { n: 0, ..ok.clone() }.validate(), Err(SweepError::ZeroDepth));
        let mut shallow = ok.clone();
        shallow.fit.tail_start = Some(9);
        assert_eq!(shallow.validate(), Err(SweepError::DepthTooShallow { n: 10, tail_start: 9 }));
    }

    #[test]
    fn zero_disorder_realizations_coincide() {
        let config = SweepConfig {
            realizations: 3,
            n: 50,
            ..SweepConfig::new(vec![0.0])
        };
        let records = run_sweep(&config).unwrap();
        assert_eq!(records.len(), 1);
        let rs = &records[0].realizations;
        assert_eq!(rs.len(), 3);
        for r in rs {
            assert_eq!(r.y.to_bits(), rs[0].y.to_bits());
            assert_eq!(r.l.to_bits(), rs[0].l.to_bits());
        }
        assert_eq!(records[0].min_y, rs[0].y);
    }
}
