//! Locating fit, plateau ("overfit") and late-generalization ("grok") phases
//! in per-epoch training curves.
//!
//! Both series are smoothed with a centered moving average (truncated at the
//! ends). The fit epoch is where the smoothed training loss first drops to
//! `fit_fraction` of its initial value. From there the validation curve is cut
//! greedily into runs: a run anchored at epoch `s` continues while the
//! smoothed score stays at or below `score[s] + grok_delta / 2` and the
//! smoothed loss stays at or below the fit threshold. The longest run (at least one
//! window long) is the plateau; its first epoch is the overfit epoch. A grok
//! epoch is the first epoch after the plateau where the score clears the
//! plateau's best value by `grok_delta`, provided that climb takes fewer
//! epochs than the plateau lasted. A steady climb therefore never registers as
//! grokking, however long it is.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCurve {
    first_epoch: u32,
    train_loss: Vec<f64>,
    val_score: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct CurveRow {
    epoch: u32,
    train_loss: f64,
    val_score: f64,
}

pub const CURVE_CSV_HEADER: [&str; 3] = ["epoch", "train_loss", "val_score"];

impl TrainingCurve {
    pub fn new(first_epoch: u32, train_loss: Vec<f64>, val_score: Vec<f64>) -> Result<Self> {
        if train_loss.len() != val_score.len() {
            return Err(Error::InvalidArgument(format!(
                "train_loss has {} epochs but val_score has {}",
                train_loss.len(),
                val_score.len()
            )));
        }
        if let Some(i) = train_loss
            .iter()
            .chain(&val_score)
            .position(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "non-finite curve value at position {i}"
            )));
        }
        Ok(Self {
            first_epoch,
            train_loss,
            val_score,
        })
    }

    /// Parse CSV with header `epoch,train_loss,val_score` and consecutive epochs.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != CURVE_CSV_HEADER {
            return Err(Error::InvalidArgument(format!(
                "curve CSV header must be `epoch,train_loss,val_score`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut first_epoch = None;
        let (mut train, mut val) = (Vec::new(), Vec::new());
        for row in rdr.deserialize() {
            let row: CurveRow = row?;
            let start = *first_epoch.get_or_insert(row.epoch);
            if row.epoch as usize != start as usize + train.len() {
                return Err(Error::InvalidArgument(format!(
                    "epoch {} out of sequence (expected {})",
                    row.epoch,
                    start as usize + train.len()
                )));
            }
            train.push(row.train_loss);
            val.push(row.val_score);
        }
        Self::new(first_epoch.unwrap_or(0), train, val)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))?;
        Self::from_csv(file).map_err(|e| e.in_file(path))
    }

    pub fn first_epoch(&self) -> u32 {
        self.first_epoch
    }

    pub fn len(&self) -> usize {
        self.train_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_loss.is_empty()
    }

    pub fn train_loss(&self) -> &[f64] {
        &self.train_loss
    }

    pub fn val_score(&self) -> &[f64] {
        &self.val_score
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    /// Odd moving-average width.
    pub window: usize,
    pub fit_fraction: f64,
    pub grok_delta: f64,
}

impl Default for PhaseParams {
    fn default() -> Self {
        Self {
            window: 11,
            fit_fraction: 0.2,
            grok_delta: 0.05,
        }
    }
}

impl PhaseParams {
    fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "window must be a positive odd integer, got {}",
                self.window
            )));
        }
        if !(self.fit_fraction > 0.0 && self.fit_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "fit fraction must lie in (0, 1), got {}",
                self.fit_fraction
            )));
        }
        if !(self.grok_delta.is_finite() && self.grok_delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grok delta must be positive, got {}",
                self.grok_delta
            )));
        }
        Ok(())
    }
}

/// A detected epoch and the smoothed curve value there (training loss for
/// the fit phase, validation score otherwise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMark {
    pub epoch: u32,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CurvePhases {
    pub fit: Option<PhaseMark>,
    pub overfit: Option<PhaseMark>,
    pub grok: Option<PhaseMark>,
}

/// Centered moving average; the window shrinks symmetrically-truncated at the ends.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

pub fn detect_phases(curve: &TrainingCurve, params: &PhaseParams) -> Result<CurvePhases> {
    params.validate()?;
    let n = curve.len();
    if n < 2 * params.window {
        return Err(Error::InvalidArgument(format!(
            "curve has {n} epochs; at least {} needed for window {}",
            2 * params.window,
            params.window
        )));
    }
    let loss = moving_average(curve.train_loss(), params.window);
    let score = moving_average(curve.val_score(), params.window);
    let epoch = |i: usize| curve.first_epoch() + i as u32;

    let mut phases = CurvePhases::default();
    let fitted = params.fit_fraction * loss[0];
    let Some(fit) = (0..n).find(|&i| loss[i] <= fitted) else {
        return Ok(phases);
    };
    phases.fit = Some(PhaseMark {
        epoch: epoch(fit),
        value: loss[fit],
    });

    let half_band = params.grok_delta / 2.0;
    let (mut best_start, mut best_end) = (fit, fit);
    let mut start = fit;
    while start < n {
        let anchor = score[start];
        let mut end = start + 1;
        while end < n && score[end] <= anchor + half_band && loss[end] <= fitted {
            end += 1;
        }
        if end - start > best_end - best_start {
            (best_start, best_end) = (start, end);
        }
        start = end;
    }
    if best_end - best_start < params.window {
        return Ok(phases);
    }
    phases.overfit = Some(PhaseMark {
        epoch: epoch(best_start),
        value: score[best_start],
    });

    let plateau = score[best_start..best_end]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let plateau_len = best_end - best_start;
    if let Some(g) = (best_end..n).find(|&i| score[i] >= plateau + params.grok_delta) {
        if g - best_end < plateau_len {
            phases.grok = Some(PhaseMark {
                epoch: epoch(g),
                value: score[g],
            });
        }
    }
    Ok(phases)
}
