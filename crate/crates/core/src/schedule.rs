//! Polynomial learning-rate decay, per epoch, with an optional floor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub lr0: f64,
    pub poly_exponent: f64,
    pub total_epochs: u32,
    pub lr_floor: f64,
    // Optimizer and sampling settings; recorded, not used by the schedule.
    pub momentum: f64,
    pub weight_decay: f64,
    pub patch_size: [u32; 3],
    pub iterations_per_epoch: u32,
}

impl TrainingConfig {
    /// 200 epochs annealing from 0.01 to zero.
    pub fn baseline() -> Self {
        Self {
            lr0: 0.01,
            poly_exponent: 0.9,
            total_epochs: 200,
            lr_floor: 0.0,
            momentum: 0.99,
            weight_decay: 3e-5,
            patch_size: [128, 160, 112],
            iterations_per_epoch: 300,
        }
    }

    /// 3500 epochs restarted from 0.01 and held at or above 1e-4.
    pub fn extended() -> Self {
        Self {
            total_epochs: 3500,
            lr_floor: 1e-4,
            ..Self::baseline()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return bad(format!("lr0 must be positive, got {}", self.lr0));
        }
        if !(self.poly_exponent.is_finite() && self.poly_exponent > 0.0) {
            return bad(format!(
                "exponent must be positive, got {}",
                self.poly_exponent
            ));
        }
        if self.total_epochs == 0 {
            return bad("total_epochs must be at least 1".into());
        }
        if !(self.lr_floor.is_finite() && self.lr_floor >= 0.0 && self.lr_floor < self.lr0) {
            return bad(format!(
                "floor must satisfy 0 <= floor < lr0, got {}",
                self.lr_floor
            ));
        }
        Ok(())
    }
}

/// `max(floor, lr0 * (1 - epoch / total)^exponent)` for `0 <= epoch <= total`.
pub fn poly_lr_at(epoch: u32, cfg: &TrainingConfig) -> Result<f64> {
    cfg.validate()?;
    if epoch > cfg.total_epochs {
        return Err(Error::InvalidArgument(format!(
            "epoch {epoch} is past the final epoch {}",
            cfg.total_epochs
        )));
    }
    let progress = 1.0 - epoch as f64 / cfg.total_epochs as f64;
    Ok(cfg.lr_floor.max(cfg.lr0 * progress.powf(cfg.poly_exponent)))
}

/// One `(epoch, lr)` entry per training epoch `0..total_epochs`.
pub fn build_schedule(cfg: &TrainingConfig) -> Result<Vec<(u32, f64)>> {
    cfg.validate()?;
    (0..cfg.total_epochs)
        .map(|e| poly_lr_at(e, cfg).map(|lr| (e, lr)))
        .collect()
}

/// CSV with header `epoch,lr`.
pub fn schedule_csv(schedule: &[(u32, f64)]) -> String {
    let mut out = String::from("epoch,lr\n");
    for (e, lr) in schedule {
        out.push_str(&format!("{e},{lr:e}\n"));
    }
    out
}
