//! Resampling to a common voxel spacing and per-channel z-score normalization.
//!
//! Output voxel `i` along an axis has its center at `(i + 0.5) * target`
//! mm from the grid's leading edge; that point maps to the continuous input
//! index `(i + 0.5) * target / source - 0.5`. Samples falling outside the
//! input clamp to the edge voxel.

use crate::error::{Error, Result};
use crate::volume::{Grid, LabelMap, MultiModalScan, RegionMask, RegionTag, Volume3D};

/// Standard deviations below this are treated as zero variance.
pub const DEGENERATE_STD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Trilinear,
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResamplePlan {
    target_spacing: [f64; 3],
    mode: Interpolation,
}

impl ResamplePlan {
    pub fn new(target_spacing: [f64; 3], mode: Interpolation) -> Result<Self> {
        if target_spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "target spacing {target_spacing:?} must be finite and positive"
            )));
        }
        Ok(Self {
            target_spacing,
            mode,
        })
    }

    pub fn trilinear(target_spacing: [f64; 3]) -> Result<Self> {
        Self::new(target_spacing, Interpolation::Trilinear)
    }

    pub fn nearest(target_spacing: [f64; 3]) -> Result<Self> {
        Self::new(target_spacing, Interpolation::Nearest)
    }

    pub fn target_spacing(&self) -> [f64; 3] {
        self.target_spacing
    }

    pub fn mode(&self) -> Interpolation {
        self.mode
    }

    /// Grid produced when resampling `input` with this plan.
    pub fn output_grid(&self, input: &Grid) -> Grid {
        let shape = input.shape();
        let spacing = input.spacing();
        let origin = input.origin();
        let mut out_shape = [0usize; 3];
        let mut out_origin = [0f64; 3];
        for a in 0..3 {
            let extent = shape[a] as f64 * spacing[a];
            out_shape[a] = ((extent / self.target_spacing[a]).round() as usize).max(1);
            out_origin[a] = origin[a] - 0.5 * spacing[a] + 0.5 * self.target_spacing[a];
        }
        Grid::with_origin(out_shape, self.target_spacing, out_origin)
            .expect("shape and spacing validated")
    }
}

/// Continuous input coordinates for every output index along one axis.
fn axis_coordinates(n_out: usize, n_in: usize, source: f64, target: f64) -> Vec<f64> {
    let max = (n_in - 1) as f64;
    (0..n_out)
        .map(|i| {
            if source == target {
                (i as f64).min(max)
            } else {
                ((i as f64 + 0.5) * target / source - 0.5).clamp(0.0, max)
            }
        })
        .collect()
}

/// Lower index and fractional weight for linear interpolation.
fn linear_taps(coords: &[f64], n_in: usize) -> Vec<(usize, usize, f64)> {
    coords
        .iter()
        .map(|&c| {
            let lo = c.floor() as usize;
            let hi = (lo + 1).min(n_in - 1);
            (lo, hi, c - lo as f64)
        })
        .collect()
}

/// Nearest input index; exact ties go to the lower index.
fn nearest_taps(coords: &[f64]) -> Vec<usize> {
    coords
        .iter()
        .map(|&c| (c - 0.5).ceil().max(0.0) as usize)
        .collect()
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // `a + (b - a) * t` keeps constants exact and returns `a` at t = 0.
    a + (b - a) * t
}

pub fn resample(volume: &Volume3D, plan: &ResamplePlan) -> Volume3D {
    let input = volume.grid();
    let out = plan.output_grid(input);
    let n_in = input.shape();
    let n_out = out.shape();
    let coords: Vec<Vec<f64>> = (0..3)
        .map(|a| {
            axis_coordinates(
                n_out[a],
                n_in[a],
                input.spacing()[a],
                plan.target_spacing[a],
            )
        })
        .collect();

    let voxels = match plan.mode {
        Interpolation::Nearest => {
            let taps: Vec<Vec<usize>> = coords.iter().map(|c| nearest_taps(c)).collect();
            let mut v = Vec::with_capacity(out.len());
            for &z in &taps[2] {
                for &y in &taps[1] {
                    for &x in &taps[0] {
                        v.push(volume.get(x, y, z));
                    }
                }
            }
            v
        }
        Interpolation::Trilinear => {
            let taps: Vec<Vec<(usize, usize, f64)>> = coords
                .iter()
                .zip(n_in)
                .map(|(c, n)| linear_taps(c, n))
                .collect();
            let mut v = Vec::with_capacity(out.len());
            for &(z0, z1, tz) in &taps[2] {
                for &(y0, y1, ty) in &taps[1] {
                    for &(x0, x1, tx) in &taps[0] {
                        let c00 = lerp(volume.get(x0, y0, z0), volume.get(x1, y0, z0), tx);
                        let c10 = lerp(volume.get(x0, y1, z0), volume.get(x1, y1, z0), tx);
                        let c01 = lerp(volume.get(x0, y0, z1), volume.get(x1, y0, z1), tx);
                        let c11 = lerp(volume.get(x0, y1, z1), volume.get(x1, y1, z1), tx);
                        v.push(lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz));
                    }
                }
            }
            v
        }
    };
    Volume3D::new(out, voxels).expect("interpolation of finite values is finite")
}

/// Nearest-neighbour resampling of a label map; the plan's mode is ignored.
pub fn resample_labels(labels: &LabelMap, plan: &ResamplePlan) -> LabelMap {
    let input = labels.grid();
    let out = plan.output_grid(input);
    let n_in = input.shape();
    let n_out = out.shape();
    let taps: Vec<Vec<usize>> = (0..3)
        .map(|a| {
            nearest_taps(&axis_coordinates(
                n_out[a],
                n_in[a],
                input.spacing()[a],
                plan.target_spacing[a],
            ))
        })
        .collect();
    let mut v = Vec::with_capacity(out.len());
    for &z in &taps[2] {
        for &y in &taps[1] {
            for &x in &taps[0] {
                v.push(labels.get(x, y, z));
            }
        }
    }
    LabelMap::new(out, v).expect("labels copied from a valid map")
}

/// Brain voxels are those where any channel is nonzero.
pub fn infer_brain_mask(scan: &MultiModalScan) -> RegionMask {
    let grid = *scan.grid();
    let channels = scan.channels();
    let bits = (0..grid.len())
        .map(|i| channels.iter().any(|c| c.voxels()[i] != 0.0))
        .collect();
    RegionMask::new(grid, bits, RegionTag::Wt).expect("length matches grid")
}

/// Z-score over masked voxels (population std); unmasked voxels become 0.
pub fn zscore_normalize(volume: &Volume3D, brain: &RegionMask) -> Result<Volume3D> {
    volume.grid().ensure_same_lattice(brain.grid())?;
    let masked = || {
        volume
            .voxels()
            .iter()
            .zip(brain.bits())
            .filter(|(_, &b)| b)
            .map(|(&v, _)| v)
    };
    let n = masked().count();
    let (mean, std) = if n == 0 {
        (0.0, 0.0)
    } else {
        let mean = masked().sum::<f64>() / n as f64;
        let var = masked().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        (mean, var.sqrt())
    };
    let degenerate = n == 0 || std < DEGENERATE_STD;
    let voxels = volume
        .voxels()
        .iter()
        .zip(brain.bits())
        .map(|(&v, &b)| {
            if !b || degenerate {
                0.0
            } else {
                (v - mean) / std
            }
        })
        .collect();
    Volume3D::new(*volume.grid(), voxels)
}

/// Resample every channel, then normalize each over the brain mask of the resampled scan.
pub fn preprocess_scan(scan: &MultiModalScan, plan: &ResamplePlan) -> Result<MultiModalScan> {
    let resampled = scan.channels().clone().map(|c| resample(&c, plan));
    let resampled = MultiModalScan::new(resampled)?;
    let brain = infer_brain_mask(&resampled);
    let normalized: Vec<Volume3D> = resampled
        .channels()
        .iter()
        .map(|c| zscore_normalize(c, &brain))
        .collect::<Result<_>>()?;
    let normalized: [Volume3D; 4] = normalized.try_into().expect("four channels");
    MultiModalScan::new(normalized)
}
