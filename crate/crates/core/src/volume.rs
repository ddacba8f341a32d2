//! Voxel grid types and elementary measurements.
//!
//! All grids store voxels x-fastest: the linear index of `(x, y, z)` is
//! `x + nx * (y + ny * z)`, the same ordering NIfTI uses on disk.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry shared by every voxel grid: shape, spacing (mm) and origin (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    shape: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

impl Grid {
    pub fn new(shape: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        Self::with_origin(shape, spacing, [0.0; 3])
    }

    pub fn with_origin(shape: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::InvalidVolume(format!(
                "shape {shape:?} has a zero extent"
            )));
        }
        if shape
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .is_none()
        {
            return Err(Error::InvalidVolume(format!("shape {shape:?} overflows")));
        }
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidVolume(format!(
                "spacing {spacing:?} must be finite and strictly positive"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidVolume(format!(
                "origin {origin:?} must be finite"
            )));
        }
        Ok(Self {
            shape,
            spacing,
            origin,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.shape[0] * (y + self.shape[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.shape;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Metrics only compare grids of identical shape and spacing; origin is ignored.
    pub fn same_lattice(&self, other: &Grid) -> bool {
        self.shape == other.shape && self.spacing == other.spacing
    }

    pub fn ensure_same_lattice(&self, other: &Grid) -> Result<()> {
        if self.same_lattice(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

// Constructors reject non-finite spacing and origin, so equality is total.
impl Eq for Grid {}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [nx, ny, nz] = self.shape;
        let [sx, sy, sz] = self.spacing;
        write!(f, "shape {nx}x{ny}x{nz} spacing ({sx}, {sy}, {sz}) mm")
    }
}

/// Scalar voxel grid: one MRI channel, or one probability map.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    grid: Grid,
    voxels: Vec<f64>,
}

impl Volume3D {
    pub fn new(grid: Grid, voxels: Vec<f64>) -> Result<Self> {
        if voxels.len() != grid.len() {
            return Err(Error::InvalidVolume(format!(
                "{} voxels supplied for {grid}",
                voxels.len()
            )));
        }
        if let Some(i) = voxels.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVolume(format!(
                "non-finite value at voxel {i}"
            )));
        }
        Ok(Self { grid, voxels })
    }

    pub fn filled(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let voxels = (0..grid.len())
            .map(|i| {
                let [x, y, z] = grid.coords(i);
                f(x, y, z)
            })
            .collect();
        Self::new(grid, voxels)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn voxels(&self) -> &[f64] {
        &self.voxels
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.voxels[self.grid.index(x, y, z)]
    }

    pub fn into_voxels(self) -> Vec<f64> {
        self.voxels
    }
}

/// The four MRI channels of one case, in the order T1, T1 post-contrast, T2, FLAIR.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiModalScan {
    channels: [Volume3D; 4],
}

impl MultiModalScan {
    pub const CHANNEL_NAMES: [&'static str; 4] = ["t1", "t1ce", "t2", "flair"];

    pub fn new(channels: [Volume3D; 4]) -> Result<Self> {
        let first = *channels[0].grid();
        for (name, ch) in Self::CHANNEL_NAMES.iter().zip(&channels).skip(1) {
            if *ch.grid() != first {
                return Err(Error::GridMismatch {
                    left: format!("t1 {first}"),
                    right: format!("{name} {}", ch.grid()),
                });
            }
        }
        Ok(Self { channels })
    }

    pub fn grid(&self) -> &Grid {
        self.channels[0].grid()
    }

    pub fn channels(&self) -> &[Volume3D; 4] {
        &self.channels
    }
}

/// Integer label grid with values in {0, 1, 2, 3}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    grid: Grid,
    labels: Vec<u8>,
}

impl LabelMap {
    pub const MAX_LABEL: u8 = 3;

    pub fn new(grid: Grid, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::InvalidVolume(format!(
                "{} labels supplied for {grid}",
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l > Self::MAX_LABEL) {
            return Err(Error::InvalidVolume(format!(
                "label {} at voxel {i} is outside {{0,1,2,3}}",
                labels[i]
            )));
        }
        Ok(Self { grid, labels })
    }

    pub fn background(grid: Grid) -> Self {
        Self {
            grid,
            labels: vec![0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u8 {
        self.labels[self.grid.index(x, y, z)]
    }
}

/// Which composite tumor region a mask represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionTag {
    #[serde(rename = "ET")]
    Et,
    #[serde(rename = "TC")]
    Tc,
    #[serde(rename = "WT")]
    Wt,
}

impl RegionTag {
    pub const ALL: [RegionTag; 3] = [RegionTag::Et, RegionTag::Tc, RegionTag::Wt];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionTag::Et => "ET",
            RegionTag::Tc => "TC",
            RegionTag::Wt => "WT",
        }
    }
}

impl fmt::Display for RegionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Boolean voxel grid for one region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    grid: Grid,
    bits: Vec<bool>,
    tag: RegionTag,
}

impl RegionMask {
    pub fn new(grid: Grid, bits: Vec<bool>, tag: RegionTag) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::InvalidVolume(format!(
                "{} mask bits supplied for {grid}",
                bits.len()
            )));
        }
        Ok(Self { grid, bits, tag })
    }

    pub fn empty(grid: Grid, tag: RegionTag) -> Self {
        Self {
            grid,
            bits: vec![false; grid.len()],
            tag,
        }
    }

    pub fn full(grid: Grid, tag: RegionTag) -> Self {
        Self {
            grid,
            bits: vec![true; grid.len()],
            tag,
        }
    }

    pub fn from_fn(
        grid: Grid,
        tag: RegionTag,
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Self {
        let bits = (0..grid.len())
            .map(|i| {
                let [x, y, z] = grid.coords(i);
                f(x, y, z)
            })
            .collect();
        Self { grid, bits, tag }
    }

    pub(crate) fn from_parts(grid: Grid, bits: Vec<bool>, tag: RegionTag) -> Self {
        debug_assert_eq!(bits.len(), grid.len());
        Self { grid, bits, tag }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn tag(&self) -> RegionTag {
        self.tag
    }

    pub fn with_tag(mut self, tag: RegionTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.grid.index(x, y, z)]
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> Self {
        Self::from_parts(self.grid, self.bits.iter().map(|b| !b).collect(), self.tag)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    /// `true` when every voxel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits.len() == other.bits.len()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.grid.ensure_same_lattice(&other.grid)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Self::from_parts(self.grid, bits, self.tag))
    }
}

pub fn voxel_count(mask: &RegionMask) -> usize {
    mask.bits.iter().filter(|&&b| b).count()
}

pub fn physical_volume_mm3(mask: &RegionMask) -> f64 {
    voxel_count(mask) as f64 * mask.grid.voxel_volume_mm3()
}
