//! BraTS label semantics and the two-model hybrid fusion.
//!
//! Raw labels: 0 background, 1 enhancing tumor, 2 non-enhancing tumor core,
//! 3 surrounding FLAIR hyperintensity. Evaluated regions are nested unions:
//! ET = {1}, TC = {1, 2}, WT = {1, 2, 3}.

use crate::error::{Error, Result};
use crate::volume::{LabelMap, RegionMask, RegionTag};

/// A region as the set of raw labels it covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionDef {
    tag: RegionTag,
    /// `members[l]` is true when raw label `l` belongs to the region.
    members: [bool; 4],
}

impl RegionDef {
    pub const ET: RegionDef = RegionDef {
        tag: RegionTag::Et,
        members: [false, true, false, false],
    };
    pub const TC: RegionDef = RegionDef {
        tag: RegionTag::Tc,
        members: [false, true, true, false],
    };
    pub const WT: RegionDef = RegionDef {
        tag: RegionTag::Wt,
        members: [false, true, true, true],
    };

    /// Custom region, e.g. raw label 2 alone for a non-composite core.
    pub fn custom(tag: RegionTag, labels: &[u8]) -> Result<Self> {
        let mut members = [false; 4];
        for &l in labels {
            match l {
                1..=3 => members[l as usize] = true,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "region labels must lie in 1..=3, got {l}"
                    )))
                }
            }
        }
        Ok(Self { tag, members })
    }

    pub fn standard(tag: RegionTag) -> Self {
        match tag {
            RegionTag::Et => Self::ET,
            RegionTag::Tc => Self::TC,
            RegionTag::Wt => Self::WT,
        }
    }

    pub fn tag(&self) -> RegionTag {
        self.tag
    }

    pub fn contains(&self, label: u8) -> bool {
        self.members.get(label as usize).copied().unwrap_or(false)
    }

    pub fn labels(&self) -> Vec<u8> {
        (1..=3).filter(|&l| self.contains(l)).collect()
    }
}

pub fn compose_region(labels: &LabelMap, def: &RegionDef) -> RegionMask {
    let bits = labels.labels().iter().map(|&l| def.contains(l)).collect();
    RegionMask::new(*labels.grid(), bits, def.tag()).expect("length matches grid")
}

/// All three standard regions, in ET, TC, WT order.
pub fn compose_all(labels: &LabelMap) -> [RegionMask; 3] {
    RegionTag::ALL.map(|t| compose_region(labels, &RegionDef::standard(t)))
}

/// Inverse of [`compose_all`]: requires `et ⊆ tc ⊆ wt`.
pub fn labelmap_from_regions(
    et: &RegionMask,
    tc: &RegionMask,
    wt: &RegionMask,
) -> Result<LabelMap> {
    et.grid().ensure_same_lattice(tc.grid())?;
    et.grid().ensure_same_lattice(wt.grid())?;
    let mut out = Vec::with_capacity(et.bits().len());
    for (i, ((&e, &t), &w)) in et.bits().iter().zip(tc.bits()).zip(wt.bits()).enumerate() {
        if e && !t {
            return Err(Error::NestingViolation {
                voxel: i,
                detail: "ET voxel outside TC",
            });
        }
        if t && !w {
            return Err(Error::NestingViolation {
                voxel: i,
                detail: "TC voxel outside WT",
            });
        }
        out.push(match (e, t, w) {
            (true, _, _) => 1,
            (false, true, _) => 2,
            (false, false, true) => 3,
            _ => 0,
        });
    }
    LabelMap::new(*et.grid(), out)
}

/// Hybrid of an extended-run model (`pred_a`, trusted for ET and TC) and a
/// baseline model (`pred_b`, trusted for WT).
///
/// ET and TC are copied from `pred_a`. WT is `pred_b`'s whole tumor united
/// with `pred_a`'s core, so a core reaching beyond `pred_b`'s tumor keeps its
/// labels and the regions stay nested.
pub fn hybrid_fuse(pred_a: &LabelMap, pred_b: &LabelMap) -> Result<LabelMap> {
    pred_a.grid().ensure_same_lattice(pred_b.grid())?;
    let et = compose_region(pred_a, &RegionDef::ET);
    let tc = compose_region(pred_a, &RegionDef::TC);
    let wt = compose_region(pred_b, &RegionDef::WT).union(&tc)?;
    labelmap_from_regions(&et, &tc, &wt)
}
