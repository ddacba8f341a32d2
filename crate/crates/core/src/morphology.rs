//! Binary-mask machinery behind the surface and lesion-wise metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Grid, RegionMask};

/// Voxel adjacency used to group foreground voxels into lesions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    /// Face neighbours.
    Six,
    /// Face and edge neighbours.
    Eighteen,
    /// Face, edge and corner neighbours.
    TwentySix,
}

impl Connectivity {
    /// Neighbour offsets `(dx, dy, dz)` admitted by this adjacency.
    pub fn offsets(self) -> Vec<[isize; 3]> {
        let mut out = Vec::new();
        for dz in -1isize..=1 {
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let nonzero = [dx, dy, dz].iter().filter(|&&d| d != 0).count();
                    let keep = match self {
                        Connectivity::Six => nonzero == 1,
                        Connectivity::Eighteen => (1..=2).contains(&nonzero),
                        Connectivity::TwentySix => nonzero >= 1,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        match n {
            6 => Ok(Connectivity::Six),
            18 => Ok(Connectivity::Eighteen),
            26 => Ok(Connectivity::TwentySix),
            other => Err(Error::InvalidArgument(format!(
                "connectivity must be 6, 18 or 26, got {other}"
            ))),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Six => 6,
            Connectivity::Eighteen => 18,
            Connectivity::TwentySix => 26,
        }
    }
}

/// Connected components of a mask. Ids run 1..=count in order of each
/// component's first voxel in x-fastest scan order; background is 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    grid: Grid,
    ids: Vec<u32>,
    sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Voxel counts, indexed by `id - 1`.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Linear voxel indices of every component, indexed by `id - 1`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&n| Vec::with_capacity(n)).collect();
        for (i, &id) in self.ids.iter().enumerate() {
            if id > 0 {
                out[id as usize - 1].push(i);
            }
        }
        out
    }

    pub fn component_mask(&self, id: u32, tag: crate::volume::RegionTag) -> RegionMask {
        RegionMask::from_parts(self.grid, self.ids.iter().map(|&c| c == id).collect(), tag)
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let up = parent[parent[x as usize] as usize];
        parent[x as usize] = up;
        x = up;
    }
    x
}

/// Two-pass union-find labeling.
pub fn connected_components(mask: &RegionMask, connectivity: Connectivity) -> ComponentLabeling {
    let grid = *mask.grid();
    let [nx, ny, nz] = grid.shape();
    let bits = mask.bits();
    // Only neighbours already visited in scan order.
    let backward: Vec<[isize; 3]> = connectivity
        .offsets()
        .into_iter()
        .filter(|&[dx, dy, dz]| (dz, dy, dx) < (0, 0, 0))
        .collect();

    let mut provisional = vec![0u32; bits.len()];
    let mut parent: Vec<u32> = vec![0];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = grid.index(x, y, z);
                if !bits[i] {
                    continue;
                }
                let mut label = 0u32;
                for &[dx, dy, dz] in &backward {
                    let (qx, qy, qz) = (x as isize + dx, y as isize + dy, z as isize + dz);
                    if qx < 0 || qy < 0 || qz < 0 || qx >= nx as isize || qy >= ny as isize {
                        continue;
                    }
                    let n = provisional[grid.index(qx as usize, qy as usize, qz as usize)];
                    if n == 0 {
                        continue;
                    }
                    if label == 0 {
                        label = find(&mut parent, n);
                    } else {
                        let (a, b) = (find(&mut parent, label), find(&mut parent, n));
                        if a != b {
                            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                            parent[hi as usize] = lo;
                            label = lo;
                        }
                    }
                }
                if label == 0 {
                    label = parent.len() as u32;
                    parent.push(label);
                }
                provisional[i] = label;
            }
        }
    }

    let mut final_id = vec![0u32; parent.len()];
    let mut sizes = Vec::new();
    let mut ids = provisional;
    for id in ids.iter_mut() {
        if *id == 0 {
            continue;
        }
        let root = find(&mut parent, *id) as usize;
        if final_id[root] == 0 {
            sizes.push(0);
            final_id[root] = sizes.len() as u32;
        }
        *id = final_id[root];
        sizes[*id as usize - 1] += 1;
    }
    ComponentLabeling { grid, ids, sizes }
}

/// Foreground voxels with a face neighbour that is background or off-grid.
pub fn surface_voxels(mask: &RegionMask) -> RegionMask {
    let grid = *mask.grid();
    let [nx, ny, nz] = grid.shape();
    let bits = mask.bits();
    let mut out = vec![false; bits.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = grid.index(x, y, z);
                if !bits[i] {
                    continue;
                }
                out[i] = x == 0
                    || y == 0
                    || z == 0
                    || x + 1 == nx
                    || y + 1 == ny
                    || z + 1 == nz
                    || !bits[i - 1]
                    || !bits[i + 1]
                    || !bits[i - nx]
                    || !bits[i + nx]
                    || !bits[i - nx * ny]
                    || !bits[i + nx * ny];
            }
        }
    }
    RegionMask::from_parts(grid, out, mask.tag())
}

/// Distance in mm from every voxel center to the nearest source voxel center.
/// Every value is `f64::INFINITY` when the source is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    grid: Grid,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.grid.index(x, y, z)]
    }
}

/// Lower envelope of parabolas `f[q] + (w * (p - q))^2`, evaluated in place.
/// `f` holds squared distances; infinite entries contribute no parabola.
fn envelope_pass(f: &mut [f64], w: f64, sites: &mut Vec<usize>, bounds: &mut Vec<f64>) {
    let n = f.len();
    sites.clear();
    bounds.clear();
    let w2 = w * w;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        let qf = q as f64;
        loop {
            let Some(&v) = sites.last() else {
                sites.push(q);
                bounds.push(f64::NEG_INFINITY);
                break;
            };
            let vf = v as f64;
            let s = ((f[q] + w2 * qf * qf) - (f[v] + w2 * vf * vf)) / (2.0 * w2 * (qf - vf));
            if s <= *bounds.last().unwrap() {
                sites.pop();
                bounds.pop();
            } else {
                sites.push(q);
                bounds.push(s);
                break;
            }
        }
    }
    if sites.is_empty() {
        return;
    }
    let heights: Vec<f64> = sites.iter().map(|&v| f[v]).collect();
    let mut k = 0;
    for (p, out) in f.iter_mut().enumerate() {
        let pf = p as f64;
        while k + 1 < sites.len() && bounds[k + 1] < pf {
            k += 1;
        }
        let d = w * (pf - sites[k] as f64);
        *out = heights[k] + d * d;
    }
}

/// Exact Euclidean distance transform with anisotropic spacing: one
/// lower-envelope pass per axis over squared distances, then a square root.
pub fn distance_transform(source: &RegionMask) -> DistanceField {
    let grid = *source.grid();
    let mut sq: Vec<f64> = source
        .bits()
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    squared_edt_in_place(&mut sq, &grid);
    DistanceField {
        grid,
        values: sq.into_iter().map(f64::sqrt).collect(),
    }
}

pub(crate) fn squared_edt_in_place(sq: &mut [f64], grid: &Grid) {
    let shape = grid.shape();
    let spacing = grid.spacing();
    let strides = [1, shape[0], shape[0] * shape[1]];
    let mut line = Vec::new();
    let mut sites = Vec::new();
    let mut bounds = Vec::new();
    for axis in 0..3 {
        let n = shape[axis];
        let stride = strides[axis];
        let (o1, o2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for b in 0..shape[o2] {
            for a in 0..shape[o1] {
                let base = a * strides[o1] + b * strides[o2];
                line.clear();
                line.extend((0..n).map(|k| sq[base + k * stride]));
                if line.iter().all(|v| v.is_infinite()) {
                    continue;
                }
                envelope_pass(&mut line, spacing[axis], &mut sites, &mut bounds);
                for (k, &v) in line.iter().enumerate() {
                    sq[base + k * stride] = v;
                }
            }
        }
    }
}

/// Voxels within Chebyshev distance `radius_vox` of the mask.
pub fn dilate_mask(mask: &RegionMask, radius_vox: usize) -> RegionMask {
    if radius_vox == 0 {
        return mask.clone();
    }
    let grid = *mask.grid();
    let shape = grid.shape();
    let strides = [1, shape[0], shape[0] * shape[1]];
    let mut cur: Vec<bool> = mask.bits().to_vec();
    let mut prefix = Vec::new();
    for axis in 0..3 {
        let n = shape[axis];
        let stride = strides[axis];
        let (o1, o2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut next = cur.clone();
        for b in 0..shape[o2] {
            for a in 0..shape[o1] {
                let base = a * strides[o1] + b * strides[o2];
                prefix.clear();
                prefix.push(0usize);
                for k in 0..n {
                    let last = *prefix.last().unwrap();
                    prefix.push(last + cur[base + k * stride] as usize);
                }
                for k in 0..n {
                    let lo = k.saturating_sub(radius_vox);
                    let hi = (k + radius_vox + 1).min(n);
                    next[base + k * stride] = prefix[hi] > prefix[lo];
                }
            }
        }
        cur = next;
    }
    RegionMask::from_parts(grid, cur, mask.tag())
}

/// Inclusive voxel bounding box of all set bits across `masks`.
pub(crate) fn bounding_box(masks: &[&RegionMask]) -> Option<([usize; 3], [usize; 3])> {
    let grid = masks.first()?.grid();
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for m in masks {
        for (i, _) in m.bits().iter().enumerate().filter(|(_, &b)| b) {
            let c = grid.coords(i);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
            any = true;
        }
    }
    any.then_some((lo, hi))
}

/// Sub-volume of `mask` covering the inclusive box `[lo, hi]`.
pub(crate) fn crop(mask: &RegionMask, lo: [usize; 3], hi: [usize; 3]) -> RegionMask {
    let grid = mask.grid();
    let shape = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
    let sub = Grid::new(shape, grid.spacing()).expect("box within a valid grid");
    RegionMask::from_fn(sub, mask.tag(), |x, y, z| {
        mask.get(x + lo[0], y + lo[1], z + lo[2])
    })
}
