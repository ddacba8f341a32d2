//! Reference implementations and fixture builders shared by the integration
//! tests. Everything here is written from the definitions, without calling
//! the library's own morphology or metric code.
#![allow(dead_code)]

use std::collections::VecDeque;

use gliomakit::{Grid, LabelMap, RegionMask, RegionTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SPACINGS: [[f64; 3]; 3] = [[1.0, 1.0, 1.0], [1.0, 1.0, 2.0], [0.5, 1.0, 1.0]];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_shape(rng: &mut impl Rng, max: usize) -> [usize; 3] {
    [
        rng.gen_range(1..=max),
        rng.gen_range(1..=max),
        rng.gen_range(1..=max),
    ]
}

/// Either salt noise or a union of a few boxes, so both scattered and
/// compact components show up.
pub fn random_mask(rng: &mut impl Rng, grid: Grid, tag: RegionTag) -> RegionMask {
    let [nx, ny, nz] = grid.shape();
    let mut bits = vec![false; grid.len()];
    match rng.gen_range(0..4) {
        0 => {}
        1 => {
            let p = rng.gen_range(0.05..0.6);
            bits.iter_mut().for_each(|b| *b = rng.gen_bool(p));
        }
        _ => {
            for _ in 0..rng.gen_range(1..4) {
                let lo = [
                    rng.gen_range(0..nx),
                    rng.gen_range(0..ny),
                    rng.gen_range(0..nz),
                ];
                let hi = [
                    rng.gen_range(lo[0]..nx),
                    rng.gen_range(lo[1]..ny),
                    rng.gen_range(lo[2]..nz),
                ];
                for z in lo[2]..=hi[2] {
                    for y in lo[1]..=hi[1] {
                        for x in lo[0]..=hi[0] {
                            bits[grid.index(x, y, z)] = true;
                        }
                    }
                }
            }
        }
    }
    RegionMask::new(grid, bits, tag).unwrap()
}

pub fn random_labels(rng: &mut impl Rng, grid: Grid) -> LabelMap {
    let bias = rng.gen_range(0.0..0.8);
    let labels = (0..grid.len())
        .map(|_| {
            if rng.gen_bool(bias) {
                0
            } else {
                rng.gen_range(0..=3)
            }
        })
        .collect();
    LabelMap::new(grid, labels).unwrap()
}

fn coords(grid: &Grid) -> Vec<[usize; 3]> {
    let [nx, ny, nz] = grid.shape();
    let mut out = Vec::with_capacity(grid.len());
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                out.push([x, y, z]);
            }
        }
    }
    out
}

pub fn oracle_dice(a: &[bool], b: &[bool]) -> f64 {
    let na = a.iter().filter(|&&v| v).count();
    let nb = b.iter().filter(|&&v| v).count();
    let both = a.iter().zip(b).filter(|(&x, &y)| x && y).count();
    if na + nb == 0 {
        1.0
    } else {
        2.0 * both as f64 / (na + nb) as f64
    }
}

/// Foreground voxels with at least one of the six face neighbours missing
/// from the foreground (off-grid counts as missing).
pub fn oracle_surface(grid: &Grid, bits: &[bool]) -> Vec<[usize; 3]> {
    let shape = grid.shape();
    coords(grid)
        .into_iter()
        .filter(|&c| {
            if !bits[grid.index(c[0], c[1], c[2])] {
                return false;
            }
            (0..3).any(|axis| {
                [-1isize, 1].iter().any(|&d| {
                    let v = c[axis] as isize + d;
                    if v < 0 || v >= shape[axis] as isize {
                        return true;
                    }
                    let mut n = c;
                    n[axis] = v as usize;
                    !bits[grid.index(n[0], n[1], n[2])]
                })
            })
        })
        .collect()
}

pub fn physical_distance(grid: &Grid, a: [usize; 3], b: [usize; 3]) -> f64 {
    let s = grid.spacing();
    (0..3)
        .map(|k| {
            let d = (a[k] as f64 - b[k] as f64) * s[k];
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// All-pairs normalised surface dice, using the library's published slack.
pub fn oracle_nsd(grid: &Grid, a: &[bool], b: &[bool], tol: f64) -> f64 {
    let sa = oracle_surface(grid, a);
    let sb = oracle_surface(grid, b);
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    if sa.is_empty() || sb.is_empty() {
        return 0.0;
    }
    let limit = tol + gliomakit::metrics::NSD_SLACK_MM;
    let close = |from: &[[usize; 3]], to: &[[usize; 3]]| {
        from.iter()
            .filter(|&&p| to.iter().any(|&q| physical_distance(grid, p, q) <= limit))
            .count()
    };
    (close(&sa, &sb) + close(&sb, &sa)) as f64 / (sa.len() + sb.len()) as f64
}

pub fn neighbour(c: [usize; 3], d: [isize; 3], shape: [usize; 3]) -> Option<[usize; 3]> {
    let mut out = [0usize; 3];
    for k in 0..3 {
        let v = c[k] as isize + d[k];
        if v < 0 || v >= shape[k] as isize {
            return None;
        }
        out[k] = v as usize;
    }
    Some(out)
}

/// Offsets whose count of nonzero components is at most 1, 2 or 3.
pub fn oracle_offsets(connectivity: u8) -> Vec<[isize; 3]> {
    let max_nonzero = match connectivity {
        6 => 1,
        18 => 2,
        26 => 3,
        other => panic!("bad connectivity {other}"),
    };
    let mut out = Vec::new();
    for dz in -1..=1isize {
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let nonzero = [dx, dy, dz].iter().filter(|&&v| v != 0).count();
                if nonzero > 0 && nonzero <= max_nonzero {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}

/// Breadth-first flood fill; components are listed in scan order of their
/// first voxel, each as sorted linear indices.
pub fn flood_fill(grid: &Grid, bits: &[bool], connectivity: u8) -> Vec<Vec<usize>> {
    let offsets = oracle_offsets(connectivity);
    let shape = grid.shape();
    let mut seen = vec![false; bits.len()];
    let mut out = Vec::new();
    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(i);
            let c = grid.coords(i);
            for &d in &offsets {
                if let Some(n) = neighbour(c, d, shape) {
                    let j = grid.index(n[0], n[1], n[2]);
                    if bits[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Voxels within Chebyshev distance `r` of some member.
pub fn oracle_dilate(grid: &Grid, members: &[usize], r: usize) -> Vec<bool> {
    let pts: Vec<[usize; 3]> = members.iter().map(|&i| grid.coords(i)).collect();
    coords(grid)
        .into_iter()
        .map(|c| pts.iter().any(|p| (0..3).all(|k| c[k].abs_diff(p[k]) <= r)))
        .collect()
}

pub enum OracleBase {
    Dice,
    Nsd(f64),
}

pub fn oracle_lesionwise(
    grid: &Grid,
    pred: &[bool],
    gt: &[bool],
    base: OracleBase,
    connectivity: u8,
    radius: usize,
    min_size: usize,
) -> f64 {
    let gt_cc: Vec<Vec<usize>> = flood_fill(grid, gt, connectivity)
        .into_iter()
        .filter(|c| c.len() >= min_size)
        .collect();
    let pred_cc: Vec<Vec<usize>> = flood_fill(grid, pred, connectivity)
        .into_iter()
        .filter(|c| c.len() >= min_size)
        .collect();
    let mut matched = vec![false; pred_cc.len()];
    let mut total = 0.0;
    for lesion in &gt_cc {
        let zone = oracle_dilate(grid, lesion, radius);
        let mut union = vec![false; grid.len()];
        for (k, comp) in pred_cc.iter().enumerate() {
            if comp.iter().any(|&i| zone[i]) {
                matched[k] = true;
                comp.iter().for_each(|&i| union[i] = true);
            }
        }
        let mut lesion_bits = vec![false; grid.len()];
        lesion.iter().for_each(|&i| lesion_bits[i] = true);
        total += match base {
            OracleBase::Dice => oracle_dice(&union, &lesion_bits),
            OracleBase::Nsd(t) => oracle_nsd(grid, &union, &lesion_bits, t),
        };
    }
    let fp = matched.iter().filter(|&&m| !m).count();
    let denom = gt_cc.len() + fp;
    if denom == 0 {
        1.0
    } else {
        total / denom as f64
    }
}

/// Minimum distance from each voxel to a set of source voxels, by brute force.
pub fn oracle_edt(grid: &Grid, source: &[bool]) -> Vec<f64> {
    let all = coords(grid);
    let src: Vec<[usize; 3]> = all
        .iter()
        .copied()
        .filter(|c| source[grid.index(c[0], c[1], c[2])])
        .collect();
    all.iter()
        .map(|&c| {
            src.iter()
                .map(|&s| physical_distance(grid, c, s))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Byte order for hand-built NIfTI fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Le,
    Be,
}

/// `(code, bytes per voxel)` for the six fixture datatypes.
pub const DTYPES: [(i16, usize); 6] = [(2, 1), (4, 2), (8, 4), (16, 4), (64, 8), (512, 2)];

/// Builds a single-file NIfTI-1 image byte by byte.
pub struct NiftiFixture {
    pub shape: [usize; 3],
    pub spacing: [f32; 3],
    pub code: i16,
    pub order: Order,
    pub slope: f32,
    pub inter: f32,
    pub vox_offset: usize,
    pub magic: [u8; 4],
}

impl NiftiFixture {
    pub fn new(shape: [usize; 3], spacing: [f32; 3], code: i16, order: Order) -> Self {
        Self {
            shape,
            spacing,
            code,
            order,
            slope: 0.0,
            inter: 0.0,
            vox_offset: 352,
            magic: *b"n+1\0",
        }
    }

    fn put(&self, buf: &mut [u8], at: usize, le: &[u8]) {
        let n = le.len();
        let dst = &mut buf[at..at + n];
        dst.copy_from_slice(le);
        if self.order == Order::Be {
            dst.reverse();
        }
    }

    fn encode_value(&self, v: f64) -> Vec<u8> {
        match self.code {
            2 => vec![v as u8],
            4 => (v as i16).to_le_bytes().to_vec(),
            8 => (v as i32).to_le_bytes().to_vec(),
            16 => (v as f32).to_le_bytes().to_vec(),
            64 => v.to_le_bytes().to_vec(),
            512 => (v as u16).to_le_bytes().to_vec(),
            c => panic!("fixture cannot encode datatype {c}"),
        }
    }

    pub fn bytes(&self, values: &[f64]) -> Vec<u8> {
        let size = DTYPES.iter().find(|d| d.0 == self.code).map_or(1, |d| d.1);
        let mut buf = vec![0u8; self.vox_offset];
        self.put(&mut buf, 0, &348i32.to_le_bytes());
        let dims = [
            3i16,
            self.shape[0] as i16,
            self.shape[1] as i16,
            self.shape[2] as i16,
            1,
            1,
            1,
            1,
        ];
        for (k, d) in dims.iter().enumerate() {
            self.put(&mut buf, 40 + 2 * k, &d.to_le_bytes());
        }
        self.put(&mut buf, 70, &self.code.to_le_bytes());
        self.put(&mut buf, 72, &((size * 8) as i16).to_le_bytes());
        let pix = [
            1.0f32,
            self.spacing[0],
            self.spacing[1],
            self.spacing[2],
            1.0,
            0.0,
            0.0,
            0.0,
        ];
        for (k, p) in pix.iter().enumerate() {
            self.put(&mut buf, 76 + 4 * k, &p.to_le_bytes());
        }
        self.put(&mut buf, 108, &(self.vox_offset as f32).to_le_bytes());
        self.put(&mut buf, 112, &self.slope.to_le_bytes());
        self.put(&mut buf, 116, &self.inter.to_le_bytes());
        buf[123] = 2;
        buf[344..348].copy_from_slice(&self.magic);
        for &v in values {
            let mut raw = self.encode_value(v);
            if self.order == Order::Be {
                raw.reverse();
            }
            buf.extend_from_slice(&raw);
        }
        buf
    }
}

pub fn gzip(bytes: &[u8]) -> Vec<u8> {
    use std::io::Write;
    let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::fast());
    enc.write_all(bytes).unwrap();
    enc.finish().unwrap()
}

/// Integer values in range for every fixture datatype, exact in `f32`.
pub fn fixture_values(len: usize, code: i16, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let (lo, hi) = match code {
        2 => (0, 255),
        4 => (-3000, 3000),
        8 => (-1_000_000, 1_000_000),
        512 => (0, 60000),
        _ => (-50_000, 50_000),
    };
    (0..len)
        .map(|_| {
            let base = r.gen_range(lo..=hi) as f64;
            if matches!(code, 16 | 64) {
                base + r.gen_range(0..4) as f64 * 0.25
            } else {
                base
            }
        })
        .collect()
}

/// One synthetic case of the golden dataset: `(id, ground truth, prediction)`.
pub struct GoldenCase {
    pub id: &'static str,
    pub gt: LabelMap,
    pub pred: LabelMap,
}

fn paint(labels: &mut [u8], grid: &Grid, lo: [usize; 3], hi: [usize; 3], value: u8) {
    for z in lo[2]..hi[2] {
        for y in lo[1]..hi[1] {
            for x in lo[0]..hi[0] {
                labels[grid.index(x, y, z)] = value;
            }
        }
    }
}

/// Three small cases: a perfect match, two cubes offset by half their width
/// (WT Dice exactly 0.5), and a nested tumor with a spurious predicted blob.
pub fn golden_cases() -> Vec<GoldenCase> {
    let g1 = Grid::new([12, 12, 10], [1.0, 1.0, 1.0]).unwrap();
    let mut gt1 = vec![0u8; g1.len()];
    paint(&mut gt1, &g1, [2, 2, 2], [9, 9, 8], 3);
    paint(&mut gt1, &g1, [3, 3, 3], [8, 8, 7], 2);
    paint(&mut gt1, &g1, [4, 4, 4], [7, 7, 6], 1);
    let case1 = GoldenCase {
        id: "case_001",
        gt: LabelMap::new(g1, gt1.clone()).unwrap(),
        pred: LabelMap::new(g1, gt1).unwrap(),
    };

    let g2 = Grid::new([16, 8, 8], [1.0, 1.0, 2.0]).unwrap();
    let mut gt2 = vec![0u8; g2.len()];
    let mut pr2 = vec![0u8; g2.len()];
    paint(&mut gt2, &g2, [2, 2, 2], [6, 6, 6], 3);
    paint(&mut pr2, &g2, [4, 2, 2], [8, 6, 6], 3);
    let case2 = GoldenCase {
        id: "case_002",
        gt: LabelMap::new(g2, gt2).unwrap(),
        pred: LabelMap::new(g2, pr2).unwrap(),
    };

    let g3 = Grid::new([14, 12, 10], [0.5, 1.0, 1.0]).unwrap();
    let mut gt3 = vec![0u8; g3.len()];
    paint(&mut gt3, &g3, [1, 1, 1], [8, 8, 8], 3);
    paint(&mut gt3, &g3, [2, 2, 2], [7, 7, 7], 2);
    paint(&mut gt3, &g3, [3, 3, 3], [5, 6, 6], 1);
    let mut pr3 = vec![0u8; g3.len()];
    paint(&mut pr3, &g3, [1, 2, 1], [8, 8, 7], 3);
    paint(&mut pr3, &g3, [2, 2, 2], [6, 7, 6], 2);
    paint(&mut pr3, &g3, [3, 3, 3], [5, 5, 5], 1);
    paint(&mut pr3, &g3, [11, 9, 7], [13, 11, 9], 3);
    let case3 = GoldenCase {
        id: "case_003",
        gt: LabelMap::new(g3, gt3).unwrap(),
        pred: LabelMap::new(g3, pr3).unwrap(),
    };
    vec![case1, case2, case3]
}

pub fn golden_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden")
}
