//! Single-file NIfTI-1 (`.nii` / `.nii.gz`) reading and writing.
//!
//! Voxel data is decoded into `f64` (scaled by `scl_slope`/`scl_inter` when
//! the slope is nonzero) and stored x-fastest, so no transpose is needed.
//! The qform/sform block is carried through [`NiftiHeader`] untouched but
//! never interpreted.

use std::io::{Read, Write};

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Serialize;

use crate::error::{Error, NiftiError, Result};
use crate::volume::{Grid, LabelMap, Volume3D};

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte extension flag; data always starts here on write.
pub const DATA_OFFSET: usize = 352;
pub const MAGIC_SINGLE_FILE: &[u8; 4] = b"n+1\0";
pub const MAGIC_PAIR: &[u8; 4] = b"ni1\0";
const NIFTI2_HEADER_SIZE: i32 = 540;
const MAGIC_OFFSET: usize = 344;
const DIM_OFFSET: usize = 40;
const DATATYPE_OFFSET: usize = 70;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Endianness {
    Little,
    Big,
}

/// On-disk voxel types this crate reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Datatype {
    Uint8,
    Int16,
    Int32,
    Float32,
    Float64,
    Uint16,
}

impl Datatype {
    pub const ALL: [Datatype; 6] = [
        Datatype::Uint8,
        Datatype::Int16,
        Datatype::Int32,
        Datatype::Float32,
        Datatype::Float64,
        Datatype::Uint16,
    ];

    pub fn from_code(code: i16) -> Option<Self> {
        Some(match code {
            2 => Datatype::Uint8,
            4 => Datatype::Int16,
            8 => Datatype::Int32,
            16 => Datatype::Float32,
            64 => Datatype::Float64,
            512 => Datatype::Uint16,
            _ => return None,
        })
    }

    pub fn code(self) -> i16 {
        match self {
            Datatype::Uint8 => 2,
            Datatype::Int16 => 4,
            Datatype::Int32 => 8,
            Datatype::Float32 => 16,
            Datatype::Float64 => 64,
            Datatype::Uint16 => 512,
        }
    }

    pub fn size_bytes(self) -> usize {
        match self {
            Datatype::Uint8 => 1,
            Datatype::Int16 | Datatype::Uint16 => 2,
            Datatype::Int32 | Datatype::Float32 => 4,
            Datatype::Float64 => 8,
        }
    }

    pub fn bitpix(self) -> i16 {
        (self.size_bytes() * 8) as i16
    }
}

/// Orientation fields, kept verbatim so a parse/write cycle preserves them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineBlock {
    pub qform_code: i16,
    pub sform_code: i16,
    /// quatern_b, quatern_c, quatern_d, qoffset_x, qoffset_y, qoffset_z
    pub quatern: [f32; 6],
    pub srow: [[f32; 4]; 3],
}

impl AffineBlock {
    /// Axis-aligned qform placing the first voxel center at `origin`.
    pub fn from_origin(origin: [f64; 3]) -> Self {
        Self {
            qform_code: 1,
            sform_code: 0,
            quatern: [
                0.0,
                0.0,
                0.0,
                origin[0] as f32,
                origin[1] as f32,
                origin[2] as f32,
            ],
            srow: [[0.0; 4]; 3],
        }
    }

    /// Position of the first voxel center, when the header states one.
    pub fn origin(&self) -> [f64; 3] {
        if self.qform_code > 0 {
            [
                self.quatern[3] as f64,
                self.quatern[4] as f64,
                self.quatern[5] as f64,
            ]
        } else if self.sform_code > 0 {
            [
                self.srow[0][3] as f64,
                self.srow[1][3] as f64,
                self.srow[2][3] as f64,
            ]
        } else {
            [0.0; 3]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NiftiHeader {
    pub sizeof_hdr: i32,
    pub dim: [i16; 8],
    pub datatype: Datatype,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub xyzt_units: u8,
    pub descrip: String,
    pub affine: AffineBlock,
    pub magic: [u8; 4],
    pub endianness: Endianness,
}

impl NiftiHeader {
    pub fn shape(&self) -> [usize; 3] {
        [
            self.dim[1] as usize,
            self.dim[2] as usize,
            self.dim[3] as usize,
        ]
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.pixdim[1] as f64,
            self.pixdim[2] as f64,
            self.pixdim[3] as f64,
        ]
    }

    pub fn voxel_count(&self) -> usize {
        self.shape().iter().product()
    }
}

struct ByteView<'a> {
    bytes: &'a [u8],
    order: Endianness,
}

impl ByteView<'_> {
    fn array<const N: usize>(&self, at: usize) -> [u8; N] {
        let mut raw: [u8; N] = self.bytes[at..at + N].try_into().expect("in bounds");
        if self.order == Endianness::Big {
            raw.reverse();
        }
        raw
    }

    fn i16(&self, at: usize) -> i16 {
        i16::from_le_bytes(self.array(at))
    }

    fn i32(&self, at: usize) -> i32 {
        i32::from_le_bytes(self.array(at))
    }

    fn f32(&self, at: usize) -> f32 {
        f32::from_le_bytes(self.array(at))
    }
}

fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
}

fn decompress(bytes: &[u8]) -> Result<Vec<u8>, NiftiError> {
    let mut out = Vec::new();
    MultiGzDecoder::new(bytes)
        .read_to_end(&mut out)
        .map_err(|e| NiftiError::Decompress(e.to_string()))?;
    Ok(out)
}

fn parse_header(bytes: &[u8]) -> Result<NiftiHeader, NiftiError> {
    if bytes.len() < HEADER_SIZE {
        return Err(NiftiError::Truncated {
            offset: 0,
            needed: HEADER_SIZE,
            available: bytes.len(),
        });
    }
    let le = i32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let be = i32::from_be_bytes(bytes[0..4].try_into().unwrap());
    let order = match (le, be) {
        (348, _) => Endianness::Little,
        (_, 348) => Endianness::Big,
        (NIFTI2_HEADER_SIZE, _) | (_, NIFTI2_HEADER_SIZE) => {
            return Err(NiftiError::Nifti2Unsupported)
        }
        _ => return Err(NiftiError::BadHeaderSize(le)),
    };
    let view = ByteView { bytes, order };

    let magic: [u8; 4] = bytes[MAGIC_OFFSET..MAGIC_OFFSET + 4].try_into().unwrap();
    if &magic == MAGIC_PAIR {
        return Err(NiftiError::SplitPairUnsupported);
    }
    if &magic != MAGIC_SINGLE_FILE {
        return Err(NiftiError::BadMagic {
            offset: MAGIC_OFFSET,
            found: magic,
        });
    }

    let mut dim = [0i16; 8];
    for (i, d) in dim.iter_mut().enumerate() {
        *d = view.i16(DIM_OFFSET + 2 * i);
    }
    let rank = dim[0];
    let dims_ok = matches!(rank, 3 | 4)
        && dim[1..=rank as usize].iter().all(|&d| d >= 1)
        && (rank == 3 || dim[4] == 1);
    if !dims_ok {
        return Err(NiftiError::UnsupportedDims {
            dim,
            offset: DIM_OFFSET,
        });
    }

    let code = view.i16(DATATYPE_OFFSET);
    let datatype = Datatype::from_code(code).ok_or(NiftiError::UnsupportedDatatype {
        code,
        offset: DATATYPE_OFFSET,
    })?;

    let mut pixdim = [0f32; 8];
    for (i, p) in pixdim.iter_mut().enumerate() {
        *p = view.f32(76 + 4 * i);
    }
    let vox_offset = view.f32(108);
    if !(vox_offset >= DATA_OFFSET as f32 && vox_offset.fract() == 0.0) {
        return Err(NiftiError::BadVoxOffset(vox_offset));
    }

    let mut quatern = [0f32; 6];
    for (i, q) in quatern.iter_mut().enumerate() {
        *q = view.f32(256 + 4 * i);
    }
    let mut srow = [[0f32; 4]; 3];
    for (r, row) in srow.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = view.f32(280 + 16 * r + 4 * c);
        }
    }
    let descrip_raw = &bytes[148..228];
    let descrip_end = descrip_raw.iter().position(|&b| b == 0).unwrap_or(80);

    Ok(NiftiHeader {
        sizeof_hdr: 348,
        dim,
        datatype,
        bitpix: view.i16(72),
        pixdim,
        vox_offset,
        scl_slope: view.f32(112),
        scl_inter: view.f32(116),
        xyzt_units: bytes[123],
        descrip: String::from_utf8_lossy(&descrip_raw[..descrip_end]).into_owned(),
        affine: AffineBlock {
            qform_code: view.i16(252),
            sform_code: view.i16(254),
            quatern,
            srow,
        },
        magic,
        endianness: order,
    })
}

fn decode_raw(chunk: &[u8], datatype: Datatype, order: Endianness) -> f64 {
    let view = ByteView {
        bytes: chunk,
        order,
    };
    match datatype {
        Datatype::Uint8 => chunk[0] as f64,
        Datatype::Int16 => view.i16(0) as f64,
        Datatype::Uint16 => u16::from_le_bytes(view.array(0)) as f64,
        Datatype::Int32 => view.i32(0) as f64,
        Datatype::Float32 => view.f32(0) as f64,
        Datatype::Float64 => f64::from_le_bytes(view.array(0)),
    }
}

/// Header, grid and scaled voxel values, plus the byte offset of the data.
fn decode(bytes: &[u8]) -> Result<(NiftiHeader, Grid, Vec<f64>, usize)> {
    let owned;
    let bytes = if is_gzip(bytes) {
        owned = decompress(bytes)?;
        &owned[..]
    } else {
        bytes
    };
    let header = parse_header(bytes)?;
    let grid = Grid::with_origin(header.shape(), header.spacing(), header.affine.origin())?;

    let start = header.vox_offset as usize;
    let width = header.datatype.size_bytes();
    let needed = grid.len() * width;
    if bytes.len() < start || bytes.len() - start < needed {
        return Err(NiftiError::Truncated {
            offset: start,
            needed,
            available: bytes.len().saturating_sub(start),
        }
        .into());
    }

    let scale = header.scl_slope != 0.0 && header.scl_slope.is_finite();
    let (slope, inter) = (header.scl_slope as f64, header.scl_inter as f64);
    let mut values = Vec::with_capacity(grid.len());
    for (i, chunk) in bytes[start..start + needed].chunks_exact(width).enumerate() {
        let raw = decode_raw(chunk, header.datatype, header.endianness);
        let v = if scale { raw * slope + inter } else { raw };
        if !v.is_finite() {
            return Err(NiftiError::NonFiniteVoxel {
                voxel: i,
                offset: start + i * width,
            }
            .into());
        }
        values.push(v);
    }
    Ok((header, grid, values, start))
}

/// Parse a `.nii` or gzip-wrapped `.nii.gz` stream as a scalar volume.
pub fn parse_nifti(bytes: &[u8]) -> Result<(NiftiHeader, Volume3D)> {
    let (header, grid, values, _) = decode(bytes)?;
    Ok((header, Volume3D::new(grid, values)?))
}

/// Parse a stream as a label map; every voxel must decode to exactly 0, 1, 2 or 3.
pub fn parse_nifti_labels(bytes: &[u8]) -> Result<(NiftiHeader, LabelMap)> {
    let (header, grid, values, start) = decode(bytes)?;
    let width = header.datatype.size_bytes();
    let mut labels = Vec::with_capacity(values.len());
    for (i, v) in values.into_iter().enumerate() {
        if !(v == 0.0 || v == 1.0 || v == 2.0 || v == 3.0) {
            return Err(NiftiError::LabelOutOfRange {
                value: v,
                voxel: i,
                offset: start + i * width,
            }
            .into());
        }
        labels.push(v as u8);
    }
    Ok((header, LabelMap::new(grid, labels)?))
}

/// Anything that can be written as a NIfTI-1 volume.
pub trait NiftiPayload {
    fn grid(&self) -> &Grid;
    fn datatype(&self) -> Datatype;
    fn encode_voxels(&self, out: &mut Vec<u8>);
}

impl NiftiPayload for Volume3D {
    fn grid(&self) -> &Grid {
        Volume3D::grid(self)
    }

    fn datatype(&self) -> Datatype {
        Datatype::Float32
    }

    fn encode_voxels(&self, out: &mut Vec<u8>) {
        for &v in self.voxels() {
            let v = v.clamp(f32::MIN as f64, f32::MAX as f64) as f32;
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

impl NiftiPayload for LabelMap {
    fn grid(&self) -> &Grid {
        LabelMap::grid(self)
    }

    fn datatype(&self) -> Datatype {
        Datatype::Uint8
    }

    fn encode_voxels(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.labels());
    }
}

/// Write a little-endian single-file NIfTI-1 stream, optionally gzip-wrapped.
pub fn write_nifti<P: NiftiPayload + ?Sized>(volume: &P, compress: bool) -> Vec<u8> {
    write_nifti_with_header(volume, None, compress)
}

/// Like [`write_nifti`], but copies orientation, units and description from
/// `template` (typically the header the volume was parsed with).
pub fn write_nifti_with_header<P: NiftiPayload + ?Sized>(
    volume: &P,
    template: Option<&NiftiHeader>,
    compress: bool,
) -> Vec<u8> {
    let grid = volume.grid();
    let datatype = volume.datatype();
    let mut out = Vec::with_capacity(DATA_OFFSET + grid.len() * datatype.size_bytes());
    encode_header(&mut out, grid, datatype, template);
    volume.encode_voxels(&mut out);
    if !compress {
        return out;
    }
    let mut encoder = GzEncoder::new(Vec::new(), Compression::default());
    encoder
        .write_all(&out)
        .and_then(|_| encoder.finish())
        .expect("writing to a Vec cannot fail")
}

fn encode_header(
    out: &mut Vec<u8>,
    grid: &Grid,
    datatype: Datatype,
    template: Option<&NiftiHeader>,
) {
    let mut h = [0u8; DATA_OFFSET];
    let mut put = |at: usize, bytes: &[u8]| h[at..at + bytes.len()].copy_from_slice(bytes);

    put(0, &(HEADER_SIZE as i32).to_le_bytes());
    put(38, b"r");
    let [nx, ny, nz] = grid.shape();
    let dim: [i16; 8] = [3, nx as i16, ny as i16, nz as i16, 1, 1, 1, 1];
    for (i, d) in dim.iter().enumerate() {
        put(DIM_OFFSET + 2 * i, &d.to_le_bytes());
    }
    put(DATATYPE_OFFSET, &datatype.code().to_le_bytes());
    put(72, &datatype.bitpix().to_le_bytes());
    let [sx, sy, sz] = grid.spacing();
    let pixdim: [f32; 8] = [1.0, sx as f32, sy as f32, sz as f32, 1.0, 1.0, 1.0, 1.0];
    for (i, p) in pixdim.iter().enumerate() {
        put(76 + 4 * i, &p.to_le_bytes());
    }
    put(108, &(DATA_OFFSET as f32).to_le_bytes());
    put(112, &1f32.to_le_bytes());
    put(116, &0f32.to_le_bytes());

    let (affine, units, descrip) = match template {
        Some(t) => (t.affine, t.xyzt_units, t.descrip.as_bytes()),
        // mm
        None => (AffineBlock::from_origin(grid.origin()), 2u8, &b""[..]),
    };
    put(123, &[units]);
    let descrip = &descrip[..descrip.len().min(79)];
    put(148, descrip);
    put(252, &affine.qform_code.to_le_bytes());
    put(254, &affine.sform_code.to_le_bytes());
    for (i, q) in affine.quatern.iter().enumerate() {
        put(256 + 4 * i, &q.to_le_bytes());
    }
    for (r, row) in affine.srow.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            put(280 + 16 * r + 4 * c, &v.to_le_bytes());
        }
    }
    put(MAGIC_OFFSET, MAGIC_SINGLE_FILE);
    out.extend_from_slice(&h);
}

/// Read a file from disk and parse it as a label map.
pub fn read_labels(path: &std::path::Path) -> Result<(NiftiHeader, LabelMap)> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_nifti_labels(&bytes).map_err(|e| e.in_file(path))
}

/// Read a file from disk and parse it as a scalar volume.
pub fn read_volume(path: &std::path::Path) -> Result<(NiftiHeader, Volume3D)> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_nifti(&bytes).map_err(|e| e.in_file(path))
}

/// `true` when `name` ends in `.nii` or `.nii.gz`.
pub fn has_nifti_extension(name: &str) -> bool {
    name.ends_with(".nii") || name.ends_with(".nii.gz")
}

/// File name with a trailing `.nii` or `.nii.gz` removed.
pub fn strip_nifti_extension(name: &str) -> &str {
    name.strip_suffix(".nii.gz")
        .or_else(|| name.strip_suffix(".nii"))
        .unwrap_or(name)
}
