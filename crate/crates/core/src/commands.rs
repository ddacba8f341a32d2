//! File-level entry points behind the `gliomakit` binary. Each reads its
//! inputs from disk, calls into the library and writes or returns the result.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::curves::{detect_phases, CurvePhases, PhaseParams, TrainingCurve};
use crate::error::{Error, Result};
use crate::nifti::{read_labels, read_volume, write_nifti_with_header, AffineBlock, NiftiHeader};
use crate::preprocess::{preprocess_scan, resample_labels, ResamplePlan};
use crate::regions::hybrid_fuse;
use crate::schedule::{build_schedule, schedule_csv, TrainingConfig};
use crate::volume::{Grid, MultiModalScan, Volume3D};

/// Gzip output when the destination ends in `.gz`.
pub fn wants_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
}

/// Fuse two label maps (extended-run model first) and write the result.
/// The output reuses `model_a`'s header orientation.
pub fn run_fuse(model_a: &Path, model_b: &Path, out: &Path) -> Result<()> {
    let (header, a) = read_labels(model_a)?;
    let (_, b) = read_labels(model_b)?;
    if !a.grid().same_lattice(b.grid()) {
        return Err(Error::GridMismatch {
            left: format!("{} has {}", model_a.display(), a.grid()),
            right: format!("{} has {}", model_b.display(), b.grid()),
        });
    }
    let fused = hybrid_fuse(&a, &b)?;
    write_file(
        out,
        &write_nifti_with_header(&fused, Some(&header), wants_gzip(out)),
    )
}

#[derive(Debug, Clone)]
pub struct PreprocessInputs {
    /// T1, T1 post-contrast, T2, FLAIR.
    pub channels: [PathBuf; 4],
    pub labels: Option<PathBuf>,
    pub target_spacing: [f64; 3],
    pub out_dir: PathBuf,
}

/// Resample and z-score the four channels (and resample labels, if given).
/// Outputs keep their input file names inside `out_dir`; returns the paths written.
pub fn run_preprocess(inputs: &PreprocessInputs) -> Result<Vec<PathBuf>> {
    let mut headers: Vec<NiftiHeader> = Vec::new();
    let mut volumes: Vec<Volume3D> = Vec::new();
    for path in &inputs.channels {
        let (h, v) = read_volume(path)?;
        headers.push(h);
        volumes.push(v);
    }
    let scan = MultiModalScan::new(volumes.try_into().expect("four channels"))?;
    let trilinear = ResamplePlan::trilinear(inputs.target_spacing)?;
    let processed = preprocess_scan(&scan, &trilinear)?;

    std::fs::create_dir_all(&inputs.out_dir)
        .map_err(|e| Error::from(e).in_file(&inputs.out_dir))?;
    let out_path = |p: &Path| -> Result<PathBuf> {
        let name = p
            .file_name()
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no file name", p.display())))?;
        Ok(inputs.out_dir.join(name))
    };
    let mut written = Vec::new();
    for ((path, header), vol) in inputs
        .channels
        .iter()
        .zip(&headers)
        .zip(processed.channels())
    {
        let out = out_path(path)?;
        write_file(
            &out,
            &write_nifti_with_header(vol, Some(&template(header, vol.grid())), wants_gzip(&out)),
        )?;
        written.push(out);
    }
    if let Some(path) = &inputs.labels {
        let (header, labels) = read_labels(path)?;
        let nearest = ResamplePlan::nearest(inputs.target_spacing)?;
        let resampled = resample_labels(&labels, &nearest);
        let out = out_path(path)?;
        write_file(
            &out,
            &write_nifti_with_header(
                &resampled,
                Some(&template(&header, resampled.grid())),
                wants_gzip(&out),
            ),
        )?;
        written.push(out);
    }
    Ok(written)
}

/// Resampling changes the voxel-to-world mapping; only units and description carry over.
fn template(header: &NiftiHeader, grid: &Grid) -> NiftiHeader {
    let mut t = header.clone();
    t.affine = AffineBlock::from_origin(grid.origin());
    t
}

#[derive(Debug, Serialize)]
struct HeaderInfo<'a> {
    path: String,
    shape: [usize; 3],
    spacing_mm: [f64; 3],
    voxel_count: usize,
    header: &'a NiftiHeader,
}

/// Pretty JSON summary of a NIfTI header.
pub fn header_info(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    let (header, _) = crate::nifti::parse_nifti(&bytes).map_err(|e| e.in_file(path))?;
    let info = HeaderInfo {
        path: path.display().to_string(),
        shape: header.shape(),
        spacing_mm: header.spacing(),
        voxel_count: header.voxel_count(),
        header: &header,
    };
    Ok(serde_json::to_string_pretty(&info)? + "\n")
}

/// `epoch,lr` CSV for a schedule configuration.
pub fn lr_schedule_csv(cfg: &TrainingConfig) -> Result<String> {
    Ok(schedule_csv(&build_schedule(cfg)?))
}

/// Detected phases of a curve CSV, as pretty JSON.
pub fn analyze_curves(path: &Path, params: &PhaseParams) -> Result<(CurvePhases, String)> {
    let curve = TrainingCurve::from_csv_path(path)?;
    let phases = detect_phases(&curve, params).map_err(|e| e.in_file(path))?;
    let json = serde_json::to_string_pretty(&phases)? + "\n";
    Ok((phases, json))
}
