//! Evaluation toolkit for multi-region glioma segmentation.
//!
//! The crate covers the quantitative side of a two-model BraTS-style
//! pipeline: NIfTI-1 volume I/O, resampling and z-score preprocessing,
//! ET/TC/WT region composition, Dice, Normalised Surface Dice and their
//! lesion-wise variants, hybrid fusion of two models' label maps,
//! polynomial learning-rate schedules, and detection of fit, plateau and
//! late-generalization phases in training curves.
//!
//! Each capability has a runnable program under `examples/`.

pub mod commands;
pub mod curves;
pub mod error;
pub mod metrics;
pub mod morphology;
pub mod nifti;
pub mod preprocess;
pub mod regions;
pub mod report;
pub mod schedule;
pub mod volume;

pub use curves::{detect_phases, CurvePhases, PhaseParams, TrainingCurve};
pub use error::{Error, NiftiError, Result};
pub use metrics::{
    aggregate_cases, dice, evaluate_case, lesionwise, nsd, soft_dice_ce_loss, AggregateReport,
    BaseMetric, CaseScores, LesionwiseParams,
};
pub use morphology::{
    connected_components, dilate_mask, distance_transform, surface_voxels, ComponentLabeling,
    Connectivity, DistanceField,
};
pub use nifti::{parse_nifti, parse_nifti_labels, write_nifti, NiftiHeader};
pub use preprocess::{infer_brain_mask, resample, resample_labels, zscore_normalize, ResamplePlan};
pub use regions::{compose_region, hybrid_fuse, labelmap_from_regions, RegionDef};
pub use schedule::{build_schedule, poly_lr_at, TrainingConfig};
pub use volume::{
    physical_volume_mm3, voxel_count, Grid, LabelMap, MultiModalScan, RegionMask, RegionTag,
    Volume3D,
};
