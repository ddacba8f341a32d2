//! Overlap and surface scores for the three tumor regions, their lesion-wise
//! variants, the Dice + cross-entropy training loss, and cross-case aggregation.
//!
//! Empty-mask conventions: two empty masks agree perfectly (score 1), one
//! empty and one nonempty mask score 0.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::{
    bounding_box, connected_components, crop, dilate_mask, squared_edt_in_place, surface_voxels,
    Connectivity,
};
use crate::regions::compose_all;
use crate::volume::{voxel_count, LabelMap, RegionMask, RegionTag, Volume3D};

/// Slack (mm) on the NSD tolerance comparison.
pub const NSD_SLACK_MM: f64 = 1e-9;
/// Smoothing term of the soft Dice loss.
pub const DICE_SMOOTH: f64 = 1e-5;
/// Probabilities are clamped to at least this before taking the log.
pub const CE_PROB_FLOOR: f64 = 1e-12;
/// Allowed deviation of per-voxel class probabilities from summing to 1.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

pub const DEFAULT_TOLERANCES_MM: [f64; 2] = [0.5, 1.0];

pub fn dice(pred: &RegionMask, gt: &RegionMask) -> Result<f64> {
    pred.grid().ensure_same_lattice(gt.grid())?;
    let (mut p, mut g, mut both) = (0usize, 0usize, 0usize);
    for (&a, &b) in pred.bits().iter().zip(gt.bits()) {
        p += a as usize;
        g += b as usize;
        both += (a && b) as usize;
    }
    Ok(if p + g == 0 {
        1.0
    } else {
        2.0 * both as f64 / (p + g) as f64
    })
}

fn validate_tolerance(tolerance_mm: f64) -> Result<()> {
    if tolerance_mm.is_finite() && tolerance_mm > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "NSD tolerance must be positive and finite, got {tolerance_mm}"
        )))
    }
}

/// Normalised Surface Dice: the fraction of both border-voxel surfaces lying
/// within `tolerance_mm` of the other surface.
pub fn nsd(pred: &RegionMask, gt: &RegionMask, tolerance_mm: f64) -> Result<f64> {
    pred.grid().ensure_same_lattice(gt.grid())?;
    validate_tolerance(tolerance_mm)?;
    let sp = surface_voxels(pred);
    let sg = surface_voxels(gt);
    let (np, ng) = (voxel_count(&sp), voxel_count(&sg));
    if np + ng == 0 {
        return Ok(1.0);
    }
    if np == 0 || ng == 0 {
        return Ok(0.0);
    }
    // Every source voxel lies inside the joint box, so distances computed on
    // the crop equal those on the full grid.
    let (lo, hi) = bounding_box(&[&sp, &sg]).expect("surfaces are nonempty");
    let sp = crop(&sp, lo, hi);
    let sg = crop(&sg, lo, hi);
    let within = |from: &RegionMask, to: &RegionMask| -> usize {
        let mut sq: Vec<f64> = to
            .bits()
            .iter()
            .map(|&b| if b { 0.0 } else { f64::INFINITY })
            .collect();
        squared_edt_in_place(&mut sq, to.grid());
        from.bits()
            .iter()
            .zip(&sq)
            .filter(|(&b, &d)| b && d.sqrt() <= tolerance_mm + NSD_SLACK_MM)
            .count()
    };
    let hits = within(&sp, &sg) + within(&sg, &sp);
    Ok(hits as f64 / (np + ng) as f64)
}

/// Per-lesion score used by [`lesionwise`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseMetric {
    Dice,
    Nsd { tolerance_mm: f64 },
}

impl BaseMetric {
    pub fn score(&self, pred: &RegionMask, gt: &RegionMask) -> Result<f64> {
        match *self {
            BaseMetric::Dice => dice(pred, gt),
            BaseMetric::Nsd { tolerance_mm } => nsd(pred, gt, tolerance_mm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LesionwiseParams {
    pub connectivity: Connectivity,
    pub dilation_radius_vox: usize,
    pub min_lesion_size_vox: usize,
}

impl Default for LesionwiseParams {
    fn default() -> Self {
        Self {
            connectivity: Connectivity::TwentySix,
            dilation_radius_vox: 3,
            min_lesion_size_vox: 0,
        }
    }
}

/// Lesion-wise score: each ground-truth lesion is scored against the union of
/// predicted components touching its dilation, and each unmatched predicted
/// component counts as a false positive scoring 0.
pub fn lesionwise(
    pred: &RegionMask,
    gt: &RegionMask,
    base: BaseMetric,
    params: &LesionwiseParams,
) -> Result<f64> {
    pred.grid().ensure_same_lattice(gt.grid())?;
    if let BaseMetric::Nsd { tolerance_mm } = base {
        validate_tolerance(tolerance_mm)?;
    }
    let grid = *gt.grid();
    let [nx, ny, nz] = grid.shape();
    let tag = gt.tag();

    let gt_cc = connected_components(gt, params.connectivity);
    let pred_cc = connected_components(pred, params.connectivity);
    let keep = |size: usize| size >= params.min_lesion_size_vox;
    let gt_lesions: Vec<Vec<usize>> = gt_cc
        .members()
        .into_iter()
        .filter(|m| keep(m.len()))
        .collect();
    let pred_members = pred_cc.members();
    let pred_kept: Vec<bool> = pred_cc.sizes().iter().map(|&n| keep(n)).collect();

    let r = params.dilation_radius_vox;
    let mut matched = vec![false; pred_members.len()];
    let mut total = 0.0;
    for lesion in &gt_lesions {
        let lesion_mask = RegionMask::from_parts(grid, index_bits(grid.len(), lesion), tag);
        let (lo, hi) = bounding_box(&[&lesion_mask]).expect("lesion is nonempty");
        let lo_d = [
            lo[0].saturating_sub(r),
            lo[1].saturating_sub(r),
            lo[2].saturating_sub(r),
        ];
        let hi_d = [
            (hi[0] + r).min(nx - 1),
            (hi[1] + r).min(ny - 1),
            (hi[2] + r).min(nz - 1),
        ];
        let dilated = dilate_mask(&crop(&lesion_mask, lo_d, hi_d), r);
        let sub = *dilated.grid();

        let mut hits = BTreeSet::new();
        for (j, _) in dilated.bits().iter().enumerate().filter(|(_, &b)| b) {
            let [x, y, z] = sub.coords(j);
            let id = pred_cc.ids()[grid.index(x + lo_d[0], y + lo_d[1], z + lo_d[2])];
            if id > 0 && pred_kept[id as usize - 1] {
                hits.insert(id as usize - 1);
            }
        }
        let mut union = vec![false; grid.len()];
        for &c in &hits {
            matched[c] = true;
            for &i in &pred_members[c] {
                union[i] = true;
            }
        }
        let union = RegionMask::from_parts(grid, union, tag);
        total += base.score(&union, &lesion_mask)?;
    }
    let false_positives = (0..pred_members.len())
        .filter(|&c| pred_kept[c] && !matched[c])
        .count();
    let denominator = gt_lesions.len() + false_positives;
    Ok(if denominator == 0 {
        1.0
    } else {
        total / denominator as f64
    })
}

fn index_bits(len: usize, indices: &[usize]) -> Vec<bool> {
    let mut bits = vec![false; len];
    for &i in indices {
        bits[i] = true;
    }
    bits
}

/// The two terms of [`soft_dice_ce_loss`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    /// Mean over voxels of `-ln p(true class)`.
    pub cross_entropy: f64,
    /// Mean over labels 1..=3 of `1 - soft Dice`.
    pub dice: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.cross_entropy + self.dice
    }
}

/// Cross-entropy plus soft Dice over the three foreground classes.
///
/// `probs[c]` holds the probability of label `c` at each voxel.
pub fn soft_dice_ce_loss(probs: &[Volume3D; 4], gt: &LabelMap) -> Result<f64> {
    soft_dice_ce_terms(probs, gt).map(|t| t.total())
}

pub fn soft_dice_ce_terms(probs: &[Volume3D; 4], gt: &LabelMap) -> Result<LossTerms> {
    let grid = gt.grid();
    for p in probs {
        p.grid().ensure_same_lattice(grid)?;
    }
    let n = grid.len();
    let mut ce = 0.0;
    let mut intersect = [0.0f64; 4];
    let mut prob_sum = [0.0f64; 4];
    let mut gt_sum = [0.0f64; 4];
    for i in 0..n {
        let s: f64 = probs.iter().map(|p| p.voxels()[i]).sum();
        if (s - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "class probabilities at voxel {i} sum to {s}"
            )));
        }
        let label = gt.labels()[i] as usize;
        ce -= probs[label].voxels()[i].clamp(CE_PROB_FLOOR, 1.0).ln();
        for c in 1..4 {
            let p = probs[c].voxels()[i];
            prob_sum[c] += p;
            if c == label {
                intersect[c] += p;
                gt_sum[c] += 1.0;
            }
        }
    }
    ce /= n as f64;
    let dice_loss = (1..4)
        .map(|c| 1.0 - (2.0 * intersect[c] + DICE_SMOOTH) / (prob_sum[c] + gt_sum[c] + DICE_SMOOTH))
        .sum::<f64>()
        / 3.0;
    Ok(LossTerms {
        cross_entropy: ce,
        dice: dice_loss,
    })
}

/// Score for one NSD tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceScore {
    pub tolerance_mm: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionScores {
    pub dice: f64,
    pub nsd: Vec<ToleranceScore>,
    pub lw_dice: f64,
    pub lw_nsd: Vec<ToleranceScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseScores {
    pub case_id: String,
    pub regions: BTreeMap<RegionTag, RegionScores>,
}

impl CaseScores {
    pub fn region(&self, tag: RegionTag) -> &RegionScores {
        &self.regions[&tag]
    }

    pub fn tolerances(&self) -> Vec<f64> {
        self.regions
            .values()
            .next()
            .map(|r| r.nsd.iter().map(|t| t.tolerance_mm).collect())
            .unwrap_or_default()
    }
}

/// Sorted, deduplicated tolerances; rejects empty or nonpositive input.
pub fn normalize_tolerances(tolerances: &[f64]) -> Result<Vec<f64>> {
    if tolerances.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one NSD tolerance is required".into(),
        ));
    }
    for &t in tolerances {
        validate_tolerance(t)?;
    }
    let mut out = tolerances.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

pub fn evaluate_case(
    case_id: &str,
    pred: &LabelMap,
    gt: &LabelMap,
    tolerances: &[f64],
    params: &LesionwiseParams,
) -> Result<CaseScores> {
    pred.grid().ensure_same_lattice(gt.grid())?;
    let tolerances = normalize_tolerances(tolerances)?;
    let pred_regions = compose_all(pred);
    let gt_regions = compose_all(gt);
    let mut regions = BTreeMap::new();
    for ((tag, p), g) in RegionTag::ALL.iter().zip(&pred_regions).zip(&gt_regions) {
        let per_tol = |lw: bool| -> Result<Vec<ToleranceScore>> {
            tolerances
                .iter()
                .map(|&t| {
                    let score = if lw {
                        lesionwise(p, g, BaseMetric::Nsd { tolerance_mm: t }, params)?
                    } else {
                        nsd(p, g, t)?
                    };
                    Ok(ToleranceScore {
                        tolerance_mm: t,
                        score,
                    })
                })
                .collect()
        };
        regions.insert(
            *tag,
            RegionScores {
                dice: dice(p, g)?,
                nsd: per_tol(false)?,
                lw_dice: lesionwise(p, g, BaseMetric::Dice, params)?,
                lw_nsd: per_tol(true)?,
            },
        );
    }
    Ok(CaseScores {
        case_id: case_id.to_string(),
        regions,
    })
}

/// Which per-case score an aggregate row summarizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    Dice,
    LwDice,
    Nsd { tolerance_mm: f64 },
    LwNsd { tolerance_mm: f64 },
}

impl MetricKind {
    pub fn is_lesionwise(&self) -> bool {
        matches!(self, MetricKind::LwDice | MetricKind::LwNsd { .. })
    }

    /// Row label as printed in reports, e.g. `LW NSD 0.5 mm`.
    pub fn label(&self) -> String {
        match self {
            MetricKind::Dice => "Dice coefficient".into(),
            MetricKind::LwDice => "LW Dice".into(),
            MetricKind::Nsd { tolerance_mm } => {
                format!("NSD {} mm", format_tolerance(*tolerance_mm))
            }
            MetricKind::LwNsd { tolerance_mm } => {
                format!("LW NSD {} mm", format_tolerance(*tolerance_mm))
            }
        }
    }

    pub fn extract(&self, scores: &RegionScores) -> f64 {
        let at = |list: &[ToleranceScore], t: f64| {
            list.iter()
                .find(|s| s.tolerance_mm == t)
                .map(|s| s.score)
                .expect("tolerance sets validated before extraction")
        };
        match *self {
            MetricKind::Dice => scores.dice,
            MetricKind::LwDice => scores.lw_dice,
            MetricKind::Nsd { tolerance_mm } => at(&scores.nsd, tolerance_mm),
            MetricKind::LwNsd { tolerance_mm } => at(&scores.lw_nsd, tolerance_mm),
        }
    }

    /// Report row order: Dice, LW Dice, NSD per tolerance, LW NSD per tolerance.
    pub fn table_rows(tolerances: &[f64]) -> Vec<MetricKind> {
        let mut rows = vec![MetricKind::Dice, MetricKind::LwDice];
        rows.extend(
            tolerances
                .iter()
                .map(|&t| MetricKind::Nsd { tolerance_mm: t }),
        );
        rows.extend(
            tolerances
                .iter()
                .map(|&t| MetricKind::LwNsd { tolerance_mm: t }),
        );
        rows
    }
}

/// `1.0` prints as "1.0", `0.5` as "0.5", `2.25` as "2.25".
pub fn format_tolerance(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{t:.1}")
    } else {
        format!("{t}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (divisor n - 1); 0 for a single case.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub metric: MetricKind,
    pub regions: BTreeMap<RegionTag, MeanStd>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub case_count: usize,
    pub tolerances: Vec<f64>,
    pub rows: Vec<AggregateRow>,
}

impl AggregateReport {
    pub fn row(&self, metric: MetricKind) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

/// Summation in sorted order, so the result does not depend on case order.
fn order_free_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

fn mean_std(mut values: Vec<f64>) -> MeanStd {
    let n = values.len() as f64;
    let mean = order_free_sum(&mut values) / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        let mut sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        (order_free_sum(&mut sq) / (n - 1.0)).sqrt()
    };
    MeanStd { mean, std }
}

pub fn aggregate_cases(scores: &[CaseScores]) -> Result<AggregateReport> {
    let first = scores
        .first()
        .ok_or_else(|| Error::InvalidArgument("cannot aggregate an empty case list".into()))?;
    let tolerances = first.tolerances();
    for case in scores {
        for tag in RegionTag::ALL {
            let r = case.regions.get(&tag).ok_or_else(|| {
                Error::InvalidArgument(format!("case {} lacks region {tag}", case.case_id))
            })?;
            let same = |list: &[ToleranceScore]| {
                list.len() == tolerances.len()
                    && list
                        .iter()
                        .zip(&tolerances)
                        .all(|(s, &t)| s.tolerance_mm == t)
            };
            if !same(&r.nsd) || !same(&r.lw_nsd) {
                return Err(Error::InvalidArgument(format!(
                    "case {} uses a different tolerance set than case {}",
                    case.case_id, first.case_id
                )));
            }
        }
    }
    let rows = MetricKind::table_rows(&tolerances)
        .into_iter()
        .map(|metric| AggregateRow {
            metric,
            regions: RegionTag::ALL
                .iter()
                .map(|&tag| {
                    let values = scores
                        .iter()
                        .map(|c| metric.extract(c.region(tag)))
                        .collect();
                    (tag, mean_std(values))
                })
                .collect(),
        })
        .collect();
    Ok(AggregateReport {
        case_count: scores.len(),
        tolerances,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Grid;

    fn grid(shape: [usize; 3]) -> Grid {
        Grid::new(shape, [1.0; 3]).unwrap()
    }

    fn cube(g: Grid, start: [usize; 3], side: usize) -> RegionMask {
        RegionMask::from_fn(g, RegionTag::Wt, |x, y, z| {
            [x, y, z]
                .iter()
                .zip(start)
                .all(|(&c, s)| c >= s && c < s + side)
        })
    }

    #[test]
    fn dice_conventions_and_shifted_cube() {
        let g = grid([8, 6, 6]);
        let a = cube(g, [0, 1, 1], 4);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &cube(g, [4, 1, 1], 4)).unwrap(), 0.0);
        assert_eq!(dice(&a, &cube(g, [2, 1, 1], 4)).unwrap(), 0.5);
        let empty = RegionMask::empty(g, RegionTag::Wt);
        assert_eq!(dice(&empty, &empty).unwrap(), 1.0);
        assert_eq!(dice(&empty, &a).unwrap(), 0.0);
        assert!(dice(&a, &RegionMask::empty(grid([2, 2, 2]), RegionTag::Wt)).is_err());
    }

    #[test]
    fn nsd_threshold_straddle() {
        let g = grid([5, 1, 1]);
        let p = RegionMask::from_fn(g, RegionTag::Et, |x, _, _| x == 0);
        let q = RegionMask::from_fn(g, RegionTag::Et, |x, _, _| x == 3);
        assert_eq!(nsd(&p, &q, 1.0).unwrap(), 0.0);
        assert_eq!(nsd(&p, &q, 3.0).unwrap(), 1.0);
        assert_eq!(nsd(&p, &p, 0.5).unwrap(), 1.0);
        assert!(nsd(&p, &q, 0.0).is_err());
        assert!(nsd(&p, &q, -1.0).is_err());
        let empty = RegionMask::empty(g, RegionTag::Et);
        assert_eq!(nsd(&empty, &empty, 1.0).unwrap(), 1.0);
        assert_eq!(nsd(&empty, &p, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn lesionwise_with_spurious_component() {
        let g = grid([12, 6, 6]);
        let gt = cube(g, [0, 0, 0], 3);
        let pred = gt.union(&cube(g, [10, 4, 4], 2)).unwrap();
        let params = LesionwiseParams::default();
        assert_eq!(
            lesionwise(&gt, &gt, BaseMetric::Dice, &params).unwrap(),
            1.0
        );
        assert_eq!(
            lesionwise(&pred, &gt, BaseMetric::Dice, &params).unwrap(),
            0.5
        );
        let empty = RegionMask::empty(g, RegionTag::Wt);
        assert_eq!(
            lesionwise(&empty, &gt, BaseMetric::Dice, &params).unwrap(),
            0.0
        );
        assert_eq!(
            lesionwise(&empty, &empty, BaseMetric::Dice, &params).unwrap(),
            1.0
        );
        assert_eq!(
            lesionwise(&gt, &empty, BaseMetric::Dice, &params).unwrap(),
            0.0
        );
    }

    #[test]
    fn lesionwise_min_size_filters_both_sides() {
        let g = grid([12, 6, 6]);
        let gt = cube(g, [0, 0, 0], 3);
        let pred = gt.union(&cube(g, [10, 4, 4], 1)).unwrap();
        let params = LesionwiseParams {
            min_lesion_size_vox: 2,
            ..Default::default()
        };
        assert_eq!(
            lesionwise(&pred, &gt, BaseMetric::Dice, &params).unwrap(),
            1.0
        );
    }

    #[test]
    fn defaults() {
        let p = LesionwiseParams::default();
        assert_eq!(
            (
                u8::from(p.connectivity),
                p.dilation_radius_vox,
                p.min_lesion_size_vox
            ),
            (26, 3, 0)
        );
    }

    fn uniform_probs(g: Grid) -> [Volume3D; 4] {
        std::array::from_fn(|_| Volume3D::filled(g, 0.25).unwrap())
    }

    #[test]
    fn loss_closed_forms() {
        let g = grid([3, 2, 2]);
        let labels = LabelMap::new(g, (0..12).map(|i| (i % 4) as u8).collect()).unwrap();
        let one_hot: [Volume3D; 4] = std::array::from_fn(|c| {
            Volume3D::new(
                g,
                labels
                    .labels()
                    .iter()
                    .map(|&l| (l as usize == c) as u8 as f64)
                    .collect(),
            )
            .unwrap()
        });
        assert!(soft_dice_ce_loss(&one_hot, &labels).unwrap() < 1e-4);

        let probs = uniform_probs(g);
        let background = LabelMap::background(g);
        // CE alone: take the background-only map where Dice terms are known.
        let terms = soft_dice_ce_terms(&probs, &background).unwrap();
        assert!((terms.cross_entropy - 4f64.ln()).abs() < 1e-12);
        let dice_part = 1.0 - DICE_SMOOTH / (0.25 * 12.0 + DICE_SMOOTH);
        assert!((terms.dice - dice_part).abs() < 1e-12);
        let mixed = soft_dice_ce_terms(&probs, &labels).unwrap();
        assert!((mixed.cross_entropy - 1.3862943611198906).abs() < 1e-12);

        let bg_certain: [Volume3D; 4] =
            std::array::from_fn(|c| Volume3D::filled(g, if c == 0 { 1.0 } else { 0.0 }).unwrap());
        assert_eq!(soft_dice_ce_loss(&bg_certain, &background).unwrap(), 0.0);
    }

    #[test]
    fn loss_rejects_unnormalized_probabilities() {
        let g = grid([2, 1, 1]);
        let mut probs = uniform_probs(g);
        probs[0] = Volume3D::filled(g, 0.3).unwrap();
        assert!(soft_dice_ce_loss(&probs, &LabelMap::background(g)).is_err());
    }

    fn case(id: &str, lw_dice: f64) -> CaseScores {
        let tol = |s| {
            DEFAULT_TOLERANCES_MM
                .iter()
                .map(|&t| ToleranceScore {
                    tolerance_mm: t,
                    score: s,
                })
                .collect()
        };
        CaseScores {
            case_id: id.into(),
            regions: RegionTag::ALL
                .iter()
                .map(|&t| {
                    (
                        t,
                        RegionScores {
                            dice: 1.0,
                            nsd: tol(1.0),
                            lw_dice,
                            lw_nsd: tol(0.5),
                        },
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn aggregate_two_point_mean_std() {
        let agg = aggregate_cases(&[case("a", 0.8), case("b", 0.9)]).unwrap();
        let lw = &agg.row(MetricKind::LwDice).unwrap().regions[&RegionTag::Et];
        assert!((lw.mean - 0.85).abs() < 1e-12);
        assert!((lw.std - 0.0707107).abs() < 1e-6);
        let single = aggregate_cases(&[case("a", 0.8)]).unwrap();
        assert_eq!(
            single.row(MetricKind::LwDice).unwrap().regions[&RegionTag::Tc],
            MeanStd {
                mean: 0.8,
                std: 0.0
            }
        );
        let labels: Vec<String> = agg.rows.iter().map(|r| r.metric.label()).collect();
        assert_eq!(
            labels,
            [
                "Dice coefficient",
                "LW Dice",
                "NSD 0.5 mm",
                "NSD 1.0 mm",
                "LW NSD 0.5 mm",
                "LW NSD 1.0 mm"
            ]
        );
    }

    #[test]
    fn aggregate_rejects_empty_and_mixed_tolerances() {
        assert!(aggregate_cases(&[]).is_err());
        let mut odd = case("b", 0.5);
        for r in odd.regions.values_mut() {
            r.nsd[0].tolerance_mm = 2.0;
        }
        assert!(aggregate_cases(&[case("a", 0.5), odd]).is_err());
    }

    #[test]
    fn aggregate_is_order_independent() {
        let cases = vec![
            case("a", 0.1),
            case("b", 0.7),
            case("c", 0.333),
            case("d", 0.9),
        ];
        let mut rev = cases.clone();
        rev.reverse();
        assert_eq!(
            aggregate_cases(&cases).unwrap(),
            aggregate_cases(&rev).unwrap()
        );
    }

    #[test]
    fn tolerance_formatting() {
        assert_eq!(format_tolerance(0.5), "0.5");
        assert_eq!(format_tolerance(1.0), "1.0");
        assert_eq!(format_tolerance(2.25), "2.25");
        assert_eq!(
            normalize_tolerances(&[1.0, 0.5, 1.0]).unwrap(),
            vec![0.5, 1.0]
        );
        assert!(normalize_tolerances(&[]).is_err());
    }
}
