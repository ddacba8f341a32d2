//! Batch evaluation over case directories and the JSON/CSV report formats.
//!
//! Scores are rounded to 6 significant digits per case before aggregation, so
//! the aggregate in an emitted report can be recomputed exactly from the case
//! rows printed alongside it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    aggregate_cases, evaluate_case, format_tolerance, normalize_tolerances, AggregateReport,
    CaseScores, LesionwiseParams, ToleranceScore, DEFAULT_TOLERANCES_MM,
};
use crate::nifti::{has_nifti_extension, read_labels, strip_nifti_extension};
use crate::regions::hybrid_fuse;
use crate::volume::RegionTag;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SIGNIFICANT_DIGITS: usize = 6;

/// Round to [`SIGNIFICANT_DIGITS`] significant decimal digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// One case to evaluate. Two prediction paths mean "fuse, then evaluate":
/// the first is the extended-run model, the second the baseline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseManifest {
    pub case_id: String,
    pub gt_path: PathBuf,
    pub pred_paths: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!(
                "report format must be json or csv, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOptions {
    pub tolerances: Vec<f64>,
    pub lesionwise: LesionwiseParams,
    /// Also report the standard deviation for per-case (non lesion-wise) rows.
    pub std_all_rows: bool,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self {
            tolerances: DEFAULT_TOLERANCES_MM.to_vec(),
            lesionwise: LesionwiseParams::default(),
            std_all_rows: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tolerances_mm: Vec<f64>,
    pub lesionwise: LesionwiseParams,
    pub std_all_rows: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCell {
    pub mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    /// `mean` or `mean±std`, six decimals.
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRowOut {
    pub metric: String,
    pub regions: BTreeMap<RegionTag, AggregateCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSection {
    pub case_count: usize,
    pub rows: Vec<AggregateRowOut>,
}

impl AggregateSection {
    pub fn from_report(report: &AggregateReport, std_all_rows: bool) -> Self {
        let rows = report
            .rows
            .iter()
            .map(|row| AggregateRowOut {
                metric: row.metric.label(),
                regions: row
                    .regions
                    .iter()
                    .map(|(&tag, stat)| {
                        let mean = round_sig(stat.mean);
                        let std = (std_all_rows || row.metric.is_lesionwise())
                            .then(|| round_sig(stat.std));
                        let display = match std {
                            Some(s) => format!("{mean:.6}±{s:.6}"),
                            None => format!("{mean:.6}"),
                        };
                        (tag, AggregateCell { mean, std, display })
                    })
                    .collect(),
            })
            .collect();
        Self {
            case_count: report.case_count,
            rows,
        }
    }
}

/// A complete evaluation run: configuration, per-case scores and aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: ToolInfo,
    pub config: RunConfig,
    pub cases: Vec<CaseScores>,
    pub aggregate: AggregateSection,
}

fn round_case(mut case: CaseScores) -> CaseScores {
    let round_list = |list: &mut Vec<ToleranceScore>| {
        for s in list {
            s.score = round_sig(s.score);
        }
    };
    for r in case.regions.values_mut() {
        r.dice = round_sig(r.dice);
        r.lw_dice = round_sig(r.lw_dice);
        round_list(&mut r.nsd);
        round_list(&mut r.lw_nsd);
    }
    case
}

impl ReportDocument {
    /// Sorts cases by id, rounds their scores, and aggregates the rounded values.
    pub fn new(cases: Vec<CaseScores>, options: &EvaluateOptions) -> Result<Self> {
        let mut cases: Vec<CaseScores> = cases.into_iter().map(round_case).collect();
        cases.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        let ids: BTreeSet<&str> = cases.iter().map(|c| c.case_id.as_str()).collect();
        if ids.len() != cases.len() {
            return Err(Error::InvalidArgument(
                "duplicate case ids in report".into(),
            ));
        }
        let aggregate = aggregate_cases(&cases)?;
        Ok(Self {
            tool: ToolInfo {
                name: TOOL_NAME.into(),
                version: TOOL_VERSION.into(),
            },
            config: RunConfig {
                tolerances_mm: aggregate.tolerances.clone(),
                lesionwise: options.lesionwise,
                std_all_rows: options.std_all_rows,
            },
            aggregate: AggregateSection::from_report(&aggregate, options.std_all_rows),
            cases,
        })
    }

    /// Aggregate recomputed from the embedded case rows.
    pub fn recompute_aggregate(&self) -> Result<AggregateSection> {
        let report = aggregate_cases(&self.cases)?;
        Ok(AggregateSection::from_report(
            &report,
            self.config.std_all_rows,
        ))
    }
}

pub fn emit_report(doc: &ReportDocument, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(doc).expect("report serializes");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => emit_csv(doc).into_bytes(),
    }
}

pub fn parse_report_json(bytes: &[u8]) -> Result<ReportDocument> {
    Ok(serde_json::from_slice(bytes)?)
}

fn emit_csv(doc: &ReportDocument) -> String {
    let tols = &doc.config.tolerances_mm;
    let mut out = String::from("case_id,region,dice");
    for t in tols {
        write!(out, ",nsd_{}", format_tolerance(*t)).unwrap();
    }
    out.push_str(",lw_dice");
    for t in tols {
        write!(out, ",lw_nsd_{}", format_tolerance(*t)).unwrap();
    }
    out.push('\n');
    for case in &doc.cases {
        for (tag, r) in &case.regions {
            write!(out, "{},{tag},{:.6}", csv_field(&case.case_id), r.dice).unwrap();
            for s in &r.nsd {
                write!(out, ",{:.6}", s.score).unwrap();
            }
            write!(out, ",{:.6}", r.lw_dice).unwrap();
            for s in &r.lw_nsd {
                write!(out, ",{:.6}", s.score).unwrap();
            }
            out.push('\n');
        }
    }
    out.push('\n');
    out.push_str("metric");
    for tag in RegionTag::ALL {
        write!(out, ",{tag}").unwrap();
    }
    out.push('\n');
    for row in &doc.aggregate.rows {
        out.push_str(&row.metric);
        for cell in row.regions.values() {
            write!(out, ",{}", cell.display).unwrap();
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Why a case produced no scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseFailure {
    pub case_id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub report: ReportDocument,
    pub failures: Vec<CaseFailure>,
}

impl EvaluateOutcome {
    /// Success means every paired case was scored.
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

fn nifti_stems(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::from(e).in_file(dir))?;
    for entry in entries {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if path.is_file() && has_nifti_extension(name) {
            let stem = strip_nifti_extension(name).to_string();
            if let Some(prev) = out.insert(stem.clone(), path.clone()) {
                return Err(Error::InvalidArgument(format!(
                    "case {stem} appears twice in {}: {} and {}",
                    dir.display(),
                    prev.display(),
                    path.display()
                )));
            }
        }
    }
    Ok(out)
}

/// Pair NIfTI files across directories by file stem. Returns the paired
/// cases and a failure entry for every stem missing from some directory.
pub fn pair_directories(
    pred_dirs: &[&Path],
    gt_dir: &Path,
) -> Result<(Vec<CaseManifest>, Vec<CaseFailure>)> {
    let gt = nifti_stems(gt_dir)?;
    let preds: Vec<BTreeMap<String, PathBuf>> = pred_dirs
        .iter()
        .map(|d| nifti_stems(d))
        .collect::<Result<_>>()?;
    let mut all: BTreeSet<&String> = gt.keys().collect();
    for p in &preds {
        all.extend(p.keys());
    }
    let mut cases = Vec::new();
    let mut failures = Vec::new();
    for id in all {
        let mut missing = Vec::new();
        if !gt.contains_key(id) {
            missing.push(gt_dir.display().to_string());
        }
        for (p, dir) in preds.iter().zip(pred_dirs) {
            if !p.contains_key(id) {
                missing.push(dir.display().to_string());
            }
        }
        if missing.is_empty() {
            cases.push(CaseManifest {
                case_id: id.clone(),
                gt_path: gt[id].clone(),
                pred_paths: preds.iter().map(|p| p[id].clone()).collect(),
            });
        } else {
            failures.push(CaseFailure {
                case_id: id.clone(),
                reason: format!("unpaired: no file in {}", missing.join(", ")),
            });
        }
    }
    Ok((cases, failures))
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    case_id: String,
    gt: PathBuf,
    pred: PathBuf,
    #[serde(default)]
    pred_b: Option<PathBuf>,
}

/// CSV manifest with header `case_id,gt,pred[,pred_b]`; relative paths are
/// resolved against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<CaseManifest>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for row in rdr.deserialize() {
        let row: ManifestRow = row.map_err(|e| Error::from(e).in_file(path))?;
        if !seen.insert(row.case_id.clone()) {
            return Err(Error::InvalidArgument(format!(
                "case id {} listed twice in {}",
                row.case_id,
                path.display()
            )));
        }
        let mut pred_paths = vec![base.join(row.pred)];
        pred_paths.extend(
            row.pred_b
                .filter(|p| !p.as_os_str().is_empty())
                .map(|p| base.join(p)),
        );
        out.push(CaseManifest {
            case_id: row.case_id,
            gt_path: base.join(row.gt),
            pred_paths,
        });
    }
    Ok(out)
}

fn evaluate_one(case: &CaseManifest, options: &EvaluateOptions) -> Result<CaseScores> {
    let (_, gt) = read_labels(&case.gt_path)?;
    let pred = match case.pred_paths.as_slice() {
        [single] => read_labels(single)?.1,
        [a, b] => hybrid_fuse(&read_labels(a)?.1, &read_labels(b)?.1)?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "expected one or two predictions, got {}",
                other.len()
            )))
        }
    };
    evaluate_case(
        &case.case_id,
        &pred,
        &gt,
        &options.tolerances,
        &options.lesionwise,
    )
}

/// Evaluate cases in parallel; results are ordered by case id regardless of
/// scheduling.
pub fn evaluate_manifest(
    cases: &[CaseManifest],
    options: &EvaluateOptions,
) -> Result<EvaluateOutcome> {
    let options = EvaluateOptions {
        tolerances: normalize_tolerances(&options.tolerances)?,
        ..options.clone()
    };
    if cases.is_empty() {
        return Err(Error::InvalidArgument("no cases to evaluate".into()));
    }
    let ids: BTreeSet<&str> = cases.iter().map(|c| c.case_id.as_str()).collect();
    if ids.len() != cases.len() {
        return Err(Error::InvalidArgument("case ids must be unique".into()));
    }
    let results: Vec<(String, Result<CaseScores>)> = cases
        .par_iter()
        .map(|c| (c.case_id.clone(), evaluate_one(c, &options)))
        .collect();
    let mut scores = Vec::new();
    let mut failures = Vec::new();
    for (case_id, r) in results {
        match r {
            Ok(s) => scores.push(s),
            Err(e) => failures.push(CaseFailure {
                case_id,
                reason: e.to_string(),
            }),
        }
    }
    if scores.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no case could be evaluated ({} failed)",
            failures.len()
        )));
    }
    failures.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(EvaluateOutcome {
        report: ReportDocument::new(scores, &options)?,
        failures,
    })
}

/// Where the cases of an evaluation run come from.
#[derive(Debug, Clone)]
pub enum CaseSource {
    /// Pair files by stem; a second prediction directory requests fusion.
    Directories {
        pred: PathBuf,
        pred_b: Option<PathBuf>,
        gt: PathBuf,
    },
    Manifest(PathBuf),
}

/// Pair, evaluate and (if anything was scored) write the report to `out`.
/// Unpaired and failed cases are listed in the outcome.
pub fn run_evaluate(
    source: &CaseSource,
    options: &EvaluateOptions,
    out: Option<&Path>,
    format: ReportFormat,
) -> Result<EvaluateOutcome> {
    let (cases, mut unpaired) = match source {
        CaseSource::Directories { pred, pred_b, gt } => {
            let mut dirs = vec![pred.as_path()];
            dirs.extend(pred_b.as_deref());
            pair_directories(&dirs, gt)?
        }
        CaseSource::Manifest(path) => (read_manifest(path)?, Vec::new()),
    };
    if cases.is_empty() {
        return Err(Error::InvalidArgument(
            "no case ids are shared between the prediction and ground-truth inputs".into(),
        ));
    }
    let mut outcome = evaluate_manifest(&cases, options)?;
    if let Some(out) = out {
        std::fs::write(out, emit_report(&outcome.report, format))
            .map_err(|e| Error::from(e).in_file(out))?;
    }
    outcome.failures.append(&mut unpaired);
    outcome.failures.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(outcome)
}
