mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use gliomakit::nifti::{read_labels, read_volume, write_nifti};
use gliomakit::report::parse_report_json;
use gliomakit::{Grid, LabelMap, RegionTag, Volume3D};

fn gliomakit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gliomakit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_labels(path: &Path, labels: &LabelMap) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(
        path,
        write_nifti(labels, path.extension().is_some_and(|e| e == "gz")),
    )
    .unwrap();
}

#[test]
fn fuse_of_identical_inputs_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new([5, 4, 3], [1.0, 1.0, 2.0]).unwrap();
    let labels = random_labels(&mut rng(1), g);
    let a = dir.path().join("a.nii.gz");
    let b = dir.path().join("b.nii");
    write_labels(&a, &labels);
    write_labels(&b, &labels);
    let out = dir.path().join("fused.nii.gz");
    let o = gliomakit(&[
        "fuse",
        "--model-a",
        s(&a),
        "--model-b",
        s(&b),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_labels(&out).unwrap().1, labels);
}

#[test]
fn fuse_rejects_mismatched_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.nii");
    let b = dir.path().join("b.nii");
    write_labels(
        &a,
        &LabelMap::background(Grid::new([4, 4, 4], [1.0; 3]).unwrap()),
    );
    write_labels(
        &b,
        &LabelMap::background(Grid::new([4, 4, 5], [1.0; 3]).unwrap()),
    );
    let out = dir.path().join("fused.nii");
    let o = gliomakit(&[
        "fuse",
        "--model-a",
        s(&a),
        "--model-b",
        s(&b),
        "--out",
        s(&out),
    ]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("4x4x4") && err.contains("4x4x5"), "{err}");
    assert!(!out.exists());
}

#[test]
fn self_evaluation_gives_perfect_dice_and_nsd() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new([6, 6, 6], [1.0; 3]).unwrap();
    for (k, id) in ["c1", "c2"].iter().enumerate() {
        let labels = random_labels(&mut rng(k as u64 + 5), g);
        write_labels(&dir.path().join("gt").join(format!("{id}.nii.gz")), &labels);
        write_labels(&dir.path().join("pred").join(format!("{id}.nii")), &labels);
    }
    let report = dir.path().join("r.json");
    let o = gliomakit(&[
        "evaluate",
        "--pred",
        s(&dir.path().join("pred")),
        "--gt",
        s(&dir.path().join("gt")),
        "--out",
        s(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = parse_report_json(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(doc.cases.len(), 2);
    for case in &doc.cases {
        for tag in RegionTag::ALL {
            let r = case.region(tag);
            assert_eq!(r.dice, 1.0);
            assert!(r.nsd.iter().all(|t| t.score == 1.0));
        }
    }
}

#[test]
fn disjoint_directories_fail_without_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new([3, 3, 3], [1.0; 3]).unwrap();
    write_labels(&dir.path().join("gt/a.nii"), &LabelMap::background(g));
    write_labels(&dir.path().join("pred/b.nii"), &LabelMap::background(g));
    let report = dir.path().join("r.json");
    let o = gliomakit(&[
        "evaluate",
        "--pred",
        s(&dir.path().join("pred")),
        "--gt",
        s(&dir.path().join("gt")),
        "--out",
        s(&report),
    ]);
    assert!(!o.status.success());
    assert!(!report.exists());
}

#[test]
fn partial_pairing_reports_and_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new([3, 3, 3], [1.0; 3]).unwrap();
    write_labels(&dir.path().join("gt/a.nii"), &LabelMap::background(g));
    write_labels(&dir.path().join("pred/a.nii"), &LabelMap::background(g));
    write_labels(&dir.path().join("gt/orphan.nii"), &LabelMap::background(g));
    let report = dir.path().join("r.csv");
    let o = gliomakit(&[
        "evaluate",
        "--pred",
        s(&dir.path().join("pred")),
        "--gt",
        s(&dir.path().join("gt")),
        "--format",
        "csv",
        "--out",
        s(&report),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("orphan"));
    let csv = std::fs::read_to_string(&report).unwrap();
    assert!(csv.starts_with("case_id,region,dice,nsd_0.5,nsd_1.0,lw_dice,lw_nsd_0.5,lw_nsd_1.0\n"));
    assert!(csv.contains("\na,WT,1.000000,"));
}

#[test]
fn manifest_with_fusion() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new([4, 4, 4], [1.0; 3]).unwrap();
    let gt = random_labels(&mut rng(40), g);
    write_labels(&dir.path().join("gt.nii"), &gt);
    write_labels(&dir.path().join("a.nii"), &gt);
    write_labels(&dir.path().join("b.nii"), &LabelMap::background(g));
    std::fs::write(
        dir.path().join("cases.csv"),
        "case_id,gt,pred,pred_b\nx,gt.nii,a.nii,b.nii\n",
    )
    .unwrap();
    let o = gliomakit(&["evaluate", "--manifest", s(&dir.path().join("cases.csv"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = parse_report_json(&o.stdout).unwrap();
    assert_eq!(doc.cases[0].region(RegionTag::Et).dice, 1.0);
    assert_eq!(doc.cases[0].region(RegionTag::Tc).dice, 1.0);
}

#[test]
fn preprocess_writes_resampled_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new([4, 4, 2], [1.0, 1.0, 2.0]).unwrap();
    let mut channels = Vec::new();
    for k in 0..4 {
        let v = Volume3D::from_fn(g, |x, y, z| (x + y + z + k) as f64).unwrap();
        let p = dir.path().join(format!("ch{k}.nii.gz"));
        std::fs::write(&p, write_nifti(&v, true)).unwrap();
        channels.push(p);
    }
    let labels = dir.path().join("seg.nii");
    write_labels(&labels, &random_labels(&mut rng(2), g));
    let out = dir.path().join("out");
    let mut args = vec!["preprocess", "--channels"];
    args.extend(channels.iter().map(|p| s(p)));
    args.extend([
        "--labels",
        s(&labels),
        "--spacing",
        "1,1,1",
        "--out",
        s(&out),
    ]);
    let o = gliomakit(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, v) = read_volume(&out.join("ch0.nii.gz")).unwrap();
    assert_eq!(v.grid().shape(), [4, 4, 4]);
    assert_eq!(v.grid().spacing(), [1.0, 1.0, 1.0]);
    let (_, l) = read_labels(&out.join("seg.nii")).unwrap();
    assert_eq!(l.grid().shape(), [4, 4, 4]);
}

#[test]
fn info_prints_header_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.nii");
    let fx = NiftiFixture::new([2, 3, 4], [0.5, 1.0, 2.0], 4, Order::Be);
    std::fs::write(&p, fx.bytes(&[0.0; 24])).unwrap();
    let o = gliomakit(&["info", s(&p)]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["shape"], serde_json::json!([2, 3, 4]));
    assert_eq!(v["header"]["endianness"], "Big");

    std::fs::write(&p, &fx.bytes(&[0.0; 24])[..200]).unwrap();
    let o = gliomakit(&["info", s(&p)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("x.nii"));
}

#[test]
fn lr_schedule_csv_output() {
    let o = gliomakit(&["lr-schedule", "--epochs", "3500", "--floor", "1e-4"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epoch,lr");
    assert_eq!(lines.len(), 3501);
    assert_eq!(lines[1], "0,1e-2");
    assert_eq!(lines[3500], "3499,1e-4");
    assert!(!gliomakit(&["lr-schedule", "--floor", "0.5"])
        .status
        .success());
}

#[test]
fn analyze_curves_reports_phases() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("curve.csv");
    let mut csv = String::from("epoch,train_loss,val_score\n");
    for e in 0..400 {
        let loss = if e < 50 { 1.0 - e as f64 / 60.0 } else { 0.05 };
        let score = if e < 250 { 0.6 } else { 0.9 };
        csv.push_str(&format!("{e},{loss},{score}\n"));
    }
    std::fs::write(&p, csv).unwrap();
    let o = gliomakit(&["analyze-curves", s(&p), "--window", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let grok = v["grok"]["epoch"].as_u64().unwrap();
    assert!((245..=255).contains(&grok), "{v}");
}
