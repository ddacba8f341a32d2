//! Evaluate the bundled golden dataset and print the CSV report.
//!
//! cargo run --example batch_report

use std::path::Path;

use gliomakit::report::{emit_report, run_evaluate, CaseSource, EvaluateOptions, ReportFormat};

fn main() -> gliomakit::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden");
    let source = CaseSource::Directories {
        pred: root.join("pred"),
        pred_b: None,
        gt: root.join("gt"),
    };
    let outcome = run_evaluate(
        &source,
        &EvaluateOptions::default(),
        None,
        ReportFormat::Csv,
    )?;
    print!(
        "{}",
        String::from_utf8_lossy(&emit_report(&outcome.report, ReportFormat::Csv))
    );
    for f in &outcome.failures {
        eprintln!("{}: {}", f.case_id, f.reason);
    }
    Ok(())
}
