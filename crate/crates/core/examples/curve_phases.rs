//! Detect fit, plateau and grok epochs on a synthetic 1500-epoch run, or on
//! an `epoch,train_loss,val_score` CSV given as the first argument.
//!
//! cargo run --example curve_phases [curve.csv]

use gliomakit::curves::{detect_phases, PhaseParams, TrainingCurve};

fn synthetic() -> gliomakit::Result<TrainingCurve> {
    let n = 1500;
    let loss = (0..n)
        .map(|t| 0.05 + 0.95 * (-(t as f64) / 54.0).exp())
        .collect();
    let score = (0..n)
        .map(|t| {
            let t = t as f64;
            let early = if t < 100.0 {
                0.2 + 0.4 * t / 100.0
            } else {
                0.6
            };
            early + 0.3 / (1.0 + (-(t - 1020.0) / 3.0).exp())
        })
        .collect();
    TrainingCurve::new(0, loss, score)
}

fn main() -> gliomakit::Result<()> {
    let curve = match std::env::args().nth(1) {
        Some(p) => TrainingCurve::from_csv_path(p.as_ref())?,
        None => synthetic()?,
    };
    let phases = detect_phases(&curve, &PhaseParams::default())?;
    for (name, mark) in [
        ("fit", phases.fit),
        ("overfit", phases.overfit),
        ("grok", phases.grok),
    ] {
        match mark {
            Some(m) => println!("{name:>8}: epoch {:>5}  value {:.4}", m.epoch, m.value),
            None => println!("{name:>8}: none"),
        }
    }
    Ok(())
}
