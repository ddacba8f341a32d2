//! Baseline and extended polynomial learning-rate schedules side by side.
//!
//! cargo run --example lr_schedules

use gliomakit::schedule::{build_schedule, TrainingConfig};

fn main() -> gliomakit::Result<()> {
    let base = build_schedule(&TrainingConfig::baseline())?;
    let ext = build_schedule(&TrainingConfig::extended())?;
    println!("{:>6} {:>12} {:>12}", "epoch", "baseline", "extended");
    for e in [0usize, 50, 100, 150, 199, 500, 1000, 2000, 3000, 3499] {
        let b = base
            .get(e)
            .map_or("-".to_string(), |x| format!("{:.3e}", x.1));
        println!("{e:>6} {b:>12} {:>12.3e}", ext[e].1);
    }
    let floored = ext.iter().filter(|x| x.1 == 1e-4).count();
    println!("extended epochs held at the floor: {floored}");
    Ok(())
}
