//! Resample a synthetic four-channel scan to 1 mm isotropic and z-score it.
//!
//! cargo run --example preprocess_scan

use gliomakit::preprocess::{infer_brain_mask, preprocess_scan, ResamplePlan};
use gliomakit::{voxel_count, Grid, MultiModalScan, Volume3D};

fn main() -> gliomakit::Result<()> {
    let grid = Grid::new([20, 20, 8], [0.8, 0.8, 2.5])?;
    let channel = |gain: f64| {
        Volume3D::from_fn(grid, |x, y, z| {
            let (dx, dy, dz) = (x as f64 - 10.0, y as f64 - 10.0, z as f64 - 4.0);
            if dx * dx + dy * dy + 4.0 * dz * dz < 64.0 {
                gain * (100.0 + dx + dy)
            } else {
                0.0
            }
        })
    };
    let scan = MultiModalScan::new([channel(1.0)?, channel(1.5)?, channel(0.7)?, channel(2.0)?])?;
    let plan = ResamplePlan::trilinear([1.0, 1.0, 1.0])?;
    let out = preprocess_scan(&scan, &plan)?;
    let brain = infer_brain_mask(&out);

    println!("input  {}", scan.grid());
    println!("output {}", out.grid());
    println!("brain voxels after resampling: {}", voxel_count(&brain));
    for (name, ch) in MultiModalScan::CHANNEL_NAMES.iter().zip(out.channels()) {
        let inside: Vec<f64> = ch
            .voxels()
            .iter()
            .zip(brain.bits())
            .filter(|(_, &b)| b)
            .map(|(&v, _)| v)
            .collect();
        let mean = inside.iter().sum::<f64>() / inside.len() as f64;
        println!("{name:>6}: brain mean {mean:+.2e}");
    }
    Ok(())
}
