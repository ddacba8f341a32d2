//! Score one synthetic prediction against its ground truth for every region.
//!
//! cargo run --example evaluate_case

use gliomakit::metrics::{evaluate_case, LesionwiseParams, DEFAULT_TOLERANCES_MM};
use gliomakit::{Grid, LabelMap, RegionTag};

fn cube(grid: Grid, lo: [usize; 3], side: usize, label: u8) -> LabelMap {
    let [nx, ny, nz] = grid.shape();
    let mut labels = vec![0u8; nx * ny * nz];
    for z in lo[2]..lo[2] + side {
        for y in lo[1]..lo[1] + side {
            for x in lo[0]..lo[0] + side {
                labels[grid.index(x, y, z)] = label;
            }
        }
    }
    LabelMap::new(grid, labels).unwrap()
}

fn main() -> gliomakit::Result<()> {
    let grid = Grid::new([12, 8, 8], [1.0, 1.0, 1.0])?;
    let gt = cube(grid, [2, 2, 2], 4, 3);
    let pred = cube(grid, [4, 2, 2], 4, 3);

    let scores = evaluate_case(
        "demo",
        &pred,
        &gt,
        &DEFAULT_TOLERANCES_MM,
        &LesionwiseParams::default(),
    )?;
    for tag in RegionTag::ALL {
        let r = scores.region(tag);
        print!("{tag}: dice {:.4}  lw dice {:.4}", r.dice, r.lw_dice);
        for t in &r.nsd {
            print!("  nsd@{} {:.4}", t.tolerance_mm, t.score);
        }
        println!();
    }
    Ok(())
}
