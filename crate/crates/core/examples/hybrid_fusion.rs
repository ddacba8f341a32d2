//! Fuse two predictions: ET and TC from model A, WT from model B.
//!
//! cargo run --example hybrid_fusion

use gliomakit::regions::{compose_all, hybrid_fuse};
use gliomakit::{voxel_count, Grid, LabelMap};

fn main() -> gliomakit::Result<()> {
    let grid = Grid::new([6, 1, 1], [1.0; 3])?;
    // Model A has a sharp core but misses edema; model B has a wide whole tumor.
    let a = LabelMap::new(grid, vec![0, 1, 2, 0, 0, 0])?;
    let b = LabelMap::new(grid, vec![3, 3, 3, 3, 3, 0])?;
    let fused = hybrid_fuse(&a, &b)?;
    println!("model A {:?}", a.labels());
    println!("model B {:?}", b.labels());
    println!("fused   {:?}", fused.labels());
    for (m, tag) in compose_all(&fused).iter().map(|m| (m, m.tag())) {
        println!("{tag}: {} voxels", voxel_count(m));
    }
    Ok(())
}
