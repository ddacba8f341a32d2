//! Anisotropic distance transform, connected components and surfaces of a mask.
//!
//! cargo run --example distance_transform

use gliomakit::morphology::{
    connected_components, distance_transform, surface_voxels, Connectivity,
};
use gliomakit::{voxel_count, Grid, RegionMask, RegionTag};

fn main() -> gliomakit::Result<()> {
    let grid = Grid::new([9, 9, 5], [0.5, 0.5, 2.0])?;
    let mask = RegionMask::from_fn(grid, RegionTag::Wt, |x, y, z| {
        (x == 4 && y == 4 && z == 2) || (x >= 7 && y >= 7)
    });

    let field = distance_transform(&mask);
    println!("distance (mm) from the mask, slice z = 0:");
    for y in 0..9 {
        let row: Vec<String> = (0..9)
            .map(|x| format!("{:4.2}", field.get(x, y, 0)))
            .collect();
        println!("  {}", row.join(" "));
    }
    for c in [Connectivity::Six, Connectivity::TwentySix] {
        let cc = connected_components(&mask, c);
        println!(
            "{:?}-connected components: {} of sizes {:?}",
            c,
            cc.count(),
            cc.sizes()
        );
    }
    println!("surface voxels: {}", voxel_count(&surface_voxels(&mask)));
    Ok(())
}
