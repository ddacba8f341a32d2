//! Write a volume to `.nii.gz`, read it back and print the header.
//!
//! cargo run --example nifti_roundtrip [out.nii.gz]

use gliomakit::nifti::{read_volume, write_nifti};
use gliomakit::{Grid, Volume3D};

fn main() -> gliomakit::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("gliomakit_roundtrip.nii.gz"));

    let grid = Grid::with_origin([16, 16, 8], [0.9, 0.9, 3.0], [-7.2, -7.2, 0.0])?;
    let vol = Volume3D::from_fn(grid, |x, y, z| (x * y) as f64 - z as f64)?;
    std::fs::write(&path, write_nifti(&vol, true))?;

    let (header, back) = read_volume(&path)?;
    assert_eq!(back.voxels(), vol.voxels());
    println!("{}", path.display());
    println!("  {}", back.grid());
    println!(
        "  datatype {:?}, {:?} endian",
        header.datatype, header.endianness
    );
    println!("  origin {:?}", header.affine.origin());
    Ok(())
}
