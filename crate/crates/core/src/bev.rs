//! Bird's-eye-view rendering of label grids.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::Result;
use crate::grid::{LabelGrid, VoxelIndex, IGNORE_LABEL};

/// Background color for columns without any occupied voxel.
const BACKGROUND: [u8; 3] = [20, 20, 20];

/// Fixed, deterministic palette: class c gets `palette[c - 1]`.
pub fn default_palette(num_classes: u16) -> Vec<[u8; 3]> {
    const BASE: [[u8; 3]; 19] = [
        [245, 150, 100],
        [245, 230, 100],
        [150, 60, 30],
        [180, 30, 80],
        [255, 0, 0],
        [30, 30, 255],
        [200, 40, 255],
        [90, 30, 150],
        [255, 0, 255],
        [255, 150, 255],
        [75, 0, 75],
        [75, 0, 175],
        [0, 200, 255],
        [50, 120, 255],
        [0, 175, 0],
        [0, 60, 135],
        [80, 240, 150],
        [150, 240, 255],
        [0, 0, 255],
    ];
    (0..num_classes as usize)
        .map(|i| BASE[i % BASE.len()])
        .collect()
}

/// Top-down projection: for each (x, y) column take the highest voxel with a
/// semantic class (0 and 255 are see-through). Pixel (0, 0) is the corner at
/// maximum y; +x runs right, +y runs up.
pub fn bev_image(grid: &LabelGrid, palette: &[[u8; 3]]) -> RgbImage {
    let (l, w, h) = grid.spec().dims;
    let mut img = RgbImage::new(l as u32, w as u32);
    for iy in 0..w {
        for ix in 0..l {
            let mut color = BACKGROUND;
            for iz in (0..h).rev() {
                let label = grid.get(VoxelIndex::new(ix as i32, iy as i32, iz as i32));
                if label != 0 && label != IGNORE_LABEL {
                    color = palette[(label as usize - 1) % palette.len()];
                    break;
                }
            }
            img.put_pixel(ix as u32, (w - 1 - iy) as u32, Rgb(color));
        }
    }
    img
}

/// Render and save as PNG (lossless).
pub fn emit_bev(grid: &LabelGrid, palette: &[[u8; 3]], path: &Path) -> Result<()> {
    let img = bev_image(grid, palette);
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| crate::error::Error::Config(format!("writing {path:?}: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn spec() -> GridSpec {
        GridSpec::new((6, 4, 3), [0.0; 3], 1.0, 3).unwrap()
    }

    #[test]
    fn empty_grid_is_uniform_background() {
        let grid = LabelGrid::filled(spec(), 0);
        let img = bev_image(&grid, &default_palette(3));
        assert!(img.pixels().all(|p| p.0 == BACKGROUND));
    }

    #[test]
    fn single_column_is_single_pixel() {
        let mut grid = LabelGrid::filled(spec(), 0);
        grid.set(VoxelIndex::new(2, 1, 0), 1);
        let img = bev_image(&grid, &default_palette(3));
        let lit: Vec<_> = img
            .enumerate_pixels()
            .filter(|(_, _, p)| p.0 != BACKGROUND)
            .collect();
        assert_eq!(lit.len(), 1);
        let (x, y, p) = lit[0];
        assert_eq!((x, y), (2, 2)); // iy = 1 -> row w-1-1 = 2
        assert_eq!(p.0, default_palette(3)[0]);
    }

    #[test]
    fn highest_voxel_wins() {
        let mut grid = LabelGrid::filled(spec(), 0);
        grid.set(VoxelIndex::new(0, 0, 0), 1);
        grid.set(VoxelIndex::new(0, 0, 2), 2);
        let img = bev_image(&grid, &default_palette(3));
        assert_eq!(img.get_pixel(0, 3).0, default_palette(3)[1]);
    }

    #[test]
    fn png_emission_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut grid = LabelGrid::filled(spec(), 0);
        for i in 0..grid.spec().voxel_count() {
            grid.set_flat(i, (i % 4) as u16);
        }
        let a = dir.path().join("a.png");
        let b = dir.path().join("b.png");
        let palette = default_palette(3);
        emit_bev(&grid, &palette, &a).unwrap();
        emit_bev(&grid, &palette, &b).unwrap();
        let ba = std::fs::read(&a).unwrap();
        let bb = std::fs::read(&b).unwrap();
        assert!(!ba.is_empty());
        assert_eq!(ba, bb, "PNG bytes must be identical across runs");
    }
}
