//! Binary completion supervision built from another moment's observation.
//!
//! A transformed point cloud marks voxels as occupied, and line-of-sight
//! rays from the (transformed) sensor position carve the free space in
//! between. The result is a {0, 1, 255} grid: confirmed empty, confirmed
//! occupied, unknown.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{los_traverse_to_point, PointCloud};
use crate::grid::{point_to_voxel, GridSpec, LabelGrid, ProbGrid, IGNORE_LABEL};

/// Per-class static/movable partition. Static classes (roads, buildings,
/// ...) persist across moments and may supervise other moments; movable
/// classes (cars, people, ...) are discarded. Class 0 (empty) is never
/// static for this mask's purpose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticClassMask {
    is_static: Vec<bool>,
}

impl StaticClassMask {
    /// Mark `movable` classes movable and every other class in 1..=C static.
    pub fn from_movable_classes(num_classes: u16, movable: &[u16]) -> Self {
        let mut is_static = vec![true; num_classes as usize + 1];
        is_static[0] = false;
        for &c in movable {
            if (c as usize) < is_static.len() {
                is_static[c as usize] = false;
            }
        }
        Self { is_static }
    }

    /// The 19-class taxonomy default: classes 1..=8 (vehicles and people)
    /// movable, 9..=19 (road through traffic sign) static.
    pub fn kitti_default() -> Self {
        Self::from_movable_classes(19, &[1, 2, 3, 4, 5, 6, 7, 8])
    }

    pub fn num_classes(&self) -> u16 {
        self.is_static.len() as u16 - 1
    }

    /// True when `class` is a static semantic class. Ignore (255),
    /// empty (0) and out-of-range values are not static.
    pub fn is_static(&self, class: u16) -> bool {
        (class as usize) < self.is_static.len() && self.is_static[class as usize]
    }
}

/// Diagnostics from one supervision-map construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CompMapStats {
    /// Points kept: static class, in bounds.
    pub static_points: usize,
    /// Points whose predicted class is movable or unknown (255).
    pub movable_points: usize,
    /// Points predicted as empty (class 0); a model inconsistency, discarded.
    pub empty_class_points: usize,
    /// Static-class points falling outside the grid.
    pub out_of_bounds_points: usize,
    /// Voxels set to 1.
    pub occupied_voxels: usize,
    /// Voxels set to 0.
    pub carved_voxels: usize,
}

/// Per-point class indices sampled from a prediction: each point takes the
/// argmax class of the voxel it falls in, or 255 when it falls outside the
/// grid.
pub fn classify_points(x: &PointCloud, p: &ProbGrid) -> Vec<u16> {
    let spec = p.spec();
    let ch = p.channels();
    x.points()
        .iter()
        .map(|&pt| {
            match point_to_voxel(pt, spec).expect("cloud coordinates are finite by construction") {
                Some(v) => {
                    let flat = spec.linear_index(v);
                    crate::grid::argmax(&p.values()[flat * ch..(flat + 1) * ch]) as u16
                }
                None => IGNORE_LABEL,
            }
        })
        .collect()
}

/// Build the binary completion supervision map from a point cloud already
/// transformed into the target frame. See [`build_comp_map`].
pub fn build_comp_map_with_stats(
    x_trans: &PointCloud,
    point_classes: &[u16],
    sensor_origin: [f64; 3],
    mask: &StaticClassMask,
    spec: &GridSpec,
) -> Result<(LabelGrid, CompMapStats)> {
    if point_classes.len() != x_trans.len() {
        return Err(Error::LengthMismatch {
            expected: x_trans.len(),
            got: point_classes.len(),
        });
    }
    let mut grid = LabelGrid::filled(spec.clone(), IGNORE_LABEL);
    let mut stats = CompMapStats::default();

    // Occupancy first: every voxel containing a static-class point is 1.
    let mut kept_points = Vec::new();
    for (&pt, &class) in x_trans.points().iter().zip(point_classes) {
        if class == 0 {
            stats.empty_class_points += 1;
            continue;
        }
        if !mask.is_static(class) {
            stats.movable_points += 1;
            continue;
        }
        let Some(v) = point_to_voxel(pt, spec)? else {
            stats.out_of_bounds_points += 1;
            continue;
        };
        stats.static_points += 1;
        grid.set(v, 1);
        kept_points.push(pt);
    }
    stats.occupied_voxels = grid.values().iter().filter(|&&v| v == 1).count();

    // Carve the sensor-to-return segment of every kept point; occupied wins.
    let origin_vu = spec.to_voxel_units(sensor_origin);
    for pt in kept_points {
        let end_vu = spec.to_voxel_units(pt);
        for v in los_traverse_to_point(origin_vu, end_vu, spec)? {
            let flat = spec.linear_index(v);
            if grid.get_flat(flat) != 1 {
                if grid.get_flat(flat) == IGNORE_LABEL {
                    stats.carved_voxels += 1;
                }
                grid.set_flat(flat, 0);
            }
        }
    }
    Ok((grid, stats))
}

/// Binary completion supervision map over {0, 1, 255}: 1 where a static
/// point landed, 0 along the sensor's line of sight to those points,
/// 255 elsewhere. `sensor_origin` is the source moment's sensor position
/// expressed in the target frame.
pub fn build_comp_map(
    x_trans: &PointCloud,
    point_classes: &[u16],
    sensor_origin: [f64; 3],
    mask: &StaticClassMask,
    spec: &GridSpec,
) -> Result<LabelGrid> {
    build_comp_map_with_stats(x_trans, point_classes, sensor_origin, mask, spec)
        .map(|(grid, _)| grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::los_traverse;
    use crate::grid::VoxelIndex;
    use crate::oracle;

    fn spec() -> GridSpec {
        GridSpec::new((8, 8, 8), [0.0; 3], 1.0, 3).unwrap()
    }

    fn mask() -> StaticClassMask {
        // class 1 movable ("car"), classes 2..=3 static
        StaticClassMask::from_movable_classes(3, &[1])
    }

    #[test]
    fn empty_cloud_gives_all_ignore() {
        let (grid, stats) =
            build_comp_map_with_stats(&PointCloud::empty(), &[], [0.5; 3], &mask(), &spec())
                .unwrap();
        assert!(grid.values().iter().all(|&v| v == IGNORE_LABEL));
        assert_eq!(stats, CompMapStats::default());
    }

    #[test]
    fn single_static_point_marks_and_carves() {
        let spec = spec();
        let cloud = PointCloud::new(vec![[6.5, 0.5, 0.5]]).unwrap();
        let sensor = [0.5, 0.5, 0.5];
        let grid = build_comp_map(&cloud, &[2], sensor, &mask(), &spec).unwrap();

        let target = VoxelIndex::new(6, 0, 0);
        assert_eq!(grid.get(target), 1);

        let carved = los_traverse(spec.to_voxel_units(sensor), target, &spec).unwrap();
        assert!(!carved.is_empty());
        for v in &carved {
            assert_eq!(grid.get(*v), 0);
            // carved voxels really lie on the sensor->point segment
            let overlap =
                oracle::segment_voxel_overlap(sensor, [6.5, 0.5, 0.5], *v);
            assert!(overlap > 0.0);
        }
        let marked = 1 + carved.len();
        let ignored = grid.values().iter().filter(|&&v| v == IGNORE_LABEL).count();
        assert_eq!(ignored, spec.voxel_count() - marked);
    }

    #[test]
    fn movable_point_is_discarded() {
        let cloud = PointCloud::new(vec![[6.5, 0.5, 0.5]]).unwrap();
        let (grid, stats) =
            build_comp_map_with_stats(&cloud, &[1], [0.5; 3], &mask(), &spec()).unwrap();
        assert!(grid.values().iter().all(|&v| v == IGNORE_LABEL));
        assert_eq!(stats.movable_points, 1);
    }

    #[test]
    fn empty_class_point_is_discarded_and_counted() {
        let cloud = PointCloud::new(vec![[6.5, 0.5, 0.5]]).unwrap();
        let (grid, stats) =
            build_comp_map_with_stats(&cloud, &[0], [0.5; 3], &mask(), &spec()).unwrap();
        assert!(grid.values().iter().all(|&v| v == IGNORE_LABEL));
        assert_eq!(stats.empty_class_points, 1);
    }

    #[test]
    fn occupied_wins_over_carving() {
        // Two points along one ray: the near one's voxel is crossed by the
        // far one's line of sight but must stay occupied.
        let spec = spec();
        let cloud = PointCloud::new(vec![[3.5, 0.5, 0.5], [6.5, 0.5, 0.5]]).unwrap();
        let grid = build_comp_map(&cloud, &[2, 2], [0.5, 0.5, 0.5], &mask(), &spec).unwrap();
        assert_eq!(grid.get(VoxelIndex::new(3, 0, 0)), 1);
        assert_eq!(grid.get(VoxelIndex::new(6, 0, 0)), 1);
        assert_eq!(grid.get(VoxelIndex::new(1, 0, 0)), 0);
        assert_eq!(grid.get(VoxelIndex::new(4, 0, 0)), 0);
    }

    #[test]
    fn mismatched_lengths_error() {
        let cloud = PointCloud::new(vec![[1.0, 1.0, 1.0]]).unwrap();
        assert!(build_comp_map(&cloud, &[2, 2], [0.5; 3], &mask(), &spec()).is_err());
    }

    #[test]
    fn output_values_are_restricted() {
        let spec = spec();
        let mut points = Vec::new();
        let mut classes = Vec::new();
        let mut x = 0.17_f64;
        for i in 0..200 {
            x = (x * 913.0 + 0.271).fract();
            let y = (x * 577.0 + 0.713).fract();
            let z = (y * 331.0 + 0.139).fract();
            points.push([x * 10.0 - 1.0, y * 10.0 - 1.0, z * 10.0 - 1.0]);
            classes.push((i % 5) as u16);
        }
        let cloud = PointCloud::new(points).unwrap();
        let grid = build_comp_map(&cloud, &classes, [-0.5, 4.0, 4.0], &mask(), &spec).unwrap();
        assert!(grid
            .values()
            .iter()
            .all(|&v| v == 0 || v == 1 || v == IGNORE_LABEL));
    }

    #[test]
    fn determinism() {
        let spec = spec();
        let cloud = PointCloud::new(vec![[6.5, 6.5, 6.5], [2.2, 3.3, 4.4]]).unwrap();
        let a = build_comp_map(&cloud, &[2, 3], [0.1, 0.1, 0.1], &mask(), &spec).unwrap();
        let b = build_comp_map(&cloud, &[2, 3], [0.1, 0.1, 0.1], &mask(), &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn classify_points_samples_argmax() {
        let spec = GridSpec::new((2, 1, 1), [0.0; 3], 1.0, 9).unwrap();
        let ch = spec.channels();
        let mut values = vec![0.0; spec.voxel_count() * ch];
        values[9] = 1.0; // voxel 0 one-hot class 9
        values[ch] = 1.0; // voxel 1 one-hot class 0
        let p = ProbGrid::from_values(spec, values).unwrap();
        let cloud = PointCloud::new(vec![
            [0.5, 0.5, 0.5],
            [0.2, 0.8, 0.1],
            [-3.0, 0.5, 0.5],
        ])
        .unwrap();
        let classes = classify_points(&cloud, &p);
        assert_eq!(classes, vec![9, 9, IGNORE_LABEL]);
    }
}
