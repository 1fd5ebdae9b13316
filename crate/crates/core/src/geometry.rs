//! Rigid transforms between LiDAR frames, point-cloud transformation,
//! integer line-of-sight traversal and pose perturbation.

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, VoxelIndex};

/// Rigid transform: rotation followed by translation.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Pose {
    /// Build a pose, checking that `rotation` is a proper rotation
    /// (orthonormal with determinant +1, both within 1e-6).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let gram = rotation.transpose() * rotation;
        let ortho_err = (gram - Matrix3::identity()).abs().max();
        if ortho_err > 1e-6 {
            return Err(Error::InvalidSpec(format!(
                "rotation is not orthonormal (max deviation {ortho_err:.2e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidSpec(format!(
                "rotation determinant {det} is not +1"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Pose rotating by `yaw` radians around +z, then translating.
    pub fn from_yaw(yaw: f64, translation: [f64; 3]) -> Self {
        Self {
            rotation: *Rotation3::from_euler_angles(0.0, 0.0, yaw).matrix(),
            translation: Vector3::from(translation),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> [f64; 3] {
        self.translation.into()
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        (self.rotation * Vector3::from(p) + self.translation).into()
    }
}

/// A set of 3D points in meters, with optional per-point intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    intensity: Option<Vec<f32>>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinitePoint(p[0], p[1], p[2]));
        }
        Ok(Self {
            points,
            intensity: None,
        })
    }

    pub fn with_intensity(points: Vec<[f64; 3]>, intensity: Vec<f32>) -> Result<Self> {
        if intensity.len() != points.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                got: intensity.len(),
            });
        }
        let mut cloud = Self::new(points)?;
        cloud.intensity = Some(intensity);
        Ok(cloud)
    }

    pub fn empty() -> Self {
        Self {
            points: Vec::new(),
            intensity: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn intensity(&self) -> Option<&[f32]> {
        self.intensity.as_deref()
    }
}

/// Relative transform `T_{j->i}` mapping frame-j coordinates into frame i,
/// given both frames' poses in a common world frame.
pub fn relative_pose(pose_world_j: &Pose, pose_world_i: &Pose) -> Pose {
    pose_world_i.inverse().compose(pose_world_j)
}

/// Apply a rigid transform to every point; intensities are preserved.
pub fn transform_cloud(x: &PointCloud, t: &Pose) -> PointCloud {
    PointCloud {
        points: x.points.iter().map(|&p| t.apply(p)).collect(),
        intensity: x.intensity.clone(),
    }
}

/// Two `t_max` values closer than this are treated as one boundary crossing,
/// so corner-grazing neighbors are skipped.
const TIE_EPS: f64 = 1e-12;

/// Voxels strictly between an origin point and a target voxel.
///
/// Steps voxel by voxel from the voxel containing `origin_voxel` (a
/// continuous position in voxel units; it may lie outside the grid) toward
/// the center of `target`. Returns the visited in-bounds voxels in traversal
/// order, excluding both the origin's voxel and the target itself. When the
/// segment crosses a cell boundary exactly at an edge or corner, both axes
/// advance together, so only voxels the segment genuinely passes through are
/// reported.
pub fn los_traverse(
    origin_voxel: [f64; 3],
    target: VoxelIndex,
    spec: &GridSpec,
) -> Result<Vec<VoxelIndex>> {
    if !spec.contains(target) {
        return Err(Error::TargetOutOfBounds(target.ix, target.iy, target.iz));
    }
    let center = [
        target.ix as f64 + 0.5,
        target.iy as f64 + 0.5,
        target.iz as f64 + 0.5,
    ];
    traverse_segment(origin_voxel, center, target, spec)
}

/// Voxels strictly between an origin point and an end point (both continuous,
/// voxel units), excluding the voxels containing either endpoint. The end
/// point's voxel must be in bounds. Used for carving, where the geometric
/// segment runs from the sensor to the measured return rather than to a
/// voxel center.
pub fn los_traverse_to_point(
    origin_voxel: [f64; 3],
    end_point: [f64; 3],
    spec: &GridSpec,
) -> Result<Vec<VoxelIndex>> {
    if end_point.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinitePoint(end_point[0], end_point[1], end_point[2]));
    }
    let end_cell = VoxelIndex::new(
        end_point[0].floor() as i32,
        end_point[1].floor() as i32,
        end_point[2].floor() as i32,
    );
    if !spec.contains(end_cell) {
        return Err(Error::TargetOutOfBounds(
            end_cell.ix,
            end_cell.iy,
            end_cell.iz,
        ));
    }
    traverse_segment(origin_voxel, end_point, end_cell, spec)
}

fn traverse_segment(
    origin: [f64; 3],
    end: [f64; 3],
    end_cell: VoxelIndex,
    spec: &GridSpec,
) -> Result<Vec<VoxelIndex>> {
    let o = origin;
    if o.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinitePoint(o[0], o[1], o[2]));
    }
    let goal = [end_cell.ix as i64, end_cell.iy as i64, end_cell.iz as i64];
    let d = [end[0] - o[0], end[1] - o[1], end[2] - o[2]];

    let mut cell = [
        o[0].floor() as i64,
        o[1].floor() as i64,
        o[2].floor() as i64,
    ];
    if cell == goal {
        return Ok(Vec::new());
    }

    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for k in 0..3 {
        if d[k] > 0.0 {
            step[k] = 1;
            t_max[k] = (cell[k] as f64 + 1.0 - o[k]) / d[k];
            t_delta[k] = 1.0 / d[k];
        } else if d[k] < 0.0 {
            step[k] = -1;
            t_max[k] = (cell[k] as f64 - o[k]) / d[k];
            t_delta[k] = -1.0 / d[k];
        }
    }

    let manhattan = (goal[0] - cell[0]).abs() + (goal[1] - cell[1]).abs() + (goal[2] - cell[2]).abs();
    let max_steps = 2 * manhattan + 8;

    let in_bounds = |c: &[i64; 3]| {
        c[0] >= 0
            && c[1] >= 0
            && c[2] >= 0
            && (c[0] as usize) < spec.dims.0
            && (c[1] as usize) < spec.dims.1
            && (c[2] as usize) < spec.dims.2
    };

    let mut visited = Vec::new();
    for _ in 0..max_steps {
        let t_min = t_max[0].min(t_max[1]).min(t_max[2]);
        if t_min > 1.0 + TIE_EPS {
            break;
        }
        for k in 0..3 {
            if t_max[k] <= t_min + TIE_EPS {
                cell[k] += step[k];
                t_max[k] += t_delta[k];
            }
        }
        if cell == goal {
            break;
        }
        if in_bounds(&cell) {
            visited.push(VoxelIndex::new(cell[0] as i32, cell[1] as i32, cell[2] as i32));
        }
    }
    Ok(visited)
}

/// Perturb a pose with Gaussian noise of standard deviation `sigma` on each
/// of the three Euler angles (intrinsic yaw-pitch-roll, radians) and each
/// translation component (meters). Deterministic for a given seed; the
/// rotation is rebuilt from the noisy angles, so it stays orthonormal.
pub fn perturb_pose(t: &Pose, sigma: f64, rng_seed: u64) -> Result<Pose> {
    if sigma < 0.0 {
        return Err(Error::NegativeSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(t.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let normal = Normal::new(0.0, sigma).expect("sigma checked non-negative");
    let mut draw = || normal.sample(&mut rng);

    let (roll, pitch, yaw) = Rotation3::from_matrix_unchecked(t.rotation).euler_angles();
    let rotation = Rotation3::from_euler_angles(roll + draw(), pitch + draw(), yaw + draw());
    let translation = t.translation + Vector3::new(draw(), draw(), draw());
    Pose::new(*rotation.matrix(), translation)
}
