//! SemanticKITTI-format ingestion and serialization.
//!
//! Scans are little-endian f32 quadruples (x, y, z, reflectance). Camera
//! poses come from `poses.txt` (12 floats per line, row-major 3x4) and are
//! chained into LiDAR world poses through the `Tr` extrinsic of `calib.txt`.
//! Voxel ground truth is a packed occupancy bitmap (MSB-first within each
//! byte, x-major voxel order), u16 little-endian labels, and a packed
//! invalid bitmap; labels are remapped to the training taxonomy through a
//! learning map.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Pose};
use crate::grid::{GridSpec, LabelGrid, IGNORE_LABEL};
use crate::sequence::{SequenceSource, SequenceStep};

/// Read a point cloud from a raw scan file.
pub fn read_kitti_scan(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path)?;
    if bytes.len() % 16 != 0 {
        return Err(Error::BadScanFile {
            path: path.to_path_buf(),
            got: bytes.len() as u64,
        });
    }
    let n = bytes.len() / 16;
    let mut points = Vec::with_capacity(n);
    let mut intensity = Vec::with_capacity(n);
    for rec in bytes.chunks_exact(16) {
        let f = |i: usize| f32::from_le_bytes(rec[i * 4..(i + 1) * 4].try_into().unwrap());
        points.push([f(0) as f64, f(1) as f64, f(2) as f64]);
        intensity.push(f(3));
    }
    PointCloud::with_intensity(points, intensity)
}

/// Write a point cloud as a raw scan file (missing intensities become 0).
pub fn write_kitti_scan(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut bytes = Vec::with_capacity(cloud.len() * 16);
    for (i, p) in cloud.points().iter().enumerate() {
        for &v in p {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
        let intensity = cloud.intensity().map_or(0.0, |vals| vals[i]);
        bytes.extend_from_slice(&intensity.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn parse_floats(line: &str) -> Vec<f64> {
    line.split_whitespace()
        .filter_map(|tok| tok.parse::<f64>().ok())
        .collect()
}

fn mat4_from_3x4(vals: &[f64]) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    for r in 0..3 {
        for c in 0..4 {
            m[(r, c)] = vals[r * 4 + c];
        }
    }
    m
}

/// Parse the `Tr` (LiDAR-to-camera) extrinsic from a calibration file.
pub fn read_calib_tr(calib_path: &Path) -> Result<Matrix4<f64>> {
    let text = fs::read_to_string(calib_path)?;
    for (lineno, line) in text.lines().enumerate() {
        let Some(rest) = line.strip_prefix("Tr:").or_else(|| line.strip_prefix("Tr ")) else {
            continue;
        };
        let vals = parse_floats(rest);
        if vals.len() != 12 {
            return Err(Error::BadPoseFile {
                path: calib_path.to_path_buf(),
                line: lineno + 1,
                msg: format!("Tr row has {} values, expected 12", vals.len()),
            });
        }
        return Ok(mat4_from_3x4(&vals));
    }
    Err(Error::BadPoseFile {
        path: calib_path.to_path_buf(),
        line: 0,
        msg: "missing Tr row".into(),
    })
}

fn pose_from_mat4(m: &Matrix4<f64>) -> Result<Pose> {
    let r = m.fixed_view::<3, 3>(0, 0).into_owned();
    let t = Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]);
    // products of parsed matrices can drift slightly off the rotation group
    let rot = Rotation3::from_matrix(&r);
    Pose::new(*rot.matrix(), t)
}

/// Read the per-scan world poses of the LiDAR frame: each camera pose P from
/// `poses.txt` becomes `Tr^-1 * P * Tr`.
pub fn read_kitti_poses(poses_path: &Path, calib_path: &Path) -> Result<Vec<Pose>> {
    let tr = read_calib_tr(calib_path)?;
    let tr_inv = tr.try_inverse().ok_or_else(|| Error::BadPoseFile {
        path: calib_path.to_path_buf(),
        line: 0,
        msg: "Tr is not invertible".into(),
    })?;
    let text = fs::read_to_string(poses_path)?;
    let mut poses = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals = parse_floats(line);
        if vals.len() != 12 {
            return Err(Error::BadPoseFile {
                path: poses_path.to_path_buf(),
                line: lineno + 1,
                msg: format!("pose line has {} values, expected 12", vals.len()),
            });
        }
        let p = mat4_from_3x4(&vals);
        poses.push(pose_from_mat4(&(tr_inv * p * tr))?);
    }
    Ok(poses)
}

/// Write world poses in the `poses.txt` convention with an identity `Tr`.
pub fn write_kitti_poses(poses_path: &Path, calib_path: &Path, poses: &[Pose]) -> Result<()> {
    let mut text = String::new();
    for pose in poses {
        let r: &Matrix3<f64> = pose.rotation();
        let t = pose.translation();
        let mut row = Vec::with_capacity(12);
        for i in 0..3 {
            for j in 0..3 {
                row.push(r[(i, j)]);
            }
            row.push(t[i]);
        }
        let line: Vec<String> = row.iter().map(|v| format!("{v:.9e}")).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    fs::write(poses_path, text)?;
    fs::write(calib_path, "Tr: 1 0 0 0 0 1 0 0 0 0 1 0\n")?;
    Ok(())
}

/// Raw label id -> training id table; unmapped ids read as 255.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningMap {
    num_classes: u16,
    map: HashMap<u16, u16>,
}

#[derive(Deserialize)]
struct LearningMapFile {
    num_classes: u16,
    map: HashMap<String, u16>,
}

impl LearningMap {
    /// The 19-class taxonomy mapping shipped with the crate.
    pub fn kitti_default() -> Self {
        Self::from_toml_str(include_str!("../data/semantic_kitti_learning_map.toml"))
            .expect("embedded learning map parses")
    }

    /// Identity mapping for grids already in training ids (synthetic
    /// exports).
    pub fn identity(num_classes: u16) -> Self {
        let map = (0..=num_classes).map(|c| (c, c)).collect();
        Self { num_classes, map }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let parsed: LearningMapFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("learning map: {e}")))?;
        let mut map = HashMap::new();
        for (k, v) in parsed.map {
            let raw: u16 = k
                .parse()
                .map_err(|_| Error::Config(format!("learning map key '{k}' is not a u16")))?;
            if v > parsed.num_classes {
                return Err(Error::Config(format!(
                    "learning map value {v} exceeds num_classes {}",
                    parsed.num_classes
                )));
            }
            map.insert(raw, v);
        }
        Ok(Self {
            num_classes: parsed.num_classes,
            map,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn num_classes(&self) -> u16 {
        self.num_classes
    }

    pub fn apply(&self, raw: u16) -> u16 {
        self.map.get(&raw).copied().unwrap_or(IGNORE_LABEL)
    }
}

/// Read a packed bitmap (MSB-first within each byte) of exactly
/// `expected_bits` entries.
pub fn read_packed_bits(path: &Path, expected_bits: usize) -> Result<Vec<bool>> {
    let bytes = fs::read(path)?;
    let expected_bytes = expected_bits.div_ceil(8);
    if bytes.len() != expected_bytes {
        return Err(Error::BadVoxelFile {
            path: path.to_path_buf(),
            expected: expected_bytes as u64,
            got: bytes.len() as u64,
        });
    }
    Ok((0..expected_bits)
        .map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0)
        .collect())
}

/// Write a packed bitmap, MSB-first within each byte.
pub fn write_packed_bits(path: &Path, bits: &[bool]) -> Result<()> {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            bytes[i / 8] |= 0x80 >> (i % 8);
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Read exactly `expected` little-endian u16 labels.
pub fn read_labels_u16(path: &Path, expected: usize) -> Result<Vec<u16>> {
    let bytes = fs::read(path)?;
    if bytes.len() != expected * 2 {
        return Err(Error::BadVoxelFile {
            path: path.to_path_buf(),
            expected: (expected * 2) as u64,
            got: bytes.len() as u64,
        });
    }
    Ok(bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect())
}

pub fn write_labels_u16(path: &Path, labels: &[u16]) -> Result<()> {
    let mut bytes = Vec::with_capacity(labels.len() * 2);
    for &l in labels {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Assemble a ground-truth label grid from the occupancy / label / invalid
/// triple, remapping raw labels through `map`. Invalid voxels become 255,
/// unoccupied voxels 0.
pub fn read_kitti_voxels(
    bin_path: &Path,
    label_path: &Path,
    invalid_path: &Path,
    spec: &GridSpec,
    map: &LearningMap,
) -> Result<LabelGrid> {
    let n = spec.voxel_count();
    let occupied = read_packed_bits(bin_path, n)?;
    let labels = read_labels_u16(label_path, n)?;
    let invalid = read_packed_bits(invalid_path, n)?;
    let values = (0..n)
        .map(|i| {
            if invalid[i] {
                IGNORE_LABEL
            } else if occupied[i] {
                map.apply(labels[i])
            } else {
                0
            }
        })
        .collect();
    LabelGrid::from_values(spec.clone(), values)
}

/// Write a label grid as the occupancy / label / invalid triple (labels are
/// written as-is; reading back with an identity map restores the grid).
pub fn write_kitti_voxels(
    bin_path: &Path,
    label_path: &Path,
    invalid_path: &Path,
    grid: &LabelGrid,
) -> Result<()> {
    let occupied: Vec<bool> = grid
        .values()
        .iter()
        .map(|&v| v != 0 && v != IGNORE_LABEL)
        .collect();
    let invalid: Vec<bool> = grid.values().iter().map(|&v| v == IGNORE_LABEL).collect();
    let labels: Vec<u16> = grid
        .values()
        .iter()
        .map(|&v| if v == IGNORE_LABEL { 0 } else { v })
        .collect();
    write_packed_bits(bin_path, &occupied)?;
    write_labels_u16(label_path, &labels)?;
    write_packed_bits(invalid_path, &invalid)?;
    Ok(())
}

/// Stream over one sequence directory in the standard layout:
/// `velodyne/*.bin`, `voxels/*.bin|.label|.invalid`, `poses.txt`,
/// `calib.txt`. Ground truth is attached to the steps that have all three
/// voxel files.
pub struct KittiSequenceSource {
    scans: Vec<(u64, PathBuf)>,
    poses: Vec<Pose>,
    voxel_dir: PathBuf,
    spec: GridSpec,
    map: LearningMap,
    cursor: usize,
}

impl KittiSequenceSource {
    pub fn open(sequence_dir: &Path, spec: GridSpec, map: LearningMap) -> Result<Self> {
        let velodyne = sequence_dir.join("velodyne");
        let mut scans = Vec::new();
        for entry in fs::read_dir(&velodyne)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "bin") {
                let stem = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default();
                let index: u64 = stem.parse().map_err(|_| {
                    Error::Config(format!("scan file {path:?} has a non-numeric name"))
                })?;
                scans.push((index, path));
            }
        }
        scans.sort();
        let poses = read_kitti_poses(
            &sequence_dir.join("poses.txt"),
            &sequence_dir.join("calib.txt"),
        )?;
        Ok(Self {
            scans,
            poses,
            voxel_dir: sequence_dir.join("voxels"),
            spec,
            map,
            cursor: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.scans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scans.is_empty()
    }
}

impl SequenceSource for KittiSequenceSource {
    fn next_step(&mut self) -> Result<Option<SequenceStep>> {
        let Some((index, scan_path)) = self.scans.get(self.cursor).cloned() else {
            return Ok(None);
        };
        self.cursor += 1;
        let cloud = read_kitti_scan(&scan_path)?;
        let pose = self
            .poses
            .get(index as usize)
            .cloned()
            .ok_or_else(|| Error::Config(format!("no pose for scan index {index}")))?;
        let stem = format!("{index:06}");
        let bin = self.voxel_dir.join(format!("{stem}.bin"));
        let label = self.voxel_dir.join(format!("{stem}.label"));
        let invalid = self.voxel_dir.join(format!("{stem}.invalid"));
        let gt = if bin.exists() && label.exists() && invalid.exists() {
            Some(read_kitti_voxels(&bin, &label, &invalid, &self.spec, &self.map)?)
        } else {
            None
        };
        Ok(Some(SequenceStep {
            index,
            cloud,
            pose,
            gt,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scan_single_point() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.bin");
        let mut bytes = Vec::new();
        for v in [1.0f32, 2.0, 3.0, 0.5] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(&path, bytes).unwrap();
        let cloud = read_kitti_scan(&path).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.points()[0], [1.0, 2.0, 3.0]);
        assert_eq!(cloud.intensity().unwrap()[0], 0.5);
    }

    #[test]
    fn scan_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.bin");
        fs::write(&path, []).unwrap();
        let cloud = read_kitti_scan(&path).unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn scan_rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        fs::write(&path, vec![0u8; 17]).unwrap();
        assert!(matches!(
            read_kitti_scan(&path),
            Err(Error::BadScanFile { got: 17, .. })
        ));
    }

    #[test]
    fn scan_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.bin");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let points: Vec<[f64; 3]> = (0..100)
            .map(|_| {
                [
                    // f32-representable values survive the f64 round trip
                    rng.random_range(-50i32..50) as f64 * 0.25,
                    rng.random_range(-50i32..50) as f64 * 0.25,
                    rng.random_range(-50i32..50) as f64 * 0.25,
                ]
            })
            .collect();
        let intensity: Vec<f32> = (0..100).map(|_| rng.random_range(0.0..1.0)).collect();
        let cloud = PointCloud::with_intensity(points, intensity).unwrap();
        write_kitti_scan(&path, &cloud).unwrap();
        let back = read_kitti_scan(&path).unwrap();
        assert_eq!(back, cloud);
        // file-level: writing what we read reproduces the bytes
        let bytes_a = fs::read(&path).unwrap();
        let path_b = dir.path().join("rt2.bin");
        write_kitti_scan(&path_b, &back).unwrap();
        assert_eq!(bytes_a, fs::read(&path_b).unwrap());
    }

    fn write_calib(dir: &Path, tr: &str) -> PathBuf {
        let path = dir.join("calib.txt");
        fs::write(&path, format!("P0: 1 0 0 0 0 1 0 0 0 0 1 0\nTr: {tr}\n")).unwrap();
        path
    }

    #[test]
    fn poses_identity_chain() {
        let dir = tempfile::tempdir().unwrap();
        let calib = write_calib(dir.path(), "1 0 0 0 0 1 0 0 0 0 1 0");
        let poses_path = dir.path().join("poses.txt");
        fs::write(&poses_path, "1 0 0 0 0 1 0 0 0 0 1 0\n").unwrap();
        let poses = read_kitti_poses(&poses_path, &calib).unwrap();
        assert_eq!(poses.len(), 1);
        assert_eq!(poses[0], Pose::identity());
    }

    #[test]
    fn poses_pure_translation() {
        let dir = tempfile::tempdir().unwrap();
        let calib = write_calib(dir.path(), "1 0 0 0 0 1 0 0 0 0 1 0");
        let poses_path = dir.path().join("poses.txt");
        fs::write(&poses_path, "1 0 0 4.5 0 1 0 -1.25 0 0 1 0.5\n").unwrap();
        let poses = read_kitti_poses(&poses_path, &calib).unwrap();
        assert_eq!(poses[0].translation(), [4.5, -1.25, 0.5]);
    }

    #[test]
    fn poses_match_matrix_oracle() {
        // a yawed camera extrinsic and a rototranslated pose
        let dir = tempfile::tempdir().unwrap();
        let yaw = 0.35_f64;
        let (s, c) = yaw.sin_cos();
        let calib = write_calib(
            dir.path(),
            &format!("{c} {} 0 0.2 {s} {c} 0 -0.1 0 0 1 0.3", -s),
        );
        let poses_path = dir.path().join("poses.txt");
        let yaw2 = -0.8_f64;
        let (s2, c2) = yaw2.sin_cos();
        fs::write(
            &poses_path,
            format!("{c2} {} 0 1.5 {s2} {c2} 0 2.5 0 0 1 -0.5\n", -s2),
        )
        .unwrap();
        let poses = read_kitti_poses(&poses_path, &calib).unwrap();

        // independent composition with plain 4x4 arithmetic
        let tr = read_calib_tr(&calib).unwrap();
        let p = mat4_from_3x4(&parse_floats(&format!(
            "{c2} {} 0 1.5 {s2} {c2} 0 2.5 0 0 1 -0.5",
            -s2
        )));
        let expected = tr.try_inverse().unwrap() * p * tr;
        let got = &poses[0];
        for r in 0..3 {
            for cc in 0..3 {
                assert_relative_eq!(got.rotation()[(r, cc)], expected[(r, cc)], epsilon = 1e-9);
            }
            assert_relative_eq!(got.translation()[r], expected[(r, 3)], epsilon = 1e-9);
        }
    }

    #[test]
    fn poses_reject_malformed_line_with_position() {
        let dir = tempfile::tempdir().unwrap();
        let calib = write_calib(dir.path(), "1 0 0 0 0 1 0 0 0 0 1 0");
        let poses_path = dir.path().join("poses.txt");
        fs::write(&poses_path, "1 0 0 0 0 1 0 0 0 0 1 0\n1 2 3\n").unwrap();
        match read_kitti_poses(&poses_path, &calib) {
            Err(Error::BadPoseFile { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected BadPoseFile, got {other:?}"),
        }
    }

    #[test]
    fn missing_tr_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let calib = dir.path().join("calib.txt");
        fs::write(&calib, "P0: 1 0 0 0 0 1 0 0 0 0 1 0\n").unwrap();
        assert!(read_calib_tr(&calib).is_err());
    }

    #[test]
    fn pose_write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let poses_path = dir.path().join("poses.txt");
        let calib_path = dir.path().join("calib.txt");
        let original = vec![
            Pose::identity(),
            Pose::from_yaw(0.4, [1.0, 2.0, 0.1]),
            Pose::from_yaw(-1.2, [-3.0, 0.5, 0.0]),
        ];
        write_kitti_poses(&poses_path, &calib_path, &original).unwrap();
        let back = read_kitti_poses(&poses_path, &calib_path).unwrap();
        assert_eq!(back.len(), original.len());
        for (a, b) in back.iter().zip(&original) {
            for r in 0..3 {
                for c in 0..3 {
                    assert_relative_eq!(
                        a.rotation()[(r, c)],
                        b.rotation()[(r, c)],
                        epsilon = 1e-8
                    );
                }
                assert_relative_eq!(a.translation()[r], b.translation()[r], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn voxel_triple_golden_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::new((8, 4, 2), [0.0; 3], 1.0, 19).unwrap();
        let n = spec.voxel_count();

        // golden: all-zero files decode to all-empty
        let bin = dir.path().join("g.bin");
        let label = dir.path().join("g.label");
        let invalid = dir.path().join("g.invalid");
        fs::write(&bin, vec![0u8; n / 8]).unwrap();
        fs::write(&label, vec![0u8; n * 2]).unwrap();
        fs::write(&invalid, vec![0u8; n / 8]).unwrap();
        let grid =
            read_kitti_voxels(&bin, &label, &invalid, &spec, &LearningMap::kitti_default())
                .unwrap();
        assert!(grid.values().iter().all(|&v| v == 0));

        // golden: first invalid bit marks voxel (0,0,0)
        let mut inv = vec![0u8; n / 8];
        inv[0] = 0x80;
        fs::write(&invalid, inv).unwrap();
        let grid =
            read_kitti_voxels(&bin, &label, &invalid, &spec, &LearningMap::kitti_default())
                .unwrap();
        assert_eq!(grid.get_flat(0), IGNORE_LABEL);
        assert!(grid.values()[1..].iter().all(|&v| v == 0));

        // golden: occupancy + raw label 10 (car) maps to train id 1
        let mut occ = vec![0u8; n / 8];
        occ[0] = 0x40; // second voxel, MSB-first
        fs::write(&bin, occ).unwrap();
        let mut labels = vec![0u8; n * 2];
        labels[2] = 10; // u16 LE at voxel 1
        fs::write(&label, labels).unwrap();
        let grid =
            read_kitti_voxels(&bin, &label, &invalid, &spec, &LearningMap::kitti_default())
                .unwrap();
        assert_eq!(grid.get_flat(1), 1);

        // random grid round trip through the writer, identity map
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec_small = GridSpec::new((8, 4, 2), [0.0; 3], 1.0, 6).unwrap();
        let values: Vec<u16> = (0..n)
            .map(|_| match rng.random_range(0..4) {
                0 => 0,
                1 => IGNORE_LABEL,
                _ => rng.random_range(1..=6),
            })
            .collect();
        let grid = LabelGrid::from_values(spec_small.clone(), values).unwrap();
        write_kitti_voxels(&bin, &label, &invalid, &grid).unwrap();
        let back = read_kitti_voxels(
            &bin,
            &label,
            &invalid,
            &spec_small,
            &LearningMap::identity(6),
        )
        .unwrap();
        assert_eq!(back, grid);

        // file-level round trip of the raw helpers
        let bits: Vec<bool> = (0..n).map(|_| rng.random_range(0..2) == 1).collect();
        write_packed_bits(&bin, &bits).unwrap();
        assert_eq!(read_packed_bits(&bin, n).unwrap(), bits);
        let raw: Vec<u16> = (0..n).map(|_| rng.random_range(0..u16::MAX)).collect();
        write_labels_u16(&label, &raw).unwrap();
        assert_eq!(read_labels_u16(&label, n).unwrap(), raw);
    }

    #[test]
    fn voxel_size_mismatch_errors() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::new((8, 4, 2), [0.0; 3], 1.0, 19).unwrap();
        let bin = dir.path().join("b.bin");
        fs::write(&bin, vec![0u8; 3]).unwrap();
        assert!(matches!(
            read_packed_bits(&bin, spec.voxel_count()),
            Err(Error::BadVoxelFile { expected: 8, got: 3, .. })
        ));
    }

    #[test]
    fn learning_map_unmapped_is_ignore() {
        let map = LearningMap::kitti_default();
        assert_eq!(map.apply(10), 1);
        assert_eq!(map.apply(81), 19);
        assert_eq!(map.apply(12345), IGNORE_LABEL);
        assert_eq!(map.num_classes(), 19);
    }
}
