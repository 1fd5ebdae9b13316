//! Canonical desk-scale benchmark: a corridor world with walls, blocks,
//! pillars and a moving box, scanned over 50 steps, plus the sparser worlds
//! used to pretrain the built-in model. The test world is deliberately
//! denser than the pretraining worlds so the frozen model underestimates
//! occupancy and online adaptation has something real to recover.
//!
//! Classes: 0 empty, 1 mover (movable), 2 ground, 3 wall, 4 pillar,
//! 5 block.

use crate::comp_map::StaticClassMask;
use crate::error::Result;
use crate::grid::GridSpec;
use crate::model::{pretrain, ToyVoxelModel, TrainScope};
use crate::scheduler::SchedulerConfig;
use crate::sequence::SequenceSource;
use crate::synth::{
    synth_sequence, MovingBox, ScanPattern, SensorPath, SyntheticWorld, WorldBox, WorldCylinder,
};

pub const NUM_CLASSES: u16 = 5;
pub const CLASS_MOVER: u16 = 1;
pub const CLASS_GROUND: u16 = 2;
pub const CLASS_WALL: u16 = 3;
pub const CLASS_PILLAR: u16 = 4;
pub const CLASS_BLOCK: u16 = 5;

/// World z of the ground surface. It sits 2 cm under the top of its voxel
/// layer, so a grazing ray dips into the layer only centimeters before its
/// return and cannot carve whole neighboring ground voxels.
const GROUND_Z: f64 = 0.58;
const SENSOR_Z: f64 = 2.6;

/// Ego-centric grid: 12.8 m x 12.8 m x 3.6 m at 0.4 m voxels, bottom layer
/// aligned with the ground slab.
pub fn benchmark_spec() -> GridSpec {
    GridSpec::new((32, 32, 9), [-6.4, -6.4, -2.4], 0.4, NUM_CLASSES).unwrap()
}

pub fn benchmark_mask() -> StaticClassMask {
    StaticClassMask::from_movable_classes(NUM_CLASSES, &[CLASS_MOVER])
}

fn base_pattern() -> ScanPattern {
    ScanPattern {
        rings: 64,
        elev_min_deg: -44.0,
        elev_max_deg: 2.0,
        max_range: 16.0,
    }
}

fn sensor(start_x: f64, start_y: f64) -> SensorPath {
    SensorPath {
        start: [start_x, start_y, SENSOR_Z],
        velocity: [0.3, 0.0, 0.0],
        yaw0: 0.0,
        yaw_rate: 0.0,
    }
}

// Solids are snapped to the voxel lattice so that the voxel containing a
// surface return also has its center inside the solid: horizontal min faces
// sit 0.1 m past a voxel boundary, max faces 0.1 m before one, and tops 0.1 m
// above a voxel-center height. Otherwise the supervision marks voxels whose
// centers the ground truth calls empty, and the two sides fight.

fn block(x0: f64, y0: f64, dx: f64, dy: f64) -> WorldBox {
    WorldBox {
        min: [x0, y0, GROUND_Z],
        max: [x0 + dx, y0 + dy, 1.7],
        class: CLASS_BLOCK,
    }
}

fn pillar(x: f64, y: f64) -> WorldCylinder {
    WorldCylinder {
        center: [x, y],
        radius: 0.18,
        z_min: GROUND_Z,
        z_max: 2.5,
        class: CLASS_PILLAR,
    }
}

fn wall(x0: f64, x1: f64, y0: f64, y1: f64) -> WorldBox {
    WorldBox {
        min: [x0, y0, GROUND_Z],
        max: [x1, y1, 2.1],
        class: CLASS_WALL,
    }
}

/// A flying box (a drone crossing the corridor): its height band is what
/// lets the pretrained head recognize the movable class, so the carving
/// rejection path is exercised end-to-end.
fn drone(x0: f64, y0: f64, vx: f64, vy: f64) -> MovingBox {
    MovingBox {
        shape: WorldBox {
            min: [x0, y0, 1.9],
            max: [x0 + 1.4, y0 + 1.0, 2.5],
            class: CLASS_MOVER,
        },
        velocity: [vx, vy, 0.0],
    }
}

/// The evaluation world: a walled corridor with occluding blocks, pillars
/// and one crossing mover.
pub fn benchmark_world() -> SyntheticWorld {
    SyntheticWorld {
        ground_height: GROUND_Z,
        ground_thickness: 0.38,
        ground_class: CLASS_GROUND,
        boxes: vec![
            wall(-14.1, 26.3, 5.3, 5.9),
            wall(-14.1, 26.3, -5.9, -5.3),
            block(-2.7, 2.1, 1.4, 1.4),
            block(1.3, -3.5, 1.0, 1.0),
            block(4.5, 1.3, 1.4, 1.4),
            block(8.1, -2.7, 1.0, 1.4),
            block(11.3, 2.1, 1.4, 1.0),
            block(14.5, -3.5, 1.0, 1.4),
        ],
        cylinders: vec![
            pillar(0.6, -4.2),
            pillar(5.4, 3.8),
            pillar(9.8, -3.8),
            pillar(13.8, 4.2),
        ],
        movers: vec![drone(-5.1, -1.5, 0.55, 0.0)],
        sensor: sensor(-6.0, 0.3),
        pattern: base_pattern(),
        seed: 11,
    }
}

/// Sparser pretraining worlds: fewer and smaller obstacles, no long walls,
/// so the pretrained model's completion prior underestimates the test
/// world's density.
pub fn pretrain_worlds() -> Vec<SyntheticWorld> {
    let a = SyntheticWorld {
        ground_height: GROUND_Z,
        ground_thickness: 0.38,
        ground_class: CLASS_GROUND,
        boxes: vec![block(2.1, 1.3, 1.0, 1.0), block(7.3, -2.7, 1.0, 1.0)],
        cylinders: vec![pillar(4.2, -3.0)],
        movers: vec![drone(0.1, 2.9, 0.4, 0.0)],
        sensor: sensor(-4.0, -0.4),
        pattern: base_pattern(),
        seed: 21,
    };
    let mut b = a.clone();
    b.boxes = vec![
        block(-2.3, -3.1, 1.0, 1.4),
        block(4.9, 2.5, 1.4, 1.0),
        wall(-8.3, 14.1, 6.1, 6.7),
    ];
    b.cylinders = vec![pillar(1.4, 4.2), pillar(8.2, -3.4)];
    b.movers = vec![drone(-1.9, -0.7, 0.5, 0.0)];
    b.sensor = sensor(-5.0, 0.8);
    b.seed = 22;
    // a third calmer world with only ground and a pillar
    let mut c = a.clone();
    c.boxes = vec![block(3.7, -1.5, 1.4, 1.4)];
    c.cylinders = vec![pillar(-1.0, 3.0)];
    c.movers = vec![];
    c.sensor = sensor(-3.0, -1.2);
    c.seed = 23;
    vec![a, b, c]
}

pub const PRETRAIN_STEPS_PER_WORLD: u64 = 10;
pub const PRETRAIN_RAYS_PER_SCAN: u32 = 16384;
pub const PRETRAIN_EPOCHS: usize = 120;
pub const PRETRAIN_LR: f64 = 1e-2;

/// Pretrain the built-in model on the sparse worlds. Only the shared head
/// is trained (the spatial bias grid is the online-adaptation surface), so
/// the result captures general density-to-class rules rather than the
/// training scenes' layouts. Deterministic for a given seed.
pub fn pretrain_benchmark_model(seed: u64) -> Result<ToyVoxelModel> {
    let spec = benchmark_spec();
    let mut dataset = Vec::new();
    for world in pretrain_worlds() {
        let mut source = synth_sequence(
            &world,
            &spec,
            PRETRAIN_STEPS_PER_WORLD,
            PRETRAIN_RAYS_PER_SCAN,
            seed,
        )?;
        while let Some(step) = source.next_step()? {
            dataset.push((step.cloud, step.gt.expect("synthetic steps carry GT")));
        }
    }
    let mut model =
        ToyVoxelModel::random_init(spec, ToyVoxelModel::DEFAULT_RADII.to_vec(), seed);
    model.set_train_scope(TrainScope::HeadOnly);
    let (mut trained, _) = pretrain(model, &dataset, PRETRAIN_EPOCHS, PRETRAIN_LR, seed)?;
    // online adaptation touches only the spatial layer, like updating just
    // the final sub-network of a full model
    trained.set_train_scope(TrainScope::SpatialOnly);
    Ok(trained)
}

/// Scheduler configuration for the benchmark. Learning rates are scaled up
/// from the real-data defaults because the built-in model is far smaller
/// than a full SSC network, and the reliability threshold is raised to 0.9
/// because the small head is overconfident in free space; every other knob
/// keeps its default.
pub fn benchmark_scheduler_config() -> SchedulerConfig {
    let mut config = SchedulerConfig::new(benchmark_mask());
    config.lr_moment = 1.0;
    config.lr_gradual = 0.2;
    config.tau_reliability = 0.9;
    config
}

pub const BENCHMARK_STEPS: u64 = 50;
pub const BENCHMARK_RAYS_PER_SCAN: u32 = 16384;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_world_is_not_degenerate() {
        let spec = benchmark_spec();
        assert!(synth_sequence(&benchmark_world(), &spec, BENCHMARK_STEPS, 64, 0).is_ok());
        for world in pretrain_worlds() {
            assert!(synth_sequence(&world, &spec, PRETRAIN_STEPS_PER_WORLD, 64, 0).is_ok());
        }
    }

    #[test]
    fn ground_surface_aligns_with_voxel_grid() {
        // points on the ground bin into the same voxel layer that the GT
        // rasterizer labels as ground
        let world = benchmark_world();
        let spec = benchmark_spec();
        let (cloud, classes) = world.scan(0, 1024, 0).unwrap();
        let gt = world.rasterize_gt(&spec, 0);
        let mut checked = 0;
        for (p, &c) in cloud.points().iter().zip(&classes) {
            if c != CLASS_GROUND {
                continue;
            }
            if let Ok(Some(v)) = crate::grid::point_to_voxel(*p, &spec) {
                assert_eq!(
                    gt.get(v),
                    CLASS_GROUND,
                    "ground point at {p:?} bins into a non-ground GT voxel"
                );
                checked += 1;
            }
        }
        assert!(checked > 100, "too few ground returns to trust alignment");
    }
}
