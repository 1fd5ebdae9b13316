//! Independent reference implementations backing the test suites.
//!
//! Everything here is deliberately written from first principles (interval
//! arithmetic, dense sampling, brute-force set enumeration, finite
//! differences) and shares no code with the production paths it checks.

use crate::grid::{GridSpec, VoxelIndex};

/// Length (in segment parameter t, 0..1) of the intersection between the
/// open segment `origin -> end` and the interior of the unit voxel at `v`.
/// Coordinates are in voxel units. Returns 0 when the segment only touches
/// a face, edge or corner.
pub fn segment_voxel_overlap(origin: [f64; 3], end: [f64; 3], v: VoxelIndex) -> f64 {
    let lo = [v.ix as f64, v.iy as f64, v.iz as f64];
    let mut t_enter = 0.0_f64;
    let mut t_exit = 1.0_f64;
    for k in 0..3 {
        let d = end[k] - origin[k];
        let (mut a, mut b);
        if d.abs() < 1e-300 {
            if origin[k] <= lo[k] || origin[k] >= lo[k] + 1.0 {
                return 0.0;
            }
            continue;
        } else {
            a = (lo[k] - origin[k]) / d;
            b = (lo[k] + 1.0 - origin[k]) / d;
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
        }
        t_enter = t_enter.max(a);
        t_exit = t_exit.min(b);
    }
    (t_exit - t_enter).max(0.0)
}

/// Voxels hit by dense samples along the segment from `origin` to the center
/// of `target` (voxel units), in first-visit order, restricted to the grid
/// and excluding both the origin's voxel and the target.
pub fn sampled_segment_voxels(
    origin: [f64; 3],
    target: VoxelIndex,
    spec: &GridSpec,
    step: f64,
) -> Vec<VoxelIndex> {
    let end = [
        target.ix as f64 + 0.5,
        target.iy as f64 + 0.5,
        target.iz as f64 + 0.5,
    ];
    let d = [end[0] - origin[0], end[1] - origin[1], end[2] - origin[2]];
    let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let origin_cell = VoxelIndex::new(
        origin[0].floor() as i32,
        origin[1].floor() as i32,
        origin[2].floor() as i32,
    );
    let steps = (len / step).ceil() as usize;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for s in 0..=steps {
        let t = (s as f64 / steps.max(1) as f64).min(1.0);
        let p = [
            origin[0] + t * d[0],
            origin[1] + t * d[1],
            origin[2] + t * d[2],
        ];
        let v = VoxelIndex::new(
            p[0].floor() as i32,
            p[1].floor() as i32,
            p[2].floor() as i32,
        );
        if v == origin_cell || v == target || !spec.contains(v) {
            continue;
        }
        if seen.insert(v) {
            out.push(v);
        }
    }
    out
}

/// Lovász extension of the Jaccard loss evaluated from its set-function
/// definition: sort errors descending, and for every prefix S_k compute the
/// Jaccard loss of mispredicting exactly S_k by recounting from scratch.
/// `errors[i]` is the error of element i, `positive[i]` whether it belongs
/// to the ground-truth class.
pub fn lovasz_extension_brute_force(errors: &[f64], positive: &[bool]) -> f64 {
    assert_eq!(errors.len(), positive.len());
    let n = errors.len();
    if n == 0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| errors[b].partial_cmp(&errors[a]).unwrap());

    let jaccard_loss_of_prefix = |k: usize| -> f64 {
        // Misprediction set = first k sorted elements.
        let mispredicted: std::collections::HashSet<usize> =
            order[..k].iter().copied().collect();
        let mut inter = 0usize; // |P \ M|
        let mut union = 0usize; // |P u M|
        for i in 0..n {
            let pos = positive[i];
            let mis = mispredicted.contains(&i);
            if pos && !mis {
                inter += 1;
            }
            if pos || mis {
                union += 1;
            }
        }
        if union == 0 {
            0.0
        } else {
            1.0 - inter as f64 / union as f64
        }
    };

    let mut loss = 0.0;
    for k in 1..=n {
        let delta = jaccard_loss_of_prefix(k) - jaccard_loss_of_prefix(k - 1);
        loss += errors[order[k - 1]] * delta;
    }
    loss
}

/// Central finite-difference gradient of `f` at `x` with step `h`.
pub fn finite_diff_gradient<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Relative error between an analytic and a numeric derivative, with an
/// absolute escape for near-zero pairs.
pub fn gradient_rel_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs());
    if denom < 1e-8 {
        0.0
    } else {
        (analytic - numeric).abs() / denom.max(1e-6)
    }
}
