//! Reliability scoring, thresholded pseudo ground truth and cross-moment
//! consensus aggregation.

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::grid::{point_to_voxel, GridSpec, LabelGrid, ProbGrid, IGNORE_LABEL};

/// One reliability scalar in [0, 1] per voxel: 1 minus the normalized
/// Shannon entropy of the voxel's class distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ReliabilityGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-voxel reliability `R = 1 - H(p)/ln(C+1)` with natural-log entropy
/// and `0 ln 0 = 0`.
pub fn reliability(p: &ProbGrid) -> ReliabilityGrid {
    let ch = p.channels();
    let max_entropy = (ch as f64).ln();
    let values = p
        .values()
        .chunks_exact(ch)
        .map(|probs| {
            let h: f64 = probs
                .iter()
                .map(|&q| if q > 0.0 { -q * q.ln() } else { 0.0 })
                .sum();
            (1.0 - h / max_entropy).clamp(0.0, 1.0)
        })
        .collect();
    ReliabilityGrid {
        spec: p.spec().clone(),
        values,
    }
}

/// Thresholded pseudo ground truth: the argmax class where reliability
/// strictly exceeds `tau`, 255 elsewhere.
pub fn pseudo_gt(p: &ProbGrid, tau: f64) -> LabelGrid {
    assert!((0.0..=1.0).contains(&tau), "tau must be in [0, 1]");
    let r = reliability(p);
    let ch = p.channels();
    let mut out = LabelGrid::filled(p.spec().clone(), IGNORE_LABEL);
    for (flat, probs) in p.values().chunks_exact(ch).enumerate() {
        if r.values[flat] > tau {
            out.set_flat(flat, crate::grid::argmax(probs) as u16);
        }
    }
    out
}

/// Merge the current moment's pseudo-GT with another moment's projection:
/// confident current labels are kept, unconfident ones are filled from the
/// projection, and confident disagreements are conservatively dropped to 255.
pub fn aggregate_pseudo_gt(a_cur: &LabelGrid, a_proj: &LabelGrid) -> Result<LabelGrid> {
    if a_cur.spec() != a_proj.spec() {
        return Err(Error::SpecMismatch);
    }
    let mut out = a_cur.clone();
    for flat in 0..a_cur.spec().voxel_count() {
        let cur = a_cur.get_flat(flat);
        let proj = a_proj.get_flat(flat);
        let merged = if cur == IGNORE_LABEL {
            proj
        } else if proj != IGNORE_LABEL && proj != cur {
            IGNORE_LABEL
        } else {
            cur
        };
        out.set_flat(flat, merged);
    }
    Ok(out)
}

/// Project a label grid into another frame by scattering voxel centers.
///
/// Each non-255 source voxel's center is transformed by `t`; the label is
/// written into the destination voxel containing the transformed center.
/// Labels mapping outside the grid are dropped. When several sources land in
/// the same destination voxel, the label whose transformed center lies
/// nearest the destination voxel center wins; exact ties keep the lowest
/// class index.
pub fn project_labels(a: &LabelGrid, t: &Pose) -> LabelGrid {
    let spec = a.spec();
    let mut out = LabelGrid::filled(spec.clone(), IGNORE_LABEL);
    let mut best_d2 = vec![f64::INFINITY; spec.voxel_count()];
    for flat in 0..spec.voxel_count() {
        let label = a.get_flat(flat);
        if label == IGNORE_LABEL {
            continue;
        }
        let center = spec.voxel_center(spec.voxel_at(flat));
        let moved = t.apply(center);
        let Ok(Some(dest)) = point_to_voxel(moved, spec) else {
            continue;
        };
        let dest_flat = spec.linear_index(dest);
        let dc = spec.voxel_center(dest);
        let d2 = (moved[0] - dc[0]).powi(2) + (moved[1] - dc[1]).powi(2) + (moved[2] - dc[2]).powi(2);
        let incumbent = out.get_flat(dest_flat);
        let take = d2 < best_d2[dest_flat]
            || (d2 == best_d2[dest_flat] && (incumbent == IGNORE_LABEL || label < incumbent));
        if take {
            best_d2[dest_flat] = d2;
            out.set_flat(dest_flat, label);
        }
    }
    out
}
