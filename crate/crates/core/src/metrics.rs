//! Intersection-over-union metric accumulation.
//!
//! Per-class counters plus binary occupancy counters. Ground-truth voxels
//! labeled 255 are excluded from every count. Classes whose union stays zero
//! are excluded from the mean rather than counted as zero.

use crate::error::{Error, Result};
use crate::grid::{LabelGrid, IGNORE_LABEL};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricAccumulator {
    num_classes: u16,
    intersection: Vec<u64>,
    union: Vec<u64>,
    occ_intersection: u64,
    occ_union: u64,
    valid_voxels: u64,
}

impl MetricAccumulator {
    pub fn new(num_classes: u16) -> Self {
        Self {
            num_classes,
            intersection: vec![0; num_classes as usize],
            union: vec![0; num_classes as usize],
            occ_intersection: 0,
            occ_union: 0,
            valid_voxels: 0,
        }
    }

    pub fn num_classes(&self) -> u16 {
        self.num_classes
    }

    pub fn valid_voxels(&self) -> u64 {
        self.valid_voxels
    }

    /// Add one prediction/ground-truth pair.
    pub fn accumulate(&mut self, pred: &LabelGrid, gt: &LabelGrid) -> Result<()> {
        if pred.spec() != gt.spec() {
            return Err(Error::SpecMismatch);
        }
        if gt.spec().num_classes != self.num_classes {
            return Err(Error::SpecMismatch);
        }
        for (&p, &g) in pred.values().iter().zip(gt.values()) {
            if g == IGNORE_LABEL {
                continue;
            }
            self.valid_voxels += 1;
            for c in 1..=self.num_classes {
                let hit_p = p == c;
                let hit_g = g == c;
                if hit_p && hit_g {
                    self.intersection[c as usize - 1] += 1;
                }
                if hit_p || hit_g {
                    self.union[c as usize - 1] += 1;
                }
            }
            let occ_p = p != 0 && p != IGNORE_LABEL;
            let occ_g = g != 0;
            if occ_p && occ_g {
                self.occ_intersection += 1;
            }
            if occ_p || occ_g {
                self.occ_union += 1;
            }
        }
        Ok(())
    }

    /// Merge another accumulator (same class count) into this one.
    pub fn merge(&mut self, other: &MetricAccumulator) -> Result<()> {
        if other.num_classes != self.num_classes {
            return Err(Error::SpecMismatch);
        }
        for c in 0..self.num_classes as usize {
            self.intersection[c] += other.intersection[c];
            self.union[c] += other.union[c];
        }
        self.occ_intersection += other.occ_intersection;
        self.occ_union += other.occ_union;
        self.valid_voxels += other.valid_voxels;
        Ok(())
    }

    /// IoU of one semantic class in [0, 1]; `None` when the class never
    /// appears in prediction or ground truth.
    pub fn class_iou(&self, class: u16) -> Option<f64> {
        assert!(class >= 1 && class <= self.num_classes);
        let u = self.union[class as usize - 1];
        (u > 0).then(|| self.intersection[class as usize - 1] as f64 / u as f64)
    }

    /// Mean IoU over the classes with nonzero union, in [0, 1].
    pub fn miou(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0;
        for c in 1..=self.num_classes {
            if let Some(iou) = self.class_iou(c) {
                sum += iou;
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Binary occupancy IoU in [0, 1].
    pub fn ciou(&self) -> f64 {
        if self.occ_union == 0 {
            0.0
        } else {
            self.occ_intersection as f64 / self.occ_union as f64
        }
    }
}
