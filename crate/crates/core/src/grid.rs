//! Voxel grid geometry and the dense label / probability grid types.
//!
//! Grids are stored as flat arrays in x-major order (`ix` fastest), matching
//! the voxel file layout used for I/O. Class index 0 means empty, 1..=C are
//! semantic classes and [`IGNORE_LABEL`] marks unknown / unsupervised voxels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label value marking a voxel as ignored / unknown.
pub const IGNORE_LABEL: u16 = 255;

/// Geometry of a dense voxel grid: extents, placement and class count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Voxel counts along x, y, z.
    pub dims: (usize, usize, usize),
    /// Minimum corner of the grid in the sensor frame, meters.
    pub origin: [f64; 3],
    /// Edge length of a voxel, meters (uniform).
    pub voxel_size: f64,
    /// Number of non-empty semantic classes C.
    pub num_classes: u16,
}

impl GridSpec {
    pub fn new(
        dims: (usize, usize, usize),
        origin: [f64; 3],
        voxel_size: f64,
        num_classes: u16,
    ) -> Result<Self> {
        let spec = Self {
            dims,
            origin,
            voxel_size,
            num_classes,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The real-data grid: 256x256x32 voxels of 0.2 m starting at
    /// (0, -25.6, -2.0) m, 19 semantic classes.
    pub fn kitti_default() -> Self {
        Self {
            dims: (256, 256, 32),
            origin: [0.0, -25.6, -2.0],
            voxel_size: 0.2,
            num_classes: 19,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (l, w, h) = self.dims;
        if l < 1 || w < 1 || h < 1 {
            return Err(Error::InvalidSpec(format!(
                "dims must all be >= 1, got {:?}",
                self.dims
            )));
        }
        if !(self.voxel_size > 0.0) || !self.voxel_size.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "voxel_size must be positive, got {}",
                self.voxel_size
            )));
        }
        if self.origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("origin must be finite".into()));
        }
        if self.num_classes < 1 {
            return Err(Error::InvalidSpec("num_classes must be >= 1".into()));
        }
        Ok(())
    }

    /// Total voxel count L*W*H.
    pub fn voxel_count(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    /// Probability channels per voxel (C + 1, channel 0 = empty).
    pub fn channels(&self) -> usize {
        self.num_classes as usize + 1
    }

    pub fn contains(&self, v: VoxelIndex) -> bool {
        v.ix >= 0
            && v.iy >= 0
            && v.iz >= 0
            && (v.ix as usize) < self.dims.0
            && (v.iy as usize) < self.dims.1
            && (v.iz as usize) < self.dims.2
    }

    /// Flat index in x-major order. Caller must ensure `v` is in bounds.
    pub fn linear_index(&self, v: VoxelIndex) -> usize {
        debug_assert!(self.contains(v));
        v.ix as usize + self.dims.0 * (v.iy as usize + self.dims.1 * v.iz as usize)
    }

    /// Inverse of [`linear_index`](Self::linear_index).
    pub fn voxel_at(&self, flat: usize) -> VoxelIndex {
        let ix = flat % self.dims.0;
        let rest = flat / self.dims.0;
        let iy = rest % self.dims.1;
        let iz = rest / self.dims.1;
        VoxelIndex::new(ix as i32, iy as i32, iz as i32)
    }

    /// Center of a voxel in meters.
    pub fn voxel_center(&self, v: VoxelIndex) -> [f64; 3] {
        [
            self.origin[0] + (v.ix as f64 + 0.5) * self.voxel_size,
            self.origin[1] + (v.iy as f64 + 0.5) * self.voxel_size,
            self.origin[2] + (v.iz as f64 + 0.5) * self.voxel_size,
        ]
    }

    /// Convert a point in meters to continuous voxel units (origin at the
    /// grid corner, one unit per voxel edge).
    pub fn to_voxel_units(&self, p: [f64; 3]) -> [f64; 3] {
        [
            (p[0] - self.origin[0]) / self.voxel_size,
            (p[1] - self.origin[1]) / self.voxel_size,
            (p[2] - self.origin[2]) / self.voxel_size,
        ]
    }
}

/// Integer voxel coordinates. May be out of bounds; operations that require
/// in-bounds indices check explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VoxelIndex {
    pub ix: i32,
    pub iy: i32,
    pub iz: i32,
}

impl VoxelIndex {
    pub fn new(ix: i32, iy: i32, iz: i32) -> Self {
        Self { ix, iy, iz }
    }
}

/// Bin a point (meters) into its voxel. Returns `None` when the point falls
/// outside the grid.
pub fn point_to_voxel(p: [f64; 3], spec: &GridSpec) -> Result<Option<VoxelIndex>> {
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinitePoint(p[0], p[1], p[2]));
    }
    let u = spec.to_voxel_units(p);
    // `as` saturates, so far-away points stay representable and flagged.
    let v = VoxelIndex::new(
        u[0].floor() as i32,
        u[1].floor() as i32,
        u[2].floor() as i32,
    );
    Ok(if spec.contains(v) { Some(v) } else { None })
}

/// Dense grid of class indices, one per voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    spec: GridSpec,
    values: Vec<u16>,
}

impl LabelGrid {
    /// A grid with every voxel set to `value`.
    pub fn filled(spec: GridSpec, value: u16) -> Self {
        let n = spec.voxel_count();
        Self {
            spec,
            values: vec![value; n],
        }
    }

    /// Build from raw values, checking length and the class range
    /// `{0..=C} + {255}`.
    pub fn from_values(spec: GridSpec, values: Vec<u16>) -> Result<Self> {
        if values.len() != spec.voxel_count() {
            return Err(Error::LengthMismatch {
                expected: spec.voxel_count(),
                got: values.len(),
            });
        }
        let c = spec.num_classes;
        if let Some(&bad) = values.iter().find(|&&v| v > c && v != IGNORE_LABEL) {
            return Err(Error::ClassOutOfRange {
                class: bad,
                channels: spec.channels(),
            });
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn get(&self, v: VoxelIndex) -> u16 {
        self.values[self.spec.linear_index(v)]
    }

    pub fn set(&mut self, v: VoxelIndex, value: u16) {
        let i = self.spec.linear_index(v);
        self.values[i] = value;
    }

    pub fn get_flat(&self, flat: usize) -> u16 {
        self.values[flat]
    }

    pub fn set_flat(&mut self, flat: usize, value: u16) {
        self.values[flat] = value;
    }
}

/// Dense per-voxel class probability grid with C + 1 channels per voxel,
/// stored voxel-major (the channels of one voxel are contiguous).
///
/// Model outputs satisfy "each voxel sums to 1"; binary completion grids
/// produced by [`ProbGrid::to_binary_completion`] are deliberately not
/// renormalized and skip that check.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ProbGrid {
    /// Build from raw values, checking length, non-negativity and per-voxel
    /// sums within 1e-5.
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        let expected = spec.voxel_count() * spec.channels();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        let ch = spec.channels();
        for (vi, probs) in values.chunks_exact(ch).enumerate() {
            let mut sum = 0.0;
            for &p in probs {
                if !(p >= 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "voxel {vi} has negative probability {p}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-5 {
                return Err(Error::InvalidSpec(format!(
                    "voxel {vi} probabilities sum to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { spec, values })
    }

    /// Constructor without the per-voxel sum check, for grids that are
    /// legitimately unnormalized: binary completion channels and the
    /// perturbed grids of finite-difference probes.
    pub fn from_values_unnormalized(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        let expected = spec.voxel_count() * spec.channels();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { spec, values })
    }

    /// Internal infallible variant of
    /// [`from_values_unnormalized`](Self::from_values_unnormalized).
    pub(crate) fn from_values_unchecked(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.voxel_count() * spec.channels());
        Self { spec, values }
    }

    /// Uniform distribution 1/(C+1) everywhere.
    pub fn uniform(spec: GridSpec) -> Self {
        let ch = spec.channels();
        let n = spec.voxel_count();
        Self {
            values: vec![1.0 / ch as f64; n * ch],
            spec,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn channels(&self) -> usize {
        self.spec.channels()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Probabilities of one voxel by flat index.
    pub fn voxel_probs(&self, flat: usize) -> &[f64] {
        let ch = self.channels();
        &self.values[flat * ch..(flat + 1) * ch]
    }

    /// Per-voxel argmax class, ties broken toward the lowest class index.
    pub fn argmax_labels(&self) -> LabelGrid {
        let ch = self.channels();
        let values = self
            .values
            .chunks_exact(ch)
            .map(|probs| argmax(probs) as u16)
            .collect();
        LabelGrid {
            spec: self.spec.clone(),
            values,
        }
    }

    /// Collapse to the two-channel occupancy view: channel 0 is the empty
    /// probability, channel 1 the maximum over the non-empty classes. The
    /// channels are not renormalized.
    pub fn to_binary_completion(&self) -> ProbGrid {
        let ch = self.channels();
        let mut values = Vec::with_capacity(self.spec.voxel_count() * 2);
        for probs in self.values.chunks_exact(ch) {
            let occ = probs[1..].iter().copied().fold(f64::MIN, f64::max);
            values.push(probs[0]);
            values.push(occ);
        }
        let spec = GridSpec {
            num_classes: 1,
            ..self.spec.clone()
        };
        ProbGrid::from_values_unchecked(spec, values)
    }
}

/// Index of the maximum element, first occurrence on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
