//! The SSC model contract and a small differentiable voxel model.
//!
//! The built-in [`ToyVoxelModel`] combines a linear head over an
//! occupancy-density feature pyramid (mean occupancy in cube neighborhoods
//! of several radii via a 3D summed-area table, plus normalized voxel
//! coordinates) with a per-voxel class-bias grid. The shared head captures
//! how local point density maps to classes; the bias grid gives the model
//! spatial capacity, so voxel-localized evidence (an observed return, a
//! carved free-space ray) can move exactly the voxels it concerns. Closed
//! form gradients keep online adaptation cheap; any network satisfying
//! [`SscModel`] can be plugged in instead.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::grid::{point_to_voxel, GridSpec, LabelGrid, ProbGrid};
use crate::loss::sem_loss;
use crate::optim::{adam_step, AdamState};

/// Contract for a semantic scene completion model: point cloud in,
/// per-voxel class probabilities out, with a flat parameter view and a
/// backward pass that replays the forward computation on the input.
pub trait SscModel: Clone + Send {
    fn spec(&self) -> &GridSpec;

    /// Deterministic prediction; output satisfies the probability-grid
    /// invariants.
    fn predict(&self, cloud: &PointCloud) -> ProbGrid;

    fn param_count(&self) -> usize;

    fn params(&self) -> Vec<f64>;

    fn set_params(&mut self, params: &[f64]) -> Result<()>;

    /// Gradient of `sum(grad_output * output)` with respect to the
    /// parameters, replaying the forward pass on `cloud`. `grad_output` has
    /// the layout of `ProbGrid::values()`.
    fn backward(&self, cloud: &PointCloud, grad_output: &[f64]) -> Result<Vec<f64>>;

    /// Optional mask of trainable parameters (true = update). `None` means
    /// all parameters are trainable. Lets a plugged-in network restrict
    /// adaptation to a sub-network.
    fn trainable_mask(&self) -> Option<Vec<bool>> {
        None
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"LAVM";
const CHECKPOINT_VERSION: u32 = 1;

/// Which parameters a training loop may update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainScope {
    /// Head and spatial bias grid.
    All,
    /// Only the shared linear head; the spatial bias grid stays frozen.
    /// Used for pretraining, so the head learns rules that generalize
    /// instead of memorizing the training scenes voxel by voxel.
    HeadOnly,
    /// Only the spatial bias grid; the head stays frozen. Used for online
    /// adaptation, mirroring how a real model would only update its final
    /// spatial layers at test time.
    SpatialOnly,
}

/// Per-voxel softmax classifier: a linear head over occupancy-density
/// features plus a per-voxel class-bias grid (spatial logit offsets).
#[derive(Debug, Clone, PartialEq)]
pub struct ToyVoxelModel {
    spec: GridSpec,
    radii: Vec<u32>,
    /// (C+1) x F, row-major by class.
    weights: Vec<f64>,
    /// C+1 global biases.
    bias: Vec<f64>,
    /// Voxel-major (C+1) logit offsets per voxel.
    voxel_bias: Vec<f64>,
    train_scope: TrainScope,
}

impl ToyVoxelModel {
    /// Default neighborhood radii, in voxels.
    pub const DEFAULT_RADII: [u32; 4] = [0, 1, 2, 4];

    pub fn zeros(spec: GridSpec, radii: Vec<u32>) -> Self {
        let ch = spec.channels();
        let f = radii.len() + 3;
        let n = spec.voxel_count();
        Self {
            spec,
            radii,
            weights: vec![0.0; ch * f],
            bias: vec![0.0; ch],
            voxel_bias: vec![0.0; ch * n],
            train_scope: TrainScope::All,
        }
    }

    pub fn train_scope(&self) -> TrainScope {
        self.train_scope
    }

    pub fn set_train_scope(&mut self, scope: TrainScope) {
        self.train_scope = scope;
    }

    /// Small random initialization of the head, deterministic for a given
    /// seed; the voxel-bias grid starts at zero.
    pub fn random_init(spec: GridSpec, radii: Vec<u32>, seed: u64) -> Self {
        let mut model = Self::zeros(spec, radii);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut model.weights {
            *w = rng.random_range(-0.1..0.1);
        }
        for b in &mut model.bias {
            *b = rng.random_range(-0.1..0.1);
        }
        model
    }

    pub fn feature_count(&self) -> usize {
        self.radii.len() + 3
    }

    pub fn radii(&self) -> &[u32] {
        &self.radii
    }

    /// Per-voxel features: occupancy density of the clamped cube window at
    /// each radius, then normalized ix/L, iy/W, iz/H. Row-major by voxel.
    fn features(&self, cloud: &PointCloud) -> Vec<f64> {
        let spec = &self.spec;
        let (l, w, h) = spec.dims;
        let n = spec.voxel_count();

        let mut occ = vec![0.0f64; n];
        for &p in cloud.points() {
            if let Ok(Some(v)) = point_to_voxel(p, spec) {
                occ[spec.linear_index(v)] = 1.0;
            }
        }

        // 3D summed-area table: sums[x][y][z] = sum of occ over voxels < (x,y,z).
        let sx = l + 1;
        let sy = w + 1;
        let sz = h + 1;
        let at = |x: usize, y: usize, z: usize| x + sx * (y + sy * z);
        let mut sums = vec![0.0f64; sx * sy * sz];
        for z in 1..sz {
            for y in 1..sy {
                let mut row = 0.0;
                for x in 1..sx {
                    row += occ[(x - 1) + l * ((y - 1) + w * (z - 1))];
                    sums[at(x, y, z)] =
                        row + sums[at(x, y, z - 1)] + sums[at(x, y - 1, z)] - sums[at(x, y - 1, z - 1)];
                }
            }
        }
        let box_sum = |x0: usize, y0: usize, z0: usize, x1: usize, y1: usize, z1: usize| {
            // inclusive voxel ranges
            let (x1, y1, z1) = (x1 + 1, y1 + 1, z1 + 1);
            sums[at(x1, y1, z1)] - sums[at(x0, y1, z1)] - sums[at(x1, y0, z1)]
                + sums[at(x0, y0, z1)]
                - sums[at(x1, y1, z0)]
                + sums[at(x0, y1, z0)]
                + sums[at(x1, y0, z0)]
                - sums[at(x0, y0, z0)]
        };

        let nf = self.feature_count();
        let mut feats = vec![0.0f64; n * nf];
        for iz in 0..h {
            for iy in 0..w {
                for ix in 0..l {
                    let flat = ix + l * (iy + w * iz);
                    let row = &mut feats[flat * nf..(flat + 1) * nf];
                    for (fi, &r) in self.radii.iter().enumerate() {
                        let r = r as usize;
                        let x0 = ix.saturating_sub(r);
                        let y0 = iy.saturating_sub(r);
                        let z0 = iz.saturating_sub(r);
                        let x1 = (ix + r).min(l - 1);
                        let y1 = (iy + r).min(w - 1);
                        let z1 = (iz + r).min(h - 1);
                        let volume = ((x1 - x0 + 1) * (y1 - y0 + 1) * (z1 - z0 + 1)) as f64;
                        row[fi] = box_sum(x0, y0, z0, x1, y1, z1) / volume;
                    }
                    row[nf - 3] = ix as f64 / l as f64;
                    row[nf - 2] = iy as f64 / w as f64;
                    row[nf - 1] = iz as f64 / h as f64;
                }
            }
        }
        feats
    }
}

impl SscModel for ToyVoxelModel {
    fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn predict(&self, cloud: &PointCloud) -> ProbGrid {
        let feats = self.features(cloud);
        let ch = self.spec.channels();
        let nf = self.feature_count();
        let n = self.spec.voxel_count();
        let mut values = vec![0.0f64; n * ch];
        let mut logits = vec![0.0f64; ch];
        for flat in 0..n {
            let feat = &feats[flat * nf..(flat + 1) * nf];
            let spatial = &self.voxel_bias[flat * ch..(flat + 1) * ch];
            let mut max = f64::NEG_INFINITY;
            for (c, logit) in logits.iter_mut().enumerate() {
                let mut z = self.bias[c] + spatial[c];
                let row = &self.weights[c * nf..(c + 1) * nf];
                for (wi, fi) in row.iter().zip(feat) {
                    z += wi * fi;
                }
                *logit = z;
                max = max.max(z);
            }
            let out = &mut values[flat * ch..(flat + 1) * ch];
            let mut sum = 0.0;
            for (o, &z) in out.iter_mut().zip(&logits) {
                *o = (z - max).exp();
                sum += *o;
            }
            for o in out.iter_mut() {
                *o /= sum;
            }
        }
        ProbGrid::from_values_unchecked(self.spec.clone(), values)
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len() + self.voxel_bias.len()
    }

    fn params(&self) -> Vec<f64> {
        let mut out = self.weights.clone();
        out.extend_from_slice(&self.bias);
        out.extend_from_slice(&self.voxel_bias);
        out
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let nw = self.weights.len();
        let nb = self.bias.len();
        self.weights.copy_from_slice(&params[..nw]);
        self.bias.copy_from_slice(&params[nw..nw + nb]);
        self.voxel_bias.copy_from_slice(&params[nw + nb..]);
        Ok(())
    }

    fn backward(&self, cloud: &PointCloud, grad_output: &[f64]) -> Result<Vec<f64>> {
        let ch = self.spec.channels();
        let n = self.spec.voxel_count();
        if grad_output.len() != n * ch {
            return Err(Error::LengthMismatch {
                expected: n * ch,
                got: grad_output.len(),
            });
        }
        let probs = self.predict(cloud);
        let feats = self.features(cloud);
        let nf = self.feature_count();
        let mut dw = vec![0.0f64; self.weights.len()];
        let mut db = vec![0.0f64; self.bias.len()];
        let mut dvb = vec![0.0f64; self.voxel_bias.len()];
        for flat in 0..n {
            let g = &grad_output[flat * ch..(flat + 1) * ch];
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            let p = probs.voxel_probs(flat);
            let feat = &feats[flat * nf..(flat + 1) * nf];
            // softmax Jacobian: dz_k = p_k (g_k - sum_j g_j p_j)
            let dot: f64 = g.iter().zip(p).map(|(gv, pv)| gv * pv).sum();
            for k in 0..ch {
                let dz = p[k] * (g[k] - dot);
                if dz == 0.0 {
                    continue;
                }
                db[k] += dz;
                dvb[flat * ch + k] += dz;
                let row = &mut dw[k * nf..(k + 1) * nf];
                for (wi, fi) in row.iter_mut().zip(feat) {
                    *wi += dz * fi;
                }
            }
        }
        dw.extend_from_slice(&db);
        dw.extend_from_slice(&dvb);
        Ok(dw)
    }

    fn trainable_mask(&self) -> Option<Vec<bool>> {
        let head = self.weights.len() + self.bias.len();
        match self.train_scope {
            TrainScope::All => None,
            TrainScope::HeadOnly => {
                let mut mask = vec![true; self.param_count()];
                for slot in mask.iter_mut().skip(head) {
                    *slot = false;
                }
                Some(mask)
            }
            TrainScope::SpatialOnly => {
                let mut mask = vec![false; self.param_count()];
                for slot in mask.iter_mut().skip(head) {
                    *slot = true;
                }
                Some(mask)
            }
        }
    }
}

impl ToyVoxelModel {
    /// Write a versioned binary checkpoint; the round trip is bit-exact.
    pub fn save<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        let (l, w, h) = self.spec.dims;
        for d in [l as u64, w as u64, h as u64] {
            out.write_all(&d.to_le_bytes())?;
        }
        for o in self.spec.origin {
            out.write_all(&o.to_le_bytes())?;
        }
        out.write_all(&self.spec.voxel_size.to_le_bytes())?;
        out.write_all(&(self.spec.num_classes as u32).to_le_bytes())?;
        out.write_all(&(self.radii.len() as u32).to_le_bytes())?;
        for &r in &self.radii {
            out.write_all(&r.to_le_bytes())?;
        }
        for &v in self
            .weights
            .iter()
            .chain(&self.bias)
            .chain(&self.voxel_bias)
        {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load<R: Read>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::CorruptSnapshot("bad model checkpoint magic".into()));
        }
        let version = read_u32(input)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::CorruptSnapshot(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let dims = (
            read_u64(input)? as usize,
            read_u64(input)? as usize,
            read_u64(input)? as usize,
        );
        let origin = [read_f64(input)?, read_f64(input)?, read_f64(input)?];
        let voxel_size = read_f64(input)?;
        let num_classes = read_u32(input)? as u16;
        let spec = GridSpec::new(dims, origin, voxel_size, num_classes)
            .map_err(|e| Error::CorruptSnapshot(e.to_string()))?;
        let num_radii = read_u32(input)? as usize;
        let mut radii = Vec::with_capacity(num_radii);
        for _ in 0..num_radii {
            radii.push(read_u32(input)?);
        }
        let mut model = Self::zeros(spec, radii);
        for i in 0..model.weights.len() {
            model.weights[i] = read_f64(input)?;
        }
        for i in 0..model.bias.len() {
            model.bias[i] = read_f64(input)?;
        }
        for i in 0..model.voxel_bias.len() {
            model.voxel_bias[i] = read_f64(input)?;
        }
        Ok(model)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_bits(u64::from_le_bytes(buf)))
}

/// Supervised pre-training against ground-truth label grids (255 allowed)
/// with the semantic loss and Adam, honoring the model's trainable mask.
/// Sample order is shuffled per epoch, deterministically from `seed`.
/// Returns the trained model and the mean training loss per epoch.
pub fn pretrain(
    model: ToyVoxelModel,
    dataset: &[(PointCloud, LabelGrid)],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<(ToyVoxelModel, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut model = model;
    let mask = model.trainable_mask();
    let mut opt = AdamState::new(lr, model.param_count());
    let mut history = Vec::with_capacity(epochs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for _ in 0..epochs {
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        for &si in &order {
            let (cloud, gt) = &dataset[si];
            let probs = model.predict(cloud);
            let (value, grad_p) = sem_loss(&probs, gt)?;
            let mut grad = model.backward(cloud, &grad_p)?;
            if let Some(mask) = &mask {
                for (g, &keep) in grad.iter_mut().zip(mask) {
                    if !keep {
                        *g = 0.0;
                    }
                }
            }
            let mut params = model.params();
            adam_step(&mut params, &grad, &mut opt)?;
            model.set_params(&params)?;
            epoch_loss += value.total;
        }
        history.push(epoch_loss / dataset.len() as f64);
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::IGNORE_LABEL;
    use crate::oracle;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn spec() -> GridSpec {
        GridSpec::new((6, 5, 4), [0.0; 3], 0.5, 3).unwrap()
    }

    fn scatter_cloud(seed: u64, n: usize) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| {
                [
                    rng.random_range(0.0..3.0),
                    rng.random_range(0.0..2.5),
                    rng.random_range(0.0..2.0),
                ]
            })
            .collect();
        PointCloud::new(points).unwrap()
    }

    #[test]
    fn zero_model_predicts_uniform() {
        let model = ToyVoxelModel::zeros(spec(), ToyVoxelModel::DEFAULT_RADII.to_vec());
        let p = model.predict(&scatter_cloud(1, 20));
        let ch = p.channels();
        for flat in 0..p.spec().voxel_count() {
            for &v in p.voxel_probs(flat) {
                assert_relative_eq!(v, 1.0 / ch as f64, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn large_bias_saturates_softmax() {
        let mut model = ToyVoxelModel::zeros(spec(), vec![0]);
        model.bias[0] = 50.0;
        let p = model.predict(&scatter_cloud(2, 10));
        for flat in 0..p.spec().voxel_count() {
            assert!(p.voxel_probs(flat)[0] > 1.0 - 1e-3);
        }
    }

    #[test]
    fn prediction_is_deterministic_and_normalized() {
        let model = ToyVoxelModel::random_init(spec(), vec![0, 1, 2], 9);
        let cloud = scatter_cloud(3, 50);
        let a = model.predict(&cloud);
        let b = model.predict(&cloud);
        assert_eq!(a, b);
        for flat in 0..a.spec().voxel_count() {
            let sum: f64 = a.voxel_probs(flat).iter().sum();
            assert!((sum - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn clone_predicts_identically_until_updated() {
        let model = ToyVoxelModel::random_init(spec(), vec![0, 2], 4);
        let mut twin = model.clone();
        let cloud = scatter_cloud(5, 30);
        assert_eq!(model.predict(&cloud), twin.predict(&cloud));
        let mut params = twin.params();
        params[0] += 0.5;
        twin.set_params(&params).unwrap();
        assert_ne!(model.predict(&cloud), twin.predict(&cloud));
    }

    #[test]
    fn param_count_matches_shape() {
        let model = ToyVoxelModel::zeros(spec(), vec![0, 1, 2, 4]);
        // head (C+1)(F+1) with F = radii + 3 coordinate features, plus the
        // per-voxel class-bias grid (C+1)*n
        let ch = model.spec().channels();
        let f = model.feature_count();
        let n = model.spec().voxel_count();
        assert_eq!(model.param_count(), ch * (f + 1) + ch * n);
    }

    #[test]
    fn backward_zero_grad_output_is_zero() {
        let model = ToyVoxelModel::random_init(spec(), vec![0, 1], 8);
        let cloud = scatter_cloud(6, 25);
        let n = model.spec().voxel_count() * model.spec().channels();
        let grads = model.backward(&cloud, &vec![0.0; n]).unwrap();
        assert!(grads.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_is_linear_in_grad_output() {
        let model = ToyVoxelModel::random_init(spec(), vec![0, 1], 12);
        let cloud = scatter_cloud(7, 25);
        let n = model.spec().voxel_count() * model.spec().channels();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let combo: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let b1 = model.backward(&cloud, &g1).unwrap();
        let b2 = model.backward(&cloud, &g2).unwrap();
        let bc = model.backward(&cloud, &combo).unwrap();
        for i in 0..bc.len() {
            assert_relative_eq!(bc[i], 2.0 * b1[i] - 0.5 * b2[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let small = GridSpec::new((2, 2, 1), [0.0; 3], 1.0, 2).unwrap();
        let model = ToyVoxelModel::random_init(small.clone(), vec![0, 1], 21);
        let cloud = PointCloud::new(vec![[0.5, 0.5, 0.5], [1.5, 1.2, 0.3]]).unwrap();
        let n = small.voxel_count() * small.channels();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let grad_out: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

        let analytic = model.backward(&cloud, &grad_out).unwrap();
        let params = model.params();
        let objective = |p: &[f64]| {
            let mut m = model.clone();
            m.set_params(p).unwrap();
            let pred = m.predict(&cloud);
            pred.values()
                .iter()
                .zip(&grad_out)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        };
        let numeric = oracle::finite_diff_gradient(objective, &params, 1e-5);
        for i in 0..params.len() {
            let err = oracle::gradient_rel_error(analytic[i], numeric[i]);
            assert!(err < 1e-4, "param {i}: {} vs {} ({err})", analytic[i], numeric[i]);
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let model = ToyVoxelModel::random_init(spec(), vec![0, 1, 4], 33);
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let loaded = ToyVoxelModel::load(&mut buf.as_slice()).unwrap();
        assert_eq!(model, loaded);
        assert!(model
            .params()
            .iter()
            .zip(loaded.params())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        let mut buf = b"not a checkpoint".to_vec();
        assert!(ToyVoxelModel::load(&mut buf.as_slice()).is_err());
        buf.clear();
        ToyVoxelModel::random_init(spec(), vec![0], 1)
            .save(&mut buf)
            .unwrap();
        buf.truncate(buf.len() - 3);
        assert!(ToyVoxelModel::load(&mut buf.as_slice()).is_err());
    }

    fn tiny_dataset() -> Vec<(PointCloud, LabelGrid)> {
        let spec = spec();
        let mut out = Vec::new();
        for seed in 0..4 {
            let cloud = scatter_cloud(seed, 40);
            let mut gt = LabelGrid::filled(spec.clone(), 0);
            for &p in cloud.points() {
                if let Ok(Some(v)) = point_to_voxel(p, &spec) {
                    gt.set(v, 1 + (seed % 3) as u16);
                }
            }
            // some unknown space
            gt.set_flat(0, IGNORE_LABEL);
            out.push((cloud, gt));
        }
        out
    }

    #[test]
    fn pretrain_zero_epochs_is_identity() {
        let model = ToyVoxelModel::random_init(spec(), vec![0, 1], 3);
        let before = model.params();
        let (after, history) = pretrain(model, &tiny_dataset(), 0, 1e-2, 5).unwrap();
        assert_eq!(after.params(), before);
        assert!(history.is_empty());
    }

    #[test]
    fn pretrain_descends() {
        let model = ToyVoxelModel::zeros(spec(), vec![0, 1, 2]);
        let (_, history) = pretrain(model, &tiny_dataset(), 5, 1e-2, 5).unwrap();
        assert!(
            history[4] <= history[0],
            "loss went up: {:?}",
            history
        );
    }

    #[test]
    fn pretrain_is_deterministic() {
        let a = pretrain(
            ToyVoxelModel::zeros(spec(), vec![0, 1]),
            &tiny_dataset(),
            3,
            1e-2,
            9,
        )
        .unwrap()
        .0;
        let b = pretrain(
            ToyVoxelModel::zeros(spec(), vec![0, 1]),
            &tiny_dataset(),
            3,
            1e-2,
            9,
        )
        .unwrap()
        .0;
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn pretrain_rejects_empty_dataset() {
        let model = ToyVoxelModel::zeros(spec(), vec![0]);
        assert!(matches!(
            pretrain(model, &[], 1, 1e-2, 0),
            Err(Error::EmptyDataset)
        ));
    }
}
