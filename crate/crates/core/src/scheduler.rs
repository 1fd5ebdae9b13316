//! The dual moment/gradual optimization loop.
//!
//! Each step spawns a fresh "moment" model from the pretrained weights and
//! adapts it with supervision built from a past observation, while a
//! persistent "gradual" model receives delayed updates: the current
//! observation supervises the gradual model's earlier prediction, so future
//! information flows into the parameters without ever being read early. The
//! two predictions are fused by trusting the gradual model only on voxels it
//! labels as static categories.

use serde::{Deserialize, Serialize};

use crate::comp_map::{build_comp_map, classify_points, StaticClassMask};
use crate::error::{Error, Result};
use crate::geometry::{perturb_pose, relative_pose, transform_cloud, PointCloud, Pose};
use crate::grid::{GridSpec, LabelGrid, ProbGrid};
use crate::loss::{comp_loss, sem_loss};
use crate::model::SscModel;
use crate::optim::{adam_step, AdamState};
use crate::pseudo_gt::{aggregate_pseudo_gt, project_labels, pseudo_gt};

/// Scheduler configuration. Defaults follow the reference setup: one frame
/// of temporal distance, three inner iterations, learning rates 3e-4 / 3e-5
/// for the moment / gradual models, reliability threshold 0.75.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    /// Temporal distance between the supervised moment and the supervising
    /// moment. 0 is allowed only as the self-supervision-only ablation
    /// (pseudo-GT of the current moment, no cross-moment terms).
    pub frame_diff: u64,
    /// Inner optimization iterations per step for the moment model.
    pub iters_per_step: u32,
    /// Inner iterations for the gradual model; `None` mirrors
    /// `iters_per_step`.
    pub iters_gradual: Option<u32>,
    pub lr_moment: f64,
    pub lr_gradual: f64,
    /// Reliability threshold for pseudo-GT harvesting.
    pub tau_reliability: f64,
    pub static_mask: StaticClassMask,
    /// Skip every update; predictions come from the frozen models.
    pub playback: bool,
    /// Gaussian noise applied to the supervision-construction transforms
    /// (never to evaluation).
    pub pose_noise_sigma: f64,
    pub noise_seed: u64,
    /// Enable the completion (occupancy/emptiness) loss term.
    pub use_comp_loss: bool,
    /// Enable the semantic pseudo-GT loss term.
    pub use_sem_loss: bool,
    /// Enable per-step adaptation of the moment model.
    pub update_moment: bool,
    /// Enable delayed adaptation of the gradual model.
    pub update_gradual: bool,
    /// Apply the gradual gradient through the buffered forward pass (stale
    /// parameters) instead of recomputing the past prediction with the
    /// current parameters.
    pub stored_graph_gradual: bool,
}

impl SchedulerConfig {
    pub fn new(static_mask: StaticClassMask) -> Self {
        Self {
            frame_diff: 1,
            iters_per_step: 3,
            iters_gradual: None,
            lr_moment: 3e-4,
            lr_gradual: 3e-5,
            tau_reliability: 0.75,
            static_mask,
            playback: false,
            pose_noise_sigma: 0.0,
            noise_seed: 0,
            use_comp_loss: true,
            use_sem_loss: true,
            update_moment: true,
            update_gradual: true,
            stored_graph_gradual: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr_moment > 0.0) || !(self.lr_gradual > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.tau_reliability) {
            return Err(Error::Config(format!(
                "tau_reliability {} outside [0, 1]",
                self.tau_reliability
            )));
        }
        if self.pose_noise_sigma < 0.0 {
            return Err(Error::NegativeSigma(self.pose_noise_sigma));
        }
        if !self.playback
            && (self.update_moment || self.update_gradual)
            && !(self.use_comp_loss || self.use_sem_loss)
        {
            return Err(Error::ContradictoryConfig(
                "model updates enabled but every loss term disabled".into(),
            ));
        }
        Ok(())
    }

    fn gradual_iters(&self) -> u32 {
        self.iters_gradual.unwrap_or(self.iters_per_step)
    }
}

/// One buffered step: the inputs and predictions needed to supervise other
/// moments later.
#[derive(Debug, Clone)]
pub struct BufferRecord {
    pub index: u64,
    pub cloud: PointCloud,
    pub pose: Pose,
    pub p_moment: ProbGrid,
    pub p_gradual: ProbGrid,
    /// Gradual-model parameters at prediction time (the saved forward pass).
    pub gradual_params: Vec<f64>,
}

/// Ring buffer of per-step records, evicting strictly oldest-first.
#[derive(Debug, Clone)]
pub struct AdaptBuffer {
    capacity: usize,
    records: std::collections::VecDeque<BufferRecord>,
}

impl AdaptBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            records: std::collections::VecDeque::new(),
        }
    }

    pub fn push(&mut self, record: BufferRecord) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    pub fn get(&self, index: u64) -> Option<&BufferRecord> {
        self.records.iter().find(|r| r.index == index)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

/// Result of one scheduler step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    /// Final fused prediction for this step.
    pub prediction: LabelGrid,
    /// Moment-model probabilities after this step's adaptation.
    pub p_moment: ProbGrid,
    /// Gradual-model probabilities with the current parameters.
    pub p_gradual: ProbGrid,
}

/// Fuse the two model outputs: take the gradual model's label wherever it
/// predicts a static category, the moment model's label everywhere else
/// (empty is not a static category and follows the moment model).
pub fn agg(p_m: &ProbGrid, p_g: &ProbGrid, mask: &StaticClassMask) -> Result<LabelGrid> {
    if p_m.spec() != p_g.spec() {
        return Err(Error::SpecMismatch);
    }
    let ch = p_m.channels();
    let mut out = LabelGrid::filled(p_m.spec().clone(), 0);
    for flat in 0..p_m.spec().voxel_count() {
        let g = crate::grid::argmax(&p_g.values()[flat * ch..(flat + 1) * ch]) as u16;
        let label = if mask.is_static(g) {
            g
        } else {
            crate::grid::argmax(&p_m.values()[flat * ch..(flat + 1) * ch]) as u16
        };
        out.set_flat(flat, label);
    }
    Ok(out)
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"LASN";
const SNAPSHOT_VERSION: u32 = 1;

/// Sequential state machine driving the dual optimization over a stream of
/// scans.
pub struct TtaScheduler<M: SscModel> {
    config: SchedulerConfig,
    pretrained: M,
    gradual: M,
    gradual_opt: AdamState,
    buffer: AdaptBuffer,
    first_index: Option<u64>,
    last_index: Option<u64>,
    steps_processed: u64,
}

impl<M: SscModel> TtaScheduler<M> {
    /// Build a scheduler around a pretrained model; the gradual model starts
    /// as a copy of it.
    pub fn new(config: SchedulerConfig, pretrained: M) -> Result<Self> {
        config.validate()?;
        let gradual = pretrained.clone();
        let gradual_opt = AdamState::new(config.lr_gradual, pretrained.param_count());
        let capacity = config.frame_diff as usize + 1;
        Ok(Self {
            config,
            pretrained,
            gradual,
            gradual_opt,
            buffer: AdaptBuffer::new(capacity),
            first_index: None,
            last_index: None,
            steps_processed: 0,
        })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.config
    }

    pub fn gradual_model(&self) -> &M {
        &self.gradual
    }

    pub fn buffer(&self) -> &AdaptBuffer {
        &self.buffer
    }

    pub fn steps_processed(&self) -> u64 {
        self.steps_processed
    }

    /// Process one scan and return the fused prediction. Steps must arrive
    /// with strictly increasing indices.
    pub fn step(&mut self, index: u64, cloud: &PointCloud, pose: &Pose) -> Result<StepOutput> {
        if let Some(last) = self.last_index {
            if index <= last {
                return Err(Error::OutOfOrderStep { last, got: index });
            }
        }
        if self.first_index.is_none() {
            self.first_index = Some(index);
        }

        // Fresh moment model every step.
        let mut moment = self.pretrained.clone();
        let mut p_m = moment.predict(cloud);
        let mut p_g = self.gradual.predict(cloud);
        self.buffer.push(BufferRecord {
            index,
            cloud: cloud.clone(),
            pose: pose.clone(),
            p_moment: p_m.clone(),
            p_gradual: p_g.clone(),
            gradual_params: self.gradual.params(),
        });

        let adapting =
            !self.config.playback && (self.config.update_moment || self.config.update_gradual);
        let source_index = index.checked_sub(self.config.frame_diff);
        let source_available = source_index
            .is_some_and(|j| self.first_index.is_some_and(|first| j >= first));

        if adapting && source_available {
            let j = source_index.unwrap();
            let record = self
                .buffer
                .get(j)
                .ok_or(Error::BufferMiss(j))?
                .clone();
            self.adapt(index, cloud, pose, &mut moment, &p_m, &record)?;
            p_m = moment.predict(cloud);
            p_g = self.gradual.predict(cloud);
        }

        let prediction = if self.config.update_gradual {
            agg(&p_m, &p_g, &self.config.static_mask)?
        } else {
            p_m.argmax_labels()
        };

        self.last_index = Some(index);
        self.steps_processed += 1;
        Ok(StepOutput {
            prediction,
            p_moment: p_m,
            p_gradual: p_g,
        })
    }

    fn adapt(
        &mut self,
        index: u64,
        cloud: &PointCloud,
        pose: &Pose,
        moment: &mut M,
        initial_p_m: &ProbGrid,
        record: &BufferRecord,
    ) -> Result<()> {
        let same_frame = record.index == index;
        let mut t_j_to_i = relative_pose(&record.pose, pose);
        if self.config.pose_noise_sigma > 0.0 {
            // one calibration error per frame pair: the reverse transform is
            // the exact inverse of the perturbed forward one
            let sigma = self.config.pose_noise_sigma;
            t_j_to_i = perturb_pose(&t_j_to_i, sigma, derive_seed(self.config.noise_seed, index, 0))?;
        }
        let t_i_to_j = t_j_to_i.inverse();

        let iters_m = if self.config.update_moment {
            self.config.iters_per_step
        } else {
            0
        };
        let iters_g = if self.config.update_gradual {
            self.config.gradual_iters()
        } else {
            0
        };
        let mut moment_opt = AdamState::new(self.config.lr_moment, moment.param_count());
        let moment_mask = moment.trainable_mask();
        let gradual_mask = self.gradual.trainable_mask();

        for iter in 0..iters_m.max(iters_g) {
            if iter < iters_m {
                // Supervision is rebuilt from the current prediction each
                // iteration; the source moment's prediction stays buffered.
                let p_m_cur = if iter == 0 {
                    initial_p_m.clone()
                } else {
                    moment.predict(cloud)
                };
                let grad_p = self.supervision_gradient(
                    (&record.cloud, &record.p_moment),
                    &p_m_cur,
                    &t_j_to_i,
                    same_frame,
                )?;
                let mut grad = moment.backward(cloud, &grad_p)?;
                apply_mask(&mut grad, &moment_mask);
                let mut params = moment.params();
                adam_step(&mut params, &grad, &mut moment_opt)?;
                moment.set_params(&params)?;
            }
            if iter < iters_g {
                // Delayed update: the current observation supervises the
                // gradual model's prediction at the source moment.
                let p_g_i_cur = self.gradual.predict(cloud);
                let mut grad = if self.config.stored_graph_gradual {
                    let mut old = self.gradual.clone();
                    old.set_params(&record.gradual_params)?;
                    let grad_p = self.supervision_gradient(
                        (cloud, &p_g_i_cur),
                        &record.p_gradual,
                        &t_i_to_j,
                        same_frame,
                    )?;
                    old.backward(&record.cloud, &grad_p)?
                } else {
                    let p_g_j_cur = self.gradual.predict(&record.cloud);
                    let grad_p = self.supervision_gradient(
                        (cloud, &p_g_i_cur),
                        &p_g_j_cur,
                        &t_i_to_j,
                        same_frame,
                    )?;
                    self.gradual.backward(&record.cloud, &grad_p)?
                };
                apply_mask(&mut grad, &gradual_mask);
                let mut params = self.gradual.params();
                adam_step(&mut params, &grad, &mut self.gradual_opt)?;
                self.gradual.set_params(&params)?;
            }
        }
        Ok(())
    }

    /// Gradient of the enabled loss terms with respect to `target_probs`,
    /// where supervision is built from the source moment's cloud and
    /// prediction, transformed into the target frame. With `same_frame`
    /// (frame_diff 0) only the current moment's pseudo-GT is used.
    fn supervision_gradient(
        &self,
        source: (&PointCloud, &ProbGrid),
        target_probs: &ProbGrid,
        transform: &Pose,
        same_frame: bool,
    ) -> Result<Vec<f64>> {
        let (source_cloud, source_probs) = source;
        let mut grad = vec![0.0; target_probs.values().len()];
        if self.config.use_sem_loss {
            let a_target = pseudo_gt(target_probs, self.config.tau_reliability);
            let v_sem = if same_frame {
                a_target
            } else {
                let a_source = pseudo_gt(source_probs, self.config.tau_reliability);
                let a_projected = project_labels(&a_source, transform);
                aggregate_pseudo_gt(&a_target, &a_projected)?
            };
            let (_, g) = sem_loss(target_probs, &v_sem)?;
            for (dst, src) in grad.iter_mut().zip(&g) {
                *dst += src;
            }
        }
        if self.config.use_comp_loss && !same_frame {
            let classes = classify_points(source_cloud, source_probs);
            let transformed = transform_cloud(source_cloud, transform);
            let sensor_origin = transform.translation();
            let v_comp = build_comp_map(
                &transformed,
                &classes,
                sensor_origin,
                &self.config.static_mask,
                target_probs.spec(),
            )?;
            let (_, g) = comp_loss(target_probs, &v_comp)?;
            for (dst, src) in grad.iter_mut().zip(&g) {
                *dst += src;
            }
        }
        Ok(grad)
    }

    /// Serialize the gradual model's parameters together with the grid spec,
    /// run configuration and step counter. The round trip is bit-exact.
    pub fn snapshot_gradual(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        let spec_json = serde_json::to_vec(self.gradual.spec()).expect("spec serializes");
        out.extend_from_slice(&(spec_json.len() as u32).to_le_bytes());
        out.extend_from_slice(&spec_json);
        let config_json = serde_json::to_vec(&self.config).expect("config serializes");
        out.extend_from_slice(&(config_json.len() as u32).to_le_bytes());
        out.extend_from_slice(&config_json);
        out.extend_from_slice(&self.steps_processed.to_le_bytes());
        let params = self.gradual.params();
        out.extend_from_slice(&(params.len() as u64).to_le_bytes());
        for p in params {
            out.extend_from_slice(&p.to_bits().to_le_bytes());
        }
        out
    }

    /// Restore gradual-model parameters from a snapshot, rejecting snapshots
    /// taken with a different grid spec or parameter count.
    pub fn restore_gradual(&mut self, bytes: &[u8]) -> Result<()> {
        let parsed = GradualSnapshot::parse(bytes)?;
        if &parsed.spec != self.gradual.spec() {
            return Err(Error::SnapshotMismatch(format!(
                "snapshot grid spec {:?} vs model {:?}",
                parsed.spec,
                self.gradual.spec()
            )));
        }
        if parsed.params.len() != self.gradual.param_count() {
            return Err(Error::SnapshotMismatch(format!(
                "snapshot has {} parameters, model has {}",
                parsed.params.len(),
                self.gradual.param_count()
            )));
        }
        self.gradual.set_params(&parsed.params)
    }
}

/// Parsed form of a gradual-model snapshot.
pub struct GradualSnapshot {
    pub spec: GridSpec,
    pub config: SchedulerConfig,
    pub steps_processed: u64,
    pub params: Vec<f64>,
}

impl GradualSnapshot {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut cursor = bytes;
        let take = |cursor: &mut &[u8], n: usize| -> Result<Vec<u8>> {
            if cursor.len() < n {
                return Err(Error::CorruptSnapshot("truncated snapshot".into()));
            }
            let (head, rest) = cursor.split_at(n);
            *cursor = rest;
            Ok(head.to_vec())
        };
        let magic = take(&mut cursor, 4)?;
        if magic != SNAPSHOT_MAGIC {
            return Err(Error::CorruptSnapshot("bad snapshot magic".into()));
        }
        let version = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap());
        if version != SNAPSHOT_VERSION {
            return Err(Error::CorruptSnapshot(format!(
                "unsupported snapshot version {version}"
            )));
        }
        let spec_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let spec: GridSpec = serde_json::from_slice(&take(&mut cursor, spec_len)?)
            .map_err(|e| Error::CorruptSnapshot(format!("bad spec: {e}")))?;
        let config_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let config: SchedulerConfig = serde_json::from_slice(&take(&mut cursor, config_len)?)
            .map_err(|e| Error::CorruptSnapshot(format!("bad config: {e}")))?;
        let steps_processed = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
        let count = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()) as usize;
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            let bits = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
            params.push(f64::from_bits(bits));
        }
        if !cursor.is_empty() {
            return Err(Error::CorruptSnapshot("trailing bytes".into()));
        }
        Ok(Self {
            spec,
            config,
            steps_processed,
            params,
        })
    }
}

fn apply_mask(grad: &mut [f64], mask: &Option<Vec<bool>>) {
    if let Some(mask) = mask {
        for (g, &keep) in grad.iter_mut().zip(mask) {
            if !keep {
                *g = 0.0;
            }
        }
    }
}

fn derive_seed(base: u64, index: u64, branch: u64) -> u64 {
    let mut z = base
        ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ branch.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
