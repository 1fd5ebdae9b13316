//! Cross-entropy and Lovász-softmax losses on probability grids, with
//! analytic gradients, and the composite completion / semantic losses.
//!
//! Both losses consume probabilities directly (the model contract exposes
//! probabilities, not logits); gradients are with respect to those
//! probabilities and are chained through the model's softmax by the model's
//! backward pass. Voxels labeled 255 contribute exactly zero to values and
//! gradients.

use crate::error::{Error, Result};
use crate::grid::{LabelGrid, ProbGrid, IGNORE_LABEL};

/// Probabilities are clamped here before taking logs.
const LOG_CLAMP: f64 = 1e-12;

/// Value of one composite loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub ce: f64,
    pub lovasz: f64,
    pub num_supervised_voxels: usize,
}

impl LossValue {
    fn zero() -> Self {
        Self {
            total: 0.0,
            ce: 0.0,
            lovasz: 0.0,
            num_supervised_voxels: 0,
        }
    }

    fn sum(a: &LossValue, b: &LossValue) -> Self {
        Self {
            total: a.total + b.total,
            ce: a.ce + b.ce,
            lovasz: a.lovasz + b.lovasz,
            num_supervised_voxels: a.num_supervised_voxels + b.num_supervised_voxels,
        }
    }
}

fn check_targets(probs: &ProbGrid, target: &LabelGrid) -> Result<()> {
    if probs.spec().dims != target.spec().dims {
        return Err(Error::SpecMismatch);
    }
    let ch = probs.channels();
    for &t in target.values() {
        if t != IGNORE_LABEL && t as usize >= ch {
            return Err(Error::ClassOutOfRange {
                class: t,
                channels: ch,
            });
        }
    }
    Ok(())
}

/// Mean negative log probability of the target class over supervised voxels.
/// Returns the scalar loss and its gradient with respect to `probs`
/// (same layout as `probs.values()`).
pub fn ce_loss(probs: &ProbGrid, target: &LabelGrid) -> Result<(f64, Vec<f64>)> {
    check_targets(probs, target)?;
    let ch = probs.channels();
    let mut grad = vec![0.0; probs.values().len()];
    let n_sup = target.values().iter().filter(|&&t| t != IGNORE_LABEL).count();
    if n_sup == 0 {
        return Ok((0.0, grad));
    }
    let mut loss = 0.0;
    for (flat, &t) in target.values().iter().enumerate() {
        if t == IGNORE_LABEL {
            continue;
        }
        let p = probs.values()[flat * ch + t as usize];
        let clamped = p.max(LOG_CLAMP);
        loss -= clamped.ln();
        if p >= LOG_CLAMP {
            grad[flat * ch + t as usize] = -1.0 / (n_sup as f64 * clamped);
        }
    }
    Ok((loss / n_sup as f64, grad))
}

/// Gradient of the Jaccard loss's Lovász extension for errors sorted in
/// descending order: `g_k = J(k) - J(k-1)` with `J(k)` the Jaccard loss when
/// the top-k errors are active.
fn lovasz_grad(gt_sorted: &[bool]) -> Vec<f64> {
    let gts = gt_sorted.iter().filter(|&&b| b).count() as f64;
    let mut grad = Vec::with_capacity(gt_sorted.len());
    let mut cum_pos = 0.0;
    let mut cum_neg = 0.0;
    let mut prev = 0.0;
    for &positive in gt_sorted {
        if positive {
            cum_pos += 1.0;
        } else {
            cum_neg += 1.0;
        }
        let intersection = gts - cum_pos;
        let union = gts + cum_neg;
        let jaccard = if union > 0.0 {
            1.0 - intersection / union
        } else {
            0.0
        };
        grad.push(jaccard - prev);
        prev = jaccard;
    }
    grad
}

/// Lovász-softmax loss: for every class present among the supervised target
/// voxels, the Lovász extension of the Jaccard loss evaluated on the class's
/// prediction errors, averaged over the present classes. Returns the loss and
/// its analytic subgradient with respect to `probs`.
pub fn lovasz_softmax_loss(probs: &ProbGrid, target: &LabelGrid) -> Result<(f64, Vec<f64>)> {
    check_targets(probs, target)?;
    let ch = probs.channels();
    let mut grad = vec![0.0; probs.values().len()];

    let supervised: Vec<usize> = (0..target.spec().voxel_count())
        .filter(|&flat| target.get_flat(flat) != IGNORE_LABEL)
        .collect();
    if supervised.is_empty() {
        return Ok((0.0, grad));
    }

    let mut present: Vec<u16> = supervised.iter().map(|&f| target.get_flat(f)).collect();
    present.sort_unstable();
    present.dedup();

    let mut total = 0.0;
    for &class in &present {
        let c = class as usize;
        // errors and their d(error)/d(prob) signs
        let mut errors: Vec<f64> = Vec::with_capacity(supervised.len());
        let mut positive: Vec<bool> = Vec::with_capacity(supervised.len());
        for &flat in &supervised {
            let p = probs.values()[flat * ch + c];
            let is_pos = target.get_flat(flat) == class;
            errors.push(if is_pos { 1.0 - p } else { p });
            positive.push(is_pos);
        }
        let mut order: Vec<usize> = (0..errors.len()).collect();
        order.sort_by(|&a, &b| {
            errors[b]
                .partial_cmp(&errors[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let gt_sorted: Vec<bool> = order.iter().map(|&i| positive[i]).collect();
        let coeffs = lovasz_grad(&gt_sorted);
        let mut class_loss = 0.0;
        for (rank, &i) in order.iter().enumerate() {
            class_loss += errors[i] * coeffs[rank];
            let sign = if positive[i] { -1.0 } else { 1.0 };
            grad[supervised[i] * ch + c] += sign * coeffs[rank];
        }
        total += class_loss;
    }
    let scale = 1.0 / present.len() as f64;
    for g in &mut grad {
        *g *= scale;
    }
    Ok((total * scale, grad))
}

/// Completion loss: cross-entropy plus Lovász on the two-channel occupancy
/// view of `p`, supervised by a {0, 1, 255} map. The gradient is routed back
/// to the full channels: channel 0 to the empty class, channel 1 to the
/// argmax non-empty class of each voxel (subgradient of the max, lowest index
/// on ties).
pub fn comp_loss(p: &ProbGrid, v_comp: &LabelGrid) -> Result<(LossValue, Vec<f64>)> {
    if p.spec().dims != v_comp.spec().dims {
        return Err(Error::SpecMismatch);
    }
    let binary = p.to_binary_completion();
    let (value, grad2) = dual_loss(&binary, v_comp)?;
    let ch = p.channels();
    let mut grad = vec![0.0; p.values().len()];
    for flat in 0..p.spec().voxel_count() {
        let g0 = grad2[flat * 2];
        let g1 = grad2[flat * 2 + 1];
        if g0 == 0.0 && g1 == 0.0 {
            continue;
        }
        grad[flat * ch] = g0;
        let probs = p.voxel_probs(flat);
        let cmax = 1 + crate::grid::argmax(&probs[1..]);
        grad[flat * ch + cmax] = g1;
    }
    Ok((value, grad))
}

/// Semantic loss: cross-entropy plus Lovász on all C+1 channels against a
/// semantic pseudo-GT map.
pub fn sem_loss(p: &ProbGrid, v_sem: &LabelGrid) -> Result<(LossValue, Vec<f64>)> {
    if p.spec().dims != v_sem.spec().dims {
        return Err(Error::SpecMismatch);
    }
    dual_loss(p, v_sem)
}

fn dual_loss(probs: &ProbGrid, target: &LabelGrid) -> Result<(LossValue, Vec<f64>)> {
    let n_sup = target.values().iter().filter(|&&t| t != IGNORE_LABEL).count();
    if n_sup == 0 {
        return Ok((LossValue::zero(), vec![0.0; probs.values().len()]));
    }
    let (ce, mut grad) = ce_loss(probs, target)?;
    let (lv, lv_grad) = lovasz_softmax_loss(probs, target)?;
    for (g, l) in grad.iter_mut().zip(&lv_grad) {
        *g += l;
    }
    Ok((
        LossValue {
            total: ce + lv,
            ce,
            lovasz: lv,
            num_supervised_voxels: n_sup,
        },
        grad,
    ))
}

/// Sum of the completion and semantic losses; gradients are added.
pub fn combined_loss(
    p: &ProbGrid,
    v_comp: &LabelGrid,
    v_sem: &LabelGrid,
) -> Result<(LossValue, Vec<f64>)> {
    let (comp, comp_grad) = comp_loss(p, v_comp)?;
    let (sem, mut grad) = sem_loss(p, v_sem)?;
    for (g, c) in grad.iter_mut().zip(&comp_grad) {
        *g += c;
    }
    Ok((LossValue::sum(&comp, &sem), grad))
}
