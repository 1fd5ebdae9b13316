//! Experiment orchestration: stream a sequence through the scheduler (or a
//! frozen baseline), accumulate metrics on the steps that carry ground
//! truth, and emit a machine-readable report plus a plain-text table.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::metrics::MetricAccumulator;
use crate::model::SscModel;
use crate::scheduler::{SchedulerConfig, TtaScheduler};
use crate::sequence::SequenceSource;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One experiment: a grid, a scheduler configuration, and whether to adapt
/// at all (`adapt: false` evaluates the frozen pretrained model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub grid: GridSpec,
    pub scheduler: SchedulerConfig,
    pub adapt: bool,
}

impl ExperimentConfig {
    pub fn new(grid: GridSpec, scheduler: SchedulerConfig) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            grid,
            scheduler,
            adapt: true,
        }
    }

    pub fn baseline(grid: GridSpec, scheduler: SchedulerConfig) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            grid,
            scheduler,
            adapt: false,
        }
    }
}

/// Metrics and provenance of one run. IoU values are percentages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub adapt: bool,
    pub playback: bool,
    pub steps: u64,
    pub steps_with_gt: u64,
    pub per_class_iou_pct: Vec<Option<f64>>,
    pub miou_pct: f64,
    pub ciou_pct: f64,
    /// Classes with zero union are excluded from the mean (they are reported
    /// as null above).
    pub miou_excludes_zero_union_classes: bool,
    pub mean_step_ms: f64,
    pub total_seconds: f64,
    /// The exact configuration this run resolved to.
    pub config: ExperimentConfig,
}

/// Render the report as a plain-text table.
pub fn render_report_table(report: &RunReport) -> String {
    let mut out = String::new();
    let mode = if !report.adapt {
        "baseline (frozen)"
    } else if report.playback {
        "playback"
    } else {
        "adaptation"
    };
    out.push_str(&format!(
        "mode: {mode}   steps: {} (with GT: {})\n",
        report.steps, report.steps_with_gt
    ));
    out.push_str(&format!(
        "cIoU: {:6.2} %   mIoU: {:6.2} % (zero-union classes excluded)\n",
        report.ciou_pct, report.miou_pct
    ));
    out.push_str("class |   IoU %\n");
    for (i, iou) in report.per_class_iou_pct.iter().enumerate() {
        match iou {
            Some(v) => out.push_str(&format!("{:5} | {:7.2}\n", i + 1, v)),
            None => out.push_str(&format!("{:5} |     n/a\n", i + 1)),
        }
    }
    out.push_str(&format!(
        "mean step time: {:.1} ms   total: {:.2} s\n",
        report.mean_step_ms, report.total_seconds
    ));
    out
}

/// Stream `source` through a scheduler built from `config` and `model`.
/// Returns the report and the scheduler (so callers can snapshot the gradual
/// model afterwards). `restore` is applied to the gradual model before the
/// run, for playback.
pub fn run_experiment<M: SscModel>(
    config: &ExperimentConfig,
    model: M,
    source: &mut dyn SequenceSource,
    restore: Option<&[u8]>,
) -> Result<(RunReport, TtaScheduler<M>)> {
    if model.spec() != &config.grid {
        return Err(Error::Config(format!(
            "model grid {:?} does not match experiment grid {:?}",
            model.spec(),
            config.grid
        )));
    }
    let mut scheduler_config = config.scheduler.clone();
    if !config.adapt {
        // frozen baseline: run the same machinery with every update skipped
        scheduler_config.playback = true;
        scheduler_config.update_gradual = false;
    }
    let mut scheduler = TtaScheduler::new(scheduler_config, model)?;
    if let Some(bytes) = restore {
        scheduler.restore_gradual(bytes)?;
    }

    let mut acc = MetricAccumulator::new(config.grid.num_classes);
    let mut steps = 0u64;
    let mut steps_with_gt = 0u64;
    let mut step_ms = Vec::new();
    let run_start = Instant::now();
    while let Some(step) = source.next_step()? {
        let t0 = Instant::now();
        let out = scheduler.step(step.index, &step.cloud, &step.pose)?;
        step_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        steps += 1;
        if let Some(gt) = &step.gt {
            acc.accumulate(&out.prediction, gt)?;
            steps_with_gt += 1;
        }
    }
    let total_seconds = run_start.elapsed().as_secs_f64();

    let per_class_iou_pct = (1..=config.grid.num_classes)
        .map(|c| acc.class_iou(c).map(|v| v * 100.0))
        .collect();
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        adapt: config.adapt,
        playback: config.scheduler.playback,
        steps,
        steps_with_gt,
        per_class_iou_pct,
        miou_pct: acc.miou() * 100.0,
        ciou_pct: acc.ciou() * 100.0,
        miou_excludes_zero_union_classes: true,
        mean_step_ms: if step_ms.is_empty() {
            0.0
        } else {
            step_ms.iter().sum::<f64>() / step_ms.len() as f64
        },
        total_seconds,
        config: config.clone(),
    };
    Ok((report, scheduler))
}
