//! Development probe for the benchmark scenario: prints pretraining
//! convergence, baseline quality and adaptation deltas.

use losadapt::grid::IGNORE_LABEL;
use losadapt::metrics::MetricAccumulator;
use losadapt::model::{pretrain, SscModel, ToyVoxelModel, TrainScope};
use losadapt::presets;
use losadapt::runner::{run_experiment, ExperimentConfig};
use losadapt::sequence::SequenceSource;
use losadapt::synth::synth_sequence;

fn main() {
    let spec = presets::benchmark_spec();

    // pretraining convergence (same pipeline as presets, with history)
    let mut dataset = Vec::new();
    for world in presets::pretrain_worlds() {
        let mut source = synth_sequence(
            &world,
            &spec,
            presets::PRETRAIN_STEPS_PER_WORLD,
            presets::PRETRAIN_RAYS_PER_SCAN,
            1,
        )
        .unwrap();
        while let Some(step) = source.next_step().unwrap() {
            dataset.push((step.cloud, step.gt.unwrap()));
        }
    }
    let mut model =
        ToyVoxelModel::random_init(spec.clone(), ToyVoxelModel::DEFAULT_RADII.to_vec(), 1);
    model.set_train_scope(TrainScope::HeadOnly);
    let (mut trained, history) = pretrain(
        model,
        &dataset,
        presets::PRETRAIN_EPOCHS,
        presets::PRETRAIN_LR,
        1,
    )
    .unwrap();
    trained.set_train_scope(TrainScope::SpatialOnly);
    let brief: Vec<f64> = history.iter().step_by(10).copied().collect();
    println!("pretrain loss (every 10 epochs): {brief:.4?}");

    // train-set fit
    let mut acc = MetricAccumulator::new(spec.num_classes);
    for (cloud, gt) in dataset.iter().take(10) {
        let pred = trained.predict(cloud).argmax_labels();
        acc.accumulate(&pred, gt).unwrap();
    }
    println!(
        "train-world fit: cIoU {:.2} mIoU {:.2}",
        acc.ciou() * 100.0,
        acc.miou() * 100.0
    );

    // GT occupancy stats on the benchmark world
    let mut source = synth_sequence(&presets::benchmark_world(), &spec, 3, 2048, 7).unwrap();
    while let Some(step) = source.next_step().unwrap() {
        let gt = step.gt.unwrap();
        let occ = gt.values().iter().filter(|&&v| v != 0 && v != IGNORE_LABEL).count();
        let probs = trained.predict(&step.cloud);
        let pred = probs.argmax_labels();
        let pocc = pred.values().iter().filter(|&&v| v != 0).count();
        let mut class_counts = vec![0usize; spec.num_classes as usize + 1];
        for &v in pred.values() {
            if v != IGNORE_LABEL {
                class_counts[v as usize] += 1;
            }
        }
        let classes = losadapt::comp_map::classify_points(&step.cloud, &probs);
        let discarded = classes.iter().filter(|&&c| c == 0).count();
        println!(
            "step {}: cloud {} pts | GT occ {} ({:.1}%) | pred occ {} ({:.1}%) | counts {:?} | pts classified empty {} ({:.0}%)",
            step.index,
            step.cloud.len(),
            occ,
            100.0 * occ as f64 / gt.values().len() as f64,
            pocc,
            100.0 * pocc as f64 / gt.values().len() as f64,
            class_counts,
            discarded,
            100.0 * discarded as f64 / step.cloud.len().max(1) as f64
        );
    }

    // supervision quality: build V^comp / V^sem for j=0 -> i=1 and cross-tab
    // against GT at step 1
    {
        let world = presets::benchmark_world();
        let mut src = synth_sequence(
            &world,
            &spec,
            2,
            presets::BENCHMARK_RAYS_PER_SCAN,
            7,
        )
        .unwrap();
        let s0 = src.next_step().unwrap().unwrap();
        let s1 = src.next_step().unwrap().unwrap();
        let p0 = trained.predict(&s0.cloud);
        let p1 = trained.predict(&s1.cloud);
        let t = losadapt::geometry::relative_pose(&s0.pose, &s1.pose);
        let classes = losadapt::comp_map::classify_points(&s0.cloud, &p0);
        let moved = losadapt::geometry::transform_cloud(&s0.cloud, &t);
        let v_comp = losadapt::comp_map::build_comp_map(
            &moved,
            &classes,
            t.translation(),
            &presets::benchmark_mask(),
            &spec,
        )
        .unwrap();
        let gt1 = s1.gt.as_ref().unwrap();
        // cross-tab: rows = supervision {0,1,255}, cols = GT {empty, ground, other-occ}
        let mut tab = [[0usize; 3]; 3];
        for flat in 0..spec.voxel_count() {
            let sup = v_comp.get_flat(flat);
            let row = match sup {
                0 => 0,
                1 => 1,
                _ => 2,
            };
            let gt = gt1.get_flat(flat);
            let col = if gt == 0 {
                0
            } else if gt == presets::CLASS_GROUND {
                1
            } else {
                2
            };
            tab[row][col] += 1;
        }
        println!("V^comp vs GT (rows sup 0/1/255, cols gt empty/ground/other):");
        for (name, row) in ["sup=0", "sup=1", "sup=255"].iter().zip(&tab) {
            println!("  {name:8} {row:?}");
        }
        let a1 = losadapt::pseudo_gt::pseudo_gt(&p1, 0.75);
        let a0 = losadapt::pseudo_gt::pseudo_gt(&p0, 0.75);
        let a_proj = losadapt::pseudo_gt::project_labels(&a0, &t);
        let v_sem = losadapt::pseudo_gt::aggregate_pseudo_gt(&a1, &a_proj).unwrap();
        let mut sem_tab = [[0usize; 3]; 3];
        for flat in 0..spec.voxel_count() {
            let sup = v_sem.get_flat(flat);
            let row = match sup {
                0 => 0,
                IGNORE_LABEL => 2,
                _ => 1,
            };
            let gt = gt1.get_flat(flat);
            let col = if gt == 0 {
                0
            } else if gt == presets::CLASS_GROUND {
                1
            } else {
                2
            };
            sem_tab[row][col] += 1;
        }
        println!("V^sem vs GT (rows sup empty/class/255, cols gt empty/ground/other):");
        for (name, row) in ["sup=0", "sup=c", "sup=255"].iter().zip(&sem_tab) {
            println!("  {name:8} {row:?}");
        }
        // agreement of sup=c with gt class
        let mut agree = 0usize;
        let mut total = 0usize;
        for flat in 0..spec.voxel_count() {
            let sup = v_sem.get_flat(flat);
            if sup != IGNORE_LABEL && sup != 0 {
                total += 1;
                if sup == gt1.get_flat(flat) {
                    agree += 1;
                }
            }
        }
        println!("  sem non-empty label accuracy: {agree}/{total}");
    }

    // baseline vs adapted
    let baseline_cfg = ExperimentConfig::baseline(spec.clone(), presets::benchmark_scheduler_config());
    let mut src = synth_sequence(
        &presets::benchmark_world(),
        &spec,
        presets::BENCHMARK_STEPS,
        presets::BENCHMARK_RAYS_PER_SCAN,
        7,
    )
    .unwrap();
    let (base, _) = run_experiment(&baseline_cfg, trained.clone(), &mut src, None).unwrap();
    println!(
        "baseline: cIoU {:.2} mIoU {:.2} per-class {:?}",
        base.ciou_pct,
        base.miou_pct,
        base.per_class_iou_pct
            .iter()
            .map(|v| v.map(|x| (x * 10.0).round() / 10.0))
            .collect::<Vec<_>>()
    );

    // detailed confusion for one configuration
    {
        let mut scheduler = presets::benchmark_scheduler_config();
        scheduler.lr_moment = 1.0;
        scheduler.lr_gradual = 0.1;
        let mut sched = losadapt::scheduler::TtaScheduler::new(scheduler, trained.clone()).unwrap();
        let mut src = synth_sequence(
            &presets::benchmark_world(),
            &spec,
            presets::BENCHMARK_STEPS,
            presets::BENCHMARK_RAYS_PER_SCAN,
            7,
        )
        .unwrap();
        while let Some(step) = src.next_step().unwrap() {
            let out = sched.step(step.index, &step.cloud, &step.pose).unwrap();
            if step.index % 10 != 5 {
                continue;
            }
            let gt = step.gt.as_ref().unwrap();
            let frozen = trained.predict(&step.cloud).argmax_labels();
            for (name, pred) in [("frozen", &frozen), ("talos", &out.prediction)] {
                let mut tp = 0;
                let mut fp = 0;
                let mut fn_ = 0;
                let mut fn_to = vec![0usize; spec.num_classes as usize + 1];
                for flat in 0..spec.voxel_count() {
                    let g = gt.get_flat(flat) == presets::CLASS_GROUND;
                    let p = pred.get_flat(flat) == presets::CLASS_GROUND;
                    match (g, p) {
                        (true, true) => tp += 1,
                        (false, true) => fp += 1,
                        (true, false) => {
                            fn_ += 1;
                            fn_to[pred.get_flat(flat).min(presets::NUM_CLASSES) as usize] += 1;
                        }
                        _ => {}
                    }
                }
                println!(
                    "  step {} {name}: ground TP {tp} FP {fp} FN {fn_} (FN became {fn_to:?})",
                    step.index
                );
            }
        }
    }

    // flip decomposition for comp-only moment adaptation at one step
    {
        let mut scheduler = presets::benchmark_scheduler_config();
        scheduler.lr_moment = 0.5;
        scheduler.use_sem_loss = false;
        scheduler.update_gradual = false;
        let mut sched =
            losadapt::scheduler::TtaScheduler::new(scheduler, trained.clone()).unwrap();
        let mut src = synth_sequence(
            &presets::benchmark_world(),
            &spec,
            30,
            presets::BENCHMARK_RAYS_PER_SCAN,
            7,
        )
        .unwrap();
        let mut prev: Option<losadapt::sequence::SequenceStep> = None;
        while let Some(step) = src.next_step().unwrap() {
            let out = sched.step(step.index, &step.cloud, &step.pose).unwrap();
            if step.index == 25 {
                let p = prev.as_ref().unwrap();
                // rebuild the supervision exactly as the scheduler saw it
                let p_j = trained.predict(&p.cloud);
                let t = losadapt::geometry::relative_pose(&p.pose, &step.pose);
                let classes = losadapt::comp_map::classify_points(&p.cloud, &p_j);
                let moved = losadapt::geometry::transform_cloud(&p.cloud, &t);
                let v_comp = losadapt::comp_map::build_comp_map(
                    &moved,
                    &classes,
                    t.translation(),
                    &presets::benchmark_mask(),
                    &spec,
                )
                .unwrap();
                let frozen = trained.predict(&step.cloud).argmax_labels();
                let adapted = out.p_moment.argmax_labels();
                let gt = step.gt.as_ref().unwrap();
                let mut flips = [[0usize; 2]; 3]; // rows sup 0/1/255, cols toward/away
                for flat in 0..spec.voxel_count() {
                    let f_occ = frozen.get_flat(flat) != 0;
                    let a_occ = adapted.get_flat(flat) != 0;
                    if f_occ == a_occ {
                        continue;
                    }
                    let g_occ = gt.get_flat(flat) != 0;
                    let row = match v_comp.get_flat(flat) {
                        0 => 0,
                        1 => 1,
                        _ => 2,
                    };
                    let toward = a_occ == g_occ;
                    flips[row][if toward { 0 } else { 1 }] += 1;
                }
                println!("step 25 comp-only flips (rows sup 0/1/255, cols toward/away from GT):");
                for (name, row) in ["sup=0", "sup=1", "sup=255"].iter().zip(&flips) {
                    println!("  {name:8} {row:?}");
                }
            }
            prev = Some(step);
        }
    }

    // drone-point rejection quality at step 0
    {
        let world = presets::benchmark_world();
        let (cloud, surface) = world.scan(0, presets::BENCHMARK_RAYS_PER_SCAN, 7).unwrap();
        let p = trained.predict(&cloud);
        let predicted = losadapt::comp_map::classify_points(&cloud, &p);
        let drone_pts = surface.iter().filter(|&&c| c == presets::CLASS_MOVER).count();
        let drone_rejected = surface
            .iter()
            .zip(&predicted)
            .filter(|(&s, &p)| s == presets::CLASS_MOVER && p == presets::CLASS_MOVER)
            .count();
        println!("drone points {drone_pts}, predicted mover (rejected) {drone_rejected}");
    }

    let run = |scheduler: losadapt::scheduler::SchedulerConfig| {
        let cfg = ExperimentConfig::new(spec.clone(), scheduler);
        let mut src = synth_sequence(
            &presets::benchmark_world(),
            &spec,
            presets::BENCHMARK_STEPS,
            presets::BENCHMARK_RAYS_PER_SCAN,
            7,
        )
        .unwrap();
        run_experiment(&cfg, trained.clone(), &mut src, None).unwrap().0
    };

    for (lr_m, lr_g, ig) in [
        (0.3, 0.05, 3u32),
        (0.3, 0.04, 3),
        (0.3, 0.03, 3),
        (0.3, 0.02, 3),
        (0.2, 0.03, 3),
        (0.4, 0.04, 3),
    ] {
        let mut scheduler = presets::benchmark_scheduler_config();
        scheduler.lr_moment = lr_m;
        scheduler.lr_gradual = lr_g;
        scheduler.iters_gradual = Some(ig);
        let full = run(scheduler.clone());

        let noisy = |mut cfg: losadapt::scheduler::SchedulerConfig| {
            cfg.pose_noise_sigma = 0.05;
            cfg.noise_seed = 13;
            run(cfg)
        };
        let noisy_e = noisy(scheduler.clone());
        let mut c_cfg = scheduler.clone();
        c_cfg.update_gradual = false;
        let noisy_c = noisy(c_cfg.clone());
        let mut d_cfg = scheduler.clone();
        d_cfg.update_moment = false;
        let noisy_d = noisy(d_cfg.clone());
        let clean_c = run(c_cfg);
        let clean_d = run(d_cfg);
        let mut comp_only = scheduler.clone();
        comp_only.use_sem_loss = false;
        comp_only.update_gradual = false;
        let expa = run(comp_only);
        println!(
            "lr ({lr_m}, {lr_g}) ig {ig}: E {:.2}/{:.2} nE {:.2} | C {:.2} nC {:.2} | D {:.2} nD {:.2} | A {:.2}",
            full.ciou_pct,
            full.miou_pct,
            noisy_e.ciou_pct,
            clean_c.ciou_pct,
            noisy_c.ciou_pct,
            clean_d.ciou_pct,
            noisy_d.ciou_pct,
            expa.ciou_pct,
        );
    }
}
