//! The three subcommands: dataset generation, single pipeline runs and
//! estimator/plane-count sweeps.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;

use motiondepth::error::{Error, Result};
use motiondepth::grid::Grid;
use motiondepth::io;
use motiondepth::stillbox::{generate_scene, render_sequence, sample_trajectory, OrientationNoise};

use crate::config::ExperimentConfig;
use crate::runner;

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Archive the effective config next to the outputs.
fn archive_config(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    io::write_json(&out.join("config.json"), cfg)
}

/// Render all configured scenes to disk as PGM/PFM/JSON plus a manifest.
pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    create_dir(out)?;
    archive_config(cfg, out)?;
    let mut entries = Vec::with_capacity(cfg.scene_count);
    for index in 0..cfg.scene_count {
        let seed = cfg.scene_seed(index);
        let scene = generate_scene(seed, &cfg.scene)?;
        let trajectory = sample_trajectory(
            seed,
            cfg.trajectory.speed,
            cfg.trajectory.frame_period,
            cfg.trajectory.frame_count,
        )?;
        let noise =
            (cfg.noise_n0 > 0.0).then(|| OrientationNoise::new(cfg.noise_n0, seed ^ 0x6e01))
                .transpose()?;
        let frames = render_sequence(&scene, &trajectory, &cfg.intrinsics, noise.as_ref())?;
        let dir_name = io::scene_dir_name(index);
        let meta = io::SceneMeta { seed, params: cfg.scene, trajectory, noise };
        io::write_scene_dir(&out.join(&dir_name), &meta, &frames, &cfg.intrinsics)?;
        entries.push(io::ManifestEntry { directory: dir_name, seed });
    }
    io::write_json(&io::manifest_path(out), &io::Manifest { scenes: entries })?;
    println!("generated {} scene(s) under {}", cfg.scene_count, out.display());
    Ok(())
}

/// Inverse-depth visualization: brighter is closer, capped at 100 m.
fn depth_viz(depth: &Grid) -> Grid {
    Grid::from_fn(depth.width(), depth.height(), |x, y| {
        let d = (depth.get(x, y) as f64).clamp(1.0, 100.0);
        (1.0 / d) as f32
    })
}

#[derive(serde::Serialize)]
struct TraceLine<'a> {
    scene: usize,
    step: usize,
    timestamp: f64,
    runtime_ms: f64,
    plan: &'a motiondepth::pipeline::ShiftPlan,
    beta_stats: &'a [runner::BetaStats],
    depth_pfm: Option<String>,
}

struct CsvSink {
    writer: csv::Writer<fs::File>,
}

impl CsvSink {
    fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file =
            fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut writer = csv::Writer::from_writer(file);
        writer
            .write_record(header)
            .map_err(|e| Error::Format { path: path.display().to_string(), reason: e.to_string() })?;
        Ok(Self { writer })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer
            .write_record(fields)
            .map_err(|e| Error::Format { path: "csv".into(), reason: e.to_string() })
    }

    fn finish(mut self) -> Result<()> {
        self.writer
            .flush()
            .map_err(|e| Error::Format { path: "csv".into(), reason: e.to_string() })
    }
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

/// Run the pipeline over every scene; emit metrics CSV, step traces and
/// fused depth maps.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    create_dir(out)?;
    archive_config(cfg, out)?;
    let scenes = runner::build_scenes(cfg)?;

    let mut csv = CsvSink::create(
        &out.join("metrics.csv"),
        &["scene_id", "step", "n_planes", "estimator", "l1", "rmse", "norm_err", "runtime_ms"],
    )?;
    let trace_path = out.join("trace.jsonl");
    let mut trace = fs::File::create(&trace_path)
        .map_err(|e| Error::io(trace_path.display().to_string(), e))?;

    for scene in &scenes {
        let records = runner::run_scene(cfg, scene)?;
        let scene_dir = out.join(io::scene_dir_name(scene.index));
        if cfg.write_depth || cfg.write_viz {
            create_dir(&scene_dir)?;
        }
        for r in &records {
            let depth_rel = if cfg.write_depth {
                let rel = format!("{}/depth_step_{:03}.pfm", io::scene_dir_name(scene.index), r.step);
                io::write_pfm(&out.join(&rel), &r.depth.values)?;
                Some(rel)
            } else {
                None
            };
            if cfg.write_viz {
                let rel = format!("viz_step_{:03}.pgm", r.step);
                io::write_pgm(&scene_dir.join(rel), &depth_viz(&r.depth.values))?;
            }
            csv.row(&[
                scene.index.to_string(),
                r.step.to_string(),
                r.plan.planes.len().to_string(),
                cfg.estimator.name.clone(),
                fmt(r.l1),
                fmt(r.rmse),
                fmt(r.norm_err),
                fmt(r.runtime_ms),
            ])?;
            let line = TraceLine {
                scene: scene.index,
                step: r.step,
                timestamp: r.timestamp,
                runtime_ms: r.runtime_ms,
                plan: &r.plan,
                beta_stats: &r.beta_stats,
                depth_pfm: depth_rel,
            };
            let body = serde_json::to_string(&line).map_err(|e| Error::Format {
                path: trace_path.display().to_string(),
                reason: e.to_string(),
            })?;
            writeln!(trace, "{body}").map_err(|e| Error::io(trace_path.display().to_string(), e))?;
        }
        let summary = runner::summarize(&records);
        println!(
            "scene {:>3}: steps {:>2}, l1 {:.4} m, rmse {:.4} m, norm_err {:.5}",
            scene.index,
            records.len(),
            summary.l1,
            summary.rmse,
            summary.norm_err
        );
    }
    csv.finish()?;
    println!("wrote {}", out.join("metrics.csv").display());
    Ok(())
}

/// One sweep job result (per estimator × plane count × scene).
struct SweepRow {
    estimator: String,
    planes: usize,
    scene: usize,
    seed: u64,
    summary: runner::SceneSummary,
}

/// Sweep estimators × plane counts over shared scenes; scenes render once
/// and jobs run in a parallel worker pool, a single collector writes.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    planes: &[usize],
    estimators: &[String],
    out: &Path,
) -> Result<()> {
    cfg.validate()?;
    if planes.is_empty() || planes.iter().any(|&n| n == 0 || n > motiondepth::pipeline::MAX_PLANES)
    {
        return Err(Error::config("sweep plane counts must lie in 1..=4"));
    }
    for name in estimators {
        let mut probe = cfg.clone();
        probe.estimator.name = name.clone();
        probe.validate()?;
    }
    create_dir(out)?;
    archive_config(cfg, out)?;
    let scenes = runner::build_scenes(cfg)?;

    let mut jobs = Vec::new();
    for name in estimators {
        for &n in planes {
            for scene in &scenes {
                jobs.push((name.clone(), n, scene.clone()));
            }
        }
    }
    let mut rows: Vec<(usize, SweepRow)> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, (name, n, scene))| {
            let mut job_cfg = cfg.clone();
            job_cfg.estimator.name = name.clone();
            job_cfg.pipeline.planes = *n;
            let records = runner::run_scene(&job_cfg, scene)?;
            Ok((
                i,
                SweepRow {
                    estimator: name.clone(),
                    planes: *n,
                    scene: scene.index,
                    seed: scene.seed,
                    summary: runner::summarize(&records),
                },
            ))
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|(i, _)| *i);

    let mut csv = CsvSink::create(
        &out.join("sweep.csv"),
        &["estimator", "planes", "scene_id", "seed", "l1", "rmse", "norm_err", "runtime_ms"],
    )?;
    for (_, row) in &rows {
        csv.row(&[
            row.estimator.clone(),
            row.planes.to_string(),
            row.scene.to_string(),
            row.seed.to_string(),
            fmt(row.summary.l1),
            fmt(row.summary.rmse),
            fmt(row.summary.norm_err),
            fmt(row.summary.runtime_ms),
        ])?;
    }
    csv.finish()?;

    // Summary: mean-over-scenes and pixel-pooled normalized error per
    // (estimator, planes).
    let mut summary = CsvSink::create(
        &out.join("summary.csv"),
        &["estimator", "planes", "mean_norm_err", "pooled_norm_err", "mean_runtime_ms"],
    )?;
    println!("{:<16} {:>6} {:>14} {:>16} {:>16}", "estimator", "planes", "mean_norm_err", "pooled_norm_err", "mean_runtime_ms");
    for name in estimators {
        for &n in planes {
            let group: Vec<&SweepRow> = rows
                .iter()
                .map(|(_, r)| r)
                .filter(|r| &r.estimator == name && r.planes == n)
                .collect();
            if group.is_empty() {
                continue;
            }
            let mean_err = group.iter().map(|r| r.summary.norm_err).sum::<f64>() / group.len() as f64;
            let pooled_sum: f64 = group.iter().map(|r| r.summary.err_sum).sum();
            let pooled_count: usize = group.iter().map(|r| r.summary.err_count).sum();
            let pooled = if pooled_count > 0 { pooled_sum / pooled_count as f64 } else { f64::NAN };
            let mean_rt = group.iter().map(|r| r.summary.runtime_ms).sum::<f64>() / group.len() as f64;
            println!("{name:<16} {n:>6} {mean_err:>14.6} {pooled:>16.6} {mean_rt:>16.3}");
            summary.row(&[
                name.clone(),
                n.to_string(),
                fmt(mean_err),
                fmt(pooled),
                fmt(mean_rt),
            ])?;
        }
    }
    summary.finish()?;
    println!("wrote {}", out.join("sweep.csv").display());
    Ok(())
}

