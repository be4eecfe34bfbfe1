//! Command implementations. Each writes its artifacts under the configured
//! output directory and returns a report describing them.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{AnalyzeConfig, RunConfig, TaskKind};
use super::json::to_canonical_string;
use crate::analysis::{
    empirical_ntk, expand_split_layer, feature_space_dim, first_layer_features, mean_peak_count, optimal_split,
    split_sweep, tile_mosaic, NtkSummary,
};
use crate::error::{Error, Result};
use crate::math::{DenseMatrix, Prng};
use crate::network::{branch_width, init_network, NetworkSpec};
use crate::tasks::io::{read_image, read_volume, write_image, write_volume, VolumeMeta};
use crate::tasks::{
    bundled_test_image, chamfer_distance, chamfer_distance_root, shepp_logan, AnalyticShape, CtTask, ImageFitTask,
    OccupancyField, OccupancyTask, Sinogram, VoxelGrid,
};
use crate::training::{history_csv, train, TaskBinding, TrainOutcome};
use crate::VERSION;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub metric: String,
    pub final_metric: f64,
    pub final_loss: f64,
    pub params: usize,
    pub history: String,
    pub artifacts: Vec<String>,
    /// Zero when wall-clock recording is off.
    pub wall_time_ms: f64,
    pub version: String,
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn record(&mut self, name: &str) -> PathBuf {
        let p = self.path(name);
        self.written.push(p.display().to_string());
        p
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.record(name);
        fs::write(&p, contents).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let s = to_canonical_string(value)?;
        self.text(name, &s)
    }

    fn image(&mut self, name: &str, img: &crate::tasks::ImageGrid) -> Result<PathBuf> {
        let p = self.record(name);
        write_image(&p, img)?;
        Ok(p)
    }
}

fn netpbm_name(stem: &str, channels: usize) -> String {
    format!("{stem}.{}", if channels == 3 { "ppm" } else { "pgm" })
}

fn run_training(
    task: &dyn TaskBinding,
    spec: &NetworkSpec,
    cfg: &RunConfig,
    out: &mut Artifacts,
) -> Result<(TrainOutcome, PathBuf, f64)> {
    let start = Instant::now();
    let outcome = train(task, spec, &cfg.train_config())?;
    let wall = if cfg.wall_clock { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let history = out.text("history.csv", &history_csv(&outcome.history))?;
    if let Some(last) = outcome.history.last() {
        log::info!("{}: {} = {:.4} after {} iterations", spec.activation.kind.name(), task.metric_name(), last.metric, last.iteration);
    }
    Ok((outcome, history, wall))
}

fn finish(
    cfg: RunConfig,
    task: &dyn TaskBinding,
    spec: &NetworkSpec,
    outcome: &TrainOutcome,
    final_metric: f64,
    history: PathBuf,
    wall: f64,
    mut out: Artifacts,
) -> Result<RunReport> {
    let report_path = out.path("report.json");
    out.written.push(report_path.display().to_string());
    let report = RunReport {
        config: cfg,
        metric: task.metric_name().to_string(),
        final_metric,
        final_loss: outcome.losses.last().copied().unwrap_or(f64::NAN),
        params: spec.param_count(),
        history: history.display().to_string(),
        artifacts: out.written.clone(),
        wall_time_ms: wall,
        version: VERSION.to_string(),
    };
    let text = to_canonical_string(&report)?;
    fs::write(&report_path, text).map_err(|e| Error::io(&report_path, e))?;
    Ok(report)
}

pub fn cmd_fit_image(cfg: RunConfig) -> Result<RunReport> {
    let cfg = cfg.resolve(TaskKind::FitImage)?;
    let image = match &cfg.input {
        Some(p) => read_image(p)?,
        None => bundled_test_image(cfg.size),
    };
    let spec = cfg.network_spec_with(2, image.channels)?;
    let mut task = ImageFitTask::new(image);
    task.clip = cfg.clip;
    let mut out = Artifacts::new(&cfg.output)?;
    let (outcome, history, wall) = run_training(&task, &spec, &cfg, &mut out)?;
    let rec = task.reconstruct(&spec, &outcome.params)?;
    out.image(&netpbm_name("reconstruction", rec.channels), &rec)?;
    out.image("reconstruction.pfm", &rec)?;
    let metric = task.evaluate(&spec, &outcome.params)?;
    finish(cfg, &task, &spec, &outcome, metric, history, wall, out)
}

pub fn cmd_recon_ct(cfg: RunConfig) -> Result<RunReport> {
    let cfg = cfg.resolve(TaskKind::ReconCt)?;
    let task = match &cfg.sinogram {
        Some(p) => {
            let sino = Sinogram::from_image(&read_image(p)?)?;
            if (sino.num_angles, sino.num_detectors) != (cfg.angles, cfg.detectors) {
                return Err(Error::config(format!(
                    "sinogram holds {} angles x {} detectors, config says {} x {}",
                    sino.num_angles, sino.num_detectors, cfg.angles, cfg.detectors
                )));
            }
            CtTask::from_sinogram(sino, cfg.size, cfg.size)?
        }
        None => {
            let gt = match &cfg.input {
                Some(p) => read_image(p)?,
                None => shepp_logan(cfg.size)?,
            };
            if gt.channels != 1 {
                return Err(Error::config("ct ground truth must be a single-channel image"));
            }
            CtTask::new(gt, cfg.angles, cfg.detectors)?
        }
    };
    let spec = cfg.network_spec()?;
    let mut out = Artifacts::new(&cfg.output)?;
    out.image("sinogram.pfm", &task.sinogram.to_image())?;
    let (outcome, history, wall) = run_training(&task, &spec, &cfg, &mut out)?;
    let rec = task.reconstruct(&spec, &outcome.params)?;
    out.image("reconstruction.pgm", &rec)?;
    out.image("reconstruction.pfm", &rec)?;
    if let Some(gt) = &task.ground_truth {
        out.image("error.pgm", &rec.abs_diff(gt)?)?;
    }
    let metric = task.evaluate(&spec, &outcome.params)?;
    finish(cfg, &task, &spec, &outcome, metric, history, wall, out)
}

pub fn cmd_fit_occupancy(cfg: RunConfig) -> Result<RunReport> {
    let cfg = cfg.resolve(TaskKind::FitOccupancy)?;
    let field = match &cfg.volume {
        Some(p) => {
            let (values, meta) = read_volume(p)?;
            OccupancyField::Voxel(VoxelGrid::new(meta.resolution, meta.extent, meta.threshold, values)?)
        }
        None => OccupancyField::Analytic(cfg.shape.parse::<AnalyticShape>()?),
    };
    let spec = cfg.network_spec()?;
    let task = OccupancyTask::new(field, cfg.samples, cfg.eval_resolution, cfg.seed.wrapping_add(2))?;
    let mut out = Artifacts::new(&cfg.output)?;
    let (outcome, history, wall) = run_training(&task, &spec, &cfg, &mut out)?;
    let lattice = task.predict_lattice(&spec, &outcome.params)?;
    let values: Vec<f32> = lattice.iter().map(|&v| v as f32).collect();
    let meta = VolumeMeta { resolution: cfg.eval_resolution, extent: 1.0, threshold: 0.5 };
    let raw = out.record("prediction.raw");
    write_volume(&raw, &values, &meta)?;
    out.written.push(crate::tasks::io::sidecar_path(&raw).display().to_string());
    let surface = task.predicted_surface(&spec, &outcome.params).map_err(|e| match e {
        Error::EmptyResult(_) => Error::EmptyResult(format!(
            "predicted occupancy never crosses 0.5 on the {}^3 grid (max {:.4}); history written to {}",
            cfg.eval_resolution,
            lattice.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            history.display()
        )),
        other => other,
    })?;
    let metric = if cfg.root {
        chamfer_distance_root(&surface, task.reference_surface())?
    } else {
        chamfer_distance(&surface, task.reference_surface())?
    };
    finish(cfg, &task, &spec, &outcome, metric, history, wall, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyzeKind {
    Dim,
    OptimalSplit,
    Ntk,
    Features,
    Expand,
    Sweep,
}

/// Runs an analysis and returns the path of its main JSON report.
pub fn cmd_analyze(kind: AnalyzeKind, cfg: AnalyzeConfig) -> Result<PathBuf> {
    let mut out = Artifacts::new(&cfg.output)?;
    match kind {
        AnalyzeKind::Dim => analyze_dim(&cfg, &mut out),
        AnalyzeKind::OptimalSplit => {
            let s = optimal_split(cfg.width)?;
            println!("{}", s.recommended);
            out.json("optimal_split.json", &serde_json::json!({"width": cfg.width, "n-star": s.n_star, "recommended": s.recommended}))
        }
        AnalyzeKind::Ntk => analyze_ntk(&cfg, &mut out),
        AnalyzeKind::Features => analyze_features(&cfg, &mut out),
        AnalyzeKind::Expand => analyze_expand(&cfg, &mut out),
        AnalyzeKind::Sweep => analyze_sweep(&cfg, &mut out),
    }
}

fn check_splits(width: usize, splits: usize) -> Result<()> {
    if splits == 0 || (splits >= 2 && splits as u128 > (width as u128).pow(2)) || width == 0 {
        return Err(Error::config(format!("split number {splits} is not admissible for width {width}")));
    }
    Ok(())
}

fn analyze_dim(cfg: &AnalyzeConfig, out: &mut Artifacts) -> Result<PathBuf> {
    check_splits(cfg.width, cfg.splits)?;
    let dim = feature_space_dim(cfg.width, cfg.splits)?;
    println!("{dim}");
    out.json(
        "dim.json",
        &serde_json::json!({
            "width": cfg.width,
            "splits": cfg.splits,
            "branch-width": branch_width(cfg.width, cfg.splits.max(1)),
            "dim": dim.exact.to_str_radix(10),
            "log10": dim.log10,
            "baseline-dim": cfg.width,
        }),
    )
}

/// Matched baseline/split pair sharing width, depth and activation; the
/// baseline has `width` neurons per layer, the split net `branch_width`.
fn ntk_pair(cfg: &AnalyzeConfig, d_in: usize) -> Result<(NetworkSpec, NetworkSpec)> {
    check_splits(cfg.width, cfg.splits)?;
    if cfg.splits < 2 {
        return Err(Error::config("ntk comparison needs splits >= 2"));
    }
    let base = NetworkSpec::baseline(d_in, 1, cfg.width, cfg.hidden_layers, cfg.activation_spec());
    let split = base.clone().with_splits(cfg.splits);
    base.validate()?;
    split.validate()?;
    Ok((base, split))
}

#[derive(Serialize)]
struct NtkComparison {
    seed: u64,
    baseline: NtkSummary,
    split: NtkSummary,
    split_larger_max: bool,
    split_wider_spread: bool,
}

fn analyze_ntk(cfg: &AnalyzeConfig, out: &mut Artifacts) -> Result<PathBuf> {
    let (base, split) = ntk_pair(cfg, 1)?;
    if cfg.samples == 0 || cfg.seeds == 0 {
        return Err(Error::config("samples and seeds must be positive"));
    }
    let m = cfg.samples;
    let coords = DenseMatrix::from_fn(m, 1, |i, _| -1.0 + (2 * i + 1) as f64 / m as f64);
    let mut rows = Vec::new();
    for k in 0..cfg.seeds {
        let seed = cfg.seed.wrapping_add(k as u64);
        let rb = empirical_ntk(&base, &init_network(&base, seed)?, &coords)?;
        let rs = empirical_ntk(&split, &init_network(&split, seed)?, &coords)?;
        out.text(&format!("ntk_baseline_seed{seed}.csv"), &rb.spectrum_csv())?;
        out.text(&format!("ntk_split_seed{seed}.csv"), &rs.spectrum_csv())?;
        rows.push(NtkComparison {
            seed,
            split_larger_max: rs.summary.max > rb.summary.max,
            split_wider_spread: rs.summary.decade_spread > rb.summary.decade_spread,
            baseline: rb.summary,
            split: rs.summary,
        });
    }
    let wins = rows.iter().filter(|r| r.split_larger_max).count();
    println!("split max eigenvalue larger in {wins} of {} seeds", rows.len());
    out.json(
        "ntk.json",
        &serde_json::json!({
            "baseline-params": base.param_count(),
            "split-params": split.param_count(),
            "samples": m,
            "runs": rows,
            "split-larger-max-count": wins,
        }),
    )
}

/// Baseline and split nets whose first layer has `neurons` units; the split
/// variant also splits its input layer so its first-layer features change.
pub fn feature_pair(cfg: &AnalyzeConfig) -> Result<(NetworkSpec, NetworkSpec)> {
    if cfg.splits < 2 || cfg.neurons == 0 {
        return Err(Error::config("features need splits >= 2 and at least one neuron"));
    }
    let base = NetworkSpec::baseline(2, 1, cfg.neurons, cfg.hidden_layers, cfg.activation_spec());
    // smallest backbone width whose branch width equals the neuron count
    let c = (cfg.neurons..)
        .find(|&c| branch_width(c, cfg.splits) >= cfg.neurons)
        .ok_or_else(|| Error::config("no admissible width"))?;
    let mut split = NetworkSpec::baseline(2, 1, c, cfg.hidden_layers, cfg.activation_spec()).with_splits(cfg.splits);
    split.split_input = true;
    split.validate()?;
    Ok((base, split))
}

fn analyze_features(cfg: &AnalyzeConfig, out: &mut Artifacts) -> Result<PathBuf> {
    let (base, split) = feature_pair(cfg)?;
    let r = cfg.resolution;
    let tb = first_layer_features(&base, &init_network(&base, cfg.seed)?, r, r)?;
    let ts = first_layer_features(&split, &init_network(&split, cfg.seed)?, r, r)?;
    out.image("features_baseline.pgm", &tile_mosaic(&tb)?)?;
    out.image("features_split.pgm", &tile_mosaic(&ts)?)?;
    let (pb, ps) = (mean_peak_count(&tb)?, mean_peak_count(&ts)?);
    println!("mean spectral peaks: baseline {pb:.3}, split {ps:.3}");
    out.json(
        "features.json",
        &serde_json::json!({
            "neurons": cfg.neurons,
            "splits": cfg.splits,
            "resolution": r,
            "baseline-mean-peaks": pb,
            "split-mean-peaks": ps,
            "seed": cfg.seed,
        }),
    )
}

fn analyze_expand(cfg: &AnalyzeConfig, out: &mut Artifacts) -> Result<PathBuf> {
    // `width` is the branch width here
    if cfg.width == 0 || cfg.splits == 0 {
        return Err(Error::config("expand needs width >= 1 and splits >= 1"));
    }
    let mut rng = Prng::new(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.splits);
    for _ in 0..cfg.splits {
        rows.push((0..cfg.width).map(|_| rng.uniform(-1.0, 1.0)).collect::<Result<Vec<f64>>>()?);
    }
    let poly = expand_split_layer(&rows)?;
    let terms: Vec<_> = poly.terms().map(|(m, c)| serde_json::json!({"monomial": m.to_string(), "coefficient": c})).collect();
    println!("{} terms", terms.len());
    out.json("expand.json", &serde_json::json!({"branch-weights": rows, "terms": terms}))
}

fn analyze_sweep(cfg: &AnalyzeConfig, out: &mut Artifacts) -> Result<PathBuf> {
    for &c in &cfg.widths {
        for &n in &cfg.split_values {
            check_splits(c, n)?;
        }
    }
    let task = ImageFitTask::new(bundled_test_image(cfg.resolution));
    let template = NetworkSpec::baseline(2, 3, 1, cfg.hidden_layers, cfg.activation_spec());
    let train_cfg = crate::training::TrainConfig {
        iterations: cfg.iterations,
        learning_rate: cfg.learning_rate,
        seed: cfg.seed,
        log_every: cfg.iterations.max(1),
        record_wall_time: cfg.wall_clock,
        ..Default::default()
    };
    let splits: Vec<usize> = cfg.split_values.iter().map(|&n| if n == 1 { 0 } else { n }).collect();
    let report = split_sweep(&task, &template, &train_cfg, &cfg.widths, &splits, true)?;
    let mut csv = String::from("width,splits,params,metric\n");
    for r in &report.rows {
        csv.push_str(&format!("{},{},{},{:.16e}\n", r.width, r.splits, r.params, r.metric));
    }
    out.text("sweep.csv", &csv)?;
    for b in &report.best {
        println!("width {}: best splits {} (n* = {:.2})", b.width, b.best_splits, b.n_star);
    }
    out.json("sweep.json", &report)
}
