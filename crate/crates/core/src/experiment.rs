//! End-to-end runs: scene, CSI, estimation, chart, metrics and timing, with
//! every artifact written to an output directory.
//!
//! Files written by [`run_experiment`]:
//!
//! | file            | contents                                              |
//! |-----------------|-------------------------------------------------------|
//! | `chart.csv`     | `ue_id,true_x,true_y,est_x,est_y,is_vip`               |
//! | `metrics.json`  | `{ "n", "k", "tw", "ct" }`                             |
//! | `runtime.json`  | list of timing records (only with `bench`)             |
//! | `manifest.json` | resolved config, seeds, toolkit version, file list     |
//! | `spectra/`      | per-UE spectrum CSVs (only with `dump_spectra`)        |
//!
//! All outputs except timings are a pure function of the manifest's config.

use crate::bench::{format_timing_table, time_pipeline, TimingRecord};
use crate::channel::{generate_csi, ChannelModel, ChannelParams};
use crate::chart::{build_chart, Chart};
use crate::error::{Error, Result};
use crate::estimate::{zip_estimates, Dataset, Estimator, EstimatorConfig, RhoAlgo, ThetaAlgo};
use crate::metrics::{check_k, QualityEvaluator, QualityReport};
use crate::scene::{generate_scene, Scene, SceneConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    pub channel: ChannelParams,
    pub theta_algo: ThetaAlgo,
    pub rho_algo: RhoAlgo,
    pub estimator: EstimatorConfig,
    pub k_max: usize,
    /// Timed repetitions when `bench` is on.
    pub repeats: usize,
    pub bench: bool,
    pub dump_spectra: bool,
    /// Per-UE estimation on the rayon pool. Results do not depend on it.
    pub parallel: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            channel: ChannelParams::default(),
            theta_algo: ThetaAlgo::Music,
            rho_algo: RhoAlgo::Music,
            estimator: EstimatorConfig::default(),
            k_max: 102,
            repeats: 3,
            bench: false,
            dump_spectra: false,
            parallel: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Sets the scene and channel seeds together.
    pub fn set_seed(&mut self, seed: u64) {
        self.scene.rng_seed = seed;
        self.channel.rng_seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.channel.validate()?;
        check_pair_supported(&self.channel, self.rho_algo)?;
        if self.rho_algo == RhoAlgo::Lr && self.estimator.lr_training > self.scene.n_ue {
            return Err(Error::InvalidConfig(format!(
                "LR trains on {} UEs but the scene has only {}",
                self.estimator.lr_training, self.scene.n_ue
            )));
        }
        if self.rho_algo == RhoAlgo::Lr && self.estimator.lr_training < 2 {
            return Err(Error::InvalidConfig("LR needs at least 2 training UEs".into()));
        }
        check_k(self.scene.n_ue, self.k_max)
            .map_err(|_| Error::InvalidConfig(format!("k_max {} is invalid for {} UEs", self.k_max, self.scene.n_ue)))?;
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_pair_supported(channel: &ChannelParams, rho: RhoAlgo) -> Result<()> {
    if rho.needs_subcarriers() && channel.n_sub < 2 {
        return Err(Error::InvalidConfig(format!(
            "{} range estimation needs n_sub >= 2 (got {})",
            rho.label(),
            channel.n_sub
        )));
    }
    Ok(())
}

/// Scene plus CSI for every UE under `channel`.
pub fn simulate(scene_cfg: &SceneConfig, channel: &ChannelParams, lr_training: usize) -> Result<(Scene, Dataset)> {
    let scene = generate_scene(scene_cfg)?;
    let dataset = simulate_channel(&scene, channel, lr_training)?;
    Ok((scene, dataset))
}

/// CSI for every UE of an existing scene.
pub fn simulate_channel(scene: &Scene, channel: &ChannelParams, lr_training: usize) -> Result<Dataset> {
    channel.validate()?;
    let csi = (0..scene.n_ue())
        .into_par_iter()
        .map(|i| generate_csi(scene, i, channel))
        .collect::<Result<Vec<_>>>()?;
    let m = lr_training.min(scene.n_ue());
    Ok(Dataset {
        csi,
        training_rho: (0..m).map(|i| scene.true_polar(i).rho).collect(),
    })
}

fn make_estimator(cfg: &EstimatorConfig, channel: &ChannelParams) -> Result<Estimator> {
    Estimator::new(cfg.clone(), channel.n_rx, channel.n_sub, channel.subcarrier_spacing())
}

/// What one run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub chart: Chart,
    pub report: QualityReport,
    pub timing: Option<TimingRecord>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    toolkit: &'static str,
    version: &'static str,
    scene_seed: u64,
    channel_seed: u64,
    config: &'a ExperimentConfig,
    files: Vec<String>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Runs one configuration and writes its artifacts to `cfg.output_dir`.
///
/// `progress` receives short human-readable status lines.
pub fn run_experiment(cfg: &ExperimentConfig, mut progress: impl FnMut(&str)) -> Result<RunOutput> {
    cfg.validate()?;
    let est = make_estimator(&cfg.estimator, &cfg.channel)?;
    progress(&format!(
        "simulating {} UEs ({} channel, {} antennas, {} subcarriers)",
        cfg.scene.n_ue, cfg.channel.model, cfg.channel.n_rx, cfg.channel.n_sub
    ));
    let (scene, data) = simulate(&cfg.scene, &cfg.channel, cfg.estimator.lr_training)?;

    progress(&format!("estimating with {}/{}", cfg.theta_algo.label(), cfg.rho_algo.label()));
    let estimates = est.estimate(cfg.theta_algo, cfg.rho_algo, &data, cfg.parallel)?;
    let chart = build_chart(&estimates, &scene, cfg.rho_algo.is_metric())?;

    progress(&format!("scoring chart for K = 1..{}", cfg.k_max));
    let report = QualityEvaluator::new(&chart.truth)?.curve(&chart.estimated_positions(), cfg.k_max)?;

    fs::create_dir_all(&cfg.output_dir)?;
    let dir = &cfg.output_dir;
    let mut files = Vec::new();

    let chart_path = dir.join("chart.csv");
    let mut w = create(&chart_path)?;
    chart.write_csv(&mut w)?;
    w.flush()?;
    files.push(chart_path);

    let metrics_path = dir.join("metrics.json");
    let mut w = create(&metrics_path)?;
    report.write_json(&mut w)?;
    w.flush()?;
    files.push(metrics_path);

    let timing = if cfg.bench {
        progress(&format!("benchmarking ({} repeats, single thread)", cfg.repeats));
        let rec = time_pipeline(&est, cfg.theta_algo, cfg.rho_algo, cfg.channel.model, &data, cfg.repeats)?;
        let path = dir.join("runtime.json");
        write_json(&path, std::slice::from_ref(&rec))?;
        files.push(path);
        Some(rec)
    } else {
        None
    };

    if cfg.dump_spectra {
        progress("writing spectra");
        let spec_dir = dir.join("spectra");
        fs::create_dir_all(&spec_dir)?;
        let spectra = est.spectra(cfg.theta_algo, cfg.rho_algo, &data, cfg.parallel)?;
        for (csi, s) in data.csi.iter().zip(&spectra) {
            let mut w = create(&spec_dir.join(format!("ue{:05}_theta.csv", csi.ue_id)))?;
            s.theta.write_csv(&mut w)?;
            w.flush()?;
            if let Some(r) = &s.rho {
                let mut w = create(&spec_dir.join(format!("ue{:05}_rho.csv", csi.ue_id)))?;
                r.write_csv(&mut w)?;
                w.flush()?;
            }
        }
        files.push(spec_dir);
    }

    let manifest_path = dir.join("manifest.json");
    let mut names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    names.push("manifest.json".into());
    write_json(
        &manifest_path,
        &Manifest {
            toolkit: "chartkit",
            version: TOOLKIT_VERSION,
            scene_seed: cfg.scene.rng_seed,
            channel_seed: cfg.channel.rng_seed,
            config: cfg,
            files: names,
        },
    )?;
    files.push(manifest_path);

    Ok(RunOutput {
        chart,
        report,
        timing,
        files,
    })
}

/// Estimator pairs and channel models to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub base: ExperimentConfig,
    pub thetas: Vec<ThetaAlgo>,
    pub rhos: Vec<RhoAlgo>,
    pub models: Vec<ChannelModel>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            base: ExperimentConfig::default(),
            thetas: ThetaAlgo::ALL.to_vec(),
            rhos: RhoAlgo::ALL.to_vec(),
            models: ChannelModel::ALL.to_vec(),
        }
    }
}

/// TW/CT at `k` for one pair under one model, or the reason it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCell {
    pub theta_algo: ThetaAlgo,
    pub rho_algo: RhoAlgo,
    pub channel_model: ChannelModel,
    pub tw: Option<f64>,
    pub ct: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub n: usize,
    pub k: usize,
    pub cells: Vec<SuiteCell>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub timings: Vec<TimingRecord>,
}

impl SuiteReport {
    pub fn cell(&self, theta: ThetaAlgo, rho: RhoAlgo, model: ChannelModel) -> Option<&SuiteCell> {
        self.cells
            .iter()
            .find(|c| c.theta_algo == theta && c.rho_algo == rho && c.channel_model == model)
    }

    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(|c| c.error.is_none())
    }

    /// A row per estimator pair; TW then CT columns per channel model.
    pub fn format_table(&self) -> String {
        let mut pairs: Vec<(ThetaAlgo, RhoAlgo)> = Vec::new();
        let mut models: Vec<ChannelModel> = Vec::new();
        for c in &self.cells {
            if !pairs.contains(&(c.theta_algo, c.rho_algo)) {
                pairs.push((c.theta_algo, c.rho_algo));
            }
            if !models.contains(&c.channel_model) {
                models.push(c.channel_model);
            }
        }
        let mut out = String::new();
        let _ = writeln!(out, "TW and CT at k = {} (n = {})", self.k, self.n);
        let _ = write!(out, "{:<20}", "theta/rho");
        for metric in ["TW", "CT"] {
            for m in &models {
                let _ = write!(out, " {:>10}", format!("{metric} {m}"));
            }
        }
        out.push('\n');
        for (t, r) in pairs {
            let _ = write!(out, "{:<20}", format!("{}/{}", t.label(), r.label()));
            for pick in [0, 1] {
                for &m in &models {
                    let v = self.cell(t, r, m).and_then(|c| if pick == 0 { c.tw } else { c.ct });
                    match v {
                        Some(v) => {
                            let _ = write!(out, " {v:>10.4}");
                        }
                        None => {
                            let _ = write!(out, " {:>10}", "failed");
                        }
                    }
                }
            }
            out.push('\n');
        }
        let failures: Vec<&SuiteCell> = self.cells.iter().filter(|c| c.error.is_some()).collect();
        if !failures.is_empty() {
            out.push('\n');
            for c in failures {
                let _ = writeln!(
                    out,
                    "{}/{} {}: {}",
                    c.theta_algo.label(),
                    c.rho_algo.label(),
                    c.channel_model,
                    c.error.as_deref().unwrap_or("")
                );
            }
        }
        out
    }
}

/// Scores every `theta x rho` pair under every model.
///
/// Angle and range estimates are computed once per estimator and model and
/// shared across pairs. A failing estimator marks its cells as failed; the
/// rest of the suite still runs. With `base.bench` on, every cell is also
/// timed.
pub fn run_suite(cfg: &SuiteConfig, mut progress: impl FnMut(&str)) -> Result<SuiteReport> {
    let base = &cfg.base;
    base.scene.validate()?;
    base.channel.validate()?;
    check_k(base.scene.n_ue, base.k_max)
        .map_err(|_| Error::InvalidConfig(format!("k_max {} is invalid for {} UEs", base.k_max, base.scene.n_ue)))?;
    if cfg.thetas.is_empty() || cfg.rhos.is_empty() || cfg.models.is_empty() {
        return Err(Error::InvalidConfig("suite needs at least one estimator pair and model".into()));
    }
    let est = make_estimator(&base.estimator, &base.channel)?;
    let scene = generate_scene(&base.scene)?;
    let evaluator = QualityEvaluator::new(&(0..scene.n_ue()).map(|i| scene.ground_position(i)).collect::<Vec<_>>())?;

    let mut cells = Vec::new();
    let mut timings = Vec::new();
    for &model in &cfg.models {
        let channel = ChannelParams {
            model,
            ..base.channel.clone()
        };
        progress(&format!("{model}: simulating {} UEs", scene.n_ue()));
        let data = simulate_channel(&scene, &channel, base.estimator.lr_training)?;

        let mut thetas: BTreeMap<ThetaAlgo, std::result::Result<Vec<f64>, String>> = BTreeMap::new();
        for &t in &cfg.thetas {
            progress(&format!("{model}: angle estimation with {}", t.label()));
            thetas.insert(t, est.thetas(t, &data, base.parallel).map_err(|e| e.to_string()));
        }
        let mut rhos: BTreeMap<RhoAlgo, std::result::Result<Vec<f64>, String>> = BTreeMap::new();
        for &r in &cfg.rhos {
            progress(&format!("{model}: range estimation with {}", r.label()));
            let res = check_pair_supported(&channel, r)
                .and_then(|_| est.rhos(r, &data, base.parallel))
                .map_err(|e| e.to_string());
            rhos.insert(r, res);
        }

        for &t in &cfg.thetas {
            for &r in &cfg.rhos {
                let scored = match (&thetas[&t], &rhos[&r]) {
                    (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                    (Ok(th), Ok(rh)) => {
                        let est_list = zip_estimates(&data, th, rh);
                        build_chart(&est_list, &scene, r.is_metric())
                            .and_then(|chart| evaluator.curve(&chart.estimated_positions(), base.k_max))
                            .map_err(|e| e.to_string())
                    }
                };
                let cell = match scored {
                    Ok(rep) => {
                        let (tw, ct) = rep.at(base.k_max).expect("curve covers k_max");
                        SuiteCell { theta_algo: t, rho_algo: r, channel_model: model, tw: Some(tw), ct: Some(ct), error: None }
                    }
                    Err(e) => SuiteCell { theta_algo: t, rho_algo: r, channel_model: model, tw: None, ct: None, error: Some(e) },
                };
                if base.bench && cell.error.is_none() {
                    progress(&format!("{model}: timing {}/{}", t.label(), r.label()));
                    timings.push(time_pipeline(&est, t, r, model, &data, base.repeats)?);
                }
                cells.push(cell);
            }
        }
    }
    Ok(SuiteReport {
        n: scene.n_ue(),
        k: base.k_max,
        cells,
        timings,
    })
}

/// Writes `suite.json`, `suite.txt` and, with timings, `runtime.json` and
/// `runtime.txt` into `dir`.
pub fn write_suite(report: &SuiteReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let json = dir.join("suite.json");
    write_json(&json, report)?;
    files.push(json);
    let txt = dir.join("suite.txt");
    fs::write(&txt, report.format_table())?;
    files.push(txt);
    if !report.timings.is_empty() {
        let rt = dir.join("runtime.json");
        write_json(&rt, &report.timings)?;
        files.push(rt);
        let rtt = dir.join("runtime.txt");
        fs::write(&rtt, format_timing_table(&report.timings))?;
        files.push(rtt);
    }
    Ok(files)
}
