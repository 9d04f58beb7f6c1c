//! End-to-end pipeline behavior: isometry of perfect estimates, determinism
//! across thread counts, and the file formats other tools read.

mod common;

use chartkit::channel::ChannelModel;
use chartkit::chart::{build_chart, perfect_estimates, polar_to_chart};
use chartkit::estimate::{RhoAlgo, ThetaAlgo};
use chartkit::experiment::{run_experiment, ExperimentConfig};
use chartkit::metrics::{quality_curve, QualityReport};
use std::fs;
use std::path::Path;

fn config(dir: &Path, n_ue: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.scene.n_ue = n_ue;
    cfg.scene.n_vip = n_ue / 8;
    cfg.k_max = chartkit::metrics::max_valid_k(n_ue).unwrap().min(40);
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn perfect_estimates_give_unit_quality() {
    let scene = common::scene(600, 7);
    let chart = build_chart(&perfect_estimates(&scene), &scene, true).unwrap();
    let r = quality_curve(&chart.truth, &chart.estimated_positions(), 102).unwrap();
    assert!(r.tw.iter().all(|&v| v == 1.0));
    assert!(r.ct.iter().all(|&v| v == 1.0));
}

#[test]
fn height_correction_matters_for_true_slant_range() {
    // Feeding slant range as a plain radius bends the chart near the BS.
    let scene = common::scene(600, 7);
    let est = perfect_estimates(&scene);
    let corrected = build_chart(&est, &scene, true).unwrap();
    let plain = build_chart(&est, &scene, false).unwrap();
    let rc = quality_curve(&corrected.truth, &corrected.estimated_positions(), 30).unwrap();
    let rp = quality_curve(&plain.truth, &plain.estimated_positions(), 30).unwrap();
    assert_eq!(rc.tw[29], 1.0);
    assert!(rp.tw[29] <= rc.tw[29]);
    for (p, t) in plain.points.iter().zip(&plain.truth) {
        let radial = (p.x.hypot(p.y) - t[0].hypot(t[1])).abs();
        assert!(radial <= 8.5 + 1e-9);
    }
}

#[test]
fn polar_map_is_height_consistent() {
    let [x, y] = polar_to_chart(90.0, (100.0f64 * 100.0 + 8.5 * 8.5).sqrt(), 8.5, true);
    assert!(x.abs() < 1e-9 && (y - 100.0).abs() < 1e-9);
}

fn run_in_pool(threads: usize, cfg: &ExperimentConfig) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| run_experiment(cfg, |_| {}).unwrap());
}

#[test]
fn serial_and_parallel_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let mut serial = config(a.path(), 300);
    serial.parallel = false;
    let mut parallel = config(b.path(), 300);
    parallel.parallel = true;
    run_in_pool(1, &serial);
    run_in_pool(4, &parallel);
    let mut again = parallel.clone();
    again.output_dir = c.path().to_path_buf();
    run_in_pool(3, &again);
    for f in ["chart.csv", "metrics.json"] {
        let x = fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, fs::read(b.path().join(f)).unwrap(), "{f}");
        assert_eq!(x, fs::read(c.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_changes_the_chart() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg_a = config(a.path(), 64);
    let mut cfg_b = config(b.path(), 64);
    cfg_b.set_seed(2);
    run_experiment(&cfg_a, |_| {}).unwrap();
    run_experiment(&cfg_b, |_| {}).unwrap();
    assert_ne!(
        fs::read(a.path().join("chart.csv")).unwrap(),
        fs::read(b.path().join("chart.csv")).unwrap()
    );
}

#[test]
fn chart_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), 50);
    cfg.theta_algo = ThetaAlgo::Bartlett;
    cfg.rho_algo = RhoAlgo::Bartlett;
    let out = run_experiment(&cfg, |_| {}).unwrap();
    let text = fs::read_to_string(dir.path().join("chart.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "ue_id,true_x,true_y,est_x,est_y,is_vip");
    let mut vip = 0;
    for (row, (p, t)) in lines.zip(out.chart.points.iter().zip(&out.chart.truth)) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0].parse::<usize>().unwrap(), p.ue_id);
        let vals: Vec<f64> = cols[1..5].iter().map(|c| c.parse().unwrap()).collect();
        for (v, want) in vals.iter().zip([t[0], t[1], p.x, p.y]) {
            assert!((v - want).abs() <= 5e-7, "{v} vs {want}");
        }
        vip += cols[5].parse::<u32>().unwrap();
    }
    assert_eq!(vip as usize, cfg.scene.n_vip);
}

#[test]
fn metrics_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 40);
    let out = run_experiment(&cfg, |_| {}).unwrap();
    let text = fs::read_to_string(dir.path().join("metrics.json")).unwrap();
    let parsed: QualityReport = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, out.report);
    assert_eq!(parsed.n, 40);
    assert_eq!(parsed.k.len(), cfg.k_max);
}

#[test]
fn manifest_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = config(a.path(), 48);
    cfg.channel.model = ChannelModel::Qlos;
    cfg.theta_algo = ThetaAlgo::MinNorm;
    run_experiment(&cfg, |_| {}).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    let mut replay: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    replay.output_dir = b.path().to_path_buf();
    run_experiment(&replay, |_| {}).unwrap();
    for f in ["chart.csv", "metrics.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn tiny_smoke_run_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), 8);
    cfg.k_max = 2;
    let start = std::time::Instant::now();
    run_experiment(&cfg, |_| {}).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
}
