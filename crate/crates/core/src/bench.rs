//! Wall-clock timing of estimation pipelines.
//!
//! Only estimation is timed: covariance, spectra, peak search and range
//! prediction (including the LR fit). The dataset is generated before the
//! clock starts, one untimed warm-up pass runs first, and timed passes run on
//! the calling thread.

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::estimate::{Dataset, Estimator, RhoAlgo, ThetaAlgo};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub theta_algo: ThetaAlgo,
    pub rho_algo: RhoAlgo,
    pub channel_model: ChannelModel,
    pub n_ue: usize,
    pub seconds_mean: f64,
    pub seconds_std: f64,
    pub repeats: usize,
}

/// Population mean and standard deviation.
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Times the `(theta, rho)` pipeline over every UE of `data`.
pub fn time_pipeline(
    est: &Estimator,
    theta: ThetaAlgo,
    rho: RhoAlgo,
    model: ChannelModel,
    data: &Dataset,
    repeats: usize,
) -> Result<TimingRecord> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("benchmark repeats must be at least 1".into()));
    }
    if data.is_empty() {
        return Err(Error::InvalidConfig("benchmark dataset is empty".into()));
    }
    let run = || est.estimate(theta, rho, data, false);
    std::hint::black_box(run()?);
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        std::hint::black_box(run()?);
        samples.push(start.elapsed().as_secs_f64());
    }
    let (seconds_mean, seconds_std) = mean_std(&samples);
    Ok(TimingRecord {
        theta_algo: theta,
        rho_algo: rho,
        channel_model: model,
        n_ue: data.len(),
        seconds_mean,
        seconds_std,
        repeats,
    })
}

/// Every `model x theta x rho` combination, in that nesting order.
pub fn benchmark_matrix(
    est: &Estimator,
    thetas: &[ThetaAlgo],
    rhos: &[RhoAlgo],
    datasets: &[(ChannelModel, Dataset)],
    repeats: usize,
    mut progress: impl FnMut(&TimingRecord),
) -> Result<Vec<TimingRecord>> {
    let mut out = Vec::with_capacity(datasets.len() * thetas.len() * rhos.len());
    for (model, data) in datasets {
        for &t in thetas {
            for &r in rhos {
                let rec = time_pipeline(est, t, r, *model, data, repeats)?;
                progress(&rec);
                out.push(rec);
            }
        }
    }
    Ok(out)
}

/// One block per channel model: a row per angle estimator, a column per
/// range estimator, mean seconds in each cell.
pub fn format_timing_table(records: &[TimingRecord]) -> String {
    let mut models: Vec<ChannelModel> = Vec::new();
    let mut thetas: Vec<ThetaAlgo> = Vec::new();
    let mut rhos: Vec<RhoAlgo> = Vec::new();
    for r in records {
        push_unique(&mut models, r.channel_model);
        push_unique(&mut thetas, r.theta_algo);
        push_unique(&mut rhos, r.rho_algo);
    }
    let mut out = String::new();
    for m in models {
        let _ = writeln!(out, "Execution runtimes, {m} (seconds)");
        let _ = write!(out, "{:<10}", "theta\\rho");
        for r in &rhos {
            let _ = write!(out, " {:>10}", r.label());
        }
        out.push('\n');
        for t in &thetas {
            let _ = write!(out, "{:<10}", t.label());
            for r in &rhos {
                let cell = records
                    .iter()
                    .find(|x| x.channel_model == m && x.theta_algo == *t && x.rho_algo == *r);
                match cell {
                    Some(x) => {
                        let _ = write!(out, " {:>10.4}", x.seconds_mean);
                    }
                    None => {
                        let _ = write!(out, " {:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}
