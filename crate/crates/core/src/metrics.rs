//! Trustworthiness and continuity of a chart against ground truth.
//!
//! Both metrics are rank based. `rank(i, j)` is the 1-based position of `j`
//! in the ascending-distance ordering of all other points around `i`, with
//! distance ties (up to [`DISTANCE_TIE_TOLERANCE`]) broken by ascending index. The penalty sums are computed in
//! integers so the results are exactly reproducible and exactly dual:
//! `trustworthiness(a, b, k) == continuity(b, a, k)`.

use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Full neighbor ordering and rank lookup for a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    n: usize,
    // order[i * (n - 1) + r] is the point at rank r + 1 around i.
    order: Vec<u32>,
    // ranks[i * n + j] is rank(i, j); the diagonal holds 0.
    ranks: Vec<u32>,
}

impl RankTable {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rank(&self, i: usize, j: usize) -> u32 {
        self.ranks[i * self.n + j]
    }

    /// Other points around `i`, nearest first.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        let w = self.n - 1;
        &self.order[i * w..(i + 1) * w]
    }
}

fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Relative band inside which two squared distances count as equal.
///
/// Distances that are equal in exact arithmetic (points on a regular
/// estimate grid, mirrored pairs) come out of floating point a few ulps
/// apart, and a rotation or rescaling of the chart can flip that order. Such
/// near-ties are resolved by index instead, so ranks depend only on geometry.
pub const DISTANCE_TIE_TOLERANCE: f64 = 1e-9;

// Input sorted by (distance, index). Each run of distances within the tie
// band of the run's first element is reordered by index.
fn merge_near_ties(keyed: &mut [(f64, u32)]) {
    let mut start = 0;
    while start < keyed.len() {
        let limit = keyed[start].0 * (1.0 + DISTANCE_TIE_TOLERANCE);
        let mut end = start + 1;
        while end < keyed.len() && keyed[end].0 <= limit {
            end += 1;
        }
        if end - start > 1 {
            keyed[start..end].sort_unstable_by_key(|e| e.1);
        }
        start = end;
    }
}

/// Rank table of `points`, computed row-parallel.
pub fn rank_matrix(points: &[[f64; 2]]) -> Result<RankTable> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Domain(format!("rank table needs at least 2 points, got {n}")));
    }
    if n > u32::MAX as usize {
        return Err(Error::Domain("too many points for a rank table".into()));
    }
    if points.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Domain("rank table points must be finite".into()));
    }
    let w = n - 1;
    let mut order = vec![0u32; n * w];
    let mut ranks = vec![0u32; n * n];
    order
        .par_chunks_mut(w)
        .zip(ranks.par_chunks_mut(n))
        .enumerate()
        .for_each(|(i, (ord, rk))| {
            let mut keyed: Vec<(f64, u32)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(points[i], points[j]), j as u32))
                .collect();
            keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            merge_near_ties(&mut keyed);
            for (r, &(_, j)) in keyed.iter().enumerate() {
                ord[r] = j;
                rk[j as usize] = r as u32 + 1;
            }
        });
    Ok(RankTable { n, order, ranks })
}

/// Checks `1 <= k` and `2n - 3k - 1 > 0`.
pub fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || 3 * k + 1 >= 2 * n {
        return Err(Error::Domain(format!(
            "neighborhood size {k} invalid for {n} points (need 1 <= k and 2n - 3k - 1 > 0)"
        )));
    }
    Ok(())
}

/// Largest valid neighborhood size for `n` points, if any.
pub fn max_valid_k(n: usize) -> Option<usize> {
    let k = (2 * n).saturating_sub(2) / 3;
    (k >= 1).then_some(k)
}

fn normalizer(n: usize, k: usize) -> f64 {
    2.0 / (n as f64 * k as f64 * (2 * n - 3 * k - 1) as f64)
}

/// For every `K` in `1..=k_max`, the sum over `i` and over the first `K`
/// neighbors `j` of `i` in `provider` of `max(judge.rank(i, j) - K, 0)`.
///
/// Index 0 of the result is unused.
fn penalty_sums(provider: &RankTable, judge: &RankTable, k_max: usize) -> Vec<u64> {
    // Each (i, j) with provider rank c and judge rank t adds t - K for every
    // K in [c, min(t - 1, k_max)], i.e. a constant t and a slope -1 over that
    // range. Both are accumulated as difference arrays.
    let (consts, counts) = (0..provider.len())
        .into_par_iter()
        .fold(
            || (vec![0i64; k_max + 2], vec![0i64; k_max + 2]),
            |(mut c_acc, mut n_acc), i| {
                for (c0, &j) in provider.neighbors(i).iter().take(k_max).enumerate() {
                    let c = c0 + 1;
                    let t = judge.rank(i, j as usize) as usize;
                    let hi = (t - 1).min(k_max);
                    if hi >= c {
                        c_acc[c] += t as i64;
                        c_acc[hi + 1] -= t as i64;
                        n_acc[c] += 1;
                        n_acc[hi + 1] -= 1;
                    }
                }
                (c_acc, n_acc)
            },
        )
        .reduce(
            || (vec![0i64; k_max + 2], vec![0i64; k_max + 2]),
            |(mut a, mut b), (c, d)| {
                for (x, y) in a.iter_mut().zip(&c) {
                    *x += y;
                }
                for (x, y) in b.iter_mut().zip(&d) {
                    *x += y;
                }
                (a, b)
            },
        );
    let mut out = vec![0u64; k_max + 1];
    let (mut run_c, mut run_n) = (0i64, 0i64);
    for k in 1..=k_max {
        run_c += consts[k];
        run_n += counts[k];
        out[k] = (run_c - k as i64 * run_n) as u64;
    }
    out
}

fn check_pair(truth: &[[f64; 2]], chart: &[[f64; 2]]) -> Result<()> {
    if truth.len() != chart.len() {
        return Err(Error::Domain(format!(
            "truth has {} points but chart has {}",
            truth.len(),
            chart.len()
        )));
    }
    Ok(())
}

/// Ground-truth ranks, cached so several charts can be scored against them.
#[derive(Debug, Clone)]
pub struct QualityEvaluator {
    truth: RankTable,
}

impl QualityEvaluator {
    pub fn new(truth: &[[f64; 2]]) -> Result<Self> {
        Ok(Self {
            truth: rank_matrix(truth)?,
        })
    }

    pub fn n(&self) -> usize {
        self.truth.len()
    }

    pub fn curve(&self, chart: &[[f64; 2]], k_max: usize) -> Result<QualityReport> {
        let n = self.n();
        if chart.len() != n {
            return Err(Error::Domain(format!("truth has {n} points but chart has {}", chart.len())));
        }
        check_k(n, k_max)?;
        let chart_ranks = rank_matrix(chart)?;
        Ok(curve_from_tables(&self.truth, &chart_ranks, k_max))
    }
}

fn curve_from_tables(truth: &RankTable, chart: &RankTable, k_max: usize) -> QualityReport {
    let n = truth.len();
    let tw_pen = penalty_sums(chart, truth, k_max);
    let ct_pen = penalty_sums(truth, chart, k_max);
    let ks: Vec<usize> = (1..=k_max).collect();
    QualityReport {
        n,
        tw: ks.iter().map(|&k| 1.0 - normalizer(n, k) * tw_pen[k] as f64).collect(),
        ct: ks.iter().map(|&k| 1.0 - normalizer(n, k) * ct_pen[k] as f64).collect(),
        k: ks,
    }
}

/// Penalizes chart neighbors that are not truth neighbors.
pub fn trustworthiness(truth: &[[f64; 2]], chart: &[[f64; 2]], k: usize) -> Result<f64> {
    check_pair(truth, chart)?;
    check_k(truth.len(), k)?;
    let t = rank_matrix(truth)?;
    let c = rank_matrix(chart)?;
    Ok(1.0 - normalizer(truth.len(), k) * penalty_sums(&c, &t, k)[k] as f64)
}

/// Penalizes truth neighbors missing from the chart neighborhood.
pub fn continuity(truth: &[[f64; 2]], chart: &[[f64; 2]], k: usize) -> Result<f64> {
    trustworthiness(chart, truth, k)
}

/// TW and CT for `K = 1..=k_max`.
pub fn quality_curve(truth: &[[f64; 2]], chart: &[[f64; 2]], k_max: usize) -> Result<QualityReport> {
    check_pair(truth, chart)?;
    QualityEvaluator::new(truth)?.curve(chart, k_max)
}

/// Serialized as `{ "n": int, "k": [..], "tw": [..], "ct": [..] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub n: usize,
    pub k: Vec<usize>,
    pub tw: Vec<f64>,
    pub ct: Vec<f64>,
}

impl QualityReport {
    /// `(tw, ct)` at neighborhood size `k`, if it was evaluated.
    pub fn at(&self, k: usize) -> Option<(f64, f64)> {
        let i = self.k.iter().position(|&x| x == k)?;
        Some((self.tw[i], self.ct[i]))
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }
}
