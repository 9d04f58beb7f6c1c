//! Shared helpers for the integration and acceptance tests: an independent
//! brute-force TW/CT implementation, random unitary matrices and small
//! dataset builders.
#![allow(dead_code)]

use chartkit::channel::{generate_csi, ChannelParams};
use chartkit::estimate::Dataset;
use chartkit::scene::{generate_scene, Scene, SceneConfig};
use chartkit::{CMat, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rank of `j` around `i`, counted directly from the definition: one plus
/// the number of other points strictly closer, or equally close with a
/// smaller index.
pub fn brute_rank(p: &[[f64; 2]], i: usize, j: usize) -> usize {
    let d = |a: usize, b: usize| {
        let dx = p[a][0] - p[b][0];
        let dy = p[a][1] - p[b][1];
        dx * dx + dy * dy
    };
    let dij = d(i, j);
    1 + (0..p.len())
        .filter(|&l| l != i && l != j)
        .filter(|&l| {
            let dil = d(i, l);
            dil < dij || (dil == dij && l < j)
        })
        .count()
}

/// Neighborhood sets and penalty sum evaluated pair by pair.
///
/// `penalize_in` provides the K-neighborhoods; `ranked_by` supplies the ranks
/// that are penalized when a neighbor is not among its own K nearest.
fn brute_penalty(penalize_in: &[[f64; 2]], ranked_by: &[[f64; 2]], k: usize) -> f64 {
    let n = penalize_in.len();
    let mut sum = 0usize;
    for i in 0..n {
        let neighborhood: Vec<usize> = (0..n).filter(|&j| j != i && brute_rank(penalize_in, i, j) <= k).collect();
        assert_eq!(neighborhood.len(), k);
        for j in neighborhood {
            let r = brute_rank(ranked_by, i, j);
            if r > k {
                sum += r - k;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * sum as f64
}

pub fn brute_trustworthiness(truth: &[[f64; 2]], chart: &[[f64; 2]], k: usize) -> f64 {
    brute_penalty(chart, truth, k)
}

pub fn brute_continuity(truth: &[[f64; 2]], chart: &[[f64; 2]], k: usize) -> f64 {
    brute_penalty(truth, chart, k)
}

pub fn random_points(n: usize, rng: &mut impl Rng) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| [rng.random_range(-500.0..500.0), rng.random_range(0.0..500.0)])
        .collect()
}

/// Random `n x n` unitary from Gram-Schmidt on a complex Gaussian-ish matrix.
pub fn random_unitary(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        for q in &cols {
            let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(q) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    CMat::from_fn(n, n, |i, j| cols[j][i])
}

pub fn scene(n_ue: usize, seed: u64) -> Scene {
    generate_scene(&SceneConfig {
        n_ue,
        n_vip: (n_ue * 234 / 2048).min(n_ue),
        rng_seed: seed,
        ..SceneConfig::default()
    })
    .unwrap()
}

pub fn dataset(scene: &Scene, params: &ChannelParams) -> Dataset {
    Dataset {
        csi: (0..scene.n_ue()).map(|i| generate_csi(scene, i, params).unwrap()).collect(),
        training_rho: (0..scene.n_ue().min(256)).map(|i| scene.true_polar(i).rho).collect(),
    }
}

/// Applies `x -> scale * R(angle) x + shift` to every point.
pub fn similarity(p: &[[f64; 2]], scale: f64, angle: f64, shift: [f64; 2]) -> Vec<[f64; 2]> {
    let (s, c) = angle.sin_cos();
    p.iter()
        .map(|q| {
            [
                scale * (c * q[0] - s * q[1]) + shift[0],
                scale * (s * q[0] + c * q[1]) + shift[1],
            ]
        })
        .collect()
}
