//! Covariance estimation, Hermitian eigendecomposition, signal/noise subspace
//! splitting and Cholesky factorization.
//!
//! These are the numerics underneath every spectral estimator in [`crate::aoa`]
//! and [`crate::range`].

use crate::channel::CsiMatrix;
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, CMat, C64};
use serde::{Deserialize, Serialize};

/// Sample axis a covariance matrix was built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Antennas,
    Subcarriers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub matrix: CMat,
    pub axis: Axis,
    pub snapshot_count: usize,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Wraps an existing Hermitian matrix (tests, synthetic inputs).
    pub fn from_matrix(matrix: CMat, axis: Axis) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Domain("covariance must be square".into()));
        }
        check_hermitian(&matrix)?;
        Ok(Self {
            matrix,
            axis,
            snapshot_count: 0,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            matrix: self.matrix.scale(c),
            ..self.clone()
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Default diagonal loading: `1e-9 * trace(R) / N`.
    pub fn default_loading(&self) -> f64 {
        1e-9 * self.trace() / self.dim() as f64
    }
}

/// `R = (1/M) sum_m h_m h_m^H` over equal-length snapshots.
pub fn covariance<'a, I>(snapshots: I, axis: Axis) -> Result<CovarianceMatrix>
where
    I: IntoIterator<Item = &'a [C64]>,
{
    let mut iter = snapshots.into_iter().peekable();
    let n = match iter.peek() {
        Some(first) => first.len(),
        None => return Err(Error::Domain("covariance of an empty snapshot list".into())),
    };
    if n == 0 {
        return Err(Error::Domain("zero-length snapshots".into()));
    }
    let mut acc = CMat::zeros(n, n);
    let mut m = 0usize;
    for h in iter {
        if h.len() != n {
            return Err(Error::Domain(format!(
                "snapshot length {} differs from {}",
                h.len(),
                n
            )));
        }
        accumulate_outer(&mut acc, h);
        m += 1;
    }
    Ok(finish(acc, m, axis))
}

/// Covariance over antennas, one snapshot per subcarrier row.
pub fn antenna_covariance(csi: &CsiMatrix) -> CovarianceMatrix {
    let n = csi.n_rx();
    let mut acc = CMat::zeros(n, n);
    for row in csi.antenna_snapshots() {
        accumulate_outer(&mut acc, row);
    }
    finish(acc, csi.n_sub(), Axis::Antennas)
}

/// Covariance over subcarriers, one snapshot per antenna column.
pub fn subcarrier_covariance(csi: &CsiMatrix) -> CovarianceMatrix {
    let n = csi.n_sub();
    let cols = csi.n_rx();
    let data = csi.entries.as_slice();
    let mut acc = CMat::zeros(n, n);
    for a in 0..cols {
        for i in 0..n {
            let hi = data[i * cols + a];
            for j in i..n {
                acc[(i, j)] += hi * data[j * cols + a].conj();
            }
        }
    }
    finish(acc, cols, Axis::Subcarriers)
}

// Upper triangle only; `finish` mirrors it.
#[inline]
fn accumulate_outer(acc: &mut CMat, h: &[C64]) {
    let n = h.len();
    for i in 0..n {
        let hi = h[i];
        for j in i..n {
            acc[(i, j)] += hi * h[j].conj();
        }
    }
}

fn finish(mut acc: CMat, m: usize, axis: Axis) -> CovarianceMatrix {
    let n = acc.rows();
    let inv = 1.0 / m as f64;
    for i in 0..n {
        acc[(i, i)] = C64::new(acc[(i, i)].re * inv, 0.0);
        for j in i + 1..n {
            let v = acc[(i, j)] * inv;
            acc[(i, j)] = v;
            acc[(j, i)] = v.conj();
        }
    }
    CovarianceMatrix {
        matrix: acc,
        axis,
        snapshot_count: m,
    }
}

fn check_hermitian(m: &CMat) -> Result<()> {
    let defect = m.hermitian_defect();
    if defect > 1e-10 {
        return Err(Error::Domain(format!(
            "matrix is not Hermitian (relative defect {defect:e})"
        )));
    }
    Ok(())
}

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.column(i)
    }

    /// `V diag(lambda) V^H`
    pub fn reconstruct(&self) -> CMat {
        let n = self.dim();
        let v = &self.eigenvectors;
        CMat::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)].conj())
                .sum()
        })
    }
}

pub const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Each rotation is the unitary `[[c, s e^{ia}], [-s e^{-ia}, c]]` that zeroes
/// `a_pq = |a_pq| e^{ia}` while keeping the diagonal real. Iteration stops
/// when the off-diagonal Frobenius norm drops below `1e-12 ||R||_F`.
/// Eigenvectors are normalized so that their largest-magnitude component is
/// real and positive.
pub fn hermitian_eig(r: &CMat) -> Result<EigenDecomposition> {
    if !r.is_square() {
        return Err(Error::Domain("eigendecomposition of a non-square matrix".into()));
    }
    check_hermitian(r)?;
    let n = r.rows();

    // Work on the Hermitian part; the diagonal is forced real.
    let mut a = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(r[(i, i)].re, 0.0)
        } else {
            (r[(i, j)] + r[(j, i)].conj()) * 0.5
        }
    });
    let mut v = CMat::identity(n);
    let tol = JACOBI_REL_TOL * a.frobenius_norm();

    let off_norm = |a: &CMat| {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * a[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) <= tol;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        converged = off_norm(&a) <= tol;
    }
    if !converged {
        return Err(Error::NotConverged {
            sweeps,
            off_norm: off_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        let mut best = -1.0;
        for k in 0..n {
            let m = v[(k, src)].norm_sqr();
            if m > best {
                best = m;
                pivot = k;
            }
        }
        let phase = v[(pivot, src)];
        let unit = if phase.norm() > 0.0 {
            phase.conj() / phase.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for k in 0..n {
            eigenvectors[(k, dst)] = v[(k, src)] * unit;
        }
        eigenvectors[(pivot, dst)] = C64::new(eigenvectors[(pivot, dst)].norm(), 0.0);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

#[inline]
fn rotate(a: &mut CMat, v: &mut CMat, p: usize, q: usize) {
    let apq = a[(p, q)];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let n = a.rows();
    let e = apq / b;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * b);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let s_e = e * s;
    let s_ec = e.conj() * s;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let new_kp = akp * c - akq * s_ec;
        let new_kq = akp * s_e + akq * c;
        a[(k, p)] = new_kp;
        a[(k, q)] = new_kq;
        a[(p, k)] = new_kp.conj();
        a[(q, k)] = new_kq.conj();
    }
    a[(p, p)] = C64::new(a[(p, p)].re - t * b, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re + t * b, 0.0);
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * s_ec;
        v[(k, q)] = vkp * s_e + vkq * c;
    }
}

/// How many leading eigenvectors count as signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    FixedK(usize),
    /// Eigenvalue `l_i` is signal iff `l_i > tau * l_max`.
    RatioThreshold(f64),
}

impl Default for SplitPolicy {
    fn default() -> Self {
        SplitPolicy::FixedK(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSplit {
    pub signal_dim: usize,
    pub signal_basis: CMat,
    pub noise_basis: CMat,
}

impl SubspaceSplit {
    pub fn dim(&self) -> usize {
        self.noise_basis.rows()
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_basis.cols()
    }

    /// Builds a split directly from a noise basis (columns assumed orthonormal).
    pub fn from_noise_basis(noise_basis: CMat) -> Self {
        let n = noise_basis.rows();
        Self {
            signal_dim: n - noise_basis.cols(),
            signal_basis: CMat::zeros(n, 0),
            noise_basis,
        }
    }
}

pub fn split_subspaces(eig: &EigenDecomposition, policy: SplitPolicy) -> Result<SubspaceSplit> {
    let n = eig.dim();
    let k = match policy {
        SplitPolicy::FixedK(k) => {
            if k == 0 || k >= n {
                return Err(Error::DegenerateSplit(format!(
                    "signal dimension {k} must lie in 1..{n}"
                )));
            }
            k
        }
        SplitPolicy::RatioThreshold(tau) => {
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::DegenerateSplit(format!("invalid threshold {tau}")));
            }
            let lmax = eig.eigenvalues.first().copied().unwrap_or(0.0);
            let k = eig.eigenvalues.iter().filter(|&&l| l > tau * lmax).count();
            if k >= n {
                return Err(Error::DegenerateSplit(
                    "threshold leaves the noise subspace empty".into(),
                ));
            }
            if k == 0 {
                return Err(Error::DegenerateSplit(
                    "threshold leaves the signal subspace empty".into(),
                ));
            }
            k
        }
    };
    let v = &eig.eigenvectors;
    Ok(SubspaceSplit {
        signal_dim: k,
        signal_basis: CMat::from_fn(n, k, |i, j| v[(i, j)]),
        noise_basis: CMat::from_fn(n, n - k, |i, j| v[(i, k + j)]),
    })
}

/// Lower-triangular `L` with `L L^H = R + loading I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub l: CMat,
}

pub fn cholesky(r: &CMat, loading: f64) -> Result<CholeskyFactor> {
    if !r.is_square() {
        return Err(Error::Domain("Cholesky of a non-square matrix".into()));
    }
    if !(loading.is_finite() && loading >= 0.0) {
        return Err(Error::Domain(format!("invalid diagonal loading {loading}")));
    }
    let n = r.rows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = r[(j, j)].re + loading;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        let inv = 1.0 / djj;
        for i in j + 1..n {
            let mut s = r[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s * inv;
        }
    }
    Ok(CholeskyFactor { l })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// `||L^H a||^2 = a^H (L L^H) a`
    pub fn quad_form(&self, a: &[C64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        // (L^H a)_j = sum_{i >= j} conj(L_ij) a_i
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for i in j..n {
                s += self.l[(i, j)].conj() * a[i];
            }
            acc += s.norm_sqr();
        }
        acc
    }

    /// Forward substitution `L y = b`.
    pub fn solve_lower(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let row = self.l.row(i);
            let mut s = b[i];
            for k in 0..i {
                s -= row[k] * y[k];
            }
            y[i] = s / row[i].re;
        }
        y
    }

    /// `a^H (L L^H)^{-1} a = ||L^{-1} a||^2`
    pub fn quad_form_inverse(&self, a: &[C64]) -> f64 {
        norm_sqr(&self.solve_lower(a))
    }

    pub fn reconstruct(&self) -> CMat {
        self.l.matmul(&self.l.conj_transpose())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{noiseless_csi, steering_vector, ChannelParams};
    use crate::linalg::dot_h;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let gh = g.conj_transpose();
        CMat::from_fn(n, n, |i, j| (g[(i, j)] + gh[(i, j)]) * 0.5)
    }

    fn random_psd(n: usize, rank: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(n, rank, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        g.matmul(&g.conj_transpose())
    }

    #[test]
    fn single_snapshot_is_outer_product() {
        let h = vec![c(1.0, 0.5), c(-0.2, 2.0), c(0.0, -1.0)];
        let r = covariance([h.as_slice()], Axis::Antennas).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((r.matrix[(i, j)] - h[i] * h[j].conj()).norm() < 1e-15);
            }
        }
        let eig = hermitian_eig(&r.matrix).unwrap();
        assert!((eig.eigenvalues[0] - norm_sqr(&h)).abs() < 1e-12);
        assert!(eig.eigenvalues[1].abs() < 1e-12 && eig.eigenvalues[2].abs() < 1e-12);
    }

    #[test]
    fn standard_basis_snapshots_average_to_scaled_identity() {
        let n = 4;
        let basis: Vec<Vec<C64>> = (0..n)
            .map(|k| (0..n).map(|i| c(if i == k { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        let r = covariance(basis.iter().map(|v| v.as_slice()), Axis::Antennas).unwrap();
        assert_eq!(r.matrix, CMat::identity(n).scale(0.25));
    }

    #[test]
    fn empty_or_ragged_snapshots_are_rejected() {
        let empty: Vec<&[C64]> = Vec::new();
        assert!(matches!(covariance(empty, Axis::Antennas), Err(Error::Domain(_))));
        let a = vec![c(1.0, 0.0); 3];
        let b = vec![c(1.0, 0.0); 2];
        assert!(covariance([a.as_slice(), b.as_slice()], Axis::Antennas).is_err());
    }

    #[test]
    fn noiseless_los_rows_give_one_nonzero_eigenvalue() {
        let params = ChannelParams::default();
        let h = noiseless_csi(0, 60.0, 300.0, &params, 1.0, 0.0).unwrap();
        let r = antenna_covariance(&h);
        assert_eq!(r.snapshot_count, 32);
        let eig = hermitian_eig(&r.matrix.scale(1.0 / r.trace())).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-12);
        for &l in &eig.eigenvalues[1..] {
            assert!(l.abs() < 1e-12, "{l}");
        }
    }

    #[test]
    fn trace_equals_mean_snapshot_energy() {
        let params = ChannelParams::default();
        let h = noiseless_csi(0, 33.0, 120.0, &params, 1.0, 0.2).unwrap();
        let r = subcarrier_covariance(&h);
        let energy: f64 = h.subcarrier_snapshots().iter().map(|s| norm_sqr(s)).sum::<f64>() / 32.0;
        assert!((r.trace() - energy).abs() <= 1e-14 * energy);
        let via_generic = covariance(
            h.subcarrier_snapshots().iter().map(|v| v.as_slice()),
            Axis::Subcarriers,
        )
        .unwrap();
        assert!(r.matrix.sub(&via_generic.matrix).frobenius_norm() < 1e-12 * r.matrix.frobenius_norm());
    }

    #[test]
    fn diagonal_matrix_decomposes_trivially() {
        let mut r = CMat::zeros(2, 2);
        r[(0, 0)] = c(1.0, 0.0);
        r[(1, 1)] = c(3.0, 0.0);
        let eig = hermitian_eig(&r).unwrap();
        assert_eq!(eig.eigenvalues, vec![3.0, 1.0]);
        assert_eq!(eig.vector(0), vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(eig.vector(1), vec![c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn rank_one_top_eigenpair() {
        let h = vec![c(1.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)];
        let s = 2.0 / norm_sqr(&h).sqrt();
        let h: Vec<C64> = h.iter().map(|z| z * s).collect();
        let r = CMat::from_fn(3, 3, |i, j| h[i] * h[j].conj());
        let eig = hermitian_eig(&r).unwrap();
        assert!((eig.eigenvalues[0] - 4.0).abs() < 1e-12);
        let v = eig.vector(0);
        let overlap = dot_h(&v, &h).norm() / 2.0;
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        for seed in 0..5 {
            let r = random_hermitian(8, seed);
            let eig = hermitian_eig(&r).unwrap();
            let err = eig.reconstruct().sub(&r).frobenius_norm() / r.frobenius_norm();
            assert!(err < 1e-10, "seed {seed}: {err:e}");
            for w in eig.eigenvalues.windows(2) {
                assert!(w[0] >= w[1]);
            }
            // Orthonormal columns.
            let v = &eig.eigenvectors;
            let gram = v.conj_transpose().matmul(v);
            assert!(gram.sub(&CMat::identity(8)).frobenius_norm() < 1e-12);
            // Trace preserved.
            let sum: f64 = eig.eigenvalues.iter().sum();
            assert!((sum - r.trace().re).abs() < 1e-10 * r.frobenius_norm());
            // R v = lambda v.
            let lmax = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
            for k in 0..8 {
                let vk = eig.vector(k);
                let rv = r.mul_vec(&vk);
                let res: f64 = rv
                    .iter()
                    .zip(&vk)
                    .map(|(a, b)| (a - b * eig.eigenvalues[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(res < 1e-8 * lmax);
            }
        }
    }

    #[test]
    fn eigenvector_phase_convention() {
        let r = random_hermitian(6, 42);
        let eig = hermitian_eig(&r).unwrap();
        for k in 0..6 {
            let v = eig.vector(k);
            let (idx, big) = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap();
            assert!(big.im == 0.0 && big.re > 0.0, "vector {k} pivot {idx}: {big}");
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut r = CMat::identity(3);
        r[(0, 2)] = c(0.5, 0.0);
        assert!(matches!(hermitian_eig(&r), Err(Error::Domain(_))));
        assert!(hermitian_eig(&CMat::zeros(2, 3)).is_err());
    }

    #[test]
    fn zero_matrix_is_already_diagonal() {
        let eig = hermitian_eig(&CMat::zeros(3, 3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![0.0; 3]);
    }

    fn fake_eig(values: &[f64]) -> EigenDecomposition {
        EigenDecomposition {
            eigenvalues: values.to_vec(),
            eigenvectors: CMat::identity(values.len()),
        }
    }

    #[test]
    fn fixed_and_threshold_policies_agree_on_clear_gap() {
        let eig = fake_eig(&[10.0, 0.01, 0.01, 0.01]);
        let fixed = split_subspaces(&eig, SplitPolicy::FixedK(1)).unwrap();
        assert_eq!(fixed.noise_dim(), 3);
        assert_eq!(fixed.signal_dim, 1);
        let thresh = split_subspaces(&eig, SplitPolicy::RatioThreshold(0.01)).unwrap();
        assert_eq!(thresh, fixed);
    }

    #[test]
    fn degenerate_splits_are_errors() {
        let eig = fake_eig(&[1.0, 1.0, 1.0]);
        assert!(matches!(
            split_subspaces(&eig, SplitPolicy::RatioThreshold(0.01)),
            Err(Error::DegenerateSplit(_))
        ));
        assert!(split_subspaces(&eig, SplitPolicy::FixedK(0)).is_err());
        assert!(split_subspaces(&eig, SplitPolicy::FixedK(3)).is_err());
    }

    #[test]
    fn split_bases_are_orthonormal_and_complementary() {
        let r = random_psd(10, 3, 9);
        let eig = hermitian_eig(&r).unwrap();
        let split = split_subspaces(&eig, SplitPolicy::FixedK(3)).unwrap();
        assert_eq!(split.signal_dim + split.noise_dim(), 10);
        let cross = split.noise_basis.conj_transpose().matmul(&split.signal_basis);
        assert!(cross.frobenius_norm() < 1e-10);
        let gram = split.noise_basis.conj_transpose().matmul(&split.noise_basis);
        assert!(gram.sub(&CMat::identity(7)).frobenius_norm() < 1e-10);
    }

    #[test]
    fn noise_basis_is_orthogonal_to_true_steering_vector() {
        let params = ChannelParams::default();
        let h = noiseless_csi(0, 72.0, 250.0, &params, 1.0, 0.0).unwrap();
        let r = antenna_covariance(&h);
        let eig = hermitian_eig(&r.matrix).unwrap();
        let split = split_subspaces(&eig, SplitPolicy::FixedK(1)).unwrap();
        let a = steering_vector(72.0, 32).unwrap();
        let proj = split.noise_basis.conj_transpose().mul_vec(&a);
        assert!(norm_sqr(&proj).sqrt() < 1e-8 * norm_sqr(&a).sqrt());
    }

    #[test]
    fn cholesky_trivial_cases() {
        let l = cholesky(&CMat::identity(3), 0.0).unwrap();
        assert_eq!(l.l, CMat::identity(3));
        let mut r = CMat::zeros(2, 2);
        r[(0, 0)] = c(4.0, 0.0);
        r[(1, 1)] = c(9.0, 0.0);
        let l = cholesky(&r, 0.0).unwrap();
        assert_eq!(l.l[(0, 0)], c(2.0, 0.0));
        assert_eq!(l.l[(1, 1)], c(3.0, 0.0));
        assert_eq!(l.l[(1, 0)], c(0.0, 0.0));
    }

    #[test]
    fn cholesky_with_loading_reconstructs_rank_deficient_psd() {
        let r = random_psd(12, 2, 5);
        let eig = hermitian_eig(&r).unwrap();
        let loading = 1e-6 * eig.eigenvalues[0];
        let f = cholesky(&r, loading).unwrap();
        let target = CMat::from_fn(12, 12, |i, j| r[(i, j)] + if i == j { c(loading, 0.0) } else { c(0.0, 0.0) });
        let err = f.reconstruct().sub(&target).frobenius_norm() / target.frobenius_norm();
        assert!(err < 1e-10, "{err:e}");
        for i in 0..12 {
            for j in i + 1..12 {
                assert_eq!(f.l[(i, j)], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn cholesky_reports_non_positive_pivot() {
        let r = random_psd(4, 1, 3);
        match cholesky(&r, 0.0) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert!(pivot >= 1),
            other => panic!("expected failure, got {other:?}"),
        }
        assert!(cholesky(&r, 1e-9 * r.trace().re).is_ok());
    }

    #[test]
    fn cholesky_quadratic_forms() {
        let r = random_psd(6, 6, 11);
        let f = cholesky(&r, 0.0).unwrap();
        let a = steering_vector(40.0, 6).unwrap();
        let direct = dot_h(&a, &r.mul_vec(&a)).re;
        assert!((f.quad_form(&a) - direct).abs() < 1e-10 * direct);
        let y = f.solve_lower(&a);
        let back = f.l.mul_vec(&y);
        for (u, w) in back.iter().zip(&a) {
            assert!((u - w).norm() < 1e-10);
        }
    }
}
