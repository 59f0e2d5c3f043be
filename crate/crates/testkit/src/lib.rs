//! Brute-force oracles used to check the analysis crates.
//!
//! Nothing here calls into the code under test; every routine is a direct,
//! slow restatement of the quantity it computes.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eigenvalues of [[a, b], [b, c]], largest first.
pub fn symmetric_2x2_eigenvalues(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mid = (a + c) / 2.0;
    let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    (mid + rad, mid - rad)
}

/// Top-`k` eigenpairs of a symmetric matrix by power iteration with
/// Hotelling deflation. The matrix is first shifted past its Gershgorin
/// bound so that every eigenvalue is strictly positive and the dominant one
/// is the algebraically largest.
pub fn power_eigenpairs(m: &DMatrix<f64>, k: usize, max_iter: usize) -> Vec<(f64, DVector<f64>)> {
    let n = m.nrows();
    let shift = (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] - off
        })
        .fold(f64::INFINITY, f64::min)
        .min(0.0)
        .abs()
        + m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut a = m + DMatrix::identity(n, n) * shift;
    let mut found: Vec<(f64, DVector<f64>)> = Vec::new();
    for j in 0..k {
        let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7 + j * 3) % 5) as f64);
        let project = |v: &mut DVector<f64>, found: &[(f64, DVector<f64>)]| {
            for (_, q) in found {
                let c = q.dot(v);
                *v -= q * c;
            }
        };
        project(&mut v, &found);
        v.normalize_mut();
        for _ in 0..max_iter {
            let mut w = &a * &v;
            project(&mut w, &found);
            let norm = w.norm();
            if norm == 0.0 {
                break;
            }
            w /= norm;
            let delta = (&w - &v).norm();
            v = w;
            if delta < 1e-15 {
                break;
            }
        }
        let lambda = v.dot(&(m * &v));
        a -= &v * v.transpose() * (lambda + shift);
        found.push((lambda, v));
    }
    found
}

/// Distance between two vectors up to a global sign.
pub fn sign_free_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm().min((a + b).norm())
}

/// Iterator over uniformly random unit vectors in ℝⁿ.
pub struct UnitVectors {
    rng: ChaCha8Rng,
    n: usize,
}

impl UnitVectors {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
        }
    }
}

impl Iterator for UnitVectors {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        // Box-Muller normals, normalized.
        let mut v = Vec::with_capacity(self.n);
        while v.len() < self.n {
            let u1: f64 = self.rng.random::<f64>().max(f64::MIN_POSITIVE);
            let u2: f64 = self.rng.random();
            let r = (-2.0 * u1.ln()).sqrt();
            v.push(r * (std::f64::consts::TAU * u2).cos());
            if v.len() < self.n {
                v.push(r * (std::f64::consts::TAU * u2).sin());
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        Some(v)
    }
}

/// vᵀMv with explicit loops over the column-major storage.
pub fn quadratic_form(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    assert_eq!(m.shape(), (n, n));
    m.as_slice()
        .chunks_exact(n)
        .zip(v)
        .map(|(col, &vj)| vj * col.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// Largest vᵀMv over `count` random unit vectors.
pub fn max_random_rayleigh(m: &DMatrix<f64>, count: usize, seed: u64) -> f64 {
    UnitVectors::new(m.nrows(), seed)
        .take(count)
        .map(|v| quadratic_form(m, &v))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Random orthogonal matrix by Gram-Schmidt on uniform entries.
pub fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
    for j in 0..n {
        for p in 0..j {
            let c = q.column(p).dot(&q.column(j));
            let prev = q.column(p).into_owned();
            q.column_mut(j).axpy(-c, &prev, 1.0);
        }
        let norm = q.column(j).norm();
        q.column_mut(j).unscale_mut(norm);
    }
    q
}

/// Q diag(spectrum) Qᵀ, symmetrized entrywise.
pub fn with_spectrum(spectrum: &[f64], seed: u64) -> DMatrix<f64> {
    let n = spectrum.len();
    let q = random_orthogonal(n, seed);
    let d = DMatrix::from_diagonal(&DVector::from_row_slice(spectrum));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) / 2.0
}

/// ZᵀZ by the triple loop.
pub fn cross_product(z: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, k) = z.shape();
    DMatrix::from_fn(k, k, |i, j| (0..rows).map(|r| z[(r, i)] * z[(r, j)]).sum())
}

/// Largest |x| over a matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Absolute difference of the two means divided by the pooled standard
/// deviation of the two classes.
pub fn separation(values: &[f64], first: &[bool]) -> f64 {
    let split = |want: bool| -> Vec<f64> {
        values
            .iter()
            .zip(first)
            .filter(|(_, &f)| f == want)
            .map(|(v, _)| *v)
            .collect()
    };
    let (a, b) = (split(true), split(false));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ss = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
    };
    let pooled = ((ss(&a) + ss(&b)) / (a.len() + b.len() - 2) as f64).sqrt();
    (mean(&a) - mean(&b)).abs() / pooled
}

/// Sum over columns of the population variance of each column.
pub fn total_variance(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| {
            let mean = c.mean();
            c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / c.len() as f64
        })
        .sum()
}
