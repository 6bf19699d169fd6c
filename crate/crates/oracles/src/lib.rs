//! Reference computations for tests.
//!
//! Everything here is written directly from the defining formulas with plain
//! loops over `Vec<Vec<f64>>`, sharing no code with `plunge-core`. Matrices
//! are row-major `Vec<Vec<f64>>`; return panels are given column-wise (one
//! `Vec` per entity).

#![allow(clippy::needless_range_loop)]

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

pub type Matrix = Vec<Vec<f64>>;

fn avg(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in xs {
        s += x;
    }
    s / xs.len() as f64
}

/// Correlation of every pair of columns from the raw-moment form
/// `<(R_i - mu_i)(R_j - mu_j)> / sqrt((<R_i^2> - mu_i^2)(<R_j^2> - mu_j^2))`.
pub fn brute_force_correlation(columns: &[Vec<f64>]) -> Matrix {
    let n = columns.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let ri = &columns[i];
            let rj = &columns[j];
            let mi = avg(ri);
            let mj = avg(rj);
            let num: Vec<f64> = ri
                .iter()
                .zip(rj)
                .map(|(a, b)| (a - mi) * (b - mj))
                .collect();
            let sq_i: Vec<f64> = ri.iter().map(|a| a * a).collect();
            let sq_j: Vec<f64> = rj.iter().map(|b| b * b).collect();
            let den = ((avg(&sq_i) - mi * mi) * (avg(&sq_j) - mj * mj)).sqrt();
            out[i][j] = avg(&num) / den;
        }
    }
    out
}

/// Population standard deviation: mean first, then mean squared deviation.
pub fn two_pass_volatility(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    for x in xs {
        sum += x;
    }
    let mu = sum / xs.len() as f64;
    let mut ss = 0.0;
    for x in xs {
        ss += (x - mu) * (x - mu);
    }
    (ss / xs.len() as f64).sqrt()
}

/// Mean, population stdev, min and max over the entries with `i < j`.
pub fn upper_triangle_stats(m: &Matrix) -> (f64, f64, f64, f64) {
    let n = m.len();
    let mut xs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i < j {
                xs.push(m[i][j]);
            }
        }
    }
    let mean = avg(&xs);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &x in &xs {
        if x < min {
            min = x;
        }
        if x > max {
            max = x;
        }
    }
    (mean, two_pass_volatility(&xs), min, max)
}

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn mat_vec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    norm
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration.
///
/// The iteration runs on `A^(2^k)` obtained by repeated squaring (rescaled
/// each step), which amplifies the spectral gap doubly exponentially, and
/// then finishes with ordinary power steps on `A` and a Rayleigh quotient.
pub fn power_iteration_lecm(a: &Matrix) -> f64 {
    let n = a.len();
    let mut p = a.clone();
    for _ in 0..30 {
        p = mat_mul(&p, &p);
        let scale = p.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        for row in p.iter_mut() {
            for x in row.iter_mut() {
                *x /= scale;
            }
        }
    }
    // the column of largest norm of the projector-like power is the dominant direction
    let mut v = (0..n)
        .map(|j| (0..n).map(|i| p[i][j]).collect::<Vec<f64>>())
        .max_by(|x, y| {
            let nx: f64 = x.iter().map(|v| v * v).sum();
            let ny: f64 = y.iter().map(|v| v * v).sum();
            nx.total_cmp(&ny)
        })
        .expect("non-empty matrix");
    normalize(&mut v);
    for _ in 0..50 {
        let mut w = mat_vec(a, &v);
        normalize(&mut w);
        v = w;
    }
    let av = mat_vec(a, &v);
    v.iter().zip(&av).map(|(x, y)| x * y).sum()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Standard normal draw (Box-Muller).
pub fn gaussian(rng: &mut StdRng) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// `n` columns of `t` returns with a random common factor loading, so that
/// correlations span weak to strong.
pub fn random_return_columns(rng: &mut StdRng, t: usize, n: usize) -> Vec<Vec<f64>> {
    let factor: Vec<f64> = (0..t).map(|_| 0.01 * gaussian(rng)).collect();
    (0..n)
        .map(|_| {
            let beta = rng.random_range(-1.5..2.5);
            let idio = rng.random_range(0.002..0.02);
            let drift = rng.random_range(-0.002..0.002);
            factor
                .iter()
                .map(|f| drift + beta * f + idio * gaussian(rng))
                .collect()
        })
        .collect()
}

/// Random valid correlation matrix: a normalised Gram matrix `D^-1/2 G D^-1/2`
/// with `G = X X^T` for a random `n x k` matrix `X` (`k` itself random, so
/// both full-rank and rank-deficient matrices occur).
pub fn random_correlation_matrix(rng: &mut StdRng, n: usize) -> Matrix {
    let k = rng.random_range(1..=2 * n);
    let common = rng.random_range(0.0..2.0);
    let shared: Vec<f64> = (0..k).map(|_| gaussian(rng)).collect();
    let x: Matrix = (0..n)
        .map(|_| (0..k).map(|c| common * shared[c] + gaussian(rng)).collect())
        .collect();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = x[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum();
        }
    }
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            c[i][j] = if i == j {
                1.0
            } else {
                g[i][j] / (g[i][i] * g[j][j]).sqrt()
            };
        }
    }
    for i in 0..n {
        for j in 0..i {
            c[i][j] = c[j][i];
        }
    }
    c
}

/// Random symmetric matrix with unit diagonal and off-diagonal entries in
/// `[-1, 1]` (not necessarily positive semidefinite).
pub fn random_symmetric_unit_diagonal(rng: &mut StdRng, n: usize) -> Matrix {
    let mut c = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random_range(-1.0..=1.0);
            c[i][j] = v;
            c[j][i] = v;
        }
    }
    c
}

/// First `n` outputs of xoshiro256++ with its state filled by four SplitMix64
/// outputs of `seed`, straight from the reference algorithms.
pub fn xoshiro256pp_reference(seed: u64, n: usize) -> Vec<u64> {
    let mut sm = seed;
    let mut splitmix = || {
        sm = sm.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = sm;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    let mut s = [splitmix(), splitmix(), splitmix(), splitmix()];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]));
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
    }
    out
}

/// Published monthly (month, LECM, Sensex PE) observations around the
/// May 2006 and January 2008 crashes.
pub fn sensex_months() -> Vec<(String, f64, f64)> {
    include_str!("../fixtures/sensex_months.csv")
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            (
                f[0].to_string(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect()
}
