#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use mccs::model::Seed;

pub fn gaussian_matrix(seed: Seed, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut rng = seed.rng();
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// `min ‖c‖₁ s.t. A·c = y` by enumerating every basic solution: an optimal
/// vertex of the LP `min Σt, −t ≤ c ≤ t` is supported on `p` linearly
/// independent columns of `A`.
pub fn lp_vertex_oracle(a: &DMatrix<f64>, y: &[f64]) -> f64 {
    let (p, q) = a.shape();
    let y = DVector::from_column_slice(y);
    let mut best = f64::INFINITY;
    for subset in combinations(q, p) {
        let sub = a.select_columns(&subset);
        let lu = sub.clone().full_piv_lu();
        if !lu.is_invertible() {
            continue;
        }
        let Some(c) = lu.solve(&y) else { continue };
        if (&sub * &c - &y).norm() > 1e-9 * (1.0 + y.norm()) {
            continue;
        }
        best = best.min(c.iter().map(|v| v.abs()).sum());
    }
    best
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Singular values of a 2×2 matrix in closed form.
pub fn singular_values_2x2(m: [[f64; 2]; 2]) -> (f64, f64) {
    let [[a, b], [c, d]] = m;
    let s = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let root = (s * s - 4.0 * det * det).max(0.0).sqrt();
    (((s + root) / 2.0).sqrt(), ((s - root) / 2.0).max(0.0).sqrt())
}

/// Nuclear norm by nalgebra's SVD, independent of the crate's own SVD.
pub fn reference_nuclear_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Minimizes `f` over `[lo, hi]` on a grid of spacing `step`.
pub fn grid_argmin(lo: f64, hi: f64, step: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = ((hi - lo) / step).round() as usize;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=n {
        let t = lo + k as f64 * step;
        let v = f(t);
        if v < best.0 {
            best = (v, t);
        }
    }
    best.1
}

/// `k`-sparse vector of length `n` with Gaussian entries on a random support.
pub fn sparse_vector(seed: Seed, n: usize, k: usize) -> Vec<f64> {
    let mut rng = seed.rng();
    let support = rand::seq::index::sample(&mut rng, n, k);
    let mut v = vec![0.0; n];
    for i in support.iter() {
        let g: f64 = StandardNormal.sample(&mut rng);
        v[i] = g + g.signum() * 0.5;
    }
    v
}

pub fn uniform_omega(seed: Seed, rows: usize, cols: usize, fraction: f64) -> Vec<(usize, usize)> {
    let mut rng = seed.rng();
    (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .filter(|_| rng.random::<f64>() < fraction)
        .collect()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
