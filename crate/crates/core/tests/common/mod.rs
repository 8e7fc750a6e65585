//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use oudisp_core::field::{ComplexField, Gauge, GridSpec};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `e^M` by halving until `‖M‖ ≤ 1/2`, a 30-term Taylor sum, then squaring.
pub fn series_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = m.norm();
    let mut halvings = 0;
    while norm / 2f64.powi(halvings) > 0.5 {
        halvings += 1;
    }
    let a = m / 2f64.powi(halvings);
    let n = m.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    for _ in 0..halvings {
        sum = &sum * &sum;
    }
    sum
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// `∫₀ᵗ e^{sB} Q e^{sBᵀ} ds` by composite 5-point Gauss-Legendre on `panels` panels.
pub fn gramian_quadrature(
    q: &DMatrix<f64>,
    b: &DMatrix<f64>,
    t: f64,
    panels: usize,
) -> DMatrix<f64> {
    let n = q.nrows();
    let h = t / panels as f64;
    let mut acc = DMatrix::zeros(n, n);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let e = series_exp(&(b * (mid + x * h / 2.0)));
            acc += (&e * q * e.transpose()) * (w * h / 2.0);
        }
    }
    acc
}

/// Probabilists' Hermite polynomial by the three-term recurrence.
pub fn he(k: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if k == 0 {
        return a;
    }
    for j in 1..k {
        let c = x * b - j as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// `‖a - b‖_{L²(dγ)} / ‖b‖_{L²(dγ)}` for `φ`-gauge fields.
pub fn gauss_rel_err(a: &ComplexField, b: &ComplexField) -> f64 {
    let diff: Vec<Complex64> = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| x - y)
        .collect();
    let diff = ComplexField::new(*a.grid(), Gauge::Phi, diff).unwrap();
    diff.norm_gauss() / b.norm_gauss()
}

/// Relative `L²` error over `|x| ≤ radius` for flat fields.
pub fn l2_rel_err_within(a: &ComplexField, b: &ComplexField, radius: f64) -> f64 {
    let grid = a.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..grid.len() {
        if grid.radius_sq(k) <= radius * radius {
            num += (a.samples()[k] - b.samples()[k]).norm_sqr();
            den += b.samples()[k].norm_sqr();
        }
    }
    (num / den).sqrt()
}

/// A sum of three modulated Gaussian packets in the `ψ` gauge, returned as `φ`.
pub fn random_packets(grid: GridSpec, rng: &mut impl Rng) -> ComplexField {
    let packets: Vec<(f64, f64, f64, Complex64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.2..0.8),
                rng.gen_range(-1.5..1.5),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    ComplexField::from_fn(grid, Gauge::Psi, |x| {
        packets
            .iter()
            .map(|&(x0, w, k, c)| {
                let r2: f64 = x.iter().map(|v| (v - x0) * (v - x0)).sum();
                let phase: f64 = x.iter().map(|v| k * v).sum();
                c * (-w * r2).exp() * Complex64::cis(phase)
            })
            .sum()
    })
    .from_psi_gauge()
    .unwrap()
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            w * f(a + k as f64 * h)
        })
        .sum::<f64>()
        * h
}
