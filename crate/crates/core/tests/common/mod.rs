//! Reference computations for the integration tests, written with plain
//! loops and no calls into the solvers they check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ris_core::{Complex64, EffectiveChannel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) / 2f64.sqrt()
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| cn(rng))
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| cn(rng))
}

pub fn random_phases(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

/// `K` users with unit-variance `D_k` and `g_k`.
pub fn random_eff(rng: &mut impl Rng, k: usize, n_b: usize, n_r: usize) -> EffectiveChannel {
    let d = (0..k).map(|_| random_matrix(rng, n_b, n_r)).collect();
    let g = (0..k).map(|_| random_vector(rng, n_b)).collect();
    EffectiveChannel::from_parts(d, g).unwrap()
}

/// `Σ_n D[:, n] ρ e^{jφ_n} + h`.
pub fn composite(d: &DMatrix<Complex64>, h: &DVector<Complex64>, rho: f64, phases: &[f64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = h.iter().copied().collect();
    for (n, &p) in phases.iter().enumerate() {
        let r = Complex64::from_polar(rho, p);
        for (i, ci) in c.iter_mut().enumerate() {
            *ci += d[(i, n)] * r;
        }
    }
    c
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Per-user SINRs with matched-filter combiners `w_k = c_k / ‖c_k‖`, using
/// the beamformer form of the interference `Σ_{ℓ≠k} η_ℓ |w_ℓ^H c_k|²`.
pub fn sinrs(eff: &EffectiveChannel, rho: f64, phases: &[f64], eta: &[f64], sigma2: f64) -> Vec<f64> {
    let k = eff.n_users();
    let c: Vec<Vec<Complex64>> = (0..k)
        .map(|u| {
            let (d, h) = eff.user(u).unwrap();
            composite(d, h, rho, phases)
        })
        .collect();
    let w: Vec<Vec<Complex64>> = c
        .iter()
        .map(|ck| {
            let n = norm2(ck).sqrt();
            ck.iter().map(|x| x / n).collect()
        })
        .collect();
    (0..k)
        .map(|u| {
            let signal = eta[u] * inner(&w[u], &c[u]).norm_sqr();
            let interference: f64 = (0..k)
                .filter(|&l| l != u)
                .map(|l| eta[l] * inner(&w[l], &c[u]).norm_sqr())
                .sum();
            signal / (interference + sigma2)
        })
        .collect()
}

pub fn objective(eff: &EffectiveChannel, rho: f64, phases: &[f64], eta: &[f64], sigma2: f64) -> f64 {
    sinrs(eff, rho, phases, eta, sigma2).iter().map(|s| s.log2()).sum()
}

/// Central differences of `f` at `x`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h;
            let up = f(&xp);
            xp[i] = x[i] - h;
            let down = f(&xp);
            xp[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Best single-user gain for fixed phases: `max_w |w^H c|² = ‖c‖²`.
pub fn su_value(d: &DMatrix<Complex64>, h: &DVector<Complex64>, rho: f64, phases: &[f64]) -> f64 {
    norm2(&composite(d, h, rho, phases))
}

/// Global single-user optimum for `N_R = 2`.
///
/// Scans a 1° phase grid, then refines the ten best grid points by a
/// compass search whose step halves down to 1e-12 rad. Returns the best
/// value and its phases.
pub fn su_grid_optimum(d: &DMatrix<Complex64>, h: &DVector<Complex64>, rho: f64) -> (f64, [f64; 2]) {
    assert_eq!(d.ncols(), 2);
    let deg = std::f64::consts::PI / 180.0;
    let mut grid: Vec<(f64, [f64; 2])> = Vec::with_capacity(360 * 360);
    for a in 0..360 {
        for b in 0..360 {
            let p = [a as f64 * deg, b as f64 * deg];
            grid.push((su_value(d, h, rho, &p), p));
        }
    }
    grid.sort_by(|x, y| y.0.total_cmp(&x.0));
    grid.iter()
        .take(10)
        .map(|&(v, p)| compass_refine(|q| su_value(d, h, rho, q), v, p, deg))
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap()
}

fn compass_refine(f: impl Fn(&[f64]) -> f64, mut value: f64, mut p: [f64; 2], mut step: f64) -> (f64, [f64; 2]) {
    while step > 1e-12 {
        let mut moved = false;
        for dir in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let q = [p[0] + dir[0] * step, p[1] + dir[1] * step];
            let v = f(&q);
            if v > value {
                value = v;
                p = q;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (value, p)
}

/// Largest `|w^H c|²` over `n` random unit beamformers.
pub fn best_random_beamformer(rng: &mut impl Rng, c: &[Complex64], n: usize) -> f64 {
    (0..n)
        .map(|_| {
            let w: Vec<Complex64> = (0..c.len()).map(|_| cn(rng)).collect();
            inner(&w, c).norm_sqr() / norm2(&w)
        })
        .fold(0.0, f64::max)
}

pub fn power_objective(a: &DMatrix<f64>, sigma2: f64, eta: &[f64]) -> f64 {
    (0..eta.len())
        .map(|k| {
            let interference: f64 = (0..eta.len())
                .filter(|&l| l != k)
                .map(|l| eta[l] * a[(k, l)])
                .sum();
            (eta[k] * a[(k, k)] / (interference + sigma2)).log2()
        })
        .sum()
}

/// Two-user power optimum on the budget line.
///
/// Scans `η_1 = P i / 2001`, `i = 1..=2000`, then narrows the bracket around
/// the best grid point by golden-section search. Returns
/// `(grid_best, refined_best, refined_eta1)`.
pub fn power_grid_k2(a: &DMatrix<f64>, sigma2: f64, p_max: f64) -> (f64, f64, f64) {
    let f = |e1: f64| power_objective(a, sigma2, &[e1, p_max - e1]);
    let n = 2000;
    let step = p_max / (n + 1) as f64;
    let (best_i, grid_best) = (1..=n)
        .map(|i| (i, f(i as f64 * step)))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    let (mut lo, mut hi) = ((best_i - 1) as f64 * step, (best_i + 1) as f64 * step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - ratio * (hi - lo);
        let m2 = lo + ratio * (hi - lo);
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let e1 = 0.5 * (lo + hi);
    (grid_best, f(e1).max(grid_best), e1)
}

/// Tangent-space gradient norm in `γ = log2 η` by central differences.
pub fn fd_kkt_residual(a: &DMatrix<f64>, sigma2: f64, eta: &[f64]) -> f64 {
    let gamma: Vec<f64> = eta.iter().map(|e| e.log2()).collect();
    let g = fd_gradient(
        |x| {
            let e: Vec<f64> = x.iter().map(|v| v.exp2()).collect();
            power_objective(a, sigma2, &e)
        },
        &gamma,
        1e-6,
    );
    let nn: f64 = eta.iter().map(|e| e * e).sum();
    let coef: f64 = g.iter().zip(eta).map(|(x, e)| x * e).sum::<f64>() / nn;
    g.iter()
        .zip(eta)
        .map(|(x, e)| (x - coef * e).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Smallest sample whose empirical CDF reaches `p`.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let idx = ((p * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1;
    s[idx]
}
