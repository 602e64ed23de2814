//! Reference implementations used to check the library against independent computations.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, p), || rng.sample(StandardNormal))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_simple_fn(n, || rng.sample(StandardNormal))
}

/// Column-centered copy of `x` and centered copy of `y`.
pub fn centered(x: &Array2<f64>, y: &Array1<f64>) -> (Array2<f64>, Array1<f64>) {
    let mx = x.mean_axis(Axis(0)).unwrap();
    let my = y.mean().unwrap();
    (x - &mx, y - my)
}

/// Penalized least-squares criterion written out term by term.
pub fn criterion(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    beta: ArrayView1<'_, f64>,
    lambda1: f64,
    lambda2: f64,
    weights: Option<&Array1<f64>>,
) -> f64 {
    let mut rss = 0.0;
    for i in 0..x.nrows() {
        let mut fit = 0.0;
        for j in 0..x.ncols() {
            fit += x[[i, j]] * beta[j];
        }
        rss += (y[i] - fit).powi(2);
    }
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for j in 0..beta.len() {
        let w = weights.map_or(1.0, |w| w[j]);
        l1 += w * beta[j].abs();
        l2 += beta[j] * beta[j];
    }
    rss + lambda1 * l1 + lambda2 * l2
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
fn top_eigenvalue(m: &Array2<f64>) -> f64 {
    let p = m.nrows();
    let mut v = Array1::from_elem(p, 1.0 / (p as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..2000 {
        let w = m.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm;
        v = w / norm;
        if (next - lambda).abs() <= 1e-14 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // small safety margin keeps the step size valid
    lambda * (1.0 + 1e-9)
}

/// Accelerated proximal gradient (FISTA with gradient-based restart), run until the
/// iterates stop moving or `max_iter` is reached.
pub fn proximal_gradient(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda1: f64,
    lambda2: f64,
    weights: Option<&Array1<f64>>,
    max_iter: usize,
) -> Array1<f64> {
    let p = x.ncols();
    let xtx = x.t().dot(&x);
    let xty = x.t().dot(&y);
    let lipschitz = 2.0 * top_eigenvalue(&xtx) + 2.0 * lambda2;
    if lipschitz == 0.0 {
        return Array1::zeros(p);
    }
    let step = 1.0 / lipschitz;
    let thresholds: Array1<f64> = (0..p).map(|j| step * lambda1 * weights.map_or(1.0, |w| w[j])).collect();
    let prox = |v: Array1<f64>| -> Array1<f64> {
        Array1::from_shape_fn(p, |j| {
            let z = v[j];
            z.signum() * (z.abs() - thresholds[j]).max(0.0)
        })
    };
    let mut beta = Array1::<f64>::zeros(p);
    let mut momentum = beta.clone();
    let mut t = 1.0_f64;
    let mut still = 0;
    for _ in 0..max_iter {
        let grad = 2.0 * (&xtx.dot(&momentum) - &xty) + 2.0 * lambda2 * &momentum;
        let next = prox(&momentum - &(step * &grad));
        let moved = &next - &beta;
        // restart when the momentum direction opposes descent
        if (&momentum - &next).dot(&moved) > 0.0 {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        momentum = &next + &(((t - 1.0) / t_next) * &moved);
        t = t_next;
        let size = moved.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let scale = next.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        beta = next;
        if size <= 1e-15 * scale {
            still += 1;
            if still >= 20 {
                break;
            }
        } else {
            still = 0;
        }
    }
    beta
}

/// Optimality certificate: stationarity on nonzero coordinates within
/// `tol * max(lambda1, 1)`, subgradient bound on zero coordinates within a
/// relative `tol`.
pub fn kkt_holds(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    beta: ArrayView1<'_, f64>,
    lambda1: f64,
    lambda2: f64,
    weights: Option<&Array1<f64>>,
    tol: f64,
) -> bool {
    let r = &y - &x.dot(&beta);
    let g = x.t().dot(&r) * 2.0;
    (0..beta.len()).all(|j| {
        let w = lambda1 * weights.map_or(1.0, |w| w[j]);
        if beta[j] != 0.0 {
            (g[j] - 2.0 * lambda2 * beta[j] - w * beta[j].signum()).abs() <= tol * lambda1.max(1.0)
        } else {
            g[j].abs() <= w * (1.0 + tol) + 1e-12
        }
    })
}

/// Solves the normal equations `x'x b = x'y` by Gaussian elimination with partial pivoting.
pub fn normal_equations(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Array1<f64> {
    let mut a = x.t().dot(&x);
    let mut b = x.t().dot(&y);
    let p = b.len();
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &k| a[[i, col]].abs().total_cmp(&a[[k, col]].abs())).unwrap();
        if pivot != col {
            for c in 0..p {
                a.swap([col, c], [pivot, c]);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..p {
            let f = a[[row, col]] / a[[col, col]];
            for c in col..p {
                a[[row, c]] -= f * a[[col, c]];
            }
            b[row] -= f * b[col];
        }
    }
    let mut sol = Array1::zeros(p);
    for row in (0..p).rev() {
        let mut acc = b[row];
        for c in row + 1..p {
            acc -= a[[row, c]] * sol[c];
        }
        sol[row] = acc / a[[row, row]];
    }
    sol
}

/// An `n x p` matrix with orthonormal, mean-zero columns (modified Gram-Schmidt
/// applied after removing the constant direction).
pub fn orthonormal_centered(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    assert!(p < n);
    let raw = gaussian_matrix(rng, n, p);
    let mut q = &raw - &raw.mean_axis(Axis(0)).unwrap();
    for j in 0..p {
        for _ in 0..2 {
            for k in 0..j {
                let proj = q.column(j).dot(&q.column(k));
                let ck = q.column(k).to_owned();
                q.column_mut(j).scaled_add(-proj, &ck);
            }
            let mean = q.column(j).mean().unwrap();
            q.column_mut(j).mapv_inplace(|v| v - mean);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    q
}

pub fn soft(z: f64, gamma: f64) -> f64 {
    z.signum() * (z.abs() - gamma).max(0.0)
}

pub fn max_abs_diff(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()))
}

/// One random penalized instance: design, response, penalty and optional weights.
pub struct Instance {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub weights: Option<Array1<f64>>,
}

/// Instance `k` of a seeded family cycling through lasso, adaptive lasso and elastic net,
/// with `n <= 50`, `p <= 20`.
pub fn random_instance(seed: u64, k: usize) -> Instance {
    let mut rng = rng(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let n = rng.random_range(5..=50);
    let p = rng.random_range(1..=20);
    let raw = gaussian_matrix(&mut rng, n, p);
    // mild correlation between neighbouring columns
    let mut x = raw.clone();
    for j in 1..p {
        let prev = x.column(j - 1).to_owned();
        x.column_mut(j).scaled_add(0.5, &prev);
    }
    let truth: Array1<f64> =
        Array1::from_shape_fn(p, |_| if rng.random_bool(0.4) { rng.random_range(-3.0..3.0) } else { 0.0 });
    let noise = gaussian_vector(&mut rng, n);
    let y_raw = x.dot(&truth) + noise;
    let (x, y) = centered(&x, &y_raw);
    let weights = (k % 3 == 1).then(|| Array1::from_shape_fn(p, |_| rng.random_range(0.2..5.0)));
    let lambda2 = if k % 3 == 2 { 10f64.powf(rng.random_range(-2.0..1.5)) } else { 0.0 };
    let xty = x.t().dot(&y);
    let lambda_max = (0..p)
        .map(|j| (2.0 * xty[j]).abs() / weights.as_ref().map_or(1.0, |w| w[j]))
        .fold(0.0, f64::max);
    let lambda1 = lambda_max * 10f64.powf(rng.random_range(-3.0..0.0));
    Instance { x, y, lambda1, lambda2, weights }
}
