//! Shared brute-force and closed-form oracles for the integration tests.
//! Everything here is deliberately independent of the library's own code
//! paths: subset enumeration instead of sorting, quadrature instead of
//! sampling, special functions from statrs.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Brute-force max over all k-subsets of the product of entries.
pub fn brute_force_subset_max(nu: &[f64], k: usize) -> f64 {
    fn rec(nu: &[f64], start: usize, k: usize, acc: f64, best: &mut f64) {
        if k == 0 {
            *best = best.max(acc);
            return;
        }
        for i in start..=nu.len() - k {
            rec(nu, i + 1, k - 1, acc * nu[i], best);
        }
    }
    if k == 0 {
        return 1.0;
    }
    let mut best = f64::NEG_INFINITY;
    rec(nu, 0, k, 1.0, &mut best);
    best
}

/// Standard normal CDF via statrs.
pub fn normal_cdf(x: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Two-sided standard normal tail P(|Z| >= t).
pub fn normal_two_sided_tail(t: f64) -> f64 {
    2.0 * (1.0 - normal_cdf(t))
}

/// E||Z|| for Z ~ N(0, I_p): sqrt(2) * Gamma((p+1)/2) / Gamma(p/2).
pub fn gaussian_norm_mean(p: usize) -> f64 {
    use statrs::function::gamma::ln_gamma;
    (2.0f64).sqrt() * (ln_gamma((p as f64 + 1.0) / 2.0) - ln_gamma(p as f64 / 2.0)).exp()
}

/// E[U^(1/p)] for U uniform on (0,1) — the radial factor of the uniform
/// ball — via the tail-integral identity E[R] = int_0^1 P(R > s) ds
/// = int_0^1 (1 - s^p) ds, evaluated by Simpson (smooth integrand).
pub fn ball_radial_mean_quadrature(p: usize) -> f64 {
    let n = 20_000usize;
    let h = 1.0 / n as f64;
    let f = |s: f64| 1.0 - s.powi(p as i32);
    let mut acc = f(0.0) + f(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// P(|g1 * g2| >= t) for independent standard normals, by conditioning on
/// g1 and integrating the normal tail: a numeric stand-in for the Bessel-K0
/// tail.
pub fn gaussian_product_tail(t: f64) -> f64 {
    // integrate 2 * phi(g) * P(|g2| >= t/g) over g > 0
    let n = 40_000usize;
    let hi = 12.0f64;
    let h = hi / n as f64;
    let phi = |g: f64| (-0.5 * g * g).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = |g: f64| {
        if g <= 0.0 {
            0.0
        } else {
            2.0 * phi(g) * normal_two_sided_tail(t / g)
        }
    };
    let mut acc = f(0.0) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Deterministic RNG for test-local randomness.
pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random vector of positive values in (lo, hi).
pub fn random_positive_vec(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// Symmetric eigenvalues by cyclic Jacobi, for an independent spectral-norm
/// oracle on small matrices.
pub fn jacobi_eigenvalues(a: &ndarray::Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() < 1e-13 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).collect()
}

/// Smaller root of d x^2 - (1 - d + c d) x + c = 0 evaluated numerically with
/// the quadratic formula; kept separate from the library's oracle.
pub fn quadratic_delta_root(c_ratio: f64, d: f64) -> f64 {
    if d == 0.0 {
        return c_ratio;
    }
    let b = 1.0 - d + c_ratio * d;
    (b - (b * b - 4.0 * d * c_ratio).sqrt()) / (2.0 * d)
}

/// Gauss-Hermite nodes and weights (physicists' convention, weight e^{-x^2}):
/// nodes from the symmetric Jacobi matrix, weights from the derivative
/// formula w_i = 2^{n-1} n! sqrt(pi) / (n^2 H_{n-1}(x_i)^2).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = ndarray::Array2::<f64>::zeros((n, n));
    for i in 0..n - 1 {
        let b = ((i + 1) as f64 / 2.0).sqrt();
        jac[(i, i + 1)] = b;
        jac[(i + 1, i)] = b;
    }
    let mut nodes = jacobi_eigenvalues(&jac);
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let hermite_prev = |x: f64| {
        // H_{n-1}(x) by recurrence
        let mut h0 = 1.0f64;
        let mut h1 = 2.0 * x;
        if n == 1 {
            return h0;
        }
        for k in 1..n - 1 {
            let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
            h0 = h1;
            h1 = h2;
        }
        h1
    };
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let lead = 2.0f64.powi(n as i32 - 1) * factorial * std::f64::consts::PI.sqrt()
        / (n * n) as f64;
    let weights = nodes
        .iter()
        .map(|x| {
            let h = hermite_prev(*x);
            lead / (h * h)
        })
        .collect();
    (nodes, weights)
}

/// E[(x^T A y)^2] for independent standard normal x, y in R^3, by 6-d
/// Gauss-Hermite quadrature (10 nodes per axis).
pub fn bilinear_second_moment_quadrature(a: &ndarray::Array2<f64>) -> f64 {
    assert_eq!(a.nrows(), 3);
    assert_eq!(a.ncols(), 3);
    let (nodes, weights) = gauss_hermite(10);
    let k = nodes.len();
    let scale = 2.0f64.sqrt();
    let norm = std::f64::consts::PI.powi(3);
    let mut acc = 0.0;
    for i0 in 0..k {
        for i1 in 0..k {
            for i2 in 0..k {
                let x = [scale * nodes[i0], scale * nodes[i1], scale * nodes[i2]];
                let wx = weights[i0] * weights[i1] * weights[i2];
                // inner integral over y factorizes given A^T x
                let ax = [
                    a[(0, 0)] * x[0] + a[(1, 0)] * x[1] + a[(2, 0)] * x[2],
                    a[(0, 1)] * x[0] + a[(1, 1)] * x[1] + a[(2, 1)] * x[2],
                    a[(0, 2)] * x[0] + a[(1, 2)] * x[1] + a[(2, 2)] * x[2],
                ];
                for j0 in 0..k {
                    for j1 in 0..k {
                        for j2 in 0..k {
                            let v = ax[0] * scale * nodes[j0]
                                + ax[1] * scale * nodes[j1]
                                + ax[2] * scale * nodes[j2];
                            acc += wx * weights[j0] * weights[j1] * weights[j2] * v * v;
                        }
                    }
                }
            }
        }
    }
    acc / norm
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)).sqrt()
}
