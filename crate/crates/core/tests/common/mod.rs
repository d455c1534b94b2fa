//! Reference implementations used as independent oracles. They favour
//! obviousness over speed and share no code with the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Euclidean projection onto `{x : ‖x‖₁ ≤ r}` by enumerating every support
/// and sign pattern: on a fixed face the projection is `v_S − τ s` with `τ`
/// chosen to hit the face, kept if the signs agree.
pub fn brute_force_l1_projection(v: &[f64], r: f64) -> Vec<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= r {
        return v.to_vec();
    }
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for support in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|j| support >> j & 1 == 1).collect();
        for signs in 0u32..(1 << idx.len()) {
            let s: Vec<f64> = (0..idx.len()).map(|t| if signs >> t & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let dot: f64 = idx.iter().zip(&s).map(|(&j, sj)| v[j] * sj).sum();
            let tau = (dot - r) / idx.len() as f64;
            let mut x = vec![0.0; n];
            let mut ok = true;
            for (&j, sj) in idx.iter().zip(&s) {
                x[j] = v[j] - tau * sj;
                ok &= x[j] * sj >= -1e-12;
            }
            if !ok {
                continue;
            }
            let dist: f64 = x.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, x));
            }
        }
    }
    best.expect("some face is feasible").1
}

/// Sort-based ℓ₁-ball projection.
pub fn sort_l1_projection(v: &DVector<f64>, r: f64) -> DVector<f64> {
    if v.abs().sum() <= r {
        return v.clone();
    }
    let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, aj) in a.iter().enumerate() {
        cum += aj;
        let t = (cum - r) / (j + 1) as f64;
        if *aj > t {
            theta = t;
        }
    }
    v.map(|x| x.signum() * (x.abs() - theta).max(0.0))
}

/// KKT residual of `(1/m)‖Xw − y‖² + λ Σ s_j|w_j|`.
pub fn lasso_kkt(x: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>, lambda: f64, s: &[f64]) -> f64 {
    let m = x.nrows() as f64;
    let g = x.transpose() * (x * w - y) * (2.0 / m);
    (0..w.len())
        .map(|j| {
            if w[j] != 0.0 {
                (g[j] + lambda * s[j] * w[j].signum()).abs()
            } else {
                (g[j].abs() - lambda * s[j]).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Accelerated proximal gradient for the weighted Lasso.
pub fn fista_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, s: &[f64], iters: usize) -> DVector<f64> {
    let m = x.nrows() as f64;
    let n = x.ncols();
    let gram = x.transpose() * x * (2.0 / m);
    let xty = x.transpose() * y * (2.0 / m);
    let lip = SymmetricEigen::new(gram.clone()).eigenvalues.max().max(1e-12);
    let mut w = DVector::zeros(n);
    let mut z = w.clone();
    let mut t: f64 = 1.0;
    for _ in 0..iters {
        let grad = &gram * &z - &xty;
        let step = &z - grad / lip;
        let next = DVector::from_iterator(
            n,
            step.iter().enumerate().map(|(j, v)| {
                let th = lambda * s[j] / lip;
                v.signum() * (v.abs() - th).max(0.0)
            }),
        );
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &next + (&next - &w) * ((t - 1.0) / t_next);
        w = next;
        t = t_next;
    }
    w
}

pub fn lasso_value(x: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>, lambda: f64, s: &[f64]) -> f64 {
    let pen: f64 = w.iter().zip(s).map(|(a, b)| a.abs() * b).sum();
    (x * w - y).norm_squared() / x.nrows() as f64 + lambda * pen
}

/// Projected gradient for `min uᵀGu` over `u_pin = 1`, `‖u‖₁ ≤ B`.
pub fn reference_pinned_qp(g: &DMatrix<f64>, pin: usize, budget: f64, iters: usize) -> f64 {
    let n = g.nrows();
    let lip = 2.0 * SymmetricEigen::new(g.clone()).eigenvalues.max().max(1e-12);
    let free: Vec<usize> = (0..n).filter(|&j| j != pin).collect();
    let mut u = DVector::zeros(n);
    u[pin] = 1.0;
    for _ in 0..iters {
        let grad = g * &u * 2.0;
        let step = DVector::from_iterator(free.len(), free.iter().map(|&j| u[j] - grad[j] / lip));
        let p = sort_l1_projection(&step, budget - 1.0);
        for (t, &j) in free.iter().enumerate() {
            u[j] = p[t];
        }
    }
    (u.transpose() * g * &u)[(0, 0)]
}

/// `4^d Π_{j<d}(m/2 + j) / d!` in exact rationals.
pub fn composition_closed_form(m: u64, d: u64) -> BigRational {
    let mut acc = BigRational::one();
    for j in 0..d {
        acc *= BigRational::new(BigInt::from(4 * (m + 2 * j)), BigInt::from(2 * (j + 1)));
    }
    acc
}

/// Every `k`-subset of `[n]` as a bitmask.
fn subsets(n: usize, k: usize) -> Vec<u32> {
    (0u32..(1 << n)).filter(|s| s.count_ones() as usize == k).collect()
}

/// `k^{2d} E⟨w₁,w₂⟩^{2d}` for `d = 0..=d_max` by enumerating every pair of
/// signed supports: `k⟨w₁,w₂⟩ = Σ_{j∈S₁∩S₂} s₁ⱼs₂ⱼ`.
pub fn enumerate_overlap_moments(n: usize, k: usize, d_max: u32) -> Vec<BigRational> {
    let supports = subsets(n, k);
    // all signed vectors, entries in {−1, 0, 1}
    let mut vectors: Vec<Vec<i64>> = Vec::new();
    for &s in &supports {
        let idx: Vec<usize> = (0..n).filter(|j| s >> j & 1 == 1).collect();
        for signs in 0u32..(1 << k) {
            let mut v = vec![0i64; n];
            for (t, &j) in idx.iter().enumerate() {
                v[j] = if signs >> t & 1 == 1 { 1 } else { -1 };
            }
            vectors.push(v);
        }
    }
    // histogram of inner products
    let mut hist = vec![0u64; 2 * k + 1];
    for a in &vectors {
        for b in &vectors {
            let ip: i64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            hist[(ip + k as i64) as usize] += 1;
        }
    }
    let total = BigInt::from(vectors.len() as u64).pow(2);
    (0..=d_max)
        .map(|d| {
            let mut num = BigInt::zero();
            for (i, c) in hist.iter().enumerate() {
                let ip = BigInt::from(i as i64 - k as i64);
                num += ip.pow(2 * d) * BigInt::from(*c);
            }
            BigRational::new(num, total.clone())
        })
        .collect()
}

/// Gauss–Hermite rule for the standard normal (Golub–Welsch).
pub fn gauss_hermite(points: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::zeros(points, points);
    for j in 1..points {
        let b = (j as f64).sqrt();
        jacobi[(j, j - 1)] = b;
        jacobi[(j - 1, j)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let weights: Vec<f64> = (0..points).map(|j| eig.eigenvectors[(0, j)].powi(2)).collect();
    (nodes, weights)
}

/// Orthonormal probabilists' Hermite polynomials `h_0..=h_deg` at `x`.
fn hermite_orthonormal(x: f64, deg: usize) -> Vec<f64> {
    let mut he = vec![1.0, x];
    for a in 1..deg {
        he.push(x * he[a] - a as f64 * he[a - 1]);
    }
    he.truncate(deg + 1);
    let mut fact = 1.0;
    for (a, v) in he.iter_mut().enumerate() {
        if a > 0 {
            fact *= a as f64;
        }
        *v /= fact.sqrt();
    }
    he
}

/// Per-sample degree profile `g_j(ρ) = ⟨L_{w₁}^{=j}, L_{w₂}^{=j}⟩` for unit
/// vectors with `⟨w₁,w₂⟩ = ρ`, from the Hermite coefficients of the
/// likelihood ratios computed by quadrature in `span(w₁, w₂)`.
pub fn per_sample_degree_profile(rho: f64, beta: f64, deg: usize, points: usize) -> Vec<f64> {
    let (nodes, weights) = gauss_hermite(points);
    let c = beta / (2.0 * (1.0 + beta));
    let norm = (1.0 + beta).powf(-0.5);
    let w2 = (rho, (1.0 - rho * rho).max(0.0).sqrt());
    let mut c1 = vec![vec![0.0; deg + 1]; deg + 1];
    let mut c2 = vec![vec![0.0; deg + 1]; deg + 1];
    for (xa, wa) in nodes.iter().zip(&weights) {
        let ha = hermite_orthonormal(*xa, deg);
        for (xb, wb) in nodes.iter().zip(&weights) {
            let hb = hermite_orthonormal(*xb, deg);
            let l1 = norm * (c * xa * xa).exp();
            let t2 = w2.0 * xa + w2.1 * xb;
            let l2 = norm * (c * t2 * t2).exp();
            for i in 0..=deg {
                for j in 0..=(deg - i) {
                    let basis = wa * wb * ha[i] * hb[j];
                    c1[i][j] += basis * l1;
                    c2[i][j] += basis * l2;
                }
            }
        }
    }
    (0..=deg)
        .map(|total| (0..=total).map(|i| c1[i][total - i] * c2[i][total - i]).sum())
        .collect()
}

/// `‖L^{≤D}‖²` for the sparse spiked Wishart model by enumerating spike
/// pairs and combining per-sample degree profiles across `m` samples.
pub fn ldlr_by_quadrature(n: usize, k: usize, m: usize, beta: f64, degree: usize, points: usize) -> f64 {
    let supports = subsets(n, k);
    let per = supports.len() as f64 * (1u64 << k) as f64;
    // distribution of k⟨w₁,w₂⟩, computed by direct enumeration
    let mut hist = vec![0u64; 2 * k + 1];
    for &s1 in &supports {
        for &s2 in &supports {
            let common = (s1 & s2).count_ones() as usize;
            // sign products on the common coordinates are free; every
            // pattern extends in 2^k · 2^(k − common) ways
            for plus in 0..=common {
                let ways = binom(common, plus) << (2 * k - common);
                let ip = 2 * plus as i64 - common as i64;
                hist[(ip + k as i64) as usize] += ways;
            }
        }
    }
    let mut total = 0.0;
    for (i, count) in hist.iter().enumerate() {
        if *count == 0 {
            continue;
        }
        let rho = (i as f64 - k as f64) / k as f64;
        let g = per_sample_degree_profile(rho, beta, degree, points);
        // degree-≤D part of the m-fold product of per-sample profiles
        let mut poly = vec![0.0; degree + 1];
        poly[0] = 1.0;
        for _ in 0..m {
            let mut next = vec![0.0; degree + 1];
            for (a, pa) in poly.iter().enumerate() {
                for (b, gb) in g.iter().enumerate() {
                    if a + b <= degree {
                        next[a + b] += pa * gb;
                    }
                }
            }
            poly = next;
        }
        total += *count as f64 / (per * per) * poly.iter().sum::<f64>();
    }
    total
}

fn binom(n: usize, r: usize) -> u64 {
    (0..r).fold(1u64, |acc, j| acc * (n - j) as u64 / (j + 1) as u64)
}

/// Latent variable instance `Σ = D + AAᵀ` with heterogeneous `D` and a
/// strong rank-`h` factor, and a `k`-sparse signal with unit entries.
pub fn lvm_instance<R: rand::Rng>(n: usize, h: usize, k: usize, rng: &mut R) -> rllab_core::models::SlrInstance {
    use rand_distr::{Distribution, StandardNormal};
    use rllab_core::models::{make_lvm_covariance, SlrInstance};
    let d = DVector::from_fn(n, |_, _| 10f64.powf(rng.random_range(-1.0..1.0)));
    let a = DMatrix::from_fn(n, h, |i, _| {
        let z: f64 = StandardNormal.sample(rng);
        3.0 * d[i].sqrt() * z
    });
    let lvm = make_lvm_covariance(&d, &a).expect("valid factor model");
    let mut w = DVector::zeros(n);
    for j in rand::seq::index::sample(rng, n, k) {
        w[j] = 1.0;
    }
    SlrInstance::new(lvm.covariance.clone(), w, 0.0, k)
        .expect("consistent instance")
        .with_oracle(lvm.oracle.clone(), Some(lvm.factor.clone()))
}
