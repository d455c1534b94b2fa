use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{invalid, Result};

/// `C(n, r)` exactly.
pub fn binomial(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for j in 0..r {
        acc = acc * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    acc
}

/// `S(m, d) = Σ_{d_1+…+d_m = d} Π_i C(2d_i, d_i)` over nonnegative
/// compositions, by dynamic programming over the samples.
pub fn composition_binom_sum(m: u64, d: u64) -> BigUint {
    let d = d as usize;
    let central: Vec<BigUint> = (0..=d as u64).map(|s| binomial(2 * s, s)).collect();
    // ways[t]: weighted count of compositions of t over the samples seen so far
    let mut ways = vec![BigUint::zero(); d + 1];
    ways[0] = BigUint::one();
    for _ in 0..m {
        for t in (1..=d).rev() {
            let mut acc = BigUint::zero();
            for s in 1..=t {
                acc += &ways[t - s] * &central[s];
            }
            ways[t] += acc;
        }
    }
    let out = ways.swap_remove(d);
    debug_assert!(m == 0 || out == composition_binom_closed_form(m, d as u64));
    out
}

/// `4^d Π_{j<d}(m/2 + j) / d! = 2^d Π_{j<d}(m + 2j) / d!`.
pub fn composition_binom_closed_form(m: u64, d: u64) -> BigUint {
    let mut num = BigUint::one() << d as usize;
    for j in 0..d {
        num *= BigUint::from(m + 2 * j);
    }
    let mut fact = BigUint::one();
    for j in 2..=d {
        fact *= BigUint::from(j);
    }
    num / fact
}

/// `E(a_1 + … + a_ℓ)^{2d}` for independent uniform signs, from the exact
/// distribution of the partial sums. Returned as (numerator, `2^ℓ`).
pub fn rademacher_even_moment(l: u64, d: u64) -> BigRational {
    let l = l as usize;
    // counts[j]: number of sign patterns with j plus signs
    let mut counts = vec![BigUint::zero(); l + 1];
    counts[0] = BigUint::one();
    for step in 1..=l {
        for j in (1..=step).rev() {
            let prev = counts[j - 1].clone();
            counts[j] += prev;
        }
    }
    let mut total = BigUint::zero();
    for (j, c) in counts.iter().enumerate() {
        let s = (2 * j as i64 - l as i64).unsigned_abs();
        total += c * BigUint::from(s).pow(2 * d as u32);
    }
    BigRational::new(total.into(), (BigUint::one() << l).into())
}

/// Law of `|supp(w_1) ∩ supp(w_2)|` for two independent uniform size-`k`
/// subsets of `[n]`: `P[ℓ] = C(k,ℓ) C(n−k,k−ℓ) / C(n,k)`.
pub fn overlap_law(n: u64, k: u64) -> Result<Vec<BigRational>> {
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let total: num_bigint::BigInt = binomial(n, k).into();
    Ok((0..=k)
        .map(|l| {
            let ways = binomial(k, l) * binomial(n - k, k - l);
            BigRational::new(ways.into(), total.clone())
        })
        .collect())
}

/// `A_{n,k,d} = k^{2d} E⟨w_1, w_2⟩^{2d}` via the overlap law: given
/// `|S| = ℓ`, `k⟨w_1,w_2⟩` is a sum of `ℓ` independent signs.
pub fn overlap_moment(n: u64, k: u64, d: u64) -> Result<BigRational> {
    let law = overlap_law(n, k)?;
    let mut acc = BigRational::zero();
    for (l, p) in law.iter().enumerate() {
        if !p.is_zero() {
            acc += p * rademacher_even_moment(l as u64, d);
        }
    }
    Ok(acc)
}

/// `T(2d, r)`: partitions of `2d` labelled items into `r` blocks of even size.
///
/// `E(Σ_{i≤ℓ} a_i)^{2d}` counts maps `[2d] → [ℓ]` with even fibres, which is
/// `Σ_r T(2d, r)·(ℓ)_r`.
pub fn even_block_partitions(d: u64) -> Vec<BigUint> {
    let n = 2 * d as usize;
    // t[N][r] for even N
    let mut t = vec![vec![BigUint::zero(); d as usize + 1]; n + 1];
    t[0][0] = BigUint::one();
    for big in (2..=n).step_by(2) {
        for r in 1..=big / 2 {
            let mut acc = BigUint::zero();
            // block holding the first item has size 2s
            for s in 1..=big / 2 {
                let rest = big - 2 * s;
                if t[rest][r - 1].is_zero() {
                    continue;
                }
                acc += binomial(big as u64 - 1, 2 * s as u64 - 1) * &t[rest][r - 1];
            }
            t[big][r] = acc;
        }
    }
    t.swap_remove(n)
}

/// `A_{n,k,d}` via factorial moments of the hypergeometric overlap,
/// `E[(|S|)_r] = (k)_r² / (n)_r`. Cost is polynomial in `d` only, so this
/// handles `k` in the hundreds of thousands.
pub fn overlap_moment_factorial(n: u64, k: u64, d: u64) -> Result<BigRational> {
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let coeffs = even_block_partitions(d);
    let mut acc = BigRational::zero();
    let mut kf = BigUint::one();
    let mut nf = BigUint::one();
    for (r, c) in coeffs.iter().enumerate() {
        if r > 0 {
            let j = r as u64 - 1;
            if j >= k {
                break;
            }
            kf *= BigUint::from(k - j);
            nf *= BigUint::from(n - j);
        }
        if !c.is_zero() {
            let num = c * &kf * &kf;
            acc += BigRational::new(num.into(), nf.clone().into());
        }
    }
    Ok(acc)
}
