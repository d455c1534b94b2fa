//! Exact low-degree likelihood ratio norms for the sparse spiked Wishart
//! model.
//!
//! With `w_1, w_2` independent uniform `k`-sparse sign vectors,
//!
//! ```text
//! ‖L^{≤D}‖² = Σ_{d=0}^{⌊D/2⌋} (β²/(4k²))^d · A_{n,k,d} · S(m,d),
//! A_{n,k,d} = k^{2d} E⟨w_1,w_2⟩^{2d},
//! S(m,d)    = Σ_{d_1+…+d_m=d} Π_i C(2d_i, d_i).
//! ```
//!
//! The `d = 0` term is 1. Everything is computed in exact rational
//! arithmetic and rounded once at the end.

mod combinatorics;

use std::f64::consts::E;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

pub use combinatorics::{
    binomial, composition_binom_closed_form, composition_binom_sum, even_block_partitions, overlap_law,
    overlap_moment, overlap_moment_factorial, rademacher_even_moment,
};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdlrParams {
    pub n: u64,
    pub k: u64,
    pub m: u64,
    pub beta: f64,
    pub degree: u64,
}

impl LdlrParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(invalid(format!("need 1 ≤ k ≤ n, got k = {}, n = {}", self.k, self.n)));
        }
        if self.m == 0 {
            return Err(invalid("sample count m must be positive"));
        }
        if !(self.beta > -1.0) || !self.beta.is_finite() {
            return Err(invalid(format!("β must be finite and exceed −1, got {}", self.beta)));
        }
        Ok(())
    }
}

/// How `A_{n,k,d}` is evaluated. Both routes are exact and agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentRoute {
    /// Sum over the hypergeometric overlap law; cost grows with `k`.
    Hypergeometric,
    /// Factorial moments of the overlap; cost depends on `d` only.
    FactorialMoments,
    /// Hypergeometric for `k ≤ 256`, factorial moments beyond.
    #[default]
    Auto,
}

/// Exact `‖L^{≤D}‖²`.
pub fn ldlr_norm_squared_exact(params: &LdlrParams, route: MomentRoute) -> Result<BigRational> {
    params.validate()?;
    let LdlrParams { n, k, m, beta, degree } = *params;
    let beta_sq = BigRational::from_float(beta).ok_or_else(|| invalid("β is not representable"))?.pow(2);
    let ratio = beta_sq / BigRational::from_integer((4 * k as u128 * k as u128).into());
    let use_factorial = match route {
        MomentRoute::Hypergeometric => false,
        MomentRoute::FactorialMoments => true,
        MomentRoute::Auto => k > 256,
    };
    let mut total = BigRational::zero();
    let mut weight = BigRational::from_integer(1.into());
    for d in 0..=degree / 2 {
        if d > 0 {
            weight *= &ratio;
        }
        let a = if use_factorial {
            overlap_moment_factorial(n, k, d)?
        } else {
            overlap_moment(n, k, d)?
        };
        let s = BigRational::from_integer(composition_binom_sum(m, d).into());
        total += &weight * a * s;
    }
    Ok(total)
}

/// `‖L^{≤D}‖²` rounded to `f64`.
pub fn ldlr_norm_squared(params: &LdlrParams) -> Result<f64> {
    let exact = ldlr_norm_squared_exact(params, MomentRoute::Auto)?;
    exact
        .to_f64()
        .ok_or_else(|| invalid("norm overflows f64"))
}

/// Which growth hypotheses of the boundedness theorem an entry meets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hypotheses {
    /// `k ≤ n`, so the prior is defined at all.
    pub defined: bool,
    /// `2e√(mD) ≤ k`.
    pub lower: bool,
    /// `k ≤ √(n/(4e))`.
    pub upper: bool,
    /// `D < m`, a finite-`n` stand-in for `D = o(m)`.
    pub degree_below_samples: bool,
}

impl Hypotheses {
    pub fn check(p: &LdlrParams) -> Self {
        let (n, k, m, d) = (p.n as f64, p.k as f64, p.m as f64, p.degree as f64);
        Hypotheses {
            defined: p.k >= 1 && p.k <= p.n,
            lower: 2.0 * E * (m * d).sqrt() <= k,
            upper: k <= (n / (4.0 * E)).sqrt(),
            degree_below_samples: p.degree < p.m,
        }
    }

    pub fn all(&self) -> bool {
        self.defined && self.lower && self.upper && self.degree_below_samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepPolicy {
    /// Evaluate only entries meeting every hypothesis.
    #[default]
    SkipViolations,
    /// Evaluate every entry where the model is defined, flags included.
    EvaluateAll,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: LdlrParams,
    pub hypotheses: Hypotheses,
    pub norm_squared: Option<f64>,
}

pub fn ldlr_boundedness_sweep(schedule: &[LdlrParams], policy: SweepPolicy) -> Result<Vec<SweepRow>> {
    schedule
        .par_iter()
        .map(|p| {
            let hypotheses = Hypotheses::check(p);
            let evaluate = match policy {
                SweepPolicy::SkipViolations => hypotheses.all(),
                SweepPolicy::EvaluateAll => hypotheses.defined,
            };
            let norm_squared = if evaluate { Some(ldlr_norm_squared(p)?) } else { None };
            Ok(SweepRow {
                params: *p,
                hypotheses,
                norm_squared,
            })
        })
        .collect()
}

/// The hardness schedule `k = ⌈ln^{10/ε} n⌉`, `m = ⌈C k^{2−ε} ln³ n⌉`
/// (plus `⌈1600 ln n⌉` holdout samples when requested),
/// `D = ⌊ln² n / (4e²)⌋`, `β = −1 + 1/(2k)`.
pub fn hardness_schedule(ns: &[u64], eps: f64, c: f64, holdout_term: bool) -> Result<Vec<LdlrParams>> {
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(invalid(format!("ε must lie in (0, 2], got {eps}")));
    }
    if !(c > 0.0) {
        return Err(invalid("constant C must be positive"));
    }
    ns.iter()
        .map(|&n| {
            if n < 3 {
                return Err(invalid("schedule needs n ≥ 3"));
            }
            let ln = (n as f64).ln();
            let k = ln.powf(10.0 / eps).ceil() as u64;
            let mut m = (c * (k as f64).powf(2.0 - eps) * ln.powi(3)).ceil() as u64;
            if holdout_term {
                m += (1600.0 * ln).ceil() as u64;
            }
            let degree = (ln * ln / (4.0 * E * E)).floor() as u64;
            Ok(LdlrParams {
                n,
                k,
                m,
                beta: -1.0 + 1.0 / (2.0 * k as f64),
                degree,
            })
        })
        .collect()
}

/// `n` values log-spaced from `lo` to `hi`, `per_decade` per factor of 10.
pub fn log_spaced(lo: u64, hi: u64, per_decade: usize) -> Vec<u64> {
    let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
    let steps = ((b - a) * per_decade as f64).round() as usize;
    let mut out: Vec<u64> = (0..=steps)
        .map(|j| 10f64.powf(a + (b - a) * j as f64 / steps.max(1) as f64).round() as u64)
        .collect();
    out.dedup();
    out
}
