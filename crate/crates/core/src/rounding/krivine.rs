//! Krivine's two-dimensional rounding: unit complex numbers `x_j`, `y_k` are
//! mapped to reals `λ_j`, `μ_k` in `[-1, 1]` with `E[λ_j μ_k] = Re(x_j conj(y_k))/√2`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{domain, Result};
use crate::linalg::C64;
use crate::rng::Sampler;

/// `L · Σ_{ℓ>L} |b_{2ℓ+1}| ≤ TAIL_CONSTANT` for every `L ≥ 1`, with margin.
/// Produced by `examples/krivine_tail.rs`.
pub const TAIL_CONSTANT: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct KrivineCoefficients {
    pub l: usize,
    /// `a[m]` for `m` in `0..=2L+1` (zero at even `m`).
    pub a: Vec<f64>,
    /// `b[m]` for `m` in `0..=2L+1` (zero at even `m`).
    pub b: Vec<f64>,
    /// `Σ_{ℓ≤L} |b_{2ℓ+1}|`, the probability of a non-void round.
    pub p: f64,
    pub tail_bound: f64,
}

pub fn krivine_a(m: usize) -> f64 {
    if m % 2 == 0 {
        return 0.0;
    }
    let l = (m - 1) / 2;
    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
    let mf = m as f64;
    sign * (mf * FRAC_PI_4).cos() * 16.0 / (PI * PI * mf.powi(4)) * (1.0 / mf - sign * FRAC_PI_4)
}

pub fn krivine_coeffs(l: usize) -> KrivineCoefficients {
    let top = 2 * l.max(1) + 1;
    let a: Vec<f64> = (0..=top).map(krivine_a).collect();
    let mut b = vec![0.0; top + 1];
    // acc[m] collects Σ_{d | m, d ≠ 1} a_d b_{m/d}, filled in as each b_q is known.
    let mut acc = vec![0.0; top + 1];
    b[1] = 2f64.sqrt() * FRAC_PI_4.powi(3) / (3.0 * a[1]);
    for q in (1..=top).step_by(2) {
        if q > 1 {
            b[q] = -acc[q] / a[1];
        }
        for d in (3..=top / q).step_by(2) {
            acc[q * d] += a[d] * b[q];
        }
    }
    let p = (1..=top).step_by(2).map(|m| b[m].abs()).sum::<f64>().min(1.0);
    KrivineCoefficients { l: l.max(1), a, b, p, tail_bound: TAIL_CONSTANT / l.max(1) as f64 }
}

fn base(r: f64) -> f64 {
    // r in [0, π)
    let cubic = |s: f64| (6.0 / PI) * s - 0.5 * (4.0 / PI).powi(3) * s.powi(3);
    if r <= FRAC_PI_4 {
        1.0
    } else if r <= FRAC_PI_2 {
        cubic(FRAC_PI_2 - r)
    } else if r < 3.0 * FRAC_PI_4 {
        -cubic(r - FRAC_PI_2)
    } else {
        -1.0
    }
}

/// Even, `f(x + π) = -f(x)`, equal to 1 on `[0, π/4]` and a cubic on `[π/4, π/2)`.
pub fn krivine_f(x: f64) -> f64 {
    let x = x.abs();
    let k = (x / PI).floor();
    let r = x - k * PI;
    let sign = if (k as i64) % 2 == 0 { 1.0 } else { -1.0 };
    sign * base(r)
}

/// `sign(cos x)`, with `+1` where the cosine vanishes.
pub fn krivine_g(x: f64) -> f64 {
    if x.cos() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Precomputed coefficients and sampling table for a fixed accuracy `ε`.
#[derive(Clone, Debug)]
pub struct KrivineRounder {
    pub coeffs: KrivineCoefficients,
    cumulative: Vec<f64>,
}

impl KrivineRounder {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(domain("Krivine rounding needs eps > 0"));
        }
        let l = (TAIL_CONSTANT / eps).ceil().max(1.0) as usize;
        let coeffs = krivine_coeffs(l);
        let mut cumulative = Vec::with_capacity(l + 1);
        let mut total = 0.0;
        for ell in 0..=l {
            total += coeffs.b[2 * ell + 1].abs();
            cumulative.push(total);
        }
        Ok(Self { coeffs, cumulative })
    }

    /// `Some(ℓ)` with probability `|b_{2ℓ+1}|`, `None` with the leftover mass.
    fn pick(&self, u: f64) -> Option<usize> {
        let i = self.cumulative.partition_point(|&c| c <= u);
        (i < self.cumulative.len()).then_some(i)
    }

    pub fn round(&self, xs: &[C64], ys: &[C64], sampler: &mut Sampler) -> Result<(Vec<f64>, Vec<f64>)> {
        if xs.iter().chain(ys).any(|z| (z.norm() - 1.0).abs() > 1e-8) {
            return Err(domain("two-dimensional rounding needs unit complex inputs"));
        }
        let t = sampler.uniform_in(-PI, PI);
        let u = sampler.uniform();
        let Some(ell) = self.pick(u) else {
            return Ok((vec![0.0; xs.len()], vec![0.0; ys.len()]));
        };
        let m = (2 * ell + 1) as f64;
        let sign = self.coeffs.b[2 * ell + 1].signum();
        let lam = xs.iter().map(|x| sign * krivine_f(m * x.arg() - t)).collect();
        let mu = ys.iter().map(|y| krivine_g(t - m * y.arg())).collect();
        Ok((lam, mu))
    }
}

pub fn round_2d(xs: &[C64], ys: &[C64], eps: f64, sampler: &mut Sampler) -> Result<(Vec<f64>, Vec<f64>)> {
    KrivineRounder::new(eps)?.round(xs, ys, sampler)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn leading_coefficients() {
        let k = krivine_coeffs(10);
        assert!((k.a[1] - 0.246_002_020_344_406_5).abs() < 1e-15, "{}", k.a[1]);
        assert!((k.b[1] - 0.928_377_728_585_798_3).abs() < 1e-14, "{}", k.b[1]);
        assert!(k.a.iter().step_by(2).all(|&v| v == 0.0));
    }

    #[test]
    fn recurrence_matches_trial_division() {
        let k = krivine_coeffs(60);
        for m in (3..=121).step_by(2) {
            let s: f64 = (3..=m).step_by(2).filter(|d| m % d == 0).map(|d| k.a[d] * k.b[m / d]).sum();
            assert!((k.b[m] + s / k.a[1]).abs() < 1e-15, "m={m}");
        }
    }

    #[test]
    fn coefficient_mass_is_one() {
        let k = krivine_coeffs(2000);
        assert!(k.p <= 1.0 && k.p >= 0.99, "{}", k.p);
    }

    #[test]
    fn f_shape() {
        assert_eq!(krivine_f(0.0), 1.0);
        assert!(krivine_f(FRAC_PI_2).abs() < 1e-15);
        assert!((krivine_f(3.0 * FRAC_PI_4) + 1.0).abs() < 1e-12);
        for x in [-2.3, -0.4, 0.1, 0.9, 1.3, 2.0, 5.5] {
            assert!((krivine_f(x + PI) + krivine_f(x)).abs() < 1e-12);
            assert!((krivine_f(-x) - krivine_f(x)).abs() < 1e-12);
            assert!(krivine_f(x).abs() <= 1.0);
        }
        // continuous at π/4
        assert!((krivine_f(FRAC_PI_4 + 1e-9) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn outputs_are_bounded() {
        let rounder = KrivineRounder::new(0.01).unwrap();
        let mut s = Sampler::new(3);
        let xs = [c64(1.0, 0.0), C64::from_polar(1.0, 2.0)];
        for _ in 0..10_000 {
            let (l, m) = rounder.round(&xs, &xs, &mut s).unwrap();
            assert!(l.iter().chain(&m).all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn rejects_non_unit_inputs() {
        let mut s = Sampler::new(1);
        assert!(round_2d(&[c64(0.5, 0.0)], &[c64(1.0, 0.0)], 0.1, &mut s).is_err());
    }
}
