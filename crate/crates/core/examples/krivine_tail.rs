//! Estimates the constant `C` in `Σ_{ℓ>L} |b_{2ℓ+1}| ≤ C / L`.
//!
//! The full mass `Σ_ℓ |b_{2ℓ+1}|` is 1, so the tail after `L` is one minus the
//! partial sum. The coefficients are computed up to `ℓ = 10^5` and the worst
//! observed `L · tail(L)` is printed together with a power-law fit of `|b|`.

use ncgk::rounding::krivine::{krivine_coeffs, TAIL_CONSTANT};

fn main() {
    let big = 100_000;
    let k = krivine_coeffs(big);
    let abs: Vec<f64> = (0..=big).map(|l| k.b[2 * l + 1].abs()).collect();
    let total: f64 = abs.iter().sum();
    println!("partial mass up to l = {big}: {total:.12}");

    let mut tail = 1.0 - total;
    let mut worst: f64 = 0.0;
    let mut worst_at = 0;
    for l in (1..big).rev() {
        tail += abs[l + 1].min(f64::MAX);
        if l <= big / 10 {
            let c = l as f64 * tail;
            if c > worst {
                worst = c;
                worst_at = l;
            }
        }
    }
    println!("max over L <= {} of L * tail(L): {worst:.6} at L = {worst_at}", big / 10);

    // Least squares fit of log|b_{2l+1}| = log c - q log l over nonzero terms in [100, 10^5].
    let pts: Vec<(f64, f64)> =
        (100..=big).filter(|&l| abs[l] > 0.0).map(|l| ((l as f64).ln(), abs[l].ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    println!("fitted decay exponent of |b_(2l+1)|: {:.3}", -slope);
    println!("hard-coded constant: {TAIL_CONSTANT} ({})", if worst <= TAIL_CONSTANT { "valid" } else { "TOO SMALL" });
}
