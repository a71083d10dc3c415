//! Closed-form exponential moments of piecewise polynomial kernels.

use crate::linalg::{CMat, C64};
use crate::system::PiecewisePolyKernel;

/// Below this value of `|λ|·(b − a)` the moments use a centered Taylor series.
const SERIES_SWITCH: f64 = 2.0;

/// `[∫_a^b θ^j e^{λθ} dθ for j in 0..=jmax]`.
pub fn exp_moments(a: f64, b: f64, lambda: C64, jmax: usize) -> Vec<C64> {
    let width = b - a;
    if lambda.norm() * width < SERIES_SWITCH {
        series_moments(a, b, lambda, jmax)
    } else {
        let eb = (lambda * b).exp();
        let ea = (lambda * a).exp();
        let mut out = Vec::with_capacity(jmax + 1);
        out.push((eb - ea) / lambda);
        for j in 1..=jmax {
            let bound = eb * b.powi(j as i32) - ea * a.powi(j as i32);
            let prev = out[j - 1];
            out.push((bound - prev * j as f64) / lambda);
        }
        out
    }
}

fn series_moments(a: f64, b: f64, lambda: C64, jmax: usize) -> Vec<C64> {
    let c = 0.5 * (a + b);
    let w = 0.5 * (b - a);
    // J_i = ∫_{-w}^{w} u^i e^{λu} du = Σ_q λ^q/q! · 2w^{i+q+1}/(i+q+1) over even i+q
    let centered: Vec<C64> = (0..=jmax)
        .map(|i| {
            let mut sum = C64::new(0.0, 0.0);
            let mut term = C64::new(1.0, 0.0); // λ^q / q!
            let mut wpow = w.powi(i as i32 + 1);
            for q in 0..80 {
                if (i + q) % 2 == 0 {
                    let add = term * (2.0 * wpow / (i + q + 1) as f64);
                    sum += add;
                    if q > 4 && add.norm() <= 1e-18 * sum.norm().max(1e-300) {
                        break;
                    }
                }
                term *= lambda / (q + 1) as f64;
                wpow *= w;
            }
            sum
        })
        .collect();
    let shift = (lambda * c).exp();
    (0..=jmax)
        .map(|j| {
            let mut acc = C64::new(0.0, 0.0);
            let mut binom = 1.0;
            for i in 0..=j {
                acc += centered[i] * (binom * c.powi((j - i) as i32));
                binom = binom * (j - i) as f64 / (i + 1) as f64;
            }
            acc * shift
        })
        .collect()
}

/// `∫₋₁⁰ θ^power e^{λθ} K(θ) dθ`.
pub fn weighted_laplace(kern: &PiecewisePolyKernel, lambda: C64, power: usize) -> CMat {
    let n = kern.dim();
    let mut out = CMat::zeros(n, n);
    for (j, piece) in kern.pieces.iter().enumerate() {
        let (a, b) = (kern.breakpoints[j], kern.breakpoints[j + 1]);
        let mom = exp_moments(a, b, lambda, piece.len() - 1 + power);
        for (d, c) in piece.iter().enumerate() {
            out += c * mom[d + power];
        }
    }
    out
}

/// `L(λ) = ∫₋₁⁰ e^{λθ} K(θ) dθ`.
pub fn kernel_laplace(kern: &PiecewisePolyKernel, lambda: C64) -> CMat {
    weighted_laplace(kern, lambda, 0)
}

/// `L′(λ) = ∫₋₁⁰ θ e^{λθ} K(θ) dθ`.
pub fn kernel_laplace_deriv(kern: &PiecewisePolyKernel, lambda: C64) -> CMat {
    weighted_laplace(kern, lambda, 1)
}
