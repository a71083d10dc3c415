//! Finite differences and quadrature on the uniform grid `θᵢ = −1 + i/m`.

use crate::linalg::{CMat, C64};
use crate::system::{PiecewisePolyKernel, Side};

/// Points per finite-difference stencil (8th-order accurate first derivative).
pub const FD_POINTS: usize = 9;

/// Fornberg weights for the first derivative at `x0` from samples at `xs`.
pub fn fd_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    let np = xs.len();
    // c[j][k]: weight of xs[j] for the k-th derivative, k <= 1
    let mut c = vec![[0.0f64; 2]; np];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..np {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Stencil for node `i` of an `m`-interval grid: first index and weights in units of `1/h`.
fn stencil(i: usize, m: usize) -> (usize, Vec<f64>) {
    let np = FD_POINTS.min(m + 1);
    let half = np / 2;
    let start = i.saturating_sub(half).min(m + 1 - np);
    let xs: Vec<f64> = (start..start + np).map(|j| j as f64).collect();
    (start, fd_weights(i as f64, &xs))
}

/// Precomputed derivative stencils for one grid resolution.
#[derive(Debug, Clone)]
pub struct Differentiator {
    m: usize,
    stencils: Vec<(usize, Vec<f64>)>,
}

impl Differentiator {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            stencils: (0..=m).map(|i| stencil(i, m)).collect(),
        }
    }

    /// Derivative of the sampled function at every grid node (columns of `z`).
    pub fn apply(&self, z: &CMat) -> CMat {
        assert_eq!(z.ncols(), self.m + 1, "grid size mismatch");
        let scale = self.m as f64;
        let mut out = CMat::zeros(z.nrows(), z.ncols());
        for (i, (start, w)) in self.stencils.iter().enumerate() {
            for r in 0..z.nrows() {
                // differences against the node itself, so constants map to exactly 0
                let zi = z[(r, i)];
                let mut acc = C64::new(0.0, 0.0);
                for (j, wj) in w.iter().enumerate() {
                    acc += (z[(r, start + j)] - zi) * *wj;
                }
                out[(r, i)] = acc * scale;
            }
        }
        out
    }
}

/// Derivative of grid samples (columns of `z`) with the default stencils.
pub fn derivative(z: &CMat) -> CMat {
    Differentiator::new(z.ncols() - 1).apply(z)
}

/// Quadrature weights (in units of `h`) for `L` equal intervals: Gregory's
/// fourth-order end corrections when `L ≥ 5`, trapezoid otherwise.
pub fn segment_weights(intervals: usize) -> Vec<f64> {
    let l = intervals;
    let mut w = vec![1.0; l + 1];
    if l >= 5 {
        let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
        for (j, e) in ends.iter().enumerate() {
            w[j] = *e;
            w[l - j] = *e;
        }
    } else {
        w[0] = 0.5;
        w[l] = 0.5;
    }
    w
}

/// Grid indices of the kernel breakpoints that fall on grid nodes (always
/// including 0 and `m`).
pub fn grid_breaks(kern: &PiecewisePolyKernel, m: usize) -> Vec<usize> {
    let mut out = vec![0];
    for &b in &kern.breakpoints[1..kern.breakpoints.len() - 1] {
        let x = (b + 1.0) * m as f64;
        let i = x.round();
        if (x - i).abs() < 1e-9 * m as f64 && i > 0.0 && (i as usize) < m {
            out.push(i as usize);
        }
    }
    out.push(m);
    out.dedup();
    out
}

/// Matrices `Wᵢ` with `Σᵢ Wᵢ f(θᵢ) ≈ ∫₋₁⁰ K(θ) f(θ) dθ`.
///
/// The interval is split at breakpoints lying on the grid and each segment gets
/// [`segment_weights`], with the kernel taken as the one-sided limit from inside
/// the segment. Breakpoints between grid nodes are not resolved.
pub fn kernel_weights(kern: &PiecewisePolyKernel, m: usize) -> Vec<CMat> {
    let n = kern.dim();
    let h = 1.0 / m as f64;
    let mut out = vec![CMat::zeros(n, n); m + 1];
    let breaks = grid_breaks(kern, m);
    for seg in breaks.windows(2) {
        let (s, e) = (seg[0], seg[1]);
        let w = segment_weights(e - s);
        for i in s..=e {
            let th = crate::system::theta(i, m);
            let side = if i == e { Side::Left } else { Side::Right };
            out[i] += kern.eval_side(th, side) * C64::from(w[i - s] * h);
        }
    }
    out
}

/// `Σᵢ Wᵢ f(θᵢ)` for grid samples `f` stored as columns.
pub fn weighted_sum(weights: &[CMat], f: &CMat) -> crate::linalg::CVec {
    let mut acc = crate::linalg::CVec::zeros(f.nrows());
    for (i, w) in weights.iter().enumerate() {
        acc += w * f.column(i);
    }
    acc
}

/// Running integral `∫₋₁^{θᵢ} f` at every node, fourth-order accurate for `m ≥ 3`.
pub fn cumulative(f: &CMat) -> CMat {
    let m = f.ncols() - 1;
    let h = 1.0 / m as f64;
    let mut out = CMat::zeros(f.nrows(), m + 1);
    for i in 0..m {
        let step = if m < 3 {
            (f.column(i) + f.column(i + 1)) * C64::from(h / 2.0)
        } else if i == 0 {
            (f.column(0) * C64::from(9.0) + f.column(1) * C64::from(19.0)
                - f.column(2) * C64::from(5.0)
                + f.column(3))
                * C64::from(h / 24.0)
        } else if i == m - 1 {
            (f.column(m) * C64::from(9.0) + f.column(m - 1) * C64::from(19.0)
                - f.column(m - 2) * C64::from(5.0)
                + f.column(m - 3))
                * C64::from(h / 24.0)
        } else {
            ((f.column(i) + f.column(i + 1)) * C64::from(13.0) - f.column(i - 1) - f.column(i + 2))
                * C64::from(h / 24.0)
        };
        let next = out.column(i) + step;
        out.set_column(i + 1, &next);
    }
    out
}

/// Trapezoid approximation of `∫₋₁⁰ |z(θ)|² dθ`.
pub fn trapezoid_sq_norm(z: &CMat) -> f64 {
    let m = z.ncols() - 1;
    let h = 1.0 / m as f64;
    let col = |i: usize| z.column(i).iter().map(|x| x.norm_sqr()).sum::<f64>();
    let mut s = 0.5 * (col(0) + col(m));
    for i in 1..m {
        s += col(i);
    }
    s * h
}
