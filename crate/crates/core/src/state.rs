//! Operations on `M₂` states: norm, the generator `𝒜`, its inverse and
//! eigenfunctions.
//!
//! `𝒜(y, z) = (∫A₂ż + ∫A₃z, ż)` on states with `y = z(0) − A₋₁z(−1)`.

use crate::characteristic::char_matrix;
use crate::error::{Error, Result};
use crate::grid::{self, Differentiator};
use crate::kernel::kernel_laplace;
use crate::linalg::{self, c64, CMat, CVec, C64};
use crate::system::{M2State, NeutralSystem, INVERTIBILITY_TOL};

/// Relative tolerance of the domain condition `y = z(0) − A₋₁z(−1)`.
pub const DOMAIN_TOL: f64 = 1e-8;

/// `sqrt(|y|² + ∫|z|²)`, the integral by the trapezoid rule.
pub fn m2_norm(x: &M2State) -> f64 {
    (x.y.iter().map(|v| v.norm_sqr()).sum::<f64>() + grid::trapezoid_sq_norm(&x.z)).sqrt()
}

/// `⟨x, w⟩ = w*·x over ℂⁿ plus ∫ w(θ)*x(θ)dθ` (trapezoid).
pub fn inner(x: &M2State, w: &M2State) -> C64 {
    let m = x.m();
    let h = 1.0 / m as f64;
    let mut s = w.y.dotc(&x.y);
    for i in 0..=m {
        let f = if i == 0 || i == m { 0.5 * h } else { h };
        s += w.z.column(i).dotc(&x.z.column(i)) * f;
    }
    s
}

/// The generator discretized on one grid, reusable across many states.
#[derive(Debug, Clone)]
pub struct Generator {
    m: usize,
    a_minus1: CMat,
    w2: Vec<CMat>,
    w3: Vec<CMat>,
    diff: Differentiator,
    /// `Σᵢ W3ᵢ` factored, when `∫A₃` is invertible.
    q3: Option<nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl Generator {
    pub fn new(sys: &NeutralSystem, m: usize) -> Result<Self> {
        sys.ensure_valid()?;
        if m < 2 {
            return Err(Error::InvalidArgument(format!("grid resolution m = {m} is below 2")));
        }
        let w2 = grid::kernel_weights(&sys.a2, m);
        let w3 = grid::kernel_weights(&sys.a3, m);
        let exact = kernel_laplace(&sys.a3, c64(0.0, 0.0));
        let q3 = if linalg::is_well_conditioned(&exact, INVERTIBILITY_TOL) {
            let sum = w3.iter().fold(CMat::zeros(sys.n, sys.n), |acc, w| acc + w);
            Some(sum.lu())
        } else {
            None
        };
        Ok(Self {
            m,
            a_minus1: sys.a_minus1.clone(),
            w2,
            w3,
            diff: Differentiator::new(m),
            q3,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn check_grid(&self, x: &M2State) -> Result<()> {
        if x.m() != self.m || x.n() != self.a_minus1.nrows() {
            return Err(Error::Dimension(format!(
                "state has n = {}, m = {}; operator expects n = {}, m = {}",
                x.n(),
                x.m(),
                self.a_minus1.nrows(),
                self.m
            )));
        }
        Ok(())
    }

    /// Fails when `x` violates the domain condition beyond `DOMAIN_TOL·‖x‖`.
    pub fn check_domain(&self, x: &M2State) -> Result<()> {
        self.check_grid(x)?;
        let violation = linalg::vec_norm(&x.domain_residual(&self.a_minus1));
        let tolerance = DOMAIN_TOL * m2_norm(x);
        if violation > tolerance {
            return Err(Error::DomainViolation { violation, tolerance });
        }
        Ok(())
    }

    /// `𝒜x` with `ż` from finite differences and integrals by quadrature.
    pub fn apply(&self, x: &M2State) -> Result<M2State> {
        self.check_domain(x)?;
        let zdot = self.diff.apply(&x.z);
        let y = grid::weighted_sum(&self.w2, &zdot) + grid::weighted_sum(&self.w3, &x.z);
        Ok(M2State { y, z: zdot })
    }

    /// `x` with `𝒜x = b`: `v = v(0) − ∫_θ^0 b_z`, `v(0)` from the finite part.
    pub fn solve(&self, b: &M2State) -> Result<M2State> {
        self.check_grid(b)?;
        let q3 = self.q3.as_ref().ok_or(Error::ZeroInSpectrum)?;
        let mut tail = grid::cumulative(&b.z);
        let total: CVec = tail.column(self.m).into();
        for mut col in tail.column_iter_mut() {
            col -= &total;
        }
        let rhs = &b.y - grid::weighted_sum(&self.w2, &b.z) - grid::weighted_sum(&self.w3, &tail);
        let v0 = q3.solve(&rhs).ok_or(Error::ZeroInSpectrum)?;
        let mut z = tail;
        for mut col in z.column_iter_mut() {
            col += &v0;
        }
        let y = z.column(self.m) - &self.a_minus1 * z.column(0);
        Ok(M2State { y, z })
    }

    /// `𝒜^{−n}x`.
    pub fn smooth(&self, x: &M2State, n_times: usize) -> Result<M2State> {
        let mut out = x.clone();
        for _ in 0..n_times {
            out = self.solve(&out)?;
        }
        Ok(out)
    }
}

pub fn apply_generator(sys: &NeutralSystem, x: &M2State) -> Result<M2State> {
    Generator::new(sys, x.m())?.apply(x)
}

pub fn solve_generator(sys: &NeutralSystem, b: &M2State) -> Result<M2State> {
    Generator::new(sys, b.m())?.solve(b)
}

pub fn smooth(sys: &NeutralSystem, x: &M2State, n_times: usize) -> Result<M2State> {
    if n_times == 0 {
        return Ok(x.clone());
    }
    Generator::new(sys, x.m())?.smooth(x, n_times)
}

/// An eigenvector `(y, e^{λθ}c)` of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFunction {
    pub lambda: C64,
    pub c: CVec,
    pub state: M2State,
}

/// Size of the terms making up `Δ(λ)`, used to judge when `Δ(λ)` is singular.
fn char_scale(sys: &NeutralSystem, lambda: C64) -> f64 {
    let l = lambda.norm();
    l + l * (-lambda).exp().norm() * linalg::norm2(&sys.a_minus1)
        + l * linalg::norm2(&kernel_laplace(&sys.a2, lambda))
        + linalg::norm2(&kernel_laplace(&sys.a3, lambda))
}

/// Eigenfunction for a simple eigenvalue `λ`, sampled on an `m`-interval grid.
///
/// `c` spans the kernel of `Δ(λ)`, has unit norm and its largest component is
/// real and positive.
pub fn eigenfunction(sys: &NeutralSystem, lambda: C64, m: usize) -> Result<EigenFunction> {
    sys.ensure_valid()?;
    if m < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution m = {m} is below 2")));
    }
    let n = sys.n;
    let delta = char_matrix(sys, lambda);
    let scale = char_scale(sys, lambda).max(f64::MIN_POSITIVE);
    let relative_det = linalg::det(&delta).norm() / scale.powi(n as i32);
    if !(relative_det < 1e-8) {
        return Err(Error::NotAnEigenvalue { lambda, relative_det });
    }
    let (mut c, sv) = linalg::smallest_right_singular_vector(&delta);
    if n >= 2 && sv[n - 2] / scale < 1e-6 {
        let dim = sv.iter().filter(|&&s| s / scale < 1e-6).count();
        return Err(Error::MultipleKernel { lambda, dim });
    }
    let mut big = 0;
    for i in 1..n {
        if c[i].norm() > c[big].norm() {
            big = i;
        }
    }
    let phase = c[big].conj() / c[big].norm();
    c *= phase;
    let y = (CMat::identity(n, n) - &sys.a_minus1 * (-lambda).exp()) * &c;
    let mut z = CMat::zeros(n, m + 1);
    for i in 0..=m {
        let e = (lambda * crate::system::theta(i, m)).exp();
        z.set_column(i, &(&c * e));
    }
    Ok(EigenFunction {
        lambda,
        c,
        state: M2State { y, z },
    })
}
