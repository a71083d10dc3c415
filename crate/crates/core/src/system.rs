//! The neutral system `(A₋₁, A₂(·), A₃(·))` and the `M₂` state type.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, CVec, C64};

/// Relative singular-value threshold below which `A₋₁` counts as singular.
pub const INVERTIBILITY_TOL: f64 = 1e-10;

/// Highest supported polynomial degree of a kernel piece.
pub const MAX_KERNEL_DEGREE: usize = 3;

/// Which one-sided limit to take when evaluating a kernel exactly on a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Matrix-valued piecewise polynomial on `[-1, 0]`.
///
/// On `[breakpoints[j], breakpoints[j+1]]` the kernel equals `Σᵢ pieces[j][i] θⁱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolyKernel {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Vec<CMat>>,
}

impl PiecewisePolyKernel {
    pub fn zero(n: usize) -> Self {
        Self::constant(CMat::zeros(n, n))
    }

    pub fn constant(c: CMat) -> Self {
        Self {
            breakpoints: vec![-1.0, 0.0],
            pieces: vec![vec![c]],
        }
    }

    /// Single polynomial piece `Σᵢ coeffs[i] θⁱ` on the whole interval.
    pub fn polynomial(coeffs: Vec<CMat>) -> Self {
        Self {
            breakpoints: vec![-1.0, 0.0],
            pieces: vec![coeffs],
        }
    }

    /// Dimension of the coefficient matrices (0 for an empty kernel).
    pub fn dim(&self) -> usize {
        self.pieces
            .first()
            .and_then(|p| p.first())
            .map(|c| c.nrows())
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces
            .iter()
            .flatten()
            .all(|c| c.iter().all(|x| *x == C64::new(0.0, 0.0)))
    }

    /// Index of the piece used for `theta`, taking the requested one-sided limit
    /// when `theta` is an interior breakpoint.
    pub fn piece_index(&self, theta: f64, side: Side) -> usize {
        let last = self.pieces.len().saturating_sub(1);
        let bp = &self.breakpoints;
        match side {
            Side::Right => {
                // largest j with bp[j] <= theta
                let j = bp.partition_point(|&b| b <= theta);
                j.saturating_sub(1).min(last)
            }
            Side::Left => {
                // smallest j with theta <= bp[j+1]
                let j = bp.partition_point(|&b| b < theta);
                j.saturating_sub(1).min(last)
            }
        }
    }

    pub fn eval_piece(&self, piece: usize, theta: f64) -> CMat {
        let coeffs = &self.pieces[piece];
        let n = coeffs[0].nrows();
        // Horner
        let mut acc = CMat::zeros(n, n);
        for c in coeffs.iter().rev() {
            acc = acc * C64::new(theta, 0.0) + c;
        }
        acc
    }

    pub fn eval_side(&self, theta: f64, side: Side) -> CMat {
        self.eval_piece(self.piece_index(theta, side), theta)
    }

    /// Value at `theta` (right-continuous except at `θ = 0`).
    pub fn eval(&self, theta: f64) -> CMat {
        let side = if theta >= 0.0 { Side::Left } else { Side::Right };
        self.eval_side(theta, side)
    }

    fn violations(&self, name: &str, n: usize, out: &mut Vec<Violation>) {
        let bp = &self.breakpoints;
        if bp.len() < 2 {
            out.push(Violation::KernelBreakpoints {
                kernel: name.to_string(),
                detail: "fewer than two breakpoints".into(),
            });
            return;
        }
        if bp[0] != -1.0 || *bp.last().unwrap() != 0.0 {
            out.push(Violation::KernelBreakpoints {
                kernel: name.to_string(),
                detail: format!("must run from -1 to 0, got {} .. {}", bp[0], bp.last().unwrap()),
            });
        }
        if bp.windows(2).any(|w| !(w[0] < w[1])) {
            out.push(Violation::KernelBreakpoints {
                kernel: name.to_string(),
                detail: "breakpoints not increasing".into(),
            });
        }
        if self.pieces.len() != bp.len() - 1 {
            out.push(Violation::KernelPieces {
                kernel: name.to_string(),
                detail: format!("{} pieces for {} intervals", self.pieces.len(), bp.len() - 1),
            });
        }
        for (j, piece) in self.pieces.iter().enumerate() {
            if piece.is_empty() || piece.len() > MAX_KERNEL_DEGREE + 1 {
                out.push(Violation::KernelPieces {
                    kernel: name.to_string(),
                    detail: format!(
                        "piece {j} has {} coefficient matrices (allowed 1..={})",
                        piece.len(),
                        MAX_KERNEL_DEGREE + 1
                    ),
                });
            }
            for (d, c) in piece.iter().enumerate() {
                if c.nrows() != n || c.ncols() != n {
                    out.push(Violation::Dimension(format!(
                        "{name} piece {j} coefficient {d} is {}x{}, expected {n}x{n}",
                        c.nrows(),
                        c.ncols()
                    )));
                }
            }
        }
    }
}

/// A user-declared Jordan structure for `A₋₁` that bypasses numerical detection.
#[derive(Debug, Clone, PartialEq)]
pub struct DeclaredStructure {
    /// `(eigenvalue, block size)` for every Jordan block.
    pub blocks: Vec<(C64, usize)>,
    /// Optional `S` with `A₋₁ = S J S⁻¹`.
    pub similarity: Option<CMat>,
}

impl DeclaredStructure {
    /// Block-diagonal Jordan matrix `J` of the declared blocks.
    pub fn jordan_matrix(&self) -> CMat {
        let n: usize = self.blocks.iter().map(|b| b.1).sum();
        let mut j = CMat::zeros(n, n);
        let mut off = 0;
        for &(mu, size) in &self.blocks {
            for i in 0..size {
                j[(off + i, off + i)] = mu;
                if i + 1 < size {
                    j[(off + i, off + i + 1)] = C64::new(1.0, 0.0);
                }
            }
            off += size;
        }
        j
    }
}

/// The neutral system of the form
/// `ż(t) = A₋₁ż(t−1) + ∫A₂(θ)ż(t+θ)dθ + ∫A₃(θ)z(t+θ)dθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeutralSystem {
    pub n: usize,
    pub a_minus1: CMat,
    pub a2: PiecewisePolyKernel,
    pub a3: PiecewisePolyKernel,
    pub jordan: Option<DeclaredStructure>,
}

/// One violated standing assumption.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Dimension(String),
    SingularAminus1 { ratio: f64 },
    KernelBreakpoints { kernel: String, detail: String },
    KernelPieces { kernel: String, detail: String },
    DeclaredStructure(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension(s) => write!(f, "dimension mismatch: {s}"),
            Violation::SingularAminus1 { ratio } => {
                write!(f, "A₋₁ singular (σ_min/σ_max = {ratio:.3e})")
            }
            Violation::KernelBreakpoints { kernel, detail } => write!(f, "{kernel}: {detail}"),
            Violation::KernelPieces { kernel, detail } => write!(f, "{kernel}: {detail}"),
            Violation::DeclaredStructure(s) => write!(f, "declared Jordan structure: {s}"),
        }
    }
}

impl NeutralSystem {
    /// Builds and validates a system.
    pub fn new(a_minus1: CMat, a2: PiecewisePolyKernel, a3: PiecewisePolyKernel) -> Result<Self> {
        let sys = Self {
            n: a_minus1.nrows(),
            a_minus1,
            a2,
            a3,
            jordan: None,
        };
        sys.ensure_valid()?;
        Ok(sys)
    }

    /// Pure neutral system: `A₂ = A₃ = 0`.
    pub fn pure_neutral(a_minus1: CMat) -> Result<Self> {
        let n = a_minus1.nrows();
        Self::new(a_minus1, PiecewisePolyKernel::zero(n), PiecewisePolyKernel::zero(n))
    }

    pub fn with_declared_structure(mut self, structure: DeclaredStructure) -> Result<Self> {
        self.jordan = Some(structure);
        self.ensure_valid()?;
        Ok(self)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSystem(v.iter().map(|x| x.to_string()).collect()))
        }
    }

    /// Every violated invariant; an empty list means the system is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.n;
        if n == 0 {
            out.push(Violation::Dimension("n must be at least 1".into()));
            return out;
        }
        if self.a_minus1.nrows() != n || self.a_minus1.ncols() != n {
            out.push(Violation::Dimension(format!(
                "A₋₁ is {}x{}, expected {n}x{n}",
                self.a_minus1.nrows(),
                self.a_minus1.ncols()
            )));
        } else {
            let s = linalg::singular_values(&self.a_minus1);
            let hi = s[0];
            let lo = *s.last().unwrap();
            if !(hi > 0.0 && lo > INVERTIBILITY_TOL * hi) {
                let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
                out.push(Violation::SingularAminus1 { ratio });
            }
        }
        self.a2.violations("A₂", n, &mut out);
        self.a3.violations("A₃", n, &mut out);
        if let Some(js) = &self.jordan {
            let total: usize = js.blocks.iter().map(|b| b.1).sum();
            if js.blocks.iter().any(|b| b.1 == 0) {
                out.push(Violation::DeclaredStructure("block of size 0".into()));
            }
            if total != n {
                out.push(Violation::DeclaredStructure(format!(
                    "block sizes sum to {total}, expected {n}"
                )));
            } else if let Some(s) = &js.similarity {
                if s.nrows() != n || s.ncols() != n {
                    out.push(Violation::DeclaredStructure("similarity has the wrong shape".into()));
                } else if self.a_minus1.nrows() == n && self.a_minus1.ncols() == n {
                    let j = js.jordan_matrix();
                    let resid = &self.a_minus1 * s - s * &j;
                    let scale = linalg::norm2(&self.a_minus1).max(1.0) * linalg::norm2(s);
                    if linalg::norm2(&resid) > 1e-8 * scale {
                        out.push(Violation::DeclaredStructure(
                            "A₋₁ S ≠ S J for the declared similarity".into(),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// A state `(y, z(·)) ∈ ℂⁿ × L₂(−1,0;ℂⁿ)` with `z` sampled at `θᵢ = −1 + i/m`.
///
/// `z` is stored as an `n × (m+1)` matrix whose column `i` is `z(θᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct M2State {
    pub y: CVec,
    pub z: CMat,
}

impl M2State {
    pub fn new(y: CVec, z: CMat) -> Result<Self> {
        if z.ncols() < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid resolution m = {} is below 2",
                z.ncols().saturating_sub(1)
            )));
        }
        if y.len() != z.nrows() {
            return Err(Error::Dimension(format!(
                "y has dimension {}, z samples have dimension {}",
                y.len(),
                z.nrows()
            )));
        }
        Ok(Self { y, z })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            y: CVec::zeros(n),
            z: CMat::zeros(n, m + 1),
        }
    }

    /// State with `z(θ) = f(θ)` on the grid and `y = z(0) − A₋₁z(−1)`.
    pub fn in_domain(a_minus1: &CMat, m: usize, f: impl Fn(f64) -> CVec) -> Self {
        let n = a_minus1.nrows();
        let mut z = CMat::zeros(n, m + 1);
        for i in 0..=m {
            z.set_column(i, &f(theta(i, m)));
        }
        let y = z.column(m) - a_minus1 * z.column(0);
        Self { y, z }
    }

    /// A smooth pseudo-random state in the domain of the generator, reproducible
    /// from `seed`.
    pub fn generic(a_minus1: &CMat, m: usize, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let n = a_minus1.nrows();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut coeff = || -> CVec {
            CVec::from_fn(n, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        };
        let c: Vec<CVec> = (0..5).map(|_| coeff()).collect();
        Self::in_domain(a_minus1, m, |t| {
            &c[0] + &c[1] * C64::from(t) + &c[2] * C64::from(t * t)
                + &c[3] * C64::from((3.0 * t).sin())
                + &c[4] * C64::from((2.0 * t).cos())
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.z.ncols() - 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m() as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        theta(i, self.m())
    }

    /// `y − (z(0) − A₋₁ z(−1))`.
    pub fn domain_residual(&self, a_minus1: &CMat) -> CVec {
        &self.y - (self.z.column(self.m()) - a_minus1 * self.z.column(0))
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            y: &self.y * alpha,
            z: &self.z * alpha,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            y: &self.y - &other.y,
            z: &self.z - &other.z,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            y: &self.y + &other.y,
            z: &self.z + &other.z,
        }
    }
}

/// Grid point `θᵢ = −1 + i/m`.
#[inline]
pub fn theta(i: usize, m: usize) -> f64 {
    -1.0 + i as f64 / m as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> CMat {
        CMat::from_element(1, 1, c64(v, 0.0))
    }

    #[test]
    fn scalar_system_is_valid() {
        let sys = NeutralSystem::pure_neutral(scalar(2.0)).unwrap();
        assert!(sys.validate().is_empty());
    }

    #[test]
    fn singular_a_minus1_is_reported() {
        let sys = NeutralSystem {
            n: 1,
            a_minus1: scalar(0.0),
            a2: PiecewisePolyKernel::zero(1),
            a3: PiecewisePolyKernel::zero(1),
            jordan: None,
        };
        let v = sys.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().starts_with("A₋₁ singular"));
        assert!(NeutralSystem::pure_neutral(scalar(0.0)).is_err());
    }

    #[test]
    fn unordered_breakpoints_are_reported() {
        let one = scalar(1.0);
        let kern = PiecewisePolyKernel {
            breakpoints: vec![-1.0, -0.5, -0.7, 0.0],
            pieces: vec![vec![one.clone()], vec![one.clone()], vec![one]],
        };
        let sys = NeutralSystem {
            n: 1,
            a_minus1: scalar(2.0),
            a2: kern,
            a3: PiecewisePolyKernel::zero(1),
            jordan: None,
        };
        let v = sys.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("breakpoints not increasing"));
    }

    #[test]
    fn kernel_dimension_mismatch_is_reported() {
        let sys = NeutralSystem {
            n: 1,
            a_minus1: scalar(2.0),
            a2: PiecewisePolyKernel::zero(2),
            a3: PiecewisePolyKernel::zero(1),
            jordan: None,
        };
        let v = sys.validate();
        assert!(matches!(v[0], Violation::Dimension(_)));
    }

    #[test]
    fn degree_above_three_is_rejected() {
        let one = scalar(1.0);
        let kern = PiecewisePolyKernel::polynomial(vec![one.clone(); 5]);
        let sys = NeutralSystem {
            n: 1,
            a_minus1: scalar(2.0),
            a2: PiecewisePolyKernel::zero(1),
            a3: kern,
            jordan: None,
        };
        assert_eq!(sys.validate().len(), 1);
    }

    #[test]
    fn piece_lookup_respects_sides() {
        let kern = PiecewisePolyKernel {
            breakpoints: vec![-1.0, -0.5, 0.0],
            pieces: vec![vec![scalar(1.0)], vec![scalar(2.0)]],
        };
        assert_eq!(kern.piece_index(-0.5, Side::Left), 0);
        assert_eq!(kern.piece_index(-0.5, Side::Right), 1);
        assert_eq!(kern.piece_index(-1.0, Side::Right), 0);
        assert_eq!(kern.piece_index(-1.0, Side::Left), 0);
        assert_eq!(kern.piece_index(0.0, Side::Left), 1);
        assert_eq!(kern.piece_index(0.0, Side::Right), 1);
        assert_eq!(kern.eval(-0.75)[(0, 0)], c64(1.0, 0.0));
        assert_eq!(kern.eval(-0.25)[(0, 0)], c64(2.0, 0.0));
    }

    #[test]
    fn declared_structure_is_checked_against_a_minus1() {
        let a = CMat::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(2.0, 0.0)]);
        let ok = DeclaredStructure {
            blocks: vec![(c64(2.0, 0.0), 2)],
            similarity: Some(CMat::identity(2, 2)),
        };
        assert!(NeutralSystem::pure_neutral(a.clone())
            .unwrap()
            .with_declared_structure(ok)
            .is_ok());
        let bad = DeclaredStructure {
            blocks: vec![(c64(2.0, 0.0), 1), (c64(2.0, 0.0), 1)],
            similarity: Some(CMat::identity(2, 2)),
        };
        assert!(NeutralSystem::pure_neutral(a)
            .unwrap()
            .with_declared_structure(bad)
            .is_err());
    }

    #[test]
    fn in_domain_state_has_zero_residual() {
        let a = scalar(0.5);
        let x = M2State::in_domain(&a, 10, |t| CVec::from_element(1, c64(t, 0.0)));
        assert_eq!(x.m(), 10);
        assert!(x.domain_residual(&a).norm() == 0.0);
        assert_eq!(x.y[0], c64(0.5, 0.0));
    }
}
