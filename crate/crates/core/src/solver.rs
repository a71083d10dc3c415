//! Method-of-steps integration of
//! `ż(t) = A₋₁ż(t−1) + ∫A₂(θ)ż(t+θ)dθ + ∫A₃(θ)z(t+θ)dθ`.
//!
//! The grid `h = 1/m` is commensurate with the delay, so integer times are grid
//! nodes and the derivative jumps they carry are stored as separate left and
//! right limits.

use crate::error::{Error, Result};
use crate::grid::Differentiator;
use crate::linalg::{self, CMat, CVec, C64};
use crate::state::DOMAIN_TOL;
use crate::system::{M2State, NeutralSystem, Side, INVERTIBILITY_TOL};

pub const MIN_RESOLUTION: usize = 50;

/// Solution samples on the nodes `t = −1, −1 + h, …, T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub m: usize,
    pub h: f64,
    /// Number of steps past `t = 0`.
    pub steps: usize,
    /// `z` at node `g` (time `(g − m)h`), node-major.
    pub z: Vec<C64>,
    pub zdot_left: Vec<C64>,
    pub zdot_right: Vec<C64>,
    /// `‖(y(t), z_t)‖` for `t = jh`, `j = 0..=steps`.
    pub norms: Vec<f64>,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.h
    }

    /// Time of the `j`-th step past zero.
    pub fn time(&self, j: usize) -> f64 {
        j as f64 / self.m as f64
    }

    /// `z((g − m)h)`.
    pub fn z_node(&self, g: usize) -> CVec {
        CVec::from_column_slice(&self.z[g * self.n..(g + 1) * self.n])
    }

    /// The state `(y(t), z_t)` at `t = jh`.
    pub fn state(&self, j: usize, a_minus1: &CMat) -> M2State {
        let mut z = CMat::zeros(self.n, self.m + 1);
        for i in 0..=self.m {
            z.set_column(i, &self.z_node(j + i));
        }
        let y = z.column(self.m) - a_minus1 * z.column(0);
        M2State { y, z }
    }
}

struct Weights {
    /// `h/2·A₂(θᵢ⁺)` for `i < m`.
    k2r: Vec<CMat>,
    /// `h/2·A₂(θᵢ⁻)` for `i ≥ 1`.
    k2l: Vec<CMat>,
    /// trapezoid weights for `A₃` (both cell contributions combined).
    k3: Vec<CMat>,
}

impl Weights {
    fn new(sys: &NeutralSystem, m: usize) -> Self {
        let n = sys.n;
        let h = 1.0 / m as f64;
        let half = C64::from(0.5 * h);
        let mut k2r = vec![CMat::zeros(n, n); m + 1];
        let mut k2l = vec![CMat::zeros(n, n); m + 1];
        let mut k3 = vec![CMat::zeros(n, n); m + 1];
        for i in 0..=m {
            let th = crate::system::theta(i, m);
            if i < m {
                k2r[i] = sys.a2.eval_side(th, Side::Right) * half;
                k3[i] += sys.a3.eval_side(th, Side::Right) * half;
            }
            if i > 0 {
                k2l[i] = sys.a2.eval_side(th, Side::Left) * half;
                k3[i] += sys.a3.eval_side(th, Side::Left) * half;
            }
        }
        Self { k2r, k2l, k3 }
    }
}

fn mul_add(acc: &mut [C64], a: &CMat, x: &[C64]) {
    let n = acc.len();
    for j in 0..n {
        let xj = x[j];
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        for i in 0..n {
            acc[i] += a[(i, j)] * xj;
        }
    }
}

/// Integrates from the initial state `x0` (sampled on `m` intervals) up to
/// `horizon`, using trapezoid quadrature over the history and two
/// trapezoid corrector passes per step.
pub fn simulate(sys: &NeutralSystem, x0: &M2State, horizon: f64, m: usize) -> Result<Trajectory> {
    sys.ensure_valid()?;
    if m < MIN_RESOLUTION {
        return Err(Error::Precondition(format!("m = {m} is below {MIN_RESOLUTION}")));
    }
    if !(horizon >= 1.0) {
        return Err(Error::Precondition(format!("horizon {horizon} is below 1")));
    }
    if x0.m() != m || x0.n() != sys.n {
        return Err(Error::Dimension(format!(
            "initial state has n = {}, m = {}; expected n = {}, m = {m}",
            x0.n(),
            x0.m(),
            sys.n
        )));
    }
    let violation = linalg::vec_norm(&x0.domain_residual(&sys.a_minus1));
    let tolerance = DOMAIN_TOL * crate::state::m2_norm(x0);
    if violation > tolerance {
        return Err(Error::DomainViolation { violation, tolerance });
    }

    let n = sys.n;
    let h = 1.0 / m as f64;
    let steps = (horizon * m as f64).round() as usize;
    let total = m + steps + 1;
    let w = Weights::new(sys, m);
    let s = CMat::identity(n, n) - &w.k2l[m];
    if !linalg::is_well_conditioned(&s, INVERTIBILITY_TOL) {
        return Err(Error::SingularImplicit { m });
    }
    let s_lu = s.lu();
    let a = &sys.a_minus1;

    let mut z = vec![C64::new(0.0, 0.0); total * n];
    let mut zl = vec![C64::new(0.0, 0.0); total * n];
    let mut zr = vec![C64::new(0.0, 0.0); total * n];
    let hist_dot = Differentiator::new(m).apply(&x0.z);
    for i in 0..=m {
        for r in 0..n {
            z[i * n + r] = x0.z[(r, i)];
            zl[i * n + r] = hist_dot[(r, i)];
            zr[i * n + r] = hist_dot[(r, i)];
        }
    }

    // everything in the equation at node g except the K3[m]·z(g) and K2L[m]·ż(g⁻) terms
    let known_part = |g: usize, z: &[C64], zl: &[C64], zr: &[C64], left_delay: bool| -> Vec<C64> {
        let base = g - m;
        let mut acc = vec![C64::new(0.0, 0.0); n];
        let delayed = if left_delay { &zl[base * n..(base + 1) * n] } else { &zr[base * n..(base + 1) * n] };
        mul_add(&mut acc, a, delayed);
        for i in 0..m {
            let node = (base + i) * n;
            mul_add(&mut acc, &w.k2r[i], &zr[node..node + n]);
            mul_add(&mut acc, &w.k3[i], &z[node..node + n]);
            if i > 0 {
                mul_add(&mut acc, &w.k2l[i], &zl[node..node + n]);
            }
        }
        acc
    };

    // right derivative at t = 0 from the equation, with the history's left derivative at 0
    {
        let mut acc = known_part(m, &z, &zl, &zr, false);
        mul_add(&mut acc, &w.k3[m], &z[m * n..(m + 1) * n]);
        mul_add(&mut acc, &w.k2l[m], &zl[m * n..(m + 1) * n]);
        zr[m * n..(m + 1) * n].copy_from_slice(&acc);
    }

    for g in m + 1..total {
        let r = known_part(g, &z, &zl, &zr, true);
        let solve_left = |zg: &[C64]| -> CVec {
            let mut rhs = r.clone();
            mul_add(&mut rhs, &w.k3[m], zg);
            s_lu.solve(&CVec::from_vec(rhs)).expect("checked nonsingular")
        };
        let prev = (g - 1) * n;
        let mut zg: Vec<C64> = (0..n).map(|i| z[prev + i] + zr[prev + i] * h).collect();
        for _ in 0..2 {
            let d = solve_left(&zg);
            for i in 0..n {
                zg[i] = z[prev + i] + (zr[prev + i] + d[i]) * (0.5 * h);
            }
        }
        let d = solve_left(&zg);
        let cur = g * n;
        let back = (g - m) * n;
        for i in 0..n {
            z[cur + i] = zg[i];
            zl[cur + i] = d[i];
        }
        let mut jump = vec![C64::new(0.0, 0.0); n];
        let diff: Vec<C64> = (0..n).map(|i| zr[back + i] - zl[back + i]).collect();
        mul_add(&mut jump, a, &diff);
        for i in 0..n {
            zr[cur + i] = d[i] + jump[i];
        }
    }

    let mut norms = Vec::with_capacity(steps + 1);
    let node_sq = |g: usize| z[g * n..(g + 1) * n].iter().map(|v| v.norm_sqr()).sum::<f64>();
    for j in 0..=steps {
        let mut y = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            y[i] = z[(j + m) * n + i];
        }
        let neg: Vec<C64> = z[j * n..(j + 1) * n].iter().map(|v| -v).collect();
        mul_add(&mut y, a, &neg);
        let mut integral = 0.5 * (node_sq(j) + node_sq(j + m));
        for g in j + 1..j + m {
            integral += node_sq(g);
        }
        norms.push((y.iter().map(|v| v.norm_sqr()).sum::<f64>() + integral * h).sqrt());
    }

    Ok(Trajectory {
        n,
        m,
        h,
        steps,
        z,
        zdot_left: zl,
        zdot_right: zr,
        norms,
    })
}

/// `(t, ‖x(t)‖)` for every `stride`-th grid time in `[t_min, t_max]`.
pub fn norm_samples(traj: &Trajectory, t_min: f64, t_max: f64, stride: usize) -> Result<Vec<(f64, f64)>> {
    if t_min < 1.0 {
        return Err(Error::Precondition(format!("t_min = {t_min} is below 1")));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let m = traj.m as f64;
    let first = (t_min * m - 1e-9).ceil().max(0.0) as usize;
    let last = ((t_max * m + 1e-9).floor() as usize).min(traj.steps);
    if t_max < t_min || first > last {
        return Err(Error::EmptyRange(format!(
            "no grid times in [{t_min}, {t_max}] (horizon {})",
            traj.horizon()
        )));
    }
    let available = last - first + 1;
    if stride > available {
        return Err(Error::EmptyRange(format!(
            "stride {stride} exceeds the {available} samples in [{t_min}, {t_max}]"
        )));
    }
    Ok((first..=last)
        .step_by(stride)
        .map(|j| (traj.time(j), traj.norms[j]))
        .collect())
}
