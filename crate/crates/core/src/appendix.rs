//! Determinant, cofactor and inverse-norm bounds for perturbed Jordan blocks
//! `B_λ = A_λ + E` with `‖E‖ = Σ|eᵢⱼ| ≤ 1`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, C64};

/// Largest dimension for which cofactors are enumerated.
pub const MAX_DIM: usize = 6;
pub const MIN_M0_TRIALS: usize = 1000;
/// Relative slack on every bound comparison, absorbing rounding at equality.
const ROUNDING: f64 = 1e-12;

/// Block-diagonal Jordan matrix with eigenvalue `lambda`.
pub fn make_jordan(lambda: C64, sizes: &[usize]) -> CMat {
    let n: usize = sizes.iter().sum();
    let mut a = CMat::identity(n, n) * lambda;
    let mut off = 0;
    for &s in sizes {
        for i in 0..s.saturating_sub(1) {
            a[(off + i, off + i + 1)] = c64(1.0, 0.0);
        }
        off += s;
    }
    a
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for trial `index` of stream `stream`, independent of scheduling.
pub fn trial_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

/// Random `n × n` perturbation with `Σ|eᵢⱼ| ≤ 1`: magnitudes uniform on the
/// simplex, scaled by a uniform factor half of the time; phases uniform.
pub fn sample_perturbation(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(n, &mut rng)
}

fn sample_with(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let raw: Vec<f64> = (0..n * n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let scale = if rng.random::<bool>() { 1.0 } else { rng.random::<f64>() };
    let mut e = CMat::zeros(n, n);
    for (idx, r) in raw.iter().enumerate() {
        let phase = 2.0 * PI * rng.random::<f64>();
        e[(idx / n, idx % n)] = C64::from_polar(r / total * scale, phase);
    }
    e
}

/// `[f₁, …, fₙ]` with `det(λI + N + E) = λⁿ + f₁λⁿ⁻¹ + … + fₙ` for the single
/// Jordan block `N` of size `n`, by interpolation at the `(n+1)`-th roots of unity.
pub fn det_coefficients(e: &CMat) -> Vec<C64> {
    let n = e.nrows();
    let base = make_jordan(c64(0.0, 0.0), &[n]) + e;
    let nodes = n + 1;
    let vals: Vec<(C64, C64)> = (0..nodes)
        .map(|k| {
            let w = C64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64);
            (w, linalg::det(&(&base + CMat::identity(n, n) * w)))
        })
        .collect();
    // coefficient of λ^j
    let coef = |j: usize| -> C64 {
        vals.iter().map(|(w, v)| v * w.powi(-(j as i32))).sum::<C64>() / nodes as f64
    };
    (1..=n).map(|j| coef(n - j)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M0Estimate {
    /// Largest sampled `|f_j|`.
    pub m0: f64,
    /// The term-count ceiling `2ⁿ·n!`.
    pub ceiling: f64,
}

/// Samples `M₀ = sup_E max_j |f_j(E)|` for a single block of size `n`.
pub fn estimate_m0(n: usize, trials: usize, seed: u64) -> Result<M0Estimate> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidArgument(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    if trials < MIN_M0_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "{trials} trials requested, at least {MIN_M0_TRIALS} required"
        )));
    }
    let m0 = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let e = sample_perturbation(n, trial_seed(seed, 2 * n as u64, i));
            det_coefficients(&e).iter().map(|f| f.norm()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let ceiling = 2f64.powi(n as i32) * (1..=n).product::<usize>() as f64;
    Ok(M0Estimate { m0, ceiling })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedBlock {
    pub lambda: C64,
    pub sizes: Vec<usize>,
    pub a_matrix: CMat,
    pub b_matrix: CMat,
}

impl PerturbedBlock {
    pub fn new(lambda: C64, sizes: &[usize], e: &CMat) -> Result<Self> {
        let n: usize = sizes.iter().sum();
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidArgument("block sizes must be positive".into()));
        }
        if n > MAX_DIM {
            return Err(Error::InvalidArgument(format!("dimension {n} exceeds {MAX_DIM}")));
        }
        if e.nrows() != n || e.ncols() != n {
            return Err(Error::Dimension(format!("perturbation is {}x{}, blocks need {n}x{n}", e.nrows(), e.ncols())));
        }
        if lambda.norm() < 1.0 {
            return Err(Error::Precondition(format!("|λ| = {} is below 1", lambda.norm())));
        }
        let size = linalg::entrywise_sum_norm(e);
        if size > 1.0 + ROUNDING {
            return Err(Error::Precondition(format!("perturbation norm {size} exceeds 1")));
        }
        let a = make_jordan(lambda, sizes);
        Ok(Self {
            lambda,
            sizes: sizes.to_vec(),
            b_matrix: &a + e,
            a_matrix: a,
        })
    }

    pub fn n(&self) -> usize {
        self.a_matrix.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminantBounds {
    pub det_abs: f64,
    pub upper_ok: bool,
    /// `None` outside the regime `|λ| ≥ 2M`.
    pub lower_ok: Option<bool>,
}

/// `|det B| ≤ M|λ|ⁿ`, and `|det B| ≥ ½|λ|ⁿ` when `|λ| ≥ 2M`.
pub fn check_statement1(pb: &PerturbedBlock, big_m: f64, m0: f64) -> Result<DeterminantBounds> {
    let n = pb.n();
    let required = (n + 1) as f64 * m0;
    if big_m < required * (1.0 - ROUNDING) {
        return Err(Error::Precondition(format!("M = {big_m} is below (n+1)·M₀ = {required}")));
    }
    let det_abs = linalg::det(&pb.b_matrix).norm();
    let lam_n = pb.lambda.norm().powi(n as i32);
    let upper_ok = det_abs <= big_m * lam_n * (1.0 + ROUNDING);
    let lower_ok = (pb.lambda.norm() >= 2.0 * big_m).then_some(det_abs >= 0.5 * lam_n * (1.0 - ROUNDING));
    Ok(DeterminantBounds {
        det_abs,
        upper_ok,
        lower_ok,
    })
}

/// Matrix of cofactors `(−1)^{i+j} det(minor_{ij})`.
pub fn cofactors(b: &CMat) -> CMat {
    let n = b.nrows();
    if n == 1 {
        return CMat::from_element(1, 1, c64(1.0, 0.0));
    }
    CMat::from_fn(n, n, |i, j| {
        let minor = b.clone().remove_row(i).remove_column(j);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        linalg::det(&minor) * sign
    })
}

/// Every cofactor satisfies `|Bᵢⱼ| ≤ M|λ|ⁿ⁻¹`.
pub fn check_remark1(pb: &PerturbedBlock, big_m: f64) -> bool {
    let bound = big_m * pb.lambda.norm().powi(pb.n() as i32 - 1) * (1.0 + ROUNDING);
    cofactors(&pb.b_matrix).iter().all(|c| c.norm() <= bound)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseBound {
    /// `‖B⁻¹‖` in the entrywise-sum norm.
    pub inv_norm: f64,
    /// `C/|λ|` with `C = 2n²M`.
    pub bound: f64,
    pub ok: bool,
}

/// `‖B_λ⁻¹‖ ≤ 2n²M/|λ|` in the regime `|λ| ≥ 2M`.
pub fn check_statement2(pb: &PerturbedBlock, big_m: f64) -> Result<InverseBound> {
    let abs = pb.lambda.norm();
    if abs < 2.0 * big_m {
        return Err(Error::Regime {
            abs_lambda: abs,
            two_m: 2.0 * big_m,
        });
    }
    let n = pb.n() as f64;
    let inv = pb
        .b_matrix
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Precondition("B_λ is singular".into()))?;
    let inv_norm = linalg::entrywise_sum_norm(&inv);
    let bound = 2.0 * n * n * big_m / abs;
    Ok(InverseBound {
        inv_norm,
        bound,
        ok: inv_norm <= bound * (1.0 + ROUNDING),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixConfig {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Upper end of the `|λ|` sweep for the inverse-norm scaling law.
    pub sweep_max: f64,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        Self {
            dims: (1..=5).collect(),
            trials: 100_000,
            seed: 0,
            lambda_min: 1.0,
            lambda_max: 1e3,
            sweep_max: 1e6,
        }
    }
}

/// Outcome for one dimension and one decade of `|λ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixRow {
    pub n: usize,
    /// Lower edge of the decade.
    pub lambda_abs: f64,
    pub trials: usize,
    pub m0: f64,
    pub big_m: f64,
    pub violations_upper: usize,
    pub violations_lower: usize,
    /// Largest `‖B⁻¹‖·|λ|` over trials in the regime `|λ| ≥ 2M`.
    pub max_inv_norm_scaled: Option<f64>,
    pub violations_remark1: usize,
    pub violations_inverse: usize,
    /// Trials in the regime `|λ| ≥ 2M`.
    pub in_regime: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionSummary {
    pub n: usize,
    pub m0: f64,
    pub ceiling: f64,
    pub big_m: f64,
    /// Log-log slope of `‖B⁻¹‖` against `|λ|`.
    pub inverse_slope: f64,
    pub sweep: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixReport {
    pub rows: Vec<AppendixRow>,
    pub summaries: Vec<DimensionSummary>,
}

impl AppendixReport {
    pub fn total_violations(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.violations_upper + r.violations_lower + r.violations_remark1 + r.violations_inverse)
            .sum()
    }
}

struct TrialOutcome {
    decade: usize,
    upper_bad: bool,
    lower_bad: bool,
    in_regime: bool,
    remark_bad: bool,
    inverse_bad: bool,
    scaled: f64,
}

/// Samples `(λ, E)` with `|λ|` log-uniform and checks every bound.
pub fn run_appendix(cfg: &AppendixConfig) -> Result<AppendixReport> {
    if !(cfg.lambda_min >= 1.0 && cfg.lambda_max > cfg.lambda_min) {
        return Err(Error::InvalidArgument(format!(
            "|λ| range [{}, {}] must satisfy 1 ≤ min < max",
            cfg.lambda_min, cfg.lambda_max
        )));
    }
    let lo = cfg.lambda_min.log10();
    let hi = cfg.lambda_max.log10();
    let decades = ((hi - lo).ceil() as usize).max(1);
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &n in &cfg.dims {
        let est = estimate_m0(n, cfg.trials.max(MIN_M0_TRIALS), cfg.seed)?;
        let big_m = (n + 1) as f64 * est.m0;
        let outcomes: Vec<TrialOutcome> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|i| -> Result<TrialOutcome> {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, 2 * n as u64 + 1, i));
                let u: f64 = rng.random();
                let abs = 10f64.powf(lo + (hi - lo) * u);
                let lambda = C64::from_polar(abs, 2.0 * PI * rng.random::<f64>());
                let e = sample_with(n, &mut rng);
                let pb = PerturbedBlock::new(lambda, &[n], &e)?;
                let s1 = check_statement1(&pb, big_m, est.m0)?;
                let in_regime = s1.lower_ok.is_some();
                let (inverse_bad, scaled) = if in_regime {
                    let s2 = check_statement2(&pb, big_m)?;
                    (!s2.ok, s2.inv_norm * abs)
                } else {
                    (false, f64::NAN)
                };
                Ok(TrialOutcome {
                    decade: (((abs.log10() - lo).floor()) as usize).min(decades - 1),
                    upper_bad: !s1.upper_ok,
                    lower_bad: s1.lower_ok == Some(false),
                    in_regime,
                    remark_bad: !check_remark1(&pb, big_m),
                    inverse_bad,
                    scaled,
                })
            })
            .collect::<Result<_>>()?;
        for d in 0..decades {
            let mut row = AppendixRow {
                n,
                lambda_abs: 10f64.powf(lo + d as f64),
                trials: 0,
                m0: est.m0,
                big_m,
                violations_upper: 0,
                violations_lower: 0,
                max_inv_norm_scaled: None,
                violations_remark1: 0,
                violations_inverse: 0,
                in_regime: 0,
            };
            for o in outcomes.iter().filter(|o| o.decade == d) {
                row.trials += 1;
                row.violations_upper += o.upper_bad as usize;
                row.violations_lower += o.lower_bad as usize;
                row.violations_remark1 += o.remark_bad as usize;
                row.violations_inverse += o.inverse_bad as usize;
                if o.in_regime {
                    row.in_regime += 1;
                    row.max_inv_norm_scaled = Some(row.max_inv_norm_scaled.map_or(o.scaled, |v: f64| v.max(o.scaled)));
                }
            }
            rows.push(row);
        }
        summaries.push(inverse_sweep(n, est, big_m, cfg)?);
    }
    Ok(AppendixReport { rows, summaries })
}

/// `‖B_λ⁻¹‖` along 25 log-spaced `|λ|` in `[max(2M, 10), sweep_max]` for one
/// fixed perturbation, with its log-log slope.
fn inverse_sweep(n: usize, est: M0Estimate, big_m: f64, cfg: &AppendixConfig) -> Result<DimensionSummary> {
    let e = sample_perturbation(n, trial_seed(cfg.seed, 2 * n as u64 + 2, 0));
    let start = (2.0 * big_m).max(10.0);
    let (l0, l1) = (start.log10(), cfg.sweep_max.log10());
    let phase = C64::from_polar(1.0, 0.3);
    let mut sweep = Vec::new();
    for i in 0..25 {
        let abs = 10f64.powf(l0 + (l1 - l0) * i as f64 / 24.0);
        let pb = PerturbedBlock::new(phase * abs, &[n], &e)?;
        sweep.push((abs, check_statement2(&pb, big_m)?.inv_norm));
    }
    let xs: Vec<f64> = sweep.iter().map(|(a, _)| a.ln()).collect();
    let ys: Vec<f64> = sweep.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 25.0;
    let my = ys.iter().sum::<f64>() / 25.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(DimensionSummary {
        n,
        m0: est.m0,
        ceiling: est.ceiling,
        big_m,
        inverse_slope: sxy / sxx,
        sweep,
    })
}
