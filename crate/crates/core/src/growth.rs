//! Growth-bound certification: `‖e^{𝒜t}𝒜^{−n}x‖ ≤ C e^{ωt} t^{p−1−n/s}‖x‖`.
//!
//! `ω` comes from the computed spectrum, `s` from the rate at which the leading
//! chain of eigenvalues approaches the line `Re λ = ω`, and the empirical
//! exponent from a simulated trajectory.

use crate::characteristic::{scan_spectrum_with, SpectrumReport};
use crate::error::{Error, Result};
use crate::modulus::{ModulusSpectrum, DEFAULT_CLUSTER_TOL};
use crate::solver::{norm_samples, simulate};
use crate::state::smooth;
use crate::system::{M2State, NeutralSystem};

/// Gaps `ω − Re λ` at or below this are treated as zero.
pub const GAP_FLOOR: f64 = 1e-14;
pub const MIN_FIT_POINTS: usize = 8;
pub const MIN_EXPONENT_SAMPLES: usize = 20;
pub const DEFAULT_SLACK: f64 = 0.3;
/// Roots within this distance of `ω` make the smoothed bound inapplicable.
pub const HYPOTHESIS_TOL: f64 = 1e-9;

/// `max(ω̃, max Re λ)` over every located root.
pub fn estimate_omega(report: &SpectrumReport, ms: &ModulusSpectrum) -> f64 {
    report
        .all_roots()
        .map(|r| r.lambda.re)
        .fold(ms.omega_tilde, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub s: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares slope, intercept and coefficient of determination.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - icpt - slope * x;
            r * r
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, icpt, r2)
}

/// Fits `ω − Re λ_k ≈ C|k|^{−s}` to `(k, Re λ_k)` pairs with `k ≠ 0`.
pub fn fit_rate(points: &[(i64, f64)], omega: f64) -> Result<RateFit> {
    let pts: Vec<(i64, f64)> = points.iter().copied().filter(|(k, _)| *k != 0).collect();
    if !pts.is_empty() && pts.iter().all(|(_, re)| omega - re <= GAP_FLOOR) {
        return Err(Error::DegenerateFit(format!(
            "all {} roots lie on Re λ = {omega} (s undefined)",
            pts.len()
        )));
    }
    let usable: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(_, re)| omega - re > GAP_FLOOR)
        .map(|(k, re)| ((k.abs() as f64).ln(), (omega - re).ln()))
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientSamples {
            need: MIN_FIT_POINTS,
            got: usable.len(),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
    if xs.iter().all(|x| *x == xs[0]) {
        return Err(Error::DegenerateFit("all roots share one |k|".into()));
    }
    let (slope, _, r2) = linear_fit(&xs, &ys);
    Ok(RateFit {
        s: -slope,
        r2,
        points: xs.len(),
    })
}

/// Rate fit over the leading chain (`m = 1`) with `k_min ≤ |k| ≤ k_max`, using
/// the root of largest real part in each disc.
pub fn fit_s_window(
    report: &SpectrumReport,
    omega: f64,
    k_min: i64,
    k_max: Option<i64>,
) -> Result<RateFit> {
    let points: Vec<(i64, f64)> = report
        .discs
        .iter()
        .filter(|d| d.disc.m == 1 && d.disc.k != 0)
        .filter(|d| d.disc.k.abs() >= k_min && k_max.is_none_or(|km| d.disc.k.abs() <= km))
        .filter_map(|d| {
            d.roots
                .iter()
                .map(|r| r.lambda.re)
                .reduce(f64::max)
                .map(|re| (d.disc.k, re))
        })
        .collect();
    fit_rate(&points, omega)
}

/// Rate fit over every `k ≠ 0` disc of the leading chain.
pub fn fit_s(report: &SpectrumReport, omega: f64) -> Result<RateFit> {
    fit_s_window(report, omega, 1, None)
}

/// `p − 1 − n/s`; with `n_smooth = 0` this is `p − 1` for any `s`.
pub fn predicted_exponent(ms: &ModulusSpectrum, n_smooth: usize, s: f64) -> f64 {
    exponent_for(ms.p, n_smooth, s)
}

fn exponent_for(p: usize, n_smooth: usize, s: f64) -> f64 {
    let base = p as f64 - 1.0;
    if n_smooth == 0 {
        base
    } else {
        base - n_smooth as f64 / s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub beta: f64,
    pub c: f64,
    /// RMS residual of the fit.
    pub residual: f64,
    pub samples: usize,
}

/// Fits `ln‖x(t)‖ − ωt = β ln t + c` over samples with `t0 ≤ t ≤ t1`.
pub fn empirical_exponent(samples: &[(f64, f64)], omega: f64, window: (f64, f64)) -> Result<ExponentFit> {
    let (t0, t1) = window;
    if t0 < 1.0 {
        return Err(Error::Precondition(format!("fit window starts at {t0} < 1")));
    }
    let inside: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(t, _)| *t >= t0 - 1e-12 && *t <= t1 + 1e-12)
        .collect();
    if inside.len() < MIN_EXPONENT_SAMPLES {
        return Err(Error::InsufficientSamples {
            need: MIN_EXPONENT_SAMPLES,
            got: inside.len(),
        });
    }
    if let Some((t, v)) = inside.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("norm {v} at t = {t} is not positive")));
    }
    let xs: Vec<f64> = inside.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = inside.iter().map(|(t, v)| v.ln() - omega * t).collect();
    let (beta, c, _) = linear_fit(&xs, &ys);
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - c - beta * x).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(ExponentFit {
        beta,
        c,
        residual,
        samples: xs.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig {
    pub n_smooth: usize,
    pub k_max: i64,
    pub horizon: f64,
    pub m: usize,
    pub slack: f64,
    /// `|k|` window of the rate fit.
    pub k_fit_min: i64,
    pub k_fit_max: Option<i64>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            n_smooth: 0,
            k_max: 40,
            horizon: 30.0,
            m: 100,
            slack: DEFAULT_SLACK,
            k_fit_min: 1,
            k_fit_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "n/a",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCertificate {
    pub omega: f64,
    pub s_fit: Option<f64>,
    pub r2: Option<f64>,
    pub p: usize,
    pub p1: usize,
    pub n_smooth: usize,
    pub beta_pred: f64,
    pub beta_emp: f64,
    pub slack: f64,
    pub verdict: Verdict,
    pub k_max: i64,
    pub horizon: f64,
    pub m: usize,
    /// Largest real part among the located roots.
    pub max_root_re: f64,
    pub note: Option<String>,
}

impl GrowthCertificate {
    /// The verdict implied by the stored numbers.
    pub fn recompute_verdict(&self) -> Verdict {
        if self.n_smooth > 0 && self.max_root_re >= self.omega - HYPOTHESIS_TOL {
            Verdict::NotApplicable
        } else if self.beta_emp <= self.beta_pred + self.slack {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Scan, fit, smooth, simulate and compare exponents.
pub fn certify(sys: &NeutralSystem, x0: &M2State, cfg: &CertifyConfig) -> Result<GrowthCertificate> {
    sys.ensure_valid()?;
    let ms = ModulusSpectrum::for_system(sys, DEFAULT_CLUSTER_TOL)?;
    let report = scan_spectrum_with(sys, &ms, cfg.k_max)?;
    let omega = estimate_omega(&report, &ms);
    let fit = match fit_s_window(&report, omega, cfg.k_fit_min, cfg.k_fit_max) {
        Ok(f) => Some(f),
        Err(e) if cfg.n_smooth > 0 => return Err(e),
        Err(_) => None,
    };
    let x = smooth(sys, x0, cfg.n_smooth)?;
    let traj = simulate(sys, &x, cfg.horizon, cfg.m)?;
    let t0 = (cfg.horizon / 5.0).max(1.0);
    let samples = norm_samples(&traj, t0, cfg.horizon, (cfg.m / 10).max(1))?;
    let beta_emp = empirical_exponent(&samples, omega, (t0, cfg.horizon))?.beta;
    // a non-positive rate means no power-law approach to ω, so no smoothing gain
    let beta_pred = match fit {
        Some(f) if f.s > 0.0 => exponent_for(ms.p, cfg.n_smooth, f.s),
        _ => exponent_for(ms.p, 0, 1.0),
    };
    let max_root_re = report
        .all_roots()
        .map(|r| r.lambda.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut cert = GrowthCertificate {
        omega,
        s_fit: fit.map(|f| f.s),
        r2: fit.map(|f| f.r2),
        p: ms.p,
        p1: ms.p1(),
        n_smooth: cfg.n_smooth,
        beta_pred,
        beta_emp,
        slack: cfg.slack,
        verdict: Verdict::Fail,
        k_max: cfg.k_max,
        horizon: cfg.horizon,
        m: cfg.m,
        max_root_re,
        note: None,
    };
    cert.verdict = cert.recompute_verdict();
    if cert.verdict == Verdict::NotApplicable {
        cert.note = Some(format!(
            "root with Re λ = {max_root_re} reaches ω = {omega}; the smoothed bound does not apply"
        ));
    } else if cfg.n_smooth > 0 && fit.is_some_and(|f| f.s <= 0.0) {
        cert.note = Some("fitted s is not positive; predicted exponent falls back to p - 1".into());
    }
    Ok(cert)
}
