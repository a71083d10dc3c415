//! Characteristic matrix `Δ(λ)` and location of its zeros.
//!
//! `Δ(λ) = λI − λe^{−λ}A₋₁ − λL₂(λ) − L₃(λ)` with `Lᵢ(λ) = ∫₋₁⁰ e^{λθ}Aᵢ(θ)dθ`.
//! Zeros of `det Δ` are the eigenvalues of the generator. For large `|k|` they
//! cluster in discs around the asymptotic centers `ln|μₘ| + i(arg μₘ + 2kπ)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{kernel_laplace, kernel_laplace_deriv};
use crate::linalg::{self, c64, CMat, C64};
use crate::modulus::{ModulusSpectrum, DEFAULT_CLUSTER_TOL};
use crate::system::{NeutralSystem, PiecewisePolyKernel};

/// Contours with `min|det| < CONTOUR_RATIO · max|det|` are rejected.
pub const CONTOUR_RATIO: f64 = 1e-12;

/// Roots closer than this (in units of the disc radius) are merged into one
/// multiple root.
pub const ROOT_CLUSTER_TOL: f64 = 1e-4;

/// Required `|det Δ(λ)|` at a refined root relative to the contour maximum.
pub const ROOT_RESIDUAL: f64 = 1e-9;

const BASE_POINTS: usize = 64;
const MAX_POINTS: usize = 1 << 14;
const MOMENT_START: usize = 128;
const MOMENT_MAX: usize = 1 << 16;
const RADIUS_RETRIES: [f64; 3] = [0.9, 1.1, 1.25];
const RESIZE_FACTOR: f64 = 1.5;
const RESIZE_ATTEMPTS: i32 = 3;

pub fn char_matrix(sys: &NeutralSystem, lambda: C64) -> CMat {
    let id = CMat::identity(sys.n, sys.n);
    (id - &sys.a_minus1 * (-lambda).exp()) * lambda
        - kernel_laplace(&sys.a2, lambda) * lambda
        - kernel_laplace(&sys.a3, lambda)
}

/// `(Δ(λ), Δ′(λ))`.
pub fn char_matrix_with_derivative(sys: &NeutralSystem, lambda: C64) -> (CMat, CMat) {
    let n = sys.n;
    let id = CMat::identity(n, n);
    let ea = &sys.a_minus1 * (-lambda).exp();
    let l2 = kernel_laplace(&sys.a2, lambda);
    let l3 = kernel_laplace(&sys.a3, lambda);
    let d = (&id - &ea) * lambda - &l2 * lambda - &l3;
    let dd = &id - &ea + &ea * lambda - l2
        - kernel_laplace_deriv(&sys.a2, lambda) * lambda
        - kernel_laplace_deriv(&sys.a3, lambda);
    (d, dd)
}

pub fn det_char(sys: &NeutralSystem, lambda: C64) -> C64 {
    linalg::det(&char_matrix(sys, lambda))
}

/// `det Δ(λ)` and, when `Δ(λ)` is nonsingular, `(det Δ)′/det Δ = tr(Δ⁻¹Δ′)`.
pub fn log_derivative(sys: &NeutralSystem, lambda: C64) -> (C64, Option<C64>) {
    let (d, dd) = char_matrix_with_derivative(sys, lambda);
    let lu = d.lu();
    let det = lu.determinant();
    if det == C64::new(0.0, 0.0) || !det.is_finite() {
        return (det, None);
    }
    let g = lu.solve(&dd).map(|x| x.trace());
    (det, g)
}

/// A disc `L_m^{(k)}`. `m` is the 1-based group index; the disc around the
/// center `0` has `m = 0` and `k = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscSpec {
    pub m: usize,
    pub k: i64,
    pub center: C64,
    pub radius: f64,
}

impl DiscSpec {
    pub fn with_radius(&self, radius: f64) -> Self {
        Self { radius, ..*self }
    }

    pub fn contains(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius
    }
}

/// Principal argument in `(−π, π]`.
pub fn principal_arg(z: C64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// `ln|μ| + i(arg μ + 2kπ)`.
pub fn asymptotic_center(mu: C64, k: i64) -> C64 {
    c64(mu.norm().ln(), principal_arg(mu) + 2.0 * PI * k as f64)
}

/// Distance from `z` to the nearest center of the family generated by `mu`,
/// optionally excluding frequency `skip`.
fn family_distance(z: C64, mu: C64, skip: Option<i64>) -> f64 {
    let c0 = asymptotic_center(mu, 0);
    let dx = z.re - c0.re;
    let kk = ((z.im - c0.im) / (2.0 * PI)).round() as i64;
    (kk - 2..=kk + 2)
        .filter(|&k| Some(k) != skip)
        .map(|k| {
            let dy = z.im - c0.im - 2.0 * PI * k as f64;
            (dx * dx + dy * dy).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

fn zero_is_center(ms: &ModulusSpectrum) -> bool {
    ms.groups.iter().any(|g| asymptotic_center(g.mu, 0).norm() < 1e-12)
}

/// One disc per group and frequency, radius `min(1, half the distance to the
/// nearest other center)` where the centers include `0`.
pub fn approx_spectrum(ms: &ModulusSpectrum, k_range: std::ops::RangeInclusive<i64>) -> Vec<DiscSpec> {
    let zero_center = !zero_is_center(ms);
    let mut out = Vec::new();
    for (mi, g) in ms.groups.iter().enumerate() {
        for k in k_range.clone() {
            let center = asymptotic_center(g.mu, k);
            let mut dist = f64::INFINITY;
            for (mj, other) in ms.groups.iter().enumerate() {
                let skip = if mi == mj { Some(k) } else { None };
                dist = dist.min(family_distance(center, other.mu, skip));
            }
            if zero_center {
                dist = dist.min(center.norm());
            }
            out.push(DiscSpec {
                m: mi + 1,
                k,
                center,
                radius: (0.5 * dist).min(1.0),
            });
        }
    }
    out
}

/// The disc around `0`, unless `0` is itself an asymptotic center.
pub fn zero_disc(ms: &ModulusSpectrum) -> Option<DiscSpec> {
    if zero_is_center(ms) {
        return None;
    }
    let zero = c64(0.0, 0.0);
    let dist = ms
        .groups
        .iter()
        .map(|g| family_distance(zero, g.mu, None))
        .fold(f64::INFINITY, f64::min);
    Some(DiscSpec {
        m: 0,
        k: 0,
        center: zero,
        radius: (0.5 * dist).min(1.0),
    })
}

/// A closed contour parametrized over `[0, 1]`.
trait Contour: Sync {
    fn point(&self, t: f64) -> C64;
    fn base_points(&self) -> usize;
    fn center(&self) -> C64;
    fn size(&self) -> f64;
}

impl Contour for DiscSpec {
    fn point(&self, t: f64) -> C64 {
        self.center + C64::from_polar(self.radius, 2.0 * PI * t)
    }
    fn base_points(&self) -> usize {
        BASE_POINTS
    }
    fn center(&self) -> C64 {
        self.center
    }
    fn size(&self) -> f64 {
        self.radius
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`, traversed counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn width(&self) -> f64 {
        self.x1 - self.x0
    }
    fn height(&self) -> f64 {
        self.y1 - self.y0
    }
    fn contains(&self, z: C64) -> bool {
        z.re > self.x0 && z.re < self.x1 && z.im > self.y0 && z.im < self.y1
    }
}

impl Contour for Rect {
    fn point(&self, t: f64) -> C64 {
        let (w, h) = (self.width(), self.height());
        let mut s = t * 2.0 * (w + h);
        if s < w {
            return c64(self.x0 + s, self.y0);
        }
        s -= w;
        if s < h {
            return c64(self.x1, self.y0 + s);
        }
        s -= h;
        if s < w {
            return c64(self.x1 - s, self.y1);
        }
        s -= w;
        c64(self.x0, self.y1 - s.min(h))
    }
    fn base_points(&self) -> usize {
        BASE_POINTS.max((8.0 * (self.width() + self.height())).ceil() as usize)
    }
    fn center(&self) -> C64 {
        c64(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
    fn size(&self) -> f64 {
        0.5 * self.width().hypot(self.height())
    }
}

struct Tracker<'a> {
    sys: &'a NeutralSystem,
    min_abs: f64,
    max_abs: f64,
}

impl Tracker<'_> {
    fn eval(&mut self, z: C64) -> C64 {
        let d = det_char(self.sys, z);
        let a = d.norm();
        self.min_abs = self.min_abs.min(a);
        self.max_abs = self.max_abs.max(a);
        d
    }

    /// Phase increment of `det Δ` along the arc `[ta, tb]`, bisecting until every
    /// sub-step turns by less than `π/4`.
    fn arc(&mut self, c: &dyn Contour, ta: f64, da: C64, tb: f64, db: C64, depth: u32) -> Option<f64> {
        if da == C64::new(0.0, 0.0) || db == C64::new(0.0, 0.0) {
            return None;
        }
        let step = (db / da).arg();
        if step.abs() < PI / 4.0 {
            return Some(step);
        }
        if depth == 0 {
            return None;
        }
        let tm = 0.5 * (ta + tb);
        let dm = self.eval(c.point(tm));
        Some(self.arc(c, ta, da, tm, dm, depth - 1)? + self.arc(c, tm, dm, tb, db, depth - 1)?)
    }
}

fn winding_once(sys: &NeutralSystem, c: &dyn Contour, points: usize) -> Result<(i64, f64, f64)> {
    let mut tr = Tracker {
        sys,
        min_abs: f64::INFINITY,
        max_abs: 0.0,
    };
    let vals: Vec<C64> = (0..points).map(|j| tr.eval(c.point(j as f64 / points as f64))).collect();
    let mut total = 0.0;
    let mut ok = true;
    for j in 0..points {
        let (ta, tb) = (j as f64 / points as f64, (j + 1) as f64 / points as f64);
        match tr.arc(c, ta, vals[j], tb, vals[(j + 1) % points], 40) {
            Some(s) => total += s,
            None => {
                ok = false;
                break;
            }
        }
    }
    let ratio = tr.min_abs / tr.max_abs;
    if !ok || !(ratio >= CONTOUR_RATIO) {
        return Err(Error::ContourTooClose {
            center: c.center(),
            radius: c.size(),
            ratio: if ratio.is_finite() { ratio } else { 0.0 },
        });
    }
    Ok(((total / (2.0 * PI)).round() as i64, tr.min_abs, tr.max_abs))
}

/// Winding number of `det Δ` along the contour, doubling the base resolution
/// until the integer is unchanged over two consecutive refinements.
fn winding(sys: &NeutralSystem, c: &dyn Contour) -> Result<i64> {
    let mut points = c.base_points();
    let mut prev = winding_once(sys, c, points)?.0;
    let mut stable = 0;
    while stable < 2 {
        points *= 2;
        if points > MAX_POINTS.max(8 * c.base_points()) {
            return Err(Error::NonConvergence(format!(
                "winding number around {} (size {}) did not stabilize",
                c.center(),
                c.size()
            )));
        }
        let w = winding_once(sys, c, points)?.0;
        if w == prev {
            stable += 1;
        } else {
            stable = 0;
            prev = w;
        }
    }
    Ok(prev)
}

/// Number of zeros of `det Δ` inside the disc, with multiplicity.
pub fn count_roots(sys: &NeutralSystem, disc: &DiscSpec) -> Result<usize> {
    if !(disc.radius > 0.0) {
        return Err(Error::InvalidArgument(format!("disc radius {} is not positive", disc.radius)));
    }
    let w = winding(sys, disc)?;
    usize::try_from(w).map_err(|_| {
        Error::NonConvergence(format!("negative winding number {w} around {}", disc.center))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub lambda: C64,
    pub multiplicity: usize,
}

/// `s_p = (1/2πi)∮ u^p (det Δ)′/det Δ dλ` for `p = 0..=count` with
/// `u = (λ − c)/r`, plus `max|det Δ|` on the circle.
fn moments(sys: &NeutralSystem, disc: &DiscSpec, count: usize) -> Result<(Vec<C64>, f64)> {
    let eval = |points: usize| -> Result<(Vec<C64>, f64)> {
        let samples: Vec<(C64, C64, f64)> = (0..points)
            .map(|j| {
                let u = C64::from_polar(1.0, 2.0 * PI * j as f64 / points as f64);
                let (det, g) = log_derivative(sys, disc.center + u * disc.radius);
                g.map(|g| (u, g, det.norm())).ok_or(Error::ContourTooClose {
                    center: disc.center,
                    radius: disc.radius,
                    ratio: 0.0,
                })
            })
            .collect::<Result<_>>()?;
        let mut s = vec![C64::new(0.0, 0.0); count + 1];
        let mut max_abs: f64 = 0.0;
        for (u, g, a) in samples {
            max_abs = max_abs.max(a);
            let mut up = u * g * disc.radius;
            for sp in s.iter_mut() {
                *sp += up;
                up *= u;
            }
        }
        for sp in s.iter_mut() {
            *sp /= points as f64;
        }
        Ok((s, max_abs))
    };
    let mut points = MOMENT_START;
    let mut prev = eval(points)?;
    loop {
        points *= 2;
        let cur = eval(points)?;
        let change = cur
            .0
            .iter()
            .zip(&prev.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if change < 1e-12 {
            return Ok(cur);
        }
        if points >= MOMENT_MAX {
            return Err(Error::NonConvergence(format!(
                "contour moments around {} did not converge (last change {change:.2e})",
                disc.center
            )));
        }
        prev = cur;
    }
}

/// Newton iteration `λ ← λ − 1/tr(Δ⁻¹Δ′)` from `start`, returning the iterate
/// with the smallest residual.
fn polish(sys: &NeutralSystem, start: C64, target: f64) -> Result<C64> {
    let mut lam = start;
    let mut best = (f64::INFINITY, start);
    for _ in 0..50 {
        let (det, g) = log_derivative(sys, lam);
        let res = det.norm();
        if res < best.0 {
            best = (res, lam);
        }
        let Some(g) = g else { break };
        let step = -g.inv();
        if !step.is_finite() {
            break;
        }
        lam += step;
        if step.norm() <= 1e-15 * lam.norm().max(1.0) {
            let res = det_char(sys, lam).norm();
            if res < best.0 {
                best = (res, lam);
            }
            break;
        }
    }
    if best.0 <= target {
        Ok(best.1)
    } else {
        Err(Error::NonConvergence(format!(
            "Newton polishing from {start} stalled at residual {:.3e} (target {target:.3e})",
            best.0
        )))
    }
}

/// Elementary symmetric functions from power sums (Newton's identities).
fn elementary_from_power_sums(s: &[C64]) -> Vec<C64> {
    let kmax = s.len() - 1;
    let mut e = vec![C64::new(1.0, 0.0)];
    for k in 1..=kmax {
        let mut acc = C64::new(0.0, 0.0);
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += e[k - i] * s[i] * sign;
        }
        e.push(acc / k as f64);
    }
    e
}

/// Zeros inside the disc with multiplicities summing to `count`.
pub fn refine_roots(sys: &NeutralSystem, disc: &DiscSpec, count: usize) -> Result<Vec<Root>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let (s, max_abs) = moments(sys, disc, count)?;
    if (s[0] - count as f64).norm() > 1e-3 {
        return Err(Error::NonConvergence(format!(
            "zeroth moment {} disagrees with count {count} around {}",
            s[0], disc.center
        )));
    }
    let e = elementary_from_power_sums(&s);
    // u^K − e1 u^{K−1} + e2 u^{K−2} − …
    let coeffs: Vec<C64> = (0..count)
        .map(|i| {
            let j = count - i;
            if j.is_multiple_of(2) {
                e[j]
            } else {
                -e[j]
            }
        })
        .collect();
    let us = linalg::monic_roots(&coeffs)
        .ok_or_else(|| Error::NonConvergence("companion eigenvalues did not converge".into()))?;

    // single-linkage clusters in u units
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for u in us {
        let hits: Vec<usize> = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.iter().any(|v| (v - u).norm() < ROOT_CLUSTER_TOL))
            .map(|(i, _)| i)
            .collect();
        let mut merged = vec![u];
        for &i in hits.iter().rev() {
            merged.extend(clusters.remove(i));
        }
        clusters.push(merged);
    }

    let target = ROOT_RESIDUAL * max_abs;
    let mut roots = Vec::new();
    for members in clusters {
        let lams: Vec<C64> = members.iter().map(|u| disc.center + u * disc.radius).collect();
        if lams.len() == 1 {
            let p = polish(sys, lams[0], target)?;
            let p = if disc.contains(p) { p } else { lams[0] };
            roots.push(Root {
                lambda: p,
                multiplicity: 1,
            });
            continue;
        }
        let mean = lams.iter().sum::<C64>() / lams.len() as f64;
        if det_char(sys, mean).norm() <= target {
            roots.push(Root {
                lambda: mean,
                multiplicity: lams.len(),
            });
        } else {
            for l in lams {
                roots.push(Root {
                    lambda: polish(sys, l, target)?,
                    multiplicity: 1,
                });
            }
        }
    }
    roots.sort_by(|a, b| {
        a.lambda
            .im
            .partial_cmp(&b.lambda.im)
            .unwrap()
            .then(a.lambda.re.partial_cmp(&b.lambda.re).unwrap())
    });
    Ok(roots)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscRecord {
    pub disc: DiscSpec,
    pub count: usize,
    pub roots: Vec<Root>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub k_max: i64,
    /// Smallest `N` such that every disc with `|k| > N` holds `pₘ` zeros.
    pub threshold: i64,
    /// Asymptotic discs ordered by `(m, k)`.
    pub discs: Vec<DiscRecord>,
    /// The disc around `0`, when `0` is not an asymptotic center.
    pub zero_disc: Option<DiscRecord>,
    /// Zeros in the scanned window that lie outside the final discs.
    pub leftover: Vec<C64>,
}

impl SpectrumReport {
    /// Every located zero, with multiplicity.
    pub fn all_roots(&self) -> impl Iterator<Item = Root> + '_ {
        self.discs
            .iter()
            .chain(self.zero_disc.iter())
            .flat_map(|d| d.roots.iter().copied())
            .chain(self.leftover.iter().map(|&lambda| Root {
                lambda,
                multiplicity: 1,
            }))
    }
}

fn count_with_retry(sys: &NeutralSystem, disc: DiscSpec) -> Result<(DiscSpec, usize)> {
    match count_roots(sys, &disc) {
        Ok(c) => Ok((disc, c)),
        Err(first @ Error::ContourTooClose { .. }) => {
            let mut last = first;
            for f in RADIUS_RETRIES {
                let d = disc.with_radius(disc.radius * f);
                match count_roots(sys, &d) {
                    Ok(c) => return Ok((d, c)),
                    Err(e @ Error::ContourTooClose { .. }) => last = e,
                    Err(e) => return Err(e),
                }
            }
            Err(last)
        }
        Err(e) => Err(e),
    }
}

fn examine(sys: &NeutralSystem, disc: DiscSpec, expected: Option<usize>) -> Result<(DiscRecord, Vec<C64>)> {
    let (d, count) = count_with_retry(sys, disc)?;
    let Some(p) = expected.filter(|&p| p != count) else {
        let roots = refine_roots(sys, &d, count)?;
        return Ok((DiscRecord { disc: d, count, roots }, Vec::new()));
    };
    let grow = count < p;
    let mut extra = Vec::new();
    for i in 1..=RESIZE_ATTEMPTS {
        let f = if grow {
            RESIZE_FACTOR.powi(i)
        } else {
            RESIZE_FACTOR.powi(-i)
        };
        let Ok((d2, c2)) = count_with_retry(sys, d.with_radius(d.radius * f)) else {
            continue;
        };
        if c2 == p {
            let roots = refine_roots(sys, &d2, c2)?;
            return Ok((DiscRecord { disc: d2, count: c2, roots }, Vec::new()));
        }
        if i == RESIZE_ATTEMPTS {
            if let Ok(roots) = refine_roots(sys, &d2, c2) {
                extra = roots
                    .iter()
                    .filter(|r| !d.contains(r.lambda))
                    .flat_map(|r| std::iter::repeat_n(r.lambda, r.multiplicity))
                    .collect();
            }
        }
    }
    let roots = refine_roots(sys, &d, count)?;
    Ok((DiscRecord { disc: d, count, roots }, extra))
}

/// Locates the zeros in discs `|k| ≤ k_max` for every eigenvalue group of `A₋₁`
/// and searches the surrounding window for zeros outside all discs.
pub fn scan_spectrum(sys: &NeutralSystem, k_max: i64) -> Result<SpectrumReport> {
    let ms = ModulusSpectrum::for_system(sys, DEFAULT_CLUSTER_TOL)?;
    scan_spectrum_with(sys, &ms, k_max)
}

pub fn scan_spectrum_with(sys: &NeutralSystem, ms: &ModulusSpectrum, k_max: i64) -> Result<SpectrumReport> {
    if k_max < 1 {
        return Err(Error::InvalidArgument(format!("k_max must be at least 1, got {k_max}")));
    }
    let discs = approx_spectrum(ms, -k_max..=k_max);
    let results: Vec<(DiscRecord, Vec<C64>)> = discs
        .par_iter()
        .map(|d| examine(sys, *d, Some(ms.groups[d.m - 1].multiplicity)))
        .collect::<Result<_>>()?;
    let zero = match zero_disc(ms) {
        Some(d) => Some(examine(sys, d, None)?.0),
        None => None,
    };

    let mut threshold = 0;
    let mut records = Vec::with_capacity(results.len());
    let mut leftover: Vec<C64> = Vec::new();
    for (rec, extra) in results {
        if rec.count != ms.groups[rec.disc.m - 1].multiplicity {
            threshold = threshold.max(rec.disc.k.abs());
        }
        for z in extra {
            push_unique(&mut leftover, z);
        }
        records.push(rec);
    }

    let mut report = SpectrumReport {
        k_max,
        threshold,
        discs: records,
        zero_disc: zero,
        leftover,
    };
    for z in window_search(sys, ms, &report)? {
        push_unique(&mut report.leftover, z);
    }
    report.leftover.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap().then(a.re.partial_cmp(&b.re).unwrap()));
    Ok(report)
}

fn push_unique(list: &mut Vec<C64>, z: C64) {
    if !list.iter().any(|w| (w - z).norm() < 1e-8) {
        list.push(z);
    }
}

fn kernel_mass(kern: &PiecewisePolyKernel) -> f64 {
    kern.pieces
        .iter()
        .enumerate()
        .map(|(j, piece)| {
            let w = kern.breakpoints[j + 1] - kern.breakpoints[j];
            piece.iter().map(linalg::norm2).sum::<f64>() * w
        })
        .sum()
}

/// Edge ordinate congruent (mod 2π) to the midpoint of the widest gap between
/// the center arguments, so horizontal edges stay clear of every center.
fn gap_phase(ms: &ModulusSpectrum) -> f64 {
    let mut phis: Vec<f64> = ms
        .groups
        .iter()
        .map(|g| principal_arg(g.mu).rem_euclid(2.0 * PI))
        .collect();
    phis.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = (phis[0] + 2.0 * PI - phis[phis.len() - 1], phis[phis.len() - 1]);
    for w in phis.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], w[0]);
        }
    }
    best.1 + 0.5 * best.0
}

/// Zeros inside the scanned window that no disc accounts for.
///
/// The window spans all scanned centers; its vertical edges come from crude
/// bounds on where zeros can lie. Regions whose winding number exceeds the
/// number of known zeros are bisected until small, then resolved with
/// [`refine_roots`]. Zeros belonging to discs beyond `k_max` are dropped.
fn window_search(sys: &NeutralSystem, ms: &ModulusSpectrum, report: &SpectrumReport) -> Result<Vec<C64>> {
    let known: Vec<Root> = report.all_roots().collect();
    let known_inside = |r: &Rect| -> i64 {
        known
            .iter()
            .filter(|k| r.contains(k.lambda))
            .map(|k| k.multiplicity as i64)
            .sum()
    };

    let s2 = kernel_mass(&sys.a2);
    let s3 = kernel_mass(&sys.a3);
    let sv = linalg::singular_values(&sys.a_minus1);
    let (a_norm, a_min) = (sv[0], sv[sv.len() - 1]);
    let (lo_mod, hi_mod) = ms.groups.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, g| {
        let x = g.mu.norm().ln();
        (acc.0.min(x), acc.1.max(x))
    });
    let x1 = (hi_mod + 1.5).max((4.0 * a_norm).ln()).max(2.0 * (s2 + s3) + 1.0) + 0.5;
    let x0 = (lo_mod - 1.5).min(0.0).min((a_min / 4.0).ln()).min(-2.0 * s3 / a_min) - 0.5;
    let psi = gap_phase(ms);
    let top = ms
        .groups
        .iter()
        .map(|g| principal_arg(g.mu) + 2.0 * PI * report.k_max as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let bottom = ms
        .groups
        .iter()
        .map(|g| principal_arg(g.mu) - 2.0 * PI * report.k_max as f64)
        .fold(f64::INFINITY, f64::min);
    let y1 = psi + 2.0 * PI * ((top - psi) / (2.0 * PI)).ceil();
    let y0 = psi + 2.0 * PI * ((bottom - psi) / (2.0 * PI)).floor();

    let mut outer = Rect { x0, x1, y0, y1 };
    let mut w = None;
    for grow in [0.0, 0.37, 0.71] {
        let r = Rect {
            x0: x0 - grow,
            x1: x1 + grow,
            ..outer
        };
        match winding(sys, &r) {
            Ok(v) => {
                outer = r;
                w = Some(v);
                break;
            }
            Err(Error::ContourTooClose { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let Some(w) = w else {
        return Err(Error::ContourTooClose {
            center: outer.center(),
            radius: outer.size(),
            ratio: 0.0,
        });
    };

    let mut found = Vec::new();
    let mut stack = vec![(outer, w - known_inside(&outer))];
    while let Some((r, excess)) = stack.pop() {
        if excess <= 0 {
            continue;
        }
        if r.width().max(r.height()) <= 1.0 {
            let disc = DiscSpec {
                m: 0,
                k: 0,
                center: r.center(),
                radius: r.size() * 1.02,
            };
            let (d, c) = count_with_retry(sys, disc)?;
            for root in refine_roots(sys, &d, c)? {
                let new = r.contains(root.lambda)
                    && !known.iter().any(|k| (k.lambda - root.lambda).norm() < 1e-6);
                if new && !beyond_window(ms, report.k_max, root.lambda) {
                    found.push(root.lambda);
                }
            }
            continue;
        }
        let mut split = None;
        for frac in [0.5, 0.47, 0.53, 0.44, 0.56] {
            let (a, b) = if r.width() >= r.height() {
                let xm = r.x0 + frac * r.width();
                (Rect { x1: xm, ..r }, Rect { x0: xm, ..r })
            } else {
                let ym = r.y0 + frac * r.height();
                (Rect { y1: ym, ..r }, Rect { y0: ym, ..r })
            };
            match (winding(sys, &a), winding(sys, &b)) {
                (Ok(wa), Ok(wb)) => {
                    split = Some([(a, wa), (b, wb)]);
                    break;
                }
                (Err(Error::ContourTooClose { .. }), _) | (_, Err(Error::ContourTooClose { .. })) => continue,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        let Some(parts) = split else {
            return Err(Error::ContourTooClose {
                center: r.center(),
                radius: r.size(),
                ratio: 0.0,
            });
        };
        for (sub, ws) in parts {
            stack.push((sub, ws - known_inside(&sub)));
        }
    }
    Ok(found)
}

/// `true` when `z` lies within unit distance of a center with `|k| > k_max`.
fn beyond_window(ms: &ModulusSpectrum, k_max: i64, z: C64) -> bool {
    ms.groups.iter().any(|g| {
        let c0 = asymptotic_center(g.mu, 0);
        let k = ((z.im - c0.im) / (2.0 * PI)).round() as i64;
        k.abs() > k_max && (z - asymptotic_center(g.mu, k)).norm() < 1.0
    })
}
