//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p neutral-growth --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use neutral_growth::appendix::{run_appendix, AppendixConfig};
use neutral_growth::characteristic::{scan_spectrum_with, SpectrumReport};
use neutral_growth::growth::{certify, empirical_exponent, estimate_omega, CertifyConfig};
use neutral_growth::io;
use neutral_growth::linalg::{self, c64, CMat, CVec, C64};
use neutral_growth::modulus::{ModulusSpectrum, DEFAULT_CLUSTER_TOL};
use neutral_growth::solver::{norm_samples, simulate};
use neutral_growth::state::{eigenfunction, m2_norm, Generator};
use neutral_growth::system::{theta, M2State, NeutralSystem, PiecewisePolyKernel};

struct Outcome {
    pass: bool,
    detail: String,
    /// Serialized outputs compared byte-for-byte by the determinism criterion.
    artifacts: Vec<String>,
}

fn real(rows: usize, v: &[f64]) -> CMat {
    CMat::from_fn(rows, rows, |i, j| c64(v[i * rows + j], 0.0))
}

fn jordan2() -> CMat {
    real(2, &[2.0, 1.0, 0.0, 2.0])
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    CMat::from_fn(n, n, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale)
}

fn with_a3(a: CMat, a3: CMat) -> NeutralSystem {
    let n = a.nrows();
    NeutralSystem::new(a, PiecewisePolyKernel::zero(n), PiecewisePolyKernel::constant(a3)).unwrap()
}

/// Generic constant of spectral norm `norm`.
fn generic_constant(n: usize, norm: f64, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = random_matrix(&mut rng, n, 1.0);
    let s = linalg::norm2(&c);
    c * C64::from(norm / s)
}

/// Random 2×2 system with a piecewise-linear `A₃` whose integral is well conditioned
/// and, when `smooth`, single-piece kernels.
fn random_system(seed: u64, smooth: bool) -> NeutralSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2;
    let a = CMat::identity(n, n) * c64(1.5, 0.0) + random_matrix(&mut rng, n, 0.4);
    let a2 = PiecewisePolyKernel::polynomial(vec![
        random_matrix(&mut rng, n, 0.2),
        random_matrix(&mut rng, n, 0.2),
        random_matrix(&mut rng, n, 0.1),
    ]);
    let base = CMat::identity(n, n) * c64(0.8, 0.0);
    let a3 = if smooth {
        PiecewisePolyKernel::polynomial(vec![&base + random_matrix(&mut rng, n, 0.3), random_matrix(&mut rng, n, 0.3)])
    } else {
        PiecewisePolyKernel {
            breakpoints: vec![-1.0, -0.5, 0.0],
            pieces: vec![
                vec![&base + random_matrix(&mut rng, n, 0.3), random_matrix(&mut rng, n, 0.3)],
                vec![&base + random_matrix(&mut rng, n, 0.3)],
            ],
        }
    };
    NeutralSystem::new(a, a2, a3).unwrap()
}

/// Arbitrary element of M₂ with trigonometric history, frequencies in [2, 4].
fn random_state(n: usize, m: usize, rng: &mut ChaCha8Rng) -> M2State {
    let y = CVec::from_fn(n, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let modes: Vec<(C64, f64, f64)> = (0..3 * n)
        .map(|_| {
            (
                c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                rng.random_range(2.0..4.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let z = CMat::from_fn(n, m + 1, |r, i| {
        let t = theta(i, m);
        modes[3 * r..3 * r + 3]
            .iter()
            .map(|(c, w, ph)| c * (w * t + ph).sin())
            .sum()
    });
    M2State { y, z }
}

fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn scan(sys: &NeutralSystem, k_max: i64) -> (ModulusSpectrum, SpectrumReport) {
    let ms = ModulusSpectrum::for_system(sys, DEFAULT_CLUSTER_TOL).unwrap();
    let report = scan_spectrum_with(sys, &ms, k_max).unwrap();
    (ms, report)
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count_ok = true;
    let mut artifacts = Vec::new();
    for a in [real(1, &[2.0]), real(2, &[2.0, 0.0, 0.0, 3.0]), jordan2()] {
        let sys = NeutralSystem::pure_neutral(a).unwrap();
        let (ms, report) = scan(&sys, 20);
        for rec in &report.discs {
            let p = ms.groups[rec.disc.m - 1].multiplicity;
            let total: usize = rec.roots.iter().map(|r| r.multiplicity).sum();
            count_ok &= rec.count == p && total == p;
            for r in &rec.roots {
                worst = worst.max((r.lambda - rec.disc.center).norm());
            }
        }
        artifacts.push(io::spectrum_to_csv(&report));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst <= 1e-8 && count_ok && secs < 10.0,
        detail: format!("max |λ - λ̃| = {worst:.2e} (tol 1e-8), counts match p_m: {count_ok}, {secs:.1}s (limit 10s)"),
        artifacts,
    }
}

fn criterion2() -> Outcome {
    let start = Instant::now();
    let systems = [
        with_a3(real(1, &[2.0]), CMat::from_element(1, 1, c64(0.06, 0.08))),
        with_a3(jordan2(), generic_constant(2, 0.1, 11)),
    ];
    let mut worst_n = 0;
    let mut ok = true;
    let mut artifacts = Vec::new();
    for sys in &systems {
        let (ms, report) = scan(sys, 40);
        for rec in report.discs.iter().filter(|r| r.disc.k.abs() > report.threshold) {
            let p = ms.groups[rec.disc.m - 1].multiplicity;
            let total: usize = rec.roots.iter().map(|r| r.multiplicity).sum();
            ok &= total == p && rec.count == p;
        }
        worst_n = worst_n.max(report.threshold);
        artifacts.push(io::spectrum_to_csv(&report));
        artifacts.push(io::spectrum_summary_json(&report));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: ok && worst_n <= 5 && secs < 60.0,
        detail: format!("N = {worst_n} (limit 5), multiplicities conserved beyond N: {ok}, {secs:.1}s (limit 60s)"),
        artifacts,
    }
}

fn criterion3() -> Outcome {
    let ms_grid = [100usize, 200, 400, 800];
    let mut worst = vec![0.0f64; ms_grid.len()];
    for seed in 0..3u64 {
        let sys = random_system(100 + seed, false);
        for (gi, &m) in ms_grid.iter().enumerate() {
            let gen = Generator::new(&sys, m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            for _ in 0..20 {
                let b = random_state(sys.n, m, &mut rng);
                let x = gen.solve(&b).unwrap();
                let back = gen.apply(&x).unwrap();
                worst[gi] = worst[gi].max(m2_norm(&back.sub(&b)) / m2_norm(&b));
            }
        }
    }
    let ms_f: Vec<f64> = ms_grid.iter().map(|&m| m as f64).collect();
    let slope = -log_slope(&ms_f, &worst);
    let at400 = worst[2];
    let artifacts = vec![worst.iter().map(|e| io::fmt_f64(*e)).collect::<Vec<_>>().join(",")];
    Outcome {
        pass: at400 <= 1e-6 && slope >= 1.9,
        detail: format!(
            "relative error at m=400 {at400:.2e} (tol 1e-6), errors {:?}, decay slope {slope:.2} (min 1.9)",
            worst.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>()
        ),
        artifacts,
    }
}

fn criterion4() -> Outcome {
    let systems = vec![
        NeutralSystem::pure_neutral(real(1, &[2.0])).unwrap(),
        NeutralSystem::pure_neutral(real(2, &[2.0, 0.0, 0.0, 3.0])).unwrap(),
        with_a3(real(1, &[2.0]), CMat::from_element(1, 1, c64(0.06, 0.08))),
        with_a3(jordan2(), generic_constant(2, 0.1, 11)),
        random_system(100, false),
        random_system(101, false),
    ];
    let m = 500;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut lines = Vec::new();
    for sys in &systems {
        let (_, report) = scan(sys, 10);
        let gen = Generator::new(sys, m).unwrap();
        for rec in &report.discs {
            for r in rec.roots.iter().filter(|r| r.multiplicity == 1) {
                let ef = eigenfunction(sys, r.lambda, m).unwrap();
                let ax = gen.apply(&ef.state).unwrap();
                let res = m2_norm(&ax.sub(&ef.state.scale(r.lambda))) / m2_norm(&ef.state);
                worst = worst.max(res);
                checked += 1;
                lines.push(format!("{},{},{}", io::fmt_f64(r.lambda.re), io::fmt_f64(r.lambda.im), io::fmt_f64(res)));
            }
        }
    }
    Outcome {
        pass: worst <= 1e-5 && checked > 0,
        detail: format!("max relative residual {worst:.2e} over {checked} simple roots (tol 1e-5)"),
        artifacts: vec![lines.join("\n")],
    }
}

fn criterion5() -> Outcome {
    let horizon = 5.0;
    let coarse = [50usize, 100, 200];
    let mut orders = Vec::new();
    let mut artifacts = Vec::new();
    for seed in 0..3u64 {
        let sys = random_system(300 + seed, true);
        let mut errs = Vec::new();
        for &m in &coarse {
            let fine = 16 * m;
            let tc = simulate(&sys, &M2State::generic(&sys.a_minus1, m, seed), horizon, m).unwrap();
            let tf = simulate(&sys, &M2State::generic(&sys.a_minus1, fine, seed), horizon, fine).unwrap();
            let mut e: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for g in 0..tc.z.len() / sys.n {
                let zc = tc.z_node(g);
                let zf = tf.z_node(16 * g);
                e = e.max((&zc - &zf).camax());
                scale = scale.max(zf.camax());
            }
            errs.push(e / scale);
        }
        let ms_f: Vec<f64> = coarse.iter().map(|&m| m as f64).collect();
        orders.push(-log_slope(&ms_f, &errs));
        artifacts.push(errs.iter().map(|e| io::fmt_f64(*e)).collect::<Vec<_>>().join(","));
    }
    let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
    Outcome {
        pass: min >= 1.9,
        detail: format!(
            "self-convergence orders {:?} (min 1.9)",
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
        ),
        artifacts,
    }
}

fn criterion6() -> Outcome {
    let start = Instant::now();
    let sys = NeutralSystem::pure_neutral(jordan2()).unwrap();
    let (ms, report) = scan(&sys, 20);
    let omega = estimate_omega(&report, &ms);
    let m = 100;
    let traj = simulate(&sys, &M2State::generic(&sys.a_minus1, m, 6), 25.0, m).unwrap();
    let samples = norm_samples(&traj, 5.0, 25.0, 10).unwrap();
    let fit = empirical_exponent(&samples, omega, (5.0, 25.0)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let omega_ok = (omega - 2f64.ln()).abs() < 1e-9;
    Outcome {
        pass: (0.5..=1.3).contains(&fit.beta) && omega_ok && secs < 60.0,
        detail: format!(
            "β = {:.4} (range [0.5, 1.3]), ω = {omega:.10} (ln 2: {omega_ok}), {secs:.1}s (limit 60s)",
            fit.beta
        ),
        artifacts: vec![io::trajectory_to_csv(&traj), format!("{},{}", io::fmt_f64(omega), io::fmt_f64(fit.beta))],
    }
}

fn criterion7() -> Outcome {
    let start = Instant::now();
    let a3 = CMat::from_row_slice(2, 2, &[c64(0.05, 0.0), c64(0.015, 0.01), c64(0.02, -0.005), c64(0.04, 0.0)]);
    let sys = with_a3(jordan2(), a3);
    let x0 = M2State::generic(&sys.a_minus1, 100, 7);
    let cfg = |n_smooth| CertifyConfig {
        n_smooth,
        k_max: 40,
        horizon: 30.0,
        m: 100,
        k_fit_min: 8,
        k_fit_max: Some(40),
        ..CertifyConfig::default()
    };
    let raw = certify(&sys, &x0, &cfg(0)).unwrap();
    let smoothed = certify(&sys, &x0, &cfg(1));
    let secs = start.elapsed().as_secs_f64();
    let mut artifacts = vec![io::certificate_to_json(&raw)];
    let (s, r2) = (raw.s_fit.unwrap_or(f64::NAN), raw.r2.unwrap_or(f64::NAN));
    let s_ok = (0.8..=1.2).contains(&s) && r2 >= 0.95;
    let detail_fit = format!("s = {s:.4} (range [0.8, 1.2]), R² = {r2:.4} (min 0.95), ω = {:.6}", raw.omega);
    match smoothed {
        Ok(c) => {
            artifacts.push(io::certificate_to_json(&c));
            let bound = raw.p as f64 - 1.0 - 1.0 / s + 0.3;
            let bound_ok = s > 0.0 && c.beta_emp <= bound;
            let gain = raw.beta_emp - c.beta_emp;
            Outcome {
                pass: s_ok && bound_ok && gain >= 0.4 && secs < 180.0,
                detail: format!(
                    "{detail_fit}; smoothed β = {:.4} vs bound {}, unsmoothed β = {:.4}, gain {gain:.4} (min 0.4), {secs:.1}s (limit 180s)",
                    c.beta_emp,
                    if s > 0.0 { format!("{bound:.4}") } else { "undefined (s ≤ 0)".into() },
                    raw.beta_emp
                ),
                artifacts,
            }
        }
        Err(e) => Outcome {
            pass: false,
            detail: format!("{detail_fit}; smoothed certificate failed: {e}"),
            artifacts,
        },
    }
}

fn criterion8() -> Outcome {
    let start = Instant::now();
    let cfg = AppendixConfig {
        dims: (1..=5).collect(),
        trials: 100_000,
        seed: 8,
        ..AppendixConfig::default()
    };
    let report = run_appendix(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let v = report.total_violations();
    let slopes: Vec<f64> = report.summaries.iter().map(|s| s.inverse_slope).collect();
    let slopes_ok = slopes.iter().all(|s| (s + 1.0).abs() <= 0.05);
    let bounded = report.rows.iter().all(|r| {
        r.max_inv_norm_scaled
            .is_none_or(|x| x <= 2.0 * (r.n * r.n) as f64 * r.big_m)
    });
    let ceiling_ok = report.summaries.iter().all(|s| s.m0 <= s.ceiling);
    Outcome {
        pass: v == 0 && slopes_ok && bounded && ceiling_ok && secs < 120.0,
        detail: format!(
            "{v} violations, inverse-norm slopes {:?} (target -1 ± 0.05), ‖B⁻¹‖|λ| ≤ C: {bounded}, M₀ ≤ 2ⁿn!: {ceiling_ok}, {secs:.1}s (limit 120s)",
            slopes.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>()
        ),
        artifacts: vec![io::appendix_to_csv(&report), io::appendix_sweep_csv(&report)],
    }
}

type Criterion = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7, criterion8,
    ];
    let mut all_pass = true;
    let mut first = Vec::new();
    for (i, c) in criteria.iter().enumerate() {
        let o = c();
        println!("criterion {}: {} | {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        all_pass &= o.pass;
        first.push(o.artifacts);
    }
    let start = Instant::now();
    let mismatched: Vec<usize> = criteria
        .iter()
        .enumerate()
        .filter(|(i, c)| c().artifacts != first[*i])
        .map(|(i, _)| i + 1)
        .collect();
    let det_ok = mismatched.is_empty();
    println!(
        "criterion 9: {} | re-run outputs byte-identical, differing criteria: {mismatched:?}, {:.1}s",
        if det_ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    all_pass &= det_ok;
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
