use neutral_growth::characteristic::{asymptotic_center, scan_spectrum};
use neutral_growth::growth::{
    certify, estimate_omega, predicted_exponent, CertifyConfig, Verdict,
};
use neutral_growth::io;
use neutral_growth::linalg::{c64, CMat, C64};
use neutral_growth::modulus::{ModulusSpectrum, DEFAULT_CLUSTER_TOL};
use neutral_growth::solver::simulate;
use neutral_growth::state::{eigenfunction, smooth};
use neutral_growth::system::{M2State, NeutralSystem, PiecewisePolyKernel};
use neutral_growth::Error;
use proptest::prelude::*;

fn scalar(v: f64) -> CMat {
    CMat::from_element(1, 1, c64(v, 0.0))
}

fn jordan() -> CMat {
    CMat::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(2.0, 0.0)])
}

fn with_const_a3(a: CMat, a3: CMat) -> NeutralSystem {
    let n = a.nrows();
    NeutralSystem::new(a, PiecewisePolyKernel::zero(n), PiecewisePolyKernel::constant(a3)).unwrap()
}

#[test]
fn system_file_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sys.json");
    let sys = with_const_a3(jordan(), CMat::identity(2, 2) * c64(0.1, -0.02));
    io::save_system(&sys, &path).unwrap();
    assert_eq!(io::load_system(&path).unwrap(), sys);
}

#[test]
fn load_reports_missing_file_and_bad_json() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(io::load_system(dir.path().join("none.json")), Err(Error::Io { .. })));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"n\": 1,\n \"a_minus1\": [[{\"re\": 2}]]}").unwrap();
    match io::load_system(&bad) {
        Err(Error::Parse(msg)) => assert!(msg.contains("im") && msg.contains("line 2"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn scalar_spectrum_matches_logarithms() {
    let sys = NeutralSystem::pure_neutral(scalar(2.0)).unwrap();
    let report = scan_spectrum(&sys, 5).unwrap();
    assert_eq!(report.discs.len(), 11);
    for rec in &report.discs {
        let expected = asymptotic_center(c64(2.0, 0.0), rec.disc.k);
        assert!((rec.roots[0].lambda - expected).norm() < 1e-10);
    }
    let csv = io::spectrum_to_csv(&report);
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn omega_uses_roots_right_of_the_asymptotic_line() {
    // the real root near 1.27 exceeds ln 2
    let sys = with_const_a3(scalar(2.0), scalar(1.0));
    let ms = ModulusSpectrum::for_system(&sys, DEFAULT_CLUSTER_TOL).unwrap();
    let report = scan_spectrum(&sys, 10).unwrap();
    let omega = estimate_omega(&report, &ms);
    assert!(omega > 1.2 && omega < 1.35, "{omega}");
}

#[test]
fn eigenfunction_grows_at_its_eigenvalue() {
    let sys = with_const_a3(scalar(2.0), scalar(0.3));
    let report = scan_spectrum(&sys, 3).unwrap();
    let root = report.discs.iter().find(|r| r.disc.k == 2).unwrap().roots[0].lambda;
    let m = 200;
    let ef = eigenfunction(&sys, root, m).unwrap();
    let traj = simulate(&sys, &ef.state, 3.0, m).unwrap();
    let rate = (traj.norms[traj.steps].ln() - traj.norms[m].ln()) / 2.0;
    assert!((rate - root.re).abs() < 0.01, "{rate} vs {}", root.re);
}

#[test]
fn smoothing_requires_invertible_generator() {
    let sys = NeutralSystem::pure_neutral(scalar(2.0)).unwrap();
    let x = M2State::generic(&sys.a_minus1, 50, 1);
    assert!(matches!(smooth(&sys, &x, 1), Err(Error::ZeroInSpectrum)));
    assert_eq!(smooth(&sys, &x, 0).unwrap(), x);
}

#[test]
fn jordan_certificate_reduces_to_old_estimate() {
    let sys = NeutralSystem::pure_neutral(jordan()).unwrap();
    let x0 = M2State::generic(&sys.a_minus1, 100, 3);
    let cert = certify(&sys, &x0, &CertifyConfig::default()).unwrap();
    assert_eq!(cert.p, 2);
    assert_eq!(cert.beta_pred, 1.0);
    assert!((cert.omega - 2f64.ln()).abs() < 1e-12);
    assert_eq!(cert.verdict, Verdict::Pass);
    assert_eq!(cert.recompute_verdict(), cert.verdict);
}

#[test]
fn scalar_certificate_with_distributed_term() {
    let sys = with_const_a3(scalar(2.0), scalar(1.0));
    let x0 = M2State::generic(&sys.a_minus1, 100, 4);
    let cert = certify(&sys, &x0, &CertifyConfig::default()).unwrap();
    assert_eq!(cert.beta_pred, 0.0);
    assert_eq!(cert.verdict, Verdict::Pass);
}

#[test]
fn verdict_is_scale_invariant() {
    let sys = NeutralSystem::pure_neutral(jordan()).unwrap();
    let x0 = M2State::generic(&sys.a_minus1, 100, 5);
    let cfg = CertifyConfig {
        horizon: 15.0,
        k_max: 10,
        ..CertifyConfig::default()
    };
    let a = certify(&sys, &x0, &cfg).unwrap();
    let b = certify(&sys, &x0.scale(c64(-3.0, 250.0)), &cfg).unwrap();
    assert_eq!(a.verdict, b.verdict);
    assert!((a.beta_emp - b.beta_emp).abs() < 1e-9);
}

#[test]
fn leading_chain_grows_linearly_in_k() {
    let sys = with_const_a3(jordan(), CMat::identity(2, 2) * c64(0.05, 0.02));
    let report = scan_spectrum(&sys, 20).unwrap();
    for rec in report.discs.iter().filter(|r| r.disc.m == 1 && r.disc.k.abs() >= 5) {
        for r in &rec.roots {
            assert!(r.lambda.norm() >= 0.5 * std::f64::consts::TAU * rec.disc.k.abs() as f64);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn predicted_exponent_is_monotone(p in 1usize..5, n in 0usize..4, s in 0.1f64..5.0, ds in 0.01f64..2.0) {
        let ms = ModulusSpectrum::from_blocks(&[(C64::new(2.0, 0.0), p)]);
        prop_assert!(predicted_exponent(&ms, n + 1, s) <= predicted_exponent(&ms, n, s));
        prop_assert!(predicted_exponent(&ms, n, s) <= predicted_exponent(&ms, n, s + ds));
        prop_assert_eq!(predicted_exponent(&ms, 0, s), p as f64 - 1.0);
    }

    #[test]
    fn state_csv_round_trips(seed in 0u64..10_000, m in 2usize..40) {
        let x = M2State::generic(&jordan(), m, seed);
        prop_assert_eq!(io::parse_state(&io::state_to_csv(&x)).unwrap(), x);
    }
}
