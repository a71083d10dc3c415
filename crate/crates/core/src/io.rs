//! File formats: system JSON, state/spectrum/trajectory/appendix CSV,
//! certificate JSON and text. All writers go through [`write_atomic`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::appendix::AppendixReport;
use crate::characteristic::{DiscRecord, SpectrumReport};
use crate::error::{Error, Result};
use crate::growth::GrowthCertificate;
use crate::linalg::{c64, CMat, CVec, C64};
use crate::solver::Trajectory;
use crate::system::{DeclaredStructure, M2State, NeutralSystem, PiecewisePolyKernel};

#[derive(Serialize, Deserialize, Debug, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct RawComplex {
    re: f64,
    im: f64,
}

type RawMatrix = Vec<Vec<RawComplex>>;

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<RawMatrix>>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawBlock {
    mu: RawComplex,
    size: usize,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawJordan {
    blocks: Vec<RawBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    similarity: Option<RawMatrix>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    n: usize,
    a_minus1: RawMatrix,
    a2: RawKernel,
    a3: RawKernel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    jordan: Option<RawJordan>,
}

fn to_raw_c(z: C64) -> RawComplex {
    RawComplex { re: z.re, im: z.im }
}

fn to_raw_matrix(a: &CMat) -> RawMatrix {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| to_raw_c(a[(i, j)])).collect())
        .collect()
}

fn to_raw_kernel(k: &PiecewisePolyKernel) -> RawKernel {
    RawKernel {
        breakpoints: k.breakpoints.clone(),
        pieces: k
            .pieces
            .iter()
            .map(|p| p.iter().map(to_raw_matrix).collect())
            .collect(),
    }
}

fn from_raw_matrix(raw: &RawMatrix, n: usize, what: &str) -> Result<CMat> {
    if raw.len() != n || raw.iter().any(|r| r.len() != n) {
        let cols: Vec<usize> = raw.iter().map(|r| r.len()).collect();
        return Err(Error::Dimension(format!(
            "{what} has {} rows with lengths {cols:?}, expected {n}x{n}",
            raw.len()
        )));
    }
    Ok(CMat::from_fn(n, n, |i, j| c64(raw[i][j].re, raw[i][j].im)))
}

fn from_raw_kernel(raw: &RawKernel, n: usize, name: &str) -> Result<PiecewisePolyKernel> {
    let pieces = raw
        .pieces
        .iter()
        .enumerate()
        .map(|(j, p)| {
            p.iter()
                .enumerate()
                .map(|(d, c)| from_raw_matrix(c, n, &format!("{name}.pieces[{j}][{d}]")))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PiecewisePolyKernel {
        breakpoints: raw.breakpoints.clone(),
        pieces,
    })
}

/// Parses a system from JSON text and validates it.
pub fn parse_system(text: &str) -> Result<NeutralSystem> {
    let raw: RawSystem = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let n = raw.n;
    let jordan = match &raw.jordan {
        None => None,
        Some(j) => Some(DeclaredStructure {
            blocks: j.blocks.iter().map(|b| (c64(b.mu.re, b.mu.im), b.size)).collect(),
            similarity: j
                .similarity
                .as_ref()
                .map(|s| from_raw_matrix(s, n, "jordan.similarity"))
                .transpose()?,
        }),
    };
    let sys = NeutralSystem {
        n,
        a_minus1: from_raw_matrix(&raw.a_minus1, n, "a_minus1")?,
        a2: from_raw_kernel(&raw.a2, n, "a2")?,
        a3: from_raw_kernel(&raw.a3, n, "a3")?,
        jordan,
    };
    sys.ensure_valid()?;
    Ok(sys)
}

/// JSON text of a system; floats are written in shortest round-trip form.
pub fn system_to_json(sys: &NeutralSystem) -> String {
    let raw = RawSystem {
        n: sys.n,
        a_minus1: to_raw_matrix(&sys.a_minus1),
        a2: to_raw_kernel(&sys.a2),
        a3: to_raw_kernel(&sys.a3),
        jordan: sys.jordan.as_ref().map(|j| RawJordan {
            blocks: j
                .blocks
                .iter()
                .map(|&(mu, size)| RawBlock { mu: to_raw_c(mu), size })
                .collect(),
            similarity: j.similarity.as_ref().map(to_raw_matrix),
        }),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("plain data serializes");
    s.push('\n');
    s
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_system(path: impl AsRef<Path>) -> Result<NeutralSystem> {
    let path = path.as_ref();
    parse_system(&read_text(path)?).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_system(sys: &NeutralSystem, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), system_to_json(sys).as_bytes())
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Writes every `(path, contents)` pair or, on failure, none of the renamed targets
/// that did not exist before.
pub fn write_all_atomic(files: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    let mut written: Vec<&Path> = Vec::new();
    for (path, bytes) in files {
        let existed = path.exists();
        if let Err(e) = write_atomic(path, bytes) {
            for p in written {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
        if !existed {
            written.push(path);
        }
    }
    Ok(())
}

/// Plain decimal for moderate magnitudes, scientific otherwise; both round-trip.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn push_complex(row: &mut Vec<String>, z: C64) {
    row.push(fmt_f64(z.re));
    row.push(fmt_f64(z.im));
}

/// State CSV: first row `y` as interleaved `re,im`, then one row per grid node.
pub fn state_to_csv(x: &M2State) -> String {
    let mut out = String::new();
    let line = |v: &mut String, col: &mut dyn Iterator<Item = C64>| {
        let mut row = Vec::new();
        for z in col {
            push_complex(&mut row, z);
        }
        v.push_str(&row.join(","));
        v.push('\n');
    };
    line(&mut out, &mut x.y.iter().copied());
    for i in 0..x.z.ncols() {
        line(&mut out, &mut x.z.column(i).iter().copied());
    }
    out
}

pub fn parse_state(text: &str) -> Result<M2State> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e} in {t:?}", ln + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() % 2 != 0 {
            return Err(Error::Parse(format!(
                "line {}: odd number of values ({}); expected re,im pairs",
                ln + 1,
                vals.len()
            )));
        }
        rows.push((ln + 1, vals));
    }
    let Some((_, first)) = rows.first() else {
        return Err(Error::Parse("empty state file".into()));
    };
    let n = first.len() / 2;
    if let Some((ln, r)) = rows.iter().find(|(_, r)| r.len() != 2 * n) {
        return Err(Error::Dimension(format!(
            "line {ln} has {} values, the y row has {}",
            r.len(),
            2 * n
        )));
    }
    let pairs = |r: &[f64]| CVec::from_iterator(n, r.chunks(2).map(|p| c64(p[0], p[1])));
    let y = pairs(first);
    let mut z = CMat::zeros(n, rows.len() - 1);
    for (i, (_, r)) in rows[1..].iter().enumerate() {
        z.set_column(i, &pairs(r));
    }
    M2State::new(y, z)
}

pub fn load_state(path: impl AsRef<Path>) -> Result<M2State> {
    let path = path.as_ref();
    parse_state(&read_text(path)?).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub const SPECTRUM_HEADER: &str = "m,k,center_re,center_im,radius,count,root_re,root_im,multiplicity";

fn disc_rows(rec: &DiscRecord, out: &mut String) {
    let d = &rec.disc;
    let head = [
        d.m.to_string(),
        d.k.to_string(),
        fmt_f64(d.center.re),
        fmt_f64(d.center.im),
        fmt_f64(d.radius),
        rec.count.to_string(),
    ]
    .join(",");
    if rec.roots.is_empty() {
        let _ = writeln!(out, "{head},,,0");
    }
    for r in &rec.roots {
        let _ = writeln!(
            out,
            "{head},{},{},{}",
            fmt_f64(r.lambda.re),
            fmt_f64(r.lambda.im),
            r.multiplicity
        );
    }
}

/// One row per located root of the asymptotic discs; empty discs get one row
/// with blank root fields and multiplicity 0.
pub fn spectrum_to_csv(report: &SpectrumReport) -> String {
    let mut out = String::from(SPECTRUM_HEADER);
    out.push('\n');
    for rec in &report.discs {
        disc_rows(rec, &mut out);
    }
    out
}

#[derive(Serialize)]
struct RawDisc {
    center: RawComplex,
    radius: f64,
    count: usize,
    roots: Vec<RawRoot>,
}

#[derive(Serialize)]
struct RawRoot {
    lambda: RawComplex,
    multiplicity: usize,
}

#[derive(Serialize)]
struct RawSummary {
    k_max: i64,
    threshold: i64,
    discs: usize,
    zero_disc: Option<RawDisc>,
    leftover: Vec<RawComplex>,
}

/// Scan metadata, the disc around 0 and roots found outside every disc.
pub fn spectrum_summary_json(report: &SpectrumReport) -> String {
    let raw = RawSummary {
        k_max: report.k_max,
        threshold: report.threshold,
        discs: report.discs.len(),
        zero_disc: report.zero_disc.as_ref().map(|r| RawDisc {
            center: to_raw_c(r.disc.center),
            radius: r.disc.radius,
            count: r.count,
            roots: r
                .roots
                .iter()
                .map(|x| RawRoot {
                    lambda: to_raw_c(x.lambda),
                    multiplicity: x.multiplicity,
                })
                .collect(),
        }),
        leftover: report.leftover.iter().map(|&z| to_raw_c(z)).collect(),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("plain data serializes");
    s.push('\n');
    s
}

/// `t,norm` at every step.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,norm\n");
    for (j, v) in traj.norms.iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt_f64(traj.time(j)), fmt_f64(*v));
    }
    out
}

/// The history segment `z_t(θ)` at every integer time `t`, one row per node.
pub fn trajectory_z_dump(traj: &Trajectory) -> String {
    let n = traj.n;
    let mut out = String::from("t,theta");
    for r in 1..=n {
        let _ = write!(out, ",z{r}_re,z{r}_im");
    }
    out.push('\n');
    for j in (0..=traj.steps).step_by(traj.m) {
        for i in 0..=traj.m {
            let mut row = vec![fmt_f64(traj.time(j)), fmt_f64(crate::system::theta(i, traj.m))];
            for z in traj.z_node(j + i).iter() {
                push_complex(&mut row, *z);
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

pub const APPENDIX_HEADER: &str = "n,lambda_abs,trials,M0,M,violations_upper,violations_lower,max_inv_norm_scaled,violations_remark1,violations_inverse";

pub fn appendix_to_csv(report: &AppendixReport) -> String {
    let mut out = String::from(APPENDIX_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            fmt_f64(r.lambda_abs),
            r.trials,
            fmt_f64(r.m0),
            fmt_f64(r.big_m),
            r.violations_upper,
            r.violations_lower,
            r.max_inv_norm_scaled.map(fmt_f64).unwrap_or_default(),
            r.violations_remark1,
            r.violations_inverse
        );
    }
    out
}

/// Per-dimension constants and the inverse-norm sweep.
pub fn appendix_sweep_csv(report: &AppendixReport) -> String {
    let mut out = String::from("n,M0,ceiling,M,slope,lambda_abs,inv_norm\n");
    for s in &report.summaries {
        for (a, v) in &s.sweep {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.n,
                fmt_f64(s.m0),
                fmt_f64(s.ceiling),
                fmt_f64(s.big_m),
                fmt_f64(s.inverse_slope),
                fmt_f64(*a),
                fmt_f64(*v)
            );
        }
    }
    out
}

#[derive(Serialize)]
struct RawCertificate<'a> {
    omega: f64,
    s_fit: Option<f64>,
    r2: Option<f64>,
    p: usize,
    p1: usize,
    n_smooth: usize,
    beta_pred: f64,
    beta_emp: f64,
    slack: f64,
    verdict: &'a str,
    k_max: i64,
    horizon: f64,
    m: usize,
    max_root_re: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

pub fn certificate_to_json(c: &GrowthCertificate) -> String {
    let raw = RawCertificate {
        omega: c.omega,
        s_fit: c.s_fit,
        r2: c.r2,
        p: c.p,
        p1: c.p1,
        n_smooth: c.n_smooth,
        beta_pred: c.beta_pred,
        beta_emp: c.beta_emp,
        slack: c.slack,
        verdict: c.verdict.as_str(),
        k_max: c.k_max,
        horizon: c.horizon,
        m: c.m,
        max_root_re: c.max_root_re,
        note: c.note.as_deref(),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn certificate_to_text(c: &GrowthCertificate) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
    let mut out = String::new();
    let _ = writeln!(out, "growth certificate");
    let _ = writeln!(out, "  omega         {:.10}", c.omega);
    let _ = writeln!(out, "  max Re root   {:.10}", c.max_root_re);
    let _ = writeln!(out, "  p, p1         {}, {}", c.p, c.p1);
    let _ = writeln!(out, "  s fit (R^2)   {} ({})", opt(c.s_fit), opt(c.r2));
    let _ = writeln!(out, "  smoothing     {}", c.n_smooth);
    let _ = writeln!(out, "  beta pred     {:.6}", c.beta_pred);
    let _ = writeln!(out, "  beta emp      {:.6}", c.beta_emp);
    let _ = writeln!(out, "  slack         {}", c.slack);
    let _ = writeln!(out, "  k_max {}  horizon {}  m {}", c.k_max, c.horizon, c.m);
    let _ = writeln!(out, "  verdict       {}", c.verdict.as_str());
    if let Some(note) = &c.note {
        let _ = writeln!(out, "  note          {note}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> CMat {
        CMat::from_element(1, 1, c64(v, 0.0))
    }

    #[test]
    fn scalar_system_round_trip() {
        let sys = NeutralSystem::pure_neutral(scalar(2.0)).unwrap();
        assert_eq!(parse_system(&system_to_json(&sys)).unwrap(), sys);
    }

    #[test]
    fn awkward_digits_round_trip_exactly() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[c64(0.1, 1.0 / 3.0), c64(1e-300, -2.5e7), c64(std::f64::consts::PI, 0.0), c64(2.0, -7e-9)],
        );
        let k = PiecewisePolyKernel {
            breakpoints: vec![-1.0, -0.3, 0.0],
            pieces: vec![vec![a.clone() * c64(0.01, 0.0)], vec![a.clone() * c64(0.7, 0.1), a.clone()]],
        };
        let sys = NeutralSystem::new(a, k.clone(), k).unwrap();
        assert_eq!(parse_system(&system_to_json(&sys)).unwrap(), sys);
    }

    #[test]
    fn declared_structure_round_trip() {
        let a = CMat::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(2.0, 0.0)]);
        let sys = NeutralSystem::pure_neutral(a)
            .unwrap()
            .with_declared_structure(DeclaredStructure {
                blocks: vec![(c64(2.0, 0.0), 2)],
                similarity: Some(CMat::identity(2, 2)),
            })
            .unwrap();
        assert_eq!(parse_system(&system_to_json(&sys)).unwrap(), sys);
    }

    #[test]
    fn missing_field_is_named() {
        let text = r#"{"n": 1, "a2": {"breakpoints": [-1, 0], "pieces": [[[[{"re":0,"im":0}]]]]},
                       "a3": {"breakpoints": [-1, 0], "pieces": [[[[{"re":0,"im":0}]]]]}}"#;
        match parse_system(text) {
            Err(Error::Parse(msg)) => assert!(msg.contains("a_minus1") && msg.contains("line"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kernel_dimension_mismatch() {
        let z = r#"{"re":0,"im":0}"#;
        let text = format!(
            r#"{{"n": 1, "a_minus1": [[{{"re":2,"im":0}}]],
                "a2": {{"breakpoints": [-1, 0], "pieces": [[[[{z},{z}],[{z},{z}]]]]}},
                "a3": {{"breakpoints": [-1, 0], "pieces": [[[[{z}]]]]}}}}"#
        );
        assert!(matches!(parse_system(&text), Err(Error::Dimension(_))));
    }

    #[test]
    fn invalid_system_is_rejected_on_load() {
        let sys = NeutralSystem {
            n: 1,
            a_minus1: scalar(0.0),
            a2: PiecewisePolyKernel::zero(1),
            a3: PiecewisePolyKernel::zero(1),
            jordan: None,
        };
        assert!(matches!(parse_system(&system_to_json(&sys)), Err(Error::InvalidSystem(_))));
    }

    #[test]
    fn state_csv_round_trip() {
        let a = CMat::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(2.0, 0.0)]);
        let x = M2State::generic(&a, 17, 3);
        let text = state_to_csv(&x);
        assert_eq!(text.lines().count(), 19);
        assert_eq!(parse_state(&text).unwrap(), x);
    }

    #[test]
    fn ragged_state_is_a_dimension_error() {
        assert!(matches!(parse_state("1,0\n1,0\n1,0,2,0\n1,0\n"), Err(Error::Dimension(_))));
        assert!(matches!(parse_state("1,0\n1,x\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_state(""), Err(Error::Parse(_))));
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, 1.0, -0.1, 1e-4, 9.99e-5, 123456.789, 1e15, -3.2e-300, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x, "{x}");
        }
        assert_eq!(fmt_f64(1e-5), "1e-5");
        assert_eq!(fmt_f64(0.5), "0.5");
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        let missing = dir.path().join("nope").join("x.csv");
        assert!(matches!(write_atomic(&missing, b"x"), Err(Error::Io { .. })));
    }

    #[test]
    fn failed_batch_removes_new_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = vec![
            (dir.path().join("a.csv"), b"a".to_vec()),
            (dir.path().join("missing").join("b.csv"), b"b".to_vec()),
        ];
        assert!(write_all_atomic(&files).is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
