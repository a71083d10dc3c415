//! Eigenvalue and Jordan structure of `A₋₁`, grouped and ordered by modulus.
//!
//! The asymptotic spectrum of the generator is determined by the distinct
//! eigenvalues `μₘ` of `A₋₁`, their algebraic multiplicities `pₘ` and the sizes of
//! their Jordan blocks. Groups are ordered by `|μₘ|` descending and, among equal
//! moduli, by `pₘ` descending; remaining ties keep the order in which the
//! eigenvalues were first produced.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::system::NeutralSystem;

/// Default relative tolerance for eigenvalue clustering and rank decisions.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Absolute tolerance when comparing eigenvalue moduli.
pub const MODULUS_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenGroup {
    pub mu: C64,
    pub multiplicity: usize,
    /// Jordan block sizes, largest first.
    pub block_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusSpectrum {
    pub groups: Vec<EigenGroup>,
    /// `ln|μ₁|`.
    pub omega_tilde: f64,
    /// Sum of the sizes of all Jordan blocks whose eigenvalue has maximal modulus.
    pub p: usize,
}

impl ModulusSpectrum {
    /// Orders the groups and derives `ω̃` and `p`.
    pub fn from_groups(mut groups: Vec<EigenGroup>) -> Self {
        assert!(!groups.is_empty(), "empty eigenvalue list");
        for g in &mut groups {
            g.block_sizes.sort_unstable_by(|a, b| b.cmp(a));
        }
        // bucket moduli: descending, merged within the tie tolerance
        let mut moduli: Vec<f64> = groups.iter().map(|g| g.mu.norm()).collect();
        moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut reps: Vec<f64> = Vec::new();
        for r in moduli {
            if reps.last().is_none_or(|&last| (last - r).abs() > MODULUS_TIE_TOL) {
                reps.push(r);
            }
        }
        let bucket = |mu: C64| -> usize {
            let r = mu.norm();
            reps.iter()
                .position(|&rep| (rep - r).abs() <= MODULUS_TIE_TOL)
                .unwrap_or(reps.len())
        };
        groups.sort_by(|a, b| {
            bucket(a.mu)
                .cmp(&bucket(b.mu))
                .then(b.multiplicity.cmp(&a.multiplicity))
        });
        let top = bucket(groups[0].mu);
        let p = groups
            .iter()
            .filter(|g| bucket(g.mu) == top)
            .map(|g| g.multiplicity)
            .sum();
        let omega_tilde = groups[0].mu.norm().ln();
        Self {
            groups,
            omega_tilde,
            p,
        }
    }

    /// Structure built from declared `(eigenvalue, block size)` pairs.
    pub fn from_blocks(blocks: &[(C64, usize)]) -> Self {
        let mut groups: Vec<EigenGroup> = Vec::new();
        for &(mu, size) in blocks {
            match groups.iter_mut().find(|g| (g.mu - mu).norm() <= MODULUS_TIE_TOL) {
                Some(g) => {
                    g.multiplicity += size;
                    g.block_sizes.push(size);
                }
                None => groups.push(EigenGroup {
                    mu,
                    multiplicity: size,
                    block_sizes: vec![size],
                }),
            }
        }
        Self::from_groups(groups)
    }

    /// Uses the declared structure when the system carries one, detection otherwise.
    pub fn for_system(sys: &NeutralSystem, cluster_tol: f64) -> Result<Self> {
        match &sys.jordan {
            Some(js) => Ok(Self::from_blocks(&js.blocks)),
            None => analyze(&sys.a_minus1, cluster_tol),
        }
    }

    /// Number of distinct eigenvalues `ℓ`.
    pub fn ell(&self) -> usize {
        self.groups.len()
    }

    /// Largest single Jordan block of the leading group.
    pub fn p1(&self) -> usize {
        self.groups[0].block_sizes[0]
    }

    /// Groups whose modulus ties with the maximal one.
    pub fn maximal_groups(&self) -> impl Iterator<Item = &EigenGroup> {
        let r = self.groups[0].mu.norm();
        self.groups
            .iter()
            .filter(move |g| (g.mu.norm() - r).abs() <= MODULUS_TIE_TOL)
    }
}

/// Detects the modulus-ordered eigenvalue and Jordan structure of `a`.
///
/// Eigenvalues closer than `scale · cluster_tol^{1/n}` are merged, where `scale`
/// is `max(1, max|λ|)`; the `1/n` root accounts for the `ε^{1/p}` splitting of a
/// defective eigenvalue under rounding. Block sizes follow from the ranks of
/// `(A − μI)^j`, with singular values below `cluster_tol · max(1, ‖A‖)^j`
/// treated as zero.
pub fn analyze(a: &CMat, cluster_tol: f64) -> Result<ModulusSpectrum> {
    let n = a.nrows();
    if n == 0 || !a.is_square() {
        return Err(Error::Dimension("A₋₁ must be a non-empty square matrix".into()));
    }
    if !(cluster_tol > 0.0 && cluster_tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "cluster_tol must lie in (0, 1), got {cluster_tol}"
        )));
    }
    let eig = linalg::eigenvalues(a)
        .ok_or_else(|| Error::RankAmbiguity("Schur iteration did not converge".into()))?;
    let scale = eig.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let radius = scale * cluster_tol.powf(1.0 / n as f64);

    // single-linkage clustering, clusters ordered by first member
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eig[i] - eig[j]).norm() <= radius {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                if ri != rj {
                    let (lo, hi) = (ri.min(rj), ri.max(rj));
                    label[hi] = lo;
                }
            }
        }
    }
    let mut clusters: Vec<(usize, Vec<C64>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match clusters.iter_mut().find(|c| c.0 == r) {
            Some(c) => c.1.push(eig[i]),
            None => clusters.push((r, vec![eig[i]])),
        }
    }

    let a_norm = linalg::norm2(a).max(1.0);
    let mut groups = Vec::with_capacity(clusters.len());
    for (_, members) in clusters {
        let p = members.len();
        let mu = members.iter().sum::<C64>() / p as f64;
        let shifted = a - CMat::identity(n, n) * mu;
        // ranks r_0 = n, r_1, ..., r_p
        let mut ranks = vec![n];
        let mut power = CMat::identity(n, n);
        for j in 1..=p {
            power = &power * &shifted;
            let thr = cluster_tol * a_norm.powi(j as i32);
            let sv = linalg::singular_values(&power);
            if let Some(s) = sv.iter().find(|&&s| s > thr / 10.0 && s < thr * 10.0) {
                return Err(Error::RankAmbiguity(format!(
                    "singular value {s:.3e} of (A - μI)^{j} at μ = {mu} lies within a factor 10 of the threshold {thr:.3e}"
                )));
            }
            ranks.push(sv.iter().filter(|&&s| s > thr).count());
        }
        let algebraic = n - ranks[p];
        if algebraic != p {
            return Err(Error::RankAmbiguity(format!(
                "cluster of {p} eigenvalues near {mu} has rank-based multiplicity {algebraic}"
            )));
        }
        // c_j = number of blocks of size >= j
        let at_least: Vec<usize> = (1..=p).map(|j| ranks[j - 1] - ranks[j]).collect();
        let mut block_sizes = Vec::new();
        for j in 1..=p {
            let next = if j < p { at_least[j] } else { 0 };
            if at_least[j - 1] < next {
                return Err(Error::RankAmbiguity(format!(
                    "inconsistent rank sequence {ranks:?} at μ = {mu}"
                )));
            }
            for _ in 0..(at_least[j - 1] - next) {
                block_sizes.push(j);
            }
        }
        groups.push(EigenGroup {
            mu,
            multiplicity: p,
            block_sizes,
        });
    }
    Ok(ModulusSpectrum::from_groups(groups))
}
