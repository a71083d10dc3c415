//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(a: &CMat) -> C64 {
    assert!(a.is_square(), "det of a non-square matrix");
    let n = a.nrows();
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    // column-major copy; element (i, j) at j * n + i
    let mut w: Vec<C64> = a.as_slice().to_vec();
    det_in_place(&mut w, n)
}

/// Determinant of an `n × n` column-major buffer, destroying the buffer.
pub fn det_in_place(w: &mut [C64], n: usize) -> C64 {
    let mut d = C64::new(1.0, 0.0);
    for col in 0..n {
        let mut piv = col;
        let mut best = w[col * n + col].norm_sqr();
        for row in col + 1..n {
            let v = w[col * n + row].norm_sqr();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if piv != col {
            for j in col..n {
                w.swap(j * n + col, j * n + piv);
            }
            d = -d;
        }
        let p = w[col * n + col];
        d *= p;
        let inv = p.inv();
        for row in col + 1..n {
            let f = w[col * n + row] * inv;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in col + 1..n {
                let t = w[j * n + col];
                w[j * n + row] -= f * t;
            }
        }
    }
    d
}

/// Singular values sorted in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Largest singular value (spectral norm).
pub fn norm2(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// `true` when the smallest singular value exceeds `rel_tol` times the largest.
pub fn is_well_conditioned(a: &CMat, rel_tol: f64) -> bool {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) => hi > 0.0 && lo > rel_tol * hi,
        _ => false,
    }
}

/// Right singular vector belonging to the smallest singular value, together with
/// all singular values in descending order.
pub fn smallest_right_singular_vector(a: &CMat) -> (CVec, Vec<f64>) {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let sv = &svd.singular_values;
    let mut imin = 0;
    for i in 1..sv.len() {
        if sv[i] < sv[imin] {
            imin = i;
        }
    }
    let v: CVec = v_t.row(imin).transpose().map(|x| x.conj());
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    (v, sorted)
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn eigenvalues(a: &CMat) -> Option<Vec<C64>> {
    if a.nrows() == 0 {
        return Some(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 10_000)?;
    schur.eigenvalues().map(|v| v.iter().copied().collect())
}

/// Roots of the monic polynomial `u^K + a_{K-1} u^{K-1} + … + a_0` given
/// `coeffs = [a_0, …, a_{K-1}]`, via companion-matrix eigenvalues.
pub fn monic_roots(coeffs: &[C64]) -> Option<Vec<C64>> {
    let k = coeffs.len();
    match k {
        0 => Some(Vec::new()),
        1 => Some(vec![-coeffs[0]]),
        _ => {
            let mut comp = CMat::zeros(k, k);
            for i in 1..k {
                comp[(i, i - 1)] = C64::new(1.0, 0.0);
            }
            for i in 0..k {
                comp[(i, k - 1)] = -coeffs[i];
            }
            eigenvalues(&comp)
        }
    }
}

/// Sum of absolute values of all entries.
pub fn entrywise_sum_norm(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm()).sum()
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &CVec) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `base^j` for a square matrix.
pub fn mat_pow(base: &CMat, j: usize) -> CMat {
    let mut out = CMat::identity(base.nrows(), base.ncols());
    for _ in 0..j {
        out = &out * base;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_matches_hand_values() {
        let a = CMat::from_row_slice(2, 2, &[c64(5.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(5.0, 0.0)]);
        assert!((det(&a) - c64(24.0, 0.0)).norm() < 1e-14);
        let b = CMat::from_row_slice(
            3,
            3,
            &[
                c64(0.0, 0.0),
                c64(1.0, 0.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
                c64(1.0, 0.0),
                c64(1.0, 0.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
            ],
        );
        // cyclic permutation has determinant +1
        assert!((det(&b) - c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn det_agrees_with_lu() {
        let a = CMat::from_fn(4, 4, |i, j| c64((i * 3 + j) as f64 * 0.37 - 1.0, (i as f64 - j as f64).sin()));
        let lu = a.clone().lu().determinant();
        assert!((det(&a) - lu).norm() < 1e-12 * lu.norm().max(1.0));
    }

    #[test]
    fn monic_roots_recovers_factors() {
        // (u - 1)(u + 2i) = u^2 + (2i - 1) u - 2i
        let roots = monic_roots(&[c64(0.0, -2.0), c64(-1.0, 2.0)]).unwrap();
        assert_eq!(roots.len(), 2);
        for target in [c64(1.0, 0.0), c64(0.0, -2.0)] {
            assert!(roots.iter().any(|r| (r - target).norm() < 1e-12));
        }
    }

    #[test]
    fn smallest_singular_vector_spans_kernel() {
        let a = CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(2.0, 0.0), c64(4.0, 0.0)]);
        let (v, s) = smallest_right_singular_vector(&a);
        assert!(s[1] < 1e-14);
        assert!(vec_norm(&(&a * &v)) < 1e-14);
        assert!((vec_norm(&v) - 1.0).abs() < 1e-14);
    }
}
