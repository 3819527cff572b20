//! Real Schur decomposition of small dense nonsymmetric matrices.
//!
//! Householder reduction to upper Hessenberg form followed by the implicit
//! Francis double-shift QR iteration. Transformations are accumulated, so the
//! result is a full factorisation `A = Z T Zᵀ` with `Z` orthogonal and `T`
//! quasi-upper-triangular: 1×1 diagonal blocks for real eigenvalues and 2×2
//! blocks for complex-conjugate pairs.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest dimension the dense kernels are meant for.
pub const MAX_DIM: usize = 16;

/// `A = Z T Zᵀ`.
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub t: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

impl RealSchur {
    /// Diagonal block layout of `T` as `(start, size)` pairs, size 1 or 2.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        let n = self.t.nrows();
        let mut out = Vec::with_capacity(n);
        let mut i = 0;
        while i < n {
            if i + 1 < n && self.t[(i + 1, i)] != 0.0 {
                out.push((i, 2));
                i += 2;
            } else {
                out.push((i, 1));
                i += 1;
            }
        }
        out
    }

    /// Eigenvalues read off the diagonal blocks, in block order.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let t = &self.t;
        let mut out = Vec::with_capacity(t.nrows());
        for (i, size) in self.blocks() {
            if size == 1 {
                out.push(Complex64::new(t[(i, i)], 0.0));
            } else {
                let (l1, l2) = block_eigenvalues(
                    t[(i, i)],
                    t[(i, i + 1)],
                    t[(i + 1, i)],
                    t[(i + 1, i + 1)],
                );
                out.push(l1);
                out.push(l2);
            }
        }
        out
    }
}

/// Spectrum of a general real square matrix.
///
/// Complex eigenvalues are returned as exact conjugate pairs (`re ± i·im`
/// built from the same two numbers).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    Ok(real_schur(a)?.eigenvalues())
}

/// Largest real part over the spectrum.
pub fn max_real_part(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn real_schur(a: &DMatrix<f64>) -> Result<RealSchur> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::BadShape(format!("{}×{} is not square", n, a.ncols())));
    }
    if n > MAX_DIM {
        return Err(Error::BadShape(format!("dimension {n} exceeds {MAX_DIM}")));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::BadShape("matrix has non-finite entries".into()));
    }
    let mut h = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    if n == 0 {
        return Ok(RealSchur { t: h, z });
    }
    hessenberg(&mut h, &mut z);
    francis_qr(&mut h, &mut z)?;
    Ok(RealSchur { t: h, z })
}

/// Eigenvalues of `[[a, b], [c, d]]`.
fn block_eigenvalues(a: f64, b: f64, c: f64, d: f64) -> (Complex64, Complex64) {
    let mid = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let disc = half_diff * half_diff + b * c;
    if disc >= 0.0 {
        let root = disc.sqrt();
        // larger-magnitude root first, the other from the determinant
        let big = if mid >= 0.0 { mid + root } else { mid - root };
        let det = a * d - b * c;
        let small = if big != 0.0 { det / big } else { mid - root };
        (Complex64::new(big, 0.0), Complex64::new(small, 0.0))
    } else {
        let im = (-disc).sqrt();
        (Complex64::new(mid, im), Complex64::new(mid, -im))
    }
}

/// Householder vector for `x`: `(I − β v vᵀ) x = α e₁`. Returns β = 0 when
/// `x` is already a multiple of `e₁`.
fn householder<const K: usize>(x: [f64; K]) -> ([f64; K], f64) {
    let tail: f64 = x[1..].iter().map(|v| v * v).sum();
    if tail == 0.0 {
        return (x, 0.0);
    }
    let norm = (x[0] * x[0] + tail).sqrt();
    let alpha = if x[0] > 0.0 { -norm } else { norm };
    let mut v = x;
    v[0] -= alpha;
    let vtv: f64 = v.iter().map(|e| e * e).sum();
    (v, 2.0 / vtv)
}

/// Rows `r0..r0+K` of `m` ← P · rows, over the given columns.
fn reflect_rows<const K: usize>(
    m: &mut DMatrix<f64>,
    v: &[f64; K],
    beta: f64,
    r0: usize,
    cols: std::ops::Range<usize>,
) {
    for j in cols {
        let mut s = 0.0;
        for (i, vi) in v.iter().enumerate() {
            s += vi * m[(r0 + i, j)];
        }
        s *= beta;
        for (i, vi) in v.iter().enumerate() {
            m[(r0 + i, j)] -= s * vi;
        }
    }
}

/// Columns `c0..c0+K` of `m` ← columns · P, over the given rows.
fn reflect_cols<const K: usize>(
    m: &mut DMatrix<f64>,
    v: &[f64; K],
    beta: f64,
    c0: usize,
    rows: std::ops::Range<usize>,
) {
    for i in rows {
        let mut s = 0.0;
        for (j, vj) in v.iter().enumerate() {
            s += m[(i, c0 + j)] * vj;
        }
        s *= beta;
        for (j, vj) in v.iter().enumerate() {
            m[(i, c0 + j)] -= s * vj;
        }
    }
}

fn hessenberg(h: &mut DMatrix<f64>, z: &mut DMatrix<f64>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x: Vec<f64> = (0..len).map(|i| h[(k + 1 + i, k)]).collect();
        let tail: f64 = x[1..].iter().map(|v| v * v).sum();
        if tail == 0.0 {
            continue;
        }
        let norm = (x[0] * x[0] + tail).sqrt();
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let beta = 2.0 / v.iter().map(|e| e * e).sum::<f64>();

        for j in 0..n {
            let s: f64 = v.iter().enumerate().map(|(i, vi)| vi * h[(k + 1 + i, j)]).sum();
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, j)] -= beta * s * vi;
            }
        }
        for m in [&mut *h, &mut *z] {
            for i in 0..n {
                let s: f64 = v.iter().enumerate().map(|(j, vj)| m[(i, k + 1 + j)] * vj).sum();
                for (j, vj) in v.iter().enumerate() {
                    m[(i, k + 1 + j)] -= beta * s * vj;
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
}

fn francis_qr(h: &mut DMatrix<f64>, z: &mut DMatrix<f64>) -> Result<()> {
    let n = h.nrows();
    let cap = 100 * n;
    let norm = h.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;

    loop {
        // locate the start of the unreduced block ending at `hi`
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() <= f64::EPSILON * s {
                h[(l, l - 1)] = 0.0;
                break;
            }
            l -= 1;
        }

        if l == hi {
            if hi == 0 {
                break;
            }
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if l + 1 == hi {
            split_block(h, z, l);
            if hi < 2 {
                break;
            }
            hi -= 2;
            since_deflation = 0;
            continue;
        }

        total += 1;
        since_deflation += 1;
        if total > cap {
            return Err(Error::EigenFailure { n, iterations: cap });
        }
        let shift = if since_deflation % 11 == 10 {
            // ad hoc shift to break cycles
            let s = h[(hi, hi - 1)].abs() + h[(hi - 1, hi - 2)].abs();
            let centre = h[(hi, hi)] + 0.75 * s;
            Some((2.0 * centre, centre * centre + 0.4375 * s * s))
        } else {
            None
        };
        francis_step(h, z, l, hi, shift);
    }
    Ok(())
}

fn francis_step(
    h: &mut DMatrix<f64>,
    z: &mut DMatrix<f64>,
    l: usize,
    hi: usize,
    shift: Option<(f64, f64)>,
) {
    let n = h.nrows();
    let (s, t) = shift.unwrap_or_else(|| {
        (
            h[(hi - 1, hi - 1)] + h[(hi, hi)],
            h[(hi - 1, hi - 1)] * h[(hi, hi)] - h[(hi - 1, hi)] * h[(hi, hi - 1)],
        )
    });
    let mut x = h[(l, l)] * h[(l, l)] + h[(l, l + 1)] * h[(l + 1, l)] - s * h[(l, l)] + t;
    let mut y = h[(l + 1, l)] * (h[(l, l)] + h[(l + 1, l + 1)] - s);
    let mut w = h[(l + 1, l)] * h[(l + 2, l + 1)];

    for k in l..=hi - 2 {
        let (v, beta) = householder([x, y, w]);
        if beta != 0.0 {
            let c0 = if k > l { k - 1 } else { l };
            reflect_rows(h, &v, beta, k, c0..n);
            let r_end = (k + 3).min(hi);
            reflect_cols(h, &v, beta, k, 0..r_end + 1);
            reflect_cols(z, &v, beta, k, 0..n);
            if k > l {
                h[(k + 1, k - 1)] = 0.0;
                h[(k + 2, k - 1)] = 0.0;
            }
        }
        x = h[(k + 1, k)];
        y = h[(k + 2, k)];
        if k + 3 <= hi {
            w = h[(k + 3, k)];
        }
    }
    let (v, beta) = householder([x, y]);
    if beta != 0.0 {
        reflect_rows(h, &v, beta, hi - 1, hi - 2..n);
        reflect_cols(h, &v, beta, hi - 1, 0..hi + 1);
        reflect_cols(z, &v, beta, hi - 1, 0..n);
        h[(hi, hi - 2)] = 0.0;
    }
}

/// Deflated 2×2 block at `l`: if its eigenvalues are real, rotate it to upper
/// triangular form so real eigenvalues always sit in 1×1 blocks.
fn split_block(h: &mut DMatrix<f64>, z: &mut DMatrix<f64>, l: usize) {
    let n = h.nrows();
    let (a, b, c, d) = (h[(l, l)], h[(l, l + 1)], h[(l + 1, l)], h[(l + 1, l + 1)]);
    if c == 0.0 {
        return;
    }
    let half_diff = 0.5 * (a - d);
    let disc = half_diff * half_diff + b * c;
    if disc < 0.0 {
        return;
    }
    let (lambda, _) = block_eigenvalues(a, b, c, d);
    let lambda = lambda.re;
    // eigenvector for `lambda`, taking the better-conditioned of two forms
    let (v1, v2) = {
        let p = (b, lambda - a);
        let q = (lambda - d, c);
        if p.0.hypot(p.1) >= q.0.hypot(q.1) {
            p
        } else {
            q
        }
    };
    let r = v1.hypot(v2);
    if r == 0.0 {
        return;
    }
    let (cs, sn) = (v1 / r, v2 / r);
    // G = [[cs, -sn], [sn, cs]]; H ← Gᵀ H G, Z ← Z G
    for j in l..n {
        let (p, q) = (h[(l, j)], h[(l + 1, j)]);
        h[(l, j)] = cs * p + sn * q;
        h[(l + 1, j)] = -sn * p + cs * q;
    }
    for (m, rows) in [(&mut *h, l + 2), (&mut *z, n)] {
        for i in 0..rows {
            let (p, q) = (m[(i, l)], m[(i, l + 1)]);
            m[(i, l)] = cs * p + sn * q;
            m[(i, l + 1)] = -sn * p + cs * q;
        }
    }
    h[(l + 1, l)] = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    fn det(a: &DMatrix<f64>) -> f64 {
        a.clone().lu().determinant()
    }

    #[test]
    fn diagonal_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -1.0]);
        let ev = sorted(eigenvalues(&a).unwrap());
        assert_eq!(ev, vec![Complex64::new(-1.0, 0.0), Complex64::new(3.0, 0.0)]);
    }

    #[test]
    fn rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let ev = sorted(eigenvalues(&a).unwrap());
        assert!((ev[0] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((ev[1] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn recovers_constructed_spectrum() {
        // A = Q T Qᵀ with T quasi-triangular and known spectrum
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut t = DMatrix::<f64>::zeros(6, 6);
        // blocks: (1.5 ± 2i), -0.7, (-2 ± 0.5i), 4
        t[(0, 0)] = 1.5;
        t[(0, 1)] = 4.0;
        t[(1, 0)] = -1.0;
        t[(1, 1)] = 1.5;
        t[(2, 2)] = -0.7;
        t[(3, 3)] = -2.0;
        t[(3, 4)] = 0.25;
        t[(4, 3)] = -1.0;
        t[(4, 4)] = -2.0;
        t[(5, 5)] = 4.0;
        for i in 0..6 {
            for j in i + 1..6 {
                if t[(i, j)] == 0.0 && !(i == 3 && j == 4) && !(i == 0 && j == 1) {
                    t[(i, j)] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        let m = DMatrix::<f64>::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
        let q = m.qr().q();
        let a = &q * &t * q.transpose();
        let got = sorted(eigenvalues(&a).unwrap());
        let want = sorted(vec![
            Complex64::new(1.5, 2.0),
            Complex64::new(1.5, -2.0),
            Complex64::new(-0.7, 0.0),
            Complex64::new(-2.0, 0.5),
            Complex64::new(-2.0, -0.5),
            Complex64::new(4.0, 0.0),
        ]);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-9, "{g} vs {w}");
        }
    }

    #[test]
    fn schur_reconstructs_and_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 3, 5, 6, 9, 16] {
            let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
            let s = real_schur(&a).unwrap();
            let back = &s.z * &s.t * s.z.transpose();
            assert!((back - &a).amax() < 1e-12 * a.amax().max(1.0) * n as f64);
            let ortho = s.z.transpose() * &s.z - DMatrix::<f64>::identity(n, n);
            assert!(ortho.amax() < 1e-13 * n as f64);
            // quasi-triangular: nothing below the first subdiagonal, no two
            // consecutive nonzero subdiagonal entries
            for i in 0..n {
                for j in 0..i.saturating_sub(1) {
                    assert_eq!(s.t[(i, j)], 0.0);
                }
            }
            for i in 1..n.saturating_sub(1) {
                assert!(s.t[(i, i - 1)] == 0.0 || s.t[(i + 1, i)] == 0.0);
            }
        }
    }

    #[test]
    fn conjugate_pairs_and_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(2..=8);
            let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let ev = eigenvalues(&a).unwrap();
            assert_eq!(ev.len(), n);
            let prod = ev.iter().fold(Complex64::new(1.0, 0.0), |acc, l| acc * l);
            let d = det(&a);
            assert!((d - prod.re).abs() <= 1e-8 * d.abs().max(1.0));
            assert!(prod.im.abs() <= 1e-8 * d.abs().max(1.0));
            for l in ev.iter().filter(|l| l.im != 0.0) {
                assert!(ev.iter().any(|m| m.re == l.re && m.im == -l.im));
            }
        }
    }

    #[test]
    fn rejects_non_finite_and_oversized() {
        let mut a = DMatrix::<f64>::identity(3, 3);
        a[(1, 2)] = f64::NAN;
        assert!(eigenvalues(&a).is_err());
        assert!(eigenvalues(&DMatrix::<f64>::identity(17, 17)).is_err());
    }

    #[test]
    fn repeated_and_defective() {
        // Jordan block: defective, eigenvalue 2 with multiplicity 3
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 2.0, 1.0, 0.0, 0.0, 2.0]);
        for l in eigenvalues(&a).unwrap() {
            assert!((l - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        }
        let a = DMatrix::<f64>::identity(6, 6) * -1.0;
        assert!((max_real_part(&a).unwrap() + 1.0).abs() < 1e-15);
    }
}
