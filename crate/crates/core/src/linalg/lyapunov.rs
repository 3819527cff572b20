//! Steady-state covariance from `A V + V Aᵀ + D = 0` by the Bartels–Stewart
//! method on the real Schur form of `A`.

use nalgebra::DMatrix;

use super::eigen::{real_schur, RealSchur};
use crate::error::{Error, Result};

/// Solve `A V + V Aᵀ = −D` for a Hurwitz-stable `A`.
///
/// Returns [`Error::UnstableSystem`] when some eigenvalue of `A` has a
/// non-negative real part. The result is symmetrised and improved by one
/// step of iterative refinement against the true residual.
pub fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || d.nrows() != n || d.ncols() != n {
        return Err(Error::BadShape(format!(
            "A is {}×{}, D is {}×{}",
            a.nrows(),
            a.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    let schur = real_schur(a)?;
    let margin = schur
        .eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if margin >= 0.0 {
        return Err(Error::UnstableSystem { margin });
    }

    let mut v = solve_with_schur(&schur, &(-d))?;
    let residual = lyapunov_residual(a, &v, d);
    let correction = solve_with_schur(&schur, &(-residual))?;
    v += correction;
    symmetrize(&mut v);
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::SolveFailure("non-finite entries in the solution".into()));
    }
    Ok(v)
}

/// `A V + V Aᵀ + D`.
pub fn lyapunov_residual(a: &DMatrix<f64>, v: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    a * v + v * a.transpose() + d
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
}

/// `A X + X Aᵀ = C` given `A = Z T Zᵀ`.
fn solve_with_schur(schur: &RealSchur, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let z = &schur.z;
    let t = &schur.t;
    let f = z.transpose() * c * z;
    let n = t.nrows();
    let blocks = schur.blocks();
    let mut y = DMatrix::<f64>::zeros(n, n);

    // T Y + Y Tᵀ = F, sweeping block rows and columns from the bottom-right
    for &(i0, p) in blocks.iter().rev() {
        for &(j0, q) in blocks.iter().rev() {
            let mut rhs = [0.0; 4];
            for r in 0..p {
                for s in 0..q {
                    let (gi, gj) = (i0 + r, j0 + s);
                    let mut acc = f[(gi, gj)];
                    for k in i0 + p..n {
                        acc -= t[(gi, k)] * y[(k, gj)];
                    }
                    for k in j0 + q..n {
                        acc -= y[(gi, k)] * t[(gj, k)];
                    }
                    rhs[r + s * p] = acc;
                }
            }
            // (I_q ⊗ T_ii + T_jj ⊗ I_p) vec(Y_ij) = vec(R), column-major vec
            let m = p * q;
            let mut sys = [0.0; 16];
            for s in 0..q {
                for r in 0..p {
                    let row = r + s * p;
                    for s2 in 0..q {
                        for r2 in 0..p {
                            let col = r2 + s2 * p;
                            let mut val = 0.0;
                            if s == s2 {
                                val += t[(i0 + r, i0 + r2)];
                            }
                            if r == r2 {
                                val += t[(j0 + s, j0 + s2)];
                            }
                            sys[row * m + col] = val;
                        }
                    }
                }
            }
            solve_small(&mut sys[..m * m], &mut rhs[..m], m)?;
            for r in 0..p {
                for s in 0..q {
                    y[(i0 + r, j0 + s)] = rhs[r + s * p];
                }
            }
        }
    }
    Ok(z * y * z.transpose())
}

/// Gaussian elimination with partial pivoting on a row-major `m×m` system.
fn solve_small(a: &mut [f64], b: &mut [f64], m: usize) -> Result<()> {
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .unwrap_or(col);
        if a[pivot * m + col] == 0.0 {
            return Err(Error::SolveFailure(
                "singular block in the Schur-form Sylvester sweep".into(),
            ));
        }
        if pivot != col {
            for k in 0..m {
                a.swap(col * m + k, pivot * m + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..m {
            let factor = a[row * m + col] / a[col * m + col];
            if factor != 0.0 {
                for k in col..m {
                    a[row * m + k] -= factor * a[col * m + k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    for row in (0..m).rev() {
        let mut acc = b[row];
        for k in row + 1..m {
            acc -= a[row * m + k] * b[k];
        }
        b[row] = acc / a[row * m + row];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigen::max_real_part;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn negative_identity_gives_half_identity() {
        let a = -DMatrix::<f64>::identity(6, 6);
        let d = DMatrix::<f64>::identity(6, 6);
        let v = solve_lyapunov(&a, &d).unwrap();
        assert!((v - DMatrix::<f64>::identity(6, 6) * 0.5).amax() < 1e-15);
    }

    #[test]
    fn decoupled_scalars() {
        let rates = [0.5, 1.0, 2.0, 3.5, 0.1, 7.0];
        let diff = [1.0, 0.0, 4.0, 2.0, 0.3, 1.5];
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(6, rates.iter().map(|r| -r)));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&diff));
        let v = solve_lyapunov(&a, &d).unwrap();
        for i in 0..6 {
            assert!((v[(i, i)] - diff[i] / (2.0 * rates[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn unstable_is_rejected() {
        let mut a = -DMatrix::<f64>::identity(6, 6);
        a[(5, 5)] = 0.5;
        let d = DMatrix::<f64>::identity(6, 6);
        match solve_lyapunov(&a, &d) {
            Err(Error::UnstableSystem { margin }) => assert!((margin - 0.5).abs() < 1e-15),
            other => panic!("expected UnstableSystem, got {other:?}"),
        }
    }

    #[test]
    fn random_stable_systems_meet_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let n = rng.gen_range(1..=8);
            let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let shift = max_real_part(&m).unwrap() + 0.5;
            let a = &m - DMatrix::<f64>::identity(n, n) * shift;
            let b = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let d = &b * b.transpose();
            let v = solve_lyapunov(&a, &d).unwrap();
            let res = lyapunov_residual(&a, &v, &d).amax();
            assert!(res <= 1e-8 * d.amax().max(1.0), "residual {res}");
            assert_eq!(v, v.transpose());
        }
    }
}
