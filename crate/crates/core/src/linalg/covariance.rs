//! Labelled Gaussian covariance matrices (vacuum variance 1/2) and the
//! operations entanglement measures are built from.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::eigen::eigenvalues;
use super::lyapunov::symmetrize;
use crate::error::{Error, Result};

/// One bosonic mode of the three-mode system, in drift-matrix order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mirror1,
    Mirror2,
    Cavity,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Mirror1, Mode::Mirror2, Mode::Cavity];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mirror1 => "mirror1",
            Mode::Mirror2 => "mirror2",
            Mode::Cavity => "cavity",
        })
    }
}

/// `⊕ⱼ [[0, 1], [−1, 0]]` over `modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    omega: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(modes: usize) -> Self {
        let mut omega = DMatrix::<f64>::zeros(2 * modes, 2 * modes);
        for k in 0..modes {
            omega[(2 * k, 2 * k + 1)] = 1.0;
            omega[(2 * k + 1, 2 * k)] = -1.0;
        }
        SymplecticForm { omega }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.omega
    }
}

/// Real symmetric `2m × 2m` second-moment matrix with one label per mode.
///
/// The constructor symmetrises its input. Physicality is not enforced here,
/// because partially transposed matrices share this type; see
/// [`CovarianceMatrix::is_physical`].
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    data: DMatrix<f64>,
    modes: Vec<Mode>,
}

impl CovarianceMatrix {
    pub fn new(data: DMatrix<f64>, modes: Vec<Mode>) -> Result<Self> {
        let n = data.nrows();
        if data.ncols() != n {
            return Err(Error::BadShape(format!("{}×{} is not square", n, data.ncols())));
        }
        if modes.is_empty() || n != 2 * modes.len() {
            return Err(Error::BadShape(format!(
                "{n}×{n} matrix does not match {} mode label(s)",
                modes.len()
            )));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::BadShape(format!("mode {m} is listed twice")));
            }
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadShape("non-finite entries".into()));
        }
        let mut data = data;
        symmetrize(&mut data);
        Ok(CovarianceMatrix { data, modes })
    }

    /// Three-mode matrix in drift order (mirror 1, mirror 2, cavity).
    pub fn three_mode(data: DMatrix<f64>) -> Result<Self> {
        Self::new(data, Mode::ALL.to_vec())
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    fn position(&self, mode: Mode) -> Result<usize> {
        self.modes
            .iter()
            .position(|&m| m == mode)
            .ok_or(Error::UnknownMode(mode))
    }

    /// 2×2 block of a single mode.
    pub fn local_block(&self, mode: Mode) -> Result<DMatrix<f64>> {
        let k = self.position(mode)?;
        Ok(self.data.view((2 * k, 2 * k), (2, 2)).into_owned())
    }

    /// Principal submatrix for `modes`, kept in this matrix's ordering.
    pub fn reduce(&self, modes: &[Mode]) -> Result<CovarianceMatrix> {
        if modes.is_empty() {
            return Err(Error::BadShape("cannot reduce to zero modes".into()));
        }
        let mut keep = Vec::with_capacity(modes.len());
        for &m in modes {
            keep.push(self.position(m)?);
        }
        keep.sort_unstable();
        keep.dedup();
        let idx: Vec<usize> = keep.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let data = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.data[(idx[i], idx[j])]);
        let labels = keep.iter().map(|&k| self.modes[k]).collect();
        Ok(CovarianceMatrix { data, modes: labels })
    }

    /// `P V P` with `P` flipping the sign of `mode`'s momentum quadrature.
    pub fn partial_transpose(&self, mode: Mode) -> Result<CovarianceMatrix> {
        let p = 2 * self.position(mode)? + 1;
        let mut data = self.data.clone();
        let n = data.nrows();
        for j in 0..n {
            if j != p {
                data[(p, j)] = -data[(p, j)];
                data[(j, p)] = -data[(j, p)];
            }
        }
        Ok(CovarianceMatrix {
            data,
            modes: self.modes.clone(),
        })
    }

    /// The `P` used by [`CovarianceMatrix::partial_transpose`].
    pub fn transposition_matrix(&self, mode: Mode) -> Result<DMatrix<f64>> {
        let p = 2 * self.position(mode)? + 1;
        let mut g = DMatrix::<f64>::identity(self.data.nrows(), self.data.nrows());
        g[(p, p)] = -1.0;
        Ok(g)
    }

    /// Moduli of the spectrum of `iΩV`, paired and returned ascending (one
    /// value per mode).
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let m = self.mode_count();
        let omega = SymplecticForm::new(m);
        // eig(iΩV) = i·eig(ΩV)
        let spectrum = eigenvalues(&(omega.matrix() * &self.data))?;
        let mut moduli: Vec<f64> = spectrum.iter().map(|l| l.norm()).collect();
        moduli.sort_by(f64::total_cmp);
        let mut out = Vec::with_capacity(m);
        for pair in moduli.chunks(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if (hi - lo) > 1e-8 * hi.max(f64::MIN_POSITIVE) {
                return Err(Error::NonPhysicalInput(format!(
                    "spectrum of iΩV does not pair up ({lo:e} vs {hi:e})"
                )));
            }
            out.push(0.5 * (lo + hi));
        }
        Ok(out)
    }

    /// All symplectic eigenvalues at least `1/2 − tol`.
    pub fn is_physical(&self, tol: f64) -> Result<bool> {
        Ok(self.symplectic_eigenvalues()?.iter().all(|&nu| nu >= 0.5 - tol))
    }

    pub fn determinant(&self) -> f64 {
        self.data.clone().lu().determinant()
    }
}

/// Smallest symplectic eigenvalue of a partially transposed two-mode matrix,
/// from the closed form `ν̃₋ = 2^{-1/2} √(ℵ − √(ℵ² − 4 det V))` with
/// `ℵ = det α + det β − 2 det γ`.
pub fn min_pt_symplectic(v: &CovarianceMatrix) -> Result<f64> {
    if v.mode_count() != 2 {
        return Err(Error::BadShape(format!(
            "expected a two-mode matrix, got {} modes",
            v.mode_count()
        )));
    }
    let d = v.data();
    let det2 = |r: usize, c: usize| d[(r, c)] * d[(r + 1, c + 1)] - d[(r, c + 1)] * d[(r + 1, c)];
    let aleph = det2(0, 0) + det2(2, 2) - 2.0 * det2(0, 2);
    let det_all = v.determinant();
    let disc = aleph * aleph - 4.0 * det_all;
    if disc < -1e-9 * (aleph * aleph).max(f64::MIN_POSITIVE) {
        return Err(Error::NonPhysicalInput(format!(
            "ℵ² − 4 det V = {disc:e} is negative"
        )));
    }
    let inner = aleph - disc.max(0.0).sqrt();
    if inner < 0.0 {
        return Err(Error::NonPhysicalInput(format!("ℵ − √(…) = {inner:e} is negative")));
    }
    Ok((inner / 2.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmsv(r: f64) -> CovarianceMatrix {
        let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
        let data = DMatrix::from_row_slice(
            4,
            4,
            &[c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c],
        );
        CovarianceMatrix::new(data, vec![Mode::Mirror1, Mode::Mirror2]).unwrap()
    }

    fn six(seed: u64) -> CovarianceMatrix {
        let data = DMatrix::from_fn(6, 6, |i, j| {
            ((i * 7 + j * 3 + seed as usize) % 11) as f64 * 0.01 + if i == j { 2.0 } else { 0.0 }
        });
        CovarianceMatrix::three_mode(data).unwrap()
    }

    #[test]
    fn symplectic_form_identities() {
        let om = SymplecticForm::new(3);
        let o = om.matrix();
        assert_eq!(o * o, -DMatrix::<f64>::identity(6, 6));
        assert_eq!(o.transpose(), -o.clone());
    }

    #[test]
    fn constructor_symmetrises_and_checks_shape() {
        let mut d = DMatrix::<f64>::identity(4, 4);
        d[(0, 1)] = 0.2;
        let v = CovarianceMatrix::new(d, vec![Mode::Mirror1, Mode::Cavity]).unwrap();
        assert_eq!(v.data()[(1, 0)], 0.1);
        assert_eq!(v.data()[(0, 1)], 0.1);
        assert!(CovarianceMatrix::new(DMatrix::identity(4, 4), vec![Mode::Cavity]).is_err());
        assert!(CovarianceMatrix::new(DMatrix::identity(4, 4), vec![Mode::Cavity, Mode::Cavity]).is_err());
    }

    #[test]
    fn reduce_blocks() {
        let v = six(1);
        let mm = v.reduce(&[Mode::Mirror1, Mode::Mirror2]).unwrap();
        assert_eq!(mm.data(), &v.data().view((0, 0), (4, 4)).into_owned());
        assert_eq!(mm.modes(), &[Mode::Mirror1, Mode::Mirror2]);
        let all = v.reduce(&Mode::ALL).unwrap();
        assert_eq!(all, v);
        // requested order does not matter, original ordering is kept
        let m2c = v.reduce(&[Mode::Cavity, Mode::Mirror2]).unwrap();
        assert_eq!(m2c.data(), &v.data().view((2, 2), (4, 4)).into_owned());
        assert_eq!(m2c.modes(), &[Mode::Mirror2, Mode::Cavity]);
        assert_eq!(
            mm.reduce(&[Mode::Cavity]).unwrap_err(),
            Error::UnknownMode(Mode::Cavity)
        );
    }

    #[test]
    fn transposition_matrices() {
        let v = six(2);
        let diag = |m| v.transposition_matrix(m).unwrap().diagonal().iter().copied().collect::<Vec<_>>();
        assert_eq!(diag(Mode::Mirror1), vec![1.0, -1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(diag(Mode::Mirror2), vec![1.0, 1.0, 1.0, -1.0, 1.0, 1.0]);
        assert_eq!(diag(Mode::Cavity), vec![1.0, 1.0, 1.0, 1.0, 1.0, -1.0]);
        for m in Mode::ALL {
            let p = v.transposition_matrix(m).unwrap();
            let pt = v.partial_transpose(m).unwrap();
            assert_eq!(pt.data(), &(&p * v.data() * &p));
            assert_eq!(pt.partial_transpose(m).unwrap(), v);
            assert!((pt.determinant() - v.determinant()).abs() < 1e-12 * v.determinant().abs());
        }
    }

    #[test]
    fn vacuum_and_thermal_symplectic_spectrum() {
        let vac = CovarianceMatrix::three_mode(DMatrix::identity(6, 6) * 0.5).unwrap();
        for nu in vac.symplectic_eigenvalues().unwrap() {
            assert!((nu - 0.5).abs() < 1e-15);
        }
        let th = CovarianceMatrix::three_mode(DMatrix::identity(6, 6) * 3.5).unwrap();
        let nus = th.symplectic_eigenvalues().unwrap();
        assert_eq!(nus.len(), 3);
        for nu in nus {
            assert!((nu - 3.5).abs() < 1e-14);
        }
    }

    #[test]
    fn tmsv_transposed_spectrum() {
        let r = 1.0;
        let pt = tmsv(r).partial_transpose(Mode::Mirror2).unwrap();
        let nus = pt.symplectic_eigenvalues().unwrap();
        assert!((nus[0] - (-2.0 * r).exp() / 2.0).abs() < 1e-12);
        assert!((nus[0] - 0.067_667_641_618_306_35).abs() < 1e-12);
        assert!((nus[1] - (2.0 * r).exp() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_spectral_route() {
        assert!((min_pt_symplectic(&tmsv(0.5)).unwrap() - (-1.0f64).exp() / 2.0).abs() < 1e-12);
        let vac = CovarianceMatrix::new(DMatrix::identity(4, 4) * 0.5, vec![Mode::Mirror1, Mode::Cavity]).unwrap();
        assert!((min_pt_symplectic(&vac).unwrap() - 0.5).abs() < 1e-12);
        for r in [0.1, 0.3, 0.9, 1.7] {
            let v = tmsv(r);
            let closed = min_pt_symplectic(&v).unwrap();
            let spectral = v.partial_transpose(Mode::Mirror2).unwrap().symplectic_eigenvalues().unwrap()[0];
            assert!((closed - spectral).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_rejects_wrong_mode_count() {
        assert!(min_pt_symplectic(&six(0)).is_err());
    }
}
