//! Entanglement and steering quantifiers for Gaussian covariance matrices,
//! and the per-point [`CorrelationReport`].

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, min_pt_symplectic, CovarianceMatrix, Mode};
use crate::model::LinearModel;

/// Steering values below this are treated as zero when classifying.
pub const STEERING_CLAMP: f64 = 1e-12;

/// Per-split residual contangles more negative than this are reported as a
/// monogamy violation rather than clamped.
pub const MONOGAMY_SLACK: f64 = 1e-6;

/// Tolerance on the "steerable ⇒ entangled" check.
pub const HIERARCHY_TOL: f64 = 1e-10;

/// Direction of Gaussian steering between two modes α and β.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SteeringClass {
    NoWay,
    /// Only α steers β.
    OneWayAlphaToBeta,
    /// Only β steers α.
    OneWayBetaToAlpha,
    TwoWay,
}

impl SteeringClass {
    /// Short label used in result files.
    pub fn code(self) -> &'static str {
        match self {
            SteeringClass::NoWay => "NW",
            SteeringClass::OneWayAlphaToBeta => "OW12",
            SteeringClass::OneWayBetaToAlpha => "OW21",
            SteeringClass::TwoWay => "TW",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Some(match code {
            "NW" => SteeringClass::NoWay,
            "OW12" => SteeringClass::OneWayAlphaToBeta,
            "OW21" => SteeringClass::OneWayBetaToAlpha,
            "TW" => SteeringClass::TwoWay,
            _ => return None,
        })
    }

    pub fn is_one_way(self) -> bool {
        matches!(
            self,
            SteeringClass::OneWayAlphaToBeta | SteeringClass::OneWayBetaToAlpha
        )
    }
}

impl fmt::Display for SteeringClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// `max(0, −ln 2ν̃₋)` for a two-mode covariance matrix.
pub fn log_negativity(v: &CovarianceMatrix) -> Result<f64> {
    let nu = min_pt_symplectic(v)?;
    Ok((-(2.0 * nu).ln()).max(0.0))
}

/// Negativity of the bipartition `single | rest` of a three-mode state.
pub fn one_vs_two_log_negativity(v: &CovarianceMatrix, single: Mode) -> Result<f64> {
    if v.mode_count() != 3 {
        return Err(Error::BadShape(format!(
            "expected a three-mode matrix, got {} modes",
            v.mode_count()
        )));
    }
    let nus = v.partial_transpose(single)?.symplectic_eigenvalues()?;
    Ok((-(2.0 * nus[0]).ln()).max(0.0))
}

/// `min_f (E²_{f|jk} − E²_{f|j} − E²_{f|k})` over the three one-vs-two splits.
pub fn residual_contangle_min(v: &CovarianceMatrix) -> Result<f64> {
    let residuals = residual_contangles(v)?;
    let mut best = f64::INFINITY;
    for (f, r) in Mode::ALL.iter().zip(residuals) {
        if r < -MONOGAMY_SLACK {
            return Err(Error::MonogamyViolation {
                split: format!("{f}|rest"),
                residual: r,
            });
        }
        best = best.min(r.max(0.0));
    }
    Ok(best)
}

/// Unclamped residual contangle for each split `f | jk`, in mode order.
pub fn residual_contangles(v: &CovarianceMatrix) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (slot, &f) in out.iter_mut().zip(Mode::ALL.iter()) {
        let whole = one_vs_two_log_negativity(v, f)?;
        let mut r = whole * whole;
        for &other in Mode::ALL.iter().filter(|&&m| m != f) {
            let e = log_negativity(&v.reduce(&[f, other])?)?;
            r -= e * e;
        }
        *slot = r;
    }
    Ok(out)
}

/// Rényi-2 entropy `½ ln det(2V)`; zero for pure states.
pub fn renyi2_entropy(v: &CovarianceMatrix) -> Result<f64> {
    renyi2_of(v.data())
}

fn renyi2_of(v: &DMatrix<f64>) -> Result<f64> {
    let det = (v * 2.0).lu().determinant();
    // NaN must also be rejected
    if det.is_nan() || det <= 0.0 {
        return Err(Error::NonPositiveDeterminant(det));
    }
    Ok(0.5 * det.ln())
}

/// Gaussian steering `ζ_{α|β} = max(0, S(2V_α) − S(2V))` of a two-mode state,
/// where `steerer` is α.
pub fn steering(v: &CovarianceMatrix, steerer: Mode) -> Result<f64> {
    if v.mode_count() != 2 {
        return Err(Error::BadShape(format!(
            "expected a two-mode matrix, got {} modes",
            v.mode_count()
        )));
    }
    let local = v.local_block(steerer)?;
    Ok((renyi2_of(&local)? - renyi2_entropy(v)?).max(0.0))
}

pub fn steering_asymmetry(zab: f64, zba: f64) -> f64 {
    (zab - zba).abs()
}

pub fn classify(zab: f64, zba: f64) -> SteeringClass {
    let on = |z: f64| z >= STEERING_CLAMP;
    match (on(zab), on(zba)) {
        (false, false) => SteeringClass::NoWay,
        (true, false) => SteeringClass::OneWayAlphaToBeta,
        (false, true) => SteeringClass::OneWayBetaToAlpha,
        (true, true) => SteeringClass::TwoWay,
    }
}

/// Correlation measures of a stable steady state. Steering is between the
/// two mirrors with α = mirror 1, β = mirror 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub en_mm: f64,
    pub en_m1c: f64,
    pub en_m2c: f64,
    pub zeta_m1_m2: f64,
    pub zeta_m2_m1: f64,
    pub zeta_asym: f64,
    pub r_min: f64,
    pub steering_class: SteeringClass,
}

impl Measures {
    pub fn from_covariance(v: &CovarianceMatrix) -> Result<Self> {
        let mm = v.reduce(&[Mode::Mirror1, Mode::Mirror2])?;
        let en_mm = log_negativity(&mm)?;
        let en_m1c = log_negativity(&v.reduce(&[Mode::Mirror1, Mode::Cavity])?)?;
        let en_m2c = log_negativity(&v.reduce(&[Mode::Mirror2, Mode::Cavity])?)?;
        let zeta_m1_m2 = steering(&mm, Mode::Mirror1)?;
        let zeta_m2_m1 = steering(&mm, Mode::Mirror2)?;
        let zeta = zeta_m1_m2.max(zeta_m2_m1);
        if zeta > HIERARCHY_TOL && en_mm <= 0.0 {
            return Err(Error::SolveFailure(format!(
                "steerable but separable mirror state (ζ = {zeta:e}, E_N = {en_mm:e})"
            )));
        }
        Ok(Measures {
            en_mm,
            en_m1c,
            en_m2c,
            zeta_m1_m2,
            zeta_m2_m1,
            zeta_asym: steering_asymmetry(zeta_m1_m2, zeta_m2_m1),
            r_min: residual_contangle_min(v)?,
            steering_class: classify(zeta_m1_m2, zeta_m2_m1),
        })
    }
}

/// Everything computed at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Max Re λ(A), rad/s.
    pub stability_margin: f64,
    pub stable: bool,
    /// `None` exactly when the point is unstable.
    pub measures: Option<Measures>,
}

/// Stability check, Lyapunov solve and all measures for one model.
pub fn full_report(model: &LinearModel) -> Result<CorrelationReport> {
    report_from_matrices(&model.drift, &model.diffusion, model.rate_unit())
}

/// Like [`full_report`], but from raw drift/diffusion matrices in rad/s,
/// solved internally in units of `rate_unit`.
pub fn report_from_matrices(
    drift: &DMatrix<f64>,
    diffusion: &DMatrix<f64>,
    rate_unit: f64,
) -> Result<CorrelationReport> {
    let a = drift / rate_unit;
    let d = diffusion / rate_unit;
    let margin = linalg::max_real_part(&a)?;
    if margin >= 0.0 {
        return Ok(CorrelationReport {
            stability_margin: margin * rate_unit,
            stable: false,
            measures: None,
        });
    }
    let v = CovarianceMatrix::three_mode(linalg::solve_lyapunov(&a, &d)?)?;
    Ok(CorrelationReport {
        stability_margin: margin * rate_unit,
        stable: true,
        measures: Some(Measures::from_covariance(&v)?),
    })
}

/// Steady-state covariance of a stable model.
pub fn steady_covariance(model: &LinearModel) -> Result<CovarianceMatrix> {
    let unit = model.rate_unit();
    let v = linalg::solve_lyapunov(&(&model.drift / unit), &(&model.diffusion / unit))?;
    CovarianceMatrix::three_mode(v)
}
