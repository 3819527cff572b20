//! Physical parameters → linearised fluctuation dynamics.
//!
//! Quadrature ordering everywhere is `(δφ₁, δL_{z1}, δφ₂, δL_{z2}, δX, δY)`:
//! angle and angular momentum of each rotating mirror, then the amplitude
//! and phase quadratures of the cavity field. All rates are angular
//! frequencies in rad/s.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{C, HBAR, K_B};
use crate::error::{Error, Result};
use crate::linalg;

/// Raw physical inputs, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Cavity length, m.
    pub cavity_length: f64,
    /// Mass of each rotating mirror, kg.
    pub mirror_mass: f64,
    /// Radius of each rotating mirror, m.
    pub mirror_radius: f64,
    /// Left-mirror torsional frequency, rad/s.
    pub omega_phi1: f64,
    /// Right-mirror torsional frequency, rad/s.
    pub omega_phi2: f64,
    /// Input laser power, W.
    pub laser_power: f64,
    /// Laser wavelength, m.
    pub laser_wavelength: f64,
    /// Mechanical quality factor.
    pub quality_factor: f64,
    /// Optical finesse.
    pub finesse: f64,
    /// Topological charge of the Laguerre-Gaussian mode.
    pub oam_number: u32,
    /// Bath temperature, K.
    pub temperature: f64,
    /// Parametric gain χ, rad/s.
    pub opa_gain: f64,
    /// Parametric pump phase θ, rad.
    pub opa_phase: f64,
    /// Effective cavity detuning Δ, rad/s.
    pub detuning: f64,
    /// Replaces the finesse-derived cavity decay rate when set, rad/s.
    pub kappa_override: Option<f64>,
}

impl SystemParams {
    /// Reference parameter set: 1 mm cavity, 35 ng / 10 μm mirrors at
    /// ω_φ1 = 2π × 10 MHz, 50 mW at 810 nm, Q = 2×10⁷, F = 5×10³, l = 100,
    /// T = 15 mK.
    ///
    /// Values not fixed by that set: ω_φ2 = 1.5 ω_φ1, no parametric gain,
    /// Δ = +ω_φ1.
    pub fn table1() -> Self {
        let omega_phi1 = TAU * 1.0e7;
        SystemParams {
            cavity_length: 1.0e-3,
            mirror_mass: 35.0e-12,
            mirror_radius: 10.0e-6,
            omega_phi1,
            omega_phi2: 1.5 * omega_phi1,
            laser_power: 50.0e-3,
            laser_wavelength: 810.0e-9,
            quality_factor: 2.0e7,
            finesse: 5.0e3,
            oam_number: 100,
            temperature: 15.0e-3,
            opa_gain: 0.0,
            opa_phase: 0.0,
            detuning: omega_phi1,
            kappa_override: None,
        }
    }

    /// Checks every field and reduces the pump phase into `[0, 2π)`.
    pub fn validated(mut self) -> Result<Self> {
        let positive = [
            ("cavity_length", self.cavity_length),
            ("mirror_mass", self.mirror_mass),
            ("mirror_radius", self.mirror_radius),
            ("omega_phi1", self.omega_phi1),
            ("omega_phi2", self.omega_phi2),
            ("laser_power", self.laser_power),
            ("laser_wavelength", self.laser_wavelength),
            ("quality_factor", self.quality_factor),
            ("finesse", self.finesse),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveParameter { field, value });
            }
        }
        if self.oam_number == 0 {
            return Err(Error::NonPositiveParameter {
                field: "oam_number",
                value: 0.0,
            });
        }
        for (field, value) in [("temperature", self.temperature), ("opa_gain", self.opa_gain)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and non-negative (got {value})"),
                });
            }
        }
        for (field, value) in [("opa_phase", self.opa_phase), ("detuning", self.detuning)] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite (got {value})"),
                });
            }
        }
        if let Some(kappa) = self.kappa_override {
            if !(kappa.is_finite() && kappa > 0.0) {
                return Err(Error::NonPositiveParameter {
                    field: "kappa_override",
                    value: kappa,
                });
            }
        }
        self.opa_phase = self.opa_phase.rem_euclid(TAU);
        if self.opa_phase >= TAU {
            self.opa_phase = 0.0;
        }
        Ok(self)
    }
}

/// Rates and constants computed from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    /// Cavity amplitude decay rate κ, rad/s.
    pub kappa: f64,
    /// Mechanical damping γ_m = ω_φ1 / Q, rad/s.
    pub gamma_m: f64,
    /// Moment of inertia mR²/2, kg·m².
    pub inertia: f64,
    /// Single-photon optorotational couplings g₁, g₂, rad/s.
    pub coupling: [f64; 2],
    /// Mean thermal phonon numbers n̄₁, n̄₂.
    pub thermal_occupation: [f64; 2],
    /// Drive amplitude E, rad/s·√photon.
    pub drive_amplitude: f64,
    /// Laser angular frequency ω_L, rad/s.
    pub laser_freq: f64,
    pub params: SystemParams,
}

/// Mean thermal occupation `1/(e^{ħω/k_BT} − 1)`; zero at T = 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * temperature)).exp_m1()
}

pub fn derive(params: &SystemParams) -> Result<DerivedParams> {
    let p = params.validated()?;
    let kappa = p
        .kappa_override
        .unwrap_or(PI * C / (2.0 * p.finesse * p.cavity_length));
    let gamma_m = p.omega_phi1 / p.quality_factor;
    let inertia = p.mirror_mass * p.mirror_radius * p.mirror_radius / 2.0;
    let torque = C * f64::from(p.oam_number) / p.cavity_length;
    let coupling = [
        torque * (HBAR / (inertia * p.omega_phi1)).sqrt(),
        torque * (HBAR / (inertia * p.omega_phi2)).sqrt(),
    ];
    let thermal_occupation = [
        thermal_occupation(p.omega_phi1, p.temperature),
        thermal_occupation(p.omega_phi2, p.temperature),
    ];
    let laser_freq = TAU * C / p.laser_wavelength;
    let drive_amplitude = (2.0 * kappa * p.laser_power / (HBAR * laser_freq)).sqrt();
    Ok(DerivedParams {
        kappa,
        gamma_m,
        inertia,
        coupling,
        thermal_occupation,
        drive_amplitude,
        laser_freq,
        params: p,
    })
}

/// Classical mean values about which the dynamics is linearised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    /// Intracavity amplitude a₀.
    pub a0: Complex64,
    /// Static mirror angles φ₁₀, φ₂₀.
    pub phi0: [f64; 2],
    /// Effective couplings G_j = √2 g_j |a₀|, rad/s.
    pub effective_coupling: [f64; 2],
    /// Effective detuning Δ, rad/s.
    pub detuning: f64,
}

pub fn steady_state(derived: &DerivedParams) -> SteadyState {
    let p = &derived.params;
    let (kappa, delta, chi) = (derived.kappa, p.detuning, p.opa_gain);
    let pump = Complex64::from_polar(1.0, p.opa_phase);
    let a0 = (Complex64::new(kappa, -delta) + pump * (2.0 * chi)) * derived.drive_amplitude
        / (kappa * kappa + delta * delta + 4.0 * chi * chi);
    let n_photon = a0.norm_sqr();
    // signed couplings: −g₁ for the left mirror, +g₂ for the right
    let phi0 = [
        -derived.coupling[0] * n_photon / p.omega_phi1,
        derived.coupling[1] * n_photon / p.omega_phi2,
    ];
    let amplitude = a0.norm();
    SteadyState {
        a0,
        phi0,
        effective_coupling: [
            2f64.sqrt() * derived.coupling[0] * amplitude,
            2f64.sqrt() * derived.coupling[1] * amplitude,
        ],
        detuning: delta,
    }
}

pub fn build_drift(steady: &SteadyState, derived: &DerivedParams) -> DMatrix<f64> {
    let p = &derived.params;
    let (w1, w2, gm) = (p.omega_phi1, p.omega_phi2, derived.gamma_m);
    let [g1, g2] = steady.effective_coupling;
    let (chi, theta, delta) = (p.opa_gain, p.opa_phase, steady.detuning);
    let mu_plus = -derived.kappa + 2.0 * chi * theta.cos();
    let mu_minus = -derived.kappa - 2.0 * chi * theta.cos();
    let rho_plus = delta + 2.0 * chi * theta.sin();
    let rho_minus = -delta + 2.0 * chi * theta.sin();
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(6, 6, &[
        0.0, w1,  0.0, 0.0, 0.0,       0.0,
        -w1, -gm, 0.0, 0.0, -g1,       0.0,
        0.0, 0.0, 0.0, w2,  0.0,       0.0,
        0.0, 0.0, -w2, -gm, g2,        0.0,
        0.0, 0.0, 0.0, 0.0, mu_plus,   rho_plus,
        -g1, 0.0, g2,  0.0, rho_minus, mu_minus,
    ]);
    a
}

pub fn build_diffusion(derived: &DerivedParams) -> DMatrix<f64> {
    let [n1, n2] = derived.thermal_occupation;
    let gm = derived.gamma_m;
    let k = derived.kappa;
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[
        0.0,
        gm * (2.0 * n1 + 1.0),
        0.0,
        gm * (2.0 * n2 + 1.0),
        k,
        k,
    ]))
}

/// Largest real part of the spectrum of `a`; the system is stable iff this
/// is strictly negative.
pub fn stability_margin(a: &DMatrix<f64>) -> Result<f64> {
    linalg::max_real_part(a)
}

/// Drift and diffusion matrices with the steady state they linearise about.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    pub steady: SteadyState,
    pub derived: DerivedParams,
}

impl LinearModel {
    pub fn new(params: &SystemParams) -> Result<Self> {
        Ok(Self::from_derived(derive(params)?))
    }

    pub fn from_derived(derived: DerivedParams) -> Self {
        let steady = steady_state(&derived);
        LinearModel {
            drift: build_drift(&steady, &derived),
            diffusion: build_diffusion(&derived),
            steady,
            derived,
        }
    }

    /// ω_φ1, the unit all user-facing rates are expressed in.
    pub fn rate_unit(&self) -> f64 {
        self.derived.params.omega_phi1
    }
}
