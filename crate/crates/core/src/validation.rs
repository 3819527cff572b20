//! Independent oracles for the steady-state pipeline and the self-check
//! suite behind `lgcavity verify`.
//!
//! The oracles deliberately take different routes from [`crate::linalg`]:
//! the Lyapunov equation is vectorised into a dense 36×36 (for n = 6) linear
//! system and solved by LU, and the covariance ODE is integrated in time.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, min_pt_symplectic, CovarianceMatrix, Mode, SymplecticForm};
use crate::measures::{log_negativity, renyi2_entropy, steering};

/// Number of random systems in the oracle cross-check.
pub const RANDOM_SYSTEMS: usize = 200;
/// Agreement between Lyapunov routes, relative to `max(1, ‖V‖_max)`.
pub const ORACLE_TOL: f64 = 1e-6;

/// Solve `A V + V Aᵀ = −D` through `(I ⊗ A + A ⊗ I) vec V = −vec D`.
pub fn lyapunov_oracle(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || d.shape() != (n, n) {
        return Err(Error::BadShape("A and D must be square and of equal size".into()));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -DMatrix::from_column_slice(n * n, 1, d.as_slice());
    let lu = k.lu();
    let u = lu.u();
    let scale = u.amax();
    let smallest = u.diagonal().iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if smallest <= 1e-13 * scale {
        return Err(Error::SingularSystem);
    }
    let x = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    let mut v = DMatrix::from_column_slice(n, n, x.as_slice());
    let vt = v.transpose();
    v = (v + vt) * 0.5;
    Ok(v)
}

/// Fixed-step RK4 integration of `V̇ = A V + V Aᵀ + D` from `v0` to `t_end`.
pub fn integrate_covariance(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    v0: &DMatrix<f64>,
    t_end: f64,
    dt: f64,
) -> Result<DMatrix<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "dt",
            reason: format!("must be positive (got {dt})"),
        });
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "t_end",
            reason: format!("must be non-negative (got {t_end})"),
        });
    }
    let at = a.transpose();
    let rhs = |v: &DMatrix<f64>| a * v + v * &at + d;
    let mut v = v0.clone();
    let mut t = 0.0;
    while t < t_end {
        let h = dt.min(t_end - t);
        let k1 = rhs(&v);
        let k2 = rhs(&(&v + &k1 * (h / 2.0)));
        let k3 = rhs(&(&v + &k2 * (h / 2.0)));
        let k4 = rhs(&(&v + &k3 * h));
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let vt = v.transpose();
        v = (&v + vt) * 0.5;
        t += h;
        let worst = v.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) });
        if worst > 1e12 {
            return Err(Error::StepOverflow { t, value: worst });
        }
    }
    Ok(v)
}

/// Step size that keeps RK4 inside its stability region for this `A`.
pub fn stable_step(a: &DMatrix<f64>) -> Result<f64> {
    let radius = linalg::eigenvalues(a)?
        .iter()
        .fold(0.0_f64, |m, l| m.max(l.norm()));
    Ok(0.5 / radius.max(1e-12))
}

/// Analytic reference states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceKind {
    /// Vacuum on 1–3 modes.
    Vacuum(usize),
    /// Single-mode thermal state with the given mean occupation.
    Thermal(f64),
    /// Two-mode squeezed vacuum with squeezing parameter r.
    Tmsv(f64),
}

#[derive(Debug, Clone)]
pub struct ReferenceState {
    pub kind: ReferenceKind,
    pub cm: CovarianceMatrix,
    /// Closed-form value of each applicable measure, keyed by name
    /// (`log_negativity`, `steering`, `renyi2`).
    pub expected: BTreeMap<&'static str, f64>,
}

pub fn reference(kind: ReferenceKind) -> ReferenceState {
    let mut expected = BTreeMap::new();
    let cm = match kind {
        ReferenceKind::Vacuum(m) => {
            let m = m.clamp(1, 3);
            expected.insert("renyi2", 0.0);
            if m == 2 {
                expected.insert("log_negativity", 0.0);
                expected.insert("steering", 0.0);
            }
            CovarianceMatrix::new(DMatrix::identity(2 * m, 2 * m) * 0.5, Mode::ALL[..m].to_vec())
        }
        ReferenceKind::Thermal(n) => {
            expected.insert("renyi2", (2.0 * n + 1.0).ln());
            CovarianceMatrix::new(DMatrix::identity(2, 2) * (n + 0.5), vec![Mode::Cavity])
        }
        ReferenceKind::Tmsv(r) => {
            let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
            expected.insert("log_negativity", 2.0 * r);
            expected.insert("steering", (2.0 * r).cosh().ln());
            expected.insert("renyi2", 0.0);
            #[rustfmt::skip]
            let data = DMatrix::from_row_slice(4, 4, &[
                c,   0.0, s,   0.0,
                0.0, c,   0.0, -s,
                s,   0.0, c,   0.0,
                0.0, -s,  0.0, c,
            ]);
            CovarianceMatrix::new(data, vec![Mode::Mirror1, Mode::Mirror2])
        }
    }
    .expect("reference matrices are well formed");
    ReferenceState { kind, cm, expected }
}

/// Seeded generator of the random test systems used by the oracle checks.
pub struct RandomSystems {
    rng: ChaCha8Rng,
}

impl RandomSystems {
    pub fn new(seed: u64) -> Self {
        RandomSystems {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// `M − (max Re λ(M) + 0.5) I` with `M` uniform on `[−1, 1]`, so the
    /// stability margin is exactly −0.5.
    pub fn stable_drift(&mut self, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| self.rng.gen_range(-1.0..1.0));
        let shift = linalg::max_real_part(&m).expect("uniform matrices converge") + 0.5;
        m - DMatrix::<f64>::identity(n, n) * shift
    }

    /// `B Bᵀ` with `B` uniform on `[−1, 1]`.
    pub fn psd(&mut self, n: usize) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |_, _| self.rng.gen_range(-1.0..1.0));
        &b * b.transpose()
    }

    /// `exp(Ω H)` for a random symmetric `H`, a symplectic matrix.
    pub fn symplectic(&mut self, modes: usize, strength: f64) -> DMatrix<f64> {
        let n = 2 * modes;
        let mut h = DMatrix::from_fn(n, n, |_, _| self.rng.gen_range(-strength..strength));
        h = (&h + h.transpose()) * 0.5;
        (SymplecticForm::new(modes).matrix() * h).exp()
    }

    /// Physical state `S diag(ν₁,ν₁,…) Sᵀ` with random `νₖ ≥ 1/2`.
    pub fn physical_cm(&mut self, modes: usize) -> (CovarianceMatrix, Vec<f64>) {
        let nus: Vec<f64> = (0..modes).map(|_| 0.5 + self.rng.gen_range(0.0..2.0)).collect();
        let diag = DMatrix::from_fn(2 * modes, 2 * modes, |i, j| if i == j { nus[i / 2] } else { 0.0 });
        let s = self.symplectic(modes, 0.6);
        let data = &s * diag * s.transpose();
        let cm = CovarianceMatrix::new(data, Mode::ALL[..modes].to_vec()).expect("square");
        (cm, nus)
    }
}

/// One line of the verification table.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            writeln!(
                f,
                "{}  {:width$}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

pub type LyapunovSolver<'a> = &'a dyn Fn(&DMatrix<f64>, &DMatrix<f64>) -> Result<DMatrix<f64>>;

/// Run every check with the production Lyapunov solver.
pub fn verify(seed: u64) -> VerifyReport {
    verify_with(seed, &linalg::solve_lyapunov)
}

/// Run every check against `solver`.
pub fn verify_with(seed: u64, solver: LyapunovSolver<'_>) -> VerifyReport {
    let mut checks = Vec::new();
    let mut gen = RandomSystems::new(seed);

    // Lyapunov solver against both oracles
    let mut worst_kron = 0.0_f64;
    let mut worst_ode = 0.0_f64;
    let mut worst_residual = 0.0_f64;
    let mut problems = Vec::new();
    for i in 0..RANDOM_SYSTEMS {
        let a = gen.stable_drift(6);
        let d = gen.psd(6);
        let got = match solver(&a, &d) {
            Ok(v) => v,
            Err(e) => {
                problems.push(format!("system {i}: {e}"));
                continue;
            }
        };
        let scale = got.amax().max(1.0);
        worst_residual = worst_residual
            .max(linalg::lyapunov_residual(&a, &got, &d).amax() / d.amax().max(1.0));
        match lyapunov_oracle(&a, &d) {
            Ok(v) => worst_kron = worst_kron.max((&got - v).amax() / scale),
            Err(e) => problems.push(format!("system {i}: oracle {e}")),
        }
        let ode = stable_step(&a).and_then(|dt| {
            integrate_covariance(&a, &d, &DMatrix::identity(6, 6), 50.0 / 0.5, dt)
        });
        match ode {
            Ok(v) => worst_ode = worst_ode.max((&got - v).amax() / scale),
            Err(e) => problems.push(format!("system {i}: integrator {e}")),
        }
    }
    let note = problems.first().cloned().unwrap_or_default();
    checks.push(CheckOutcome {
        name: "lyapunov-residual",
        passed: problems.is_empty() && worst_residual <= 1e-8,
        detail: format!("worst relative residual {worst_residual:.2e} over {RANDOM_SYSTEMS} systems {note}"),
    });
    checks.push(CheckOutcome {
        name: "lyapunov-vs-kronecker",
        passed: problems.is_empty() && worst_kron <= ORACLE_TOL,
        detail: format!("worst deviation {worst_kron:.2e}"),
    });
    checks.push(CheckOutcome {
        name: "lyapunov-vs-ode",
        passed: problems.is_empty() && worst_ode <= ORACLE_TOL,
        detail: format!("worst deviation {worst_ode:.2e}"),
    });

    checks.push(reference_check());

    // symplectic spectrum is invariant under S V Sᵀ and matches det V
    let mut worst_inv = 0.0_f64;
    let mut worst_det = 0.0_f64;
    let mut worst_closed = 0.0_f64;
    let mut failed = None;
    for _ in 0..50 {
        let (v, nus) = gen.physical_cm(3);
        let s = gen.symplectic(3, 0.4);
        let moved = CovarianceMatrix::three_mode(&s * v.data() * s.transpose()).expect("square");
        let (a, b) = match (v.symplectic_eigenvalues(), moved.symplectic_eigenvalues()) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                failed = Some(e.to_string());
                break;
            }
        };
        let mut sorted = nus.clone();
        sorted.sort_by(f64::total_cmp);
        for ((x, y), z) in a.iter().zip(&b).zip(&sorted) {
            worst_inv = worst_inv.max((x - y).abs().max((x - z).abs()));
        }
        let prod: f64 = a.iter().map(|nu| nu * nu).product();
        worst_det = worst_det.max((v.determinant() - prod).abs() / prod);

        let two = v.reduce(&[Mode::Mirror1, Mode::Cavity]).expect("present");
        match (
            min_pt_symplectic(&two),
            two.partial_transpose(Mode::Cavity).and_then(|t| t.symplectic_eigenvalues()),
        ) {
            (Ok(c), Ok(s)) => worst_closed = worst_closed.max((c - s[0]).abs()),
            (Err(e), _) | (_, Err(e)) => {
                failed = Some(e.to_string());
                break;
            }
        }
    }
    let fail_note = failed.clone().unwrap_or_default();
    checks.push(CheckOutcome {
        name: "symplectic-invariance",
        passed: failed.is_none() && worst_inv <= 1e-8,
        detail: format!("worst deviation {worst_inv:.2e} {fail_note}"),
    });
    checks.push(CheckOutcome {
        name: "determinant-product",
        passed: failed.is_none() && worst_det <= 1e-8,
        detail: format!("worst relative deviation {worst_det:.2e}"),
    });
    checks.push(CheckOutcome {
        name: "closed-form-negativity",
        passed: failed.is_none() && worst_closed <= 1e-9,
        detail: format!("worst deviation {worst_closed:.2e}"),
    });

    VerifyReport { seed, checks }
}

fn reference_check() -> CheckOutcome {
    let mut worst = 0.0_f64;
    let mut error = None;
    let kinds = [
        ReferenceKind::Vacuum(1),
        ReferenceKind::Vacuum(2),
        ReferenceKind::Vacuum(3),
        ReferenceKind::Thermal(3.0),
        ReferenceKind::Thermal(0.25),
        ReferenceKind::Tmsv(0.25),
        ReferenceKind::Tmsv(0.5),
        ReferenceKind::Tmsv(1.0),
        ReferenceKind::Tmsv(2.0),
    ];
    for kind in kinds {
        let state = reference(kind);
        for (&name, &want) in &state.expected {
            let got = match name {
                "renyi2" => renyi2_entropy(&state.cm),
                "log_negativity" => log_negativity(&state.cm),
                _ => steering(&state.cm, Mode::Mirror1).and_then(|a| {
                    steering(&state.cm, Mode::Mirror2).map(|b| if (a - want).abs() > (b - want).abs() { a } else { b })
                }),
            };
            match got {
                Ok(g) => worst = worst.max((g - want).abs()),
                Err(e) => error = Some(format!("{kind:?} {name}: {e}")),
            }
        }
    }
    CheckOutcome {
        name: "reference-states",
        passed: error.is_none() && worst <= 1e-10,
        detail: format!("worst deviation {worst:.2e} {}", error.unwrap_or_default()),
    }
}
