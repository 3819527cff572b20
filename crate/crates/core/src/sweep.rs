//! Parameter grids over [`full_report`], figure presets and the optimum
//! detuning search.
//!
//! Axis values are stored in user units: frequencies as ratios to ω_φ1,
//! phases in radians, temperature in kelvin and power in watts.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{C, HBAR, K_B};
use crate::error::{Error, Result};
use crate::measures::{full_report, CorrelationReport};
use crate::model::{LinearModel, SystemParams};

/// Points per 1-D axis in the presets.
pub const GRID_1D: usize = 401;
/// Points per axis of 2-D presets.
pub const GRID_2D: usize = 101;
/// Bracket width at which the golden-section refinement stops, in ω_φ1.
pub const DETUNING_TOL: f64 = 1e-3;

/// The closed set of sweepable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Detuning,
    OpaGain,
    OpaPhase,
    Temperature,
    OmegaPhi2,
    LaserPower,
}

impl Parameter {
    pub const ALL: [Parameter; 6] = [
        Parameter::Detuning,
        Parameter::OpaGain,
        Parameter::OpaPhase,
        Parameter::Temperature,
        Parameter::OmegaPhi2,
        Parameter::LaserPower,
    ];

    /// Column header in result files.
    pub fn column(self) -> &'static str {
        match self {
            Parameter::Detuning => "delta_ratio",
            Parameter::OpaGain => "chi_ratio",
            Parameter::OpaPhase => "theta_rad",
            Parameter::Temperature => "temperature_k",
            Parameter::OmegaPhi2 => "omega_phi2_ratio",
            Parameter::LaserPower => "laser_power_w",
        }
    }

    pub fn from_column(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.column() == name)
    }

    /// Write `value` (user units) into `params`.
    pub fn apply(self, params: &mut SystemParams, value: f64) {
        let w1 = params.omega_phi1;
        match self {
            Parameter::Detuning => params.detuning = value * w1,
            Parameter::OpaGain => params.opa_gain = value * w1,
            Parameter::OpaPhase => params.opa_phase = value,
            Parameter::Temperature => params.temperature = value,
            Parameter::OmegaPhi2 => params.omega_phi2 = value * w1,
            Parameter::LaserPower => params.laser_power = value,
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Parameter::Detuning => "detuning",
            Parameter::OpaGain => "opa_gain",
            Parameter::OpaPhase => "opa_phase",
            Parameter::Temperature => "temperature",
            Parameter::OmegaPhi2 => "omega_phi2",
            Parameter::LaserPower => "laser_power",
        };
        f.write_str(name)
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.to_string() == s || p.column() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("`{s}` is not a sweepable parameter")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub parameter: Parameter,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(parameter: Parameter, values: Vec<f64>) -> Self {
        Axis { parameter, values }
    }

    pub fn linspace(parameter: Parameter, start: f64, end: f64, n: usize) -> Self {
        Axis::new(parameter, linspace(start, end, n))
    }

    fn validate(&self) -> Result<()> {
        let name = self.parameter;
        if self.values.is_empty() {
            return Err(Error::InvalidSpec(format!("{name} axis is empty")));
        }
        if let Some(x) = self.values.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec(format!("{name} axis contains {x}")));
        }
        let increasing = self.values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.values.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidSpec(format!("{name} axis is not strictly monotone")));
        }
        Ok(())
    }
}

/// `n` evenly spaced values with both endpoints exact.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    end
                } else {
                    start + (end - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// `n` log-spaced values from `start` to `end`, endpoints exact.
pub fn logspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    let (a, b) = (start.log10(), end.log10());
    let mut out: Vec<f64> = linspace(a, b, n).into_iter().map(|e| 10f64.powf(e)).collect();
    if let (Some(first), true) = (out.first_mut(), n > 0) {
        *first = start;
    }
    if let Some(last) = out.last_mut().filter(|_| n > 1) {
        *last = end;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: SystemParams,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
}

impl SweepSpec {
    pub fn one_d(base: SystemParams, axis: Axis) -> Self {
        SweepSpec {
            base,
            axis1: axis,
            axis2: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validated()?;
        self.axis1.validate()?;
        if let Some(axis2) = &self.axis2 {
            axis2.validate()?;
            if axis2.parameter == self.axis1.parameter {
                return Err(Error::InvalidSpec(format!(
                    "both axes sweep {}",
                    self.axis1.parameter
                )));
            }
        }
        Ok(())
    }

    pub fn axes(&self) -> impl Iterator<Item = &Axis> {
        std::iter::once(&self.axis1).chain(self.axis2.as_ref())
    }

    pub fn len(&self) -> usize {
        self.axis1.values.len() * self.axis2.as_ref().map_or(1, |a| a.values.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of grid point `index` in row order.
    pub fn coordinates(&self, index: usize) -> Vec<f64> {
        match &self.axis2 {
            None => vec![self.axis1.values[index]],
            Some(a2) => {
                let n2 = a2.values.len();
                vec![self.axis1.values[index / n2], a2.values[index % n2]]
            }
        }
    }

    /// Base parameters with the given coordinates applied.
    pub fn params_at(&self, coords: &[f64]) -> SystemParams {
        let mut p = self.base;
        for (axis, &x) in self.axes().zip(coords) {
            axis.parameter.apply(&mut p, x);
        }
        p
    }
}

/// Outcome at one grid point. Errors are kept as their message so that a
/// result file round-trips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub coords: Vec<f64>,
    pub report: std::result::Result<CorrelationReport, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// Seconds since the Unix epoch when the sweep finished.
    pub timestamp: u64,
    pub code_version: String,
    pub hbar: f64,
    pub k_b: f64,
    pub speed_of_light: f64,
    /// ω_φ1 in rad/s, the unit of every `_ratio` column.
    pub omega_phi1: f64,
}

impl Metadata {
    pub fn now(omega_phi1: f64) -> Self {
        Metadata {
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            hbar: HBAR,
            k_b: K_B,
            speed_of_light: C,
            omega_phi1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub metadata: Metadata,
}

/// Evaluate one parameter point.
pub fn evaluate(params: &SystemParams) -> Result<CorrelationReport> {
    full_report(&LinearModel::new(params)?)
}

fn evaluate_row(spec: &SweepSpec, index: usize) -> SweepRow {
    let coords = spec.coordinates(index);
    let report = evaluate(&spec.params_at(&coords)).map_err(|e| {
        let label = spec
            .axes()
            .zip(&coords)
            .map(|(a, x)| format!("{}={x}", a.parameter.column()))
            .collect::<Vec<_>>()
            .join(", ");
        e.at(label).to_string()
    });
    SweepRow { coords, report }
}

/// Evaluate every grid point on `parallelism` threads. Rows come back in
/// grid order whatever the schedule.
pub fn run_sweep(spec: &SweepSpec, parallelism: usize) -> Result<SweepResult> {
    spec.validate()?;
    if parallelism == 0 {
        return Err(Error::InvalidSpec("parallelism must be at least 1".into()));
    }
    let rows = if parallelism == 1 {
        (0..spec.len()).map(|i| evaluate_row(spec, i)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::InvalidSpec(format!("cannot start worker pool: {e}")))?;
        pool.install(|| {
            (0..spec.len())
                .into_par_iter()
                .map(|i| evaluate_row(spec, i))
                .collect()
        })
    };
    Ok(SweepResult {
        spec: spec.clone(),
        rows,
        metadata: Metadata::now(spec.base.omega_phi1),
    })
}

/// Measure maximised by [`optimum_detuning`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Mirror–mirror negativity.
    EnMm,
    /// Mirror 1–cavity negativity.
    EnMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    /// Δ*/ω_φ1.
    pub delta_ratio: f64,
    pub value: f64,
    /// Objective constant over the stable part of the grid; `delta_ratio`
    /// is then the smallest stable grid point.
    pub flat: bool,
}

fn objective_at(base: &SystemParams, objective: Objective, delta_ratio: f64) -> Option<f64> {
    let mut p = *base;
    Parameter::Detuning.apply(&mut p, delta_ratio);
    let m = evaluate(&p).ok()?.measures?;
    Some(match objective {
        Objective::EnMm => m.en_mm,
        Objective::EnMc => m.en_m1c,
    })
}

/// Argmax of `objective` over Δ ∈ [−2, 2]ω_φ1 on a 401-point grid, refined
/// by golden-section search on the neighbouring grid cells.
pub fn optimum_detuning(base: &SystemParams, objective: Objective) -> Result<Optimum> {
    base.validated()?;
    let grid = linspace(-2.0, 2.0, GRID_1D);
    let values: Vec<Option<f64>> = grid.iter().map(|&d| objective_at(base, objective, d)).collect();

    let mut best: Option<(usize, f64)> = None;
    let mut lowest = f64::INFINITY;
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = *v {
            lowest = lowest.min(v);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    let (i, peak) = best.ok_or(Error::NoStableRegion)?;
    if peak == lowest {
        return Ok(Optimum {
            delta_ratio: grid[i],
            value: peak,
            flat: true,
        });
    }

    let f = |d: f64| objective_at(base, objective, d).unwrap_or(f64::NEG_INFINITY);
    let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > DETUNING_TOL {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    let (x, fx) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    Ok(if fx > peak {
        Optimum {
            delta_ratio: x,
            value: fx,
            flat: false,
        }
    } else {
        Optimum {
            delta_ratio: grid[i],
            value: peak,
            flat: false,
        }
    })
}

/// One output file of a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetVariant {
    /// Appended to the output file stem, e.g. `chi0.1_theta0.5pi`; empty for
    /// single-variant presets.
    pub suffix: String,
    pub spec: SweepSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub variants: Vec<PresetVariant>,
}

/// Every preset name with a one-line description.
pub const PRESETS: [(&str, &str); 19] = [
    ("fig2a", "mirror-mirror negativity vs detuning, OPA off and on"),
    ("fig2b", "mirror-cavity negativity vs detuning, OPA off and on"),
    ("fig3", "mirror-mirror negativity over OPA gain and phase at optimum detuning"),
    ("fig4", "mirror-mirror negativity vs temperature at optimum detuning"),
    ("fig5", "residual contangle vs detuning, OPA off and on"),
    ("fig6a", "steering vs detuning, omega_phi2 = 0.5 omega_phi1, no OPA"),
    ("fig6b", "steering vs detuning, omega_phi2 = 1.5 omega_phi1, no OPA"),
    ("fig7a", "steering vs detuning, omega_phi2 = 0.9 omega_phi1"),
    ("fig7b", "steering vs detuning, omega_phi2 = 0.95 omega_phi1"),
    ("fig7c", "steering vs detuning, omega_phi2 = 1.05 omega_phi1"),
    ("fig7d", "steering vs detuning, omega_phi2 = 1.1 omega_phi1"),
    ("fig8a", "steering vs OPA gain, omega_phi2 = 0.5, theta = 0"),
    ("fig8b", "steering vs OPA gain, omega_phi2 = 0.5, theta = pi/2"),
    ("fig8c", "steering vs OPA gain, omega_phi2 = 0.5, theta = pi"),
    ("fig8d", "steering vs OPA gain, omega_phi2 = 0.5, theta = 3pi/2"),
    ("fig8e", "steering vs OPA gain, omega_phi2 = 1.5, theta = 0"),
    ("fig8f", "steering vs OPA gain, omega_phi2 = 1.5, theta = pi/2"),
    ("fig8g", "steering vs OPA gain, omega_phi2 = 1.5, theta = pi"),
    ("fig8h", "steering vs OPA gain, omega_phi2 = 1.5, theta = 3pi/2"),
];

/// The four pump phases of the OPA-on curves, as multiples of π.
const PHASES: [f64; 4] = [0.0, 0.5, 1.0, 1.5];
/// OPA gain of the OPA-on curves, in ω_φ1.
const OPA_ON: f64 = 0.1;

fn with(base: SystemParams, chi: f64, theta: f64) -> SystemParams {
    let mut p = base;
    Parameter::OpaGain.apply(&mut p, chi);
    Parameter::OpaPhase.apply(&mut p, theta);
    p
}

/// `chi0` plus `chi0.1_theta{k}pi` for each pump phase.
fn opa_variants(base: SystemParams) -> Vec<(String, SystemParams)> {
    let mut out = vec![("chi0".to_string(), with(base, 0.0, 0.0))];
    for k in PHASES {
        out.push((format!("chi{OPA_ON}_theta{k}pi"), with(base, OPA_ON, k * PI)));
    }
    out
}

fn detuning_axis() -> Axis {
    Axis::linspace(Parameter::Detuning, -2.0, 2.0, GRID_1D)
}

fn at_optimum(mut base: SystemParams) -> Result<SystemParams> {
    let opt = optimum_detuning(&base, Objective::EnMm)?;
    Parameter::Detuning.apply(&mut base, opt.delta_ratio);
    Ok(base)
}

/// Build the sweep(s) behind a figure preset.
pub fn preset(name: &str) -> Result<Preset> {
    let (name, description) = PRESETS
        .iter()
        .copied()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    let table1 = SystemParams::table1();
    let single = |spec| vec![PresetVariant { suffix: String::new(), spec }];
    let variants = match name {
        "fig2a" | "fig2b" | "fig5" => opa_variants(table1)
            .into_iter()
            .map(|(suffix, base)| PresetVariant {
                suffix,
                spec: SweepSpec::one_d(base, detuning_axis()),
            })
            .collect(),
        "fig3" => single(SweepSpec {
            base: at_optimum(table1)?,
            axis1: Axis::linspace(Parameter::OpaGain, 0.0, 0.2, GRID_2D),
            axis2: Some(Axis::linspace(Parameter::OpaPhase, 0.0, 2.0 * PI, GRID_2D)),
        }),
        "fig4" => opa_variants(table1)
            .into_iter()
            .map(|(suffix, base)| {
                Ok(PresetVariant {
                    suffix,
                    spec: SweepSpec::one_d(
                        at_optimum(base)?,
                        Axis::new(Parameter::Temperature, logspace(1e-3, 1.0, GRID_1D)),
                    ),
                })
            })
            .collect::<Result<_>>()?,
        _ if name.starts_with("fig6") || name.starts_with("fig7") => {
            let ratio = match name {
                "fig6a" => 0.5,
                "fig6b" => 1.5,
                "fig7a" => 0.9,
                "fig7b" => 0.95,
                "fig7c" => 1.05,
                _ => 1.1,
            };
            let mut base = with(table1, 0.0, 0.0);
            Parameter::OmegaPhi2.apply(&mut base, ratio);
            single(SweepSpec::one_d(base, detuning_axis()))
        }
        _ => {
            let panel = (name.as_bytes()[4] - b'a') as usize;
            let ratio = if panel < 4 { 0.5 } else { 1.5 };
            let mut base = with(table1, 0.0, PHASES[panel % 4] * PI);
            Parameter::OmegaPhi2.apply(&mut base, ratio);
            single(SweepSpec::one_d(
                at_optimum(base)?,
                Axis::linspace(Parameter::OpaGain, 0.0, 0.2, GRID_1D),
            ))
        }
    };
    Ok(Preset {
        name,
        description,
        variants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive;

    fn table1_axis(values: Vec<f64>) -> SweepSpec {
        SweepSpec::one_d(SystemParams::table1(), Axis::new(Parameter::Detuning, values))
    }

    #[test]
    fn grids_have_exact_endpoints() {
        let g = linspace(-2.0, 2.0, 401);
        assert_eq!((g[0], g[200], g[400]), (-2.0, 0.0, 2.0));
        assert_eq!(g[100], -1.0);
        let t = logspace(1e-3, 1.0, 401);
        assert_eq!((t[0], t[400]), (1e-3, 1.0));
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        for values in [vec![], vec![0.0, f64::NAN], vec![0.0, 1.0, 0.5], vec![1.0, 1.0]] {
            assert!(matches!(run_sweep(&table1_axis(values), 1), Err(Error::InvalidSpec(_))));
        }
        let mut spec = table1_axis(vec![0.5]);
        spec.axis2 = Some(Axis::new(Parameter::Detuning, vec![1.0]));
        assert!(spec.validate().is_err());
        assert!("mirror_mass".parse::<Parameter>().is_err());
        assert_eq!("chi_ratio".parse::<Parameter>().unwrap(), Parameter::OpaGain);
    }

    #[test]
    fn single_point_matches_direct_evaluation() {
        let spec = table1_axis(vec![0.8]);
        let r = run_sweep(&spec, 1).unwrap();
        let mut p = SystemParams::table1();
        p.detuning = 0.8 * p.omega_phi1;
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].report, Ok(evaluate(&p).unwrap()));
        assert_eq!(r.rows[0].coords, vec![0.8]);
    }

    #[test]
    fn two_d_rows_are_row_major() {
        let spec = SweepSpec {
            base: SystemParams::table1(),
            axis1: Axis::new(Parameter::OpaGain, vec![0.0, 0.05, 0.1]),
            axis2: Some(Axis::new(Parameter::OpaPhase, vec![0.0, 1.0])),
        };
        let r = run_sweep(&spec, 2).unwrap();
        let coords: Vec<_> = r.rows.iter().map(|r| r.coords.clone()).collect();
        assert_eq!(
            coords,
            vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![0.05, 0.0],
                vec![0.05, 1.0],
                vec![0.1, 0.0],
                vec![0.1, 1.0]
            ]
        );
    }

    #[test]
    fn parallelism_does_not_change_rows() {
        let spec = table1_axis(linspace(-2.0, 2.0, 41));
        let a = run_sweep(&spec, 1).unwrap();
        let b = run_sweep(&spec, 4).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn masking_matches_margin_sign() {
        let r = run_sweep(&table1_axis(linspace(-2.0, 2.0, 81)), 1).unwrap();
        let mut seen = [false; 2];
        for row in &r.rows {
            let rep = row.report.as_ref().unwrap();
            assert_eq!(rep.stable, rep.stability_margin < 0.0);
            assert_eq!(rep.stable, rep.measures.is_some());
            seen[rep.stable as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn per_row_errors_do_not_abort_the_grid() {
        let spec = SweepSpec::one_d(
            SystemParams::table1(),
            Axis::new(Parameter::Temperature, vec![-1.0, 0.015]),
        );
        let r = run_sweep(&spec, 1).unwrap();
        let err = r.rows[0].report.as_ref().unwrap_err();
        assert!(err.contains("temperature_k=-1"), "{err}");
        assert!(r.rows[1].report.is_ok());
    }

    #[test]
    fn gain_sweep_crosses_into_instability() {
        // margin at the boundary found by bisection on the margin itself
        let mut base = SystemParams::table1();
        base.opa_phase = PI / 2.0;
        let margin = |chi: f64| {
            let mut p = base;
            p.opa_gain = chi * p.omega_phi1;
            let m = LinearModel::new(&p).unwrap();
            crate::linalg::max_real_part(&m.drift).unwrap()
        };
        let (mut lo, mut hi) = (0.0, 2.0);
        assert!(margin(lo) < 0.0 && margin(hi) >= 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if margin(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let spec = SweepSpec::one_d(base, Axis::linspace(Parameter::OpaGain, 0.0, 2.0, 201));
        for row in run_sweep(&spec, 1).unwrap().rows {
            let rep = row.report.unwrap();
            assert_eq!(rep.stable, row.coords[0] <= lo, "chi = {}", row.coords[0]);
        }
    }

    #[test]
    fn optimum_of_mirror_cavity_negativity_is_on_red_side() {
        let opt = optimum_detuning(&SystemParams::table1(), Objective::EnMc).unwrap();
        assert!(!opt.flat);
        assert!(opt.delta_ratio > 0.0, "{opt:?}");
        // refinement can only improve on the grid
        let grid_best = linspace(-2.0, 2.0, GRID_1D)
            .into_iter()
            .filter_map(|d| objective_at(&SystemParams::table1(), Objective::EnMc, d))
            .fold(0.0, f64::max);
        assert!(opt.value >= grid_best);
        let again = optimum_detuning(&SystemParams::table1(), Objective::EnMc).unwrap();
        assert_eq!(opt, again);
    }

    #[test]
    fn undriven_objective_is_flat() {
        let mut base = SystemParams::table1();
        base.laser_power = 1e-300;
        assert!(derive(&base).unwrap().drive_amplitude < 1e-100);
        let opt = optimum_detuning(&base, Objective::EnMc).unwrap();
        assert!(opt.flat);
        assert_eq!(opt.value, 0.0);
        assert_eq!(opt.delta_ratio, -2.0);
    }

    #[test]
    fn presets_carry_the_figure_parameters() {
        let w1 = SystemParams::table1().omega_phi1;
        let p = preset("fig6a").unwrap();
        let spec = &p.variants[0].spec;
        assert_eq!(spec.base.omega_phi2, 0.5 * w1);
        assert_eq!(spec.base.opa_gain, 0.0);
        assert_eq!(spec.axis1.parameter, Parameter::Detuning);
        assert_eq!(preset("fig7b").unwrap().variants[0].spec.base.omega_phi2, 0.95 * w1);
        assert!(matches!(preset("fig9"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn fig2a_chi0_matches_hand_built_spec() {
        let p = preset("fig2a").unwrap();
        let suffixes: Vec<_> = p.variants.iter().map(|v| v.suffix.as_str()).collect();
        assert_eq!(
            suffixes,
            ["chi0", "chi0.1_theta0pi", "chi0.1_theta0.5pi", "chi0.1_theta1pi", "chi0.1_theta1.5pi"]
        );
        let mut base = SystemParams::table1();
        base.opa_gain = 0.0;
        base.opa_phase = 0.0;
        let hand = SweepSpec {
            base,
            axis1: Axis {
                parameter: Parameter::Detuning,
                values: linspace(-2.0, 2.0, 401),
            },
            axis2: None,
        };
        assert_eq!(p.variants[0].spec, hand);
        assert_eq!(p.variants[3].spec.base.opa_phase, PI);
    }

    #[test]
    fn every_preset_builds() {
        for (name, _) in PRESETS {
            let p = preset(name).unwrap();
            for v in &p.variants {
                v.spec.validate().unwrap();
            }
        }
        let fig3 = preset("fig3").unwrap();
        assert_eq!(fig3.variants[0].spec.len(), 101 * 101);
    }
}
