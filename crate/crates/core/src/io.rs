//! Run configuration (TOML) and result files (CSV with an optional JSON
//! mirror).
//!
//! Every frequency in a config or result file is a ratio to ω_φ1, except
//! `omega_phi1_hz` itself, which is an ordinary frequency in Hz
//! (ω_φ1 = 2π·f).

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use toml::Table;

use crate::error::Error;
use crate::measures::{CorrelationReport, Measures, SteeringClass};
use crate::model::SystemParams;
use crate::sweep::{linspace, logspace, Axis, Metadata, Parameter, SweepResult, SweepSpec};

/// Failures while reading a configuration file. All map to exit code 2.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("unknown key `{key}` in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("`{key}` must be {expected}: {reason}")]
    BadUnit {
        key: String,
        expected: &'static str,
        reason: String,
    },
    #[error("missing required `{0}`")]
    MissingRequired(String),
    #[error(transparent)]
    Invalid(#[from] Error),
}

type ConfigResult<T> = std::result::Result<T, ConfigError>;

/// Physical parameters in file units. Absent keys take the reference
/// values of [`SystemParams::table1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub cavity_length_m: f64,
    pub mirror_mass_kg: f64,
    pub mirror_radius_m: f64,
    pub omega_phi1_hz: f64,
    pub omega_phi2_ratio: f64,
    pub laser_power_w: f64,
    pub laser_wavelength_m: f64,
    pub quality_factor: f64,
    pub finesse: f64,
    pub oam_number: u32,
    pub temperature_k: f64,
    pub opa_gain_ratio: f64,
    pub opa_phase_rad: f64,
    pub detuning_ratio: f64,
    pub kappa_override_ratio: Option<f64>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let p = SystemParams::table1();
        SystemConfig {
            cavity_length_m: p.cavity_length,
            mirror_mass_kg: p.mirror_mass,
            mirror_radius_m: p.mirror_radius,
            omega_phi1_hz: 1.0e7,
            omega_phi2_ratio: 1.5,
            laser_power_w: p.laser_power,
            laser_wavelength_m: p.laser_wavelength,
            quality_factor: p.quality_factor,
            finesse: p.finesse,
            oam_number: p.oam_number,
            temperature_k: p.temperature,
            opa_gain_ratio: 0.0,
            opa_phase_rad: 0.0,
            detuning_ratio: 1.0,
            kappa_override_ratio: None,
        }
    }
}

/// `(key, expected unit/range, kind)` for every `[system]` key.
const SYSTEM_KEYS: [(&str, &str, Check); 15] = [
    ("cavity_length_m", "a positive length in metres", Check::Positive),
    ("mirror_mass_kg", "a positive mass in kilograms", Check::Positive),
    ("mirror_radius_m", "a positive radius in metres", Check::Positive),
    ("omega_phi1_hz", "a positive frequency in Hz", Check::Positive),
    ("omega_phi2_ratio", "a positive multiple of omega_phi1", Check::Positive),
    ("laser_power_w", "a positive power in watts", Check::Positive),
    ("laser_wavelength_m", "a positive wavelength in metres", Check::Positive),
    ("quality_factor", "a positive dimensionless number", Check::Positive),
    ("finesse", "a positive dimensionless number", Check::Positive),
    ("oam_number", "a positive integer", Check::Integer),
    ("temperature_k", "a non-negative temperature in kelvin", Check::NonNegative),
    ("opa_gain_ratio", "a non-negative multiple of omega_phi1", Check::NonNegative),
    ("opa_phase_rad", "a finite phase in radians", Check::Finite),
    ("detuning_ratio", "a finite multiple of omega_phi1", Check::Finite),
    ("kappa_override_ratio", "a positive multiple of omega_phi1", Check::Positive),
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Check {
    Positive,
    NonNegative,
    Finite,
    Integer,
}

impl SystemConfig {
    /// SI parameters for the model.
    pub fn to_params(&self) -> crate::Result<SystemParams> {
        let w1 = TAU * self.omega_phi1_hz;
        SystemParams {
            cavity_length: self.cavity_length_m,
            mirror_mass: self.mirror_mass_kg,
            mirror_radius: self.mirror_radius_m,
            omega_phi1: w1,
            omega_phi2: self.omega_phi2_ratio * w1,
            laser_power: self.laser_power_w,
            laser_wavelength: self.laser_wavelength_m,
            quality_factor: self.quality_factor,
            finesse: self.finesse,
            oam_number: self.oam_number,
            temperature: self.temperature_k,
            opa_gain: self.opa_gain_ratio * w1,
            opa_phase: self.opa_phase_rad,
            detuning: self.detuning_ratio * w1,
            kappa_override: self.kappa_override_ratio.map(|k| k * w1),
        }
        .validated()
    }

    fn set(&mut self, key: &str, value: f64) {
        match key {
            "cavity_length_m" => self.cavity_length_m = value,
            "mirror_mass_kg" => self.mirror_mass_kg = value,
            "mirror_radius_m" => self.mirror_radius_m = value,
            "omega_phi1_hz" => self.omega_phi1_hz = value,
            "omega_phi2_ratio" => self.omega_phi2_ratio = value,
            "laser_power_w" => self.laser_power_w = value,
            "laser_wavelength_m" => self.laser_wavelength_m = value,
            "quality_factor" => self.quality_factor = value,
            "finesse" => self.finesse = value,
            "oam_number" => self.oam_number = value as u32,
            "temperature_k" => self.temperature_k = value,
            "opa_gain_ratio" => self.opa_gain_ratio = value,
            "opa_phase_rad" => self.opa_phase_rad = value,
            "detuning_ratio" => self.detuning_ratio = value,
            "kappa_override_ratio" => self.kappa_override_ratio = Some(value),
            _ => unreachable!("keys are checked against SYSTEM_KEYS"),
        }
    }

    fn entries(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("cavity_length_m", Some(self.cavity_length_m)),
            ("mirror_mass_kg", Some(self.mirror_mass_kg)),
            ("mirror_radius_m", Some(self.mirror_radius_m)),
            ("omega_phi1_hz", Some(self.omega_phi1_hz)),
            ("omega_phi2_ratio", Some(self.omega_phi2_ratio)),
            ("laser_power_w", Some(self.laser_power_w)),
            ("laser_wavelength_m", Some(self.laser_wavelength_m)),
            ("quality_factor", Some(self.quality_factor)),
            ("finesse", Some(self.finesse)),
            ("oam_number", Some(self.oam_number as f64)),
            ("temperature_k", Some(self.temperature_k)),
            ("opa_gain_ratio", Some(self.opa_gain_ratio)),
            ("opa_phase_rad", Some(self.opa_phase_rad)),
            ("detuning_ratio", Some(self.detuning_ratio)),
            ("kappa_override_ratio", self.kappa_override_ratio),
        ]
    }
}

/// How an axis is laid out in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AxisValues {
    Linear { start: f64, end: f64, points: usize },
    Log { start: f64, end: f64, points: usize },
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisConfig {
    pub parameter: Parameter,
    pub values: AxisValues,
}

impl AxisConfig {
    pub fn to_axis(&self) -> Axis {
        let values = match &self.values {
            AxisValues::Linear { start, end, points } => linspace(*start, *end, *points),
            AxisValues::Log { start, end, points } => logspace(*start, *end, *points),
            AxisValues::List(v) => v.clone(),
        };
        Axis::new(self.parameter, values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunKind {
    Point,
    Sweep {
        axis1: AxisConfig,
        axis2: Option<AxisConfig>,
    },
    Preset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub run: RunKind,
    pub output: OutputConfig,
}

impl RunConfig {
    /// A point evaluation at the reference parameters.
    pub fn point() -> Self {
        RunConfig {
            system: SystemConfig::default(),
            run: RunKind::Point,
            output: OutputConfig::default(),
        }
    }

    /// The sweep described by a `kind = "sweep"` run.
    pub fn sweep_spec(&self) -> ConfigResult<Option<SweepSpec>> {
        let RunKind::Sweep { axis1, axis2 } = &self.run else {
            return Ok(None);
        };
        let spec = SweepSpec {
            base: self.system.to_params()?,
            axis1: axis1.to_axis(),
            axis2: axis2.as_ref().map(AxisConfig::to_axis),
        };
        spec.validate()?;
        Ok(Some(spec))
    }
}

fn unknown(section: &str, key: &str) -> ConfigError {
    ConfigError::UnknownKey {
        section: section.to_string(),
        key: key.to_string(),
    }
}

fn bad(key: &str, expected: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadUnit {
        key: key.to_string(),
        expected,
        reason: reason.into(),
    }
}

fn number(key: &str, expected: &'static str, value: &toml::Value) -> ConfigResult<f64> {
    match value {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(bad(key, expected, format!("got {} `{other}`", other.type_str()))),
    }
}

fn section<'a>(root: &'a Table, name: &str) -> ConfigResult<Option<&'a Table>> {
    match root.get(name) {
        None => Ok(None),
        Some(toml::Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(bad(name, "a table", "expected a [section]")),
    }
}

fn parse_system(table: Option<&Table>) -> ConfigResult<SystemConfig> {
    let mut cfg = SystemConfig::default();
    let Some(table) = table else { return Ok(cfg) };
    for (key, value) in table {
        let &(key, expected, check) = SYSTEM_KEYS
            .iter()
            .find(|(k, _, _)| k == key)
            .ok_or_else(|| unknown("system", key))?;
        let x = number(key, expected, value)?;
        let ok = match check {
            Check::Positive => x.is_finite() && x > 0.0,
            Check::NonNegative => x.is_finite() && x >= 0.0,
            Check::Finite => x.is_finite(),
            Check::Integer => {
                matches!(value, toml::Value::Integer(i) if *i >= 1 && *i <= u32::MAX as i64)
            }
        };
        if !ok {
            return Err(bad(key, expected, format!("got {value}")));
        }
        cfg.set(key, x);
    }
    Ok(cfg)
}

fn parse_axis(key: &str, value: &toml::Value) -> ConfigResult<AxisConfig> {
    let toml::Value::Table(t) = value else {
        return Err(bad(key, "a table", "expected [run.axisN]"));
    };
    let section = format!("run.{key}");
    for k in t.keys() {
        if !["parameter", "start", "end", "points", "spacing", "values"].contains(&k.as_str()) {
            return Err(unknown(&section, k));
        }
    }
    let parameter = match t.get("parameter") {
        Some(toml::Value::String(s)) => s
            .parse::<Parameter>()
            .map_err(|_| bad(&format!("{section}.parameter"), "a sweepable parameter", s.clone()))?,
        Some(other) => return Err(bad(&format!("{section}.parameter"), "a string", other.to_string())),
        None => return Err(ConfigError::MissingRequired(format!("{section}.parameter"))),
    };
    let unit = axis_unit(parameter);
    let values = if let Some(list) = t.get("values") {
        if ["start", "end", "points", "spacing"].iter().any(|k| t.contains_key(*k)) {
            return Err(bad(&section, "either `values` or start/end/points", "both given"));
        }
        let toml::Value::Array(items) = list else {
            return Err(bad(&format!("{section}.values"), unit, "expected an array"));
        };
        AxisValues::List(
            items
                .iter()
                .map(|v| number(&format!("{section}.values"), unit, v))
                .collect::<ConfigResult<_>>()?,
        )
    } else {
        let get = |k: &str| {
            t.get(k)
                .ok_or_else(|| ConfigError::MissingRequired(format!("{section}.{k}")))
        };
        let start = number(&format!("{section}.start"), unit, get("start")?)?;
        let end = number(&format!("{section}.end"), unit, get("end")?)?;
        let points = match get("points")? {
            toml::Value::Integer(n) if *n >= 1 => *n as usize,
            other => return Err(bad(&format!("{section}.points"), "a positive integer", other.to_string())),
        };
        match t.get("spacing").map(|v| v.as_str()) {
            None | Some(Some("linear")) => AxisValues::Linear { start, end, points },
            Some(Some("log")) if start > 0.0 && end > 0.0 => AxisValues::Log { start, end, points },
            Some(Some("log")) => {
                return Err(bad(&format!("{section}.start"), "positive for log spacing", format!("{start}..{end}")))
            }
            Some(_) => return Err(bad(&format!("{section}.spacing"), "\"linear\" or \"log\"", t["spacing"].to_string())),
        }
    };
    Ok(AxisConfig { parameter, values })
}

fn axis_unit(p: Parameter) -> &'static str {
    match p {
        Parameter::Detuning | Parameter::OpaGain | Parameter::OmegaPhi2 => "a multiple of omega_phi1",
        Parameter::OpaPhase => "a phase in radians",
        Parameter::Temperature => "a temperature in kelvin",
        Parameter::LaserPower => "a power in watts",
    }
}

fn parse_run(table: Option<&Table>) -> ConfigResult<RunKind> {
    let table = table.ok_or_else(|| ConfigError::MissingRequired("run".into()))?;
    let kind = match table.get("kind") {
        Some(toml::Value::String(s)) => s.as_str(),
        Some(other) => return Err(bad("run.kind", "\"point\", \"sweep\" or \"preset\"", other.to_string())),
        None => return Err(ConfigError::MissingRequired("run.kind".into())),
    };
    let allowed: &[&str] = match kind {
        "point" => &["kind"],
        "sweep" => &["kind", "axis1", "axis2"],
        "preset" => &["kind", "name"],
        other => return Err(bad("run.kind", "\"point\", \"sweep\" or \"preset\"", other)),
    };
    if let Some(k) = table.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(unknown("run", k));
    }
    Ok(match kind {
        "point" => RunKind::Point,
        "sweep" => RunKind::Sweep {
            axis1: parse_axis(
                "axis1",
                table
                    .get("axis1")
                    .ok_or_else(|| ConfigError::MissingRequired("run.axis1".into()))?,
            )?,
            axis2: table.get("axis2").map(|v| parse_axis("axis2", v)).transpose()?,
        },
        _ => match table.get("name") {
            Some(toml::Value::String(s)) => RunKind::Preset(s.clone()),
            Some(other) => return Err(bad("run.name", "a preset name", other.to_string())),
            None => return Err(ConfigError::MissingRequired("run.name".into())),
        },
    })
}

fn parse_output(table: Option<&Table>) -> ConfigResult<OutputConfig> {
    let mut out = OutputConfig::default();
    let Some(table) = table else { return Ok(out) };
    for (key, value) in table {
        match (key.as_str(), value) {
            ("path", toml::Value::String(s)) => out.path = Some(PathBuf::from(s)),
            ("format", toml::Value::String(s)) => {
                out.format = s.parse().map_err(|e: String| bad("output.format", "\"csv\" or \"json\"", e))?
            }
            ("path", v) => return Err(bad("output.path", "a string", v.to_string())),
            ("format", v) => return Err(bad("output.format", "\"csv\" or \"json\"", v.to_string())),
            (k, _) => return Err(unknown("output", k)),
        }
    }
    Ok(out)
}

/// Parse and validate a TOML run configuration.
pub fn parse_config(text: &str) -> ConfigResult<RunConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    if let Some(k) = root.keys().find(|k| !["system", "run", "output"].contains(&k.as_str())) {
        return Err(unknown("top level", k));
    }
    let cfg = RunConfig {
        system: parse_system(section(&root, "system")?)?,
        run: parse_run(section(&root, "run")?)?,
        output: parse_output(section(&root, "output")?)?,
    };
    cfg.system.to_params()?;
    cfg.sweep_spec()?;
    Ok(cfg)
}

/// Render a configuration as TOML that [`parse_config`] reads back to the
/// same value.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let mut system = Table::new();
    for (key, value) in cfg.system.entries() {
        match (key, value) {
            ("oam_number", Some(x)) => system.insert(key.into(), toml::Value::Integer(x as i64)),
            (_, Some(x)) => system.insert(key.into(), toml::Value::Float(x)),
            (_, None) => None,
        };
    }
    let mut run = Table::new();
    match &cfg.run {
        RunKind::Point => {
            run.insert("kind".into(), "point".into());
        }
        RunKind::Preset(name) => {
            run.insert("kind".into(), "preset".into());
            run.insert("name".into(), name.as_str().into());
        }
        RunKind::Sweep { axis1, axis2 } => {
            run.insert("kind".into(), "sweep".into());
            for (key, axis) in [("axis1", Some(axis1)), ("axis2", axis2.as_ref())] {
                let Some(axis) = axis else { continue };
                let mut t = Table::new();
                t.insert("parameter".into(), axis.parameter.to_string().into());
                match &axis.values {
                    AxisValues::List(v) => {
                        t.insert("values".into(), toml::Value::Array(v.iter().map(|&x| toml::Value::Float(x)).collect()));
                    }
                    AxisValues::Linear { start, end, points } | AxisValues::Log { start, end, points } => {
                        t.insert("start".into(), toml::Value::Float(*start));
                        t.insert("end".into(), toml::Value::Float(*end));
                        t.insert("points".into(), toml::Value::Integer(*points as i64));
                        let spacing = if matches!(axis.values, AxisValues::Log { .. }) { "log" } else { "linear" };
                        t.insert("spacing".into(), spacing.into());
                    }
                }
                run.insert(key.into(), toml::Value::Table(t));
            }
        }
    }
    let mut output = Table::new();
    if let Some(path) = &cfg.output.path {
        output.insert("path".into(), path.to_string_lossy().as_ref().into());
    }
    output.insert("format".into(), cfg.output.format.extension().into());
    let mut root = Table::new();
    root.insert("system".into(), toml::Value::Table(system));
    root.insert("run".into(), toml::Value::Table(run));
    root.insert("output".into(), toml::Value::Table(output));
    toml::to_string(&root).expect("plain tables serialise")
}

/// Measure columns, in file order, after the axis columns.
pub const MEASURE_COLUMNS: [&str; 10] = [
    "stable",
    "EN_mm",
    "EN_m1c",
    "EN_m2c",
    "zeta_m1_m2",
    "zeta_m2_m1",
    "zeta_M",
    "steering_class",
    "R_min",
    "stability_margin_ratio",
];

/// One row of a result file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub coords: Vec<f64>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Stable { measures: Measures, margin_ratio: f64 },
    Unstable { margin_ratio: f64 },
    /// The point could not be evaluated; the message is kept in the
    /// `steering_class` cell.
    Failed(String),
}

/// A parsed result file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub axes: Vec<Parameter>,
    pub records: Vec<ResultRecord>,
}

impl ResultTable {
    pub fn from_result(result: &SweepResult) -> Self {
        let unit = result.metadata.omega_phi1;
        ResultTable {
            axes: result.spec.axes().map(|a| a.parameter).collect(),
            records: result
                .rows
                .iter()
                .map(|row| ResultRecord {
                    coords: row.coords.clone(),
                    outcome: outcome(&row.report, unit),
                })
                .collect(),
        }
    }

    pub fn header(&self) -> Vec<&'static str> {
        self.axes.iter().map(|a| a.column()).chain(MEASURE_COLUMNS).collect()
    }
}

fn outcome(report: &Result<CorrelationReport, String>, unit: f64) -> Outcome {
    match report {
        Err(msg) => Outcome::Failed(msg.clone()),
        Ok(r) => match r.measures {
            Some(measures) => Outcome::Stable {
                measures,
                margin_ratio: r.stability_margin / unit,
            },
            None => Outcome::Unstable {
                margin_ratio: r.stability_margin / unit,
            },
        },
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn cells(record: &ResultRecord) -> Vec<String> {
    let mut out: Vec<String> = record.coords.iter().map(|&x| fmt_f64(x)).collect();
    match &record.outcome {
        Outcome::Stable { measures: m, margin_ratio } => {
            out.push("true".into());
            for x in [m.en_mm, m.en_m1c, m.en_m2c, m.zeta_m1_m2, m.zeta_m2_m1, m.zeta_asym] {
                out.push(fmt_f64(x));
            }
            out.push(m.steering_class.code().into());
            out.push(fmt_f64(m.r_min));
            out.push(fmt_f64(*margin_ratio));
        }
        Outcome::Unstable { margin_ratio } => {
            out.push("false".into());
            out.extend(std::iter::repeat_n(String::new(), 8));
            out.push(fmt_f64(*margin_ratio));
        }
        Outcome::Failed(msg) => {
            out.push("error".into());
            out.extend(std::iter::repeat_n(String::new(), 6));
            out.push(msg.clone());
            out.extend(std::iter::repeat_n(String::new(), 2));
        }
    }
    out
}

/// CSV text of a result: UTF-8, LF line endings, fixed column order.
pub fn write_csv(result: &SweepResult) -> String {
    let table = ResultTable::from_result(result);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(table.header()).expect("in-memory write");
    for record in &table.records {
        w.write_record(cells(record)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
}

/// Errors while reading a result file back.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("result file line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn perr(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Parse text produced by [`write_csv`].
pub fn read_csv(text: &str) -> Result<ResultTable, ParseError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut rows = r.records();
    let header = rows
        .next()
        .ok_or_else(|| perr(1, "empty file"))?
        .map_err(|e| perr(1, e.to_string()))?;
    let n_axes = header.len().checked_sub(MEASURE_COLUMNS.len()).filter(|n| (1..=2).contains(n));
    let n_axes = n_axes.ok_or_else(|| perr(1, format!("unexpected column count {}", header.len())))?;
    let axes = header
        .iter()
        .take(n_axes)
        .map(|c| Parameter::from_column(c).ok_or_else(|| perr(1, format!("unknown axis column `{c}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if header.iter().skip(n_axes).ne(MEASURE_COLUMNS) {
        return Err(perr(1, "measure columns out of order"));
    }
    let mut records = Vec::new();
    for (i, row) in rows.enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| perr(line, e.to_string()))?;
        let num = |k: usize| -> Result<f64, ParseError> {
            row[k]
                .parse::<f64>()
                .map_err(|_| perr(line, format!("bad number `{}` in column {}", &row[k], k + 1)))
        };
        let coords = (0..n_axes).map(num).collect::<Result<Vec<_>, _>>()?;
        let at = |c: usize| n_axes + c;
        let outcome = match &row[at(0)] {
            "true" => Outcome::Stable {
                measures: Measures {
                    en_mm: num(at(1))?,
                    en_m1c: num(at(2))?,
                    en_m2c: num(at(3))?,
                    zeta_m1_m2: num(at(4))?,
                    zeta_m2_m1: num(at(5))?,
                    zeta_asym: num(at(6))?,
                    steering_class: SteeringClass::from_code(&row[at(7)])
                        .ok_or_else(|| perr(line, format!("bad steering class `{}`", &row[at(7)])))?,
                    r_min: num(at(8))?,
                },
                margin_ratio: num(at(9))?,
            },
            "false" => Outcome::Unstable {
                margin_ratio: num(at(9))?,
            },
            "error" => Outcome::Failed(row[at(7)].to_string()),
            other => return Err(perr(line, format!("bad stable cell `{other}`"))),
        };
        records.push(ResultRecord { coords, outcome });
    }
    Ok(ResultTable { axes, records })
}

fn json_row(axes: &[Parameter], record: &ResultRecord) -> Value {
    let mut m = Map::new();
    for (a, &x) in axes.iter().zip(&record.coords) {
        m.insert(a.column().into(), json!(x));
    }
    let null = Value::Null;
    match &record.outcome {
        Outcome::Stable { measures: s, margin_ratio } => {
            m.insert("stable".into(), json!(true));
            m.insert("EN_mm".into(), json!(s.en_mm));
            m.insert("EN_m1c".into(), json!(s.en_m1c));
            m.insert("EN_m2c".into(), json!(s.en_m2c));
            m.insert("zeta_m1_m2".into(), json!(s.zeta_m1_m2));
            m.insert("zeta_m2_m1".into(), json!(s.zeta_m2_m1));
            m.insert("zeta_M".into(), json!(s.zeta_asym));
            m.insert("steering_class".into(), json!(s.steering_class.code()));
            m.insert("R_min".into(), json!(s.r_min));
            m.insert("stability_margin_ratio".into(), json!(margin_ratio));
        }
        Outcome::Unstable { margin_ratio } => {
            m.insert("stable".into(), json!(false));
            for c in &MEASURE_COLUMNS[1..9] {
                m.insert((*c).into(), null.clone());
            }
            m.insert("stability_margin_ratio".into(), json!(margin_ratio));
        }
        Outcome::Failed(msg) => {
            m.insert("stable".into(), json!("error"));
            for c in &MEASURE_COLUMNS[1..] {
                m.insert((*c).into(), null.clone());
            }
            m.insert("error".into(), json!(msg));
        }
    }
    Value::Object(m)
}

/// JSON mirror of the CSV, plus a `metadata` block and the column list.
pub fn write_json(result: &SweepResult) -> String {
    let table = ResultTable::from_result(result);
    let doc = json!({
        "metadata": result.metadata,
        "columns": table.header(),
        "rows": table.records.iter().map(|r| json_row(&table.axes, r)).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("finite values serialise");
    s.push('\n');
    s
}

/// Parse text produced by [`write_json`].
pub fn read_json(text: &str) -> Result<(Metadata, ResultTable), ParseError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| perr(e.line(), e.to_string()))?;
    let metadata: Metadata =
        serde_json::from_value(doc["metadata"].clone()).map_err(|e| perr(0, format!("metadata: {e}")))?;
    let columns = doc["columns"]
        .as_array()
        .ok_or_else(|| perr(0, "missing columns"))?
        .iter()
        .map(|c| c.as_str().unwrap_or_default().to_string())
        .collect::<Vec<_>>();
    let n_axes = columns.len().saturating_sub(MEASURE_COLUMNS.len());
    let axes = columns[..n_axes]
        .iter()
        .map(|c| Parameter::from_column(c).ok_or_else(|| perr(0, format!("unknown axis `{c}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = doc["rows"].as_array().ok_or_else(|| perr(0, "missing rows"))?;
    let mut records = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let num = |k: &str| row[k].as_f64().ok_or_else(|| perr(i, format!("row {i}: `{k}` is not a number")));
        let coords = axes.iter().map(|a| num(a.column())).collect::<Result<Vec<_>, _>>()?;
        let outcome = match &row["stable"] {
            Value::Bool(true) => Outcome::Stable {
                measures: Measures {
                    en_mm: num("EN_mm")?,
                    en_m1c: num("EN_m1c")?,
                    en_m2c: num("EN_m2c")?,
                    zeta_m1_m2: num("zeta_m1_m2")?,
                    zeta_m2_m1: num("zeta_m2_m1")?,
                    zeta_asym: num("zeta_M")?,
                    steering_class: row["steering_class"]
                        .as_str()
                        .and_then(SteeringClass::from_code)
                        .ok_or_else(|| perr(i, "bad steering class"))?,
                    r_min: num("R_min")?,
                },
                margin_ratio: num("stability_margin_ratio")?,
            },
            Value::Bool(false) => Outcome::Unstable {
                margin_ratio: num("stability_margin_ratio")?,
            },
            _ => Outcome::Failed(row["error"].as_str().unwrap_or_default().to_string()),
        };
        records.push(ResultRecord { coords, outcome });
    }
    Ok((metadata, ResultTable { axes, records }))
}

/// Human-readable table for a single point.
pub fn format_point(cfg: &SystemConfig, report: &CorrelationReport) -> String {
    let unit = TAU * cfg.omega_phi1_hz;
    let mut rows: Vec<(&str, String)> = vec![
        ("detuning_ratio", fmt_f64(cfg.detuning_ratio)),
        ("opa_gain_ratio", fmt_f64(cfg.opa_gain_ratio)),
        ("opa_phase_rad", fmt_f64(cfg.opa_phase_rad)),
        ("omega_phi2_ratio", fmt_f64(cfg.omega_phi2_ratio)),
        ("temperature_k", fmt_f64(cfg.temperature_k)),
        ("stable", report.stable.to_string()),
        ("stability_margin_ratio", fmt_f64(report.stability_margin / unit)),
    ];
    if let Some(m) = &report.measures {
        rows.extend([
            ("EN_mm", fmt_f64(m.en_mm)),
            ("EN_m1c", fmt_f64(m.en_m1c)),
            ("EN_m2c", fmt_f64(m.en_m2c)),
            ("zeta_m1_m2", fmt_f64(m.zeta_m1_m2)),
            ("zeta_m2_m1", fmt_f64(m.zeta_m2_m1)),
            ("zeta_M", fmt_f64(m.zeta_asym)),
            ("steering_class", m.steering_class.code().to_string()),
            ("R_min", fmt_f64(m.r_min)),
        ]);
    }
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out
}

/// JSON object for a single point.
pub fn point_json(cfg: &SystemConfig, report: &CorrelationReport) -> String {
    let record = ResultRecord {
        coords: vec![],
        outcome: outcome(&Ok(*report), TAU * cfg.omega_phi1_hz),
    };
    let doc = json!({ "system": cfg, "report": json_row(&[], &record) });
    let mut s = serde_json::to_string_pretty(&doc).expect("finite values serialise");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::run_sweep;

    fn small_result() -> SweepResult {
        let spec = SweepSpec::one_d(
            SystemParams::table1(),
            Axis::new(Parameter::Detuning, linspace(-2.0, 2.0, 21)),
        );
        run_sweep(&spec, 1).unwrap()
    }

    #[test]
    fn empty_system_section_gives_reference_values() {
        let cfg = parse_config("[system]\n[run]\nkind = \"point\"\n").unwrap();
        assert_eq!(cfg.system.to_params().unwrap(), SystemParams::table1());
        assert_eq!(cfg.run, RunKind::Point);
        assert_eq!(cfg.output, OutputConfig::default());
    }

    #[test]
    fn ratios_are_converted() {
        let cfg = parse_config("[system]\nomega_phi2_ratio = 1.5\ndetuning_ratio = -1\n[run]\nkind = \"point\"\n")
            .unwrap();
        let p = cfg.system.to_params().unwrap();
        assert_eq!(p.omega_phi2, 1.5 * p.omega_phi1);
        assert_eq!(p.detuning, -p.omega_phi1);
    }

    #[test]
    fn bad_values_name_the_key() {
        let err = parse_config("[system]\nopa_gain_ratio = -0.1\n[run]\nkind = \"point\"\n").unwrap_err();
        assert!(matches!(&err, ConfigError::BadUnit { key, .. } if key == "opa_gain_ratio"), "{err}");
        assert!(err.to_string().contains("omega_phi1"));
        let err = parse_config("[system]\nlaser_power_w = 0\n[run]\nkind = \"point\"\n").unwrap_err();
        assert!(err.to_string().contains("laser_power_w"));
        let err = parse_config("[system]\nfinesse = \"high\"\n[run]\nkind = \"point\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::BadUnit { .. }));
        let err = parse_config("[system]\noam_number = 1.5\n[run]\nkind = \"point\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::BadUnit { .. }));
    }

    #[test]
    fn unknown_and_missing_keys() {
        let err = parse_config("[system]\nmirror_mass = 1\n[run]\nkind = \"point\"\n").unwrap_err();
        assert_eq!(err, unknown("system", "mirror_mass"));
        assert_eq!(parse_config("[system]\n").unwrap_err(), ConfigError::MissingRequired("run".into()));
        assert!(matches!(parse_config("[run]\n").unwrap_err(), ConfigError::MissingRequired(_)));
        assert!(matches!(
            parse_config("[run]\nkind = \"point\"\n[extra]\n").unwrap_err(),
            ConfigError::UnknownKey { .. }
        ));
        assert!(matches!(parse_config("[run\n").unwrap_err(), ConfigError::Syntax(_)));
    }

    #[test]
    fn sweep_config_builds_a_spec() {
        let text = r#"
[run]
kind = "sweep"
[run.axis1]
parameter = "opa_gain"
start = 0.0
end = 0.2
points = 5
[run.axis2]
parameter = "theta_rad"
values = [0.0, 1.5707963267948966]
[output]
path = "out.csv"
"#;
        let cfg = parse_config(text).unwrap();
        let spec = cfg.sweep_spec().unwrap().unwrap();
        assert_eq!(spec.axis1.values, linspace(0.0, 0.2, 5));
        assert_eq!(spec.axis2.unwrap().parameter, Parameter::OpaPhase);
        assert_eq!(cfg.output.path, Some(PathBuf::from("out.csv")));
        let bad = text.replace("points = 5", "points = 5\nstep = 1");
        assert!(matches!(parse_config(&bad).unwrap_err(), ConfigError::UnknownKey { .. }));
    }

    #[test]
    fn config_round_trips() {
        let text = r#"
[system]
temperature_k = 0.008
kappa_override_ratio = 3.2
opa_phase_rad = 4.71238898038469
[run]
kind = "sweep"
[run.axis1]
parameter = "temperature"
start = 0.001
end = 1.0
points = 11
spacing = "log"
[output]
format = "json"
"#;
        let cfg = parse_config(text).unwrap();
        let again = parse_config(&serialize_config(&cfg)).unwrap();
        assert_eq!(cfg, again);
        let preset = parse_config("[run]\nkind = \"preset\"\nname = \"fig6a\"\n").unwrap();
        assert_eq!(parse_config(&serialize_config(&preset)).unwrap(), preset);
    }

    #[test]
    fn csv_layout() {
        let csv = write_csv(&small_result());
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "delta_ratio,stable,EN_mm,EN_m1c,EN_m2c,zeta_m1_m2,zeta_m2_m1,zeta_M,steering_class,R_min,stability_margin_ratio"
        );
        let first = lines.next().unwrap();
        assert!(first.starts_with("-2.0,false,,,,,,,,,"), "{first}");
        assert!(!csv.contains('\r'));
        assert_eq!(csv.lines().count(), 22);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let result = small_result();
        let table = ResultTable::from_result(&result);
        assert_eq!(read_csv(&write_csv(&result)).unwrap(), table);
        let (meta, parsed) = read_json(&write_json(&result)).unwrap();
        assert_eq!(parsed, table);
        assert_eq!(meta, result.metadata);
    }

    #[test]
    fn failed_rows_keep_their_message() {
        let spec = SweepSpec::one_d(
            SystemParams::table1(),
            Axis::new(Parameter::Temperature, vec![-1.0, 0.015]),
        );
        let result = run_sweep(&spec, 1).unwrap();
        let table = read_csv(&write_csv(&result)).unwrap();
        assert!(matches!(&table.records[0].outcome, Outcome::Failed(m) if m.contains("temperature")));
        assert_eq!(table, ResultTable::from_result(&result));
        assert_eq!(read_json(&write_json(&result)).unwrap().1, table);
    }

    #[test]
    fn shortest_round_trip_numbers() {
        for x in [0.1, 1e-7, -2.0, 1.0 / 3.0, 6.02214076e23, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1e-7), "1e-7");
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(read_csv("").is_err());
        assert!(read_csv("foo,stable\n").is_err());
        let csv = write_csv(&small_result()).replacen("false", "maybe", 1);
        assert_eq!(read_csv(&csv).unwrap_err().line, 2);
    }
}
