use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lgcavity::io::{self, ConfigError, Format, RunConfig, RunKind};
use lgcavity::sweep::{self, SweepSpec, PRESETS};
use lgcavity::validation;

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "lgcavity", version, about = "Steady-state entanglement and steering of a two-rotating-mirror cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one parameter point and print the report.
    Point {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the report as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Run a sweep from a config file or a figure preset.
    Sweep {
        #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output file; presets with several variants write `<stem>_<variant>.<ext>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        parallel: u32,
    },
    /// List the figure presets.
    PresetList,
    /// Run the built-in validation suite.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

enum Failure {
    Config(String),
    Io(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        match self {
            Failure::Config(msg) => {
                eprintln!("config error: {msg}");
                ExitCode::from(EXIT_CONFIG)
            }
            Failure::Io(msg) => {
                eprintln!("io error: {msg}");
                ExitCode::from(EXIT_IO)
            }
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<lgcavity::Error> for Failure {
    fn from(e: lgcavity::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(io::parse_config(&text)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn point(config: Option<PathBuf>, out: Option<PathBuf>, format: Option<Format>) -> Result<(), Failure> {
    let cfg = match config {
        Some(path) => load_config(&path)?,
        None => RunConfig::point(),
    };
    let report = sweep::evaluate(&cfg.system.to_params()?)?;
    print!("{}", io::format_point(&cfg.system, &report));
    let json = io::point_json(&cfg.system, &report);
    let out = out.or(cfg.output.path.clone());
    match (out, format.unwrap_or(cfg.output.format)) {
        (Some(path), _) => write_file(&path, &json)?,
        (None, Format::Json) => print!("{json}"),
        (None, Format::Csv) => {}
    }
    Ok(())
}

/// `out` with `_suffix` appended to the file stem and the extension set.
fn variant_path(out: &Path, suffix: &str, format: Format) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = if suffix.is_empty() {
        format!("{stem}.{}", format.extension())
    } else {
        format!("{stem}_{suffix}.{}", format.extension())
    };
    out.with_file_name(name)
}

fn run_and_write(spec: &SweepSpec, path: &Path, format: Format, parallel: usize) -> Result<(), Failure> {
    let result = sweep::run_sweep(spec, parallel)?;
    let text = match format {
        Format::Csv => io::write_csv(&result),
        Format::Json => io::write_json(&result),
    };
    write_file(path, &text)?;
    let failed = result.rows.iter().filter(|r| r.report.is_err()).count();
    let unstable = result
        .rows
        .iter()
        .filter(|r| matches!(&r.report, Ok(rep) if !rep.stable))
        .count();
    eprintln!(
        "wrote {} ({} rows, {unstable} unstable, {failed} failed)",
        path.display(),
        result.rows.len()
    );
    Ok(())
}

fn run_preset(name: &str, out: Option<PathBuf>, format: Format, parallel: usize) -> Result<(), Failure> {
    let preset = sweep::preset(name)?;
    let out = out.unwrap_or_else(|| PathBuf::from(format!("{name}.{}", format.extension())));
    for v in &preset.variants {
        run_and_write(&v.spec, &variant_path(&out, &v.suffix, format), format, parallel)?;
    }
    Ok(())
}

fn sweep_cmd(
    config: Option<PathBuf>,
    preset: Option<String>,
    out: Option<PathBuf>,
    format: Option<Format>,
    parallel: usize,
) -> Result<(), Failure> {
    if let Some(name) = preset {
        return run_preset(&name, out, format.unwrap_or_default(), parallel);
    }
    let cfg = load_config(config.as_deref().expect("clap requires --config or --preset"))?;
    let format = format.unwrap_or(cfg.output.format);
    let out = out.or(cfg.output.path.clone());
    match &cfg.run {
        RunKind::Preset(name) => run_preset(name, out, format, parallel),
        RunKind::Sweep { .. } => {
            let spec = cfg.sweep_spec()?.expect("run kind is sweep");
            let out = out.unwrap_or_else(|| PathBuf::from(format!("sweep.{}", format.extension())));
            run_and_write(&spec, &out, format, parallel)
        }
        RunKind::Point => Err(Failure::Config(
            "run.kind = \"point\" cannot be swept; use the `point` command".into(),
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Point { config, out, format } => point(config, out, format),
        Command::Sweep {
            config,
            preset,
            out,
            format,
            parallel,
        } => sweep_cmd(config, preset, out, format, parallel as usize),
        Command::PresetList => {
            for (name, description) in PRESETS {
                println!("{name:<6}  {description}");
            }
            Ok(())
        }
        Command::Verify { seed } => {
            let report = validation::verify(seed);
            print!("{report}");
            return if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFY)
            };
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
