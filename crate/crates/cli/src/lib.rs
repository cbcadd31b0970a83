//! Command-line front end: reads a machine config, runs one analysis, and
//! writes JSON or CSV.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use vheat_core::config::{load_config_str, parse_config};
use vheat_core::model::{validate_config, InitialState, MachineConfig};
use vheat_core::steady::effective_inverse_temperature;
use vheat_core::sweep::{
    default_omega_bounds, figure_dataset, format_number, maximize_power, summarize, sweep_grid, Axis, Figure,
    PowerBounds, Table,
};
use vheat_core::thermo::{enhancement_ratios, thermo_report, tls_reference_power, ThermoReport};
use vheat_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vheat", version, about = "Steady-state thermodynamics of modulated V-type heat machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a config file and list every violated constraint.
    Validate { config: PathBuf },
    /// Steady state reached from the configured (or given) initial state.
    Steady {
        config: PathBuf,
        /// ground, bright, dark, thermal(β), nondark-max(ρ00) or dark-mix(d).
        #[arg(long)]
        initial: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Heat currents, power, efficiency and enhancement over the two-level machine.
    Thermo {
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// One report per value of a single parameter.
    Sweep {
        config: PathBuf,
        /// Omega, lambda, T_h, T_c, p, beta_eff-target or dark_overlap.
        #[arg(long)]
        axis: String,
        /// Comma-separated list, or start:stop:count.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximize extracted power over the modulation rate.
    Optimize {
        config: PathBuf,
        #[arg(long)]
        omega_min: Option<f64>,
        #[arg(long)]
        omega_max: Option<f64>,
        #[arg(long, requires = "lambda_max")]
        lambda_min: Option<f64>,
        #[arg(long, requires = "lambda_min")]
        lambda_max: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Dataset behind one of the figures: fig2b, fig2c or fig3.
    Figure {
        which: String,
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Core(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T> = Result<T, Failure>;

/// Parses the value list of `sweep`: `a,b,c` or `start:stop:count`.
pub fn parse_values(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad number `{}`", s.trim()));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| format!("bad count `{}`", parts[2].trim()))?;
        return Ok(match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        });
    }
    if parts.len() != 1 {
        return Err(format!("cannot parse value list `{spec}`"));
    }
    spec.split(',').map(num).collect()
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> CliResult<(String, MachineConfig)> {
    let text = read_text(path)?;
    let cfg = load_config_str(&text)?;
    Ok((text, cfg))
}

fn write_table(path: &Path, table: &Table) -> CliResult<()> {
    let file = fs::File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut buf = std::io::BufWriter::new(file);
    table.write_csv(&mut buf)?;
    buf.flush().map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn with_config_echo(mut table: Table, command: &str, text: &str) -> Table {
    let mut meta = vec![format!("vheat {command}"), "config:".to_string()];
    meta.extend(text.lines().filter(|l| !l.trim().is_empty()).map(|l| format!("  {l}")));
    meta.append(&mut table.metadata);
    table.metadata = meta;
    table
}

fn report_json(r: &ThermoReport) -> Value {
    let s = summarize(&r.steady_state);
    let mut obj = match serde_json::to_value(r) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    };
    obj.insert("rho00".into(), json!(s.rho00));
    obj.insert("rho_bb".into(), json!(s.rho_bb));
    obj.insert("rho_dd".into(), json!(s.rho_dd));
    obj.insert("abs_rho21".into(), json!(s.abs_rho21));
    Value::Object(obj)
}

fn report_text(r: &ThermoReport) -> String {
    let s = summarize(&r.steady_state);
    let opt = |v: Option<f64>| v.map_or("undefined".to_string(), format_number);
    let mut out = String::new();
    for (k, v) in [
        ("rho00", format_number(s.rho00)),
        ("rho_bb", format_number(s.rho_bb)),
        ("rho_dd", format_number(s.rho_dd)),
        ("abs_rho21", opt(s.abs_rho21)),
        ("J_cold", format_number(r.j_cold)),
        ("J_hot", format_number(r.j_hot)),
        ("W_dot", format_number(r.w_dot)),
        ("eta", opt(r.efficiency)),
        ("entropy_production", format_number(r.entropy_production)),
        ("mode", r.mode.to_string()),
    ] {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

fn emit(out: &mut dyn Write, s: &str) -> CliResult<()> {
    out.write_all(s.as_bytes()).map_err(|e| Failure::Usage(e.to_string()))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default() + "\n"
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Validate { config } => {
            let text = read_text(&config)?;
            let cfg = parse_config(&text)?;
            let violations = validate_config(&cfg);
            if violations.is_empty() {
                emit(out, "ok\n")
            } else {
                Err(Failure::Core(Error::InvalidConfig(violations)))
            }
        }
        Command::Steady { config, initial, json } => {
            let (_, mut cfg) = load(&config)?;
            if let Some(name) = initial {
                cfg.initial_state = name.parse::<InitialState>()?;
            }
            let rho0 = cfg.initial_density()?;
            let report = thermo_report(&cfg, &rho0)?;
            if json {
                let mut v = report_json(&report);
                if let Value::Object(m) = &mut v {
                    m.insert("initial_state".into(), json!(cfg.initial_state.to_string()));
                }
                emit(out, &pretty(&v))
            } else {
                emit(out, &format!("initial_state = {}\n{}", cfg.initial_state, report_text(&report)))
            }
        }
        Command::Thermo { config, json } => {
            let (_, cfg) = load(&config)?;
            let rho0 = cfg.initial_density()?;
            let report = thermo_report(&cfg, &rho0)?;
            let tls = tls_reference_power(&cfg)?;
            let beta_eff = effective_inverse_temperature(&cfg)?;
            let ratios = if cfg.system.is_degenerate() { Some(enhancement_ratios(&cfg, &rho0)?) } else { None };
            if json {
                let mut v = report_json(&report);
                if let Value::Object(m) = &mut v {
                    m.insert("beta_eff".into(), json!(beta_eff));
                    m.insert("W_dot_tls".into(), json!(tls));
                    m.insert("enhancement".into(), serde_json::to_value(&ratios).unwrap_or(Value::Null));
                }
                emit(out, &pretty(&v))
            } else {
                let mut s = report_text(&report);
                s.push_str(&format!("beta_eff = {}\nW_dot_tls = {}\n", format_number(beta_eff), format_number(tls)));
                if let Some(r) = ratios {
                    s.push_str(&format!("misaligned_ratio = {}\n", format_number(r.misaligned_ratio)));
                    s.push_str(&format!("threshold_dark_overlap = {}\n", format_number(r.threshold_dark_overlap)));
                    if let Some(v) = r.nlevel_ratio {
                        s.push_str(&format!("aligned_ratio = {}\n", format_number(v)));
                    }
                    if let Some(v) = r.aligned_vs_misaligned {
                        s.push_str(&format!("aligned_vs_misaligned = {}\n", format_number(v)));
                    }
                }
                emit(out, &s)
            }
        }
        Command::Sweep { config, axis, values, out: path } => {
            let (text, cfg) = load(&config)?;
            let axis: Axis = axis.parse()?;
            let values = parse_values(&values).map_err(Failure::Usage)?;
            let table = sweep_grid(&cfg, axis, &values)?.to_table();
            let failed = table.metadata.iter().filter(|m| m.starts_with("error at")).count();
            write_table(&path, &with_config_echo(table, "sweep", &text))?;
            if failed > 0 {
                let _ = writeln!(err, "{failed} of {} sweep points failed; see the CSV metadata", values.len());
            }
            Ok(())
        }
        Command::Optimize { config, omega_min, omega_max, lambda_min, lambda_max, json } => {
            let (_, cfg) = load(&config)?;
            let (lo, hi) = default_omega_bounds(&cfg)?;
            let bounds = PowerBounds {
                omega: (omega_min.unwrap_or(lo), omega_max.unwrap_or(hi)),
                lambda: lambda_min.zip(lambda_max),
            };
            let rho0 = cfg.initial_density()?;
            match maximize_power(&cfg, &rho0, bounds)? {
                None => {
                    if json {
                        emit(out, &pretty(&json!({ "engine_found": false })))?;
                    } else {
                        emit(out, "engine_found = false\n")?;
                    }
                    let _ = writeln!(err, "no engine-mode point within the bounds");
                    Ok(())
                }
                Some(opt) => {
                    if json {
                        let mut v = report_json(&opt.report);
                        if let Value::Object(m) = &mut v {
                            m.insert("engine_found".into(), json!(true));
                            m.insert("Omega".into(), json!(opt.omega));
                            m.insert("lambda".into(), json!(opt.lambda));
                            m.insert("certified".into(), json!(opt.certified));
                            m.insert("evaluations".into(), json!(opt.evaluations));
                        }
                        emit(out, &pretty(&v))
                    } else {
                        let mut s = format!("engine_found = true\nOmega = {}\n", format_number(opt.omega));
                        if let Some(l) = opt.lambda {
                            s.push_str(&format!("lambda = {}\n", format_number(l)));
                        }
                        s.push_str(&format!("certified = {}\nevaluations = {}\n", opt.certified, opt.evaluations));
                        s.push_str(&report_text(&opt.report));
                        emit(out, &s)
                    }
                }
            }
        }
        Command::Figure { which, config, out: path } => {
            let figure: Figure = which.parse()?;
            let (text, cfg) = load(&config)?;
            let table = figure_dataset(figure, &cfg)?;
            write_table(&path, &with_config_echo(table, &format!("figure {figure}"), &text))
        }
    }
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code. Machine output goes to `out`, diagnostics to `err`.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_INVALID
                }
            };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(Failure::Core(Error::InvalidConfig(violations))) => {
            let _ = writeln!(err, "error: invalid configuration");
            for v in &violations {
                let _ = writeln!(err, "  {v}");
            }
            EXIT_INVALID
        }
        Err(Failure::Core(e)) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                EXIT_INVALID
            } else {
                EXIT_NUMERICAL
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INVALID
        }
    }
}
