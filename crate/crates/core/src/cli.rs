//! Command-line front end.
//!
//! Every subcommand writes CSV or plain text, to stdout or atomically to
//! `--out`. Failures print one line `error: <kind>: <message>` on stderr and
//! exit with 2 (usage), 3 (input) or 4 (numerical).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::conductance::{areal_h, static_gains, temperature_gain_sums, ConductanceReport};
use crate::doe::{self, axis, default_axes, select_optimum, DesignConstraints, Spacing};
use crate::error::Error;
use crate::error_budget::ErrorModel;
use crate::modal::{classify_modes, initial_state, modal_decomposition};
use crate::models;
use crate::network_model::{to_state_space, ThermalCircuit};
use crate::qub::{estimate_from_trace, QubProtocol, QubSystem, QubTrace};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Environment variable capping the number of sweep worker threads.
pub const THREADS_ENV: &str = "QUBDOE_THREADS";

/// Prefix that selects a model shipped with the crate, e.g. `bundled:house`.
pub const BUNDLED_PREFIX: &str = "bundled:";

#[derive(Debug, Parser)]
#[command(
    name = "qubdoe",
    version,
    about = "Design of QUB heat transfer coefficient experiments"
)]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validates a building description.
    Check { model: String },
    /// Time constants and amplitudes of the modes of the heating response.
    Eig {
        model: String,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        heating: HeatingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Static gains, heat transfer coefficient and resistance.
    Gains {
        model: String,
        /// Reference area for the areal coefficient, m².
        #[arg(long)]
        area: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulates a QUB experiment and writes its trace.
    Simulate {
        model: String,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        heating: HeatingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimates H and C from a trace.
    Estimate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        window: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error surface over heating power and duration.
    Sweep {
        model: String,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        errors: ErrorArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest-error design under constraints.
    Optimum {
        model: String,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        errors: ErrorArgs,
        #[command(flatten)]
        constraints: ConstraintArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    /// Outdoor temperature, °C.
    #[arg(long = "to", default_value_t = 0.0, allow_negative_numbers = true)]
    pub t_outdoor: f64,
    /// Power before the test, W.
    #[arg(long, default_value_t = 0.0)]
    pub p0: f64,
    /// Cooling power, W.
    #[arg(long, default_value_t = 0.0)]
    pub pc: f64,
    /// Fraction of each phase used for the slope fit.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub window: f64,
    /// Sampling interval, s.
    #[arg(long, default_value_t = 60.0)]
    pub dt: f64,
    /// Temperature source held at its own value, `NAME=°C`. Repeatable.
    #[arg(long = "tsrc", value_parser = parse_source, allow_negative_numbers = true)]
    pub tsrc: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
pub struct HeatingArgs {
    /// Heating power, W.
    #[arg(long, default_value_t = 1000.0)]
    pub ph: f64,
    /// Duration of each phase, s.
    #[arg(long, default_value_t = 10800.0)]
    pub tqub: f64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Heating powers `start:end:n[:lin|log]`, W. Defaults to 40 log-spaced
    /// points from the maintenance power to four times it.
    #[arg(long, value_parser = parse_range)]
    pub ph_range: Option<RangeSpec>,
    /// Durations `start:end:n[:lin|log]`, s. Defaults to 40 points over 1–12 h.
    #[arg(long, value_parser = parse_range)]
    pub t_range: Option<RangeSpec>,
}

#[derive(Debug, Args)]
pub struct ErrorArgs {
    /// Temperature difference error, K.
    #[arg(long, default_value_t = 0.5)]
    pub eps_dt: f64,
    /// Power error as a fraction of the heating power.
    #[arg(long, default_value_t = 0.01)]
    pub eps_p_rel: f64,
    /// Slope error, K/s. Defaults to the standard error of the slope fits.
    #[arg(long)]
    pub eps_alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConstraintArgs {
    /// W
    #[arg(long)]
    pub max_power: Option<f64>,
    /// Highest indoor temperature, °C.
    #[arg(long, allow_negative_numbers = true)]
    pub max_temp: Option<f64>,
    /// Heating plus cooling duration, s.
    #[arg(long)]
    pub max_duration: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeSpec {
    pub start: f64,
    pub end: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl RangeSpec {
    pub fn values(&self) -> crate::Result<Vec<f64>> {
        axis(self.start, self.end, self.n, self.spacing)
    }
}

fn parse_range(s: &str) -> Result<RangeSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(format!("expected start:end:n[:lin|log], got {s:?}"));
    }
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
    let spacing = match parts.get(3) {
        None | Some(&"lin") => Spacing::Linear,
        Some(&"log") => Spacing::Log,
        Some(other) => return Err(format!("unknown spacing {other:?}")),
    };
    Ok(RangeSpec {
        start: num(parts[0])?,
        end: num(parts[1])?,
        n: parts[2].parse().map_err(|e| format!("{:?}: {e}", parts[2]))?,
        spacing,
    })
}

fn parse_source(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    let value = value.parse::<f64>().map_err(|e| format!("{value:?}: {e}"))?;
    if name.is_empty() {
        return Err("empty source name".into());
    }
    Ok((name.to_string(), value))
}

/// Failure of one invocation, with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn kind(&self) -> &'static str {
        match self.code {
            EXIT_USAGE => "usage",
            EXIT_NUMERICAL => "numerical",
            _ => "input",
        }
    }

    /// `error: <kind>: <message>` on a single line.
    pub fn line(&self) -> String {
        let msg: Vec<&str> = self.message.split_whitespace().collect();
        format!("error: {}: {}", self.kind(), msg.join(" "))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Results go to `stdout` unless `--out` is given.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match CliConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = write!(stdout, "{}", e.render());
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    EXIT_USAGE
                } else {
                    0
                };
            }
            let text = e.kind().to_string();
            let detail = e
                .render()
                .to_string()
                .lines()
                .next()
                .unwrap_or(&text)
                .trim_start_matches("error: ")
                .to_string();
            let _ = writeln!(stderr, "{}", Failure::usage(detail).line());
            return EXIT_USAGE;
        }
    };
    match execute(&config, stdout, stderr) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "{}", f.line());
            f.code
        }
    }
}

fn execute(config: &CliConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    match &config.command {
        Command::Check { model } => {
            let circuit = load_circuit(model)?;
            emit(
                None,
                format!(
                    "OK: {} nodes, {} branches\n",
                    circuit.nodes.len(),
                    circuit.branches.len()
                ),
                stdout,
            )
        }
        Command::Eig {
            model,
            protocol,
            heating,
            out,
        } => {
            let circuit = load_circuit(model)?;
            let system = QubSystem::from_circuit(&circuit)?;
            let p = build_protocol(protocol, heating.ph, heating.tqub)?;
            emit(out.as_deref(), eig_csv(&system, &p)?, stdout)
        }
        Command::Gains { model, area, out } => {
            let circuit = load_circuit(model)?;
            emit(out.as_deref(), gains_csv(&circuit, *area)?, stdout)
        }
        Command::Simulate {
            model,
            protocol,
            heating,
            out,
        } => {
            let p = build_protocol(protocol, heating.ph, heating.tqub)?;
            let circuit = load_circuit(model)?;
            let system = QubSystem::from_circuit(&circuit)?;
            let maintenance = system.maintenance_power(&p)?;
            if p.p_heat <= maintenance {
                let _ = writeln!(
                    stderr,
                    "warning: heating power {} W does not exceed the maintenance power {maintenance:.6} W; the heating response is not increasing",
                    p.p_heat
                );
            }
            emit(out.as_deref(), system.simulate(&p)?.to_csv(), stdout)
        }
        Command::Estimate { trace, window, out } => {
            let text = read_file(trace)?;
            let estimate = estimate_from_trace(&QubTrace::from_csv(&text)?, *window)?;
            let c = estimate.c.unwrap_or(f64::NAN);
            let csv = format!(
                "H_qub_W_per_K,C_star_J_per_K,C_J_per_K,alpha_h,alpha_c,r2_h,r2_c\n{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                estimate.h_qub, estimate.c_star, c, estimate.alpha_h, estimate.alpha_c, estimate.r2_h, estimate.r2_c
            );
            emit(out.as_deref(), csv, stdout)
        }
        Command::Sweep {
            model,
            protocol,
            grid,
            errors,
            out,
        } => {
            let threads = threads()?;
            let (_, grid) = run_sweep(model, protocol, grid, errors, threads)?;
            emit(out.as_deref(), grid.to_csv(), stdout)
        }
        Command::Optimum {
            model,
            protocol,
            grid,
            errors,
            constraints,
            out,
        } => {
            let threads = threads()?;
            let c = DesignConstraints {
                max_power: constraints.max_power.unwrap_or(f64::INFINITY),
                max_indoor_temperature: constraints.max_temp.unwrap_or(f64::INFINITY),
                max_total_duration: constraints.max_duration.unwrap_or(f64::INFINITY),
            };
            c.validate()?;
            let (_, grid) = run_sweep(model, protocol, grid, errors, threads)?;
            let best = select_optimum(&grid, &c)?;
            let line = format!(
                "ph_W={} t_qub_s={} H_qub_W_per_K={} eps_qub_pct={} eps_Hm_W_per_K={} eps_H_pct={} theta_max_C={}\n",
                best.p_heat, best.t_qub, best.h_qub, best.eps_qub_pct, best.eps_hm, best.eps_h_pct, best.theta_max
            );
            emit(out.as_deref(), line, stdout)
        }
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

/// Reads a circuit from a file, or from the bundled set with `bundled:NAME`.
pub fn load_circuit(source: &str) -> CliResult<ThermalCircuit> {
    if let Some(name) = source.strip_prefix(BUNDLED_PREFIX) {
        return match models::load(name) {
            Some(c) => Ok(c?),
            None => Err(Failure {
                code: EXIT_INPUT,
                message: format!("no bundled model {name:?}"),
            }),
        };
    }
    Ok(ThermalCircuit::from_json(&read_file(Path::new(source))?)?)
}

fn emit(out: Option<&Path>, text: String, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(path) => Ok(doe::write_atomic(path, text.as_bytes())?),
        None => match stdout.write_all(text.as_bytes()) {
            // a closed pipe (`| head`) is the reader's choice, not a failure
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(|e| Error::Io(e).into()),
        },
    }
}

fn threads() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
    }
}

fn build_protocol(args: &ProtocolArgs, p_heat: f64, t_qub: f64) -> CliResult<QubProtocol> {
    let mut boundary = BTreeMap::new();
    for (name, value) in &args.tsrc {
        if boundary.insert(name.clone(), *value).is_some() {
            return Err(Failure::usage(format!("--tsrc {name} given twice")));
        }
    }
    if !(args.window > 0.0 && args.window <= 1.0) {
        return Err(Failure::usage(format!(
            "--window must be in (0, 1], got {}",
            args.window
        )));
    }
    if !(args.dt > 0.0 && args.dt.is_finite()) {
        return Err(Failure::usage(format!("--dt must be positive, got {}", args.dt)));
    }
    let p = QubProtocol {
        t_outdoor: args.t_outdoor,
        p0: args.p0,
        p_heat,
        p_cool: args.pc,
        t_qub,
        window_fraction: args.window,
        sample_dt: args.dt,
        boundary_temperatures: boundary,
    };
    p.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(p)
}

fn run_sweep(
    model: &str,
    protocol: &ProtocolArgs,
    grid: &GridArgs,
    errors: &ErrorArgs,
    threads: usize,
) -> CliResult<(QubSystem, doe::DoeGrid)> {
    let error_model = ErrorModel {
        eps_dt: errors.eps_dt,
        eps_p_rel: errors.eps_p_rel,
        eps_alpha: errors.eps_alpha,
    };
    error_model.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let explicit = |r: &Option<RangeSpec>| {
        r.map(|r| r.values().map_err(|e| Failure::usage(e.to_string())))
            .transpose()
    };
    let ph_axis = explicit(&grid.ph_range)?;
    let t_axis = explicit(&grid.t_range)?;
    // Power and duration of the template are replaced cell by cell.
    let template = build_protocol(
        protocol,
        ph_axis.as_ref().map_or(f64::MAX, |a| a[a.len() - 1]),
        t_axis.as_ref().map_or(3600.0, |a| a[0]),
    )?;

    let circuit = load_circuit(model)?;
    let system = QubSystem::from_circuit(&circuit)?;
    let (ph_axis, t_axis) = match (ph_axis, t_axis) {
        (Some(p), Some(t)) => (p, t),
        (p, t) => {
            let maintenance = system.maintenance_power(&template)?;
            let (dp, dt) = default_axes(maintenance).map_err(|e| Failure::usage(format!("--ph-range: {e}")))?;
            (p.unwrap_or(dp), t.unwrap_or(dt))
        }
    };
    let h_ref = system.reference_h()?;
    let grid = doe::sweep(&system, &template, &ph_axis, &t_axis, &error_model, h_ref, threads)?;
    Ok((system, grid))
}

fn eig_csv(system: &QubSystem, p: &QubProtocol) -> CliResult<String> {
    let model = system.model();
    let x0 = initial_state(model, &system.input_vector(p, p.p0)?)?;
    let u = system.input_vector(p, p.p_heat)?;
    let decomp = modal_decomposition(model, &u, &x0)?;
    let classes = classify_modes(&decomp, p.t_qub)?;
    let mut out = String::from("mode_index,tau_s,lambda_per_s,init_amp,input_amp,class\n");
    for m in &classes {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{}",
            m.mode,
            m.tau,
            decomp.eigenvalues[m.mode],
            decomp.init_amplitudes[(0, m.mode)],
            decomp.input_amplitudes[(0, m.mode)],
            m.class
        );
    }
    Ok(out)
}

/// Gains from every input to the indoor nodes, then H and R of the whole
/// building as seen by the QUB system.
fn gains_csv(circuit: &ThermalCircuit, area: Option<f64>) -> CliResult<String> {
    let system = QubSystem::from_circuit(circuit)?;
    let indoor: Vec<&str> = if circuit.zones.is_empty() {
        circuit.flow_sources.iter().map(|f| f.node.as_str()).collect()
    } else {
        circuit.zones.iter().map(|z| z.air_node.as_str()).collect()
    };
    let full = to_state_space(circuit, &indoor)?;
    let gains: DMatrix<f64> = static_gains(&full)?;
    let h = system.reference_h()?;
    let report = ConductanceReport {
        h,
        r: 1.0 / h,
        areal_h: area.map(|a| areal_h(h, a)).transpose()?,
        temperature_gain_sums: temperature_gain_sums(&full, &gains),
        static_gains: gains,
        input_names: full.input_names().map(str::to_string).collect(),
        output_names: full.output_names().to_vec(),
    };
    Ok(report.to_csv())
}
