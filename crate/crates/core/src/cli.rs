//! Command-line front end.
//!
//! Every command prints line-oriented records, either CSV with a fixed
//! header or one JSON object per line. Numbers carry 12 significant digits
//! and all randomness flows from `--seed`, so identical flags give
//! byte-identical output.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::offspring::{parse_law, OffspringLaw};
use crate::percolation::{PercolatedModel, DEFAULT_TOL};
use crate::simulate::{estimate_speed, simulate_pipes};
use crate::speed::{
    check_condition, cluster_speed, pipes_speed, speed_point, sweep_with_tol, SpeedCurvePoint,
    DEFAULT_CONDITION_GRID,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_CONVERGENCE: u8 = 2;

pub const CURVE_HEADER: &str = "p,rho,lambda,backbone_speed,cluster_speed,mean_delay,condition_ok";

#[derive(Debug, Parser)]
#[command(name = "percspeed", version, about = "Random-walk speed on percolation clusters of Galton-Watson trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extinction probability rho, lambda and d rho / d p.
    Rho(RunConfig),
    /// One speed-curve row.
    Speed(RunConfig),
    /// Speed curve over --p-grid.
    Sweep(RunConfig),
    /// Monte Carlo speed estimate against the analytic value.
    Simulate(RunConfig),
    /// Check whether (1-s) f'(s) / (1 - f(s)) is increasing on (1/m, 1).
    CheckCondition(RunConfig),
    /// Binary tree with pipes: closed form, optionally with simulation.
    Pipes(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Offspring law: geometric:<a> | poisson:<mu> | binomial:<n>,<q> | pmf:<w0>,<w1>,...
    #[arg(long)]
    pub law: Option<String>,
    /// Retaining probability.
    #[arg(long, conflicts_with = "p_grid", allow_hyphen_values = true)]
    pub p: Option<f64>,
    /// Grid of retaining probabilities, start:stop:step (inclusive).
    #[arg(long = "p-grid")]
    pub p_grid: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 200)]
    pub replicas: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also run the Monte Carlo estimate (pipes only).
    #[arg(long)]
    pub simulate: bool,
}

/// Failure of a command, carrying the flag to blame when there is one.
#[derive(Debug)]
struct CliError {
    flag: Option<&'static str>,
    error: Error,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        if self.error.is_convergence() {
            EXIT_CONVERGENCE
        } else {
            EXIT_INPUT
        }
    }
}

fn usage(flag: &'static str, reason: &'static str) -> CliError {
    CliError {
        flag: Some(flag),
        error: Error::InvalidArgument {
            name: flag,
            value: f64::NAN,
            reason,
        },
    }
}

/// Attributes a library error to the flag that most likely caused it.
fn blame(cfg: &RunConfig) -> impl Fn(Error) -> CliError + '_ {
    move |error| {
        let p_flag = if cfg.p_grid.is_some() { "--p-grid" } else { "--p" };
        let flag = match &error {
            Error::Parse { .. } | Error::DegenerateLaw | Error::NotSupercritical { .. } | Error::PositiveP0 { .. } => {
                Some("--law")
            }
            Error::BelowCritical { .. } => Some(p_flag),
            Error::InvalidArgument { name, .. } => match *name {
                "p" | "p_grid" => Some(p_flag),
                "horizon" => Some("--horizon"),
                "replicas" => Some("--replicas"),
                "tol" => Some("--tol"),
                _ => None,
            },
            _ => None,
        };
        CliError { flag, error }
    }
}

/// `%.12g`-style formatting.
pub fn fmt_num(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    }
}

#[derive(Debug, Clone)]
enum Value {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Num(x) => fmt_num(*x),
            Value::Int(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Value::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> String {
        match self {
            Value::Num(x) if x.is_finite() => fmt_num(*x),
            Value::Num(_) => "null".into(),
            Value::Int(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => serde_json::to_string(s).expect("string serializes"),
        }
    }
}

type Row = Vec<(&'static str, Value)>;

fn write_rows(out: &mut dyn Write, format: Format, rows: &[Row]) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            if let Some(first) = rows.first() {
                let header: Vec<&str> = first.iter().map(|(k, _)| *k).collect();
                writeln!(out, "{}", header.join(","))?;
            }
            for row in rows {
                let cells: Vec<String> = row.iter().map(|(_, v)| v.csv()).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Format::Json => {
            for row in rows {
                let fields: Vec<String> = row
                    .iter()
                    .map(|(k, v)| format!("\"{k}\":{}", v.json()))
                    .collect();
                writeln!(out, "{{{}}}", fields.join(","))?;
            }
        }
    }
    Ok(())
}

fn curve_row(pt: &SpeedCurvePoint) -> Row {
    vec![
        ("p", Value::Num(pt.p)),
        ("rho", Value::Num(pt.rho)),
        ("lambda", Value::Num(pt.lambda)),
        ("backbone_speed", Value::Num(pt.backbone_speed)),
        ("cluster_speed", Value::Num(pt.cluster_speed)),
        ("mean_delay", Value::Num(pt.mean_delay)),
        ("condition_ok", Value::Bool(pt.condition_ok)),
    ]
}

/// Parses `start:stop:step` into an inclusive, increasing grid.
pub fn parse_grid(text: &str) -> Option<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .ok()?;
    let [start, stop, step] = parts[..] else {
        return None;
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return None;
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Some((0..n).map(|i| start + step * i as f64).collect())
}

impl RunConfig {
    fn law(&self) -> Result<OffspringLaw, CliError> {
        let spec = self.law.as_deref().ok_or_else(|| usage("--law", "flag is required"))?;
        parse_law(spec).map_err(|error| CliError {
            flag: Some("--law"),
            error,
        })
    }

    fn single_p(&self) -> Result<f64, CliError> {
        if self.p_grid.is_some() {
            return Err(usage("--p-grid", "this command takes a single --p"));
        }
        self.p.ok_or_else(|| usage("--p", "flag is required"))
    }

    fn p_values(&self) -> Result<Vec<f64>, CliError> {
        match (&self.p, &self.p_grid) {
            (Some(p), None) => Ok(vec![*p]),
            (None, Some(g)) => parse_grid(g).ok_or_else(|| usage("--p-grid", "expected start:stop:step with step > 0 and stop >= start")),
            _ => Err(usage("--p", "give --p or --p-grid")),
        }
    }

    fn reject_simulate_flag(&self) -> Result<(), CliError> {
        if self.simulate {
            Err(usage("--simulate", "only the pipes command accepts this flag"))
        } else {
            Ok(())
        }
    }
}

fn cmd_rho(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let law = cfg.law()?;
    cfg.p_values()?
        .into_iter()
        .map(|p| {
            let model = PercolatedModel::with_tol(law.clone(), p, cfg.tol).map_err(blame(cfg))?;
            let d = model.rho_derivative().map_err(blame(cfg))?;
            Ok(vec![
                ("p", Value::Num(p)),
                ("rho", Value::Num(model.rho())),
                ("lambda", Value::Num(model.lambda())),
                ("drho_dp", Value::Num(d)),
            ])
        })
        .collect()
}

fn cmd_speed(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let law = cfg.law()?;
    let p = cfg.single_p()?;
    let pt = speed_point(&law, p, cfg.tol).map_err(blame(cfg))?;
    Ok(vec![curve_row(&pt)])
}

fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let law = cfg.law()?;
    let grid = cfg.p_values()?;
    let pts = sweep_with_tol(&law, &grid, cfg.tol).map_err(blame(cfg))?;
    Ok(pts.iter().map(curve_row).collect())
}

fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let law = cfg.law()?;
    let p = cfg.single_p()?;
    let model = PercolatedModel::with_tol(law, p, cfg.tol).map_err(blame(cfg))?;
    let analytic = cluster_speed(&model).map_err(blame(cfg))?;
    let est = estimate_speed(&model, cfg.horizon, cfg.replicas, cfg.seed).map_err(blame(cfg))?;
    Ok(vec![vec![
        ("law", Value::Text(est.law_spec.clone())),
        ("p", Value::Num(est.p)),
        ("horizon", Value::Int(est.horizon)),
        ("replicas", Value::Int(est.replicas)),
        ("seed", Value::Int(est.seed)),
        ("speed_hat", Value::Num(est.speed_hat)),
        ("std_error", Value::Num(est.std_error)),
        ("analytic_speed", Value::Num(analytic)),
        ("z_score", Value::Num(est.z_score(analytic))),
    ]])
}

fn cmd_check_condition(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let law = cfg.law()?;
    let (ok, worst) = check_condition(&law, DEFAULT_CONDITION_GRID).map_err(blame(cfg))?;
    Ok(vec![vec![
        ("law", Value::Text(law.to_string())),
        ("condition_ok", Value::Bool(ok)),
        ("worst_violation", Value::Num(worst)),
    ]])
}

fn cmd_pipes(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    cfg.p_values()?
        .into_iter()
        .map(|p| {
            let closed = pipes_speed(p).map_err(blame(cfg))?;
            let mut row = vec![("p", Value::Num(p)), ("closed_form", Value::Num(closed))];
            if cfg.simulate {
                let est = simulate_pipes(p, cfg.horizon, cfg.replicas, cfg.seed).map_err(blame(cfg))?;
                row.push(("horizon", Value::Int(est.horizon)));
                row.push(("replicas", Value::Int(est.replicas)));
                row.push(("seed", Value::Int(est.seed)));
                row.push(("speed_hat", Value::Num(est.speed_hat)));
                row.push(("std_error", Value::Num(est.std_error)));
                row.push(("z_score", Value::Num(est.z_score(closed))));
            }
            Ok(row)
        })
        .collect()
}

fn dispatch(cmd: &Command) -> Result<(Vec<Row>, Format), CliError> {
    let (cfg, rows) = match cmd {
        Command::Rho(c) => (c, c.reject_simulate_flag().and_then(|_| cmd_rho(c))),
        Command::Speed(c) => (c, c.reject_simulate_flag().and_then(|_| cmd_speed(c))),
        Command::Sweep(c) => (c, c.reject_simulate_flag().and_then(|_| cmd_sweep(c))),
        Command::Simulate(c) => (c, c.reject_simulate_flag().and_then(|_| cmd_simulate(c))),
        Command::CheckCondition(c) => (c, c.reject_simulate_flag().and_then(|_| cmd_check_condition(c))),
        Command::Pipes(c) => (c, cmd_pipes(c)),
    };
    rows.map(|r| (r, cfg.format))
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
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
                    EXIT_INPUT
                }
            };
        }
    };
    match dispatch(&cli.command) {
        Ok((rows, format)) => match write_rows(out, format, &rows) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: writing output: {e}");
                EXIT_INPUT
            }
        },
        Err(e) => {
            let _ = match e.flag {
                Some(flag) => writeln!(err, "error: {flag}: {}", e.error),
                None => writeln!(err, "error: {}", e.error),
            };
            e.exit_code()
        }
    }
}
