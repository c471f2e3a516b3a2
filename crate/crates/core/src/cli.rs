//! Command-line front end.
//!
//! ```text
//! multipole expand compare [--lmax 20,60] [--smax 30] [--grid-t 0.1,0.5] [--grid-x -0.5,0,0.5]
//! multipole expand oracle  [same flags]
//! multipole bessel table --l 1 --terms 5
//! multipole solve --z 2 --state 1s2 --level h4 [--mode diag|pert]
//! multipole tables --id 1|2 [--mode diag|pert]
//! ```
//!
//! Common flags: `--format csv|json|pretty`, `--out PATH`, `--config PATH`,
//! and the basis flags `--order`, `--splines`, `--box`, `--r-first`.
//!
//! The config file holds one `key = value` per line; `#` starts a comment.
//! Keys: `z`, `gamma`, `c`, `mass_ratio`, `chi` (on/off), `level`, `state`,
//! `mode`, `basis.order`, `basis.count`, `basis.box`, `basis.scheme`
//! (geometric-then-linear, geometric, linear) and `basis.r_first`. Flags win
//! over the file. Exit status is 0 on success, 1 when a computation fails and
//! 2 for usage errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::Zero;

use crate::error::Error;
use crate::expansion::{error_scan, ErrorScanReport, Method, ScanGrid};
use crate::helium::{
    excitation_energy_ev, reproduce_table, total_energy, Configuration, CorrectionLevel, EnergyBreakdown,
    ModelParams, SolveMode, StateLabel, TableArtifact, TableId,
};
use crate::radial::{build_knots, BasisSpec, DESK_BOX, DESK_ORDER, DESK_SPLINES, R_FIRST_FRACTION};
use crate::specfun::{bessel_coefficients, bessel_coefficients_exact, SeriesTruncation, EXACT_TERMS};

pub const DEFAULT_LMAX: usize = 60;
pub const DEFAULT_SMAX: usize = 30;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Clap(#[from] clap::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Pretty,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    ExpandCompare,
    ExpandOracle,
    BesselTable { l: usize, terms: usize },
    Solve,
    Tables { id: TableId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub params: ModelParams,
    pub state: Configuration,
    pub level: CorrectionLevel,
    pub mode: SolveMode,
    pub basis: BasisSpec,
    pub truncations: Vec<SeriesTruncation>,
    pub grid: ScanGrid,
}

#[derive(Parser, Debug)]
#[command(name = "multipole", version, about = "Multipole expansions and a two-electron pseudopotential model")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..=6))]
    z: Option<u32>,
    #[arg(long, global = true)]
    state: Option<String>,
    #[arg(long, global = true)]
    level: Option<String>,
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    splines: Option<usize>,
    #[arg(long, global = true)]
    order: Option<usize>,
    #[arg(long = "box", global = true)]
    r_box: Option<f64>,
    #[arg(long, global = true)]
    r_first: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    lmax: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    smax: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    grid_t: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    grid_x: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
enum CommandArgs {
    /// Electron-repulsion expansions against direct evaluation.
    Expand {
        #[command(subcommand)]
        action: ExpandAction,
    },
    /// Power-series coefficients of the Bessel-type functions.
    Bessel {
        #[command(subcommand)]
        action: BesselAction,
    },
    /// Total energy of one doubly occupied configuration.
    Solve,
    /// Recompute a published energy table.
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        id: u32,
    },
}

#[derive(Subcommand, Debug)]
enum ExpandAction {
    /// Relative error of every method over the grid.
    Compare,
    /// Series-vs-projection discrepancy of each Bessel-type function.
    Oracle,
}

#[derive(Subcommand, Debug)]
enum BesselAction {
    Table {
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 1)]
        terms: usize,
    },
}

/// Settings read from a config file.
#[derive(Debug, Default, Clone, PartialEq)]
struct FileConfig {
    z: Option<u32>,
    gamma: Option<f64>,
    c: Option<f64>,
    mass_ratio: Option<f64>,
    chi: Option<bool>,
    level: Option<String>,
    state: Option<String>,
    mode: Option<String>,
    order: Option<usize>,
    count: Option<usize>,
    r_box: Option<f64>,
    scheme: Option<String>,
    r_first: Option<f64>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| usage(format!("config line {line}: bad value '{value}' for {key}")))
}

fn parse_config_text(text: &str) -> Result<FileConfig, CliError> {
    let mut cfg = FileConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {line}: expected key = value")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "z" => cfg.z = Some(parse_value(key, value, line)?),
            "gamma" => cfg.gamma = Some(parse_value(key, value, line)?),
            "c" => cfg.c = Some(parse_value(key, value, line)?),
            "mass_ratio" => cfg.mass_ratio = Some(parse_value(key, value, line)?),
            "chi" => {
                cfg.chi = Some(match value {
                    "on" | "true" | "1" => true,
                    "off" | "false" | "0" => false,
                    _ => return Err(usage(format!("config line {line}: chi must be on or off"))),
                })
            }
            "level" => cfg.level = Some(value.to_string()),
            "state" => cfg.state = Some(value.to_string()),
            "mode" => cfg.mode = Some(value.to_string()),
            "basis.order" => cfg.order = Some(parse_value(key, value, line)?),
            "basis.count" => cfg.count = Some(parse_value(key, value, line)?),
            "basis.box" => cfg.r_box = Some(parse_value(key, value, line)?),
            "basis.scheme" => cfg.scheme = Some(value.to_string()),
            "basis.r_first" => cfg.r_first = Some(parse_value(key, value, line)?),
            other => return Err(usage(format!("config line {line}: unknown key '{other}'"))),
        }
    }
    Ok(cfg)
}

fn read_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn build_basis(
    order: usize,
    count: usize,
    r_box: f64,
    scheme: &str,
    r_first: Option<f64>,
) -> Result<BasisSpec, CliError> {
    if r_box.is_nan() || r_box <= 0.0 {
        return Err(usage(format!("box radius {r_box} must be positive")));
    }
    let r_first = r_first.unwrap_or(R_FIRST_FRACTION * r_box);
    if !(r_first > 0.0 && r_first < r_box) {
        return Err(usage(format!("first knot {r_first} must lie in (0, box)")));
    }
    let spec = match scheme {
        "geometric-then-linear" => BasisSpec::geometric_then_linear(order, count, r_box, r_first),
        "geometric" => BasisSpec::geometric_filling(order, count, r_box, r_first).map_err(|e| usage(e.to_string()))?,
        "linear" => BasisSpec::linear(order, count, r_box),
        other => return Err(usage(format!("unknown basis scheme '{other}'"))),
    };
    build_knots(&spec).map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

fn default_grid_t() -> Vec<f64> {
    (1..=8).map(|i| f64::from(i) / 10.0).collect()
}

fn default_grid_x() -> Vec<f64> {
    (-9..=9).map(|i| f64::from(i) / 10.0).collect()
}

/// Parse an argument vector (program name first).
pub fn parse<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let file = match &cli.config {
        Some(path) => read_config(path)?,
        None => FileConfig::default(),
    };

    let command = match cli.command {
        CommandArgs::Expand { action: ExpandAction::Compare } => Command::ExpandCompare,
        CommandArgs::Expand { action: ExpandAction::Oracle } => Command::ExpandOracle,
        CommandArgs::Bessel { action: BesselAction::Table { l, terms } } => {
            if terms == 0 {
                return Err(usage("--terms must be at least 1"));
            }
            Command::BesselTable { l, terms }
        }
        CommandArgs::Solve => Command::Solve,
        CommandArgs::Tables { id } => Command::Tables { id: TableId::from_number(id).map_err(|e| usage(e.to_string()))? },
    };

    let z = cli.z.or(file.z).unwrap_or(2);
    let mut params = ModelParams::new(z).map_err(|e| usage(e.to_string()))?;
    if let Some(g) = file.gamma {
        params.gamma = g;
    }
    if let Some(c) = file.c {
        params.c = c;
    }
    if let Some(m) = file.mass_ratio {
        params.mass_ratio = m;
    }
    if let Some(chi) = file.chi {
        params.chi_enabled = chi;
    }
    params.validate().map_err(|e| usage(e.to_string()))?;

    let state = cli.state.or(file.state).unwrap_or_else(|| "1s2".into());
    let state: Configuration = state.parse().map_err(|e: Error| usage(e.to_string()))?;
    let level = cli.level.or(file.level).unwrap_or_else(|| "h0".into());
    let level: CorrectionLevel = level.parse().map_err(|e: Error| usage(e.to_string()))?;
    let mode = cli.mode.or(file.mode).unwrap_or_else(|| "diag".into());
    let mode: SolveMode = mode.parse().map_err(|e: Error| usage(e.to_string()))?;

    let basis = build_basis(
        cli.order.or(file.order).unwrap_or(DESK_ORDER),
        cli.splines.or(file.count).unwrap_or(DESK_SPLINES),
        cli.r_box.or(file.r_box).unwrap_or(DESK_BOX),
        file.scheme.as_deref().unwrap_or("geometric-then-linear"),
        cli.r_first.or(file.r_first),
    )?;

    let lmax = cli.lmax.unwrap_or_else(|| vec![DEFAULT_LMAX]);
    let smax = cli.smax.unwrap_or_else(|| vec![DEFAULT_SMAX]);
    if lmax.is_empty() || smax.is_empty() {
        return Err(usage("--lmax and --smax need at least one value"));
    }
    let truncations = lmax
        .iter()
        .flat_map(|&l| smax.iter().map(move |&s| (s, l)))
        .map(|(s, l)| SeriesTruncation::new(s, l).map_err(|e| usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = ScanGrid::new(
        cli.grid_t.unwrap_or_else(default_grid_t),
        cli.grid_x.unwrap_or_else(default_grid_x),
    )
    .map_err(|e| usage(e.to_string()))?;

    Ok(RunConfig {
        command,
        format: cli.format.unwrap_or(OutputFormat::Csv),
        out: cli.out,
        params,
        state,
        level,
        mode,
        basis,
        truncations,
        grid,
    })
}

/// Run a parsed configuration and return the emitted artifact.
pub fn execute(cfg: &RunConfig) -> Result<Vec<u8>, Error> {
    let mut out = Vec::new();
    match &cfg.command {
        Command::ExpandCompare | Command::ExpandOracle => {
            let report = error_scan(&cfg.grid, &cfg.truncations)?;
            let oracle = cfg.command == Command::ExpandOracle;
            match (cfg.format, oracle) {
                (OutputFormat::Csv, false) => report.write_csv(&mut out)?,
                (OutputFormat::Csv, true) => report.write_oracle_csv(&mut out)?,
                (OutputFormat::Json, _) => out.extend(report.to_json()?.into_bytes()),
                (OutputFormat::Pretty, false) => out.extend(pretty_scan(&report).into_bytes()),
                (OutputFormat::Pretty, true) => out.extend(pretty_oracle(&report).into_bytes()),
            }
        }
        Command::BesselTable { l, terms } => {
            let rows = bessel_rows(*l, *terms)?;
            match cfg.format {
                OutputFormat::Csv => write_csv_rows(&mut out, &rows)?,
                OutputFormat::Json => out.extend(serde_json::to_string_pretty(&rows)?.into_bytes()),
                OutputFormat::Pretty => out.extend(pretty_bessel(&rows).into_bytes()),
            }
        }
        Command::Solve => {
            let mut breakdown = total_energy(&cfg.params, cfg.state, cfg.level, &cfg.basis, cfg.mode)?;
            if cfg.state != Configuration::doubly(StateLabel::S1) {
                breakdown.excitation_ev =
                    Some(excitation_energy_ev(&cfg.params, cfg.state, cfg.level, &cfg.basis, cfg.mode)?);
            }
            match cfg.format {
                OutputFormat::Csv => write_csv_rows(&mut out, std::slice::from_ref(&breakdown))?,
                OutputFormat::Json => out.extend(serde_json::to_string_pretty(&breakdown)?.into_bytes()),
                OutputFormat::Pretty => out.extend(pretty_breakdown(&breakdown).into_bytes()),
            }
        }
        Command::Tables { id } => {
            let artifact = reproduce_table(*id, &cfg.basis, cfg.mode)?;
            match cfg.format {
                OutputFormat::Csv => artifact.write_csv(&mut out)?,
                OutputFormat::Json => out.extend(artifact.to_json()?.into_bytes()),
                OutputFormat::Pretty => out.extend(pretty_table(&artifact).into_bytes()),
            }
        }
    }
    if cfg.format == OutputFormat::Json {
        out.push(b'\n');
    }
    Ok(out)
}

/// Parse, execute and write the artifact; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse(argv) {
        Ok(cfg) => cfg,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(e) => {
            eprintln!("multipole: {e}");
            return e.exit_code();
        }
    };
    let bytes = match execute(&cfg) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("multipole: {e}");
            return 1;
        }
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &bytes),
        None => std::io::stdout().lock().write_all(&bytes),
    };
    if let Err(e) = written {
        eprintln!("multipole: cannot write output: {e}");
        return 1;
    }
    0
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BesselRow {
    pub l: usize,
    pub s: usize,
    /// Exponent of sin 2α.
    pub power: usize,
    pub coefficient: f64,
    /// Exact rational, for the leading entries only.
    pub exact: String,
}

pub fn bessel_rows(l: usize, terms: usize) -> Result<Vec<BesselRow>, Error> {
    let table = bessel_coefficients(l, terms)?;
    let exact = bessel_coefficients_exact(l, terms.min(EXACT_TERMS))?;
    Ok(table
        .coeffs
        .iter()
        .enumerate()
        .map(|(s, &coefficient)| BesselRow {
            l,
            s,
            power: table.power(s),
            coefficient,
            exact: exact
                .get(s)
                .map(|q| if q.is_zero() { "0".to_string() } else { q.to_string() })
                .unwrap_or_default(),
        })
        .collect())
}

fn write_csv_rows<T: serde::Serialize>(out: &mut Vec<u8>, rows: &[T]) -> Result<(), Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed ten decimals in the usual range, scientific outside it.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-3..1e7).contains(&a) {
        format!("{x:.10}")
    } else {
        format!("{x:.9e}")
    }
}

/// Published values carry four decimals below 10 and three above.
fn published(x: f64) -> String {
    if x.abs() < 10.0 {
        format!("{x:.4}")
    } else {
        format!("{x:.3}")
    }
}

fn opt_number(x: Option<usize>) -> String {
    x.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn pretty_scan(report: &ErrorScanReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:>6} {:>6} {:>18}", "method", "l_max", "s_max", "max_rel_error");
    let mut seen: Vec<(Method, Option<usize>, Option<usize>)> = Vec::new();
    for row in &report.rows {
        let key = (row.method, row.l_max, row.s_max);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let max = report
            .rows
            .iter()
            .filter(|r| (r.method, r.l_max, r.s_max) == key)
            .map(|r| r.rel_error)
            .fold(0.0, f64::max);
        let _ = writeln!(
            s,
            "{:<12} {:>6} {:>6} {:>18}",
            row.method.to_string(),
            opt_number(row.l_max),
            opt_number(row.s_max),
            format_number(max)
        );
    }
    s
}

fn pretty_oracle(report: &ErrorScanReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>4} {:>6} {:>6} {:>20} {:>20} {:>18}", "l", "t", "s_max", "series", "oracle", "discrepancy");
    for r in &report.oracle {
        let _ = writeln!(
            s,
            "{:>4} {:>6} {:>6} {:>20} {:>20} {:>18}",
            r.l,
            r.t,
            r.s_max,
            format_number(r.series),
            format_number(r.oracle),
            format_number(r.discrepancy)
        );
    }
    s
}

fn pretty_bessel(rows: &[BesselRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>4} {:>4} {:>6} {:>20}  exact", "l", "s", "power", "coefficient");
    for r in rows {
        let _ = writeln!(s, "{:>4} {:>4} {:>6} {:>20}  {}", r.l, r.s, r.power, format_number(r.coefficient), r.exact);
    }
    s
}

fn pretty_breakdown(b: &EnergyBreakdown) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Z         {}", b.z);
    let _ = writeln!(s, "state     {}", b.state);
    let _ = writeln!(s, "level     {}", b.level);
    let _ = writeln!(s, "mode      {}", b.mode);
    for (name, v) in [
        ("epsilon", b.epsilon),
        ("kinetic", b.kinetic),
        ("v0", b.v0),
        ("v1", b.v1),
        ("v2", b.v2),
        ("v3", b.v3),
        ("v4", b.v4),
        ("total", b.total),
    ] {
        let _ = writeln!(s, "{name:<9} {}", format_number(v));
    }
    if let Some(x) = b.excitation_ev {
        let _ = writeln!(s, "excitation_ev {}", format_number(x));
    }
    let _ = writeln!(s, "grid      {}", b.grid_tag);
    s
}

fn pretty_table(t: &TableArtifact) -> String {
    let mut s = String::new();
    let mut levels: Vec<CorrectionLevel> = t.rows.iter().map(|r| r.level).collect();
    levels.sort();
    levels.dedup();
    let mut keys: Vec<(u32, String)> = Vec::new();
    for r in &t.rows {
        if !keys.iter().any(|(z, st)| *z == r.z && *st == r.state) {
            keys.push((r.z, r.state.clone()));
        }
    }
    let _ = writeln!(s, "Table {} ({} mode, basis {})", t.table, t.mode, t.basis.tag());
    let _ = write!(s, "{:>3} {:>5}", "Z", "state");
    for l in &levels {
        let _ = write!(s, " {:>30}", format!("{l} computed [published]"));
    }
    s.push('\n');
    for (z, state) in &keys {
        let _ = write!(s, "{z:>3} {state:>5}");
        for l in &levels {
            match t.get(*z, state, *l) {
                Some(r) => {
                    let _ = write!(s, " {:>30}", format!("{} [{}]", format_number(r.computed), published(r.published)));
                }
                None => {
                    let _ = write!(s, " {:>30}", "-");
                }
            }
        }
        s.push('\n');
    }
    let _ = writeln!(s, "\nH2 -> H3 shift: diagonalized / perturbative / published");
    for r in &t.relativistic_shifts {
        let _ = writeln!(
            s,
            "{:>3} {:>5} {:>18} {:>18} {:>10}",
            r.z,
            r.state,
            format_number(r.diagonalized),
            format_number(r.perturbative),
            format!("{:.4}", r.published)
        );
    }
    let _ = writeln!(s, "\nNote: {}", t.footnote);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        std::iter::once("multipole").chain(list.iter().copied()).map(String::from).collect()
    }

    #[test]
    fn parse_solve() {
        let cfg = parse(args(&["solve", "--z", "2", "--state", "1s2", "--level", "h0"])).unwrap();
        assert_eq!(cfg.command, Command::Solve);
        assert_eq!(cfg.params.z, 2);
        assert_eq!(cfg.state, Configuration::doubly(StateLabel::S1));
        assert_eq!(cfg.level, CorrectionLevel::H0);
        assert_eq!(cfg.mode, SolveMode::Diagonalize);
        assert_eq!(cfg.basis, BasisSpec::desk());
    }

    #[test]
    fn parse_tables() {
        let cfg = parse(args(&["tables", "--id", "2", "--format", "csv"])).unwrap();
        assert_eq!(cfg.command, Command::Tables { id: TableId::Isoelectronic });
        assert_eq!(cfg.format, OutputFormat::Csv);
    }

    #[test]
    fn usage_errors_exit_two() {
        for bad in [
            vec!["solve", "--z", "0"],
            vec!["solve", "--z", "7"],
            vec!["solve", "--level", "h9"],
            vec!["solve", "--mode", "exact"],
            vec!["solve", "--bogus"],
            vec!["tables", "--id", "3"],
            vec!["solve", "--box", "-1"],
            vec!["expand", "compare", "--grid-t", "1.5"],
            vec!["expand", "compare", "--smax", "500"],
        ] {
            let err = parse(args(&bad)).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad:?}: {err}");
        }
    }

    #[test]
    fn config_file_and_override() {
        let cfg = parse_config_text("# test\nz = 3\nchi = off\nbasis.count = 120\nbasis.box = 60 # bohr\nlevel=h2\n").unwrap();
        assert_eq!(cfg.z, Some(3));
        assert_eq!(cfg.chi, Some(false));
        assert_eq!(cfg.count, Some(120));
        assert_eq!(cfg.r_box, Some(60.0));
        assert_eq!(cfg.level.as_deref(), Some("h2"));
        assert!(matches!(parse_config_text("zz = 1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_config_text("z 1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_config_text("z = two"), Err(CliError::Usage(_))));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "z = 3\nbasis.count = 120\nbasis.box = 60\nlevel = h2\n").unwrap();
        let p = path.to_str().unwrap();
        let cfg = parse(args(&["solve", "--config", p, "--z", "4"])).unwrap();
        assert_eq!(cfg.params.z, 4);
        assert_eq!(cfg.level, CorrectionLevel::H2);
        assert_eq!(cfg.basis.n_splines, 120);
        assert_eq!(cfg.basis.r_box, 60.0);
        assert_eq!(cfg.basis.scheme.r_first(), Some(R_FIRST_FRACTION * 60.0));
    }

    #[test]
    fn bessel_table_leading_coefficient() {
        let cfg = parse(args(&["bessel", "table", "--l", "1", "--terms", "1"])).unwrap();
        let out = String::from_utf8(execute(&cfg).unwrap()).unwrap();
        assert_eq!(out, "l,s,power,coefficient,exact\n1,0,1,0.5,1/2\n");
    }

    #[test]
    fn number_format_keeps_digits() {
        assert_eq!(format_number(-2.91031685), "-2.9103168500");
        assert_eq!(format_number(5.3251e-5), "5.325100000e-5");
        assert_eq!(format_number(0.0), "0.0000000000");
    }
}
