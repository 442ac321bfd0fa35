use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use perronpoly::bilinear2d::bilinear_basis;
use perronpoly::lyapunov::{lyapunov_estimate, lyapunov_reference};
use perronpoly::quadrature::default_points;
use perronpoly::study::{parse_list, run_study, slope_reports, write_study_csv, Precision, StudyConfig};
use perronpoly::{build_basis, compute_invariant_density, l1_distance, DoubleDouble, MapModel, MapName, Real};

#[derive(Parser)]
#[command(name = "perronpoly", version, about = "Invariant densities and Lyapunov exponents of interval maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the measure-preserving basis of degree n.
    Basis {
        #[arg(long)]
        n: usize,
    },
    /// Print the four bilinear basis functions on [-1, 1]².
    Basis2d,
    /// Compute an invariant density and write it as CSV.
    Density {
        #[arg(long)]
        map: String,
        #[arg(long)]
        cells: usize,
        #[arg(long)]
        degree: usize,
        /// Output file; CSV goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "double")]
        precision: String,
    },
    /// Estimate the Lyapunov exponent from the computed density.
    Lyapunov {
        #[arg(long)]
        map: String,
        #[arg(long)]
        cells: usize,
        #[arg(long)]
        degree: usize,
        /// Gauss points per group (default max(k+1, 6)).
        #[arg(long)]
        quad: Option<usize>,
        #[arg(long, default_value = "double")]
        precision: String,
    },
    /// Run a convergence study and report slopes.
    Study {
        #[arg(long)]
        map: String,
        /// Comma-separated degrees, e.g. 0,1,2,3.
        #[arg(long)]
        degrees: String,
        /// Comma-separated cell counts; defaults to 16..256 adjusted per degree.
        #[arg(long)]
        cells: Option<String>,
        #[arg(long)]
        target: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quad: Option<usize>,
        #[arg(long, default_value = "double")]
        precision: String,
        /// Leave the wall-time column empty for reproducible output.
        #[arg(long)]
        no_timing: bool,
    },
}

enum Failure {
    Lib(perronpoly::Error),
    Io { path: PathBuf, source: io::Error },
    Config(String),
}

impl From<perronpoly::Error> for Failure {
    fn from(e: perronpoly::Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(e) if e.is_argument_error() => 2,
            Failure::Lib(_) => 3,
            Failure::Config(_) => 2,
            Failure::Io { .. } => 1,
        }
    }

    fn io(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
        move |source| Failure::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Failure::Config(msg) => f.write_str(msg),
        }
    }
}

type CmdResult = Result<(), Failure>;

macro_rules! say {
    ($($arg:tt)*) => {
        writeln!(io::stdout(), $($arg)*).map_err(Failure::io(Path::new("<stdout>")))?
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Basis { n } => cmd_basis(n),
        Command::Basis2d => cmd_basis2d(),
        Command::Density {
            map,
            cells,
            degree,
            out,
            precision,
        } => match precision.parse()? {
            Precision::Double => cmd_density::<f64>(&map, cells, degree, out.as_deref()),
            Precision::DoubleDouble => cmd_density::<DoubleDouble>(&map, cells, degree, out.as_deref()),
        },
        Command::Lyapunov {
            map,
            cells,
            degree,
            quad,
            precision,
        } => match precision.parse()? {
            Precision::Double => cmd_lyapunov::<f64>(&map, cells, degree, quad),
            Precision::DoubleDouble => cmd_lyapunov::<DoubleDouble>(&map, cells, degree, quad),
        },
        Command::Study {
            map,
            degrees,
            cells,
            target,
            out,
            quad,
            precision,
            no_timing,
        } => {
            let config = StudyConfig {
                map: map.parse()?,
                degrees: parse_list(&degrees)?,
                cells: cells.as_deref().map(parse_list).transpose()?,
                target: target.parse()?,
                precision: precision.parse()?,
                quad_points: quad,
            };
            cmd_study(&config, &out, !no_timing)
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Io { source, .. }) if source.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> CmdResult {
    let Ok(value) = std::env::var("PERRONPOLY_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Config(format!("PERRONPOLY_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot configure thread pool: {e}")))
}

fn cmd_basis(n: usize) -> CmdResult {
    let basis = build_basis::<f64>(n)?;
    for (k, p) in basis.polys().iter().enumerate() {
        say!("l_{{{n},{k}}}(t) = {}", format_poly(p.coeffs(), &["", "t"], false));
    }
    Ok(())
}

fn cmd_basis2d() -> CmdResult {
    for (k, row) in bilinear_basis().iter().enumerate() {
        for (l, p) in row.iter().enumerate() {
            say!(
                "l_{{1,{},{}}}(t,tau) = {}",
                k + 1,
                l + 1,
                format_poly(&p.coeffs(), &["", "t", "tau", "t tau"], true)
            );
        }
    }
    Ok(())
}

fn cmd_density<T: Real>(name: &str, cells: usize, degree: usize, out: Option<&Path>) -> CmdResult {
    let map: MapModel<T> = name.parse::<MapName>()?.model();
    let pd = compute_invariant_density(&map, cells, degree)?;
    let csv = pd.convert::<f64>().to_csv_string();
    match out {
        Some(path) => std::fs::write(path, csv).map_err(Failure::io(path))?,
        None => io::stdout()
            .lock()
            .write_all(csv.as_bytes())
            .map_err(Failure::io(Path::new("<stdout>")))?,
    }
    let masses = pd.cell_masses();
    let (lo, hi) = masses
        .iter()
        .map(|m| m.to_f64())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m), hi.max(m)));
    let mut summary = format!(
        "map={name} N={cells} n={degree} total_mass={:.16e} min_cell_mass={lo:.16e} max_cell_mass={hi:.16e}",
        pd.total_mass().to_f64()
    );
    if let Some(d) = map.reference_density_fn() {
        let err = l1_distance(&pd, |x| d(x))?;
        summary.push_str(&format!(" l1_error={:.16e}", err.to_f64()));
    }
    // Keep stdout pure CSV when the density itself goes there.
    if out.is_some() {
        say!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_lyapunov<T: Real>(name: &str, cells: usize, degree: usize, quad: Option<usize>) -> CmdResult {
    let map: MapModel<T> = name.parse::<MapName>()?.model();
    let pd = compute_invariant_density(&map, cells, degree)?;
    let m = quad.unwrap_or_else(|| default_points(degree));
    let r = lyapunov_estimate(&map, &pd, m)?;
    say!("map={name} N={cells} n={degree} m={m}");
    say!("sigma={:.16e}", r.sigma.to_f64());
    let reference = match map.reference_lyapunov() {
        Some(s) => Some(s),
        None if map.has_reference_density() => Some(lyapunov_reference(&map)?),
        None => None,
    };
    if let Some(s) = reference {
        say!("reference={:.16e}", s.to_f64());
        say!("abs_error={:.16e}", (r.sigma - s).abs().to_f64());
    }
    Ok(())
}

fn cmd_study(config: &StudyConfig, out: &Path, timing: bool) -> CmdResult {
    let outcome = run_study(config);
    let file = File::create(out).map_err(Failure::io(out))?;
    let mut w = BufWriter::new(file);
    write_study_csv(&outcome.rows, &mut w, timing).map_err(Failure::io(out))?;
    for row in &outcome.rows {
        if let Some(msg) = &row.warning {
            eprintln!("warning: n={} N={}: {msg}", row.degree, row.cells);
        }
    }
    if let Some(e) = outcome.error {
        return Err(e.into());
    }
    say!("{} study of {} ({})", config.target, config.map, config.precision);
    for report in slope_reports(&outcome.rows, config.target) {
        say!("{report}");
    }
    Ok(())
}

/// Renders `Σ c_j v_j` with coefficients as small fractions where possible,
/// highest-order term first (or in the given order when `in_order`).
fn format_poly(coeffs: &[f64], vars: &[&str], in_order: bool) -> String {
    let mut idx: Vec<usize> = (0..coeffs.len()).collect();
    if !in_order {
        idx.reverse();
    }
    let mut out = String::new();
    for j in idx {
        let c = coeffs[j];
        if c.abs() < 1e-13 {
            continue;
        }
        let var = match vars.get(j) {
            Some(v) => v.to_string(),
            None => format!("t^{j}"),
        };
        let mag = fraction(c.abs());
        let term = match (mag.as_str(), var.is_empty()) {
            (m, true) => m.to_string(),
            ("1", false) => var,
            (m, false) => format!("{m} {var}"),
        };
        if out.is_empty() {
            out = if c < 0.0 { format!("-{term}") } else { term };
        } else {
            out.push_str(if c < 0.0 { " - " } else { " + " });
            out.push_str(&term);
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// `p/q` from the continued-fraction expansion of `x > 0` when a denominator
/// up to 10⁶ reproduces it, otherwise a decimal.
fn fraction(x: f64) -> String {
    let (mut h0, mut h1) = (0f64, 1f64);
    let (mut k0, mut k1) = (1f64, 0f64);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > 1e6 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 / k1 - x).abs() <= 1e-13 * x.abs().max(1.0) {
            return if k1 == 1.0 { format!("{h1}") } else { format!("{h1}/{k1}") };
        }
        let frac = r - a;
        if frac < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    format!("{x:.16e}")
}
