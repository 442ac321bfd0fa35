//! Convergence studies over grids of `(n, N)` and slope fitting.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::dd::DoubleDouble;
use crate::density::l1_distance;
use crate::error::{Error, Result};
use crate::lyapunov::{lyapunov_estimate, lyapunov_reference};
use crate::maps::{MapModel, MapName};
use crate::quadrature::default_points;
use crate::scalar::Real;
use crate::transfer::compute_invariant_density;

/// Errors below this are treated as roundoff; slopes are then meaningless.
pub const EXACT_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Density,
    Lyapunov,
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "density" => Ok(Target::Density),
            "lyapunov" => Ok(Target::Lyapunov),
            _ => Err(Error::InvalidArgument(format!(
                "unknown target `{s}` (expected density or lyapunov)"
            ))),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Density => "density",
            Target::Lyapunov => "lyapunov",
        })
    }
}

/// Working precision of a computation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    #[default]
    Double,
    DoubleDouble,
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double" => Ok(Precision::Double),
            "double-double" => Ok(Precision::DoubleDouble),
            _ => Err(Error::InvalidArgument(format!(
                "unknown precision `{s}` (expected double or double-double)"
            ))),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Double => "double",
            Precision::DoubleDouble => "double-double",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub map: String,
    pub cells: usize,
    pub degree: usize,
    pub l1_error: Option<f64>,
    pub lyapunov_error: Option<f64>,
    pub sigma: Option<f64>,
    pub wall_time_seconds: f64,
    /// Set on rows that were skipped, e.g. `N` not divisible by `n + 1`.
    pub warning: Option<String>,
}

impl StudyRow {
    /// The error measured for `target`, if any.
    pub fn error(&self, target: Target) -> Option<f64> {
        match target {
            Target::Density => self.l1_error,
            Target::Lyapunov => self.lyapunov_error,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub map: MapName,
    pub degrees: Vec<usize>,
    /// `None` selects [`default_cells`] for each degree.
    pub cells: Option<Vec<usize>>,
    pub target: Target,
    pub precision: Precision,
    /// Gauss points for Lyapunov estimates; `None` uses the default for `n`.
    pub quad_points: Option<usize>,
}

/// `{16, 32, 64, 128, 256}` when divisible by `n + 1`, otherwise the same
/// dyadic progression started from the smallest multiple of `n + 1` above 16.
pub fn default_cells(n: usize) -> Vec<usize> {
    let size = n + 1;
    let base: Vec<usize> = (0..5).map(|k| 16 << k).collect();
    if base.iter().all(|c| c % size == 0) {
        return base;
    }
    let start = 16usize.div_ceil(size) * size;
    (0..5).map(|k| start << k).collect()
}

/// Study outcome: rows up to the first failure (in `(n, N)` order) and the
/// failure, if any.
#[derive(Debug)]
pub struct StudyOutcome {
    pub rows: Vec<StudyRow>,
    pub error: Option<Error>,
}

pub fn run_study(config: &StudyConfig) -> StudyOutcome {
    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for &n in &config.degrees {
        let cells = config.cells.clone().unwrap_or_else(|| default_cells(n));
        jobs.extend(cells.into_iter().map(|c| (n, c)));
    }
    jobs.sort_unstable();
    jobs.dedup();
    let results: Vec<Result<StudyRow>> = jobs
        .par_iter()
        .map(|&(n, cells)| match config.precision {
            Precision::Double => study_row::<f64>(config, n, cells),
            Precision::DoubleDouble => study_row::<DoubleDouble>(config, n, cells),
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => return StudyOutcome { rows, error: Some(e) },
        }
    }
    StudyOutcome { rows, error: None }
}

fn study_row<T: Real>(config: &StudyConfig, n: usize, cells: usize) -> Result<StudyRow> {
    let map: MapModel<T> = config.map.model();
    let mut row = StudyRow {
        map: config.map.to_string(),
        cells,
        degree: n,
        l1_error: None,
        lyapunov_error: None,
        sigma: None,
        wall_time_seconds: 0.0,
        warning: None,
    };
    if cells < n + 1 || cells % (n + 1) != 0 {
        row.warning = Some(format!("skipped: N = {cells} not divisible by n+1 = {}", n + 1));
        return Ok(row);
    }
    let start = Instant::now();
    let pd = compute_invariant_density(&map, cells, n)?;
    match config.target {
        Target::Density => {
            let d = map
                .reference_density_fn()
                .ok_or_else(|| Error::MissingReferenceDensity(map.name().to_string()))?;
            row.l1_error = Some(l1_distance(&pd, |x| d(x))?.to_f64());
        }
        Target::Lyapunov => {
            let reference = match map.reference_lyapunov() {
                Some(s) => s,
                None => lyapunov_reference(&map)?,
            };
            let m = config.quad_points.unwrap_or_else(|| default_points(n));
            let sigma = lyapunov_estimate(&map, &pd, m)?.sigma;
            row.sigma = Some(sigma.to_f64());
            row.lyapunov_error = Some((sigma - reference).abs().to_f64());
        }
    }
    row.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(row)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeReport {
    pub degree: usize,
    /// Slope of `log e` against `log N` over the last two grid points.
    pub final_slope: Option<f64>,
    pub least_squares_slope: Option<f64>,
    /// All errors at roundoff level; slopes carry no information.
    pub exact: bool,
}

impl fmt::Display for SlopeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: Option<f64>| s.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
        write!(
            f,
            "n={}: final-segment slope {}, least-squares slope {}",
            self.degree,
            show(self.final_slope),
            show(self.least_squares_slope)
        )?;
        if self.exact {
            f.write_str(" (exact: errors at roundoff)")?;
        }
        Ok(())
    }
}

/// `(log e_last - log e_prev) / (log N_last - log N_prev)`; negative for a
/// converging sequence.
pub fn final_segment_slope(points: &[(usize, f64)]) -> Option<f64> {
    let usable: Vec<&(usize, f64)> = points.iter().filter(|p| p.1 > 0.0).collect();
    let [.., prev, last] = usable.as_slice() else {
        return None;
    };
    Some((last.1.ln() - prev.1.ln()) / ((last.0 as f64).ln() - (prev.0 as f64).ln()))
}

/// Least-squares slope of `log e` against `log N`.
pub fn least_squares_slope(points: &[(usize, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(c, e)| ((c as f64).ln(), e.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One report per degree present in `rows`, in ascending degree order.
pub fn slope_reports(rows: &[StudyRow], target: Target) -> Vec<SlopeReport> {
    let mut degrees: Vec<usize> = rows.iter().map(|r| r.degree).collect();
    degrees.sort_unstable();
    degrees.dedup();
    degrees
        .into_iter()
        .map(|n| {
            let mut points: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.degree == n)
                .filter_map(|r| r.error(target).map(|e| (r.cells, e)))
                .collect();
            points.sort_by_key(|p| p.0);
            let exact = !points.is_empty() && points.iter().all(|p| p.1 < EXACT_THRESHOLD);
            SlopeReport {
                degree: n,
                final_slope: if exact { None } else { final_segment_slope(&points) },
                least_squares_slope: if exact { None } else { least_squares_slope(&points) },
                exact,
            }
        })
        .collect()
}

pub const STUDY_HEADER: &str = "map,n,N,l1_error,lyapunov_error,sigma,wall_time_seconds,note";

/// Writes rows as CSV. With `timing == false` the wall-time column is left
/// empty so that repeated runs produce identical files.
pub fn write_study_csv<W: Write>(rows: &[StudyRow], mut out: W, timing: bool) -> std::io::Result<()> {
    writeln!(out, "{STUDY_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for r in rows {
        let time = if timing {
            format!("{:.6}", r.wall_time_seconds)
        } else {
            String::new()
        };
        let note = r.warning.as_deref().unwrap_or("").replace(',', ";");
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.map,
            r.degree,
            r.cells,
            opt(r.l1_error),
            opt(r.lyapunov_error),
            opt(r.sigma),
            time,
            note
        )?;
    }
    out.flush()
}

/// Largest accepted list entry; keeps dense `N × N` problems at desk scale.
pub const MAX_LIST_VALUE: usize = 1 << 16;

/// Parses a comma-separated list of non-negative integers, e.g. `16,32,64`.
/// Entries are returned sorted with duplicates removed.
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    let err = |message: String| Error::Parse { line: 1, message };
    if s.trim().is_empty() {
        return Err(err("empty list".into()));
    }
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        let v: usize = item
            .parse()
            .map_err(|_| err(format!("`{item}` is not a non-negative integer")))?;
        if v > MAX_LIST_VALUE {
            return Err(err(format!("{v} exceeds the maximum {MAX_LIST_VALUE}")));
        }
        out.push(v);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
