//! Discontinuous piecewise-polynomial densities on a uniform partition of
//! `[0, 1]`, grouped in blocks of `n + 1` cells.
//!
//! Each group `[x_s, x_{s+n+1}]` stores the density as a polynomial in the
//! local coordinate `t = -1 + 2(x - x_s)/((n+1)h)`, so a group polynomial `p`
//! carries sub-cell masses `((n+1)h/2) ∫_{t_j}^{t_{j+1}} p dt`.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::polybasis::{self, BasisSet, Polynomial};
use crate::quadrature::AdaptiveIntegrator;
use crate::scalar::{pairwise_sum, Real};

/// Uniform partition `x_i = i/N` of `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Partition {
    cells: usize,
}

impl Partition {
    pub fn new(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidArgument("partition needs at least one cell".into()));
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn width<T: Real>(&self) -> T {
        T::ratio(1, self.cells as i64)
    }

    pub fn knot<T: Real>(&self, i: usize) -> T {
        T::ratio(i as i64, self.cells as i64)
    }

    /// Checks that the cells split into groups of `degree + 1`.
    pub fn groups(&self, degree: usize) -> Result<usize> {
        let size = degree + 1;
        if self.cells < size || self.cells % size != 0 {
            return Err(Error::InvalidArgument(format!(
                "cell count {} is not a positive multiple of n+1 = {size}",
                self.cells
            )));
        }
        Ok(self.cells / size)
    }
}

/// Element of the trial space: one degree-`n` polynomial per group.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseDensity<T = f64> {
    partition: Partition,
    degree: usize,
    group_polys: Vec<Polynomial<T>>,
}

impl<T: Real> PiecewiseDensity<T> {
    /// `group_polys[s]` is the density on group `s` in local `t`.
    pub fn new(partition: Partition, degree: usize, group_polys: Vec<Polynomial<T>>) -> Result<Self> {
        let groups = partition.groups(degree)?;
        if group_polys.len() != groups {
            return Err(Error::InvalidArgument(format!(
                "expected {groups} group polynomials, got {}",
                group_polys.len()
            )));
        }
        let group_polys = group_polys
            .into_iter()
            .map(|p| {
                if p.degree() > degree {
                    Err(Error::InvalidArgument(format!(
                        "group polynomial of degree {} exceeds n = {degree}",
                        p.degree()
                    )))
                } else {
                    Ok(p.resized(degree + 1))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            partition,
            degree,
            group_polys,
        })
    }

    /// The unique element with the given cell masses.
    pub fn from_masses(basis: &BasisSet<T>, cells: usize, masses: &[T]) -> Result<Self> {
        let partition = Partition::new(cells)?;
        let n = basis.degree();
        partition.groups(n)?;
        if masses.len() != cells {
            return Err(Error::InvalidArgument(format!(
                "expected {cells} cell masses, got {}",
                masses.len()
            )));
        }
        // D(t) = Σ M_k ℓ_k and d = 2D / ((n+1)h) = 2N D / (n+1).
        let scale = T::ratio(2 * cells as i64, (n + 1) as i64);
        let group_polys = masses
            .chunks_exact(n + 1)
            .map(|m| basis.reconstruct(m).map(|p| p.scale(scale)))
            .collect::<Result<_>>()?;
        Ok(Self {
            partition,
            degree: n,
            group_polys,
        })
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn cells(&self) -> usize {
        self.partition.cells
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn groups(&self) -> usize {
        self.group_polys.len()
    }

    pub fn group_polys(&self) -> &[Polynomial<T>] {
        &self.group_polys
    }

    /// `(x_lo, x_hi)` of group `s`.
    pub fn group_bounds(&self, s: usize) -> (T, T) {
        let size = self.degree + 1;
        (self.partition.knot(s * size), self.partition.knot((s + 1) * size))
    }

    /// Local coordinate of `x` within group `s`.
    pub fn local_t(&self, s: usize, x: T) -> T {
        let (lo, hi) = self.group_bounds(s);
        T::from_f64(2.0) * (x - lo) / (hi - lo) - T::one()
    }

    /// Evaluates group `s`'s polynomial at `x`, wherever `x` lies.
    pub fn eval_in_group(&self, s: usize, x: T) -> T {
        self.group_polys[s].eval(self.local_t(s, x))
    }

    /// Group owning `x`; an interior group boundary belongs to the left group.
    pub fn group_index(&self, x: T) -> Result<usize> {
        if !(x >= T::zero() && x <= T::one()) {
            return Err(Error::Domain { x: x.to_f64() });
        }
        let groups = self.groups();
        let guess = (x.to_f64() * groups as f64).ceil() as usize;
        let mut s = guess.saturating_sub(1).min(groups - 1);
        while s > 0 && x <= self.group_bounds(s).0 {
            s -= 1;
        }
        while s + 1 < groups && x > self.group_bounds(s).1 {
            s += 1;
        }
        Ok(s)
    }

    pub fn eval(&self, x: T) -> Result<T> {
        let s = self.group_index(x)?;
        Ok(self.eval_in_group(s, x))
    }

    /// Exact cell masses from the group antiderivatives.
    pub fn cell_masses(&self) -> Vec<T> {
        let t = polybasis::nodes::<T>(self.degree);
        let half_width = T::ratio((self.degree + 1) as i64, 2 * self.cells() as i64);
        self.group_polys
            .iter()
            .flat_map(|p| {
                t.windows(2)
                    .map(|w| half_width * p.definite_integral(w[0], w[1]))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    pub fn total_mass(&self) -> T {
        pairwise_sum(&self.cell_masses())
    }

    pub fn convert<U: Real>(&self) -> PiecewiseDensity<U> {
        PiecewiseDensity {
            partition: self.partition,
            degree: self.degree,
            group_polys: self.group_polys.iter().map(Polynomial::convert).collect(),
        }
    }

    /// Largest coefficient difference over all groups; `INFINITY` when the
    /// shapes differ.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        if self.partition != other.partition || self.degree != other.degree {
            return f64::INFINITY;
        }
        self.group_polys
            .iter()
            .zip(&other.group_polys)
            .map(|(a, b)| a.max_coeff_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Petrov–Galerkin projection: the element of the trial space whose cell
/// masses equal those of `d`.
pub fn project_density<T, F>(d: F, cells: usize, degree: usize) -> Result<PiecewiseDensity<T>>
where
    T: Real,
    F: Fn(T) -> T + Sync,
{
    let basis = polybasis::build_basis::<T>(degree)?;
    let partition = Partition::new(cells)?;
    partition.groups(degree)?;
    let integrator = AdaptiveIntegrator::<T>::new();
    let tol = T::tol(1e-13);
    let masses = (0..cells)
        .into_par_iter()
        .map(|i| integrator.integrate(&d, partition.knot(i), partition.knot(i + 1), tol))
        .collect::<Result<Vec<T>>>()?;
    PiecewiseDensity::from_masses(&basis, cells, &masses)
}

/// Number of samples per cell used to locate sign changes of `d_ref - pd`.
const SIGN_SAMPLES: usize = 32;

/// `‖pd - d_ref‖₁`, accumulated cell by cell.
///
/// Sign changes of the difference inside a cell are located first so that
/// the adaptive rule only sees smooth, sign-definite pieces.
pub fn l1_distance<T, F>(pd: &PiecewiseDensity<T>, d_ref: F) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T + Sync,
{
    let integrator = AdaptiveIntegrator::<T>::new();
    let tol = T::tol(1e-12);
    let size = pd.degree + 1;
    let per_cell = (0..pd.cells())
        .into_par_iter()
        .map(|i| {
            let s = i / size;
            let diff = |x: T| d_ref(x) - pd.eval_in_group(s, x);
            let (a, b) = (pd.partition.knot::<T>(i), pd.partition.knot::<T>(i + 1));
            let cuts = sign_changes(&diff, a, b);
            let mut total = T::zero();
            for w in cuts.windows(2) {
                let piece = integrator.integrate(|x| diff(x).abs(), w[0], w[1], tol / cuts.len() as f64)?;
                total += piece;
            }
            Ok(total)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(pairwise_sum(&per_cell))
}

/// `[a, roots..., b]` where the roots bracket sign changes of `f` found on a
/// uniform sample grid, refined by bisection.
fn sign_changes<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> Vec<T> {
    let step = (b - a) / T::from_usize(SIGN_SAMPLES);
    let xs: Vec<T> = (0..=SIGN_SAMPLES)
        .map(|j| if j == SIGN_SAMPLES { b } else { a + step * T::from_usize(j) })
        .collect();
    let vals: Vec<T> = xs.iter().map(|&x| f(x)).collect();
    let mut cuts = vec![a];
    let two = T::from_f64(2.0);
    for j in 0..SIGN_SAMPLES {
        if !(vals[j] * vals[j + 1] < T::zero()) {
            continue;
        }
        let (mut lo, mut hi) = (xs[j], xs[j + 1]);
        let lo_negative = vals[j] < T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) / two;
            if mid <= lo || mid >= hi {
                break;
            }
            if (f(mid) < T::zero()) == lo_negative {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        cuts.push((lo + hi) / two);
    }
    cuts.push(b);
    cuts
}

impl PiecewiseDensity<f64> {
    /// CSV with header `group_index,x_lo,x_hi,c0..cn`, coefficients in local
    /// `t`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["group_index".to_string(), "x_lo".into(), "x_hi".into()];
        header.extend((0..=self.degree).map(|j| format!("c{j}")));
        w.write_record(&header).map_err(csv_io)?;
        for (s, p) in self.group_polys.iter().enumerate() {
            let (lo, hi) = self.group_bounds(s);
            let mut row = vec![s.to_string(), format!("{lo:.16e}"), format!("{hi:.16e}")];
            row.extend(p.coeffs().iter().map(|c| format!("{c:.16e}")));
            w.write_record(&row).map_err(csv_io)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("write failed: {e}")))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    /// Parses the format written by [`write_csv`](Self::write_csv). The
    /// partition is inferred from the row count and checked against the
    /// `x_lo`/`x_hi` columns.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(input);
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        if header.len() < 4 || &header[0] != "group_index" || &header[1] != "x_lo" || &header[2] != "x_hi" {
            return Err(parse_err(1, "expected header group_index,x_lo,x_hi,c0..cn".into()));
        }
        let degree = header.len() - 4;
        for (j, name) in header.iter().skip(3).enumerate() {
            if name != format!("c{j}") {
                return Err(parse_err(1, format!("column {} should be c{j}, found `{name}`", j + 3)));
            }
        }
        if degree > polybasis::MAX_DEGREE {
            return Err(parse_err(1, format!("degree {degree} above {}", polybasis::MAX_DEGREE)));
        }
        let mut bounds = Vec::new();
        let mut polys = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            let line = r + 2;
            let record = record.map_err(|e| parse_err(line, e.to_string()))?;
            if record.len() != header.len() {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            let index: usize = record[0]
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("bad group index `{}`", &record[0])))?;
            if index != r {
                return Err(parse_err(line, format!("group index {index} out of sequence (expected {r})")));
            }
            let nums = record
                .iter()
                .skip(1)
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(line, format!("bad number `{f}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            bounds.push((nums[0], nums[1]));
            polys.push(Polynomial::new(nums[2..].to_vec()));
        }
        let groups = polys.len();
        if groups == 0 {
            return Err(parse_err(2, "no data rows".into()));
        }
        let cells = groups
            .checked_mul(degree + 1)
            .ok_or_else(|| parse_err(2, "too many rows".into()))?;
        let partition = Partition::new(cells)?;
        let pd = Self::new(partition, degree, polys)?;
        for (s, &(lo, hi)) in bounds.iter().enumerate() {
            let (elo, ehi) = pd.group_bounds(s);
            if (lo - elo).abs() > 1e-12 || (hi - ehi).abs() > 1e-12 {
                return Err(parse_err(
                    s + 2,
                    format!("group bounds [{lo}, {hi}] do not match the uniform partition [{elo}, {ehi}]"),
                ));
            }
        }
        Ok(pd)
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        Self::read_csv(s.as_bytes())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("CSV write failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::DoubleDouble;
    use crate::polybasis::build_basis;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn d1(x: f64) -> f64 {
        4.0 / (PI * (1.0 + x * x))
    }

    fn d2(x: f64) -> f64 {
        2.0 / ((1.0 + x) * (1.0 + x))
    }

    fn d3(x: f64) -> f64 {
        12.0 * (x - 0.5) * (x - 0.5)
    }

    #[test]
    fn partition_knots_and_groups() {
        let p = Partition::new(12).unwrap();
        assert_eq!(p.knot::<f64>(3), 0.25);
        assert_eq!(p.width::<f64>(), 1.0 / 12.0);
        assert_eq!(p.groups(2).unwrap(), 4);
        assert!(p.groups(4).is_err());
        assert!(Partition::new(2).unwrap().groups(2).is_err());
        assert!(Partition::new(0).is_err());
    }

    #[test]
    fn uniform_projection_is_constant_one() {
        for n in 0..=3 {
            let pd = project_density(|_| 1.0, 8 * (n + 1), n).unwrap();
            for p in pd.group_polys() {
                assert!((p.coeffs()[0] - 1.0).abs() < 1e-13);
                assert!(p.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
            }
            assert!((pd.total_mass() - 1.0).abs() < 1e-12);
            assert!((pd.eval(0.3).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_reproduced_exactly() {
        let pd = project_density(d3, 6, 2).unwrap();
        assert!(l1_distance(&pd, d3).unwrap() < 1e-12);
        for s in 0..pd.groups() {
            let (lo, hi) = pd.group_bounds(s);
            let x = 0.3 * lo + 0.7 * hi;
            assert!((pd.eval_in_group(s, x) - d3(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_at_origin_near_reference() {
        let pd = project_density(d1, 16, 3).unwrap();
        // Error O(h⁴) with h = 1/16.
        assert!((pd.eval(0.0).unwrap() - 4.0 / PI).abs() < 1e-4);
        assert!(matches!(pd.eval(1.2), Err(Error::Domain { .. })));
    }

    #[test]
    fn group_boundaries_owned_by_left_group() {
        let pd = project_density(d1, 8, 1).unwrap();
        assert_eq!(pd.group_index(0.0).unwrap(), 0);
        assert_eq!(pd.group_index(0.25).unwrap(), 0);
        assert_eq!(pd.group_index(0.25 + 1e-15).unwrap(), 1);
        assert_eq!(pd.group_index(1.0).unwrap(), 3);
        // Left and right limits at a group boundary differ.
        let left = pd.eval_in_group(0, 0.25);
        let right = pd.eval_in_group(1, 0.25);
        assert_eq!(pd.eval(0.25).unwrap(), left);
        assert!((left - right).abs() > 1e-8);
    }

    #[test]
    fn cell_masses_of_uniform() {
        let pd = project_density(|_| 1.0, 4, 0).unwrap();
        for m in pd.cell_masses() {
            assert!((m - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn d2_masses_match_antiderivative() {
        let pd = project_density(d2, 8, 1).unwrap();
        for (i, m) in pd.cell_masses().into_iter().enumerate() {
            let (a, b) = (i as f64 / 8.0, (i + 1) as f64 / 8.0);
            let exact = 2.0 / (1.0 + a) - 2.0 / (1.0 + b);
            assert!((m - exact).abs() < 1e-13, "cell {i}");
        }
    }

    #[test]
    fn projection_is_idempotent() {
        for n in 0..=3 {
            let pd = project_density(d1, 8 * (n + 1), n).unwrap();
            let again = project_density(|x| pd.eval(x).unwrap(), pd.cells(), n).unwrap();
            assert!(pd.max_coeff_diff(&again) < 1e-11, "n={n}");
        }
    }

    #[test]
    fn projection_error_decays_with_order() {
        for n in 0..=3usize {
            let errs: Vec<f64> = [16usize, 32, 64, 128]
                .iter()
                .map(|&c| {
                    let cells = c * (n + 1);
                    let pd = project_density(d1, cells, n).unwrap();
                    (cells as f64, l1_distance(&pd, d1).unwrap())
                })
                .map(|(c, e)| {
                    assert!(e > 0.0);
                    (c.ln(), e.ln())
                })
                .collect::<Vec<_>>()
                .windows(2)
                .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                .collect();
            for s in errs {
                assert!((s + (n as f64 + 1.0)).abs() < 0.25, "n={n} slope {s}");
            }
        }
    }

    #[test]
    fn l1_distance_of_constant_offset() {
        let pd = project_density(|_| 1.0, 4, 1).unwrap();
        let e = l1_distance(&pd, |x| 1.0 + 0.5 * (x - 0.5)).unwrap();
        assert!((e - 0.125).abs() < 1e-13);
    }

    #[test]
    fn double_double_projection() {
        let pi = DoubleDouble::pi();
        let four = DoubleDouble::from_f64(4.0);
        let pd = project_density(move |x: DoubleDouble| four / (pi * (DoubleDouble::one() + x * x)), 24, 2)
            .unwrap();
        assert!((pd.total_mass() - DoubleDouble::one()).abs().to_f64() < 1e-28);
        let f = project_density(d1, 24, 2).unwrap();
        assert!(pd.convert::<f64>().max_coeff_diff(&f) < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let pd = project_density(d1, 12, 3).unwrap();
        let text = pd.to_csv_string();
        assert!(text.starts_with("group_index,x_lo,x_hi,c0,c1,c2,c3\n"));
        let back = PiecewiseDensity::from_csv_str(&text).unwrap();
        assert_eq!(back, pd);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        let bad = [
            "",
            "group_index,x_lo,x_hi\n",
            "group_index,x_lo,x_hi,c0\n",
            "group_index,x_lo,x_hi,c1\n0,0,1,1\n",
            "group_index,x_lo,x_hi,c0\n1,0,1,1\n",
            "group_index,x_lo,x_hi,c0\n0,0,1,abc\n",
            "group_index,x_lo,x_hi,c0\n0,0,1,inf\n",
            "group_index,x_lo,x_hi,c0\n0,0,0.5,1\n",
            "group_index,x_lo,x_hi,c0\n0,0,1\n",
            "group_index,x_lo,x_hi,c0,c1\n0,0,0.5,1,0\n",
        ];
        for text in bad {
            let err = PiecewiseDensity::from_csv_str(text).unwrap_err();
            assert!(err.is_argument_error(), "{text:?}: {err}");
        }
    }

    #[test]
    fn from_masses_checks_counts() {
        let basis = build_basis::<f64>(1).unwrap();
        assert!(PiecewiseDensity::from_masses(&basis, 4, &[0.25; 3]).is_err());
        assert!(PiecewiseDensity::from_masses(&basis, 3, &[0.25; 3]).is_err());
    }

    proptest! {
        #[test]
        fn reconstruct_inverts_cell_masses(
            n in 0usize..4,
            groups in 1usize..6,
            seed in proptest::collection::vec(0.01f64..1.0, 24),
        ) {
            let cells = groups * (n + 1);
            let total: f64 = seed[..cells].iter().sum();
            let masses: Vec<f64> = seed[..cells].iter().map(|m| m / total).collect();
            let basis = build_basis::<f64>(n).unwrap();
            let pd = PiecewiseDensity::from_masses(&basis, cells, &masses).unwrap();
            prop_assert!((pd.total_mass() - 1.0).abs() < 1e-12);
            for (a, b) in pd.cell_masses().iter().zip(&masses) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let again = PiecewiseDensity::from_masses(&basis, cells, &pd.cell_masses()).unwrap();
            prop_assert!(pd.max_coeff_diff(&again) < 1e-12 * cells as f64);
        }

        #[test]
        fn csv_round_trip_any(
            n in 0usize..4,
            groups in 1usize..5,
            coeffs in proptest::collection::vec(-1e3f64..1e3, 20),
        ) {
            let polys = (0..groups)
                .map(|s| Polynomial::new(coeffs[s * (n + 1)..(s + 1) * (n + 1)].to_vec()))
                .collect();
            let pd = PiecewiseDensity::new(Partition::new(groups * (n + 1)).unwrap(), n, polys).unwrap();
            let back = PiecewiseDensity::from_csv_str(&pd.to_csv_string()).unwrap();
            prop_assert!(pd.max_coeff_diff(&back) == 0.0);
        }
    }
}
