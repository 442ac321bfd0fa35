//! The discretised Frobenius–Perron operator on cell masses and its fixed
//! point.

use std::ops::Deref;

use rayon::prelude::*;

use crate::density::{Partition, PiecewiseDensity};
use crate::error::{Error, Result};
use crate::linalg::{inf_norm, DenseMatrix, Lu};
use crate::maps::MapModel;
use crate::polybasis::{build_basis, BasisSet};
use crate::scalar::{pairwise_sum, Real};

/// Column sums must equal 1 to within this.
pub const STOCHASTIC_TOL: f64 = 1e-10;
/// Accepted fixed points satisfy `‖Am - m‖∞ < RESIDUAL_TOL ‖m‖∞`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Largest supported cell count; `A` is stored densely.
pub const MAX_CELLS: usize = 8192;

const INVERSE_POWER_SHIFT: f64 = 1e-8;
const INVERSE_POWER_MAX_ITER: usize = 500;
const INVERSE_POWER_TOL: f64 = 1e-13;
/// Two inverse-power runs from different starts must agree to this.
const AMBIGUITY_TOL: f64 = 1e-8;

/// `m ← A m`: row `i` collects the mass arriving in cell `I_i`, column `j`
/// is the basis function attached to cell `I_j`.
#[derive(Clone, Debug)]
pub struct TransferMatrix<T = f64> {
    cells: usize,
    degree: usize,
    entries: DenseMatrix<T>,
}

impl<T: Real> TransferMatrix<T> {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn entries(&self) -> &DenseMatrix<T> {
        &self.entries
    }

    pub fn apply(&self, m: &[T]) -> Vec<T> {
        self.entries.mul_vec(m)
    }

    /// Largest `|Σ_i A_ij - 1|`.
    pub fn stochasticity_defect(&self) -> f64 {
        self.entries
            .column_sums()
            .into_iter()
            .map(|s| (s - T::one()).abs().to_f64())
            .fold(0.0, f64::max)
    }
}

/// Cell masses `m_i`, normalised to sum 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MassVector<T = f64>(Vec<T>);

impl<T: Real> MassVector<T> {
    /// Rescales `masses` to unit sum.
    pub fn normalised(mut masses: Vec<T>) -> Result<Self> {
        let total = pairwise_sum(&masses);
        if !(total.abs() > T::zero()) || !total.is_finite() {
            return Err(Error::InvalidArgument("mass vector has zero or non-finite sum".into()));
        }
        for m in &mut masses {
            *m = *m / total;
        }
        Ok(Self(masses))
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> Deref for MassVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Assembles `A` by integrating the basis over the preimage of every cell.
pub fn build_transfer_matrix<T: Real>(map: &MapModel<T>, cells: usize, degree: usize) -> Result<TransferMatrix<T>> {
    let basis = build_basis::<T>(degree)?;
    build_with_basis(map, &basis, cells)
}

fn build_with_basis<T: Real>(map: &MapModel<T>, basis: &BasisSet<T>, cells: usize) -> Result<TransferMatrix<T>> {
    let degree = basis.degree();
    if cells > MAX_CELLS {
        return Err(Error::InvalidArgument(format!(
            "{cells} cells exceeds the dense-matrix limit {MAX_CELLS}"
        )));
    }
    let partition = Partition::new(cells)?;
    partition.groups(degree)?;
    let rows = (0..cells)
        .into_par_iter()
        .map(|i| assemble_row(map, basis, partition, i))
        .collect::<Result<Vec<_>>>()?;
    let entries = DenseMatrix::from_rows(rows)?;
    for (j, s) in entries.column_sums().into_iter().enumerate() {
        if (s - T::one()).abs().to_f64() > STOCHASTIC_TOL {
            return Err(Error::NotStochastic { column: j, sum: s.to_f64() });
        }
    }
    Ok(TransferMatrix { cells, degree, entries })
}

fn assemble_row<T: Real>(map: &MapModel<T>, basis: &BasisSet<T>, partition: Partition, i: usize) -> Result<Vec<T>> {
    let cells = partition.cells();
    let size = basis.degree() + 1;
    let groups = cells / size;
    let group_knot = |s: usize| partition.knot::<T>(s * size);
    let snap = T::from_f64(T::tol(1e-14));
    let two = T::from_f64(2.0);
    let mut row = vec![T::zero(); cells];
    for seg in map.preimage_segments(partition.knot(i), partition.knot(i + 1))? {
        let (lo, hi) = (snap_to_knot(seg.lo, groups, &group_knot, snap), snap_to_knot(seg.hi, groups, &group_knot, snap));
        if !(lo < hi) {
            continue;
        }
        let mut s = locate_group(lo, groups, &group_knot);
        while s < groups {
            let (g_lo, g_hi) = (group_knot(s), group_knot(s + 1));
            if g_lo >= hi {
                break;
            }
            let a = lo.max(g_lo);
            let b = hi.min(g_hi);
            if a < b {
                let width = g_hi - g_lo;
                let clamp = |t: T| t.max(-T::one()).min(T::one());
                let tl = clamp(two * (a - g_lo) / width - T::one());
                let tr = clamp(two * (b - g_lo) / width - T::one());
                for k in 0..size {
                    row[s * size + k] += basis.integral(k, tl, tr)?;
                }
            }
            s += 1;
        }
    }
    Ok(row)
}

fn snap_to_knot<T: Real>(x: T, groups: usize, knot: &impl Fn(usize) -> T, snap: T) -> T {
    let s = ((x.to_f64() * groups as f64).round() as usize).min(groups);
    let k = knot(s);
    if (x - k).abs() <= snap {
        k
    } else {
        x
    }
}

/// Group `s` with `knot(s) <= x < knot(s + 1)` (the last group for `x = 1`).
fn locate_group<T: Real>(x: T, groups: usize, knot: &impl Fn(usize) -> T) -> usize {
    let mut s = ((x.to_f64() * groups as f64).floor().max(0.0) as usize).min(groups - 1);
    while s > 0 && knot(s) > x {
        s -= 1;
    }
    while s + 1 < groups && knot(s + 1) <= x {
        s += 1;
    }
    s
}

/// Fixed point `A m = m`, `Σ m = 1`.
///
/// Solves the bordered system (last row of `A - I` replaced by ones) by LU;
/// falls back to shifted inverse power iteration when that system is nearly
/// singular, which is also where a non-unique fixed point is detected.
pub fn solve_invariant_masses<T: Real>(a: &TransferMatrix<T>) -> Result<MassVector<T>> {
    let n = a.cells;
    let defect = a.stochasticity_defect();
    if defect > STOCHASTIC_TOL {
        return Err(Error::InvalidArgument(format!(
            "transfer matrix is not column-stochastic (defect {defect:e})"
        )));
    }
    let mut bordered = a.entries.clone();
    for i in 0..n {
        bordered[(i, i)] -= T::one();
    }
    bordered.row_mut(n - 1).fill(T::one());
    let direct = Lu::factor(&bordered)
        .ok()
        .filter(|lu| lu.pivot_ratio() >= 1e3 * T::EPSILON);
    let masses = match direct {
        Some(lu) => {
            let mut rhs = vec![T::zero(); n];
            rhs[n - 1] = T::one();
            MassVector::normalised(lu.solve(&rhs))?
        }
        None => inverse_power_checked(a)?,
    };
    let residual = fixed_point_residual(a, &masses);
    if residual >= RESIDUAL_TOL {
        return Err(Error::NotConverged {
            what: "fixed-point solve",
            residual,
        });
    }
    Ok(masses)
}

/// `‖Am - m‖∞ / ‖m‖∞`.
pub fn fixed_point_residual<T: Real>(a: &TransferMatrix<T>, m: &[T]) -> f64 {
    let am = a.apply(m);
    let diff: Vec<T> = am.iter().zip(m).map(|(&x, &y)| x - y).collect();
    (inf_norm(&diff) / inf_norm(m)).to_f64()
}

fn inverse_power_checked<T: Real>(a: &TransferMatrix<T>) -> Result<MassVector<T>> {
    let n = a.cells;
    let mut shifted = a.entries.clone();
    let mu = T::one() + T::from_f64(INVERSE_POWER_SHIFT);
    for i in 0..n {
        shifted[(i, i)] -= mu;
    }
    let lu = Lu::factor(&shifted)?;
    let uniform = vec![T::one(); n];
    let ramp: Vec<T> = (0..n).map(|i| T::from_usize(i + 1)).collect();
    let first = inverse_power(&lu, uniform)?;
    let second = inverse_power(&lu, ramp)?;
    let gap: Vec<T> = first.iter().zip(second.iter()).map(|(&x, &y)| x - y).collect();
    let discrepancy = (inf_norm(&gap) / inf_norm(&first)).to_f64();
    if discrepancy > AMBIGUITY_TOL {
        return Err(Error::AmbiguousFixedPoint { discrepancy });
    }
    Ok(first)
}

fn inverse_power<T: Real>(lu: &Lu<T>, start: Vec<T>) -> Result<MassVector<T>> {
    let mut x = MassVector::normalised(start)?;
    let mut change = f64::INFINITY;
    for _ in 0..INVERSE_POWER_MAX_ITER {
        let y = MassVector::normalised(lu.solve(&x))?;
        let diff: Vec<T> = y.iter().zip(x.iter()).map(|(&p, &q)| p - q).collect();
        change = inf_norm(&diff).to_f64();
        x = y;
        if change < INVERSE_POWER_TOL {
            return Ok(x);
        }
    }
    Err(Error::NotConverged {
        what: "inverse power iteration",
        residual: change,
    })
}

/// Builds `A`, solves for its fixed point and reconstructs the density.
pub fn compute_invariant_density<T: Real>(map: &MapModel<T>, cells: usize, degree: usize) -> Result<PiecewiseDensity<T>> {
    let basis = build_basis::<T>(degree)?;
    let a = build_with_basis(map, &basis, cells)?;
    let masses = solve_invariant_masses(&a)?;
    PiecewiseDensity::from_masses(&basis, cells, &masses)
}
