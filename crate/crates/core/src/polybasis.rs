//! Measure-preserving polynomial basis on the reference interval `[-1, 1]`.
//!
//! The interval is split into `n + 1` equal sub-cells with nodes
//! `t_j = -1 + 2j/(n+1)`. Basis function `ℓ_k` has unit integral over sub-cell
//! `k` and zero integral over every other sub-cell, so a polynomial with
//! prescribed sub-cell masses `M_0..M_n` is simply `Σ M_k ℓ_k`.
//!
//! Two independent constructions are provided: a direct linear solve of the
//! defining integral conditions ([`build_basis`]) and differentiation of the
//! Lagrange interpolant of the cumulative measure ([`build_basis_via_measure`]).

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu};
use crate::scalar::Real;

/// Largest supported degree; equispaced constructions lose accuracy beyond it.
pub const MAX_DEGREE: usize = 12;

/// Dense monomial polynomial `Σ c_j t^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T = f64> {
    coeffs: Vec<T>,
}

impl<T: Real> Polynomial<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn zero(len: usize) -> Self {
        Self {
            coeffs: vec![T::zero(); len],
        }
    }

    pub fn constant(c: T) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Number of stored coefficients minus one (trailing zeros included).
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero(1);
        }
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| c * T::from_usize(j))
                .collect(),
        }
    }

    /// Antiderivative vanishing at `t = 0`.
    pub fn antiderivative(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(T::zero());
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| c / T::from_usize(j + 1)),
        );
        Self { coeffs }
    }

    /// `∫_a^b p(t) dt` from the exact antiderivative.
    pub fn definite_integral(&self, a: T, b: T) -> T {
        let prim = |x: T| {
            self.coeffs
                .iter()
                .enumerate()
                .rev()
                .fold(T::zero(), |acc, (j, &c)| acc * x + c / T::from_usize(j + 1))
                * x
        };
        prim(b) - prim(a)
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[T], j: usize| v.get(j).copied().unwrap_or_else(T::zero);
        Self {
            coeffs: (0..len)
                .map(|j| get(&self.coeffs, j) + get(&other.coeffs, j))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    /// `p(-t)`.
    pub fn reflect(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| if j % 2 == 1 { -c } else { c })
                .collect(),
        }
    }

    /// Pads with zeros (or truncates) to exactly `len` coefficients.
    pub fn resized(&self, len: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(len, T::zero());
        Self { coeffs }
    }

    pub fn convert<U: Real>(&self) -> Polynomial<U> {
        Polynomial {
            coeffs: self.coeffs.iter().map(|&c| U::from_f64(c.to_f64())).collect(),
        }
    }

    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let len = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[T], j: usize| v.get(j).copied().unwrap_or_else(T::zero);
        (0..len)
            .map(|j| (get(&self.coeffs, j) - get(&other.coeffs, j)).abs().to_f64())
            .fold(0.0, f64::max)
    }
}

/// Sub-cell nodes `t_j = -1 + 2j/(n+1)`, `j = 0..=n+1`.
pub fn nodes<T: Real>(n: usize) -> Vec<T> {
    let m = (n + 1) as i64;
    (0..=m).map(|j| T::ratio(2 * j - m, m)).collect()
}

/// The `n + 1` measure-preserving basis polynomials of degree `n`.
#[derive(Clone, Debug)]
pub struct BasisSet<T = f64> {
    degree: usize,
    nodes: Vec<T>,
    polys: Vec<Polynomial<T>>,
}

impl<T: Real> BasisSet<T> {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn polys(&self) -> &[Polynomial<T>] {
        &self.polys
    }

    pub fn poly(&self, k: usize) -> &Polynomial<T> {
        &self.polys[k]
    }

    /// `∫_a^b ℓ_k(t) dt` for `-1 <= a <= b <= 1`.
    pub fn integral(&self, k: usize, a: T, b: T) -> Result<T> {
        if k > self.degree {
            return Err(Error::InvalidArgument(format!(
                "basis index {k} exceeds degree {}",
                self.degree
            )));
        }
        if !(a >= -T::one() && a <= b && b <= T::one()) {
            return Err(Error::InvalidArgument(format!(
                "integration limits [{a}, {b}] not an ordered sub-interval of [-1, 1]"
            )));
        }
        Ok(self.polys[k].definite_integral(a, b))
    }

    /// The unique degree-`n` polynomial with sub-cell masses `masses`.
    pub fn reconstruct(&self, masses: &[T]) -> Result<Polynomial<T>> {
        if masses.len() != self.degree + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} masses, got {}",
                self.degree + 1,
                masses.len()
            )));
        }
        let mut coeffs = vec![T::zero(); self.degree + 1];
        for (poly, &m) in self.polys.iter().zip(masses) {
            for (c, &b) in coeffs.iter_mut().zip(poly.coeffs()) {
                *c += m * b;
            }
        }
        Ok(Polynomial::new(coeffs))
    }

    /// Sub-cell masses `∫_{t_j}^{t_{j+1}} p(t) dt` of an arbitrary polynomial.
    pub fn cell_masses(&self, p: &Polynomial<T>) -> Vec<T> {
        self.nodes
            .windows(2)
            .map(|w| p.definite_integral(w[0], w[1]))
            .collect()
    }
}

fn check_degree(n: usize) -> Result<()> {
    if n > MAX_DEGREE {
        return Err(Error::DegreeUnsupported {
            degree: n,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

/// Solves the defining conditions `∫_{t_j}^{t_{j+1}} ℓ_k = δ_jk` directly.
pub fn build_basis<T: Real>(n: usize) -> Result<BasisSet<T>> {
    check_degree(n)?;
    let t = nodes::<T>(n);
    let size = n + 1;
    let mut a = DenseMatrix::zeros(size, size);
    for j in 0..size {
        for p in 0..size {
            let e = (p + 1) as u32;
            a[(j, p)] = (t[j + 1].powi(e) - t[j].powi(e)) / T::from_usize(p + 1);
        }
    }
    let lu = Lu::factor(&a).map_err(|_| Error::Singular("basis moment matrix"))?;
    let polys = (0..size)
        .map(|k| {
            let mut rhs = vec![T::zero(); size];
            rhs[k] = T::one();
            Polynomial::new(lu.solve(&rhs))
        })
        .collect();
    Ok(BasisSet {
        degree: n,
        nodes: t,
        polys,
    })
}

/// Lagrange cardinal polynomial for node `j` over `nodes`.
fn lagrange_cardinal<T: Real>(nodes: &[T], j: usize) -> Polynomial<T> {
    nodes
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .fold(Polynomial::constant(T::one()), |acc, (_, &ti)| {
            let denom = nodes[j] - ti;
            acc.mul(&Polynomial::new(vec![-ti / denom, T::one() / denom]))
        })
}

/// Interpolant of the cumulative measure through the sub-cell nodes.
#[derive(Clone, Debug)]
pub struct MeasureInterpolant<T = f64> {
    degree: usize,
    node_values: Vec<T>,
    q: Polynomial<T>,
}

impl<T: Real> MeasureInterpolant<T> {
    /// Interpolates `ν(t_0) = 0`, `ν(t_j) = Σ_{k<j} M_k` with a polynomial of
    /// degree `n + 1`, where `n + 1 = masses.len()`.
    pub fn new(masses: &[T]) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidArgument("no masses given".into()));
        }
        let n = masses.len() - 1;
        check_degree(n)?;
        let t = nodes::<T>(n);
        let mut node_values = Vec::with_capacity(n + 2);
        node_values.push(T::zero());
        let mut acc = T::zero();
        for &m in masses {
            acc += m;
            node_values.push(acc);
        }
        let q = node_values
            .iter()
            .enumerate()
            .skip(1)
            .fold(Polynomial::zero(n + 2), |q, (j, &v)| {
                q.add(&lagrange_cardinal(&t, j).scale(v))
            });
        Ok(Self {
            degree: n,
            node_values,
            q,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn node_values(&self) -> &[T] {
        &self.node_values
    }

    pub fn q(&self) -> &Polynomial<T> {
        &self.q
    }

    /// The measure-preserving density `q'`.
    pub fn density(&self) -> Polynomial<T> {
        self.q.derivative()
    }
}

/// Builds `ℓ_k = Σ_{j>k} L_j'` by differentiating the interpolated measure of
/// a unit mass on sub-cell `k`.
pub fn build_basis_via_measure<T: Real>(n: usize) -> Result<BasisSet<T>> {
    check_degree(n)?;
    let polys = (0..=n)
        .map(|k| {
            let mut masses = vec![T::zero(); n + 1];
            masses[k] = T::one();
            MeasureInterpolant::new(&masses).map(|mi| mi.density().resized(n + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BasisSet {
        degree: n,
        nodes: nodes(n),
        polys,
    })
}
