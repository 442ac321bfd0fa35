//! Gauss–Legendre rules and a globally adaptive integrator built on them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Real};

pub const MAX_POINTS: usize = 64;
/// Bisection depth limit of [`integrate_adaptive`].
pub const MAX_DEPTH: u32 = 40;
const MAX_PANELS: usize = 200_000;

#[derive(Clone, Debug)]
pub struct QuadratureRule<T = f64> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn points(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `∫_a^b f` by the affine image of the rule on `[a, b]`.
    pub fn integrate<F: Fn(T) -> T>(&self, f: F, a: T, b: T) -> T {
        let half = (b - a) / T::from_f64(2.0);
        let mid = (a + b) / T::from_f64(2.0);
        let s: T = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum();
        s * half
    }
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre<T: Real>(m: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 1..m {
        let kk = T::from_usize(k);
        let p2 = ((T::from_usize(2 * k + 1)) * x * p1 - kk * p0) / T::from_usize(k + 1);
        p0 = p1;
        p1 = p2;
    }
    let dp = T::from_usize(m) * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// The `m`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre<T: Real>(m: usize) -> Result<QuadratureRule<T>> {
    if !(1..=MAX_POINTS).contains(&m) {
        return Err(Error::InvalidArgument(format!(
            "Gauss rule needs 1..={MAX_POINTS} points, got {m}"
        )));
    }
    let mut nodes = vec![T::zero(); m];
    let mut weights = vec![T::zero(); m];
    let two = T::from_f64(2.0);
    for i in 0..m.div_ceil(2) {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut x = T::from_f64(guess);
        if m % 2 == 1 && i == m / 2 {
            x = T::zero();
        }
        let mut converged = false;
        for _ in 0..100 {
            let (p, dp) = legendre(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs().to_f64() <= 4.0 * T::EPSILON * x.abs().to_f64().max(T::EPSILON) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotConverged {
                what: "Legendre root iteration",
                residual: legendre(m, x).0.abs().to_f64(),
            });
        }
        let (_, dp) = legendre(m, x);
        let w = two / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Smallest rule size keeping quadrature error below the approximation
/// error of a degree-`n` density: `k + 1` points for `n ∈ {2k-1, 2k}`.
pub fn min_points(n: usize) -> usize {
    (n + 1) / 2 + 1
}

/// Default rule size for density-weighted integrals: `max(k + 1, 6)`.
pub fn default_points(n: usize) -> usize {
    min_points(n).max(6)
}

#[derive(Clone, Copy, Debug)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    err: f64,
    depth: u32,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Reusable 7/15-point Gauss pair for adaptive integration.
#[derive(Clone, Debug)]
pub struct AdaptiveIntegrator<T = f64> {
    coarse: QuadratureRule<T>,
    fine: QuadratureRule<T>,
}

impl<T: Real> AdaptiveIntegrator<T> {
    pub fn new() -> Self {
        Self {
            coarse: gauss_legendre(7).expect("7-point rule"),
            fine: gauss_legendre(15).expect("15-point rule"),
        }
    }

    fn panel<F: Fn(T) -> T>(&self, f: &F, a: T, b: T, depth: u32) -> Result<Panel<T>> {
        let fine = self.fine.integrate(f, a, b);
        let coarse = self.coarse.integrate(f, a, b);
        if !fine.is_finite() || !coarse.is_finite() {
            return Err(Error::NonFiniteIntegrand {
                x: ((a + b) / T::from_f64(2.0)).to_f64(),
            });
        }
        Ok(Panel {
            a,
            b,
            value: fine,
            err: (fine - coarse).abs().to_f64(),
            depth,
        })
    }

    /// Global bisection of the panel with the largest error estimate until
    /// the summed estimate is at most `tol` (absolute).
    pub fn integrate<F: Fn(T) -> T>(&self, f: F, a: T, b: T, tol: f64) -> Result<T> {
        if !(a <= b) {
            return Err(Error::InvalidArgument(format!(
                "integration limits out of order: [{a}, {b}]"
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
        }
        if a == b {
            return Ok(T::zero());
        }
        let mut heap = BinaryHeap::new();
        let first = self.panel(&f, a, b, 0)?;
        let mut total_err = first.err;
        heap.push(first);
        while total_err > tol {
            let worst = heap.pop().expect("non-empty panel set");
            if worst.depth >= MAX_DEPTH || heap.len() + 2 > MAX_PANELS {
                heap.push(worst);
                return Err(Error::ToleranceNotMet {
                    estimate: sum_panels(heap.into_vec()).to_f64(),
                    error: total_err,
                });
            }
            let mid = (worst.a + worst.b) / T::from_f64(2.0);
            let left = self.panel(&f, worst.a, mid, worst.depth + 1)?;
            let right = self.panel(&f, mid, worst.b, worst.depth + 1)?;
            total_err = total_err - worst.err + left.err + right.err;
            heap.push(left);
            heap.push(right);
            if heap.len() % 64 == 0 {
                // Re-sum to shed drift from the running update.
                total_err = heap.iter().map(|p| p.err).sum();
            }
        }
        Ok(sum_panels(heap.into_vec()))
    }
}

impl<T: Real> Default for AdaptiveIntegrator<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn sum_panels<T: Real>(mut panels: Vec<Panel<T>>) -> T {
    panels.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap_or(Ordering::Equal));
    let values: Vec<T> = panels.iter().map(|p| p.value).collect();
    pairwise_sum(&values)
}

/// One-shot adaptive integration; see [`AdaptiveIntegrator::integrate`].
pub fn integrate_adaptive<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: f64) -> Result<T> {
    AdaptiveIntegrator::new().integrate(f, a, b, tol)
}
