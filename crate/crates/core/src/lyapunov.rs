//! Lyapunov exponents `σ = ∫ log|g'| dμ` from an approximate or a reference
//! density.

use rayon::prelude::*;

use crate::density::PiecewiseDensity;
use crate::error::{Error, Result};
use crate::maps::MapModel;
use crate::quadrature::{default_points, gauss_legendre, min_points, AdaptiveIntegrator, QuadratureRule};
use crate::scalar::{pairwise_sum, Real};

/// Geometric refinement toward a singular endpoint: each level keeps the
/// outer three quarters of what is left.
const SINGULAR_LEVELS: usize = 40;
/// Rule size on the refined pieces: a ratio-4 ring around a logarithmic
/// singularity converges like 3^{-2m}, so six points leave ~1e-6 relative.
const SINGULAR_POINTS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovResult<T = f64> {
    pub sigma: T,
    pub cells: usize,
    pub degree: usize,
    pub quad_points: usize,
    /// Pieces that needed geometric refinement toward a point where `log|g'|`
    /// is singular.
    pub singular_pieces: usize,
}

/// `σ_N^n = ∫₀¹ log|g'(x)| d_N^n(x) dx` by `m`-point Gauss rules on every
/// group, split at branch joints and singular points.
pub fn lyapunov_estimate<T: Real>(map: &MapModel<T>, pd: &PiecewiseDensity<T>, m: usize) -> Result<LyapunovResult<T>> {
    let n = pd.degree();
    if m < min_points(n) {
        return Err(Error::InvalidArgument(format!(
            "{m} quadrature points is below the minimum {} for degree {n}",
            min_points(n)
        )));
    }
    let rule = gauss_legendre::<T>(m)?;
    let ring_rule = gauss_legendre::<T>(m.max(SINGULAR_POINTS))?;
    let mut cuts: Vec<T> = map.joints();
    cuts.extend_from_slice(map.singular_points());
    let singular = map.singular_points();
    let per_group = (0..pd.groups())
        .into_par_iter()
        .map(|s| {
            let (lo, hi) = pd.group_bounds(s);
            let f = |x: T| -> Result<T> {
                let d = map.deriv(x)?;
                Ok(d.abs().ln() * pd.eval_in_group(s, x))
            };
            let mut points = vec![lo];
            let mut inner: Vec<T> = cuts.iter().copied().filter(|&c| c > lo && c < hi).collect();
            inner.sort_by(|a, b| a.partial_cmp(b).expect("finite cut points"));
            inner.dedup();
            points.extend(inner);
            points.push(hi);
            let mut terms = Vec::new();
            let mut refined = 0;
            for w in points.windows(2) {
                let (a, b) = (w[0], w[1]);
                let sing_a = singular.contains(&a);
                let sing_b = singular.contains(&b);
                if sing_a || sing_b {
                    refined += 1;
                    if sing_a && sing_b {
                        let mid = (a + b) / T::from_f64(2.0);
                        terms.push(toward_singularity(&ring_rule, &f, a, mid)?);
                        terms.push(toward_singularity(&ring_rule, &f, b, mid)?);
                    } else if sing_a {
                        terms.push(toward_singularity(&ring_rule, &f, a, b)?);
                    } else {
                        terms.push(toward_singularity(&ring_rule, &f, b, a)?);
                    }
                } else {
                    terms.push(gauss_piece(&rule, &f, a, b)?);
                }
            }
            Ok((pairwise_sum(&terms), refined))
        })
        .collect::<Result<Vec<(T, usize)>>>()?;
    let values: Vec<T> = per_group.iter().map(|p| p.0).collect();
    Ok(LyapunovResult {
        sigma: pairwise_sum(&values),
        cells: pd.cells(),
        degree: n,
        quad_points: m,
        singular_pieces: per_group.iter().map(|p| p.1).sum(),
    })
}

/// [`lyapunov_estimate`] with the default rule size for the density's degree.
pub fn lyapunov_estimate_default<T: Real>(map: &MapModel<T>, pd: &PiecewiseDensity<T>) -> Result<LyapunovResult<T>> {
    lyapunov_estimate(map, pd, default_points(pd.degree()))
}

fn gauss_piece<T: Real>(rule: &QuadratureRule<T>, f: &impl Fn(T) -> Result<T>, a: T, b: T) -> Result<T> {
    if !(a < b) {
        return Ok(T::zero());
    }
    let half = (b - a) / T::from_f64(2.0);
    let mid = (a + b) / T::from_f64(2.0);
    let mut terms = Vec::with_capacity(rule.points());
    for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
        let x = mid + half * t;
        let mut v = f(x)?;
        if !v.is_finite() {
            // A node landing on an isolated singularity: nudge it once.
            let nudged = x + half * T::from_f64(1e-9);
            v = f(nudged)?;
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { x: x.to_f64() });
            }
        }
        terms.push(w * v);
    }
    Ok(pairwise_sum(&terms) * half)
}

/// Integrates over the interval between `singular` and `far`, splitting it
/// geometrically (ratio 1/4) toward `singular`.
fn toward_singularity<T: Real>(rule: &QuadratureRule<T>, f: &impl Fn(T) -> Result<T>, singular: T, far: T) -> Result<T> {
    let quarter = T::from_f64(0.25);
    // Below this distance the nodes of a piece are indistinguishable from
    // the singular point itself; what is left contributes below roundoff.
    let floor = singular.abs().max(T::one()) * T::from_f64(64.0 * T::EPSILON);
    let mut terms = Vec::with_capacity(SINGULAR_LEVELS + 1);
    let mut outer = far;
    let mut offset = far - singular;
    for _ in 0..SINGULAR_LEVELS {
        offset = offset * quarter;
        if offset.abs() <= floor {
            break;
        }
        let inner = singular + offset;
        let (a, b) = if inner < outer { (inner, outer) } else { (outer, inner) };
        terms.push(gauss_piece(rule, f, a, b)?);
        outer = inner;
    }
    if (outer - singular).abs() > floor {
        let (a, b) = if singular < outer { (singular, outer) } else { (outer, singular) };
        terms.push(gauss_piece(rule, f, a, b)?);
    }
    Ok(pairwise_sum(&terms))
}

/// `∫₀¹ log|g'| d` with the map's reference density, by adaptive quadrature
/// on each smooth piece.
pub fn lyapunov_reference<T: Real>(map: &MapModel<T>) -> Result<T> {
    let d = map
        .reference_density_fn()
        .ok_or_else(|| Error::MissingReferenceDensity(map.name().to_string()))?;
    let integrator = AdaptiveIntegrator::<T>::new();
    let pieces = map.smooth_pieces();
    let tol = T::tol(1e-12) / pieces.len() as f64;
    let mut terms = Vec::with_capacity(pieces.len());
    for (a, b) in pieces {
        let branch = &map.branches()[map.branch_index((a + b) / T::from_f64(2.0))?];
        terms.push(integrator.integrate(|x| branch.deriv(x).abs().ln() * d(x), a, b, tol)?);
    }
    Ok(pairwise_sum(&terms))
}
