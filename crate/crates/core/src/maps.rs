//! Piecewise-monotone maps of `[0, 1]` and preimages of intervals under them.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::AdaptiveIntegrator;
use crate::scalar::Real;

pub type RealFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// One monotone piece of a map.
#[derive(Clone)]
pub struct Branch<T = f64> {
    domain: (T, T),
    range: (T, T),
    direction: Direction,
    eval: RealFn<T>,
    deriv: RealFn<T>,
    inverse: Option<RealFn<T>>,
}

impl<T: Real> fmt::Debug for Branch<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Branch")
            .field("domain", &self.domain)
            .field("range", &self.range)
            .field("direction", &self.direction)
            .field("closed_form_inverse", &self.inverse.is_some())
            .finish()
    }
}

impl<T: Real> Branch<T> {
    /// `range` is the image of `domain`; it is stored rather than recomputed
    /// so that endpoint images are exact.
    pub fn new(
        domain: (T, T),
        range: (T, T),
        direction: Direction,
        eval: impl Fn(T) -> T + Send + Sync + 'static,
        deriv: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            domain,
            range,
            direction,
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            inverse: None,
        }
    }

    pub fn with_inverse(mut self, inverse: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    /// Drops the closed-form inverse, forcing numerical inversion.
    pub fn without_inverse(mut self) -> Self {
        self.inverse = None;
        self
    }

    pub fn domain(&self) -> (T, T) {
        self.domain
    }

    pub fn range(&self) -> (T, T) {
        self.range
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn has_closed_form_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn eval(&self, x: T) -> T {
        (self.eval)(x)
    }

    pub fn deriv(&self, x: T) -> T {
        (self.deriv)(x)
    }

    /// The unique `x` in the domain with `eval(x) = y`.
    pub fn inverse(&self, y: T) -> Result<T> {
        let (rlo, rhi) = self.range;
        if !(y >= rlo && y <= rhi) {
            return Err(Error::Range {
                y: y.to_f64(),
                lo: rlo.to_f64(),
                hi: rhi.to_f64(),
            });
        }
        let (lo, hi) = self.domain;
        // Range endpoints map to domain endpoints exactly.
        let at_start = match self.direction {
            Direction::Increasing => rlo,
            Direction::Decreasing => rhi,
        };
        if y == at_start {
            return Ok(lo);
        }
        if y == rlo || y == rhi {
            return Ok(hi);
        }
        let x = match &self.inverse {
            Some(inv) => inv(y),
            None => self.invert_numerically(y),
        };
        Ok(x.max(lo).min(hi))
    }

    /// Bisection to width 1e-14 (scaled to the precision of `T`) followed by
    /// two Newton polish steps.
    pub fn invert_numerically(&self, y: T) -> T {
        let (mut a, mut b) = self.domain;
        let width = T::from_f64(T::tol(1e-14));
        let increasing = self.direction == Direction::Increasing;
        let two = T::from_f64(2.0);
        while b - a > width {
            let mid = (a + b) / two;
            let above = self.eval(mid) > y;
            if above == increasing {
                b = mid;
            } else {
                a = mid;
            }
        }
        let mut x = (a + b) / two;
        let (lo, hi) = self.domain;
        for _ in 0..2 {
            let d = self.deriv(x);
            if d == T::zero() || !d.is_finite() {
                break;
            }
            let next = x - (self.eval(x) - y) / d;
            if !(next >= lo && next <= hi) {
                break;
            }
            x = next;
        }
        x
    }
}

/// Part of the preimage of an interval lying in one branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment<T = f64> {
    pub lo: T,
    pub hi: T,
    pub branch_index: usize,
}

impl<T: Real> Segment<T> {
    pub fn len(&self) -> T {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

#[derive(Clone)]
pub struct MapModel<T = f64> {
    name: String,
    branches: Vec<Branch<T>>,
    reference_density: Option<RealFn<T>>,
    reference_lyapunov: Option<T>,
    singular_points: Vec<T>,
}

impl<T: Real> fmt::Debug for MapModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapModel")
            .field("name", &self.name)
            .field("branches", &self.branches)
            .field("reference_density", &self.reference_density.is_some())
            .field("reference_lyapunov", &self.reference_lyapunov)
            .field("singular_points", &self.singular_points)
            .finish()
    }
}

impl<T: Real> MapModel<T> {
    /// Branch domains must tile `[0, 1]` in order.
    pub fn new(name: impl Into<String>, branches: Vec<Branch<T>>) -> Result<Self> {
        let name = name.into();
        let bad = |msg: String| Err(Error::InvalidArgument(format!("map `{name}`: {msg}")));
        let (Some(first), Some(last)) = (branches.first(), branches.last()) else {
            return bad("no branches".into());
        };
        if first.domain.0 != T::zero() || last.domain.1 != T::one() {
            return bad("branches must start at 0 and end at 1".into());
        }
        for (i, w) in branches.windows(2).enumerate() {
            if w[0].domain.1 != w[1].domain.0 {
                return bad(format!("gap or overlap between branches {i} and {}", i + 1));
            }
        }
        for (i, b) in branches.iter().enumerate() {
            let (lo, hi) = b.domain;
            let (rlo, rhi) = b.range;
            if !(lo < hi) || !(rlo < rhi) || rlo < T::zero() || rhi > T::one() {
                return bad(format!("branch {i} has a degenerate domain or range outside [0, 1]"));
            }
        }
        Ok(Self {
            name,
            branches,
            reference_density: None,
            reference_lyapunov: None,
            singular_points: Vec::new(),
        })
    }

    pub fn with_reference_density(mut self, d: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.reference_density = Some(Arc::new(d));
        self
    }

    pub fn with_reference_lyapunov(mut self, sigma: T) -> Self {
        self.reference_lyapunov = Some(sigma);
        self
    }

    /// Interior points where `g'` vanishes or is unbounded, so `log|g'|` is
    /// singular there.
    pub fn with_singular_points(mut self, mut points: Vec<T>) -> Self {
        points.sort_by(|a, b| a.partial_cmp(b).expect("finite singular points"));
        self.singular_points = points;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn branches(&self) -> &[Branch<T>] {
        &self.branches
    }

    pub fn singular_points(&self) -> &[T] {
        &self.singular_points
    }

    /// Interior branch endpoints.
    pub fn joints(&self) -> Vec<T> {
        self.branches[1..].iter().map(|b| b.domain.0).collect()
    }

    pub fn reference_lyapunov(&self) -> Option<T> {
        self.reference_lyapunov
    }

    pub fn has_reference_density(&self) -> bool {
        self.reference_density.is_some()
    }

    pub fn reference_density(&self, x: T) -> Option<T> {
        self.reference_density.as_ref().map(|d| d(x))
    }

    pub fn reference_density_fn(&self) -> Option<RealFn<T>> {
        self.reference_density.clone()
    }

    /// Index of the branch owning `x`; a shared endpoint belongs to the left
    /// branch.
    pub fn branch_index(&self, x: T) -> Result<usize> {
        if !(x >= T::zero() && x <= T::one()) {
            return Err(Error::Domain { x: x.to_f64() });
        }
        Ok(self
            .branches
            .iter()
            .position(|b| x <= b.domain.1)
            .unwrap_or(self.branches.len() - 1))
    }

    pub fn eval(&self, x: T) -> Result<T> {
        Ok(self.branches[self.branch_index(x)?].eval(x))
    }

    pub fn deriv(&self, x: T) -> Result<T> {
        Ok(self.branches[self.branch_index(x)?].deriv(x))
    }

    /// Pieces of `g^{-1}([lo, hi])`, one per branch whose range meets the
    /// interval in more than a point (or in the point itself when `lo == hi`).
    pub fn preimage_segments(&self, lo: T, hi: T) -> Result<Vec<Segment<T>>> {
        if !(lo >= T::zero() && lo <= hi && hi <= T::one()) {
            return Err(Error::InvalidArgument(format!(
                "[{lo}, {hi}] is not an ordered sub-interval of [0, 1]"
            )));
        }
        let mut out = Vec::with_capacity(self.branches.len());
        for (i, b) in self.branches.iter().enumerate() {
            let (rlo, rhi) = b.range;
            let a = lo.max(rlo);
            let c = hi.min(rhi);
            if a > c || (a == c && lo < hi) {
                continue;
            }
            let xa = b.inverse(a)?;
            let xc = b.inverse(c)?;
            let (slo, shi) = if xa <= xc { (xa, xc) } else { (xc, xa) };
            out.push(Segment {
                lo: slo,
                hi: shi,
                branch_index: i,
            });
        }
        Ok(out)
    }

    /// Checks monotonicity, range, inverse consistency and density
    /// normalisation. Intended for tests and for user-supplied models.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(format!("map `{}`: {msg}", self.name)));
        let slack = T::from_f64(T::tol(1e-12));
        for (i, b) in self.branches.iter().enumerate() {
            let (lo, hi) = b.domain;
            let pts: Vec<T> = (0..=64)
                .map(|s| lo + (hi - lo) * T::ratio(s, 64))
                .collect();
            let vals: Vec<T> = pts.iter().map(|&x| b.eval(x)).collect();
            for w in vals.windows(2) {
                let ok = match b.direction {
                    Direction::Increasing => w[1] > w[0],
                    Direction::Decreasing => w[1] < w[0],
                };
                if !ok {
                    return fail(format!("branch {i} not strictly monotone"));
                }
            }
            if vals
                .iter()
                .any(|&v| v < T::zero() - slack || v > T::one() + slack)
            {
                return fail(format!("branch {i} leaves [0, 1]"));
            }
            let (rlo, rhi) = b.range;
            for s in 0..=64 {
                let y = rlo + (rhi - rlo) * T::ratio(s, 64);
                let x = b.inverse(y)?;
                // Backward error: near an infinite slope the forward
                // residual is amplified by |g'|.
                let d = b.deriv(x).abs();
                if d.is_finite() && (b.eval(x) - y).abs() > slack * (T::one() + d) {
                    return fail(format!("branch {i} inverse inconsistent at y = {y}"));
                }
            }
        }
        if let Some(d) = &self.reference_density {
            let integrator = AdaptiveIntegrator::new();
            let mut total = T::zero();
            for piece in self.smooth_pieces() {
                total += integrator.integrate(|x| d(x), piece.0, piece.1, T::tol(1e-12))?;
            }
            if (total - T::one()).abs().to_f64() > 1e-10 {
                return fail(format!("reference density integrates to {total}"));
            }
        }
        Ok(())
    }

    /// `[0, 1]` split at branch joints and singular points.
    pub fn smooth_pieces(&self) -> Vec<(T, T)> {
        let mut cuts = vec![T::zero()];
        let mut interior: Vec<T> = self
            .joints()
            .into_iter()
            .chain(self.singular_points.iter().copied())
            .filter(|&p| p > T::zero() && p < T::one())
            .collect();
        interior.sort_by(|a, b| a.partial_cmp(b).expect("finite cut points"));
        interior.dedup();
        cuts.extend(interior);
        cuts.push(T::one());
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Names of the built-in maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapName {
    G1,
    G2,
    G3,
    Tent,
}

impl MapName {
    pub const ALL: [MapName; 4] = [MapName::G1, MapName::G2, MapName::G3, MapName::Tent];

    pub fn as_str(self) -> &'static str {
        match self {
            MapName::G1 => "g1",
            MapName::G2 => "g2",
            MapName::G3 => "g3",
            MapName::Tent => "tent",
        }
    }

    pub fn model<T: Real>(self) -> MapModel<T> {
        match self {
            MapName::G1 => g1(),
            MapName::G2 => g2(),
            MapName::G3 => g3(),
            MapName::Tent => tent(),
        }
    }
}

impl fmt::Display for MapName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MapName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMap(s.to_string()))
    }
}

/// Looks up a built-in map by name.
pub fn registry<T: Real>(name: &str) -> Result<MapModel<T>> {
    Ok(name.parse::<MapName>()?.model())
}

fn c<T: Real>(v: f64) -> T {
    T::from_f64(v)
}

/// `2x/(1-x²)` on `[0, √2-1]`, `(1-x²)/(2x)` on `[√2-1, 1]`; invariant
/// density `4/(π(1+x²))`, Lyapunov exponent `log 2`.
fn g1<T: Real>() -> MapModel<T> {
    let one = T::one();
    let two = c::<T>(2.0);
    let joint = two.sqrt() - one;
    let left = Branch::new(
        (T::zero(), joint),
        (T::zero(), one),
        Direction::Increasing,
        move |x| two * x / (one - x * x),
        move |x| two * (one + x * x) / ((one - x * x) * (one - x * x)),
    )
    .with_inverse(move |y| y / (one + (one + y * y).sqrt()));
    let right = Branch::new(
        (joint, one),
        (T::zero(), one),
        Direction::Decreasing,
        move |x| (one - x * x) / (two * x),
        move |x| -(one + x * x) / (two * x * x),
    )
    .with_inverse(move |y| one / (y + (y * y + one).sqrt()));
    MapModel::new("g1", vec![left, right])
        .expect("g1 branches tile [0, 1]")
        .with_reference_density(move |x| c::<T>(4.0) / (T::pi() * (one + x * x)))
        .with_reference_lyapunov(two.ln())
}

/// `2x/(1-x)` on `[0, 1/3]`, `(1-x)/(2x)` on `[1/3, 1]`; invariant density
/// `2/(1+x)²`.
fn g2<T: Real>() -> MapModel<T> {
    let one = T::one();
    let two = c::<T>(2.0);
    let third = T::ratio(1, 3);
    let left = Branch::new(
        (T::zero(), third),
        (T::zero(), one),
        Direction::Increasing,
        move |x| two * x / (one - x),
        move |x| two / ((one - x) * (one - x)),
    )
    .with_inverse(move |y| y / (two + y));
    let right = Branch::new(
        (third, one),
        (T::zero(), one),
        Direction::Decreasing,
        move |x| (one - x) / (two * x),
        move |x| -one / (two * x * x),
    )
    .with_inverse(move |y| one / (one + two * y));
    MapModel::new("g2", vec![left, right])
        .expect("g2 branches tile [0, 1]")
        .with_reference_density(move |x| two / ((one + x) * (one + x)))
}

/// `(1/8 - 2|x-1/2|³)^{1/3} + 1/2`; invariant density `12(x-1/2)²`.
/// `g'` vanishes at `1/2` and is unbounded at `1/2 ± 2^{-4/3}`.
fn g3<T: Real>() -> MapModel<T> {
    let one = T::one();
    let half = c::<T>(0.5);
    let eighth = c::<T>(0.125);
    let two = c::<T>(2.0);
    let eval = move |x: T| {
        let u = (x - half).abs();
        (eighth - two * u * u * u).cbrt() + half
    };
    let deriv = move |x: T| {
        let u = x - half;
        let r = (eighth - two * u.abs() * u.abs() * u.abs()).cbrt();
        -two * u * u.abs() / (r * r)
    };
    // |x - 1/2| as a function of y, shared by both branches.
    let offset = move |y: T| {
        let v = y - half;
        ((eighth - v * v * v) / two).cbrt()
    };
    let left = Branch::new(
        (T::zero(), half),
        (T::zero(), one),
        Direction::Increasing,
        eval,
        deriv,
    )
    .with_inverse(move |y| half - offset(y));
    let right = Branch::new((half, one), (T::zero(), one), Direction::Decreasing, eval, deriv)
        .with_inverse(move |y| half + offset(y));
    let blowup = half / two.cbrt();
    MapModel::new("g3", vec![left, right])
        .expect("g3 branches tile [0, 1]")
        .with_reference_density(move |x| c::<T>(12.0) * (x - half) * (x - half))
        .with_singular_points(vec![half - blowup, half, half + blowup])
}

fn tent<T: Real>() -> MapModel<T> {
    let one = T::one();
    let two = c::<T>(2.0);
    let half = c::<T>(0.5);
    let left = Branch::new(
        (T::zero(), half),
        (T::zero(), one),
        Direction::Increasing,
        move |x| two * x,
        move |_| two,
    )
    .with_inverse(move |y| y / two);
    let right = Branch::new(
        (half, one),
        (T::zero(), one),
        Direction::Decreasing,
        move |x| two - two * x,
        move |_| -two,
    )
    .with_inverse(move |y| one - y / two);
    MapModel::new("tent", vec![left, right])
        .expect("tent branches tile [0, 1]")
        .with_reference_density(move |_| one)
        .with_reference_lyapunov(two.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::DoubleDouble;
    use crate::quadrature::integrate_adaptive;
    use std::f64::consts::{LN_2, PI, SQRT_2};

    fn map(name: &str) -> MapModel<f64> {
        registry(name).unwrap()
    }

    #[test]
    fn registry_reference_values() {
        let g1 = map("g1");
        assert!((g1.reference_density(0.0).unwrap() - 4.0 / PI).abs() < 1e-15);
        assert_eq!(map("tent").reference_lyapunov(), Some(LN_2));
        assert!((map("g2").reference_density(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(map("g2").reference_lyapunov(), None);
        assert!(matches!(registry::<f64>("logistic"), Err(Error::UnknownMap(_))));
    }

    #[test]
    fn all_registry_maps_validate() {
        for name in MapName::ALL {
            name.model::<f64>().validate().unwrap();
            name.model::<DoubleDouble>().validate().unwrap();
        }
    }

    #[test]
    fn pointwise_eval() {
        let g1 = map("g1");
        assert!((g1.eval(SQRT_2 - 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(map("tent").eval(0.25).unwrap(), 0.5);
        assert!((g1.deriv(1.0).unwrap().abs() - 1.0).abs() < 1e-15);
        assert!(matches!(g1.eval(1.5), Err(Error::Domain { .. })));
        assert!(matches!(g1.eval(-0.1), Err(Error::Domain { .. })));
        // The left branch owns the shared endpoint.
        assert_eq!(map("tent").branch_index(0.5).unwrap(), 0);
        assert_eq!(map("tent").branch_index(0.0).unwrap(), 0);
        assert_eq!(map("tent").branch_index(1.0).unwrap(), 1);
    }

    #[test]
    fn branch_inverse_examples() {
        let tent = map("tent");
        assert_eq!(tent.branches()[0].inverse(0.5).unwrap(), 0.25);
        let g1 = map("g1");
        let b = &g1.branches()[0];
        assert!((b.inverse(1.0).unwrap() - (SQRT_2 - 1.0)).abs() < 1e-15);
        // y x² + 2x - y = 0  =>  x = (-1 + √(1 + y²)) / y
        let y = 0.5f64;
        let oracle = (-1.0 + (1.0 + y * y).sqrt()) / y;
        assert!((b.inverse(y).unwrap() - oracle).abs() < 1e-15);
        assert!((b.invert_numerically(y) - oracle).abs() < 1e-14);
        assert!(matches!(b.inverse(1.5), Err(Error::Range { .. })));
    }

    #[test]
    fn inverse_round_trip_random() {
        use proptest::test_runner::{Config, TestRunner};
        for name in MapName::ALL {
            let m = name.model::<f64>();
            for b in m.branches() {
                let mut runner = TestRunner::new(Config::with_cases(1000));
                runner
                    .run(&(0.0f64..=1.0), |y| {
                        let x = b.inverse(y).unwrap();
                        let tol = if name == MapName::G3 {
                            // g3' is unbounded near y = 1/2, so the forward
                            // residual is amplified there.
                            1e-12 * (1.0 + b.deriv(x).abs())
                        } else {
                            1e-12
                        };
                        proptest::prop_assert!((b.eval(x) - y).abs() < tol, "{name} y={y}");
                        Ok(())
                    })
                    .unwrap();
            }
        }
    }

    #[test]
    fn preimage_examples() {
        let segs = map("tent").preimage_segments(0.0, 0.5).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].lo, segs[0].hi), (0.0, 0.25));
        assert_eq!((segs[1].lo, segs[1].hi), (0.75, 1.0));

        for name in MapName::ALL {
            let segs = name.model::<f64>().preimage_segments(0.0, 1.0).unwrap();
            let total: f64 = segs.iter().map(Segment::len).sum();
            assert!((total - 1.0).abs() < 1e-15);
        }

        let g1 = map("g1");
        let y = 1.0 / 16.0;
        let segs = g1.preimage_segments(0.0, y).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].lo, 0.0);
        assert!((segs[0].hi - (-1.0 + (1.0 + y * y).sqrt()) / y).abs() < 1e-14);
        assert_eq!(segs[1].hi, 1.0);
        assert!((segs[1].lo - (-y + (y * y + 1.0).sqrt())).abs() < 1e-15);

        assert!(g1.preimage_segments(0.6, 0.2).is_err());
    }

    #[test]
    fn cell_preimages_tile_unit_interval() {
        for name in MapName::ALL {
            let m = name.model::<f64>();
            let n = 37;
            let mut segs: Vec<Segment> = (0..n)
                .flat_map(|i| {
                    m.preimage_segments(i as f64 / n as f64, (i + 1) as f64 / n as f64)
                        .unwrap()
                })
                .collect();
            let total: f64 = segs.iter().map(Segment::len).sum();
            assert!((total - 1.0).abs() < 1e-12, "{name}");
            segs.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
            for w in segs.windows(2) {
                assert!(w[1].lo >= w[0].hi - 1e-15, "{name} overlap");
            }
        }
    }

    #[test]
    fn numerical_inverse_agrees_with_closed_form() {
        for name in MapName::ALL {
            let m = name.model::<f64>();
            for b in m.branches() {
                let (rlo, rhi) = b.range();
                for s in 1..50 {
                    let y = rlo + (rhi - rlo) * s as f64 / 50.0;
                    let closed = b.inverse(y).unwrap();
                    let numeric = b.clone().without_inverse().inverse(y).unwrap();
                    assert!((closed - numeric).abs() < 1e-12, "{name} y={y}");
                }
            }
        }
    }

    #[test]
    fn reference_densities_are_invariant() {
        // ∫_J d = ∫_{g⁻¹(J)} d on random cells.
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for name in MapName::ALL {
            let m = name.model::<f64>();
            let d = m.reference_density_fn().unwrap();
            for _ in 0..20 {
                let a = next() * 0.95;
                let b = a + 0.05 * next();
                let lhs = integrate_adaptive(|x| d(x), a, b, 1e-13).unwrap();
                let rhs: f64 = m
                    .preimage_segments(a, b)
                    .unwrap()
                    .iter()
                    .map(|s| integrate_adaptive(|x| d(x), s.lo, s.hi, 1e-13).unwrap())
                    .sum();
                assert!((lhs - rhs).abs() < 1e-9, "{name}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn invalid_models_rejected() {
        let id = |x: f64| x;
        let one = |_: f64| 1.0;
        let b = Branch::new((0.0, 0.5), (0.0, 0.5), Direction::Increasing, id, one);
        assert!(MapModel::new("half", vec![b]).is_err());
        assert!(MapModel::<f64>::new("empty", vec![]).is_err());
        let l = Branch::new((0.0, 0.4), (0.0, 1.0), Direction::Increasing, id, one);
        let r = Branch::new((0.5, 1.0), (0.0, 1.0), Direction::Decreasing, id, one);
        assert!(MapModel::new("gap", vec![l, r]).is_err());
    }

    #[test]
    fn smooth_pieces_cover_singularities() {
        let g3 = map("g3");
        let pieces = g3.smooth_pieces();
        assert_eq!(pieces.len(), 4);
        assert_eq!(pieces[0].0, 0.0);
        assert_eq!(pieces[3].1, 1.0);
        assert_eq!(map("g1").smooth_pieces().len(), 2);
    }
}
