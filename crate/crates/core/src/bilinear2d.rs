//! Measure-preserving bilinear basis on `[-1, 1]²` with one unit of mass per
//! quadrant.
//!
//! Quadrants are indexed `(k, l)` with `k` selecting the `τ` half
//! (`0`: `τ < 0`, `1`: `τ > 0`) and `l` the `t` half.

/// `c + c_t t + c_τ τ + c_tτ tτ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilinearPoly {
    pub c: f64,
    pub c_t: f64,
    pub c_tau: f64,
    pub c_t_tau: f64,
}

impl BilinearPoly {
    pub const fn new(c: f64, c_t: f64, c_tau: f64, c_t_tau: f64) -> Self {
        Self { c, c_t, c_tau, c_t_tau }
    }

    pub fn coeffs(&self) -> [f64; 4] {
        [self.c, self.c_t, self.c_tau, self.c_t_tau]
    }

    pub fn eval(&self, t: f64, tau: f64) -> f64 {
        self.c + self.c_t * t + (self.c_tau + self.c_t_tau * t) * tau
    }

    /// `∫_{t0}^{t1} ∫_{τ0}^{τ1} p dτ dt` from the product antiderivative.
    pub fn integrate_rect(&self, t0: f64, t1: f64, tau0: f64, tau1: f64) -> f64 {
        let dt = t1 - t0;
        let dtau = tau1 - tau0;
        let st = (t1 * t1 - t0 * t0) / 2.0;
        let stau = (tau1 * tau1 - tau0 * tau0) / 2.0;
        self.c * dt * dtau + self.c_t * st * dtau + self.c_tau * dt * stau + self.c_t_tau * st * stau
    }

    /// `∫_{-1}^{1} p(t, τ) dτ` as coefficients `[a0, a1]` of `a0 + a1 t`.
    pub fn marginal_t(&self) -> [f64; 2] {
        [2.0 * self.c, 2.0 * self.c_t]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.c * s, self.c_t * s, self.c_tau * s, self.c_t_tau * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.c + o.c, self.c_t + o.c_t, self.c_tau + o.c_tau, self.c_t_tau + o.c_t_tau)
    }
}

/// Bounds `(t0, t1, τ0, τ1)` of quadrant `(k, l)`.
pub fn quadrant(k: usize, l: usize) -> (f64, f64, f64, f64) {
    let half = |i: usize| if i == 0 { (-1.0, 0.0) } else { (0.0, 1.0) };
    let (t0, t1) = half(l);
    let (tau0, tau1) = half(k);
    (t0, t1, tau0, tau1)
}

/// `basis[k][l]` integrates to 1 over quadrant `(k, l)` and to 0 over the
/// other three.
pub fn bilinear_basis() -> [[BilinearPoly; 2]; 2] {
    [
        [
            BilinearPoly::new(0.25, -0.5, -0.5, 1.0),
            BilinearPoly::new(0.25, 0.5, -0.5, -1.0),
        ],
        [
            BilinearPoly::new(0.25, -0.5, 0.5, -1.0),
            BilinearPoly::new(0.25, 0.5, 0.5, 1.0),
        ],
    ]
}

/// `Σ M_kl ℓ_kl`, the unique bilinear function with quadrant masses `masses`.
pub fn reconstruct_bilinear(masses: [[f64; 2]; 2]) -> BilinearPoly {
    let basis = bilinear_basis();
    let mut p = BilinearPoly::new(0.0, 0.0, 0.0, 0.0);
    for k in 0..2 {
        for l in 0..2 {
            p = p.add(&basis[k][l].scale(masses[k][l]));
        }
    }
    p
}

/// Quadrant masses of an arbitrary bilinear function.
pub fn quadrant_masses(p: &BilinearPoly) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for (k, row) in m.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            let (t0, t1, tau0, tau1) = quadrant(k, l);
            *v = p.integrate_rect(t0, t1, tau0, tau1);
        }
    }
    m
}
