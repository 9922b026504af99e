//! Physical parameters, the first-order profile system `Φ' = F(Φ)` and the
//! characteristic cubic of its linearisation at the origin.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Reaction rate `r`, convection strength `alpha`, and the quantities the
/// Hopf analysis derives from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct Params {
    r: f64,
    alpha: f64,
    c0: f64,
    omega0: f64,
    l0: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    r: f64,
    alpha: f64,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.r, raw.alpha)
    }
}

impl From<Params> for RawParams {
    fn from(p: Params) -> Self {
        RawParams { r: p.r, alpha: p.alpha }
    }
}

impl Params {
    pub fn new(r: f64, alpha: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParams(format!("r must be positive, got {r}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParams(format!("alpha must be positive, got {alpha}")));
        }
        let omega0 = r.sqrt();
        Ok(Params { r, alpha, c0: -r, omega0, l0: 2.0 * PI / omega0 })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Critical speed `-r`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Hopf frequency `√r`.
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Limiting period `2π/√r`.
    pub fn l0(&self) -> f64 {
        self.l0
    }

    /// Speed of the wave at distance `eps` past the bifurcation.
    pub fn speed(&self, eps: f64) -> f64 {
        self.c0 + eps
    }
}

/// A point `(φ, φ', φ'')` of the profile phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVec {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

impl StateVec {
    pub const ZERO: StateVec = StateVec { phi1: 0.0, phi2: 0.0, phi3: 0.0 };

    pub fn new(phi1: f64, phi2: f64, phi3: f64) -> Self {
        StateVec { phi1, phi2, phi3 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.phi1, self.phi2, self.phi3]
    }

    pub fn max_abs(self) -> f64 {
        self.phi1.abs().max(self.phi2.abs()).max(self.phi3.abs())
    }

    pub fn is_finite(self) -> bool {
        self.phi1.is_finite() && self.phi2.is_finite() && self.phi3.is_finite()
    }
}

impl Add for StateVec {
    type Output = StateVec;
    fn add(self, o: StateVec) -> StateVec {
        StateVec::new(self.phi1 + o.phi1, self.phi2 + o.phi2, self.phi3 + o.phi3)
    }
}

impl Sub for StateVec {
    type Output = StateVec;
    fn sub(self, o: StateVec) -> StateVec {
        StateVec::new(self.phi1 - o.phi1, self.phi2 - o.phi2, self.phi3 - o.phi3)
    }
}

impl Mul<f64> for StateVec {
    type Output = StateVec;
    fn mul(self, s: f64) -> StateVec {
        StateVec::new(self.phi1 * s, self.phi2 * s, self.phi3 * s)
    }
}

/// The three roots of `λ²(λ−1) − cλ − r`, sorted by `(Re, Im)` descending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicRootSet {
    pub roots: [Complex64; 3],
}

impl CubicRootSet {
    /// Root with the largest positive imaginary part, if any root is non-real.
    pub fn upper_complex(&self) -> Option<Complex64> {
        self.roots
            .iter()
            .copied()
            .filter(|z| z.im > 0.0)
            .max_by(|a, b| a.im.total_cmp(&b.im))
    }
}

pub fn char_poly_eval(lambda: Complex64, c: f64, params: &Params) -> Complex64 {
    lambda * lambda * (lambda - 1.0) - lambda * c - params.r
}

fn char_poly_derivative(lambda: Complex64, c: f64) -> Complex64 {
    lambda * lambda * 3.0 - lambda * 2.0 - c
}

/// Roots of the characteristic cubic from the eigenvalues of `A₀`.
pub fn char_roots(c: f64, params: &Params) -> CubicRootSet {
    let a0 = jacobian(StateVec::ZERO, c, params);
    let companion = DMatrix::from_fn(3, 3, |i, j| Complex64::new(a0[(i, j)], 0.0));
    let mut roots: Vec<Complex64> = linalg::eigenvalues(&companion)
        .expect("3x3 QR iteration converges")
        .into_iter()
        .map(|z| polish_root(z, c, params))
        .collect();

    // Real coefficients: keep the root closest to the real axis real and
    // make the remaining two an exact conjugate pair when they are complex.
    roots.sort_by(|a, b| a.im.abs().total_cmp(&b.im.abs()));
    let scale = 1.0 + roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    roots[0].im = 0.0;
    let (p, q) = (roots[1], roots[2]);
    if p.im.abs() > 1e-9 * scale {
        let z = (p + q.conj()) * 0.5;
        let z = if z.im < 0.0 { z.conj() } else { z };
        roots[1] = z;
        roots[2] = z.conj();
    } else {
        roots[1].im = 0.0;
        roots[2].im = 0.0;
    }

    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    CubicRootSet { roots: [roots[0], roots[1], roots[2]] }
}

/// A few guarded Newton steps on the cubic; keeps the eigenvalue when a
/// step would not reduce the residual (multiple roots).
fn polish_root(mut z: Complex64, c: f64, params: &Params) -> Complex64 {
    let mut res = char_poly_eval(z, c, params).norm();
    for _ in 0..3 {
        let d = char_poly_derivative(z, c);
        if d.norm() == 0.0 {
            break;
        }
        let trial = z - char_poly_eval(z, c, params) / d;
        let trial_res = char_poly_eval(trial, c, params).norm();
        if trial_res < res {
            z = trial;
            res = trial_res;
        } else {
            break;
        }
    }
    z
}

pub fn vector_field(state: StateVec, c: f64, params: &Params) -> StateVec {
    let StateVec { phi1, phi2, phi3 } = state;
    StateVec::new(
        phi2,
        phi3,
        phi3 + params.r * phi1 * (1.0 - phi1) - params.alpha * phi1 * phi2 + c * phi2,
    )
}

pub fn jacobian(state: StateVec, c: f64, params: &Params) -> Matrix3<f64> {
    let StateVec { phi1, phi2, .. } = state;
    Matrix3::new(
        0.0, 1.0, 0.0,
        0.0, 0.0, 1.0,
        params.r * (1.0 - 2.0 * phi1) - params.alpha * phi2, c - params.alpha * phi1, 1.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Params {
        Params::new(1.0, 1.0).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn params_derived_quantities() {
        for r in [0.25, 1.0, 3.0, 10.0] {
            let p = Params::new(r, 2.0).unwrap();
            assert_eq!(p.c0(), -r);
            assert!((p.omega0() * p.omega0() - r).abs() <= 4.0 * f64::EPSILON * r);
            assert!((p.l0() * p.omega0() - 2.0 * PI).abs() <= 4.0 * f64::EPSILON * 2.0 * PI);
        }
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(Params::new(0.0, 1.0).is_err());
        assert!(Params::new(-1.0, 1.0).is_err());
        assert!(Params::new(1.0, 0.0).is_err());
        assert!(Params::new(f64::NAN, 1.0).is_err());
        let msg = Params::new(-1.0, 1.0).unwrap_err().to_string();
        assert!(msg.contains("r must be positive"), "{msg}");
    }

    #[test]
    fn char_poly_known_values() {
        for r in [0.5, 1.0, 4.0] {
            let p = Params::new(r, 1.0).unwrap();
            assert!(char_poly_eval(Complex64::new(1.0, 0.0), -r, &p).norm() < 1e-14);
            assert!(char_poly_eval(Complex64::new(0.0, r.sqrt()), -r, &p).norm() < 1e-13);
        }
        let p = Params::new(2.0, 1.0).unwrap();
        assert_eq!(char_poly_eval(Complex64::new(0.0, 0.0), 5.0, &p), Complex64::new(-2.0, 0.0));
    }

    #[test]
    fn char_roots_at_critical_speed() {
        let roots = char_roots(-1.0, &unit()).roots;
        assert!(close(roots[0], Complex64::new(1.0, 0.0), 1e-12));
        assert!(close(roots[1], Complex64::new(0.0, 1.0), 1e-12));
        assert!(close(roots[2], Complex64::new(0.0, -1.0), 1e-12));

        let p4 = Params::new(4.0, 1.0).unwrap();
        let roots = char_roots(-4.0, &p4).roots;
        assert!(close(roots[0], Complex64::new(1.0, 0.0), 1e-12));
        assert!(close(roots[1], Complex64::new(0.0, 2.0), 1e-12));
        assert!(close(roots[2], Complex64::new(0.0, -2.0), 1e-12));
    }

    /// Bisection for the real root of λ³ − λ² − 1 on [1, 2], then deflation
    /// to the quadratic λ² + (ρ − 1)λ + ρ(ρ − 1).
    #[test]
    fn char_roots_against_bisection_and_deflation() {
        let f = |x: f64| x * x * x - x * x - 1.0;
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let rho = 0.5 * (lo + hi);
        assert!((rho - 1.46557).abs() < 1e-5);
        let b = rho - 1.0;
        let cq = rho * (rho - 1.0);
        let disc = Complex64::new(b * b - 4.0 * cq, 0.0).sqrt();
        let z = (Complex64::new(-b, 0.0) + disc) * 0.5;
        let z = if z.im < 0.0 { z.conj() } else { z };

        let roots = char_roots(0.0, &unit()).roots;
        assert!(close(roots[0], Complex64::new(rho, 0.0), 1e-12));
        assert!(close(roots[1], z, 1e-12));
        assert!(close(roots[2], z.conj(), 1e-12));
    }

    #[test]
    fn vector_field_equilibria_and_substitution() {
        let p = unit();
        assert_eq!(vector_field(StateVec::ZERO, 0.3, &p), StateVec::ZERO);
        assert_eq!(vector_field(StateVec::new(1.0, 0.0, 0.0), 0.3, &p), StateVec::ZERO);
        let f = vector_field(StateVec::new(0.0, 0.01, 0.0), -0.999, &p);
        assert!((f.phi1 - 0.01).abs() < 1e-16);
        assert_eq!(f.phi2, 0.0);
        assert!((f.phi3 + 0.00999).abs() < 1e-16);
    }

    #[test]
    fn jacobian_at_equilibria() {
        let p = Params::new(1.5, 0.7).unwrap();
        let a0 = jacobian(StateVec::ZERO, -0.4, &p);
        assert_eq!((a0[(2, 0)], a0[(2, 1)], a0[(2, 2)]), (1.5, -0.4, 1.0));
        assert_eq!((a0[(0, 1)], a0[(1, 2)]), (1.0, 1.0));
        let a1 = jacobian(StateVec::new(1.0, 0.0, 0.0), -0.4, &p);
        assert_eq!((a1[(2, 0)], a1[(2, 1)], a1[(2, 2)]), (-1.5, -0.4 - 0.7, 1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn vieta_and_residuals(c in -6.0f64..4.0, r in 0.05f64..8.0) {
            let p = Params::new(r, 1.0).unwrap();
            let set = char_roots(c, &p);
            let sum: Complex64 = set.roots.iter().sum();
            let prod: Complex64 = set.roots.iter().product();
            let scale = 1.0 + set.roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!((sum - 1.0).norm() <= 1e-10 * scale);
            prop_assert!((prod - r).norm() <= 1e-10 * scale.powi(3));
            for z in set.roots {
                prop_assert!(char_poly_eval(z, c, &p).norm() <= 1e-10 * (1.0 + z.norm().powi(3)));
            }
            // conjugate closure and ordering
            let nonreal: Vec<_> = set.roots.iter().filter(|z| z.im != 0.0).collect();
            prop_assert!(nonreal.is_empty() || nonreal.len() == 2);
            if nonreal.len() == 2 {
                prop_assert_eq!(*nonreal[0], nonreal[1].conj());
            }
            for w in set.roots.windows(2) {
                prop_assert!(w[0].re > w[1].re || (w[0].re == w[1].re && w[0].im >= w[1].im));
            }
        }

        #[test]
        fn jacobian_matches_central_difference(
            s in proptest::array::uniform3(-2.0f64..2.0),
            d in proptest::array::uniform3(-1.0f64..1.0),
            c in -3.0f64..1.0,
        ) {
            let p = Params::new(1.3, 0.8).unwrap();
            let state = StateVec::new(s[0], s[1], s[2]);
            let dir = StateVec::new(d[0], d[1], d[2]);
            let h = 1e-6;
            let fd = (vector_field(state + dir * h, c, &p) - vector_field(state - dir * h, c, &p)) * (0.5 / h);
            let jd = jacobian(state, c, &p) * nalgebra::Vector3::new(d[0], d[1], d[2]);
            let dist = |a: StateVec| (a.phi1 - jd[0]).abs().max((a.phi2 - jd[1]).abs()).max((a.phi3 - jd[2]).abs());
            let fwd = (vector_field(state + dir * h, c, &p) - vector_field(state, c, &p)) * (1.0 / h);
            prop_assert!(dist(fwd) <= 10.0 * h, "forward err = {:e}", dist(fwd));
            // F is quadratic, so the central stencil is exact up to rounding
            prop_assert!(dist(fd) <= 1e-8, "central err = {:e}", dist(fd));
        }
    }
}
