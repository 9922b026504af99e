//! Numerical location of the Hopf point: track the complex-conjugate pair of
//! the characteristic cubic in `c` and find where its real part vanishes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{char_roots, Params};

/// Step for the central difference of `Re λ(c)`.
pub const SLOPE_STEP: f64 = 1e-5;
/// Grid used to bracket the sign change before bisection.
const BRACKET_STEPS: usize = 256;

/// Real and (positive) imaginary part of the tracked root pair along a `c` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootTrace {
    pub c_values: Vec<f64>,
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfResult {
    pub c_star: f64,
    pub omega_star: f64,
    /// `d Re λ / dc` at `c_star`.
    pub slope: f64,
}

/// Follows the upper member of the complex pair across `[c_min, c_max]`
/// (`n_steps` points, endpoints included) by nearest-neighbour matching.
pub fn track_complex_pair(c_min: f64, c_max: f64, n_steps: usize, params: &Params) -> Result<RootTrace> {
    if !(c_min < c_max) {
        return Err(Error::InvalidParams(format!("need c_min < c_max, got [{c_min}, {c_max}]")));
    }
    if n_steps < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 grid points, got {n_steps}")));
    }
    let h = (c_max - c_min) / (n_steps - 1) as f64;
    let mut trace = RootTrace {
        c_values: Vec::with_capacity(n_steps),
        eta: Vec::with_capacity(n_steps),
        zeta: Vec::with_capacity(n_steps),
    };
    let mut prev: Option<Complex64> = None;
    for k in 0..n_steps {
        let c = if k + 1 == n_steps { c_max } else { c_min + k as f64 * h };
        let set = char_roots(c, params);
        let next = match prev {
            None => set.upper_complex().ok_or(Error::PairLost { c })?,
            Some(p) => {
                let z = set
                    .roots
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - p).norm().total_cmp(&(b - p).norm()))
                    .expect("three roots");
                if z.im == 0.0 {
                    return Err(Error::PairLost { c });
                }
                // the conjugate can be nearest only if the pair is about to collide
                if z.im < 0.0 { z.conj() } else { z }
            }
        };
        trace.c_values.push(c);
        trace.eta.push(next.re);
        trace.zeta.push(next.im);
        prev = Some(next);
    }
    Ok(trace)
}

fn pair_at(c: f64, params: &Params) -> Result<Complex64> {
    char_roots(c, params).upper_complex().ok_or(Error::PairLost { c })
}

/// Bisection for the zero of `Re λ(c)` on `[-2r, 0]`.
pub fn detect_hopf(params: &Params, tol: f64) -> Result<HopfResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be positive, got {tol}")));
    }
    let (c_lo, c_hi) = (-2.0 * params.r(), 0.0);
    let trace = track_complex_pair(c_lo, c_hi, BRACKET_STEPS, params)?;
    let k = trace
        .eta
        .windows(2)
        .position(|w| w[0] == 0.0 || w[0].signum() != w[1].signum())
        .ok_or(Error::NoCrossing { lo: c_lo, hi: c_hi })?;

    let (mut lo, mut hi) = (trace.c_values[k], trace.c_values[k + 1]);
    let mut eta_lo = trace.eta[k];
    let mut c_star = 0.5 * (lo + hi);
    for _ in 0..200 {
        c_star = 0.5 * (lo + hi);
        if c_star <= lo || c_star >= hi {
            break;
        }
        let eta = pair_at(c_star, params)?.re;
        if eta == 0.0 {
            break;
        }
        if eta.signum() == eta_lo.signum() {
            lo = c_star;
            eta_lo = eta;
        } else {
            hi = c_star;
        }
    }
    let root = pair_at(c_star, params)?;
    if root.re.abs() > tol {
        return Err(Error::NoCrossing { lo: c_lo, hi: c_hi });
    }
    let slope = (pair_at(c_star + SLOPE_STEP, params)?.re - pair_at(c_star - SLOPE_STEP, params)?.re)
        / (2.0 * SLOPE_STEP);
    Ok(HopfResult { c_star, omega_star: root.im, slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `dλ/dc = λ / p'(λ)` from implicit differentiation of the cubic.
    fn implicit_slope(r: f64) -> f64 {
        let lambda = Complex64::new(0.0, r.sqrt());
        let dp = lambda * lambda * 3.0 - lambda * 2.0 + r;
        (lambda / dp).re
    }

    #[test]
    fn trace_passes_through_imaginary_axis_at_critical_speed() {
        let p = Params::new(1.0, 1.0).unwrap();
        let trace = track_complex_pair(-1.5, -0.5, 101, &p).unwrap();
        let mid = 50;
        assert!((trace.c_values[mid] + 1.0).abs() < 1e-14);
        assert!(trace.eta[mid].abs() < 1e-12);
        assert!((trace.zeta[mid] - 1.0).abs() < 1e-12);
        assert!(trace.eta[0] > 0.0 && trace.eta[100] < 0.0);
        for w in trace.eta.windows(2) {
            assert!((w[1] - w[0]).abs() <= 0.1);
        }
    }

    #[test]
    fn pair_is_unstable_below_critical_speed() {
        let p = Params::new(1.0, 1.0).unwrap();
        assert!(char_roots(-1.1, &p).upper_complex().unwrap().re > 0.0);
        assert!(char_roots(-0.9, &p).upper_complex().unwrap().re < 0.0);
    }

    #[test]
    fn eta_decreases_near_critical_speed() {
        for r in [0.25, 1.0, 4.0] {
            let p = Params::new(r, 1.0).unwrap();
            let trace = track_complex_pair(-r - 0.1, -r + 0.1, 41, &p).unwrap();
            assert!(trace.eta.windows(2).all(|w| w[1] < w[0]), "r = {r}");
        }
    }

    #[test]
    fn implicit_slope_closed_form() {
        for r in [0.25, 1.0, 3.0] {
            assert!((implicit_slope(r) + 1.0 / (2.0 * (r + 1.0))).abs() < 1e-15);
        }
    }

    #[test]
    fn hopf_point_and_transversality() {
        for r in [0.25, 0.5, 1.0, 2.0, 3.0, 4.0] {
            let p = Params::new(r, 1.0).unwrap();
            let h = detect_hopf(&p, 1e-12).unwrap();
            assert!((h.c_star + r).abs() <= 1e-8, "r={r}: c* = {}", h.c_star);
            assert!((h.omega_star - r.sqrt()).abs() <= 1e-6);
            assert!((h.slope - implicit_slope(r)).abs() <= 1e-5, "r={r}: slope {}", h.slope);
        }
    }

    #[test]
    fn pair_lost_when_all_roots_real() {
        // λ³ − λ² − cλ − r with very large c has three real roots
        let p = Params::new(0.01, 1.0).unwrap();
        let err = track_complex_pair(-1.0, 5.0, 50, &p).unwrap_err();
        assert!(matches!(err, Error::PairLost { .. }), "{err}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = Params::new(1.0, 1.0).unwrap();
        assert!(track_complex_pair(0.0, -1.0, 10, &p).is_err());
        assert!(track_complex_pair(-1.0, 0.0, 1, &p).is_err());
        assert!(detect_hopf(&p, 0.0).is_err());
    }
}
