//! Periodic orbits of the profile equation
//! `−cφ' + αφφ' + φ''' = φ'' + rφ(1−φ)` by harmonic balance.
//!
//! The unknowns are the Fourier coefficients `a_0..a_M` of `φ` (with
//! `a_{-k} = conj(a_k)`) and the period `L`. Each harmonic `k = 0..M` of the
//! residual must vanish, and translation invariance is removed by the gauge
//! `Im a_1 = 0`. That is `2M + 2` real equations in `2M + 2` real unknowns,
//! solved by damped Newton with a dense LU factorisation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{self, FourierSeries};
use crate::model::{Params, StateVec};

pub const DEFAULT_FOURIER_M: usize = 32;
pub const DEFAULT_TOL: f64 = 1e-9;
/// Largest bifurcation parameter accepted; existence is only local.
pub const MAX_EPS: f64 = 0.1;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
const MAX_HALVINGS: u32 = 8;
const COLLAPSE_AMPLITUDE: f64 = 1e-12;
const MIN_FOURIER_M: usize = 8;

/// One member `φ^ε` of the bifurcating family, stored as Fourier series of
/// `(φ, φ', φ'')` over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveProfile {
    pub eps: f64,
    pub c: f64,
    pub period: f64,
    pub components: [FourierSeries; 3],
    /// Sup-norm of the profile-equation residual on a `4M`-point grid.
    pub residual: f64,
    pub params: Params,
}

impl WaveProfile {
    /// Builds the profile from the coefficients of `φ`; the derivative
    /// components and the residual are computed here.
    pub fn from_phi(params: Params, eps: f64, period: f64, phi: FourierSeries) -> Self {
        let kappa = fourier::wavenumber(period);
        let d1 = phi.derivative(kappa);
        let d2 = d1.derivative(kappa);
        let c = params.speed(eps);
        let residual = profile_residual(&phi, period, c, &params);
        WaveProfile { eps, c, period, components: [phi, d1, d2], residual, params }
    }

    /// The rest state `φ ≡ 0` at the critical speed, period `L₀`.
    pub fn zero(params: Params) -> Self {
        Self::from_phi(params, 0.0, params.l0(), FourierSeries::zeros(DEFAULT_FOURIER_M))
    }

    pub fn order(&self) -> usize {
        self.components[0].order()
    }

    pub fn phi(&self) -> &FourierSeries {
        &self.components[0]
    }

    pub fn wavenumber(&self) -> f64 {
        fourier::wavenumber(self.period)
    }

    /// Mean of `φ` over one period.
    pub fn mean(&self) -> f64 {
        self.phi().get(0).re
    }

    /// `max |φ|` over a period, refined to the extremum.
    pub fn amplitude(&self) -> f64 {
        sup_abs(&self.components[0], &self.components[1], &self.components[2], self.period)
    }

    /// `max |φ'|` over a period.
    pub fn slope_amplitude(&self) -> f64 {
        let d3 = self.components[2].derivative(self.wavenumber());
        sup_abs(&self.components[1], &self.components[2], &d3, self.period)
    }

    /// Sample of the profile ODE state `(φ, φ', φ'')` at `ξ`.
    pub fn evaluate(&self, xi: f64) -> StateVec {
        let kappa = self.wavenumber();
        let [p0, p1, p2] = &self.components;
        StateVec::new(p0.eval_real(xi, kappa), p1.eval_real(xi, kappa), p2.eval_real(xi, kappa))
    }

    /// Shifts the profile by `shift` in `ξ`: `φ(ξ) ↦ φ(ξ + shift)`.
    pub fn translated(&self, shift: f64) -> Self {
        let kappa = self.wavenumber();
        let coeffs = self
            .phi()
            .modes()
            .map(|(k, c)| c * Complex64::from_polar(1.0, k as f64 * kappa * shift))
            .collect();
        Self::from_phi(self.params, self.eps, self.period, FourierSeries::from_coeffs(coeffs))
    }

    // ── JSON persistence ────────────────────────────────────────────────────

    pub fn to_json(&self) -> Result<String> {
        let doc = ProfileDocument {
            generator: Some(crate::generator_tag()),
            r: self.params.r(),
            alpha: self.params.alpha(),
            eps: self.eps,
            c: self.c,
            period: self.period,
            m: self.order(),
            coeffs: self.phi().coeffs().iter().map(|z| [z.re, z.im]).collect(),
            residual: self.residual,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses a profile document; `φ'` and `φ''` are rebuilt by spectral
    /// differentiation and the stored residual is kept as written.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProfileDocument = serde_json::from_str(text)?;
        let params = Params::new(doc.r, doc.alpha)?;
        if doc.coeffs.len() != 2 * doc.m + 1 {
            return Err(Error::Format(format!(
                "expected {} coefficients for M = {}, found {}",
                2 * doc.m + 1,
                doc.m,
                doc.coeffs.len()
            )));
        }
        if !(doc.period.is_finite() && doc.period > 0.0) {
            return Err(Error::Format(format!("period must be positive, got {}", doc.period)));
        }
        if !(doc.eps.is_finite() && doc.eps >= 0.0) {
            return Err(Error::Format(format!("eps must be non-negative, got {}", doc.eps)));
        }
        if (doc.c - params.speed(doc.eps)).abs() > 1e-12 * (1.0 + doc.c.abs()) {
            return Err(Error::Format(format!("c = {} inconsistent with -r + eps = {}", doc.c, params.speed(doc.eps))));
        }
        let phi = FourierSeries::from_coeffs(doc.coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect());
        let scale = phi.max_abs_coeff().max(f64::MIN_POSITIVE);
        if phi.conjugate_asymmetry() > 1e-12 * scale {
            return Err(Error::Format("coefficients are not conjugate-symmetric".into()));
        }
        let mut profile = Self::from_phi(params, doc.eps, doc.period, phi);
        profile.c = doc.c;
        profile.residual = doc.residual;
        Ok(profile)
    }
}

#[derive(Serialize, Deserialize)]
struct ProfileDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<String>,
    r: f64,
    alpha: f64,
    eps: f64,
    c: f64,
    period: f64,
    #[serde(rename = "M")]
    m: usize,
    coeffs: Vec<[f64; 2]>,
    residual: f64,
}

/// Sup-norm of `f` over one period; the sampled maximum is polished by
/// Newton on `f' = 0`.
fn sup_abs(f: &FourierSeries, df: &FourierSeries, d2f: &FourierSeries, period: f64) -> f64 {
    let n = (16 * f.order()).max(64);
    let kappa = fourier::wavenumber(period);
    let samples = f.to_real_samples(n);
    let (j, _) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty grid");
    let h = period / n as f64;
    let x0 = j as f64 * h;
    let mut x = x0;
    for _ in 0..8 {
        let d2 = d2f.eval_real(x, kappa);
        if d2 == 0.0 {
            break;
        }
        let next = x - df.eval_real(x, kappa) / d2;
        if (next - x0).abs() > h {
            break;
        }
        x = next;
    }
    f.eval_real(x, kappa).abs().max(samples[j].abs())
}

/// Sup-norm of `φ''' − φ'' − cφ' + αφφ' − rφ(1−φ)` on a `4M`-point grid.
pub fn profile_residual(phi: &FourierSeries, period: f64, c: f64, params: &Params) -> f64 {
    let n = (4 * phi.order()).max(16);
    let kappa = fourier::wavenumber(period);
    let d1 = phi.derivative(kappa);
    let d2 = d1.derivative(kappa);
    let d3 = d2.derivative(kappa);
    let (p0, p1, p2, p3) = (
        phi.to_real_samples(n),
        d1.to_real_samples(n),
        d2.to_real_samples(n),
        d3.to_real_samples(n),
    );
    (0..n)
        .map(|j| {
            let (u, du) = (p0[j], p1[j]);
            (p3[j] - p2[j] - c * du + params.alpha() * u * du - params.r() * u * (1.0 - u)).abs()
        })
        .fold(0.0, f64::max)
}

/// Linear Hopf predictor `Φ = 2√ε Re(e^{iω₀ξ} v)` with `v = (1, iω₀, −ω₀²)`.
pub fn initial_guess(eps: f64, params: &Params) -> Result<WaveProfile> {
    if !(0.0..=MAX_EPS).contains(&eps) {
        return Err(Error::InvalidParams(format!("eps must lie in [0, {MAX_EPS}], got {eps}")));
    }
    let mut phi = FourierSeries::zeros(DEFAULT_FOURIER_M);
    let half_amplitude = eps.sqrt();
    phi.set(1, Complex64::new(half_amplitude, 0.0));
    phi.set(-1, Complex64::new(half_amplitude, 0.0));
    Ok(WaveProfile::from_phi(*params, eps, 2.0 * PI / params.omega0(), phi))
}

/// The eigenvector of `A₀` at `c₀` that the predictor is built from.
pub fn hopf_eigenvector(params: &Params) -> [Complex64; 3] {
    let w = params.omega0();
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, w), Complex64::new(-w * w, 0.0)]
}

struct HarmonicBalance {
    params: Params,
    c: f64,
    m: usize,
}

impl HarmonicBalance {
    fn unknowns(&self) -> usize {
        2 * self.m + 2
    }

    fn pack(&self, phi: &FourierSeries, period: f64) -> DVector<f64> {
        let mut u = DVector::zeros(self.unknowns());
        u[0] = phi.get(0).re;
        for k in 1..=self.m {
            let a = phi.get(k as i64);
            u[2 * k - 1] = a.re;
            u[2 * k] = a.im;
        }
        u[2 * self.m + 1] = period;
        u
    }

    fn unpack(&self, u: &DVector<f64>) -> (FourierSeries, f64) {
        let mut phi = FourierSeries::zeros(self.m);
        phi.set(0, Complex64::new(u[0], 0.0));
        for k in 1..=self.m {
            let a = Complex64::new(u[2 * k - 1], u[2 * k]);
            phi.set(k as i64, a);
            phi.set(-(k as i64), a.conj());
        }
        (phi, u[2 * self.m + 1])
    }

    /// Linear symbol `(ikκ)³ − (ikκ)² − c(ikκ) − r` and its κ-derivative.
    fn linear_symbol(&self, k: usize, kappa: f64) -> (Complex64, Complex64) {
        let ik = Complex64::new(0.0, k as f64);
        let z = ik * kappa;
        let value = z * z * z - z * z - z * self.c - self.params.r();
        let d_kappa = ik * ik * ik * 3.0 * kappa * kappa - ik * ik * 2.0 * kappa - ik * self.c;
        (value, d_kappa)
    }

    /// Coefficient of `(φ²)_k` in harmonic `k`: `r + iαkκ/2` (since `φφ' = (φ²)'/2`).
    fn quadratic_weight(&self, k: usize, kappa: f64) -> Complex64 {
        Complex64::new(self.params.r(), 0.5 * self.params.alpha() * k as f64 * kappa)
    }

    fn residual(&self, u: &DVector<f64>) -> DVector<f64> {
        let (phi, period) = self.unpack(u);
        let kappa = fourier::wavenumber(period);
        let sq = phi.product(&phi, self.m);
        let mut g = DVector::zeros(self.unknowns());
        for k in 0..=self.m {
            let (sym, _) = self.linear_symbol(k, kappa);
            let rk = sym * phi.get(k as i64) + self.quadratic_weight(k, kappa) * sq.get(k as i64);
            if k == 0 {
                g[0] = rk.re;
            } else {
                g[2 * k - 1] = rk.re;
                g[2 * k] = rk.im;
            }
        }
        g[2 * self.m + 1] = u[2];
        g
    }

    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let (phi, period) = self.unpack(u);
        let kappa = fourier::wavenumber(period);
        let sq = phi.product(&phi, self.m);
        let n = self.unknowns();
        let m = self.m as i64;
        let mut jac = DMatrix::zeros(n, n);

        let put = |jac: &mut DMatrix<f64>, k: usize, col: usize, v: Complex64| {
            if k == 0 {
                jac[(0, col)] = v.re;
            } else {
                jac[(2 * k - 1, col)] = v.re;
                jac[(2 * k, col)] = v.im;
            }
        };

        for k in 0..=self.m {
            let ki = k as i64;
            let (sym, dsym) = self.linear_symbol(k, kappa);
            let w = self.quadratic_weight(k, kappa) * 2.0;

            // ∂/∂a_0
            let mut v = w * phi.get(ki);
            if k == 0 {
                v += sym;
            }
            put(&mut jac, k, 0, v);

            for j in 1..=m {
                let (lo, hi) = (phi.get(ki - j), phi.get(ki + j));
                // ∂/∂Re a_j perturbs φ by e^{ijx} + e^{-ijx}
                let mut v_re = w * (lo + hi);
                // ∂/∂Im a_j perturbs φ by i e^{ijx} − i e^{-ijx}
                let mut v_im = w * Complex64::i() * (lo - hi);
                if ki == j {
                    v_re += sym;
                    v_im += sym * Complex64::i();
                }
                put(&mut jac, k, 2 * j as usize - 1, v_re);
                put(&mut jac, k, 2 * j as usize, v_im);
            }

            // ∂/∂L through κ = 2π/L
            let d_weight = Complex64::new(0.0, 0.5 * self.params.alpha() * k as f64);
            let d_kappa = dsym * phi.get(ki) + d_weight * sq.get(ki);
            put(&mut jac, k, n - 1, d_kappa * (-kappa / period));
        }
        jac[(n - 1, 2)] = 1.0;
        jac
    }
}

/// Rotates the series so that `a_1` is real and non-negative.
fn fix_phase(phi: &FourierSeries) -> FourierSeries {
    let a1 = phi.get(1);
    if a1.norm() == 0.0 {
        return phi.clone();
    }
    let theta = a1.arg();
    let coeffs = phi.modes().map(|(k, c)| c * Complex64::from_polar(1.0, -(k as f64) * theta)).collect();
    FourierSeries::from_coeffs(coeffs)
}

/// Newton on the harmonic-balance system at fixed `c = −r + ε`.
pub fn solve_orbit(guess: &WaveProfile, m: usize, tol: f64) -> Result<WaveProfile> {
    if m < MIN_FOURIER_M {
        return Err(Error::InvalidParams(format!("need M >= {MIN_FOURIER_M}, got {m}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be positive, got {tol}")));
    }
    let start = guess.phi().resized(m);
    if start.max_abs_coeff() == 0.0 {
        return Err(Error::InvalidParams("initial guess is identically zero".into()));
    }
    let hb = HarmonicBalance { params: guess.params, c: guess.c, m };
    let mut u = hb.pack(&fix_phase(&start), guess.period);
    let mut g = hb.residual(&u);
    let mut gnorm = g.norm();

    let collapsed = |u: &DVector<f64>| (1..u.len() - 1).map(|i| u[i].abs()).fold(0.0, f64::max) < COLLAPSE_AMPLITUDE;

    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_NEWTON_ITERATIONS {
        iterations += 1;
        let Some(delta) = hb.jacobian(&u).lu().solve(&(-&g)) else {
            if collapsed(&u) {
                break;
            }
            return Err(Error::NoConvergence { iterations, residual: gnorm });
        };

        let mut step = 1.0;
        let mut next = &u + &delta;
        let mut next_g = hb.residual(&next);
        for _ in 0..MAX_HALVINGS {
            let usable = next[u.len() - 1] > 0.0 && next_g.iter().all(|v| v.is_finite());
            if usable && next_g.norm() <= gnorm {
                break;
            }
            step *= 0.5;
            next = &u + &delta * step;
            next_g = hb.residual(&next);
        }
        if !(next[u.len() - 1] > 0.0) || next_g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NoConvergence { iterations, residual: gnorm });
        }
        u = next;
        g = next_g;
        gnorm = g.norm();

        let scale = u.amax().max(1.0);
        if step == 1.0 && delta.amax() <= 1e-13 * scale {
            converged = true;
            break;
        }
        if collapsed(&u) {
            break;
        }
    }

    let (phi, period) = hb.unpack(&u);
    let amplitude = phi.modes().filter(|(k, _)| *k != 0).map(|(_, c)| c.norm()).fold(0.0, f64::max);
    if amplitude < COLLAPSE_AMPLITUDE {
        return Err(Error::CollapsedToZero { amplitude });
    }
    let profile = WaveProfile::from_phi(guess.params, guess.eps, period, phi);
    if profile.residual > tol {
        return Err(Error::NoConvergence { iterations, residual: profile.residual });
    }
    debug_assert!(converged || iterations == MAX_NEWTON_ITERATIONS || collapsed(&u));
    Ok(profile)
}

/// Predictor for a neighbouring `ε`: oscillating part scaled by `√(ε'/ε)`,
/// mean and period shift scaled by `ε'/ε`.
fn rescale_for(profile: &WaveProfile, eps: f64) -> WaveProfile {
    let ratio = eps / profile.eps;
    let root = ratio.sqrt();
    let coeffs = profile
        .phi()
        .modes()
        .map(|(k, c)| if k == 0 { c * ratio } else { c * root })
        .collect();
    let l0 = profile.params.l0();
    let period = l0 + (profile.period - l0) * ratio;
    WaveProfile::from_phi(profile.params, eps, period, FourierSeries::from_coeffs(coeffs))
}

/// Natural-parameter continuation along an ascending `ε` grid.
pub fn continue_family(eps_grid: &[f64], params: &Params, m: usize, tol: f64) -> Result<Vec<WaveProfile>> {
    continue_family_with(eps_grid, params, m, tol, |_| Ok(()))
}

/// [`continue_family`], handing each converged profile to `on_profile`
/// before the next one is attempted.
pub fn continue_family_with(
    eps_grid: &[f64],
    params: &Params,
    m: usize,
    tol: f64,
    mut on_profile: impl FnMut(&WaveProfile) -> Result<()>,
) -> Result<Vec<WaveProfile>> {
    if eps_grid.is_empty() {
        return Err(Error::InvalidParams("eps grid is empty".into()));
    }
    for &eps in eps_grid {
        if !(eps > 0.0 && eps <= MAX_EPS) {
            return Err(Error::InvalidParams(format!("eps values must lie in (0, {MAX_EPS}], got {eps}")));
        }
    }
    if eps_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("eps grid must be strictly ascending".into()));
    }
    let mut family: Vec<WaveProfile> = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let guess = match family.last() {
            None => initial_guess(eps, params)?,
            Some(prev) => rescale_for(prev, eps),
        };
        let profile = solve_orbit(&guess, m, tol).map_err(|e| e.at_eps(eps))?;
        on_profile(&profile)?;
        family.push(profile);
    }
    Ok(family)
}

/// Steps per period for [`shooting_return_gap`].
pub const SHOOTING_STEPS: usize = 4096;

/// Integrates `Φ' = F(Φ)` by classical RK4 from the synthesized `Φ(0)` over
/// one period and returns `max |Φ(L) − Φ(0)|`.
pub fn shooting_return_gap(profile: &WaveProfile, steps: usize) -> f64 {
    let (c, params) = (profile.c, &profile.params);
    let f = |s: StateVec| crate::model::vector_field(s, c, params);
    let h = profile.period / steps as f64;
    let start = profile.evaluate(0.0);
    let mut s = start;
    for _ in 0..steps {
        let k1 = f(s);
        let k2 = f(s + k1 * (0.5 * h));
        let k3 = f(s + k2 * (0.5 * h));
        let k4 = f(s + k3 * h);
        s = s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    (s - start).max_abs()
}

/// Linear-in-`ε` bound constant `max |L_ε − L₀| / ε` over a family.
pub fn period_shift_constant(family: &[WaveProfile]) -> f64 {
    family
        .iter()
        .map(|p| (p.period - p.params.l0()).abs() / p.eps)
        .fold(0.0, f64::max)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
