//! The acceptance checks, runnable from the library, the CLI and the test
//! suite. Every check is parametric in `(r, α)` and reports its own timing.

use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::bloch::{self, bloch_frequency, constant_coeff_symbol, interpolation_check};
use crate::error::Result;
use crate::hopf::detect_hopf;
use crate::model::Params;
use crate::orbit::{self, loglog_slope, shooting_return_gap, WaveProfile, SHOOTING_STEPS};
use crate::spectrum::{self, floquet_sweep, unperturbed_eigenvalue, FloquetSpectrum, TRUNCATION_TOL};

pub const HOPF_R_VALUES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const DEFAULT_EPS_GRID: [f64; 5] = [0.001, 0.002, 0.004, 0.008, 0.016];
pub const INTERPOLATION_DELTAS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
pub const INTERPOLATION_SAMPLES: usize = 200;
pub const INTERPOLATION_DEGREE: usize = 16;
pub const INTERPOLATION_SEED: u64 = 0x5eed_0042;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub hopf_location: f64,
    pub crossing_slope: f64,
    pub amplitude_slope: f64,
    /// Cap `K` in `|L_ε − L₀| ≤ Kε`.
    pub period_constant: f64,
    pub shooting: f64,
    pub symbol: f64,
    /// Relative tolerance for "exactly `rL₀³`".
    pub unperturbed: f64,
    /// Factor in `distance ≤ factor·√ε·rL₀³`.
    pub distance_factor: f64,
    pub truncation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hopf_location: 1e-8,
            crossing_slope: 1e-5,
            amplitude_slope: 0.05,
            period_constant: 5.0,
            shooting: 1e-6,
            symbol: 1e-10,
            unperturbed: 1e-14,
            distance_factor: 3.0,
            truncation: TRUNCATION_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub params: Params,
    pub eps_grid: Vec<f64>,
    pub n_theta: usize,
    pub fourier_m: usize,
    pub bloch_n: usize,
    pub tol: f64,
    pub tolerances: Tolerances,
}

impl VerifySettings {
    pub fn new(params: Params) -> Self {
        VerifySettings {
            params,
            eps_grid: DEFAULT_EPS_GRID.to_vec(),
            n_theta: spectrum::DEFAULT_N_THETA,
            fourier_m: orbit::DEFAULT_FOURIER_M,
            bloch_n: bloch::DEFAULT_BLOCH_N,
            tol: orbit::DEFAULT_TOL,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<28} {} ({:.2} s of {:.0} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

fn outcome(id: u32, name: &'static str, budget: f64, start: Instant, ok: bool, detail: String) -> CheckOutcome {
    let seconds = start.elapsed().as_secs_f64();
    CheckOutcome { id, name, passed: ok && seconds < budget, detail, seconds, budget_seconds: budget }
}

fn failed(id: u32, name: &'static str, budget: f64, start: Instant, err: &crate::Error) -> CheckOutcome {
    outcome(id, name, budget, start, false, format!("error: {err}"))
}

/// 1. `|c* + r|` over the fixed `r` set.
pub fn check_hopf_location(tol: f64) -> CheckOutcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for r in HOPF_R_VALUES {
        match Params::new(r, 1.0).and_then(|p| detect_hopf(&p, 1e-12)) {
            Ok(h) => worst = worst.max((h.c_star + r).abs()),
            Err(e) => return failed(1, "hopf location", 1.0, start, &e),
        }
    }
    outcome(1, "hopf location", 1.0, start, worst <= tol, format!("max |c* + r| = {worst:.2e} (tol {tol:.0e})"))
}

/// 2. Numerical crossing slope against the stated `+1/(2(r+1))`.
///
/// The computed slope is `−1/(2(r+1))` (implicit differentiation of the
/// cubic gives the same); the detail line reports both comparisons.
pub fn check_transversality(tol: f64) -> CheckOutcome {
    let start = Instant::now();
    let (mut stated, mut reversed) = (0.0f64, 0.0f64);
    let mut slopes = Vec::new();
    for r in HOPF_R_VALUES {
        match Params::new(r, 1.0).and_then(|p| detect_hopf(&p, 1e-12)) {
            Ok(h) => {
                let closed = 1.0 / (2.0 * (r + 1.0));
                stated = stated.max((h.slope - closed).abs());
                reversed = reversed.max((h.slope + closed).abs());
                slopes.push(format!("{:.6}", h.slope));
            }
            Err(e) => return failed(2, "transversality", 1.0, start, &e),
        }
    }
    let detail = format!(
        "slopes [{}]; max |s - 1/(2(r+1))| = {stated:.2e} (tol {tol:.0e}); max |s + 1/(2(r+1))| = {reversed:.2e}",
        slopes.join(", ")
    );
    outcome(2, "transversality", 1.0, start, stated <= tol, detail)
}

/// 3. Log-log slope of `max|φ|` against `ε`.
pub fn check_amplitude_scaling(family: &[WaveProfile], tol: f64, seconds: f64) -> CheckOutcome {
    let start = Instant::now();
    let eps: Vec<f64> = family.iter().map(|p| p.eps).collect();
    let amp: Vec<f64> = family.iter().map(WaveProfile::amplitude).collect();
    let slope = loglog_slope(&eps, &amp);
    let mut out = outcome(
        3,
        "amplitude scaling",
        30.0,
        start,
        family.len() >= 2 && (slope - 0.5).abs() <= tol,
        format!("log-log slope {slope:.4} (0.5 ± {tol})"),
    );
    out.seconds += seconds;
    out.passed &= out.seconds < out.budget_seconds;
    out
}

/// 4. `|L_ε − L₀| ≤ Kε`.
pub fn check_period_scaling(family: &[WaveProfile], cap: f64, seconds: f64) -> CheckOutcome {
    let start = Instant::now();
    let k = orbit::period_shift_constant(family);
    let mut out = outcome(
        4,
        "period scaling",
        30.0,
        start,
        !family.is_empty() && k <= cap,
        format!("max |L - L0|/eps = {k:.4} (cap {cap})"),
    );
    out.seconds += seconds;
    out.passed &= out.seconds < out.budget_seconds;
    out
}

/// 5. RK4 shooting over one period returns to the start.
pub fn check_shooting(family: &[WaveProfile], tol: f64) -> CheckOutcome {
    let start = Instant::now();
    let worst = family.iter().map(|p| shooting_return_gap(p, SHOOTING_STEPS)).fold(0.0, f64::max);
    outcome(
        5,
        "orbit shooting oracle",
        10.0,
        start,
        !family.is_empty() && worst <= tol,
        format!("max return gap {worst:.2e} over {} orbits (tol {tol:.0e})", family.len()),
    )
}

/// 6. The `ε = 0` Hill spectrum equals the closed-form symbol.
pub fn check_constant_coeff(params: &Params, n_theta: usize, n_modes: usize, tol: f64) -> CheckOutcome {
    let start = Instant::now();
    let spec = match floquet_sweep(&WaveProfile::zero(*params), n_theta, n_modes) {
        Ok(s) => s,
        Err(e) => return failed(6, "constant-coefficient oracle", 20.0, start, &e),
    };
    let mut worst_abs = 0.0f64;
    let mut worst_rel = 0.0f64;
    for slice in &spec.slices {
        let n = n_modes as i64;
        let mut symbol: Vec<Complex64> =
            (-n..=n).map(|k| constant_coeff_symbol(bloch_frequency(slice.theta, k), params)).collect();
        for z in &slice.scaled {
            let (j, d) = symbol
                .iter()
                .enumerate()
                .map(|(j, w)| (j, (z - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("symbol set exhausted");
            worst_abs = worst_abs.max(d);
            worst_rel = worst_rel.max(d / symbol[j].norm().max(1.0));
            symbol.swap_remove(j);
        }
    }
    outcome(
        6,
        "constant-coefficient oracle",
        20.0,
        start,
        worst_abs <= tol,
        format!("max |λ̃ - symbol| = {worst_abs:.2e} ({worst_rel:.2e} relative; tol {tol:.0e}) over {n_theta} θ"),
    )
}

/// 7. `rL₀³` is an eigenvalue at `θ = 0`, `ε = 0`; reports its multiplicity.
pub fn check_unperturbed_eigenvalue(params: &Params, n_modes: usize, tol: f64) -> CheckOutcome {
    let start = Instant::now();
    let target = unperturbed_eigenvalue(params);
    let coeffs = bloch::linearized_coeffs(&WaveProfile::zero(*params));
    let eigs = match bloch::assemble_bloch(0.0, &coeffs, params.l0(), n_modes).and_then(|m| spectrum::eig_dense(&m)) {
        Ok(e) => e,
        Err(e) => return failed(7, "unperturbed eigenvalue", 1.0, start, &e),
    };
    let gap = eigs.iter().map(|z| (z - target).norm()).fold(f64::INFINITY, f64::min);
    let multiplicity = eigs.iter().filter(|z| (*z - target).norm() <= 1e-8 * target).count();
    outcome(
        7,
        "unperturbed eigenvalue",
        1.0,
        start,
        gap <= tol * target,
        format!("rL0^3 = {target:.10}, nearest gap {gap:.2e}, observed multiplicity {multiplicity}"),
    )
}

/// Distance from `rL₀³` of the kept `θ = 0` eigenvalue nearest to it, with
/// that eigenvalue's `N` vs `2N` discrepancy.
fn theta_zero_distance(spec: &FloquetSpectrum, target: f64) -> Option<(f64, f64)> {
    let slice = spec.slice_at(0.0)?;
    (0..slice.len())
        .filter(|&i| slice.kept[i])
        .map(|i| ((slice.scaled[i] - target).norm(), slice.discrepancy[i]))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// 8. Every wave is unstable; the `θ = 0` eigenvalue approaches `rL₀³`.
pub fn check_main_theorem(spectra: &[FloquetSpectrum], params: &Params, factor: f64, seconds: f64) -> CheckOutcome {
    let start = Instant::now();
    let target = unperturbed_eigenvalue(params);
    let mut ok = !spectra.is_empty();
    let mut parts = Vec::new();
    let mut distances = Vec::new();
    for spec in spectra {
        let bound = factor * spec.eps.sqrt() * target;
        match theta_zero_distance(spec, target) {
            Some((d, _)) => {
                ok &= spec.unstable && d <= bound;
                distances.push(d);
                parts.push(format!("ε={} d={d:.3e}{}", spec.eps, if spec.unstable { "" } else { " STABLE" }));
            }
            None => {
                ok = false;
                parts.push(format!("ε={} no kept θ=0 eigenvalue", spec.eps));
            }
        }
    }
    let monotone = distances.windows(2).all(|w| w[0] <= w[1] + spectrum::MONOTONE_SLACK);
    ok &= monotone;
    let mut out = outcome(
        8,
        "instability at desk scale",
        120.0,
        start,
        ok,
        format!("{}; monotone {monotone}", parts.join(", ")),
    );
    out.seconds += seconds;
    out.passed &= out.seconds < out.budget_seconds;
    out
}

/// 9. Interpolation inequalities on random trigonometric polynomials.
pub fn check_interpolation() -> CheckOutcome {
    let start = Instant::now();
    let report = interpolation_check(INTERPOLATION_SAMPLES, INTERPOLATION_DEGREE, &INTERPOLATION_DELTAS, INTERPOLATION_SEED);
    outcome(
        9,
        "interpolation inequalities",
        5.0,
        start,
        report.violations == 0,
        format!("{} violations in {} cases, worst lhs/rhs {:.4}", report.violations, report.cases, report.worst_ratio),
    )
}

/// 10. Eigenvalues behind verdicts pass the `N` vs `2N` filter.
pub fn check_truncation(spectra: &[FloquetSpectrum], params: &Params, tol: f64) -> CheckOutcome {
    let start = Instant::now();
    let target = unperturbed_eigenvalue(params);
    let mut worst = 0.0f64;
    let mut ok = !spectra.is_empty();
    for spec in spectra {
        match spec.argmax {
            Some((s, i)) => worst = worst.max(spec.slices[s].discrepancy[i]),
            None => ok = false,
        }
        match theta_zero_distance(spec, target) {
            Some((_, disc)) => worst = worst.max(disc),
            None => ok = false,
        }
    }
    outcome(
        10,
        "truncation robustness",
        120.0,
        start,
        ok && worst <= tol,
        format!("max N vs 2N gap of verdict eigenvalues {worst:.2e} (tol {tol:.0e})"),
    )
}

/// Solved family and spectra shared by checks 3–5, 8 and 10, with timings.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub family: Vec<WaveProfile>,
    pub family_seconds: f64,
    pub spectra: Vec<FloquetSpectrum>,
    pub spectra_seconds: f64,
}

pub fn run_pipeline(settings: &VerifySettings) -> Result<Pipeline> {
    let start = Instant::now();
    let family = orbit::continue_family(&settings.eps_grid, &settings.params, settings.fourier_m, settings.tol)?;
    let family_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let spectra = family
        .iter()
        .map(|p| floquet_sweep(p, settings.n_theta, settings.bloch_n).map_err(|e| e.at_eps(p.eps)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Pipeline { family, family_seconds, spectra, spectra_seconds: start.elapsed().as_secs_f64() })
}

/// Runs all ten checks in order. Pipeline errors turn the dependent checks
/// into failures rather than aborting.
pub fn run_all(settings: &VerifySettings) -> Vec<CheckOutcome> {
    let t = &settings.tolerances;
    let p = &settings.params;
    let mut out = vec![check_hopf_location(t.hopf_location), check_transversality(t.crossing_slope)];
    let start = Instant::now();
    match run_pipeline(settings) {
        Ok(pipe) => {
            out.push(check_amplitude_scaling(&pipe.family, t.amplitude_slope, pipe.family_seconds));
            out.push(check_period_scaling(&pipe.family, t.period_constant, pipe.family_seconds));
            out.push(check_shooting(&pipe.family, t.shooting));
            out.push(check_constant_coeff(p, settings.n_theta, settings.bloch_n, t.symbol));
            out.push(check_unperturbed_eigenvalue(p, settings.bloch_n, t.unperturbed));
            out.push(check_main_theorem(&pipe.spectra, p, t.distance_factor, pipe.spectra_seconds));
            out.push(check_interpolation());
            out.push(check_truncation(&pipe.spectra, p, t.truncation));
        }
        Err(e) => {
            for (id, name, budget) in
                [(3, "amplitude scaling", 30.0), (4, "period scaling", 30.0), (5, "orbit shooting oracle", 10.0)]
            {
                out.push(failed(id, name, budget, start, &e));
            }
            out.push(check_constant_coeff(p, settings.n_theta, settings.bloch_n, t.symbol));
            out.push(check_unperturbed_eigenvalue(p, settings.bloch_n, t.unperturbed));
            out.push(failed(8, "instability at desk scale", 120.0, start, &e));
            out.push(check_interpolation());
            out.push(failed(10, "truncation robustness", 120.0, start, &e));
        }
    }
    out
}
