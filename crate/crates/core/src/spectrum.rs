//! Floquet spectrum as the union of Bloch spectra over a `θ` grid, the
//! instability verdict, and the small-`ε` convergence study at `θ = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{assemble_bloch, linearized_coeffs, BlochMatrix, CoeffSeries};
use crate::error::{Error, Result};
use crate::linalg;
use crate::orbit::{loglog_slope, WaveProfile};

/// Largest `|λ_N − λ_{2N}|` (unscaled) for an eigenvalue to count as converged.
pub const TRUNCATION_TOL: f64 = 1e-8;
pub const DEFAULT_N_THETA: usize = 64;
pub const MIN_N_THETA: usize = 3;
/// Slack for the monotone-decrease check of the convergence study.
pub const MONOTONE_SLACK: f64 = 1e-10;

pub fn eig_dense(matrix: &BlochMatrix) -> Result<Vec<Complex64>> {
    linalg::eigenvalues(&matrix.entries)
}

/// `θ_j = −π + 2π(j+1)/n`, `j = 0..n`: uniform over `(−π, π]`, contains `π`,
/// and contains `0` when `n` is even.
pub fn theta_grid(n_theta: usize) -> Vec<f64> {
    (0..n_theta)
        .map(|j| {
            if j + 1 == n_theta {
                PI
            } else {
                -PI + 2.0 * PI * (j + 1) as f64 / n_theta as f64
            }
        })
        .collect()
}

/// Eigenvalues of one Bloch matrix at truncation `N`, each with its distance
/// to the nearest eigenvalue at truncation `2N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSlice {
    pub theta: f64,
    /// `L³`.
    pub scale: f64,
    pub scaled: Vec<Complex64>,
    pub unscaled: Vec<Complex64>,
    /// Nearest eigenvalue (scaled) at truncation `2N`.
    pub refined: Vec<Complex64>,
    /// Unscaled `|λ_N − λ_{2N}|` to that refined eigenvalue.
    pub discrepancy: Vec<f64>,
    pub kept: Vec<bool>,
}

impl SpectrumSlice {
    /// Builds a slice from eigenvalues (scaled) at `N` and at `2N`.
    pub fn from_eigenvalues(theta: f64, scale: f64, coarse: Vec<Complex64>, fine: &[Complex64]) -> Self {
        let unscaled: Vec<Complex64> = coarse.iter().map(|z| z / scale).collect();
        let refined: Vec<Complex64> = coarse
            .iter()
            .map(|z| {
                *fine
                    .iter()
                    .min_by(|a, b| (z - *a).norm().total_cmp(&(z - *b).norm()))
                    .expect("non-empty refined spectrum")
            })
            .collect();
        let discrepancy: Vec<f64> = coarse.iter().zip(&refined).map(|(z, w)| (z - w).norm() / scale).collect();
        let kept = discrepancy.iter().map(|&d| d <= TRUNCATION_TOL).collect();
        SpectrumSlice { theta, scale, scaled: coarse, unscaled, refined, discrepancy, kept }
    }

    /// Eigensolves both matrices; they must share `θ` and scale.
    pub fn from_matrices(coarse: &BlochMatrix, fine: &BlochMatrix) -> Result<Self> {
        assert_eq!(coarse.theta, fine.theta, "matrices for different theta");
        let a = eig_dense(coarse)?;
        let b = eig_dense(fine)?;
        Ok(Self::from_eigenvalues(coarse.theta, coarse.scale, a, &b))
    }

    pub fn kept_count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    /// Index of the kept eigenvalue with the largest real part.
    pub fn argmax_kept(&self) -> Option<usize> {
        (0..self.len())
            .filter(|&i| self.kept[i])
            .max_by(|&i, &j| self.unscaled[i].re.total_cmp(&self.unscaled[j].re))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetSpectrum {
    pub eps: f64,
    pub n_modes: usize,
    pub slices: Vec<SpectrumSlice>,
    /// Largest `Re λ` over kept eigenvalues; `−∞` if none is kept.
    pub max_real: f64,
    /// `(slice, eigenvalue)` attaining `max_real`.
    pub argmax: Option<(usize, usize)>,
    pub unstable: bool,
}

impl FloquetSpectrum {
    pub fn from_slices(eps: f64, n_modes: usize, slices: Vec<SpectrumSlice>) -> Self {
        let mut argmax = None;
        let mut max_real = f64::NEG_INFINITY;
        for (s, slice) in slices.iter().enumerate() {
            if let Some(i) = slice.argmax_kept() {
                if slice.unscaled[i].re > max_real {
                    max_real = slice.unscaled[i].re;
                    argmax = Some((s, i));
                }
            }
        }
        FloquetSpectrum { eps, n_modes, slices, max_real, argmax, unstable: max_real > 0.0 }
    }

    pub fn slice_at(&self, theta: f64) -> Option<&SpectrumSlice> {
        self.slices.iter().find(|s| s.theta == theta)
    }
}

fn sweep_coeffs(coeffs: &CoeffSeries, period: f64, eps: f64, n_theta: usize, n_modes: usize) -> Result<FloquetSpectrum> {
    if n_theta < MIN_N_THETA {
        return Err(Error::InvalidParams(format!("need n_theta >= {MIN_N_THETA}, got {n_theta}")));
    }
    let slices = theta_grid(n_theta)
        .into_par_iter()
        .map(|theta| {
            let solve = || {
                let coarse = assemble_bloch(theta, coeffs, period, n_modes)?;
                let fine = assemble_bloch(theta, coeffs, period, 2 * n_modes)?;
                SpectrumSlice::from_matrices(&coarse, &fine)
            };
            solve().map_err(|e| e.at_theta(theta))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FloquetSpectrum::from_slices(eps, n_modes, slices))
}

/// Bloch spectra over the `θ` grid at truncations `N` and `2N`, solved in
/// parallel and returned in `θ` order.
pub fn floquet_sweep(profile: &WaveProfile, n_theta: usize, n_modes: usize) -> Result<FloquetSpectrum> {
    sweep_coeffs(&linearized_coeffs(profile), profile.period, profile.eps, n_theta, n_modes)
}

/// `λ̃₀ = rL₀³`, the unstable eigenvalue of the unperturbed operator at `θ = 0`.
pub fn unperturbed_eigenvalue(params: &crate::model::Params) -> f64 {
    let l0 = params.l0();
    params.r() * l0 * l0 * l0
}

/// θ = 0 eigenvalue (scaled) closest to `rL₀³`.
pub fn nearest_to_unperturbed(profile: &WaveProfile, n_modes: usize) -> Result<Complex64> {
    let target = unperturbed_eigenvalue(&profile.params);
    let matrix = assemble_bloch(0.0, &linearized_coeffs(profile), profile.period, n_modes)?;
    let eigs = eig_dense(&matrix).map_err(|e| e.at_theta(0.0))?;
    Ok(eigs
        .into_iter()
        .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
        .expect("non-empty spectrum"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// `min |λ̃ − rL₀³|` over the `θ = 0` spectrum.
    pub distance: f64,
    pub eigenvalue: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub reference: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Fitted exponent of `distance ∝ (√ε)^p`; `None` with fewer than two rows.
    pub exponent: Option<f64>,
    /// Distances nonincreasing as `ε` decreases, up to [`MONOTONE_SLACK`].
    pub monotone: bool,
}

pub fn convergence_study(profiles: &[WaveProfile], n_modes: usize) -> Result<ConvergenceStudy> {
    if profiles.windows(2).any(|w| w[1].eps <= w[0].eps) {
        return Err(Error::InvalidParams("profiles must be sorted by ascending eps".into()));
    }
    let reference = profiles.first().map(|p| unperturbed_eigenvalue(&p.params)).unwrap_or(f64::NAN);
    let rows = profiles
        .iter()
        .map(|p| {
            let z = nearest_to_unperturbed(p, n_modes).map_err(|e| e.at_eps(p.eps))?;
            Ok(ConvergenceRow { eps: p.eps, distance: (z - reference).norm(), eigenvalue: [z.re, z.im] })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|w| w[0].distance <= w[1].distance + MONOTONE_SLACK);
    let exponent = (rows.len() >= 2).then(|| {
        let x: Vec<f64> = rows.iter().map(|r| r.eps.sqrt()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.distance).collect();
        loglog_slope(&x, &y)
    });
    Ok(ConvergenceStudy { reference, rows, exponent, monotone })
}

/// Summary of one sweep, for people and for `verdicts.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub eps: f64,
    pub unstable: bool,
    pub max_re_lambda: f64,
    pub argmax_theta: f64,
    pub lambda: [f64; 2],
    pub lambda_scaled: [f64; 2],
    /// `|λ_N − λ_{2N}|` of the eigenvalue behind the verdict.
    pub discrepancy: f64,
    pub kept: usize,
    pub total: usize,
    pub n_theta: usize,
    pub bloch_n: usize,
}

pub fn verdict(spectrum: &FloquetSpectrum) -> Verdict {
    let kept = spectrum.slices.iter().map(SpectrumSlice::kept_count).sum();
    let total = spectrum.slices.iter().map(SpectrumSlice::len).sum();
    let (theta, lambda, scaled, discrepancy) = match spectrum.argmax {
        Some((s, i)) => {
            let slice = &spectrum.slices[s];
            (slice.theta, slice.unscaled[i], slice.scaled[i], slice.discrepancy[i])
        }
        None => (f64::NAN, Complex64::new(f64::NAN, f64::NAN), Complex64::new(f64::NAN, f64::NAN), f64::NAN),
    };
    Verdict {
        eps: spectrum.eps,
        unstable: spectrum.unstable,
        max_re_lambda: spectrum.max_real,
        argmax_theta: theta,
        lambda: [lambda.re, lambda.im],
        lambda_scaled: [scaled.re, scaled.im],
        discrepancy,
        kept,
        total,
        n_theta: spectrum.slices.len(),
        bloch_n: spectrum.n_modes,
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "eps = {}: {}", self.eps, if self.unstable { "UNSTABLE" } else { "no unstable spectrum found" })?;
        writeln!(f, "  max Re λ     = {:.12e} at θ = {:.6}", self.max_re_lambda, self.argmax_theta)?;
        writeln!(f, "  λ            = {:.12e} {:+.12e}i", self.lambda[0], self.lambda[1])?;
        writeln!(f, "  λ̃ = L³λ      = {:.12e} {:+.12e}i", self.lambda_scaled[0], self.lambda_scaled[1])?;
        write!(
            f,
            "  N vs 2N gap  = {:.3e} (kept {}/{} eigenvalues, {} θ values, N = {})",
            self.discrepancy, self.kept, self.total, self.n_theta, self.bloch_n
        )
    }
}

// ── CSV ────────────────────────────────────────────────────────────────────

pub const CSV_COLUMNS: [&str; 7] =
    ["eps", "theta", "re_lambda", "im_lambda", "re_lambda_scaled", "im_lambda_scaled", "kept_at_2N"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub eps: f64,
    pub theta: f64,
    pub lambda: Complex64,
    pub lambda_scaled: Complex64,
    pub kept: bool,
}

pub fn csv_rows(spectrum: &FloquetSpectrum) -> Vec<CsvRow> {
    spectrum
        .slices
        .iter()
        .flat_map(|s| {
            (0..s.len()).map(move |i| CsvRow {
                eps: spectrum.eps,
                theta: s.theta,
                lambda: s.unscaled[i],
                lambda_scaled: s.scaled[i],
                kept: s.kept[i],
            })
        })
        .collect()
}

/// Writes every eigenvalue with its `kept_at_2N` flag; `comment` becomes a
/// leading `# ` line.
pub fn write_csv(out: impl Write, comment: &str, rows: &[CsvRow]) -> Result<()> {
    let mut out = out;
    writeln!(out, "# {comment}")?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for row in rows {
        w.write_record([
            format!("{:.16e}", row.eps),
            format!("{:.16e}", row.theta),
            format!("{:.16e}", row.lambda.re),
            format!("{:.16e}", row.lambda.im),
            format!("{:.16e}", row.lambda_scaled.re),
            format!("{:.16e}", row.lambda_scaled.im),
            row.kept.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(input: impl Read) -> Result<Vec<CsvRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = r.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::Format(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_error)?;
        let num = |i: usize| -> Result<f64> {
            record[i].parse().map_err(|_| Error::Format(format!("bad number {:?} in column {}", &record[i], CSV_COLUMNS[i])))
        };
        let kept = match &record[6] {
            "true" => true,
            "false" => false,
            other => return Err(Error::Format(format!("bad kept_at_2N value {other:?}"))),
        };
        rows.push(CsvRow {
            eps: num(0)?,
            theta: num(1)?,
            lambda: Complex64::new(num(2)?, num(3)?),
            lambda_scaled: Complex64::new(num(4)?, num(5)?),
            kept,
        });
    }
    Ok(rows)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
