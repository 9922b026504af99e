use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::json;

use super::config::{ConfigError, RunConfig};
use super::VerifyFailed;
use crate::generator_tag;
use crate::hopf::detect_hopf;
use crate::orbit::{continue_family_with, WaveProfile};
use crate::spectrum::{self, convergence_study, csv_rows, floquet_sweep, verdict, write_csv};
use crate::verify;

/// Samples per period in the profile plot data.
const PROFILE_SAMPLES: usize = 512;

fn header(cfg: &RunConfig, eps: Option<f64>) -> String {
    let eps = match eps {
        Some(e) => e.to_string(),
        None => cfg.eps_grid.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
    };
    format!(
        "{} r={} alpha={} eps={} M={} N={} n_theta={}",
        generator_tag(),
        cfg.r,
        cfg.alpha,
        eps,
        cfg.fourier_m,
        cfg.bloch_n,
        cfg.n_theta
    )
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn wave_path(dir: &Path, eps: f64) -> PathBuf {
    dir.join(format!("wave_eps{eps}.json"))
}

pub fn hopf(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let params = cfg.params()?;
    let h = detect_hopf(&params, 1e-12)?;
    let doc = json!({
        "generator": generator_tag(),
        "r": params.r(),
        "alpha": params.alpha(),
        "c_star": h.c_star,
        "omega_star": h.omega_star,
        "slope": h.slope,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn profile_dat(cfg: &RunConfig, p: &WaveProfile) -> String {
    let mut s = format!("# {}\n# xi phi1 phi2 phi3\n", header(cfg, Some(p.eps)));
    for j in 0..=PROFILE_SAMPLES {
        let xi = j as f64 * p.period / PROFILE_SAMPLES as f64;
        let v = p.evaluate(xi);
        let _ = writeln!(s, "{xi:.16e} {:.16e} {:.16e} {:.16e}", v.phi1, v.phi2, v.phi3);
    }
    s
}

pub fn orbit(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    cfg.prepare_out_dir()?;
    let params = cfg.params()?;
    let dir = &cfg.out_dir;
    let mut done: Vec<(f64, f64, f64, f64)> = Vec::new();
    let result = continue_family_with(&cfg.eps_grid, &params, cfg.fourier_m, cfg.tol, |p| {
        fs::write(wave_path(dir, p.eps), p.to_json()? + "\n")?;
        fs::write(dir.join(format!("profile_eps{}.dat", p.eps)), profile_dat(cfg, p))?;
        done.push((p.eps, p.amplitude(), p.period, p.residual));
        println!(
            "eps = {:<8} amplitude = {:.10}  period = {:.12}  residual = {:.2e}",
            p.eps, p.amplitude(), p.period, p.residual
        );
        Ok(())
    });

    let mut csv = format!("# {}\neps,amplitude,period,residual\n", header(cfg, None));
    let mut dat = format!("# {}\n# sqrt_eps amplitude\n", header(cfg, None));
    for &(eps, amp, period, residual) in &done {
        let _ = writeln!(csv, "{eps:.16e},{amp:.16e},{period:.16e},{residual:.16e}");
        let _ = writeln!(dat, "{:.16e} {amp:.16e}", eps.sqrt());
    }
    write_file(&dir.join("scalings.csv"), &csv)?;
    write_file(&dir.join("amplitude_vs_sqrt_eps.dat"), &dat)?;
    result?;
    Ok(())
}

fn load_profile(cfg: &RunConfig, eps: f64) -> Result<WaveProfile> {
    let path = wave_path(&cfg.out_dir, eps);
    let text = fs::read_to_string(&path)
        .map_err(|e| ConfigError(format!("missing profile {} ({e}); run `orbit` first", path.display())))?;
    let p = WaveProfile::from_json(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    if p.params.r() != cfg.r || p.params.alpha() != cfg.alpha {
        return Err(ConfigError(format!(
            "{} was computed for r={}, alpha={}, not r={}, alpha={}",
            path.display(),
            p.params.r(),
            p.params.alpha(),
            cfg.r,
            cfg.alpha
        ))
        .into());
    }
    Ok(p)
}

pub fn spectrum(cfg: &RunConfig, constant_coeff: bool) -> Result<()> {
    cfg.validate()?;
    cfg.prepare_out_dir()?;
    let params = cfg.params()?;
    let profiles = if constant_coeff {
        vec![WaveProfile::zero(params)]
    } else {
        cfg.eps_grid.iter().map(|&eps| load_profile(cfg, eps)).collect::<Result<Vec<_>>>()?
    };

    let mut verdicts = Vec::new();
    for p in &profiles {
        let spec = floquet_sweep(p, cfg.n_theta, cfg.bloch_n)?;
        let path = cfg.out_dir.join(format!("spectrum_eps{}.csv", p.eps));
        let mut buf = Vec::new();
        write_csv(&mut buf, &header(cfg, Some(p.eps)), &csv_rows(&spec))?;
        fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
        let v = verdict(&spec);
        println!("{v}");
        verdicts.push(v);
    }
    let doc = json!({
        "generator": generator_tag(),
        "r": params.r(),
        "alpha": params.alpha(),
        "n_theta": cfg.n_theta,
        "bloch_n": cfg.bloch_n,
        "verdicts": verdicts,
    });
    write_file(&cfg.out_dir.join("verdicts.json"), &(serde_json::to_string_pretty(&doc)? + "\n"))?;

    if !constant_coeff && profiles.len() >= 2 {
        let study = convergence_study(&profiles, cfg.bloch_n)?;
        let mut csv = format!(
            "# {} reference={:.16e} exponent={}\neps,distance,re_lambda_scaled,im_lambda_scaled\n",
            header(cfg, None),
            study.reference,
            study.exponent.map_or("nan".into(), |e| format!("{e:.6}"))
        );
        for row in &study.rows {
            let _ = writeln!(
                csv,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                row.eps, row.distance, row.eigenvalue[0], row.eigenvalue[1]
            );
        }
        write_file(&cfg.out_dir.join("convergence.csv"), &csv)?;
        println!(
            "distance to rL0^3 = {:.10}: fitted exponent in sqrt(eps) {}, monotone {}",
            spectrum::unperturbed_eigenvalue(&params),
            study.exponent.map_or("n/a".into(), |e| format!("{e:.4}")),
            study.monotone
        );
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let outcomes = verify::run_all(&cfg.verify_settings()?);
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if outcomes.iter().any(|o| o.id == 2 && !o.passed) {
        println!("note: check 2 compares against +1/(2(r+1)); the cubic's crossing slope is -1/(2(r+1)), see README");
    }
    println!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        return Err(VerifyFailed { failed, total: outcomes.len() }.into());
    }
    Ok(())
}
