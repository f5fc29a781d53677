use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use tlschain::analysis::{fit_exponential, fit_power_law};
use tlschain::{EnsembleF64, FitF64, OffsetMode, QubitState, ScalingF64};

use crate::config::RunConfig;
use crate::csvio::{format_value, write_csv, write_text};
use crate::error::{CliError, Result};
use crate::fit::Observable;
use crate::run::simulate;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSeries {
    pub observable: Observable,
    pub couplings: Vec<f64>,
    pub fits: Vec<FitF64>,
    pub scaling: ScalingF64,
}

impl ScanSeries {
    pub fn times(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.time_constant).collect()
    }

    pub fn at(&self, coupling: f64) -> Option<&FitF64> {
        self.couplings
            .iter()
            .position(|&j| j == coupling)
            .map(|i| &self.fits[i])
    }
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub t1: ScanSeries,
    /// Present when the initial qubit state is the superposition.
    pub t2: Option<ScanSeries>,
    pub ensembles: Vec<(f64, EnsembleF64)>,
}

/// Parses `a,b,c` or `[a, b, c]`.
pub fn parse_couplings(s: &str) -> Result<Vec<f64>, String> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && v.is_finite())
                .ok_or_else(|| format!("bad coupling `{}`", x.trim()))
        })
        .collect()
}

/// Fits one ensemble curve with a free offset.
pub fn fit_curve(times: &[f64], values: &[f64], context: &str) -> Result<FitF64> {
    let fit = fit_exponential(times, values, OffsetMode::Free).map_err(|e| CliError::Fit {
        message: format!("{context}: {e}"),
    })?;
    if !fit.converged {
        return Err(CliError::Fit {
            message: format!(
                "{context}: {}",
                fit.diagnostic.as_deref().unwrap_or("no convergence")
            ),
        });
    }
    Ok(fit)
}

/// Config for one point of a scan: `J_q_tau` replaced and any explicit
/// `expected_T1` rescaled as `J⁻²`.
pub fn config_at(base: &RunConfig, coupling: f64) -> RunConfig {
    let mut c = base.clone();
    c.J_q_tau = coupling;
    c.expected_T1 = base
        .expected_T1
        .map(|t| t * (base.J_q_tau / coupling).powi(2));
    c
}

/// Scan with an injectable simulator, so the fitting and scaling plumbing
/// can be exercised on synthetic ensembles.
pub fn scan_with<F>(base: &RunConfig, couplings: &[f64], mut simulate: F, log: &dyn Fn(&str)) -> Result<ScanOutcome>
where
    F: FnMut(&RunConfig) -> Result<EnsembleF64>,
{
    if couplings.len() < 3 {
        return Err(CliError::invalid("J", "a scan needs at least three couplings"));
    }
    let plus = base.qubit_state == QubitState::Plus;
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let mut ensembles = Vec::new();
    for (k, &j) in couplings.iter().enumerate() {
        let cfg = config_at(base, j);
        log(&format!("[{}/{}] J_q_tau = {j}", k + 1, couplings.len()));
        let e = simulate(&cfg).map_err(|e| match e {
            CliError::Simulation(m) => CliError::Simulation(format!("J_q_tau = {j}: {m}")),
            other => other,
        })?;
        t1.push(fit_curve(&e.times, &e.n_q.mean, &format!("n_q at J_q_tau = {j}"))?);
        if plus {
            let c = e.coherence.as_ref().ok_or_else(|| {
                CliError::Simulation(format!("J_q_tau = {j}: no coherence recorded"))
            })?;
            t2.push(fit_curve(&e.times, &c.mean, &format!("coherence at J_q_tau = {j}"))?);
        }
        ensembles.push((j, e));
    }
    let series = |observable, fits: Vec<FitF64>| -> Result<ScanSeries> {
        let times: Vec<f64> = fits.iter().map(|f| f.time_constant).collect();
        let scaling = fit_power_law(couplings, &times).map_err(|e| CliError::Fit {
            message: format!("power law: {e}"),
        })?;
        Ok(ScanSeries {
            observable,
            couplings: couplings.to_vec(),
            fits,
            scaling,
        })
    };
    Ok(ScanOutcome {
        t1: series(Observable::Nq, t1)?,
        t2: if plus { Some(series(Observable::Coherence, t2)?) } else { None },
        ensembles,
    })
}

pub fn scan(base: &RunConfig, couplings: &[f64], log: &dyn Fn(&str)) -> Result<ScanOutcome> {
    scan_with(base, couplings, simulate, log)
}

pub fn scaling_report(series: &ScanSeries, label: &str) -> String {
    let s = &series.scaling;
    let mut r = String::new();
    let _ = writeln!(r, "{label}_exponent={}", s.exponent);
    let _ = writeln!(r, "{label}_sigma_exponent={}", s.sigma_exponent);
    let _ = writeln!(r, "{label}_prefactor={}", s.prefactor);
    let _ = writeln!(r, "{label}_sigma_prefactor={}", s.sigma_prefactor);
    let _ = writeln!(r, "{label}_log_residual={}", s.residual);
    for (j, f) in series.couplings.iter().zip(&series.fits) {
        let _ = writeln!(
            r,
            "{label}[{}]={} +/- {}",
            format_value(*j),
            f.time_constant,
            f.sigma_time_constant
        );
    }
    r
}

/// Writes per-coupling ensemble curves, `<run>_T1.csv` (and `_T2.csv`)
/// with columns `J,T,sigma_T`, and `<run>_scan.txt`.
pub fn write_scan(base: &RunConfig, outcome: &ScanOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let name = &base.run_name;
    let mut files = Vec::new();
    for (j, e) in &outcome.ensembles {
        files.push(write_csv(
            &dir.join(format!("{name}_J{j}_n_q.csv")),
            &["t", "mean", "std"],
            &[&e.times, &e.n_q.mean, &e.n_q.std],
        )?);
        if let Some(c) = &e.coherence {
            files.push(write_csv(
                &dir.join(format!("{name}_J{j}_coherence.csv")),
                &["t", "mean", "std"],
                &[&e.times, &c.mean, &c.std],
            )?);
        }
    }
    let mut report = scaling_report(&outcome.t1, "T1");
    let mut series = vec![("T1", &outcome.t1)];
    if let Some(t2) = &outcome.t2 {
        report.push_str(&scaling_report(t2, "T2"));
        series.push(("T2", t2));
    }
    for (label, s) in series {
        let sig: Vec<f64> = s.fits.iter().map(|f| f.sigma_time_constant).collect();
        files.push(write_csv(
            &dir.join(format!("{name}_{label}.csv")),
            &["J", "T", "sigma_T"],
            &[&s.couplings, &s.times(), &sig],
        )?);
    }
    files.push(write_text(&dir.join(format!("{name}_scan.txt")), &report)?);
    Ok(files)
}

pub fn cmd_scan(base: &RunConfig, couplings: &[f64], dir: &Path, log: &dyn Fn(&str)) -> Result<ScanOutcome> {
    let outcome = scan(base, couplings, log)?;
    write_scan(base, &outcome, dir)?;
    Ok(outcome)
}
