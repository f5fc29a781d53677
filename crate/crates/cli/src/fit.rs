use std::fmt;
use std::path::Path;
use std::str::FromStr;

use tlschain::analysis::{fit_exponential, natural_time_to_microseconds, select_window};
use tlschain::{FitF64, OffsetMode};

use crate::csvio::{read_csv, Table};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Nq,
    Coherence,
}

impl Observable {
    pub fn column(self) -> &'static str {
        match self {
            Observable::Nq => "n_q",
            Observable::Coherence => "coherence",
        }
    }
}

impl FromStr for Observable {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "n_q" => Ok(Observable::Nq),
            "coherence" => Ok(Observable::Coherence),
            _ => Err(format!("unknown observable `{s}` (expected n_q or coherence)")),
        }
    }
}

/// Parses `free` or `fixed=<v>`.
pub fn parse_offset(s: &str) -> Result<OffsetMode<f64>, String> {
    if s == "free" {
        return Ok(OffsetMode::Free);
    }
    s.strip_prefix("fixed=")
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .map(OffsetMode::Fixed)
        .ok_or_else(|| format!("bad offset `{s}` (expected free or fixed=<value>)"))
}

/// Parses `lo,hi`.
pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("bad window `{s}` (expected lo,hi)"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad window start `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad window end `{hi}`"))?;
    if !(lo < hi) {
        return Err(format!("window start {lo} must be below its end {hi}"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitRequest {
    pub observable: Observable,
    pub offset: OffsetMode<f64>,
    pub window: Option<(f64, f64)>,
}

impl Default for FitRequest {
    fn default() -> Self {
        Self {
            observable: Observable::Nq,
            offset: OffsetMode::Free,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub source: String,
    pub column: String,
    pub fit: FitF64,
    /// Decay time and its uncertainty in μs at 1 MHz energy units.
    pub time_constant_us: f64,
    pub sigma_time_constant_us: f64,
}

impl FitReport {
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        let f = &self.fit;
        vec![
            ("source", self.source.clone()),
            ("column", self.column.clone()),
            ("A", f.amplitude.to_string()),
            ("sigma_A", f.sigma_amplitude.to_string()),
            ("T", f.time_constant.to_string()),
            ("sigma_T", f.sigma_time_constant.to_string()),
            ("C", f.offset.to_string()),
            ("sigma_C", f.sigma_offset.to_string()),
            ("residual", f.residual_norm.to_string()),
            ("points", f.points.to_string()),
            ("iterations", f.iterations.to_string()),
            ("converged", f.converged.to_string()),
            ("T_us", self.time_constant_us.to_string()),
            ("sigma_T_us", self.sigma_time_constant_us.to_string()),
        ]
    }
}

impl fmt::Display for FitReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let f = &self.fit;
        writeln!(out, "fit of {} in {}: A exp(-t/T) + C", self.column, self.source)?;
        writeln!(out, "  A = {:.6} +/- {:.6}", f.amplitude, f.sigma_amplitude)?;
        writeln!(out, "  T = {:.4} +/- {:.4}", f.time_constant, f.sigma_time_constant)?;
        writeln!(out, "  C = {:.6} +/- {:.6}", f.offset, f.sigma_offset)?;
        writeln!(
            out,
            "  T = {:.3} +/- {:.3} us (unit 1 MHz)",
            self.time_constant_us, self.sigma_time_constant_us
        )?;
        writeln!(out, "  residual norm {:.6e} over {} points", f.residual_norm, f.points)?;
        writeln!(out)?;
        for (k, v) in self.key_values() {
            writeln!(out, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Picks the observable's column from a per-trajectory file, or `mean`
/// from an ensemble file.
fn series<'a>(table: &'a Table, observable: Observable) -> Option<(&'a str, &'a [f64])> {
    [observable.column(), "mean"]
        .into_iter()
        .find_map(|name| table.column(name).map(|c| (name, c)))
}

pub fn fit_table(table: &Table, source: &str, req: &FitRequest) -> Result<FitReport> {
    let csv_err = |message: String| CliError::Csv {
        path: source.into(),
        line: 1,
        message,
    };
    let times = table.column("t").ok_or_else(|| csv_err("no `t` column".into()))?;
    let (column, values) = series(table, req.observable).ok_or_else(|| {
        csv_err(format!("neither `{}` nor `mean` column present", req.observable.column()))
    })?;
    let (t, v) = match req.window {
        Some((lo, hi)) => select_window(times, values, lo, hi),
        None => (times.to_vec(), values.to_vec()),
    };
    let fit = fit_exponential(&t, &v, req.offset).map_err(|e| CliError::Fit {
        message: format!("{source}: {e}"),
    })?;
    if !fit.converged {
        return Err(CliError::Fit {
            message: format!(
                "{source}: no convergence after {} iterations ({}); last estimate A={} T={} C={}",
                fit.iterations,
                fit.diagnostic.as_deref().unwrap_or("no diagnostic"),
                fit.amplitude,
                fit.time_constant,
                fit.offset
            ),
        });
    }
    let to_us = |x: f64| natural_time_to_microseconds(x, 1.0).expect("unit is positive");
    Ok(FitReport {
        source: source.to_string(),
        column: column.to_string(),
        time_constant_us: to_us(fit.time_constant),
        sigma_time_constant_us: to_us(fit.sigma_time_constant),
        fit,
    })
}

pub fn cmd_fit(path: &Path, req: &FitRequest) -> Result<FitReport> {
    let table = read_csv(path)?;
    fit_table(&table, &path.display().to_string(), req)
}
