//! Named parameter sets for the standard figures.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tlschain::analysis::{prominent_maxima, tail_mean};
use tlschain::fftie::run_coherent;
use tlschain::{EnsembleF64, FitF64, InitialState, ModelParamsF64, QubitState};

use crate::config::{RunConfig, HORIZON_FACTOR, REFERENCE_T1};
use crate::csvio::{write_csv, write_text};
use crate::error::Result;
use crate::plot::render_svg;
use crate::run::{simulate, write_ensemble};
use crate::scan::{fit_curve, scan, scaling_report, ScanSeries};

pub const SCAN_COUPLINGS: [f64; 5] = [0.01, 0.008, 0.006, 0.004, 0.002];
pub const INTERNAL_COUPLINGS: [f64; 5] = [0.2, 0.5, 1.0, 3.0, 7.0];
/// `None` is the erasure-free limit.
pub const HOLD_TIMES: [Option<f64>; 7] = [
    None,
    Some(90.0),
    Some(50.0),
    Some(10.0),
    Some(6.0),
    Some(2.0),
    Some(1.0),
];
pub const SMALL_ENSEMBLE: usize = 5;
pub const COHERENT_HORIZON: f64 = 6000.0;
pub const COHERENT_SAMPLES: usize = 6001;
/// Minimum prominence for a local maximum to count as a revival.
pub const REVIVAL_PROMINENCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    Fig2,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig3d,
    Fig3e,
    Fig3f,
    Fig4a,
    Fig4b,
    Fig4c,
}

impl FigureId {
    pub const ALL: [FigureId; 10] = [
        FigureId::Fig2,
        FigureId::Fig3a,
        FigureId::Fig3b,
        FigureId::Fig3c,
        FigureId::Fig3d,
        FigureId::Fig3e,
        FigureId::Fig3f,
        FigureId::Fig4a,
        FigureId::Fig4b,
        FigureId::Fig4c,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3a => "fig3a",
            FigureId::Fig3b => "fig3b",
            FigureId::Fig3c => "fig3c",
            FigureId::Fig3d => "fig3d",
            FigureId::Fig3e => "fig3e",
            FigureId::Fig3f => "fig3f",
            FigureId::Fig4a => "fig4a",
            FigureId::Fig4b => "fig4b",
            FigureId::Fig4c => "fig4c",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = FigureId::ALL.iter().map(|i| i.name()).collect();
                format!("unknown figure `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub std: Option<Vec<f64>>,
}

impl Curve {
    fn mean_of(label: impl Into<String>, times: &[f64], stats: &tlschain::SeriesStats<f64>) -> Self {
        Self {
            label: label.into(),
            times: times.to_vec(),
            values: stats.mean.clone(),
            std: Some(stats.std.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub id: FigureId,
    pub seed: u64,
    pub curves: Vec<Curve>,
    pub fits: Vec<(String, FitF64)>,
    pub scans: Vec<(String, ScanSeries)>,
    pub summary: Vec<(String, f64)>,
    /// Ensembles behind the curves, with the configs that produced them.
    pub runs: Vec<(RunConfig, EnsembleF64)>,
}

impl Figure {
    fn new(id: FigureId, seed: u64) -> Self {
        Self {
            id,
            seed,
            curves: Vec::new(),
            fits: Vec::new(),
            scans: Vec::new(),
            summary: Vec::new(),
            runs: Vec::new(),
        }
    }

    pub fn curve(&self, label: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.label == label)
    }

    pub fn fit(&self, label: &str) -> Option<&FitF64> {
        self.fits.iter().find(|(l, _)| l == label).map(|(_, f)| f)
    }

    pub fn scan(&self, label: &str) -> Option<&ScanSeries> {
        self.scans.iter().find(|(l, _)| l == label).map(|(_, s)| s)
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn report(&self) -> String {
        let mut r = String::new();
        let _ = writeln!(r, "figure={}", self.id);
        let _ = writeln!(r, "seed={}", self.seed);
        for (label, f) in &self.fits {
            let _ = writeln!(
                r,
                "fit[{label}]=A {} T {} +/- {} C {}",
                f.amplitude, f.time_constant, f.sigma_time_constant, f.offset
            );
        }
        for (label, s) in &self.scans {
            r.push_str(&scaling_report(s, label));
        }
        for (k, v) in &self.summary {
            let _ = writeln!(r, "{k}={v}");
        }
        r
    }
}

/// Time of the first local maximum of prominence at least
/// [`REVIVAL_PROMINENCE`].
pub fn first_revival(times: &[f64], values: &[f64]) -> Option<f64> {
    prominent_maxima(values, REVIVAL_PROMINENCE)
        .first()
        .map(|&i| times[i])
}

/// The default run with the given seed.
pub fn base_config(seed: u64) -> RunConfig {
    RunConfig {
        master_seed: seed,
        ..RunConfig::default()
    }
}

fn coherent_curve(l: usize, upsilon_sites: u32, label: &str) -> Result<Curve> {
    let params = ModelParamsF64::reference(l);
    let init = InitialState {
        qubit: QubitState::One,
        tau_sites: 0,
        upsilon_sites,
    };
    let tr = run_coherent(&params, &init, COHERENT_HORIZON, COHERENT_SAMPLES)?;
    Ok(Curve {
        label: label.into(),
        times: tr.times,
        values: tr.n_q,
        std: None,
    })
}

fn fig2(seed: u64) -> Result<Figure> {
    let mut fig = Figure::new(FigureId::Fig2, seed);
    for (l, ups, label) in [
        (6, 0b00, "L6_ups0"),
        (7, 0b00, "L7_ups0"),
        (7, 0b01, "L7_ups1"),
        (7, 0b11, "L7_ups2"),
    ] {
        let c = coherent_curve(l, ups, label)?;
        let min = c.values.iter().copied().fold(f64::INFINITY, f64::min);
        fig.summary.push((format!("{label}_min_n_q"), min));
        if let Some(t) = first_revival(&c.times, &c.values) {
            fig.summary.push((format!("{label}_revival_period"), t));
        }
        fig.curves.push(c);
    }
    Ok(fig)
}

/// Simulates, fits the requested observables and records the curves.
fn ensemble_figure(fig: &mut Figure, config: RunConfig, label: &str, fit_n_q: bool, fit_coherence: bool) -> Result<()> {
    let e = simulate(&config)?;
    fig.curves.push(Curve::mean_of(format!("{label}_n_q"), &e.times, &e.n_q));
    if fit_n_q {
        let f = fit_curve(&e.times, &e.n_q.mean, &format!("{label} n_q"))?;
        fig.fits.push((format!("{label}_T1"), f));
    }
    if let Some(c) = &e.coherence {
        fig.curves.push(Curve::mean_of(format!("{label}_coherence"), &e.times, c));
        if fit_coherence {
            let f = fit_curve(&e.times, &c.mean, &format!("{label} coherence"))?;
            fig.fits.push((format!("{label}_T2"), f));
        }
    }
    fig.summary.push((format!("{label}_tail_mean_n_q"), tail_mean(&e.n_q.mean, 0.2)));
    fig.runs.push((config, e));
    Ok(())
}

fn named(seed: u64, name: &str) -> RunConfig {
    RunConfig {
        run_name: name.into(),
        ..base_config(seed)
    }
}

fn fig3a(seed: u64) -> Result<Figure> {
    let mut fig = Figure::new(FigureId::Fig3a, seed);
    ensemble_figure(&mut fig, named(seed, "fig3a"), "fig3a", true, false)?;
    Ok(fig)
}

fn fig3b(seed: u64) -> Result<Figure> {
    let mut fig = Figure::new(FigureId::Fig3b, seed);
    let config = RunConfig {
        qubit_state: QubitState::Plus,
        ..named(seed, "fig3b")
    };
    ensemble_figure(&mut fig, config, "fig3b", true, true)?;
    Ok(fig)
}

fn fig3c(seed: u64) -> Result<Figure> {
    let mut fig = Figure::new(FigureId::Fig3c, seed);
    let config = RunConfig {
        J_q_tau: 0.1,
        ..named(seed, "fig3c")
    };
    ensemble_figure(&mut fig, config, "fig3c", true, false)?;
    let c = &fig.curves[0];
    let t1 = fig.fits[0].1.time_constant;
    let early = c.times.iter().take_while(|&&t| t <= HORIZON_FACTOR * t1).count();
    let maxima = prominent_maxima(&c.values[..early], 0.02).len();
    fig.summary.push(("maxima_before_settling".into(), maxima as f64));
    Ok(fig)
}

fn scan_into(fig: &mut Figure, base: RunConfig, couplings: &[f64], log: &dyn Fn(&str)) -> Result<()> {
    let name = base.run_name.clone();
    let outcome = scan(&base, couplings, log)?;
    for (j, e) in outcome.ensembles {
        fig.curves.push(Curve::mean_of(format!("{name}_J{j}_n_q"), &e.times, &e.n_q));
        if let Some(c) = &e.coherence {
            fig.curves.push(Curve::mean_of(format!("{name}_J{j}_coherence"), &e.times, c));
        }
        fig.runs.push((
            RunConfig {
                run_name: format!("{name}_J{j}"),
                ..crate::scan::config_at(&base, j)
            },
            e,
        ));
    }
    fig.scans.push((format!("{name}_T1"), outcome.t1));
    if let Some(t2) = outcome.t2 {
        fig.scans.push((format!("{name}_T2"), t2));
    }
    Ok(())
}

fn fig3_scans(id: FigureId, seed: u64, log: &dyn Fn(&str)) -> Result<Figure> {
    let mut fig = Figure::new(id, seed);
    if matches!(id, FigureId::Fig3d | FigureId::Fig3f) {
        scan_into(&mut fig, named(seed, "T1scan"), &SCAN_COUPLINGS, log)?;
    }
    if matches!(id, FigureId::Fig3e | FigureId::Fig3f) {
        let base = RunConfig {
            qubit_state: QubitState::Plus,
            ..named(seed, "T2scan")
        };
        scan_into(&mut fig, base, &SCAN_COUPLINGS, log)?;
    }
    if id == FigureId::Fig3f {
        let t1 = fig.scan("T1scan_T1").and_then(|s| s.at(0.01)).map(|f| f.time_constant);
        let t2 = fig.scan("T2scan_T2").and_then(|s| s.at(0.01)).map(|f| f.time_constant);
        if let (Some(t1), Some(t2)) = (t1, t2) {
            fig.summary.push(("T2_over_T1_at_0.01".into(), t2 / t1));
        }
    }
    Ok(fig)
}

fn fig4a(seed: u64, log: &dyn Fn(&str)) -> Result<Figure> {
    let mut fig = Figure::new(FigureId::Fig4a, seed);
    for j in INTERNAL_COUPLINGS {
        log(&format!("J_tau = J_upsilon = {j}"));
        let label = format!("fig4a_J{j}");
        let config = RunConfig {
            J_tau: j,
            J_upsilon: j,
            n_trajectories: SMALL_ENSEMBLE,
            ..named(seed, &label)
        };
        ensemble_figure(&mut fig, config, &label, true, false)?;
    }
    Ok(fig)
}

fn fig4b(seed: u64, log: &dyn Fn(&str)) -> Result<Figure> {
    let mut fig = Figure::new(FigureId::Fig4b, seed);
    let horizon = HORIZON_FACTOR * REFERENCE_T1;
    for t_h in HOLD_TIMES {
        match t_h {
            None => {
                log("t_H = inf");
                let params = base_config(seed).model_params();
                let init = base_config(seed).initial_state()?;
                let tr = run_coherent(&params, &init, horizon, 5001)?;
                if let Some(t) = first_revival(&tr.times, &tr.n_q) {
                    fig.summary.push(("fig4b_tHinf_revival_period".into(), t));
                }
                fig.curves.push(Curve {
                    label: "fig4b_tHinf_n_q".into(),
                    times: tr.times,
                    values: tr.n_q,
                    std: None,
                });
            }
            Some(t_h) => {
                log(&format!("t_H = {t_h}"));
                let label = format!("fig4b_tH{t_h}");
                let mut config = RunConfig {
                    t_H: t_h,
                    n_trajectories: SMALL_ENSEMBLE,
                    ..named(seed, &label)
                };
                let cycle = config.schedule()?.cycle_duration();
                config.n_cycles = Some((horizon / cycle).ceil() as usize);
                ensemble_figure(&mut fig, config, &label, false, false)?;
                let c = fig.curves.last().expect("just pushed");
                // slow erasure leaves a curve that is not a single exponential
                if let Ok(f) = fit_curve(&c.times, &c.values, &label) {
                    fig.fits.push((format!("{label}_T1"), f));
                }
            }
        }
    }
    Ok(fig)
}

fn fig4c(seed: u64, log: &dyn Fn(&str)) -> Result<Figure> {
    let mut fig = Figure::new(FigureId::Fig4c, seed);
    let base = RunConfig {
        upsilon_sites: vec![0],
        n_trajectories: SMALL_ENSEMBLE,
        ..named(seed, "single_ups")
    };
    scan_into(&mut fig, base, &SCAN_COUPLINGS, log)?;
    Ok(fig)
}

/// Runs the figure's parameter set. Output depends only on `(id, seed)`.
pub fn reproduce(id: FigureId, seed: u64, log: &dyn Fn(&str)) -> Result<Figure> {
    match id {
        FigureId::Fig2 => fig2(seed),
        FigureId::Fig3a => fig3a(seed),
        FigureId::Fig3b => fig3b(seed),
        FigureId::Fig3c => fig3c(seed),
        FigureId::Fig3d | FigureId::Fig3e | FigureId::Fig3f => fig3_scans(id, seed, log),
        FigureId::Fig4a => fig4a(seed, log),
        FigureId::Fig4b => fig4b(seed, log),
        FigureId::Fig4c => fig4c(seed, log),
    }
}

/// Writes ensemble CSVs, a CSV per erasure-free curve, the scan tables,
/// `<id>_summary.txt`, and optionally `<id>.svg`.
pub fn write_figure(fig: &Figure, dir: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for (config, e) in &fig.runs {
        files.extend(write_ensemble(config, e, dir)?);
    }
    for c in fig.curves.iter().filter(|c| c.std.is_none()) {
        files.push(write_csv(&dir.join(format!("{}.csv", c.label)), &["t", "n_q"], &[&c.times, &c.values])?);
    }
    for (label, s) in &fig.scans {
        let sig: Vec<f64> = s.fits.iter().map(|f| f.sigma_time_constant).collect();
        files.push(write_csv(
            &dir.join(format!("{label}.csv")),
            &["J", "T", "sigma_T"],
            &[&s.couplings, &s.times(), &sig],
        )?);
    }
    files.push(write_text(&dir.join(format!("{}_summary.txt", fig.id)), &fig.report())?);
    if plot {
        let svg = render_svg(fig.id.name(), &fig.curves);
        files.push(write_text(&dir.join(format!("{}.svg", fig.id)), &svg)?);
    }
    Ok(files)
}

pub fn cmd_reproduce(id: FigureId, seed: u64, dir: &Path, plot: bool, log: &dyn Fn(&str)) -> Result<Figure> {
    let fig = reproduce(id, seed, log)?;
    write_figure(&fig, dir, plot)?;
    Ok(fig)
}
