use std::path::{Path, PathBuf};

use tlschain::{EnsembleF64, FftieSystem};

use crate::config::RunConfig;
use crate::csvio::{write_csv, write_text};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub ensemble: EnsembleF64,
    pub files: Vec<PathBuf>,
}

/// Runs the configured ensemble without touching the file system.
pub fn simulate(config: &RunConfig) -> Result<EnsembleF64> {
    config.validate()?;
    let system = FftieSystem::prepare(
        &config.model_params(),
        &config.initial_state()?,
        &config.schedule()?,
    )?;
    Ok(system.run_ensemble(config.n_trajectories, config.master_seed)?)
}

/// Writes `<run>_traj<k>.csv` per trajectory, `<run>_<observable>.csv` with
/// the ensemble mean and standard deviation, and `<run>_config.txt`.
pub fn write_ensemble(config: &RunConfig, ensemble: &EnsembleF64, dir: &Path) -> Result<Vec<PathBuf>> {
    let name = &config.run_name;
    let mut files = Vec::new();
    for (k, tr) in ensemble.trajectories.iter().enumerate() {
        let path = dir.join(format!("{name}_traj{k:03}.csv"));
        files.push(match &tr.coherence {
            Some(c) => write_csv(&path, &["t", "n_q", "coherence"], &[&tr.times, &tr.n_q, c])?,
            None => write_csv(&path, &["t", "n_q"], &[&tr.times, &tr.n_q])?,
        });
    }
    files.push(write_csv(
        &dir.join(format!("{name}_n_q.csv")),
        &["t", "mean", "std"],
        &[&ensemble.times, &ensemble.n_q.mean, &ensemble.n_q.std],
    )?);
    if let Some(c) = &ensemble.coherence {
        files.push(write_csv(
            &dir.join(format!("{name}_coherence.csv")),
            &["t", "mean", "std"],
            &[&ensemble.times, &c.mean, &c.std],
        )?);
    }
    files.push(write_text(&dir.join(format!("{name}_config.txt")), &config.to_text())?);
    Ok(files)
}

pub fn cmd_run(config: &RunConfig, dir: &Path) -> Result<RunOutput> {
    let ensemble = simulate(config)?;
    let files = write_ensemble(config, &ensemble, dir)?;
    Ok(RunOutput { ensemble, files })
}
