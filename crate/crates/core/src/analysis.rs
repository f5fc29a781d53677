//! Observables, ensemble statistics and decay-curve fitting.

use num_complex::Complex;

use crate::basis::SectorSum;
use crate::error::{Error, Result};
use crate::fftie::Trajectory;
use crate::model::{check_dim, DiagonalOperator, SectorCouplingOperator};
use crate::propagation::StateVector;
use crate::scalar::Real;

/// `Σ_k |ψ_k|² D_k` for a diagonal occupation operator.
pub fn expect_nq<T: Real>(psi: &[Complex<T>], n_q: &DiagonalOperator<T>) -> Result<T> {
    check_dim(n_q.dim(), psi.len())?;
    Ok(psi
        .iter()
        .zip(&n_q.values)
        .fold(T::zero(), |s, (a, &d)| s + a.norm_sqr() * d))
}

/// `⟨σ_x⟩ + i⟨σ_y⟩ = 2⟨ψ0| c_q |ψ1⟩` for the two blocks of a superposition.
pub fn transverse_expectation<T: Real>(
    psi0: &[Complex<T>],
    psi1: &[Complex<T>],
    c_q: &SectorCouplingOperator,
) -> Result<Complex<T>> {
    Ok(c_q.matrix_element(psi0, psi1)? * T::lit(2.0))
}

/// Qubit coherence `√(⟨σ_x⟩² + ⟨σ_y⟩²)` of a state spanning two sectors
/// that differ by one τ carrier. Block order in `sectors` is irrelevant.
pub fn coherence<T: Real>(
    sectors: &SectorSum,
    psi: &StateVector<T>,
    c_q: &SectorCouplingOperator,
) -> Result<T> {
    check_dim(sectors.dimension(), psi.dim())?;
    let blocks = sectors.blocks();
    if blocks.len() != 2 {
        return Err(Error::IncompatibleSectors(format!(
            "coherence needs two sector blocks, got {}",
            blocks.len()
        )));
    }
    let (lo, hi) = if blocks[0].0.n_tau() + 1 == blocks[1].0.n_tau() {
        (0, 1)
    } else if blocks[1].0.n_tau() + 1 == blocks[0].0.n_tau() {
        (1, 0)
    } else {
        return Err(Error::IncompatibleSectors(
            "blocks must differ by one tau carrier".into(),
        ));
    };
    let a = &psi.amplitudes[sectors.block_range(lo)];
    let b = &psi.amplitudes[sectors.block_range(hi)];
    Ok(transverse_expectation(a, b, c_q)?.norm())
}

/// Pointwise sample mean and standard deviation (`n - 1` denominator).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

pub fn series_statistics<T: Real>(series: &[&[T]]) -> Result<SeriesStats<T>> {
    let first = series
        .first()
        .ok_or_else(|| Error::InsufficientData("no series".into()))?;
    let len = first.len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(Error::Ragged(format!(
            "series lengths {} and {} differ",
            len,
            bad.len()
        )));
    }
    let n = T::from_count(series.len());
    let mut mean = vec![T::zero(); len];
    let mut std = vec![T::zero(); len];
    for i in 0..len {
        let m = series.iter().fold(T::zero(), |s, x| s + x[i]) / n;
        mean[i] = m;
        if series.len() > 1 {
            let ss = series.iter().fold(T::zero(), |s, x| s + (x[i] - m).powi(2));
            std[i] = (ss / (n - T::one())).sqrt();
        }
    }
    Ok(SeriesStats { mean, std })
}

/// Statistics of `n_q` (and coherence when every trajectory has it).
/// Trajectories must share identical timestamps.
pub fn ensemble_statistics<T: Real>(
    trajectories: &[Trajectory<T>],
) -> Result<(SeriesStats<T>, Option<SeriesStats<T>>)> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::InsufficientData("empty ensemble".into()))?;
    if trajectories.iter().any(|t| t.times != first.times) {
        return Err(Error::Ragged("trajectory timestamps differ".into()));
    }
    let n_q: Vec<&[T]> = trajectories.iter().map(|t| t.n_q.as_slice()).collect();
    let n_q = series_statistics(&n_q)?;
    let coherence = if trajectories.iter().all(|t| t.coherence.is_some()) {
        let c: Vec<&[T]> = trajectories
            .iter()
            .filter_map(|t| t.coherence.as_deref())
            .collect();
        Some(series_statistics(&c)?)
    } else if trajectories.iter().any(|t| t.coherence.is_some()) {
        return Err(Error::Ragged("coherence present on some trajectories only".into()));
    } else {
        None
    };
    Ok((n_q, coherence))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetMode<T> {
    Free,
    Fixed(T),
}

/// Least-squares fit of `A e^{-t/T} + C`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub amplitude: T,
    pub time_constant: T,
    pub offset: T,
    pub sigma_amplitude: T,
    pub sigma_time_constant: T,
    /// Zero when the offset was held fixed.
    pub sigma_offset: T,
    /// `√RSS` at the optimum.
    pub residual_norm: T,
    pub converged: bool,
    pub iterations: usize,
    pub points: usize,
    /// Why the fit is flagged, when `converged` is false.
    pub diagnostic: Option<String>,
}

const MIN_FIT_POINTS: usize = 10;
const MAX_ITERATIONS: usize = 1000;
const REL_TOL: f64 = 1e-8;

/// Fits `A e^{-t/T} + C` by damped Gauss-Newton (Levenberg-Marquardt).
///
/// The starting point comes from a log-linear regression of `values - C₀`,
/// with `C₀` the mean of the last tenth of the series for a free offset.
/// Uncertainties are the square roots of the diagonal of `s² (JᵀJ)⁻¹`.
pub fn fit_exponential<T: Real>(
    times: &[T],
    values: &[T],
    offset: OffsetMode<T>,
) -> Result<FitResult<T>> {
    fit_exponential_min(times, values, offset, MIN_FIT_POINTS)
}

fn fit_exponential_min<T: Real>(
    times: &[T],
    values: &[T],
    offset: OffsetMode<T>,
    min_points: usize,
) -> Result<FitResult<T>> {
    if times.len() != values.len() {
        return Err(Error::Ragged(format!(
            "{} times vs {} values",
            times.len(),
            values.len()
        )));
    }
    let n = times.len();
    if n < min_points {
        return Err(Error::InsufficientData(format!(
            "{n} points, need at least {min_points}"
        )));
    }
    if times.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData("non-finite input".into()));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(Error::InsufficientData("all values equal".into()));
    }

    let (a0, t0, c0) = initial_guess(times, values, offset);
    let free_offset = matches!(offset, OffsetMode::Free);
    let np = if free_offset { 3 } else { 2 };
    let mut p = [a0, t0, c0];

    let residuals = |p: &[T; 3], r: &mut Vec<T>| -> T {
        r.clear();
        let mut rss = T::zero();
        for (&t, &y) in times.iter().zip(values) {
            let e = y - (p[0] * (-t / p[1]).exp() + p[2]);
            rss += e * e;
            r.push(e);
        }
        rss
    };
    let jacobian = |p: &[T; 3], row: usize| -> [T; 3] {
        let t = times[row];
        let e = (-t / p[1]).exp();
        [e, p[0] * e * t / (p[1] * p[1]), T::one()]
    };
    let normal_equations = |p: &[T; 3], r: &[T]| -> ([[T; 3]; 3], [T; 3]) {
        let mut jtj = [[T::zero(); 3]; 3];
        let mut jtr = [T::zero(); 3];
        for row in 0..n {
            let g = jacobian(p, row);
            for a in 0..np {
                jtr[a] += g[a] * r[row];
                for b in 0..np {
                    jtj[a][b] += g[a] * g[b];
                }
            }
        }
        (jtj, jtr)
    };

    let mut r = Vec::with_capacity(n);
    let mut rss = residuals(&p, &mut r);
    let mut lambda = T::lit(1e-3);
    let tol = T::lit(REL_TOL);
    let mut converged = false;
    let mut iterations = 0;
    let mut trial_r = Vec::with_capacity(n);

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&p, &r);
        let mut accepted = false;
        let mut small_step = false;
        for _ in 0..60 {
            let mut m = jtj;
            for a in 0..np {
                m[a][a] += lambda * jtj[a][a].max(T::min_positive_value());
            }
            let Some(delta) = solve(&m, &jtr, np) else {
                lambda *= T::lit(10.0);
                continue;
            };
            let mut trial = p;
            for a in 0..np {
                trial[a] += delta[a];
            }
            small_step = (0..np).all(|a| delta[a].abs() <= tol * (trial[a].abs() + tol));
            if trial[1] == T::zero() || !trial[1].is_finite() {
                lambda *= T::lit(10.0);
                continue;
            }
            let trial_rss = residuals(&trial, &mut trial_r);
            if trial_rss.is_finite() && trial_rss <= rss {
                p = trial;
                rss = trial_rss;
                std::mem::swap(&mut r, &mut trial_r);
                lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
                accepted = true;
                break;
            }
            if small_step {
                break;
            }
            lambda *= T::lit(10.0);
        }
        if small_step {
            converged = true;
            break;
        }
        if !accepted {
            break;
        }
    }

    let (jtj, _) = normal_equations(&p, &r);
    let dof = T::from_count(n.saturating_sub(np).max(1));
    let s2 = rss / dof;
    let cov = invert(&jtj, np);
    let sigma = |a: usize| -> T {
        cov.as_ref()
            .map(|c| (c[a][a] * s2).max(T::zero()).sqrt())
            .unwrap_or(T::nan())
    };

    let mut diagnostic = None;
    if !converged {
        diagnostic = Some(format!(
            "no convergence after {iterations} iterations (lambda {:e})",
            lambda
        ));
    }
    if !(p[1] > T::zero()) {
        converged = false;
        diagnostic = Some(format!("stationary point with non-positive T = {:e}", p[1]));
    }
    if cov.is_none() {
        converged = false;
        diagnostic = Some("singular normal matrix at optimum".into());
    }

    Ok(FitResult {
        amplitude: p[0],
        time_constant: p[1],
        offset: p[2],
        sigma_amplitude: sigma(0),
        sigma_time_constant: sigma(1),
        sigma_offset: if free_offset { sigma(2) } else { T::zero() },
        residual_norm: rss.sqrt(),
        converged,
        iterations,
        points: n,
        diagnostic,
    })
}

fn initial_guess<T: Real>(times: &[T], values: &[T], offset: OffsetMode<T>) -> (T, T, T) {
    let n = values.len();
    let c0 = match offset {
        OffsetMode::Fixed(c) => c,
        OffsetMode::Free => {
            let tail = (n / 10).max(1);
            values[n - tail..].iter().fold(T::zero(), |s, &v| s + v) / T::from_count(tail)
        }
    };
    let head = (n / 20).max(1);
    let early = values[..head].iter().fold(T::zero(), |s, &v| s + v) / T::from_count(head) - c0;
    let sign = if early < T::zero() { -T::one() } else { T::one() };
    let span = times[n - 1] - times[0];

    let peak = values
        .iter()
        .fold(T::zero(), |m, &v| m.max(sign * (v - c0)));
    let floor = peak * T::lit(0.05);
    let pts: Vec<(T, T)> = times
        .iter()
        .zip(values)
        .filter_map(|(&t, &v)| {
            let y = sign * (v - c0);
            (y > floor && y > T::zero()).then(|| (t, y.ln()))
        })
        .collect();

    let fallback_t = span.abs() / T::lit(3.0);
    if pts.len() >= 2 {
        if let Some((slope, intercept, _, _, _)) = linear_regression(&pts) {
            if slope < T::zero() && slope.is_finite() {
                return (sign * intercept.exp(), -T::one() / slope, c0);
            }
        }
    }
    (sign * peak.max(T::min_positive_value()), fallback_t, c0)
}

/// Fits the upper envelope: the exponential through successive local maxima.
/// Needs at least three maxima.
pub fn fit_envelope<T: Real>(
    times: &[T],
    values: &[T],
    offset: OffsetMode<T>,
) -> Result<FitResult<T>> {
    if times.len() != values.len() {
        return Err(Error::Ragged("times and values differ in length".into()));
    }
    let peaks = local_maxima(values);
    let t: Vec<T> = peaks.iter().map(|&i| times[i]).collect();
    let v: Vec<T> = peaks.iter().map(|&i| values[i]).collect();
    fit_exponential_min(&t, &v, offset, 3)
}

/// Indices of strict interior local maxima (plateaus count once, at their
/// left edge).
pub fn local_maxima<T: Real>(values: &[T]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = values.len();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Local maxima whose topographic prominence is at least `min_prominence`.
pub fn prominent_maxima<T: Real>(values: &[T], min_prominence: T) -> Vec<usize> {
    local_maxima(values)
        .into_iter()
        .filter(|&i| prominence(values, i) >= min_prominence)
        .collect()
}

fn prominence<T: Real>(values: &[T], peak: usize) -> T {
    let h = values[peak];
    let mut left_min = h;
    for &v in values[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &values[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// `(slope, intercept, σ_slope, σ_intercept, rss)` of an OLS line.
fn linear_regression<T: Real>(pts: &[(T, T)]) -> Option<(T, T, T, T, T)> {
    let n = T::from_count(pts.len());
    let mx = pts.iter().fold(T::zero(), |s, p| s + p.0) / n;
    let my = pts.iter().fold(T::zero(), |s, p| s + p.1) / n;
    let sxx = pts.iter().fold(T::zero(), |s, p| s + (p.0 - mx).powi(2));
    let sxy = pts
        .iter()
        .fold(T::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    if sxx <= T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = pts
        .iter()
        .fold(T::zero(), |s, p| s + (p.1 - intercept - slope * p.0).powi(2));
    let s2 = if pts.len() > 2 {
        rss / (n - T::lit(2.0))
    } else {
        T::zero()
    };
    let se_slope = (s2 / sxx).sqrt();
    let se_intercept = (s2 * (T::one() / n + mx * mx / sxx)).sqrt();
    Some((slope, intercept, se_slope, se_intercept, rss))
}

/// `T = prefactor · J^exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult<T> {
    pub exponent: T,
    pub prefactor: T,
    pub sigma_exponent: T,
    pub sigma_prefactor: T,
    /// RSS of the log-log regression.
    pub residual: T,
    pub couplings: Vec<T>,
    pub times: Vec<T>,
}

impl<T: Real> ScalingResult<T> {
    pub fn predict(&self, coupling: T) -> T {
        self.prefactor * coupling.powf(self.exponent)
    }
}

/// Linear regression of `ln T` on `ln J`.
pub fn fit_power_law<T: Real>(couplings: &[T], times: &[T]) -> Result<ScalingResult<T>> {
    if couplings.len() != times.len() {
        return Err(Error::Ragged(format!(
            "{} couplings vs {} times",
            couplings.len(),
            times.len()
        )));
    }
    if couplings.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} points, need at least 3",
            couplings.len()
        )));
    }
    if couplings
        .iter()
        .chain(times)
        .any(|&v| !(v > T::zero()) || !v.is_finite())
    {
        return Err(Error::param("scaling input", "values must be finite and positive"));
    }
    let pts: Vec<(T, T)> = couplings
        .iter()
        .zip(times)
        .map(|(&j, &t)| (j.ln(), t.ln()))
        .collect();
    let (slope, intercept, se_slope, se_intercept, rss) = linear_regression(&pts)
        .ok_or_else(|| Error::InsufficientData("couplings are all equal".into()))?;
    let prefactor = intercept.exp();
    Ok(ScalingResult {
        exponent: slope,
        prefactor,
        sigma_exponent: se_slope,
        sigma_prefactor: prefactor * se_intercept,
        residual: rss,
        couplings: couplings.to_vec(),
        times: times.to_vec(),
    })
}

/// Converts model time (`ħ = 1`, energies in units of `unit_mhz` MHz) to
/// microseconds: `t / (2π · unit_mhz)`.
pub fn natural_time_to_microseconds<T: Real>(t: T, unit_mhz: T) -> Result<T> {
    if !(unit_mhz > T::zero()) || !unit_mhz.is_finite() {
        return Err(Error::param("unit_MHz", "must be finite and positive"));
    }
    Ok(t / (T::TAU() * unit_mhz))
}

/// Restricts a series to `lo <= t <= hi`.
pub fn select_window<T: Real>(times: &[T], values: &[T], lo: T, hi: T) -> (Vec<T>, Vec<T>) {
    times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= lo && t <= hi)
        .map(|(&t, &v)| (t, v))
        .unzip()
}

/// Mean of the values in the last `fraction` of the series.
pub fn tail_mean<T: Real>(values: &[T], fraction: f64) -> T {
    let k = ((values.len() as f64 * fraction).ceil() as usize).clamp(1, values.len().max(1));
    let tail = &values[values.len() - k..];
    tail.iter().fold(T::zero(), |s, &v| s + v) / T::from_count(tail.len())
}

/// Gaussian elimination with partial pivoting on the leading `n × n` block.
fn solve<T: Real>(m: &[[T; 3]; 3], b: &[T; 3], n: usize) -> Option<[T; 3]> {
    let mut a = *m;
    let mut x = *b;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col] == T::zero() || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        x.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = x[col];
            x[row] -= f * v;
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    x.iter().take(n).all(|v| v.is_finite()).then_some(x)
}

fn invert<T: Real>(m: &[[T; 3]; 3], n: usize) -> Option<[[T; 3]; 3]> {
    let mut inv = [[T::zero(); 3]; 3];
    for col in 0..n {
        let mut e = [T::zero(); 3];
        e[col] = T::one();
        let x = solve(m, &e, n)?;
        for row in 0..n {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}
