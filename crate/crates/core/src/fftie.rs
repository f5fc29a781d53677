//! Full forward-time information erasure (FFTIE) sequence.
//!
//! One cycle is `U = e^{-iH t_H}` followed by `O = e^{-iH_random t_random}`
//! with a fresh disorder draw for every `O`. No time-reversed segments are
//! applied. Observables are recorded after the erasure segment of every
//! `record_stride`-th cycle, plus once at `t = 0`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{self, SeriesStats};
use crate::basis::{Configuration, ModeLayout, Mode, SectorBasis, SectorSum};
use crate::error::{Error, Result};
use crate::model::{
    build_hamiltonian, build_number_operator, build_qubit_lowering, disorder_diagonal_into,
    draw_site_disorder, DiagonalOperator, ModelParams, SectorCouplingOperator,
};
use crate::propagation::{decompose, Propagator, SpectralDecomposition, StateVector};
use crate::scalar::Real;

/// Whether the reported clock includes the erasure segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeAxis {
    /// Each cycle advances the clock by `t_H + t_random`.
    #[default]
    IncludeErasure,
    /// Each cycle advances the clock by `t_H` only.
    ExcludeErasure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FftieSchedule<T> {
    pub t_h: T,
    pub t_random: T,
    pub disorder_lo: T,
    pub disorder_hi: T,
    pub n_cycles: usize,
    pub record_stride: usize,
    pub time_axis: TimeAxis,
    /// Pure evolution under `H`; no erasure segments are applied.
    pub coherent_only: bool,
}

impl<T: Real> FftieSchedule<T> {
    /// `t_H = 2`, `t_random = 0.5`, disorder `Uniform[0, 3]`.
    pub fn reference(n_cycles: usize, record_stride: usize) -> Self {
        Self {
            t_h: T::lit(2.0),
            t_random: T::lit(0.5),
            disorder_lo: T::zero(),
            disorder_hi: T::lit(3.0),
            n_cycles,
            record_stride,
            time_axis: TimeAxis::IncludeErasure,
            coherent_only: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_h >= T::zero()) || !self.t_h.is_finite() {
            return Err(Error::param("t_H", "must be finite and non-negative"));
        }
        if !(self.t_random >= T::zero()) || !self.t_random.is_finite() {
            return Err(Error::param("t_random", "must be finite and non-negative"));
        }
        if !(self.disorder_lo <= self.disorder_hi)
            || !self.disorder_lo.is_finite()
            || !self.disorder_hi.is_finite()
        {
            return Err(Error::param("disorder_range", "need finite lo <= hi"));
        }
        if self.n_cycles == 0 {
            return Err(Error::param("n_cycles", "must be at least 1"));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride", "must be at least 1"));
        }
        if self.record_stride > self.n_cycles {
            return Err(Error::param(
                "record_stride",
                format!("{} exceeds n_cycles {}", self.record_stride, self.n_cycles),
            ));
        }
        if self.cycle_duration() <= T::zero() {
            return Err(Error::param("t_H", "cycle must advance the clock"));
        }
        Ok(())
    }

    /// Clock advance per cycle under the configured time axis.
    pub fn cycle_duration(&self) -> T {
        match (self.time_axis, self.coherent_only) {
            (TimeAxis::IncludeErasure, false) => self.t_h + self.t_random,
            _ => self.t_h,
        }
    }

    /// Number of cycles needed to reach `horizon` on the configured clock.
    pub fn cycles_for_horizon(&self, horizon: T) -> usize {
        (horizon / self.cycle_duration())
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitState {
    Zero,
    One,
    /// `(|0> + |1>)/√2`.
    Plus,
}

/// Product initial state `|qubit> ⊗ |τ sites> ⊗ |υ sites>`; bit `i` of a
/// site mask is chain site `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitialState {
    pub qubit: QubitState,
    pub tau_sites: u32,
    pub upsilon_sites: u32,
}

impl InitialState {
    /// `|1>_q |0>_τ |2>_υ` with the υ pair on sites 0 and 1.
    pub const fn reference() -> Self {
        Self {
            qubit: QubitState::One,
            tau_sites: 0,
            upsilon_sites: 0b11,
        }
    }

    fn sectors(&self, layout: ModeLayout) -> Result<Vec<(SectorBasis, Vec<(Configuration, f64)>)>> {
        let l = layout.chain_length();
        if (self.tau_sites >> l) != 0 || (self.upsilon_sites >> l) != 0 {
            return Err(Error::param(
                "initial state",
                format!("site mask exceeds chain length {l}"),
            ));
        }
        let nt = self.tau_sites.count_ones() as usize;
        let nu = self.upsilon_sites.count_ones() as usize;
        let ket = |q| Configuration::from_sites(q, self.tau_sites, self.upsilon_sites);
        Ok(match self.qubit {
            QubitState::Zero => vec![(SectorBasis::enumerate(layout, nt, nu)?, vec![(ket(false), 1.0)])],
            QubitState::One => {
                vec![(SectorBasis::enumerate(layout, nt + 1, nu)?, vec![(ket(true), 1.0)])]
            }
            QubitState::Plus => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                vec![
                    (SectorBasis::enumerate(layout, nt, nu)?, vec![(ket(false), a)]),
                    (SectorBasis::enumerate(layout, nt + 1, nu)?, vec![(ket(true), a)]),
                ]
            }
        })
    }
}

/// One stochastic realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub seed: u64,
    pub times: Vec<T>,
    pub n_q: Vec<T>,
    /// Present for superposition initial states only.
    pub coherence: Option<Vec<T>>,
    pub final_norm: T,
    /// Norm of each sector block at the end of the run.
    pub final_block_norms: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<T> {
    pub master_seed: u64,
    pub trajectories: Vec<Trajectory<T>>,
    pub times: Vec<T>,
    pub n_q: SeriesStats<T>,
    pub coherence: Option<SeriesStats<T>>,
}

struct Block<T> {
    basis: SectorBasis,
    spectrum: SpectralDecomposition<T>,
    propagator: Propagator<T>,
    n_q: DiagonalOperator<T>,
    initial: Vec<Complex<T>>,
}

/// Everything about a run that does not depend on the random stream.
/// Immutable and shareable between trajectory workers.
pub struct FftieSystem<T> {
    layout: ModeLayout,
    schedule: FftieSchedule<T>,
    blocks: Vec<Block<T>>,
    /// `c_q` from block 1 to block 0, for superposition runs.
    lowering: Option<SectorCouplingOperator>,
}

impl<T: Real> FftieSystem<T> {
    pub fn prepare(
        params: &ModelParams<T>,
        init: &InitialState,
        schedule: &FftieSchedule<T>,
    ) -> Result<Self> {
        schedule.validate()?;
        let layout = ModeLayout::new(params.chain_length())?;
        params.validate(&layout)?;
        let sectors = init.sectors(layout)?;
        let lowering = if sectors.len() == 2 {
            Some(build_qubit_lowering(&sectors[1].0, &sectors[0].0)?)
        } else {
            None
        };
        let blocks = sectors
            .into_iter()
            .map(|(basis, kets)| {
                let h = build_hamiltonian(params, &basis)?;
                let spectrum = decompose(&h)?;
                let propagator = Propagator::new(&spectrum, schedule.t_h);
                let n_q = build_number_operator(&basis, Mode::Qubit)?;
                let mut initial = vec![Complex::new(T::zero(), T::zero()); basis.len()];
                for (cfg, amp) in kets {
                    initial[basis.index_of(&cfg)?] = Complex::new(T::lit(amp), T::zero());
                }
                Ok(Block {
                    basis,
                    spectrum,
                    propagator,
                    n_q,
                    initial,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layout,
            schedule: schedule.clone(),
            blocks,
            lowering,
        })
    }

    pub fn schedule(&self) -> &FftieSchedule<T> {
        &self.schedule
    }

    pub fn sector_sum(&self) -> SectorSum {
        SectorSum::new(self.blocks.iter().map(|b| b.basis.clone()).collect())
            .expect("blocks are distinct sectors")
    }

    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.basis.len()).sum()
    }

    pub fn spectrum(&self, block: usize) -> &SpectralDecomposition<T> {
        &self.blocks[block].spectrum
    }

    fn observe(&self, state: &[(Vec<T>, Vec<T>)]) -> (T, Option<T>) {
        let n_q = self
            .blocks
            .iter()
            .zip(state)
            .fold(T::zero(), |s, (b, (re, im))| {
                s + b
                    .n_q
                    .values
                    .iter()
                    .zip(re.iter().zip(im))
                    .fold(T::zero(), |s, (&d, (&r, &i))| s + d * (r * r + i * i))
            });
        let coherence = self.lowering.as_ref().map(|c| {
            let (r0, i0) = &state[0];
            let (r1, i1) = &state[1];
            // <ψ0| c_q |ψ1>
            let mut acc = Complex::new(T::zero(), T::zero());
            for col in 0..c.cols() {
                if let Some(row) = c.target(col) {
                    acc += Complex::new(r0[row], -i0[row]) * Complex::new(r1[col], i1[col]);
                }
            }
            T::lit(2.0) * acc.norm()
        });
        (n_q.min(T::one()).max(T::zero()), coherence.map(|c| c.min(T::one())))
    }

    /// Runs one trajectory with its own random stream.
    pub fn run(&self, seed: u64) -> Result<Trajectory<T>> {
        let sched = &self.schedule;
        let n_records = sched.n_cycles / sched.record_stride + 1;
        let mut times = Vec::with_capacity(n_records);
        let mut n_q = Vec::with_capacity(n_records);
        let mut coherence = self.lowering.as_ref().map(|_| Vec::with_capacity(n_records));
        let state = self.simulate(seed, |t, state| {
            let (nq, coh) = self.observe(state);
            times.push(t);
            n_q.push(nq);
            if let (Some(series), Some(c)) = (coherence.as_mut(), coh) {
                series.push(c);
            }
        })?;

        let final_block_norms: Vec<T> = state
            .iter()
            .map(|(re, im)| {
                re.iter()
                    .zip(im)
                    .fold(T::zero(), |s, (&r, &i)| s + r * r + i * i)
                    .sqrt()
            })
            .collect();
        let final_norm = final_block_norms
            .iter()
            .fold(T::zero(), |s, &n| s + n * n)
            .sqrt();
        Ok(Trajectory {
            seed,
            times,
            n_q,
            coherence,
            final_norm,
            final_block_norms,
        })
    }

    /// Full state after the whole schedule, blocks concatenated in
    /// [`FftieSystem::sector_sum`] order, time stamp on the schedule's clock.
    pub fn final_state(&self, seed: u64) -> Result<StateVector<T>> {
        let state = self.simulate(seed, |_, _| {})?;
        let amplitudes = state
            .iter()
            .flat_map(|(re, im)| re.iter().zip(im).map(|(&r, &i)| Complex::new(r, i)))
            .collect();
        Ok(StateVector {
            amplitudes,
            time: T::from_count(self.schedule.n_cycles) * self.schedule.cycle_duration(),
        })
    }

    /// Core loop. `record` is called at `t = 0` and after every
    /// `record_stride`-th cycle with the split (re, im) state per block.
    fn simulate<F>(&self, seed: u64, mut record: F) -> Result<Vec<(Vec<T>, Vec<T>)>>
    where
        F: FnMut(T, &[(Vec<T>, Vec<T>)]),
    {
        let sched = &self.schedule;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state: Vec<(Vec<T>, Vec<T>)> = self
            .blocks
            .iter()
            .map(|b| {
                (
                    b.initial.iter().map(|a| a.re).collect(),
                    b.initial.iter().map(|a| a.im).collect(),
                )
            })
            .collect();
        let mut scratch: Vec<(Vec<T>, Vec<T>)> = state.clone();
        let mut disorder: Vec<DiagonalOperator<T>> = self
            .blocks
            .iter()
            .map(|b| DiagonalOperator::zeros(b.basis.len()))
            .collect();

        record(T::zero(), &state);

        let dt = sched.cycle_duration();
        let erase = !sched.coherent_only;
        for cycle in 1..=sched.n_cycles {
            for ((block, (re, im)), (sr, si)) in
                self.blocks.iter().zip(state.iter_mut()).zip(scratch.iter_mut())
            {
                block.propagator.apply_split(re, im, sr, si);
                std::mem::swap(re, sr);
                std::mem::swap(im, si);
            }
            if erase {
                // one draw per site, shared by every block
                let u = draw_site_disorder(
                    self.layout.chain_length(),
                    sched.disorder_lo,
                    sched.disorder_hi,
                    &mut rng,
                )?;
                for ((block, d), (re, im)) in
                    self.blocks.iter().zip(disorder.iter_mut()).zip(state.iter_mut())
                {
                    disorder_diagonal_into(&block.basis, &u, d)?;
                    for ((r, i), &dk) in re.iter_mut().zip(im.iter_mut()).zip(&d.values) {
                        let (s, c) = (dk * sched.t_random).sin_cos();
                        let (a, b) = (*r, *i);
                        *r = a * c + b * s;
                        *i = b * c - a * s;
                    }
                }
            }
            if cycle % sched.record_stride == 0 {
                // cycle count times duration, not a running sum, so the clock
                // does not drift over long runs
                record(T::from_count(cycle) * dt, &state);
            }
        }
        Ok(state)
    }

    /// Pure evolution under `H`, sampled at `n_samples` uniformly spaced
    /// times in `[0, t_max]`. Each sample is evaluated exactly from the
    /// spectral decomposition, so accuracy does not degrade with time.
    pub fn run_coherent(&self, t_max: T, n_samples: usize) -> Result<Trajectory<T>> {
        if !(t_max > T::zero()) || !t_max.is_finite() {
            return Err(Error::param("t_max", "must be finite and positive"));
        }
        if n_samples < 2 {
            return Err(Error::param("n_samples", "need at least 2 samples"));
        }
        let coeffs = self
            .blocks
            .iter()
            .map(|b| {
                let mut c = vec![Complex::new(T::zero(), T::zero()); b.basis.len()];
                b.spectrum.to_eigenbasis(&b.initial, &mut c)?;
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        let step = t_max / T::from_count(n_samples - 1);
        let mut times = Vec::with_capacity(n_samples);
        let mut n_q = Vec::with_capacity(n_samples);
        let mut coherence = self.lowering.as_ref().map(|_| Vec::with_capacity(n_samples));
        let mut state: Vec<(Vec<T>, Vec<T>)> = Vec::new();
        let mut work: Vec<Vec<Complex<T>>> = coeffs.clone();
        let mut psi: Vec<Vec<Complex<T>>> = coeffs.clone();
        for s in 0..n_samples {
            let t = T::from_count(s) * step;
            state.clear();
            for (((b, c), w), p) in self
                .blocks
                .iter()
                .zip(&coeffs)
                .zip(work.iter_mut())
                .zip(psi.iter_mut())
            {
                for ((wk, ck), &lam) in w.iter_mut().zip(c).zip(b.spectrum.eigenvalues()) {
                    let (sn, cs) = (lam * t).sin_cos();
                    *wk = *ck * Complex::new(cs, -sn);
                }
                b.spectrum.from_eigenbasis(w, p)?;
                state.push((p.iter().map(|a| a.re).collect(), p.iter().map(|a| a.im).collect()));
            }
            let (nq, coh) = self.observe(&state);
            times.push(t);
            n_q.push(nq);
            if let (Some(series), Some(c)) = (coherence.as_mut(), coh) {
                series.push(c);
            }
        }
        let final_block_norms: Vec<T> = psi
            .iter()
            .map(|p| p.iter().fold(T::zero(), |s, a| s + a.norm_sqr()).sqrt())
            .collect();
        let final_norm = final_block_norms
            .iter()
            .fold(T::zero(), |s, &n| s + n * n)
            .sqrt();
        Ok(Trajectory {
            seed: 0,
            times,
            n_q,
            coherence,
            final_norm,
            final_block_norms,
        })
    }

    /// Runs `n_traj` trajectories on the current rayon pool. Output does not
    /// depend on the number of worker threads.
    pub fn run_ensemble(&self, n_traj: usize, master_seed: u64) -> Result<Ensemble<T>> {
        if n_traj == 0 {
            return Err(Error::param("n_trajectories", "must be at least 1"));
        }
        let trajectories = (0..n_traj)
            .into_par_iter()
            .map(|k| self.run(child_seed(master_seed, k as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ensemble::from_trajectories(master_seed, trajectories)
    }
}

impl<T: Real> Ensemble<T> {
    pub fn from_trajectories(master_seed: u64, trajectories: Vec<Trajectory<T>>) -> Result<Self> {
        let (n_q, coherence) = analysis::ensemble_statistics(&trajectories)?;
        let times = trajectories[0].times.clone();
        Ok(Self {
            master_seed,
            trajectories,
            times,
            n_q,
            coherence,
        })
    }
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `k` in an ensemble: `splitmix64(master ^ splitmix64(k))`.
pub fn child_seed(master_seed: u64, k: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(k))
}

pub fn run_trajectory<T: Real>(
    params: &ModelParams<T>,
    init: &InitialState,
    schedule: &FftieSchedule<T>,
    seed: u64,
) -> Result<Trajectory<T>> {
    FftieSystem::prepare(params, init, schedule)?.run(seed)
}

pub fn run_ensemble<T: Real>(
    params: &ModelParams<T>,
    init: &InitialState,
    schedule: &FftieSchedule<T>,
    n_traj: usize,
    master_seed: u64,
) -> Result<Ensemble<T>> {
    FftieSystem::prepare(params, init, schedule)?.run_ensemble(n_traj, master_seed)
}

pub fn run_coherent<T: Real>(
    params: &ModelParams<T>,
    init: &InitialState,
    t_max: T,
    n_samples: usize,
) -> Result<Trajectory<T>> {
    // t_H only fixes the unused propagator step here.
    let mut sched = FftieSchedule::reference(1, 1);
    sched.coherent_only = true;
    sched.t_h = T::one();
    FftieSystem::prepare(params, init, &sched)?.run_coherent(t_max, n_samples)
}
