//! Hamiltonian of the qubit + two-species hard-core boson chain, the random
//! υ-frequency generator, and the operators used for observables.
//!
//! ```text
//! H = U_q n_q
//!   + Σ_<i,j> [ J_τ (c†_iτ c_jτ + h.c.) + J_υ (c†_iυ c_jυ + h.c.) ]
//!   + Σ_i [ U_iτ n_iτ + U_iυ n_iυ ] + U_τυ Σ_i n_iτ n_iυ
//!   + J_qτ (c†_q c_0τ + h.c.)
//! H_random = Σ_i u_i n_iυ,   u_i ~ Uniform[lo, hi]
//! ```
//!
//! Bonds are nearest-neighbour on an open chain. All couplings are real, so
//! every operator here is a real symmetric matrix in the occupation basis.

use num_complex::Complex;
use rand::Rng;

use crate::basis::{Configuration, ModeLayout, Mode, SectorBasis};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Couplings and on-site energies, in units where `J_τ = 1` and `ħ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub j_tau: T,
    pub j_upsilon: T,
    /// On-site τ energies, one per chain site.
    pub u_tau_site: Vec<T>,
    /// On-site υ energies, one per chain site.
    pub u_upsilon_site: Vec<T>,
    /// Same-site τ–υ density-density coupling.
    pub u_cross: T,
    pub u_q: T,
    /// Exchange between the qubit and τ site 0.
    pub j_q_tau: T,
}

impl<T: Real> ModelParams<T> {
    /// Reference chain: `J_τ = J_υ = 1`, zero on-site energies,
    /// `U_τυ = -0.2`, `U_q = 0`, `J_qτ = 0.01`.
    pub fn reference(chain_length: usize) -> Self {
        Self {
            j_tau: T::one(),
            j_upsilon: T::one(),
            u_tau_site: vec![T::zero(); chain_length],
            u_upsilon_site: vec![T::zero(); chain_length],
            u_cross: T::lit(-0.2),
            u_q: T::zero(),
            j_q_tau: T::lit(0.01),
        }
    }

    pub fn with_j_q_tau(mut self, j: T) -> Self {
        self.j_q_tau = j;
        self
    }

    pub fn chain_length(&self) -> usize {
        self.u_tau_site.len()
    }

    pub fn validate(&self, layout: &ModeLayout) -> Result<()> {
        let l = layout.chain_length();
        if self.u_tau_site.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                found: self.u_tau_site.len(),
            });
        }
        if self.u_upsilon_site.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                found: self.u_upsilon_site.len(),
            });
        }
        let scalars = [
            ("J_tau", self.j_tau),
            ("J_upsilon", self.j_upsilon),
            ("U_cross", self.u_cross),
            ("U_q", self.u_q),
            ("J_q_tau", self.j_q_tau),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.u_tau_site.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("U_tau_site", "entries must be finite"));
        }
        if self.u_upsilon_site.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("U_upsilon_site", "entries must be finite"));
        }
        Ok(())
    }
}

/// Dense real symmetric operator on one sector, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> HermitianOperator<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    /// Wraps a row-major matrix; fails if it is not square or not symmetric
    /// to within `1e-12` relative to its largest entry.
    pub fn from_row_major(dim: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        let op = Self { dim, data };
        let scale = op.data.iter().fold(T::one(), |m, v| m.max(v.abs()));
        if op.hermiticity_defect() > T::lit(1e-12) * scale {
            return Err(Error::param("matrix", "not symmetric"));
        }
        Ok(op)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.dim + col]
    }

    #[inline]
    fn add(&mut self, row: usize, col: usize, v: T) {
        self.data[row * self.dim + col] += v;
    }

    pub fn as_row_major(&self) -> &[T] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.dim).fold(T::zero(), |s, i| s + self.get(i, i))
    }

    /// `max |H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        for (row, out) in self.data.chunks_exact(self.dim).zip(y.iter_mut()) {
            *out = row
                .iter()
                .zip(x)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (&h, &v)| acc + v * h);
        }
        Ok(())
    }

    /// `<x|H|x>`; real for a symmetric operator.
    pub fn expectation(&self, x: &[Complex<T>]) -> Result<T> {
        let mut hx = vec![Complex::new(T::zero(), T::zero()); self.dim];
        self.apply(x, &mut hx)?;
        Ok(x.iter().zip(&hx).fold(T::zero(), |s, (a, b)| s + (a.conj() * b).re))
    }
}

#[inline]
pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Real diagonal operator in the occupation basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator<T> {
    pub values: Vec<T>,
}

impl<T: Real> DiagonalOperator<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![T::zero(); dim],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Qubit lowering operator `c_q` from an `N_τ = n + 1` sector to the
/// `N_τ = n` sector with the same `N_υ`.
///
/// `c_q` permutes hard-core kets, so each source column maps to at most one
/// target row with amplitude 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorCouplingOperator {
    rows: usize,
    targets: Vec<Option<usize>>,
}

impl SectorCouplingOperator {
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.targets.len()
    }

    /// Target row for source column `col`, `None` where the qubit is empty.
    #[inline]
    pub fn target(&self, col: usize) -> Option<usize> {
        self.targets[col]
    }

    /// `y = c_q x`.
    pub fn apply<T: Real>(&self, x: &[Complex<T>], y: &mut [Complex<T>]) -> Result<()> {
        check_dim(self.cols(), x.len())?;
        check_dim(self.rows, y.len())?;
        y.iter_mut()
            .for_each(|v| *v = Complex::new(T::zero(), T::zero()));
        for (col, target) in self.targets.iter().enumerate() {
            if let Some(row) = target {
                y[*row] += x[col];
            }
        }
        Ok(())
    }

    /// `<a| c_q |b>` with `a` in the target sector and `b` in the source sector.
    pub fn matrix_element<T: Real>(&self, a: &[Complex<T>], b: &[Complex<T>]) -> Result<Complex<T>> {
        check_dim(self.rows, a.len())?;
        check_dim(self.cols(), b.len())?;
        Ok(self
            .targets
            .iter()
            .zip(b)
            .filter_map(|(t, &bv)| t.map(|row| a[row].conj() * bv))
            .fold(Complex::new(T::zero(), T::zero()), |s, v| s + v))
    }

    /// Dense `rows × cols` representation, row-major.
    pub fn to_dense<T: Real>(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.rows * self.cols()];
        for (col, t) in self.targets.iter().enumerate() {
            if let Some(row) = t {
                m[row * self.cols() + col] = T::one();
            }
        }
        m
    }
}

/// Builds the Hamiltonian of the coupled system restricted to `basis`.
pub fn build_hamiltonian<T: Real>(
    params: &ModelParams<T>,
    basis: &SectorBasis,
) -> Result<HermitianOperator<T>> {
    let layout = *basis.layout();
    params.validate(&layout)?;
    let l = layout.chain_length();
    let mut h = HermitianOperator::zeros(basis.len());

    for (k, cfg) in basis.configs().iter().enumerate() {
        let Configuration {
            tau_bits,
            upsilon_bits,
        } = *cfg;

        let mut diag = if cfg.qubit_occupied() {
            params.u_q
        } else {
            T::zero()
        };
        for i in 0..l {
            let nt = cfg.occupation(Mode::Tau(i));
            let nu = cfg.occupation(Mode::Upsilon(i));
            if nt {
                diag += params.u_tau_site[i];
            }
            if nu {
                diag += params.u_upsilon_site[i];
            }
            if nt && nu {
                diag += params.u_cross;
            }
        }
        h.add(k, k, diag);

        // Hopping: a bond (a, b) in a register connects k to the config with
        // both bits flipped whenever exactly one of them is occupied. Only
        // the lower triangle is generated here and mirrored, so each bond
        // contributes once per ordered pair of kets.
        let mut hop = |target: Configuration, amp: T| -> Result<()> {
            let j = basis.index_of(&target)?;
            if j < k {
                h.add(k, j, amp);
                h.add(j, k, amp);
            }
            Ok(())
        };

        // qubit (τ bit 0) <-> τ site 0 (τ bit 1)
        if (tau_bits ^ (tau_bits >> 1)) & 1 == 1 && params.j_q_tau != T::zero() {
            hop(Configuration::new(tau_bits ^ 0b11, upsilon_bits), params.j_q_tau)?;
        }
        for i in 0..l.saturating_sub(1) {
            let a = i + 1;
            if ((tau_bits >> a) ^ (tau_bits >> (a + 1))) & 1 == 1 {
                let flip = (1 << a) | (1 << (a + 1));
                hop(Configuration::new(tau_bits ^ flip, upsilon_bits), params.j_tau)?;
            }
            if ((upsilon_bits >> i) ^ (upsilon_bits >> (i + 1))) & 1 == 1 {
                let flip = (1 << i) | (1 << (i + 1));
                hop(Configuration::new(tau_bits, upsilon_bits ^ flip), params.j_upsilon)?;
            }
        }
    }
    Ok(h)
}

/// Draws one disorder realisation: one uniform value per chain site, in
/// ascending site order.
pub fn draw_site_disorder<T: Real, R: Rng + ?Sized>(
    chain_length: usize,
    lo: T,
    hi: T,
    rng: &mut R,
) -> Result<Vec<T>> {
    if !(lo <= hi) {
        return Err(Error::param("disorder_range", "lo must not exceed hi"));
    }
    let width = hi - lo;
    Ok((0..chain_length)
        .map(|_| lo + width * T::lit(rng.gen::<f64>()))
        .collect())
}

/// `Σ_i u_i n_iυ` on `basis` for given per-site values, written into `out`.
pub fn disorder_diagonal_into<T: Real>(
    basis: &SectorBasis,
    site_values: &[T],
    out: &mut DiagonalOperator<T>,
) -> Result<()> {
    check_dim(basis.layout().chain_length(), site_values.len())?;
    check_dim(basis.len(), out.dim())?;
    for (v, cfg) in out.values.iter_mut().zip(basis.configs()) {
        let mut bits = cfg.upsilon_bits;
        let mut s = T::zero();
        while bits != 0 {
            s += site_values[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        *v = s;
    }
    Ok(())
}

/// Fresh random generator `H_random` on `basis`.
pub fn draw_random_diagonal<T: Real, R: Rng + ?Sized>(
    basis: &SectorBasis,
    lo: T,
    hi: T,
    rng: &mut R,
) -> Result<DiagonalOperator<T>> {
    let u = draw_site_disorder(basis.layout().chain_length(), lo, hi, rng)?;
    let mut d = DiagonalOperator::zeros(basis.len());
    disorder_diagonal_into(basis, &u, &mut d)?;
    Ok(d)
}

/// Occupation number of `mode` on every basis ket.
pub fn build_number_operator<T: Real>(
    basis: &SectorBasis,
    mode: Mode,
) -> Result<DiagonalOperator<T>> {
    basis.layout().check_mode(mode)?;
    Ok(DiagonalOperator {
        values: basis
            .configs()
            .iter()
            .map(|c| if c.occupation(mode) { T::one() } else { T::zero() })
            .collect(),
    })
}

/// Qubit lowering operator between two sectors differing by one τ carrier.
pub fn build_qubit_lowering(from: &SectorBasis, to: &SectorBasis) -> Result<SectorCouplingOperator> {
    if from.layout() != to.layout() {
        return Err(Error::IncompatibleSectors("layouts differ".into()));
    }
    if from.n_upsilon() != to.n_upsilon() {
        return Err(Error::IncompatibleSectors(format!(
            "N_upsilon {} vs {}",
            from.n_upsilon(),
            to.n_upsilon()
        )));
    }
    if from.n_tau() != to.n_tau() + 1 {
        return Err(Error::IncompatibleSectors(format!(
            "source N_tau {} must exceed target N_tau {} by one",
            from.n_tau(),
            to.n_tau()
        )));
    }
    let targets = from
        .configs()
        .iter()
        .map(|c| {
            if c.qubit_occupied() {
                to.index_of(&Configuration::new(c.tau_bits & !1, c.upsilon_bits))
                    .map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SectorCouplingOperator {
        rows: to.len(),
        targets,
    })
}
