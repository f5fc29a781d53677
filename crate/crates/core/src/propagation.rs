//! Time evolution: exact spectral propagation under the fixed Hamiltonian,
//! phase multiplication for diagonal generators, and a fixed-step RK4
//! integrator kept as an independent cross-check.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::{check_dim, DiagonalOperator, HermitianOperator};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric
/// operator. Eigenvectors are stored column-major: column `k` is
/// `eigenvectors[k * dim..(k + 1) * dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T> {
    dim: usize,
    eigenvalues: Vec<T>,
    eigenvectors: Vec<T>,
}

impl<T: Real> SpectralDecomposition<T> {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    #[inline]
    pub fn eigenvector(&self, k: usize) -> &[T] {
        &self.eigenvectors[k * self.dim..(k + 1) * self.dim]
    }

    /// `V_ik`.
    #[inline]
    pub fn v(&self, i: usize, k: usize) -> T {
        self.eigenvectors[k * self.dim + i]
    }

    /// `max |V diag(λ) Vᵀ - H|`.
    pub fn reconstruction_error(&self, h: &HermitianOperator<T>) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                let s = (0..n).fold(T::zero(), |s, k| {
                    s + self.v(i, k) * self.eigenvalues[k] * self.v(j, k)
                });
                worst = worst.max((s - h.get(i, j)).abs());
            }
        }
        worst
    }

    /// `max |Vᵀ V - I|`.
    pub fn orthogonality_error(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for a in 0..n {
            for b in 0..n {
                let dot = self
                    .eigenvector(a)
                    .iter()
                    .zip(self.eigenvector(b))
                    .fold(T::zero(), |s, (&x, &y)| s + x * y);
                let target = if a == b { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Expansion coefficients `c = Vᵀ ψ`.
    pub fn to_eigenbasis(&self, psi: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()> {
        check_dim(self.dim, psi.len())?;
        check_dim(self.dim, out.len())?;
        for (k, c) in out.iter_mut().enumerate() {
            *c = self
                .eigenvector(k)
                .iter()
                .zip(psi)
                .fold(Complex::new(T::zero(), T::zero()), |s, (&v, &p)| s + p * v);
        }
        Ok(())
    }

    /// `ψ = V c`.
    pub fn from_eigenbasis(&self, coeffs: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()> {
        check_dim(self.dim, coeffs.len())?;
        check_dim(self.dim, out.len())?;
        out.iter_mut()
            .for_each(|v| *v = Complex::new(T::zero(), T::zero()));
        for (k, &c) in coeffs.iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(self.eigenvector(k)) {
                *o += c * v;
            }
        }
        Ok(())
    }
}

/// Diagonalises a real symmetric operator with cyclic Jacobi rotations.
pub fn decompose<T: Real>(h: &HermitianOperator<T>) -> Result<SpectralDecomposition<T>> {
    let n = h.dim();
    let mut a = h.as_row_major().to_vec();
    // v is row-major during the sweeps; columns are eigenvectors.
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }

    let off_norm = |a: &[T]| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..i {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        s.sqrt()
    };
    let scale = a.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    let floor = T::min_positive_value() * scale;
    let hundred = T::lit(100.0);

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= floor {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                sweeps,
                residual: off.to_f64_lossy(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Negligible against both diagonal entries: drop it.
                let g = hundred * apq.abs();
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = T::zero();
                    a[q * n + p] = T::zero();
                    continue;
                }
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                // exact zero for the annihilated pair
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        a[x * n + x]
            .partial_cmp(&a[y * n + y])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&k| a[k * n + k]).collect();
    let mut eigenvectors = vec![T::zero(); n * n];
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[dst * n + i] = v[i * n + src];
        }
    }
    Ok(SpectralDecomposition {
        dim: n,
        eigenvalues,
        eigenvectors,
    })
}

/// Pure state over one sector (or a block-ordered sum of sectors) with the
/// model time at which it is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    pub amplitudes: Vec<Complex<T>>,
    pub time: T,
}

impl<T: Real> StateVector<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Self {
        Self {
            amplitudes,
            time: T::zero(),
        }
    }

    /// Unit vector on basis index `index`.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); dim];
        amplitudes[index] = Complex::new(T::one(), T::zero());
        Self::new(amplitudes)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |s, a| s + a.norm_sqr())
            .sqrt()
    }

    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        check_dim(self.dim(), other.dim())?;
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }
}

/// `<a|b>`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |s, (x, y)| s + x.conj() * y)
}

/// `e^{-iλt}` for every eigenvalue.
fn phases<T: Real>(eigenvalues: &[T], t: T) -> impl Iterator<Item = Complex<T>> + '_ {
    eigenvalues.iter().map(move |&l| {
        let (s, c) = (l * t).sin_cos();
        Complex::new(c, -s)
    })
}

/// Exact evolution `ψ(t) = V e^{-iλt} Vᵀ ψ`.
pub fn evolve<T: Real>(
    sd: &SpectralDecomposition<T>,
    psi: &StateVector<T>,
    t: T,
) -> Result<StateVector<T>> {
    let mut out = psi.clone();
    evolve_in_place(sd, &mut out, t)?;
    Ok(out)
}

pub fn evolve_in_place<T: Real>(
    sd: &SpectralDecomposition<T>,
    psi: &mut StateVector<T>,
    t: T,
) -> Result<()> {
    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); sd.dim()];
    sd.to_eigenbasis(&psi.amplitudes, &mut coeffs)?;
    coeffs
        .iter_mut()
        .zip(phases(sd.eigenvalues(), t))
        .for_each(|(c, p)| *c *= p);
    sd.from_eigenbasis(&coeffs, &mut psi.amplitudes)?;
    psi.time += t;
    Ok(())
}

/// Multiplies amplitude `k` by `e^{-i D_k t}`. The caller decides how far
/// the time stamp advances (`advance`).
pub fn apply_diagonal_phase<T: Real>(
    d: &DiagonalOperator<T>,
    psi: &mut StateVector<T>,
    t: T,
    advance: T,
) -> Result<()> {
    apply_phase_slice(d, &mut psi.amplitudes, t)?;
    psi.time += advance;
    Ok(())
}

pub(crate) fn apply_phase_slice<T: Real>(
    d: &DiagonalOperator<T>,
    amps: &mut [Complex<T>],
    t: T,
) -> Result<()> {
    check_dim(d.dim(), amps.len())?;
    for (a, &dk) in amps.iter_mut().zip(&d.values) {
        let (s, c) = (dk * t).sin_cos();
        *a *= Complex::new(c, -s);
    }
    Ok(())
}

/// Dense `U(t) = V e^{-iλt} Vᵀ` for repeated application with a fixed step.
///
/// Stored column-major with split real and imaginary parts so the
/// matrix-vector product runs as a sequence of vectorisable axpy updates.
#[derive(Debug, Clone)]
pub struct Propagator<T> {
    dim: usize,
    step: T,
    re: Vec<T>,
    im: Vec<T>,
}

impl<T: Real> Propagator<T> {
    pub fn new(sd: &SpectralDecomposition<T>, step: T) -> Self {
        let n = sd.dim();
        let ph: Vec<Complex<T>> = phases(sd.eigenvalues(), step).collect();
        let mut re = vec![T::zero(); n * n];
        let mut im = vec![T::zero(); n * n];
        for j in 0..n {
            for i in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (k, p) in ph.iter().enumerate() {
                    acc += *p * (sd.v(i, k) * sd.v(j, k));
                }
                re[j * n + i] = acc.re;
                im[j * n + i] = acc.im;
            }
        }
        Self { dim: n, step, re, im }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn step(&self) -> T {
        self.step
    }

    /// Applies `U` to split re/im vectors `(xr, xi)`, writing into `(yr, yi)`.
    pub fn apply_split(&self, xr: &[T], xi: &[T], yr: &mut [T], yi: &mut [T]) {
        let n = self.dim;
        debug_assert!(xr.len() == n && xi.len() == n && yr.len() == n && yi.len() == n);
        yr.iter_mut().for_each(|v| *v = T::zero());
        yi.iter_mut().for_each(|v| *v = T::zero());
        for j in 0..n {
            let (a, b) = (xr[j], xi[j]);
            let ur = &self.re[j * n..(j + 1) * n];
            let ui = &self.im[j * n..(j + 1) * n];
            for (((yr, yi), &ur), &ui) in yr.iter_mut().zip(yi.iter_mut()).zip(ur).zip(ui) {
                *yr += ur * a - ui * b;
                *yi += ur * b + ui * a;
            }
        }
    }

    /// Applies `U` to a state, advancing its time stamp by the step.
    pub fn apply(&self, psi: &mut StateVector<T>) -> Result<()> {
        check_dim(self.dim, psi.dim())?;
        let xr: Vec<T> = psi.amplitudes.iter().map(|a| a.re).collect();
        let xi: Vec<T> = psi.amplitudes.iter().map(|a| a.im).collect();
        let mut yr = vec![T::zero(); self.dim];
        let mut yi = vec![T::zero(); self.dim];
        self.apply_split(&xr, &xi, &mut yr, &mut yi);
        for ((a, r), i) in psi.amplitudes.iter_mut().zip(yr).zip(yi) {
            *a = Complex::new(r, i);
        }
        psi.time += self.step;
        Ok(())
    }
}

/// Fixed-step classical RK4 for `i dψ/dt = Hψ`. No renormalisation: norm
/// drift is left visible. Accurate when `‖H‖·dt ≤ 0.05`.
pub fn integrate_reference<T: Real>(
    h: &HermitianOperator<T>,
    psi: &StateVector<T>,
    t: T,
    dt: T,
) -> Result<StateVector<T>> {
    check_dim(h.dim(), psi.dim())?;
    if !(dt > T::zero()) {
        return Err(Error::param("dt", "must be positive"));
    }
    let mut out = psi.clone();
    if t == T::zero() {
        return Ok(out);
    }
    let steps = (t.abs() / dt).ceil().to_usize().unwrap_or(1).max(1);
    let h_step = t / T::from_count(steps);
    let n = h.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let minus_i = Complex::new(T::zero(), -T::one());
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut tmp = vec![zero; n];

    let deriv = |x: &[Complex<T>], out: &mut [Complex<T>]| -> Result<()> {
        h.apply(x, out)?;
        out.iter_mut().for_each(|v| *v = *v * minus_i);
        Ok(())
    };
    let half = T::lit(0.5) * h_step;
    let sixth = h_step / T::lit(6.0);
    let two = T::lit(2.0);
    let y = &mut out.amplitudes;
    for _ in 0..steps {
        deriv(y, &mut k1)?;
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * half;
        }
        deriv(&tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + k2[i] * half;
        }
        deriv(&tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + k3[i] * h_step;
        }
        deriv(&tmp, &mut k4)?;
        for i in 0..n {
            y[i] += (k1[i] + k2[i] * two + k3[i] * two + k4[i]) * sixth;
        }
    }
    out.time += t;
    Ok(out)
}
