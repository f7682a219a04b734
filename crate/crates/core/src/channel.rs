//! Spatial correlation from the fluid-antenna geometry, correlated Rayleigh
//! fading and complex Gaussian noise sampling.

use num_complex::Complex;
use rand::Rng;

use crate::numerics::{j0_raw, sym_eigen, Matrix};
use crate::{Error, Result, Scalar};

/// Spatial correlation matrix together with a square-root factor `A` such
/// that `A A^T` reproduces it after negative-eigenvalue clamping.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix<T> {
    dim: usize,
    entries: Matrix<T>,
    sqrt_factor: Matrix<T>,
    clamped_mass: T,
}

impl<T: Scalar> CorrelationMatrix<T> {
    /// Jakes model: entry (i, j) is `J0(2 pi (i-j) W / (N-1))`.
    pub fn jakes(n_ports: usize, fa_size: T) -> Result<Self> {
        if n_ports < 2 {
            return Err(Error::param("n_ports", "need at least 2 ports"));
        }
        if !(fa_size > T::zero()) || !fa_size.is_finite() {
            return Err(Error::param("fa_size", "must be positive and finite"));
        }
        let two_pi = T::of(std::f64::consts::TAU);
        let scale = fa_size / T::of(n_ports as f64 - 1.0);
        let entries = Matrix::from_fn(n_ports, |i, j| {
            let d = T::of(i as f64 - j as f64);
            j0_raw(two_pi * d * scale)
        });
        Self::from_entries(entries)
    }

    /// Wraps externally supplied entries (any correlation model).
    pub fn from_entries(entries: Matrix<T>) -> Result<Self> {
        let n = entries.dim();
        if n == 0 {
            return Err(Error::param("entries", "empty matrix"));
        }
        for i in 0..n {
            if (entries[(i, i)] - T::one()).abs() > T::of(1e-9) {
                return Err(Error::param("entries", "diagonal must be 1"));
            }
            for j in 0..n {
                if (entries[(i, j)] - entries[(j, i)]).abs() > T::of(1e-9) {
                    return Err(Error::param("entries", "matrix must be symmetric"));
                }
            }
        }
        let (eig, v) = sym_eigen(&entries);
        let mut clamped_mass = T::zero();
        let roots: Vec<T> = eig
            .iter()
            .map(|&l| {
                if l < T::zero() {
                    clamped_mass += -l;
                    T::zero()
                } else {
                    l.sqrt()
                }
            })
            .collect();
        // symmetric square root V diag(sqrt(l+)) V^T
        let sqrt_factor = Matrix::from_fn(n, |i, j| {
            (0..n).map(|k| v[(i, k)] * roots[k] * v[(j, k)]).sum()
        });
        Ok(Self {
            dim: n,
            entries,
            sqrt_factor,
            clamped_mass,
        })
    }

    /// Identity correlation (independent ports), mostly for tests and the
    /// degenerate single-port configuration.
    pub fn identity(n: usize) -> Self {
        Self {
            dim: n,
            entries: Matrix::identity(n),
            sqrt_factor: Matrix::identity(n),
            clamped_mass: T::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn sqrt_factor(&self) -> &Matrix<T> {
        &self.sqrt_factor
    }

    /// Total magnitude of clamped negative eigenvalues.
    pub fn clamped_mass(&self) -> T {
        self.clamped_mass
    }

    /// Sole non-zero eigenvalue of `delta delta^H R` (rank-one trace identity).
    pub fn rank_one_eigenvalue(&self, delta: &[Complex<T>]) -> Result<T> {
        crate::numerics::rank_one_eigenvalue(delta, &self.entries)
    }

    /// Quadratic form for a difference vector with at most two non-zeros,
    /// the only shape that occurs for IM symbol pairs.
    #[inline]
    pub(crate) fn mu_two_sparse(
        &self,
        (i, di): (usize, Complex<T>),
        other: Option<(usize, Complex<T>)>,
    ) -> T {
        match other {
            None => di.norm_sqr(),
            Some((j, dj)) => {
                di.norm_sqr()
                    + dj.norm_sqr()
                    + T::of(2.0) * self.entries[(i, j)] * (di.conj() * dj).re
            }
        }
    }
}

/// One realization of the 1 x N fading row vector.
#[derive(Debug, Clone)]
pub struct FadingSample<T> {
    coefficients: Vec<Complex<T>>,
    sigma_h_sq: T,
}

impl<T: Scalar> FadingSample<T> {
    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    #[inline]
    pub fn coeff(&self, port: usize) -> Complex<T> {
        self.coefficients[port]
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn sigma_h_sq(&self) -> T {
        self.sigma_h_sq
    }

    pub fn from_coefficients(coefficients: Vec<Complex<T>>, sigma_h_sq: T) -> Self {
        Self {
            coefficients,
            sigma_h_sq,
        }
    }
}

/// One standard-normal pair via Box-Muller.
#[inline]
pub(crate) fn standard_normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = rng.gen();
    let u1 = (1.0 - u1).max(f64::MIN_POSITIVE);
    let r = (-2.0 * u1.ln()).sqrt();
    let t = std::f64::consts::TAU * rng.gen::<f64>();
    (r * t.cos(), r * t.sin())
}

/// Unit-variance circular complex Gaussian (`E|z|^2 = 1`).
#[inline]
pub(crate) fn complex_normal_unit<T: Scalar, R: Rng>(rng: &mut R) -> Complex<T> {
    let (x, y) = standard_normal_pair(rng);
    Complex::new(
        T::of(x * std::f64::consts::FRAC_1_SQRT_2),
        T::of(y * std::f64::consts::FRAC_1_SQRT_2),
    )
}

/// Draws `h = h_tilde A` with i.i.d. `CN(0, sigma_h_sq)` entries in `h_tilde`.
pub fn sample_channel<T: Scalar, R: Rng>(
    corr: &CorrelationMatrix<T>,
    sigma_h_sq: T,
    rng: &mut R,
) -> FadingSample<T> {
    let n = corr.dim();
    let s = sigma_h_sq.sqrt();
    let tilde: Vec<Complex<T>> = (0..n)
        .map(|_| complex_normal_unit::<T, R>(rng) * s)
        .collect();
    let a = corr.sqrt_factor();
    let coefficients = (0..n)
        .map(|j| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (i, &t) in tilde.iter().enumerate() {
                acc += t * a[(i, j)];
            }
            acc
        })
        .collect();
    FadingSample {
        coefficients,
        sigma_h_sq,
    }
}

/// Complex AWGN sample with variance `noise_var` per real dimension, i.e.
/// `E|w|^2 = 2 noise_var`.
#[inline]
pub fn sample_noise<T: Scalar, R: Rng>(noise_var: T, rng: &mut R) -> Complex<T> {
    let (x, y) = standard_normal_pair(rng);
    let s = noise_var.sqrt();
    Complex::new(T::of(x) * s, T::of(y) * s)
}
